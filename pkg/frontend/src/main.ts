/** Application wiring: case navigation, the scoring form, and results. */

import { ApiClient } from './api.js';
import { showResults } from './results.js';
import { Session } from './session.js';
import { SCORES } from './types.js';
import { CaseViewer } from './viewer.js';

const VIEW = { width: 460, height: 380 };

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

async function boot(): Promise<void> {
  const root = document.getElementById('app') as HTMLElement;
  const api = new ApiClient('');
  const rater = window.localStorage.getItem('her2kit:rater') ?? window.prompt('Rater name?') ?? 'anonymous';
  window.localStorage.setItem('her2kit:rater', rater);
  const session = new Session(api, rater, window.localStorage);
  await session.load();

  const header = el('header');
  const title = el('h1', undefined, 'HER2 scoring session');
  const status = el('span', 'status');
  header.append(title, status);

  const viewerHost = el('div', 'viewer-host');
  const form = el('form', 'score-form');
  const feedback = el('p', 'feedback');
  const resultsHost = el('div', 'results-host');
  root.append(header, viewerHost, form, feedback, resultsHost);

  const scoreSelect = el('select') as HTMLSelectElement;
  scoreSelect.append(new Option('select score', '', true, true));
  (scoreSelect.options[0] as HTMLOptionElement).disabled = true;
  for (const score of SCORES) scoreSelect.append(new Option(score, score));

  const pcmsSlider = el('input') as HTMLInputElement;
  pcmsSlider.type = 'range';
  pcmsSlider.min = '0';
  pcmsSlider.max = '100';
  pcmsSlider.step = '1';
  const pcmsNumber = el('input') as HTMLInputElement;
  pcmsNumber.type = 'number';
  pcmsNumber.min = '0';
  pcmsNumber.max = '100';
  pcmsNumber.step = '1';

  const confSlider = el('input') as HTMLInputElement;
  confSlider.type = 'range';
  confSlider.min = '0';
  confSlider.max = '1';
  confSlider.step = '0.01';
  const confLabel = el('span', 'conf-label');

  const submit = el('button', undefined, 'Submit and next') as HTMLButtonElement;
  submit.type = 'submit';
  const prev = el('button', undefined, 'Previous') as HTMLButtonElement;
  prev.type = 'button';
  const next = el('button', undefined, 'Next') as HTMLButtonElement;
  next.type = 'button';
  const resultsButton = el('button', undefined, 'Results') as HTMLButtonElement;
  resultsButton.type = 'button';

  form.append(
    labelled('HER2 score', scoreSelect),
    labelled('PCMS %', pcmsSlider, pcmsNumber),
    labelled('confidence', confSlider, confLabel),
    prev,
    submit,
    next,
    resultsButton,
  );

  function labelled(text: string, ...controls: HTMLElement[]): HTMLElement {
    const wrap = el('label');
    wrap.append(el('span', 'label-text', text), ...controls);
    return wrap;
  }

  function currentCaseId(): string | null {
    return session.current()?.case_id ?? null;
  }

  function syncForm(): void {
    const manifest = session.current();
    viewerHost.replaceChildren();
    if (!manifest) {
      status.textContent = 'no cases available';
      return;
    }
    viewerHost.appendChild(new CaseViewer(api, manifest, VIEW).element);
    const draft = session.draft(manifest.case_id);
    scoreSelect.value = draft.score ?? '';
    pcmsSlider.value = String(draft.pcms ?? 0);
    pcmsNumber.value = draft.pcms === null ? '' : String(draft.pcms);
    confSlider.value = String(draft.confidence ?? 0.5);
    confLabel.textContent = (draft.confidence ?? 0.5).toFixed(2);
    submit.disabled = !session.canSubmit(manifest.case_id);
    const mark = session.isSubmitted(manifest.case_id) ? ' (submitted)' : '';
    status.textContent = `${rater} - case ${manifest.case_id}${mark} - ${session.index + 1}/${session.cases.length}`;
  }

  function updateDraft(patch: Parameters<Session['updateDraft']>[1]): void {
    const caseId = currentCaseId();
    if (!caseId) return;
    session.updateDraft(caseId, patch);
    submit.disabled = !session.canSubmit(caseId);
  }

  scoreSelect.addEventListener('change', () => updateDraft({ score: scoreSelect.value }));
  pcmsSlider.addEventListener('input', () => {
    pcmsNumber.value = pcmsSlider.value;
    updateDraft({ pcms: Number(pcmsSlider.value) });
  });
  pcmsNumber.addEventListener('input', () => {
    pcmsSlider.value = pcmsNumber.value || '0';
    updateDraft({ pcms: pcmsNumber.value === '' ? null : Number(pcmsNumber.value) });
  });
  confSlider.addEventListener('input', () => {
    confLabel.textContent = Number(confSlider.value).toFixed(2);
    updateDraft({ confidence: Number(confSlider.value) });
  });
  prev.addEventListener('click', () => {
    session.prev();
    syncForm();
  });
  next.addEventListener('click', () => {
    session.next();
    syncForm();
  });

  form.addEventListener('submit', async (ev) => {
    ev.preventDefault();
    const caseId = currentCaseId();
    if (!caseId) return;
    const outcome = await session.submit(caseId);
    feedback.textContent = outcome.ok
      ? `case ${caseId} submitted`
      : `rejected${outcome.field ? ` (${outcome.field})` : ''}: ${outcome.error}`;
    syncForm();
  });

  resultsButton.addEventListener('click', async () => {
    resultsHost.innerHTML = await showResults(api, rater);
  });

  syncForm();
}

boot().catch((err) => {
  const root = document.getElementById('app');
  if (root) root.textContent = `failed to start: ${err}`;
});
