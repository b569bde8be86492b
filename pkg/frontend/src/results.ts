/** End-of-session comparison view.
 *
 * Every number shown comes straight from a service payload; the client
 * never recomputes scores.
 */

import { ApiClient, ApiError } from './api.js';
import { RaterResult, TeamResult } from './types.js';

export const WITHHELD_NOTICE = 'ground truth withheld until the session is closed';

function escapeHtml(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

function points(value: number): string {
  return Number.isInteger(value) ? String(value) : value.toFixed(1);
}

function real3(value: number): string {
  return value.toFixed(3);
}

function totalsRow(result: TeamResult, label?: string): string {
  const t = result.totals;
  return (
    `<tr><td>${escapeHtml(label ?? result.team)}</td>` +
    `<td class="num">${points(t.points)}</td>` +
    `<td class="num">${points(t.bonus)}</td>` +
    `<td class="num">${points(t.points_plus_bonus)}</td>` +
    `<td class="num">${real3(t.weighted_confidence)}</td>` +
    `<td class="num">${real3(t.combined)}</td>` +
    `<td class="num">${result.evaluated_case_count}</td></tr>`
  );
}

export function renderResults(result: RaterResult): string {
  const rows = [totalsRow(result, `${result.team} (you)`)];
  for (const machine of result.machines) rows.push(totalsRow(machine));
  const perCase = Object.entries(result.per_case)
    .map(
      ([caseId, ev]) =>
        `<tr><td>${escapeHtml(caseId)}</td><td class="num">${points(ev.agreement)}</td>` +
        `<td class="num">${points(ev.bonus)}</td>` +
        `<td class="num">${real3(ev.weighted_confidence)}</td>` +
        `<td class="num">${real3(ev.combined)}</td></tr>`,
    )
    .join('');
  const warnings = result.warnings.length
    ? `<p class="warnings">${result.warnings.map(escapeHtml).join('<br>')}</p>`
    : '';
  return (
    `<h2>Results: ${escapeHtml(result.team)}</h2>` +
    '<table class="totals"><thead><tr><th>rater</th><th>points</th><th>bonus</th>' +
    '<th>points + bonus</th><th>weighted confidence</th><th>combined</th><th>cases</th></tr></thead>' +
    `<tbody>${rows.join('')}</tbody></table>` +
    warnings +
    '<h3>Per case</h3>' +
    '<table class="percase"><thead><tr><th>case</th><th>agreement</th><th>bonus</th>' +
    '<th>weighted confidence</th><th>combined</th></tr></thead>' +
    `<tbody>${perCase}</tbody></table>`
  );
}

export function renderWithheldNotice(): string {
  return `<p class="withheld">${WITHHELD_NOTICE}</p>`;
}

/** Fetch and render; a 403 means the session is still open. */
export async function showResults(api: ApiClient, rater: string): Promise<string> {
  try {
    const result = await api.getResult(rater);
    return renderResults(result);
  } catch (err) {
    if (err instanceof ApiError && err.status === 403) {
      return renderWithheldNotice();
    }
    throw err;
  }
}
