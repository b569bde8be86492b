/** End-to-end session against the real scoring service.
 *
 * Spawns the Python service over a synthesized tile root and the bundled
 * 28-case ground truth, replays Expert 2's calls through the client
 * session, closes the session, and checks the rendered results view.
 */

import { ChildProcess, execFileSync, spawn } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { showResults, WITHHELD_NOTICE } from '../src/results.js';
import { MemoryStorage, Session } from '../src/session.js';

const PORT = 18432 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

// Expert 2's calls for the 15 man-vs-machine event cases
const EXPERT2: Array<[string, string]> = [
  ['1', '2+'], ['2', '1+'], ['3', '3+'], ['4', '1+'], ['5', '1+'],
  ['6', '3+'], ['7', '3+'], ['8', '2+'], ['9', '3+'], ['10', '3+'],
  ['11', '1+'], ['12', '2+'], ['13', '2+'], ['14', '2+'], ['15', '1+'],
];

let work: string;
let server: ChildProcess | null = null;

async function waitForServer(): Promise<void> {
  for (let i = 0; i < 120; i++) {
    try {
      const response = await fetch(`${BASE}/api/session`);
      if (response.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((resolve) => setTimeout(resolve, 500));
  }
  throw new Error('service did not come up');
}

beforeAll(async () => {
  work = mkdtempSync(join(tmpdir(), 'her2kit-ui-'));
  const gtPath = execFileSync(
    'python3',
    ['-c', "from her2kit.ingest import fixture_path; print(fixture_path('mvm_gt.csv'))"],
    { encoding: 'utf-8' },
  ).trim();
  execFileSync('python3', [
    '-m', 'her2kit', 'pyramid',
    '--gt', gtPath,
    '--out', join(work, 'tiles'),
    '--width', '384', '--height', '256',
  ]);
  server = spawn('python3', [
    '-m', 'her2kit', 'serve',
    '--tile-root', join(work, 'tiles'),
    '--gt', gtPath,
    '--log', join(work, 'events.ndjson'),
    '--port', String(PORT),
  ], { stdio: 'ignore' });
  await waitForServer();
});

afterAll(() => {
  server?.kill();
  rmSync(work, { recursive: true, force: true });
});

describe('man-vs-machine session end to end', () => {
  const api = new ApiClient(BASE);

  it('lists the 28 ground-truth cases with tile pyramids', async () => {
    const cases = await api.listCases();
    expect(cases).toHaveLength(28);
    const first = cases[0];
    const tile = await fetch(api.tileUrl(first.case_id, 'ihc', 0, 0, 0));
    expect(tile.status).toBe(200);
    expect(tile.headers.get('cache-control')).toContain('immutable');
  });

  it('replaying Expert 2 yields a displayed total of 210', async () => {
    const session = new Session(api, 'Expert 2 replay', new MemoryStorage());
    await session.load();
    expect(session.cases.length).toBe(28);

    for (const [caseId, score] of EXPERT2) {
      session.updateDraft(caseId, { score, pcms: 50, confidence: 1.0 });
      const outcome = await session.submit(caseId);
      expect(outcome.ok).toBe(true);
    }
    expect(session.submittedCount()).toBe(15);

    // ground truth stays withheld until the session closes
    const withheld = await showResults(api, 'Expert 2 replay');
    expect(withheld).toContain(WITHHELD_NOTICE);

    await api.closeSession();
    const html = await showResults(api, 'Expert 2 replay');
    expect(html).toContain('<td class="num">210</td>');
    expect(html).toContain('Expert 2 replay (you)');

    const payload = await api.getResult('Expert 2 replay');
    expect(payload.totals.points).toBe(210);
    expect(payload.evaluated_case_count).toBe(15);
    // the rendered view shows exactly the payload's numbers
    expect(html).toContain(`<td class="num">${payload.evaluated_case_count}</td>`);
  });

  it('resubmitting a case makes the result reflect the newer entry', async () => {
    const session = new Session(api, 'Expert 2 replay', new MemoryStorage());
    await session.load();
    // case 5 truth is 1+; downgrade the earlier correct call to 2+prediction
    session.updateDraft('5', { score: '2+', pcms: 50, confidence: 1.0 });
    const outcome = await session.submit('5');
    expect(outcome.ok).toBe(true);
    const payload = await api.getResult('Expert 2 replay');
    expect(payload.totals.points).toBe(205); // 210 - 15 + 10
    const html = await showResults(api, 'Expert 2 replay');
    expect(html).toContain('<td class="num">205</td>');
  });

  it('server-side validation errors surface with the field name', async () => {
    const session = new Session(api, 'strict rater', new MemoryStorage());
    await session.load();
    session.updateDraft('1', { score: '2+', pcms: 50, confidence: 1.0 });
    // bypass the local gate with a raw API call to prove the server gate
    let failed: { field?: string | null } | null = null;
    try {
      await api.postScore('1', 'strict rater', '2+', 400, 1.0);
    } catch (err) {
      failed = err as { field?: string | null };
    }
    expect(failed?.field).toBe('pcms');
  });
});
