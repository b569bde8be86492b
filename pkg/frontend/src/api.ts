/** Thin typed client for the scoring service HTTP API. */

import { CaseManifest, LeaderboardEntry, RaterResult } from './types.js';

export class ApiError extends Error {
  constructor(
    message: string,
    public status: number,
    public field: string | null = null,
  ) {
    super(message);
  }
}

async function raise(response: Response): Promise<never> {
  let message = `${response.status}`;
  let field: string | null = null;
  try {
    const body = await response.json();
    message = body.error ?? message;
    field = body.field ?? null;
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(message, response.status, field);
}

export class ApiClient {
  constructor(
    private base: string = '',
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.base + path);
    if (!response.ok) await raise(response);
    return response.json() as Promise<T>;
  }

  listCases(): Promise<CaseManifest[]> {
    return this.getJson('/api/cases');
  }

  getCase(caseId: string): Promise<CaseManifest> {
    return this.getJson(`/api/cases/${encodeURIComponent(caseId)}`);
  }

  tileUrl(caseId: string, stain: string, z: number, x: number, y: number): string {
    return `${this.base}/api/cases/${encodeURIComponent(caseId)}/${stain}/tiles/${z}/${x}/${y}.png`;
  }

  async postScore(
    caseId: string,
    rater: string,
    score: string,
    pcms: number,
    confidence: number,
  ): Promise<{ status: string; timestamp: number }> {
    const response = await this.fetchFn(`${this.base}/api/cases/${encodeURIComponent(caseId)}/score`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ rater, score, pcms, confidence }),
    });
    if (!response.ok) await raise(response);
    return response.json();
  }

  getResult(rater: string): Promise<RaterResult> {
    return this.getJson(`/api/raters/${encodeURIComponent(rater)}/result`);
  }

  getLeaderboard(): Promise<{ criterion: string; entries: LeaderboardEntry[] }> {
    return this.getJson('/api/leaderboard');
  }

  sessionClosed(): Promise<{ closed: boolean }> {
    return this.getJson('/api/session');
  }

  async closeSession(): Promise<void> {
    const response = await this.fetchFn(`${this.base}/api/session/close`, { method: 'POST' });
    if (!response.ok) await raise(response);
  }
}
