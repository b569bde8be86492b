/** Session state: the ordered case list, per-case draft entries, and
 * submission tracking.
 *
 * Drafts validate the same ranges the server enforces (the server remains
 * authoritative) and survive page reloads through the injected storage.
 * Resubmission is allowed; the service keeps the latest event per case.
 */

import { ApiClient, ApiError } from './api.js';
import { CaseManifest, ScoreDraft, SCORES } from './types.js';

export interface DraftStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class MemoryStorage implements DraftStorage {
  private map = new Map<string, string>();

  getItem(key: string): string | null {
    return this.map.has(key) ? (this.map.get(key) as string) : null;
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }
}

export interface SubmitOutcome {
  ok: boolean;
  error?: string;
  field?: string | null;
}

export function validateDraft(draft: ScoreDraft): string | null {
  if (draft.score === null) return 'select a score';
  if (!SCORES.includes(draft.score)) return 'unknown score';
  if (draft.pcms === null || !Number.isInteger(draft.pcms) || draft.pcms < 0 || draft.pcms > 100) {
    return 'PCMS must be an integer percent in [0, 100]';
  }
  if (draft.confidence === null || draft.confidence < 0 || draft.confidence > 1) {
    return 'confidence must be in [0, 1]';
  }
  return null;
}

const EMPTY_DRAFT: ScoreDraft = { score: null, pcms: null, confidence: null };

export class Session {
  cases: CaseManifest[] = [];
  index = 0;
  private drafts = new Map<string, ScoreDraft>();
  private submitted = new Set<string>();

  constructor(
    private api: ApiClient,
    readonly rater: string,
    private storage: DraftStorage = new MemoryStorage(),
  ) {}

  private storageKey(caseId: string): string {
    return `her2kit:${this.rater}:${caseId}`;
  }

  async load(): Promise<void> {
    this.cases = await this.api.listCases();
    this.index = 0;
    for (const manifest of this.cases) {
      const raw = this.storage.getItem(this.storageKey(manifest.case_id));
      if (raw !== null) {
        this.drafts.set(manifest.case_id, JSON.parse(raw) as ScoreDraft);
      }
    }
  }

  current(): CaseManifest | null {
    return this.cases[this.index] ?? null;
  }

  next(): void {
    if (this.index < this.cases.length - 1) this.index += 1;
  }

  prev(): void {
    if (this.index > 0) this.index -= 1;
  }

  draft(caseId: string): ScoreDraft {
    return this.drafts.get(caseId) ?? { ...EMPTY_DRAFT };
  }

  updateDraft(caseId: string, patch: Partial<ScoreDraft>): ScoreDraft {
    const merged = { ...this.draft(caseId), ...patch };
    this.drafts.set(caseId, merged);
    this.storage.setItem(this.storageKey(caseId), JSON.stringify(merged));
    return merged;
  }

  canSubmit(caseId: string): boolean {
    return validateDraft(this.draft(caseId)) === null;
  }

  isSubmitted(caseId: string): boolean {
    return this.submitted.has(caseId);
  }

  submittedCount(): number {
    return this.submitted.size;
  }

  /** POST the draft; on success mark the case submitted and advance.  On
   * rejection the draft is preserved and the field error surfaced. */
  async submit(caseId: string): Promise<SubmitOutcome> {
    const draft = this.draft(caseId);
    const problem = validateDraft(draft);
    if (problem !== null) return { ok: false, error: problem };
    try {
      await this.api.postScore(
        caseId,
        this.rater,
        draft.score as string,
        draft.pcms as number,
        draft.confidence as number,
      );
    } catch (err) {
      if (err instanceof ApiError) {
        return { ok: false, error: err.message, field: err.field };
      }
      throw err;
    }
    this.submitted.add(caseId);
    this.storage.removeItem(this.storageKey(caseId));
    if (this.current()?.case_id === caseId) this.next();
    return { ok: true };
  }
}
