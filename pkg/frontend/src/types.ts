/** Wire types mirroring the scoring service JSON. */

export interface PyramidLevel {
  z: number;
  width: number;
  height: number;
  tiles_x: number;
  tiles_y: number;
}

export interface CaseManifest {
  case_id: string;
  stains: string[];
  tile_size: number;
  levels: PyramidLevel[];
}

export interface ScoreDraft {
  score: string | null; // "0" | "1+" | "2+" | "3+"
  pcms: number | null; // integer percent 0..100
  confidence: number | null; // 0..1, two decimals
}

export interface Totals {
  points: number;
  bonus: number;
  points_plus_bonus: number;
  weighted_confidence: number;
  combined: number;
}

export interface TeamResult {
  team: string;
  evaluated_case_count: number;
  totals: Totals;
  warnings: string[];
}

export interface RaterResult extends TeamResult {
  per_case: Record<string, { agreement: number; bonus: number; weighted_confidence: number; combined: number }>;
  machines: TeamResult[];
}

export interface LeaderboardEntry {
  rank: number;
  team: string;
  value: number;
  tiebreak_note: string | null;
}

export const SCORES = ['0', '1+', '2+', '3+'];
