"""Contest evaluation mathematics.

Implements the scoring protocol used by the HER2 contest harness:
clinically weighted agreement points, PCMS bonus tiers, confidence
weighting, per-case combined points, submission totals, leaderboard
ranking with tie-breaks, and the pooled case-by-rater agreement matrix.

All point values live on a half-point lattice (multiples of 0.5), which
binary floats represent exactly, so plain ``float`` arithmetic is exact
for points and bonus totals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .errors import EmptyCollectionError, FormatError, IdentifierError, RangeError


class Her2Score(enum.IntEnum):
    """The four admissible HER2 IHC scores, totally ordered 0 < 1+ < 2+ < 3+."""

    ZERO = 0
    ONE_PLUS = 1
    TWO_PLUS = 2
    THREE_PLUS = 3

    @property
    def label(self) -> str:
        return _SCORE_LABELS[self]

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.label

    @classmethod
    def from_token(cls, token: str) -> "Her2Score":
        """Parse a score token; both "2" and "2+" denote the same score."""
        tok = token.strip()
        if tok in _SCORE_TOKENS:
            return _SCORE_TOKENS[tok]
        raise FormatError(f"unknown score {token!r}", field="score")


_SCORE_LABELS = {
    Her2Score.ZERO: "0",
    Her2Score.ONE_PLUS: "1+",
    Her2Score.TWO_PLUS: "2+",
    Her2Score.THREE_PLUS: "3+",
}

_SCORE_TOKENS = {
    "0": Her2Score.ZERO,
    "1": Her2Score.ONE_PLUS,
    "2": Her2Score.TWO_PLUS,
    "3": Her2Score.THREE_PLUS,
    "1+": Her2Score.ONE_PLUS,
    "2+": Her2Score.TWO_PLUS,
    "3+": Her2Score.THREE_PLUS,
}


class FishStatus(enum.Enum):
    """FISH amplification outcome attached to a ground-truth case."""

    NEGATIVE = "negative"
    POSITIVE = "positive"
    BORDERLINE = "borderline"
    NOT_PERFORMED = "not_performed"

    @property
    def display(self) -> str:
        return _FISH_DISPLAY[self]


_FISH_DISPLAY = {
    FishStatus.NEGATIVE: "Negative",
    FishStatus.POSITIVE: "Positive",
    FishStatus.BORDERLINE: "Borderline amplified",
    FishStatus.NOT_PERFORMED: "N/A",
}


def _check_pcms(pcms: Optional[float], field_name: str) -> None:
    if pcms is not None and not 0.0 <= pcms <= 100.0:
        raise RangeError(f"{field_name} {pcms} outside [0, 100]", field=field_name)


@dataclass(frozen=True)
class GroundTruthRecord:
    """Consensus score for one case.

    ``pcms`` may be ``None`` for cases whose reference PCMS was never
    published (the bundled Man-vs-Machine ground truth); bonus points are
    then reported as not computable rather than guessed.
    """

    case_id: str
    score: Her2Score
    pcms: Optional[float] = None
    fish: FishStatus = FishStatus.NOT_PERFORMED

    def __post_init__(self) -> None:
        _check_pcms(self.pcms, "pcms")


@dataclass(frozen=True)
class Prediction:
    """One submitted call: score, confidence in it, and estimated PCMS."""

    case_id: str
    score: Her2Score
    confidence: float
    pcms: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise RangeError(
                f"confidence {self.confidence} outside [0, 1]", field="confidence"
            )
        _check_pcms(self.pcms, "pcms")


# Agreement points: rows indexed by ground-truth score, columns by the
# predicted score (0, 1+, 2+, 3+).  The asymmetry encodes clinical cost:
# calling a 2+ case negative denies the FISH check, calling 3+ on a
# negative case risks needless toxic treatment.
AGREEMENT_POINTS = (
    (15.0, 15.0, 10.0, 0.0),
    (15.0, 15.0, 10.0, 0.0),
    (2.5, 2.5, 15.0, 5.0),
    (0.0, 0.0, 10.0, 15.0),
)

AGREEMENT_VALUES = frozenset(v for row in AGREEMENT_POINTS for v in row)
BONUS_VALUES = frozenset((0.0, 1.0, 2.5, 3.0, 5.0))

EQ1_MODES = ("corrected", "literal")

RANK_CRITERIA = ("points", "points_plus_bonus", "weighted_confidence", "combined")


def agreement_points(gt: Her2Score, pred: Her2Score) -> float:
    """Clinically weighted concordance points for a predicted call."""
    return AGREEMENT_POINTS[int(gt)][int(pred)]


def bonus_points(gt: GroundTruthRecord, pred: Prediction) -> float:
    """PCMS-accuracy bonus, awarded only when the score call is correct.

    Tiers (PCMS deviation in absolute percentage points):
      GT 0   -> no bonus defined.
      GT 1+  -> 1 point when the reference PCMS is below 3%, otherwise
                3 points for a prediction within +/-2.
      GT 2+/3+ -> 5 points within +/-5, else 2.5 points within +/-10.

    Both records must carry a PCMS value; callers handle absent ones.
    """
    if pred.score != gt.score:
        return 0.0
    if gt.score == Her2Score.ZERO:
        return 0.0
    if gt.pcms is None:
        raise RangeError("bonus requires the reference PCMS", field="pcms")
    if gt.score == Her2Score.ONE_PLUS and gt.pcms < 3.0:
        return 1.0  # flat tier, no deviation check
    if pred.pcms is None:
        raise RangeError("bonus requires the predicted PCMS", field="pcms")
    deviation = abs(pred.pcms - gt.pcms)
    if gt.score == Her2Score.ONE_PLUS:
        return 3.0 if deviation <= 2.0 else 0.0
    if deviation <= 5.0:
        return 5.0
    if deviation <= 10.0:
        return 2.5
    return 0.0


def weighted_confidence(correct: bool, c: float, mode: str = "corrected") -> float:
    """Confidence-modulated credit for one case.

    The printed formula awards (2c - c^2)/2 for a correct call, which
    peaks at 0.5 and contradicts the stated per-case maximum of 1; the
    default "corrected" mode adds 1 to the correct-branch numerator,
    restoring the stated scale while keeping continuity at c = 0.  The
    printed form stays available as ``mode="literal"`` for audit.
    """
    if not 0.0 <= c <= 1.0:
        raise RangeError(f"confidence {c} outside [0, 1]", field="confidence")
    if mode not in EQ1_MODES:
        raise ValueError(f"unknown eq1 mode {mode!r}")
    if correct:
        if mode == "corrected":
            return (1.0 + 2.0 * c - c * c) / 2.0
        return (2.0 * c - c * c) / 2.0
    return (1.0 - c * c) / 2.0


@dataclass(frozen=True)
class EvalOptions:
    """Knobs of the evaluation protocol."""

    eq1_mode: str = "corrected"
    bonus_in_combined: bool = False

    def __post_init__(self) -> None:
        if self.eq1_mode not in EQ1_MODES:
            raise ValueError(f"unknown eq1 mode {self.eq1_mode!r}")


@dataclass(frozen=True)
class CaseEvaluation:
    """All four per-case assessment values."""

    agreement: float
    bonus: float
    weighted_confidence: float
    combined: float
    pcms_missing: bool = False


def evaluate_case(
    gt: GroundTruthRecord, pred: Prediction, options: EvalOptions = EvalOptions()
) -> CaseEvaluation:
    """Score a single prediction against its ground-truth record.

    Combined points default to agreement x weighted confidence; the
    bonus-inclusive product is available via ``options.bonus_in_combined``.
    """
    if gt.case_id != pred.case_id:
        raise IdentifierError(
            f"case id mismatch: ground truth {gt.case_id!r} vs prediction {pred.case_id!r}"
        )
    agreement = agreement_points(gt.score, pred.score)
    try:
        bonus = bonus_points(gt, pred)
        pcms_missing = False
    except RangeError:
        # a PCMS the tier needed is absent: score no bonus, flag the case
        bonus = 0.0
        pcms_missing = True
    w_c = weighted_confidence(pred.score == gt.score, pred.confidence, options.eq1_mode)
    base = agreement + bonus if options.bonus_in_combined else agreement
    return CaseEvaluation(agreement, bonus, w_c, base * w_c, pcms_missing)


@dataclass(frozen=True)
class SubmissionTotals:
    points: float
    bonus: float
    points_plus_bonus: float
    weighted_confidence: float
    combined: float


@dataclass(frozen=True)
class SubmissionResult:
    """Per-case evaluations plus their totals for one submission."""

    team: str
    per_case: Mapping[str, CaseEvaluation]
    totals: SubmissionTotals
    evaluated_case_count: int
    warnings: tuple = ()

    def criterion_value(self, criterion: str) -> float:
        if criterion == "points":
            return self.totals.points
        if criterion == "points_plus_bonus":
            return self.totals.points_plus_bonus
        if criterion == "weighted_confidence":
            return self.totals.weighted_confidence
        if criterion == "combined":
            return self.totals.combined
        raise ValueError(f"unknown ranking criterion {criterion!r}")


def evaluate_submission(
    gt_records: Iterable[GroundTruthRecord],
    team: str,
    predictions: Iterable[Prediction],
    options: EvalOptions = EvalOptions(),
) -> SubmissionResult:
    """Evaluate one submission against a ground-truth set.

    Ground-truth cases without a prediction are skipped (not scored 0)
    and listed in the result warnings; this is what lets raters who
    scored only a subset of cases be totalled over that subset.
    """
    gt_map: dict[str, GroundTruthRecord] = {}
    for rec in gt_records:
        gt_map[rec.case_id] = rec
    seen: set[str] = set()
    per_case: dict[str, CaseEvaluation] = {}
    warnings: list[str] = []
    pcms_missing_cases = 0
    for pred in predictions:
        if pred.case_id in seen:
            raise FormatError(f"duplicate case id {pred.case_id!r} in submission {team!r}")
        seen.add(pred.case_id)
        if pred.case_id not in gt_map:
            raise IdentifierError(
                f"prediction for unknown case {pred.case_id!r} in submission {team!r}"
            )
        evaluation = evaluate_case(gt_map[pred.case_id], pred, options)
        per_case[pred.case_id] = evaluation
        if evaluation.pcms_missing:
            pcms_missing_cases += 1
    skipped = [cid for cid in gt_map if cid not in per_case]
    if skipped:
        warnings.append(
            f"{len(skipped)} ground-truth case(s) had no prediction and were skipped: "
            + ", ".join(skipped[:10])
            + ("..." if len(skipped) > 10 else "")
        )
    if pcms_missing_cases:
        warnings.append(
            f"bonus not computable for {pcms_missing_cases} case(s) with no PCMS value"
        )
    # Per-case order follows the ground-truth file for deterministic output.
    ordered = {cid: per_case[cid] for cid in gt_map if cid in per_case}
    points = sum(e.agreement for e in ordered.values())
    bonus = sum(e.bonus for e in ordered.values())
    totals = SubmissionTotals(
        points=points,
        bonus=bonus,
        points_plus_bonus=points + bonus,
        weighted_confidence=sum(e.weighted_confidence for e in ordered.values()),
        combined=sum(e.combined for e in ordered.values()),
    )
    return SubmissionResult(team, ordered, totals, len(ordered), tuple(warnings))


@dataclass(frozen=True)
class LeaderboardEntry:
    rank: int
    team: str
    value: float
    tiebreak_note: Optional[str] = None


def rank(results: Sequence[SubmissionResult], criterion: str) -> list[LeaderboardEntry]:
    """Rank submissions descending by the chosen criterion.

    Ties on the points criterion are broken by the bonus total (the more
    accurate PCMS wins); residual ties fall back to team name, and every
    member of a tied group carries a note describing the applied rule.
    """
    if criterion not in RANK_CRITERIA:
        raise ValueError(f"unknown ranking criterion {criterion!r}")
    if not results:
        raise EmptyCollectionError("cannot rank an empty result list")

    def sort_key(res: SubmissionResult):
        value = res.criterion_value(criterion)
        bonus = res.totals.bonus if criterion == "points" else 0.0
        return (-value, -bonus, res.team)

    ordered = sorted(results, key=sort_key)
    values = [r.criterion_value(criterion) for r in ordered]
    entries = []
    for i, res in enumerate(ordered):
        tied = values.count(values[i]) > 1
        note = None
        if tied:
            if criterion == "points" and any(
                r.totals.bonus != res.totals.bonus
                for j, r in enumerate(ordered)
                if values[j] == values[i]
            ):
                note = "tie on points broken by bonus"
            else:
                note = "tie broken by team name"
        entries.append(LeaderboardEntry(i + 1, res.team, values[i], note))
    return entries


@dataclass(frozen=True)
class PooledAgreementTable:
    """Case-by-rater score matrix (one row per ground-truth case)."""

    raters: tuple
    rows: tuple  # (case_id, gt_label, fish_display, (pred labels or None...))

    def render_csv(self) -> str:
        lines = ["case_id,ground_truth,fish," + ",".join(self.raters)]
        for case_id, gt_label, fish, preds in self.rows:
            cells = [p if p is not None else "-" for p in preds]
            lines.append(f"{case_id},{gt_label},{fish}," + ",".join(cells))
        return "\n".join(lines) + "\n"


def pooled_agreement_table(
    gt_records: Sequence[GroundTruthRecord],
    submissions: Sequence[tuple],
) -> PooledAgreementTable:
    """Build the pooled matrix: GT score, FISH status, then one column per
    rater with its predicted score (blank where the rater skipped a case).

    ``submissions`` is a sequence of ``(team, {case_id: Her2Score})`` pairs.
    """
    raters = tuple(team for team, _ in submissions)
    rows = []
    for rec in gt_records:
        fish = "-" if rec.fish is FishStatus.NOT_PERFORMED else rec.fish.display
        preds = tuple(
            scores[rec.case_id].label if rec.case_id in scores else None
            for _, scores in submissions
        )
        rows.append((rec.case_id, rec.score.label, fish, preds))
    return PooledAgreementTable(raters, tuple(rows))


def format_points(value: float) -> str:
    """Render points with one decimal only when fractional (15, 2.5)."""
    if value == int(value):
        return str(int(value))
    return f"{value:.1f}"


def format_real(value: float) -> str:
    """Render weighted confidence / combined values with three decimals."""
    return f"{value:.3f}"
