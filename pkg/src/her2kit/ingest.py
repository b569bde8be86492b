"""Parsing and rendering of ground-truth files, submission CSVs, and the
bundled contest fixtures.

File contracts (headers are exact):
  ground truth:  ``case_id,score,fish,pcms``
  submission:    ``case_id,score,confidence,pcms`` (optional trailing
                 ``flag`` column, emitted by the scorer for cases that
                 could not be processed)

Score tokens accept both bare digits and plus-suffixed forms ("2", "2+");
PCMS cells may be empty when the value was never published.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .errors import FormatError, IntegrityError, RangeError
from .evalcore import FishStatus, GroundTruthRecord, Her2Score, Prediction

GROUND_TRUTH_HEADER = ("case_id", "score", "fish", "pcms")
SUBMISSION_HEADER = ("case_id", "score", "confidence", "pcms")

_FISH_TOKENS = {
    "n/a": FishStatus.NOT_PERFORMED,
    "-": FishStatus.NOT_PERFORMED,
    "": FishStatus.NOT_PERFORMED,
    "negative": FishStatus.NEGATIVE,
    "positive": FishStatus.POSITIVE,
    "borderline amplified": FishStatus.BORDERLINE,
    "borderline": FishStatus.BORDERLINE,
}


@dataclass(frozen=True)
class GroundTruthFile:
    rows: tuple
    warnings: tuple = ()

    def by_case(self) -> dict[str, GroundTruthRecord]:
        return {r.case_id: r for r in self.rows}

    def case_ids(self) -> list[str]:
        return [r.case_id for r in self.rows]


@dataclass(frozen=True)
class SubmissionFile:
    team: str
    rows: tuple

    def by_case(self) -> dict[str, Prediction]:
        return {r.case_id: r for r in self.rows}

    def score_map(self) -> dict[str, Her2Score]:
        return {r.case_id: r.score for r in self.rows}

    def restricted(self, case_ids: Iterable[str]) -> "SubmissionFile":
        wanted = set(case_ids)
        return SubmissionFile(self.team, tuple(r for r in self.rows if r.case_id in wanted))


def _as_text(source: Union[str, Path, io.TextIOBase]) -> str:
    if isinstance(source, io.TextIOBase):
        return source.read()
    if isinstance(source, (str, os.PathLike)) and "\n" not in str(source):
        path = Path(source)
        if path.exists():
            return path.read_text(encoding="utf-8")
    if isinstance(source, str):
        return source
    raise FormatError(f"cannot read input {source!r}")


def _read_rows(text: str, expected_header: Sequence[str], allow_flag: bool):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty file: missing header row", line=1) from None
    header = [h.strip() for h in header]
    base = list(expected_header)
    if header != base and not (allow_flag and header == base + ["flag"]):
        raise FormatError(
            f"bad header {','.join(header)!r}; expected {','.join(base)!r}",
            line=1,
            field="header",
        )
    rows = []
    for lineno, raw in enumerate(reader, start=2):
        if not raw or all(not cell.strip() for cell in raw):
            continue
        if len(raw) < len(base):
            raise FormatError(
                f"expected {len(base)} columns, got {len(raw)}", line=lineno, field="row"
            )
        rows.append((lineno, [cell.strip() for cell in raw]))
    return rows


def _parse_pcms(token: str, lineno: int) -> Optional[float]:
    if token == "":
        return None
    token = token.rstrip("%")
    try:
        value = float(token)
    except ValueError:
        raise FormatError(f"bad pcms value {token!r}", line=lineno, field="pcms") from None
    if not 0.0 <= value <= 100.0:
        raise FormatError(f"pcms {value} outside [0, 100]", line=lineno, field="pcms")
    return value


def parse_ground_truth(source: Union[str, Path, io.TextIOBase]) -> GroundTruthFile:
    """Parse a ground-truth CSV; "N/A" FISH maps to not_performed.

    A FISH result on a non-2+ case is legal but unusual, so it produces a
    warning on the returned file rather than an error.
    """
    text = _as_text(source)
    rows = []
    warnings = []
    seen: set[str] = set()
    for lineno, cells in _read_rows(text, GROUND_TRUTH_HEADER, allow_flag=False):
        case_id, score_tok, fish_tok, pcms_tok = cells[:4]
        if case_id in seen:
            raise FormatError(f"duplicate case id {case_id!r}", line=lineno, field="case_id")
        seen.add(case_id)
        try:
            score = Her2Score.from_token(score_tok)
        except FormatError as exc:
            raise FormatError(str(exc), line=lineno, field="score") from None
        fish = _FISH_TOKENS.get(fish_tok.lower())
        if fish is None:
            raise FormatError(f"unknown fish status {fish_tok!r}", line=lineno, field="fish")
        pcms = _parse_pcms(pcms_tok, lineno)
        if fish is not FishStatus.NOT_PERFORMED and score != Her2Score.TWO_PLUS:
            warnings.append(
                f"line {lineno}: case {case_id}: FISH result on a {score.label} case"
            )
        rows.append(GroundTruthRecord(case_id, score, pcms, fish))
    if not rows:
        raise FormatError("ground-truth file has no data rows", line=2)
    return GroundTruthFile(tuple(rows), tuple(warnings))


def parse_submission(source: Union[str, Path, io.TextIOBase], team: str) -> SubmissionFile:
    """Parse a submission CSV into validated predictions."""
    text = _as_text(source)
    rows = []
    seen: set[str] = set()
    for lineno, cells in _read_rows(text, SUBMISSION_HEADER, allow_flag=True):
        case_id, score_tok, conf_tok, pcms_tok = cells[:4]
        if case_id in seen:
            raise FormatError(f"duplicate case id {case_id!r}", line=lineno, field="case_id")
        seen.add(case_id)
        try:
            score = Her2Score.from_token(score_tok)
        except FormatError as exc:
            raise FormatError(str(exc), line=lineno, field="score") from None
        try:
            confidence = float(conf_tok)
        except ValueError:
            raise FormatError(
                f"bad confidence value {conf_tok!r}", line=lineno, field="confidence"
            ) from None
        if not 0.0 <= confidence <= 1.0:
            raise RangeError(
                f"confidence {confidence} outside [0, 1]", line=lineno, field="confidence"
            )
        pcms = _parse_pcms(pcms_tok, lineno)
        rows.append(Prediction(case_id, score, confidence, pcms))
    return SubmissionFile(team, tuple(rows))


def _render_pcms(pcms: Optional[float]) -> str:
    if pcms is None:
        return ""
    if pcms == int(pcms):
        return str(int(pcms))
    return repr(pcms)


def render_ground_truth(gt: GroundTruthFile) -> str:
    lines = [",".join(GROUND_TRUTH_HEADER)]
    for r in gt.rows:
        lines.append(f"{r.case_id},{r.score.label},{r.fish.display},{_render_pcms(r.pcms)}")
    return "\n".join(lines) + "\n"


def render_submission(sub: SubmissionFile) -> str:
    lines = [",".join(SUBMISSION_HEADER)]
    for r in sub.rows:
        conf = repr(r.confidence) if r.confidence != int(r.confidence) else str(r.confidence)
        lines.append(f"{r.case_id},{r.score.label},{conf},{_render_pcms(r.pcms)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Bundled fixtures
# ---------------------------------------------------------------------------

#: (team name, fixture file) in canonical pooled-table column order.
MVM_SUBMISSION_FILES = (
    ("Expert 1", "expert1.csv"),
    ("Expert 2", "expert2.csv"),
    ("Expert 3", "expert3.csv"),
    ("Team Indus", "team_indus.csv"),
    ("VISILAB", "visilab.csv"),
    ("MUCS-1", "mucs1.csv"),
)


@dataclass(frozen=True)
class PublishedTotal:
    team: str
    points: float
    bonus: float


@dataclass(frozen=True)
class Fixtures:
    """The bundled desk-scale reproduction data.

    ``mvm_event_case_ids`` lists the 15-case subset scored by the human
    raters; machine totals are comparable to the published summary only
    over that subset.
    """

    training_gt: GroundTruthFile
    mvm_gt: GroundTruthFile
    mvm_submissions: tuple
    mvm_event_case_ids: tuple
    published_mvm_totals: tuple


def fixture_path(name: str = "") -> Path:
    """Filesystem path of a bundled fixture (HER2KIT_FIXTURES overrides)."""
    override = os.environ.get("HER2KIT_FIXTURES")
    if override:
        root = Path(override)
    else:
        root = Path(str(resources.files("her2kit").joinpath("fixtures")))
    return root / name if name else root


def load_fixtures() -> Fixtures:
    """Load and integrity-check the bundled fixture set."""
    root = fixture_path()
    try:
        training = parse_ground_truth(root / "training_gt.csv")
        mvm = parse_ground_truth(root / "mvm_gt.csv")
        submissions = tuple(
            parse_submission(root / "submissions" / fname, team)
            for team, fname in MVM_SUBMISSION_FILES
        )
        event_cases = tuple(
            line.strip()
            for line in (root / "mvm_event_cases.csv").read_text().splitlines()[1:]
            if line.strip()
        )
        published = []
        for line in (root / "mvm_published_totals.csv").read_text().splitlines()[1:]:
            if not line.strip():
                continue
            team, points, bonus = line.split(",")
            published.append(PublishedTotal(team, float(points), float(bonus)))
    except (OSError, FormatError, RangeError) as exc:
        raise IntegrityError(f"fixture bundle unreadable: {exc}") from exc

    if len(training.rows) != 52:
        raise IntegrityError(f"training ground truth has {len(training.rows)} rows, expected 52")
    if len(mvm.rows) != 28:
        raise IntegrityError(f"man-vs-machine ground truth has {len(mvm.rows)} rows, expected 28")
    if len(event_cases) != 15:
        raise IntegrityError("man-vs-machine event subset must list 15 cases")
    mvm_ids = set(mvm.by_case())
    for sub in submissions:
        missing = set(s.case_id for s in sub.rows) - mvm_ids
        if missing:
            raise IntegrityError(f"submission {sub.team!r} references unknown cases {missing}")
        expected = 15 if sub.team.startswith("Expert") else 28
        if len(sub.rows) != expected:
            raise IntegrityError(
                f"submission {sub.team!r} has {len(sub.rows)} rows, expected {expected}"
            )
    return Fixtures(training, mvm, submissions, event_cases, tuple(published))
