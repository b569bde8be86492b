"""HTTP API backing the Man-vs-Machine scoring UI.

Raters browse tile pyramids, post score/PCMS/confidence events, and (once
the session is closed) retrieve their evaluation next to the machine
methods.  Persistence is an append-only newline-delimited JSON event log:
human-auditable, trivially replayable, no database.  Ground truth is
never exposed over any endpoint while the session is open.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse

from .errors import FormatError
from .evalcore import (
    EvalOptions,
    Her2Score,
    Prediction,
    SubmissionResult,
    evaluate_submission,
    rank,
)
from .ingest import SubmissionFile, parse_ground_truth, parse_submission, render_submission
from .pyramid import load_manifests, tile_path


@dataclass(frozen=True)
class ScoreEvent:
    rater: str
    case_id: str
    score: Her2Score
    pcms: float
    confidence: float
    timestamp: int  # UTC milliseconds

    def to_json(self) -> str:
        return json.dumps(
            {
                "rater": self.rater,
                "case_id": self.case_id,
                "score": self.score.label,
                "pcms": self.pcms,
                "confidence": self.confidence,
                "timestamp": self.timestamp,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "ScoreEvent":
        data = json.loads(line)
        return cls(
            data["rater"],
            data["case_id"],
            Her2Score.from_token(data["score"]),
            float(data["pcms"]),
            float(data["confidence"]),
            int(data["timestamp"]),
        )


class EventStore:
    """Append-only score log; writes are serialized, reads snapshot."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._events: list[ScoreEvent] = []
        self._last_ts = 0
        if self.path.exists():
            for lineno, line in enumerate(self.path.read_text().splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    event = ScoreEvent.from_json(line)
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise FormatError(f"corrupt event log entry: {exc}", line=lineno) from exc
                self._events.append(event)
                self._last_ts = max(self._last_ts, event.timestamp)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")

    def append(self, rater: str, case_id: str, score: Her2Score, pcms: float, confidence: float) -> ScoreEvent:
        with self._lock:
            ts = max(int(time.time() * 1000), self._last_ts)
            event = ScoreEvent(rater, case_id, score, pcms, confidence, ts)
            self._fh.write(event.to_json() + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._events.append(event)
            self._last_ts = ts
            return event

    def snapshot(self) -> list[ScoreEvent]:
        with self._lock:
            return list(self._events)

    def latest_by_rater(self) -> dict[str, dict[str, ScoreEvent]]:
        """Latest event per (rater, case); log order breaks timestamp ties."""
        latest: dict[str, dict[str, ScoreEvent]] = {}
        for event in self.snapshot():
            per_case = latest.setdefault(event.rater, {})
            existing = per_case.get(event.case_id)
            if existing is None or event.timestamp >= existing.timestamp:
                per_case[event.case_id] = event
        return latest

    def raters(self) -> list[str]:
        return sorted(self.latest_by_rater())

    def close(self) -> None:
        self._fh.close()


def events_to_submission(rater: str, events: dict[str, ScoreEvent]) -> SubmissionFile:
    rows = tuple(
        Prediction(case_id, ev.score, ev.confidence, ev.pcms)
        for case_id, ev in sorted(events.items())
    )
    return SubmissionFile(rater, rows)


def export_submissions(store: EventStore, out_dir) -> list[Path]:
    """Write one ingest-format CSV per rater from the latest events."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for rater, events in sorted(store.latest_by_rater().items()):
        sub = events_to_submission(rater, events)
        path = out / f"{rater.replace(' ', '_').replace('/', '_')}.csv"
        path.write_text(render_submission(sub))
        written.append(path)
    return written


@dataclass
class ServiceConfig:
    tile_root: Path
    log_path: Path
    gt_path: Optional[Path] = None
    machines_dir: Optional[Path] = None
    session_closed: bool = False
    options: EvalOptions = field(default_factory=EvalOptions)


def _totals_payload(result: SubmissionResult) -> dict:
    return {
        "team": result.team,
        "evaluated_case_count": result.evaluated_case_count,
        "totals": {
            "points": result.totals.points,
            "bonus": result.totals.bonus,
            "points_plus_bonus": result.totals.points_plus_bonus,
            "weighted_confidence": result.totals.weighted_confidence,
            "combined": result.totals.combined,
        },
        "warnings": list(result.warnings),
    }


def create_app(config: ServiceConfig) -> FastAPI:
    tile_root = Path(config.tile_root)
    if not tile_root.is_dir():
        raise FormatError(f"tile root {tile_root} does not exist")
    manifests = {m.case_id: m for m in load_manifests(tile_root)}
    gt = parse_ground_truth(config.gt_path) if config.gt_path else None
    machines: list[SubmissionFile] = []
    if config.machines_dir:
        for path in sorted(Path(config.machines_dir).glob("*.csv")):
            machines.append(parse_submission(path, path.stem))
    store = EventStore(config.log_path)
    state = {"closed": bool(config.session_closed)}

    app = FastAPI(title="her2kit scoring service")
    app.state.store = store
    app.state.manifests = manifests
    app.state.session = state

    def known_case(case_id: str) -> bool:
        if case_id in manifests:
            return True
        return gt is not None and case_id in gt.by_case()

    def error(status: int, message: str, field_name: Optional[str] = None):
        payload = {"error": message}
        if field_name:
            payload["field"] = field_name
        return JSONResponse(payload, status_code=status)

    def withheld():
        return error(403, "ground truth withheld until the session is closed")

    @app.get("/api/cases")
    def list_cases():
        return [manifests[cid].to_dict() for cid in sorted(manifests)]

    @app.get("/api/cases/{case_id}")
    def get_case(case_id: str):
        if case_id not in manifests:
            return error(404, f"unknown case {case_id!r}")
        return manifests[case_id].to_dict()

    @app.get("/api/cases/{case_id}/{stain}/tiles/{z}/{x}/{y}.png")
    def get_tile(case_id: str, stain: str, z: int, x: int, y: int):
        manifest = manifests.get(case_id)
        if manifest is None or stain not in manifest.stains:
            return error(404, "unknown case or stain")
        if z < 0 or z >= manifest.depth:
            return error(404, "level out of range")
        level = manifest.levels[z]
        if not (0 <= x < level.tiles_x and 0 <= y < level.tiles_y):
            return error(404, "tile coordinates out of range")
        path = tile_path(tile_root, case_id, stain, z, x, y)
        if not path.exists():
            return error(404, "tile missing")
        return FileResponse(
            path,
            media_type="image/png",
            headers={"Cache-Control": "public, max-age=31536000, immutable"},
        )

    @app.post("/api/cases/{case_id}/score")
    async def post_score(case_id: str, request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return error(400, "body must be JSON")
        rater = body.get("rater")
        if not isinstance(rater, str) or not rater.strip():
            return error(400, "rater name required", "rater")
        try:
            score = Her2Score.from_token(str(body.get("score")))
        except FormatError:
            return error(400, f"unknown score {body.get('score')!r}", "score")
        try:
            pcms = float(body.get("pcms"))
        except (TypeError, ValueError):
            return error(400, "pcms must be a number", "pcms")
        if not 0.0 <= pcms <= 100.0:
            return error(400, f"pcms {pcms} outside [0, 100]", "pcms")
        try:
            confidence = float(body.get("confidence"))
        except (TypeError, ValueError):
            return error(400, "confidence must be a number", "confidence")
        if not 0.0 <= confidence <= 1.0:
            return error(400, f"confidence {confidence} outside [0, 1]", "confidence")
        if not known_case(case_id):
            return error(404, f"unknown case {case_id!r}")
        event = store.append(rater.strip(), case_id, score, pcms, confidence)
        return {"status": "ok", "timestamp": event.timestamp}

    @app.get("/api/session")
    def get_session():
        return {"closed": state["closed"]}

    @app.post("/api/session/close")
    def close_session():
        state["closed"] = True
        return {"closed": True}

    def evaluate_rater(rater: str) -> SubmissionResult:
        events = store.latest_by_rater().get(rater, {})
        sub = events_to_submission(rater, events)
        return evaluate_submission(gt.rows, rater, sub.rows, config.options)

    @app.get("/api/raters/{rater}/result")
    def get_result(rater: str):
        if not state["closed"]:
            return withheld()
        if gt is None:
            return error(500, "no ground truth configured")
        result = evaluate_rater(rater)
        payload = _totals_payload(result)
        payload["per_case"] = {
            cid: {
                "agreement": ev.agreement,
                "bonus": ev.bonus,
                "weighted_confidence": ev.weighted_confidence,
                "combined": ev.combined,
            }
            for cid, ev in result.per_case.items()
        }
        # machine methods compared over the same cases the rater scored
        scored = set(result.per_case)
        payload["machines"] = [
            _totals_payload(
                evaluate_submission(
                    gt.rows, sub.team, sub.restricted(scored).rows, config.options
                )
            )
            for sub in machines
        ]
        return payload

    @app.get("/api/leaderboard")
    def leaderboard():
        if not state["closed"]:
            return withheld()
        if gt is None:
            return error(500, "no ground truth configured")
        latest = store.latest_by_rater()
        scored_cases = {cid for events in latest.values() for cid in events}
        results = [
            evaluate_submission(
                gt.rows, rater, events_to_submission(rater, events).rows, config.options
            )
            for rater, events in sorted(latest.items())
        ]
        for sub in machines:
            rows = sub.restricted(scored_cases).rows if scored_cases else sub.rows
            results.append(evaluate_submission(gt.rows, sub.team, rows, config.options))
        if not results:
            return {"criterion": "points_plus_bonus", "entries": []}
        entries = rank(results, "points_plus_bonus")
        return {
            "criterion": "points_plus_bonus",
            "entries": [
                {
                    "rank": e.rank,
                    "team": e.team,
                    "value": e.value,
                    "tiebreak_note": e.tiebreak_note,
                }
                for e in entries
            ],
        }

    return app
