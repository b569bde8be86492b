"""A complete Man-vs-Machine session against the scoring service.

Builds tile pyramids for a small synthetic cohort, runs the HTTP API
in-process, replays a rater session (with one revision), closes the
session, and fetches the rater's evaluation next to a machine method.

For a real browser session, run the same world through the CLI:

    her2kit synth --per-class 2 --out /tmp/mvm_ds --seed 1
    her2kit pyramid --dataset /tmp/mvm_ds --out /tmp/mvm_tiles
    her2kit serve --tile-root /tmp/mvm_tiles --gt /tmp/mvm_ds/gt.csv \
        --log /tmp/mvm_events.ndjson --ui frontend/dist
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from her2kit.cli import main
from her2kit.service import ServiceConfig, create_app

root = Path(tempfile.mkdtemp(prefix="her2kit_demo_"))
assert main(["synth", "--per-class", "1", "--out", str(root / "ds"), "--seed", "404",
             "--width", "520", "--height", "300", "--cells", "120"]) == 0
assert main(["pyramid", "--dataset", str(root / "ds"), "--out", str(root / "tiles")]) == 0
assert main(["score", "--images", str(root / "ds"), "--method", "charcurve",
             "--roi-size", "260x150", "--out", str(root / "machines" / "charcurve.csv")]) == 0

config = ServiceConfig(
    tile_root=root / "tiles",
    log_path=root / "events.ndjson",
    gt_path=root / "ds" / "gt.csv",
    machines_dir=root / "machines",
)
client = TestClient(create_app(config))

cases = client.get("/api/cases").json()
print(f"session over {len(cases)} cases; "
      f"case_0001 pyramid depth {len(cases[0]['levels'])}, tile size {cases[0]['tile_size']}")

answers = [("case_0001", "0", 0, 0.9), ("case_0002", "1+", 4, 0.7),
           ("case_0003", "3+", 60, 0.5), ("case_0004", "3+", 85, 0.95)]
for case_id, score, pcms, confidence in answers:
    client.post(f"/api/cases/{case_id}/score",
                json={"rater": "demo rater", "score": score, "pcms": pcms,
                      "confidence": confidence})
print("posted 4 scores; revising case_0003 after a second look...")
client.post("/api/cases/case_0003/score",
            json={"rater": "demo rater", "score": "2+", "pcms": 55, "confidence": 0.8})

blocked = client.get("/api/raters/demo rater/result")
print(f"before closing: result endpoint -> {blocked.status_code} ({blocked.json()['error']})")

client.post("/api/session/close")
result = client.get("/api/raters/demo rater/result").json()
print(f"after closing: points {result['totals']['points']}, "
      f"weighted confidence {result['totals']['weighted_confidence']:.3f}")
for machine in result["machines"]:
    print(f"  vs {machine['team']}: points {machine['totals']['points']} "
          f"over the same {machine['evaluated_case_count']} cases")
print(f"event log (replayable): {config.log_path}")
