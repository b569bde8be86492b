"""her2kit: HER2 IHC scoring toolkit.

Contest evaluation harness (agreement points, bonus tiers, weighted
confidence, leaderboards) plus the classical automated scoring pipelines
(stain unmixing, characteristics curves, patch boosting, membrane
morphometry), verified at desk scale against bundled fixtures and
synthetic slides.
"""

from .evalcore import (
    EvalOptions,
    FishStatus,
    GroundTruthRecord,
    Her2Score,
    Prediction,
    agreement_points,
    bonus_points,
    evaluate_case,
    evaluate_submission,
    pooled_agreement_table,
    rank,
    weighted_confidence,
)
from .ingest import (
    load_fixtures,
    parse_ground_truth,
    parse_submission,
    render_ground_truth,
    render_submission,
)

__version__ = "0.1.0"
