"""Contest evaluation walkthrough on the bundled fixtures.

Recomputes the Man-vs-Machine summary (agreement points over the 15-case
event subset), shows the per-criterion leaderboards on a toy submission
pair, and renders the pooled case-by-rater agreement matrix.
"""

from her2kit.evalcore import (
    EvalOptions,
    evaluate_case,
    evaluate_submission,
    format_points,
    format_real,
    pooled_agreement_table,
    rank,
)
from her2kit.ingest import load_fixtures

fixtures = load_fixtures()
gt = fixtures.mvm_gt
event = fixtures.mvm_event_case_ids

print("=== Man vs Machine: agreement totals over the 15 event cases ===")
results = []
for sub in fixtures.mvm_submissions:
    res = evaluate_submission(gt.rows, sub.team, sub.restricted(event).rows)
    results.append(res)
published = {p.team: p.points for p in fixtures.published_mvm_totals}
for entry in rank(results, "points"):
    note = ""
    if published.get(entry.team) not in (None, entry.value):
        note = f"  (published {format_points(published[entry.team])}: transposed in print)"
    print(f"  {entry.rank}. {entry.team:12s} {format_points(entry.value):>6}{note}")

print()
print("=== How one case is scored ===")
record = gt.by_case()["13"]
pred = fixtures.mvm_submissions[3].by_case()["13"]  # Team Indus called 2+ on a 1+ case
evaluation = evaluate_case(record, pred, EvalOptions())
print(f"  case 13: truth {record.score}, called {pred.score} at confidence {pred.confidence}")
print(f"  agreement {format_points(evaluation.agreement)}, "
      f"weighted confidence {format_real(evaluation.weighted_confidence)}, "
      f"combined {format_real(evaluation.combined)}")

print()
print("=== Pooled agreement matrix (first five cases) ===")
table = pooled_agreement_table(
    gt.rows, [(s.team, s.score_map()) for s in fixtures.mvm_submissions]
)
for line in table.render_csv().splitlines()[:6]:
    print("  " + line)
print("  ...")
