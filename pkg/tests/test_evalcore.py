import math
import random

import pytest

from her2kit.errors import EmptyCollectionError, FormatError, IdentifierError, RangeError
from her2kit.evalcore import (
    AGREEMENT_VALUES,
    EvalOptions,
    FishStatus,
    GroundTruthRecord,
    Her2Score,
    LeaderboardEntry,
    Prediction,
    SubmissionResult,
    agreement_points,
    bonus_points,
    evaluate_case,
    evaluate_submission,
    format_points,
    format_real,
    pooled_agreement_table,
    rank,
    weighted_confidence,
)

SCORES = list(Her2Score)


def gt(case, score, pcms=None, fish=FishStatus.NOT_PERFORMED):
    return GroundTruthRecord(case, score, pcms, fish)


def pred(case, score, c=1.0, pcms=None):
    return Prediction(case, score, c, pcms)


class TestAgreementPoints:
    def test_published_matrix_entries(self):
        assert agreement_points(Her2Score.THREE_PLUS, Her2Score.TWO_PLUS) == 10
        assert agreement_points(Her2Score.TWO_PLUS, Her2Score.ZERO) == 2.5
        assert agreement_points(Her2Score.ZERO, Her2Score.THREE_PLUS) == 0

    def test_diagonal_is_15(self):
        for s in SCORES:
            assert agreement_points(s, s) == 15

    def test_total_function_image(self):
        values = {agreement_points(g, p) for g in SCORES for p in SCORES}
        assert values == {0.0, 2.5, 5.0, 10.0, 15.0}
        assert values == set(AGREEMENT_VALUES)


class TestBonusPoints:
    def test_tier_examples(self):
        assert bonus_points(gt("c", Her2Score.TWO_PLUS, 60), pred("c", Her2Score.TWO_PLUS, 1, 57)) == 5
        assert bonus_points(gt("c", Her2Score.TWO_PLUS, 60), pred("c", Her2Score.TWO_PLUS, 1, 52)) == 2.5
        assert bonus_points(gt("c", Her2Score.THREE_PLUS, 90), pred("c", Her2Score.TWO_PLUS, 1, 90)) == 0
        assert bonus_points(gt("c", Her2Score.ONE_PLUS, 2), pred("c", Her2Score.ONE_PLUS, 1, 1)) == 1

    def test_gt_one_plus_split(self):
        # below 3% reference: flat 1 point; at/above: the +/-2 tier earns 3
        assert bonus_points(gt("c", Her2Score.ONE_PLUS, 2.9), pred("c", Her2Score.ONE_PLUS, 1, 90)) == 1
        assert bonus_points(gt("c", Her2Score.ONE_PLUS, 5), pred("c", Her2Score.ONE_PLUS, 1, 7)) == 3
        assert bonus_points(gt("c", Her2Score.ONE_PLUS, 5), pred("c", Her2Score.ONE_PLUS, 1, 7.5)) == 0

    def test_inclusive_boundaries(self):
        assert bonus_points(gt("c", Her2Score.TWO_PLUS, 50), pred("c", Her2Score.TWO_PLUS, 1, 55)) == 5
        assert bonus_points(gt("c", Her2Score.TWO_PLUS, 50), pred("c", Her2Score.TWO_PLUS, 1, 60)) == 2.5
        assert bonus_points(gt("c", Her2Score.TWO_PLUS, 50), pred("c", Her2Score.TWO_PLUS, 1, 60.5)) == 0

    def test_zero_whenever_scores_differ_exhaustive_grid(self):
        # every PCMS pair, every mismatched score pair
        for g in SCORES:
            for p in SCORES:
                if g == p:
                    continue
                for gp in range(0, 101, 10):
                    for pp in range(0, 101, 10):
                        assert bonus_points(gt("c", g, gp), pred("c", p, 1, pp)) == 0.0


class TestWeightedConfidence:
    def test_paper_anchors(self):
        assert weighted_confidence(True, 1.0, "corrected") == 1.0
        assert weighted_confidence(True, 1.0, "literal") == 0.5
        assert weighted_confidence(False, 1.0, "corrected") == 0.0
        assert weighted_confidence(False, 1.0, "literal") == 0.0
        assert weighted_confidence(False, 0.0, "corrected") == 0.5
        assert weighted_confidence(False, 0.0, "literal") == 0.5

    def test_branches_meet_at_zero_confidence(self):
        assert weighted_confidence(True, 0.0, "corrected") == weighted_confidence(False, 0.0, "corrected") == 0.5

    def test_monotonicity(self):
        cs = [i / 1000 for i in range(1001)]
        for mode in ("corrected", "literal"):
            correct = [weighted_confidence(True, c, mode) for c in cs]
            wrong = [weighted_confidence(False, c, mode) for c in cs]
            assert all(a < b for a, b in zip(correct, correct[1:]))
            assert all(a > b for a, b in zip(wrong, wrong[1:]))

    def test_corrected_spans_unit_interval(self):
        assert weighted_confidence(True, 0.0, "corrected") == 0.5
        assert weighted_confidence(True, 1.0, "corrected") == 1.0
        assert weighted_confidence(False, 1.0, "corrected") == 0.0

    def test_literal_matches_printed_formula(self):
        for i in range(1001):
            c = i / 1000
            assert abs(weighted_confidence(True, c, "literal") - (2 * c - c * c) / 2) <= 1e-12
            assert abs(weighted_confidence(False, c, "literal") - (1 - c * c) / 2) <= 1e-12

    def test_range_error(self):
        with pytest.raises(RangeError):
            weighted_confidence(True, 1.2)
        with pytest.raises(RangeError):
            weighted_confidence(False, -0.1)


class TestEvaluateCase:
    def test_composed_example(self):
        e = evaluate_case(
            gt("7", Her2Score.THREE_PLUS, 90),
            pred("7", Her2Score.THREE_PLUS, 0.9, 88),
        )
        assert e.agreement == 15
        assert e.bonus == 5
        assert abs(e.weighted_confidence - 0.995) < 1e-12
        assert abs(e.combined - 14.925) < 1e-12

    def test_worst_case_annihilates(self):
        e = evaluate_case(gt("1", Her2Score.ZERO, 0), pred("1", Her2Score.THREE_PLUS, 1.0, 100))
        assert (e.agreement, e.bonus, e.weighted_confidence, e.combined) == (0, 0, 0, 0)

    def test_zero_confidence_halves(self):
        e = evaluate_case(gt("1", Her2Score.TWO_PLUS, 40), pred("1", Her2Score.TWO_PLUS, 0.0, 40))
        assert e.agreement == 15 and e.bonus == 5
        assert e.weighted_confidence == 0.5
        assert e.combined == 7.5

    def test_bonus_inclusive_flag(self):
        opts = EvalOptions(bonus_in_combined=True)
        e = evaluate_case(gt("1", Her2Score.TWO_PLUS, 40), pred("1", Her2Score.TWO_PLUS, 0.0, 40), opts)
        assert e.combined == (15 + 5) * 0.5

    def test_case_id_mismatch(self):
        with pytest.raises(IdentifierError):
            evaluate_case(gt("a", Her2Score.ZERO, 0), pred("b", Her2Score.ZERO, 1, 0))

    def test_missing_pcms_flags_case(self):
        e = evaluate_case(gt("1", Her2Score.TWO_PLUS, None), pred("1", Her2Score.TWO_PLUS, 1.0, 40))
        assert e.bonus == 0.0 and e.pcms_missing


def _random_submission(rng, gt_records, team="t"):
    preds = []
    for rec in gt_records:
        if rng.random() < 0.8:
            preds.append(
                Prediction(
                    rec.case_id,
                    rng.choice(SCORES),
                    round(rng.random(), 3),
                    rng.randrange(0, 101),
                )
            )
    return preds


class TestEvaluateSubmission:
    def _gt_records(self, n=12):
        rng = random.Random(7)
        return [
            GroundTruthRecord(str(i), rng.choice(SCORES), rng.randrange(0, 101))
            for i in range(n)
        ]

    def test_empty_prediction_set(self):
        res = evaluate_submission(self._gt_records(), "t", [])
        assert res.evaluated_case_count == 0
        assert res.totals.points == res.totals.bonus == res.totals.combined == 0

    def test_unknown_case_rejected(self):
        with pytest.raises(IdentifierError):
            evaluate_submission(self._gt_records(), "t", [pred("nope", Her2Score.ZERO, 1, 0)])

    def test_duplicate_case_rejected(self):
        records = self._gt_records()
        p = pred(records[0].case_id, Her2Score.ZERO, 1, 0)
        with pytest.raises(FormatError):
            evaluate_submission(records, "t", [p, p])

    def test_skipped_cases_warned_not_scored(self):
        records = self._gt_records(4)
        preds = [Prediction(records[0].case_id, records[0].score, 1.0, records[0].pcms)]
        res = evaluate_submission(records, "t", preds)
        assert res.evaluated_case_count == 1
        assert any("skipped" in w for w in res.warnings)
        assert res.totals.points == 15

    def test_totals_equal_per_case_sums_random(self):
        rng = random.Random(123)
        records = self._gt_records(20)
        for _ in range(25):
            res = evaluate_submission(records, "t", _random_submission(rng, records))
            assert res.totals.points == sum(e.agreement for e in res.per_case.values())
            assert res.totals.bonus == sum(e.bonus for e in res.per_case.values())
            assert res.totals.points_plus_bonus == res.totals.points + res.totals.bonus
            assert math.isclose(
                res.totals.weighted_confidence,
                sum(e.weighted_confidence for e in res.per_case.values()),
            )
            assert math.isclose(
                res.totals.combined, sum(e.combined for e in res.per_case.values())
            )
            assert res.evaluated_case_count <= len(records)

    def test_max_achievable_points(self):
        records = self._gt_records(28)
        preds = [Prediction(r.case_id, r.score, 1.0, r.pcms) for r in records]
        res = evaluate_submission(records, "perfect", preds)
        assert res.totals.points == 15 * len(records) == 420


def _result(team, points, bonus=0.0, wc=0.0, combined=0.0):
    from her2kit.evalcore import SubmissionTotals

    return SubmissionResult(
        team, {}, SubmissionTotals(points, bonus, points + bonus, wc, combined), 0
    )


class TestRank:
    def test_points_tie_broken_by_bonus(self):
        a = _result("alpha", 390, bonus=21)
        b = _result("beta", 390, bonus=26)
        entries = rank([a, b], "points")
        assert entries[0].team == "beta" and entries[0].rank == 1
        assert entries[1].team == "alpha" and entries[1].rank == 2
        assert entries[0].tiebreak_note == "tie on points broken by bonus"

    def test_single_submission(self):
        entries = rank([_result("solo", 100)], "points")
        assert entries == [LeaderboardEntry(1, "solo", 100.0, None)]

    def test_combined_ordering(self):
        rs = [_result(t, 0, combined=v) for t, v in
              [("a", 345.0), ("b", 348.041), ("c", 335.77)]]
        entries = rank(rs, "combined")
        assert [e.value for e in entries] == [348.041, 345.0, 335.77]
        assert [e.rank for e in entries] == [1, 2, 3]

    def test_residual_tie_lexicographic(self):
        entries = rank([_result("zeta", 100, 5), _result("eta", 100, 5)], "points")
        assert [e.team for e in entries] == ["eta", "zeta"]
        assert all(e.tiebreak_note == "tie broken by team name" for e in entries)

    def test_permutation_and_contiguous_ranks(self):
        rng = random.Random(3)
        for _ in range(20):
            rs = [_result(f"team{i}", rng.randrange(0, 60) * 2.5, rng.randrange(0, 10))
                  for i in range(rng.randrange(1, 9))]
            for criterion in ("points", "points_plus_bonus", "weighted_confidence", "combined"):
                entries = rank(rs, criterion)
                assert sorted(e.team for e in entries) == sorted(r.team for r in rs)
                assert [e.rank for e in entries] == list(range(1, len(rs) + 1))
                assert all(
                    entries[i].value >= entries[i + 1].value for i in range(len(entries) - 1)
                )

    def test_empty_input(self):
        with pytest.raises(EmptyCollectionError):
            rank([], "points")


class TestPooledTable:
    def test_partial_coverage_leaves_blanks(self):
        records = [GroundTruthRecord(str(i), Her2Score.TWO_PLUS, 50) for i in range(1, 4)]
        table = pooled_agreement_table(
            records, [("only23", {"2": Her2Score.TWO_PLUS, "3": Her2Score.ZERO})]
        )
        rendered = table.render_csv().splitlines()
        assert rendered[1].endswith(",-")
        assert rendered[2].endswith(",2+")
        assert rendered[3].endswith(",0")

    def test_zero_submissions(self):
        records = [GroundTruthRecord("1", Her2Score.ZERO, 0)]
        table = pooled_agreement_table(records, [])
        assert table.render_csv() == "case_id,ground_truth,fish,\n1,0,-,\n"


class TestFormatting:
    def test_points_formats(self):
        assert format_points(15.0) == "15"
        assert format_points(2.5) == "2.5"
        assert format_points(0.0) == "0"

    def test_real_formats(self):
        assert format_real(14.925) == "14.925"
        assert format_real(23) == "23.000"
