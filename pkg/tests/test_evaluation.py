"""Evaluation arithmetic tests.

Dispersion oracles are hand-expanded sums of squares, not calls into the
same statistics helpers the module uses. The audit replays reconstruct
published panel results from integer vote counts at 57 samples.
"""

from __future__ import annotations

import math

import pytest

from cinepipe.evaluation import (
    EvalError,
    aggregate_ratings,
    binary_accuracy,
    format_table,
    read_jsonl,
    round1,
    summarize_llm_audit,
    win_rate,
)


class TestRound1:
    def test_half_rounds_up(self):
        # banker's rounding would give 0.0 and 2.2 here
        assert round1(0.05) == 0.1
        assert round1(0.15) == 0.2
        assert round1(2.25) == 2.3
        assert round1(87.65) == 87.7

    def test_negative_halves_round_away_from_zero(self):
        assert round1(-0.05) == -0.1

    def test_plain_values_untouched(self):
        assert round1(59.649122807) == 59.6
        assert round1(100.0) == 100.0


def rating(method, metric, score, evaluator="e1", item="i1"):
    return {
        "evaluator_id": evaluator,
        "item_id": item,
        "method_id": method,
        "metric_id": metric,
        "score": score,
    }


class TestAggregateRatings:
    def test_equal_scores_have_zero_dispersion(self):
        records = [rating("m", "adherence", 8, evaluator=f"e{i}") for i in range(3)]
        cell = aggregate_ratings(records)[("m", "adherence")]
        assert cell.mean == 8.0
        assert cell.std_sample == 0.0
        assert cell.std_population == 0.0

    def test_single_score(self):
        cell = aggregate_ratings([rating("m", "x", 7)])[("m", "x")]
        assert cell.mean == 7.0
        assert cell.count == 1
        assert cell.std_sample == 0.0

    def test_known_mean_and_spreads(self):
        scores = [8.0, 8.0, 8.0, 7.0, 7.0]
        records = [rating("m", "x", s, evaluator=f"e{i}") for i, s in enumerate(scores)]
        cell = aggregate_ratings(records)[("m", "x")]
        assert cell.mean == pytest.approx(7.6)
        # SS = 3 * 0.4^2 + 2 * 0.6^2 = 1.2
        assert cell.std_sample == pytest.approx(math.sqrt(1.2 / 4))
        assert cell.std_population == pytest.approx(math.sqrt(1.2 / 5))

    def test_target_cell_means(self):
        # ten evaluators per cell with integer scores hitting the means
        camera = [8] * 6 + [7] * 4
        narration = [8] * 7 + [9] * 3
        records = [
            rating("best", "camera", s, evaluator=f"e{i}")
            for i, s in enumerate(camera)
        ] + [
            rating("best", "narration", s, evaluator=f"e{i}")
            for i, s in enumerate(narration)
        ]
        cells = aggregate_ratings(records)
        assert round1(cells[("best", "camera")].mean) == 7.6
        assert round1(cells[("best", "narration")].mean) == 8.3

    def test_rejects_empty_out_of_scale_and_malformed(self):
        with pytest.raises(EvalError, match="no rating records"):
            aggregate_ratings([])
        with pytest.raises(EvalError, match="outside the 0-10 scale"):
            aggregate_ratings([rating("m", "x", 11)])
        with pytest.raises(EvalError, match="malformed rating record"):
            aggregate_ratings([{"method_id": "m"}])


class TestBinaryAccuracy:
    def test_nine_of_ten(self):
        records = [
            {"item": f"i{k}", "field": "shots", "correct": k > 0} for k in range(10)
        ]
        assert binary_accuracy(records)["shots"].percent == 90.0

    def test_all_correct(self):
        records = [{"item": "i", "field": "f", "correct": True}] * 4
        assert binary_accuracy(records)["f"].percent == 100.0

    def test_published_column_ratios(self):
        records = []
        for name, hits in (("ours", 912), ("alt_a", 362), ("alt_b", 413)):
            records += [
                {"item": f"i{k}", "field": name, "correct": k < hits}
                for k in range(1000)
            ]
        out = binary_accuracy(records)
        assert out["ours"].percent == pytest.approx(91.2)
        assert out["alt_a"].percent == pytest.approx(36.2)
        assert out["alt_b"].percent == pytest.approx(41.3)

    def test_rejects_empty_and_malformed(self):
        with pytest.raises(EvalError, match="no binary records"):
            binary_accuracy([])
        with pytest.raises(EvalError, match="malformed binary record"):
            binary_accuracy([{"item": "i"}])


def ranked(ranking, evaluator="e1", item="i1"):
    return {"evaluator_id": evaluator, "item_id": item, "ranking": ranking}


class TestWinRate:
    def test_single_ranking(self):
        rates = win_rate([ranked(["A", "B", "C"])])
        assert rates == {"A": 100.0, "B": 0.0, "C": 0.0}

    def test_split_first_place(self):
        records = [ranked(["A", "B"], evaluator="e1"), ranked(["B", "A"], evaluator="e2")]
        assert win_rate(records) == {"A": 50.0, "B": 50.0}

    def test_shares_sum_to_one_hundred(self):
        firsts = ["m1"] * 14 + ["m2"] * 7 + ["m3"] * 15 + ["m4"] * 64
        methods = ["m1", "m2", "m3", "m4"]
        records = [
            ranked([w, *[m for m in methods if m != w]], item=f"i{k}")
            for k, w in enumerate(firsts)
        ]
        rates = win_rate(records)
        assert rates == {"m1": 14.0, "m2": 7.0, "m3": 15.0, "m4": 64.0}
        assert sum(rates.values()) == pytest.approx(100.0)

    def test_rejects_non_permutations(self):
        with pytest.raises(EvalError, match="repeats a method"):
            win_rate([ranked(["x", "x"])])
        with pytest.raises(EvalError, match="not a permutation"):
            win_rate([ranked(["x", "y"]), ranked(["x", "z"])])
        with pytest.raises(EvalError, match="has no ranking"):
            win_rate([{"evaluator_id": "e"}])
        with pytest.raises(EvalError, match="no ranking records"):
            win_rate([])


def panel(per_field_hits: dict[str, int], n: int = 57, judge_count: int = 3):
    """Audits where the first ``hits`` samples carry a correct majority."""
    audits = []
    for i in range(n):
        audits.append(
            {
                "per_field": {
                    name: {"accuracy": 1.0 if i < hits else 0.0, "variance": 0.0}
                    for name, hits in per_field_hits.items()
                },
                "judge_count": judge_count,
            }
        )
    return audits


class TestAuditSummary:
    @pytest.mark.parametrize(
        "hits, expected_fields, expected_average",
        [
            ((54, 34, 55, 57), (94.7, 59.6, 96.5, 100.0), 87.7),
            ((49, 23, 50, 9), (86.0, 40.4, 87.7, 15.8), 57.5),
            ((51, 26, 48, 12), (89.5, 45.6, 84.2, 21.1), 60.1),
        ],
    )
    def test_panel_row_replay(self, hits, expected_fields, expected_average):
        names = ["genre", "movement", "shot_count", "dynamicity"]
        summary = summarize_llm_audit(panel(dict(zip(names, hits))))
        by_name = {f.field: f for f in summary.fields}
        for name, expected in zip(names, expected_fields):
            assert round1(by_name[name].percent) == expected
        assert abs(summary.average_percent - expected_average) <= 0.05
        assert round1(summary.average_percent) == expected_average
        assert summary.judge_counts == (3,)

    def test_all_zero_fields_average_zero(self):
        summary = summarize_llm_audit(panel({"a": 0, "b": 0}, n=5))
        assert summary.average_percent == 0.0

    def test_judge_variance_averages_over_samples(self):
        audits = [
            {"per_field": {"f": {"accuracy": 1.0, "variance": 0.0}}, "judge_count": 3},
            {"per_field": {"f": {"accuracy": 1.0, "variance": 0.25}}, "judge_count": 3},
        ]
        summary = summarize_llm_audit(audits)
        assert summary.fields[0].judge_variance == pytest.approx(0.125)

    def test_accepts_attribute_style_audits(self):
        class Audit:
            per_field = {"f": {"accuracy": 1.0, "variance": 0.0}}
            judge_count = 1

        summary = summarize_llm_audit([Audit(), Audit()])
        assert summary.fields[0].percent == 100.0
        assert summary.fields[0].samples == 2

    def test_input_validation(self):
        with pytest.raises(EvalError, match="no audits"):
            summarize_llm_audit([])
        with pytest.raises(EvalError, match="malformed audit"):
            summarize_llm_audit([{"nope": 1}])
        with pytest.raises(EvalError, match="differ from"):
            summarize_llm_audit(
                [
                    {"per_field": {"a": {"accuracy": 1, "variance": 0}}, "judge_count": 1},
                    {"per_field": {"b": {"accuracy": 1, "variance": 0}}, "judge_count": 1},
                ]
            )
        with pytest.raises(EvalError, match=r"outside \[0, 1\]"):
            summarize_llm_audit(
                [{"per_field": {"a": {"accuracy": 1.5, "variance": 0}}, "judge_count": 1}]
            )
        with pytest.raises(EvalError, match="negative variance"):
            summarize_llm_audit(
                [{"per_field": {"a": {"accuracy": 1, "variance": -1}}, "judge_count": 1}]
            )


class TestHelpers:
    def test_read_jsonl(self):
        text = '{"a": 1}\n\n{"b": 2}\n'
        assert read_jsonl(text) == [{"a": 1}, {"b": 2}]

    def test_read_jsonl_errors_carry_line_numbers(self):
        with pytest.raises(EvalError, match="line 2"):
            read_jsonl('{"a": 1}\n{broken\n')
        with pytest.raises(EvalError, match="line 1: expected an object"):
            read_jsonl("[1, 2]\n")

    def test_format_table_alignment(self):
        text = format_table(["name", "v"], [["long-name", "1.0"], ["x", "22.5"]])
        lines = text.splitlines()
        assert lines[0].startswith("name")
        assert set(lines[1]) <= {"-", " "}
        assert lines[2].index("1.0") == lines[3].index("22.5")
