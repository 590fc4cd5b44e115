from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from cinepipe.planner import BalancePlan, balance_report, generate_plan
from cinepipe.taxonomy import TaxonomyError, load_taxonomy

TAX = load_taxonomy()


def test_empty_plan():
    plan = generate_plan(0, TAX, seed=1)
    assert len(plan) == 0
    assert plan.to_jsonl() == ""
    for dim in ("genre", "movement", "dynamicity"):
        assert plan.report[dim]["max_deviation"] == 0


def test_n17_each_movement_once_as_first_shot():
    # oracle: count first-shot labels over the stratified output
    plan = generate_plan(17, TAX, seed=7)
    firsts = Counter(e.movements[0] for e in plan.entries)
    assert set(firsts) == set(TAX.movements)
    assert all(c == 1 for c in firsts.values())


def test_n5000_first_shot_counts_294_or_295():
    # 5000 = 17 * 294 + 2, so the pigeonhole split is exactly {294, 295}
    plan = generate_plan(5000, TAX, seed=3)
    firsts = Counter(e.movements[0] for e in plan.entries)
    assert set(firsts.values()) <= {294, 295}
    assert sorted(firsts.values()).count(295) == 2


def test_balance_report_n26_genres_all_two():
    plan = generate_plan(26, TAX, seed=11)
    rep = balance_report(plan)
    assert all(c == 2 for c in rep["genre"]["counts"].values())
    assert rep["genre"]["max_deviation"] == 0


def test_balance_report_n1_deviation_one():
    plan = generate_plan(1, TAX, seed=5)
    rep = balance_report(plan)
    counts = sorted(rep["genre"]["counts"].values())
    assert counts == [0] * 12 + [1]
    assert rep["genre"]["max_deviation"] == 1


def test_n5000_movement_deviation_at_most_one():
    plan = generate_plan(5000, TAX, seed=3)
    assert plan.report["movement"]["max_deviation"] <= 1


def test_determinism_byte_identical():
    a = generate_plan(200, TAX, seed=42).to_jsonl()
    b = generate_plan(200, TAX, seed=42).to_jsonl()
    assert a.encode() == b.encode()


def test_different_seed_changes_assignment():
    a = generate_plan(100, TAX, seed=1).to_jsonl()
    b = generate_plan(100, TAX, seed=2).to_jsonl()
    assert a != b


def test_negative_n_rejected():
    with pytest.raises(ValueError):
        generate_plan(-1, TAX, seed=0)


def test_jsonl_roundtrip():
    plan = generate_plan(30, TAX, seed=9)
    back = BalancePlan.from_jsonl(plan.to_jsonl(), taxonomy=TAX)
    assert back.entries == plan.entries
    assert back.seed == plan.seed
    assert back.report["genre"]["counts"] == plan.report["genre"]["counts"]


@settings(max_examples=30, deadline=None)
@given(n=st.integers(min_value=0, max_value=400), seed=st.integers(0, 2**31 - 1))
def test_properties_balance_distinctness_closure(n, seed):
    plan = generate_plan(n, TAX, seed=seed)
    assert len(plan.entries) == n
    # every dimension balanced to within one on its marginal
    for dim in ("genre", "shot_count", "movement", "subject_count", "dynamicity"):
        assert plan.report[dim]["max_deviation"] <= 1, dim
        assert sum(plan.report[dim]["counts"].values()) == n
    for e in plan.entries:
        e.validate(TAX)  # closure + distinctness + cardinality


def test_shot_count_exceeding_vocabulary_unsatisfiable():
    # a taxonomy cannot legally have <3 movements (17 required), so exercise
    # the guard directly through a doctored instance
    tax = load_taxonomy()
    object.__setattr__(tax, "movements", tax.movements[:2])
    with pytest.raises(TaxonomyError, match="unsatisfiable"):
        generate_plan(4, tax, seed=0)
