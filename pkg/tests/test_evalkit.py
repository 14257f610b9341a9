import json

import pytest
from hypothesis import given, strategies as st

import eval_fixtures as fx
from tabintent.errors import KeyMismatch
from tabintent.evalkit import (
    NA,
    MatchPolicy,
    cf_match,
    chart_recall_at_k,
    chart_recall_precision,
    metrics_json,
    per_operation_recall,
    recall_at_k_cf,
    semantics_recall,
    text_report,
)
from tabintent.records import ChartType, OperationCF as O, Param


@pytest.mark.parametrize("policy", list(MatchPolicy))
@pytest.mark.parametrize("k", [1, 3])
def test_cf_fixture(policy, k):
    assert recall_at_k_cf(fx.CF_PRED, fx.CF_GOLD, k, policy) == pytest.approx(fx.CF_EXPECTED[policy.value][k])


@pytest.mark.parametrize("op", list(fx.CF_EXPECTED["per_operation"]))
def test_cf_fixture_per_operation(op):
    want = fx.CF_EXPECTED["per_operation"][op]
    got = per_operation_recall(fx.CF_PRED, fx.CF_GOLD, op)
    assert got == want if want == NA else got == pytest.approx(want)


def test_chart_fixture():
    for k, want in fx.CHART_EXPECTED["recall"].items():
        assert chart_recall_at_k(fx.CHART_PRED, fx.CHART_GOLD, k) == pytest.approx(want)
    for ct, want in fx.CHART_EXPECTED["per_type"].items():
        assert chart_recall_precision(fx.CHART_PRED, fx.CHART_GOLD, ct) == want


def test_semantics_fixture():
    for k, want in fx.SEM_EXPECTED.items():
        assert semantics_recall(fx.SEM_PRED, fx.SEM_GOLD, k) == pytest.approx(want)


def test_param_matching_is_a_multiset_with_tolerance():
    g = (O.ColorScale, [Param.number(1.0), Param.number(2.0)])
    assert cf_match((O.ColorScale, [Param.number(2.0), Param.number(1.0 + 1e-12)]), g)
    assert not cf_match((O.ColorScale, [Param.number(1.0), Param.number(1.0)]), g)
    assert not cf_match((O.ColorScale, [Param.number(1.0)]), g)
    assert not cf_match((O.ColorScale, [Param.number(1.0), Param.number(2.001)]), g)
    assert cf_match((O.Between, [Param.number(1.0), Param.number(2.0)]), g, MatchPolicy.parameters_only)
    assert not cf_match((O.ColorScale, [Param.text("1")]), (O.ColorScale, [Param.number(1)]))


def test_na_and_key_checks():
    assert recall_at_k_cf({}, {}, 1) == NA
    assert chart_recall_at_k({}, {}) == NA
    assert semantics_recall({}, {})["overall"] == NA
    with pytest.raises(KeyMismatch):
        recall_at_k_cf({"x": []}, {"y": [(O.IsBlank, [])]}, 1)
    # no prediction at all for a field counts as a miss, not an error
    assert recall_at_k_cf({"x": []}, {"x": [(O.IsBlank, [])]}, 3) == 0.0


def test_reports():
    metrics = {"cf": {"recall": {p.value: {"1": 0.5, "3": NA} for p in MatchPolicy},
                      "per_operation": {"IsBlank": {"R@1": 1.0, "n": 2}}, "semantics": NA},
               "chart": {"per_type": {"Pie": {"R@1": 0.25, "P@1": NA}}, "recall": {"1": 1 / 3}}}
    text = text_report(metrics)
    assert " 50.00" in text and "n/a" in text and " 33.33" in text and "semantics" not in text
    js = metrics_json(metrics)
    assert js == metrics_json(json.loads(js))
    assert json.loads(js)["chart"]["recall"]["1"] == round(1 / 3, 12)


ops = st.sampled_from([O.IsBlank, O.IsError, O.TopBottomK])
item = st.tuples(ops, st.lists(st.integers(0, 3).map(Param.number), max_size=2))
fields = st.dictionaries(st.integers(0, 30), st.tuples(st.lists(item, min_size=1, max_size=2), st.lists(item, max_size=5)),
                         min_size=1)


@given(fields)
def test_recall_monotone_in_k(data):
    gold = {k: v[0] for k, v in data.items()}
    pred = {k: v[1] for k, v in data.items()}
    for policy in MatchPolicy:
        vals = [recall_at_k_cf(pred, gold, k, policy) for k in range(1, 6)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))
        assert all(0 <= v <= 1 for v in vals)
        op_only = recall_at_k_cf(pred, gold, 3, MatchPolicy.operation_only)
        assert recall_at_k_cf(pred, gold, 3) <= op_only


@given(fields, st.randoms(use_true_random=False))
def test_recall_ignores_key_order(data, rnd):
    gold = {k: v[0] for k, v in data.items()}
    pred = {k: v[1] for k, v in data.items()}
    keys = list(gold)
    rnd.shuffle(keys)
    assert recall_at_k_cf({k: pred[k] for k in keys}, {k: gold[k] for k in keys}, 2) == recall_at_k_cf(pred, gold, 2)


@given(fields)
def test_perfect_predictions_score_one(data):
    gold = {k: v[0] for k, v in data.items()}
    assert recall_at_k_cf(gold, gold, 1) == 1.0


def test_chart_ranks_beyond_k_ignored():
    gold = {"t": [(ChartType.Bar, [0], [1])]}
    pred = {"t": [(ChartType.Line, [0], [1])] * 3 + [(ChartType.Bar, [0], [1])]}
    assert chart_recall_at_k(pred, gold, 3) == 0.0 and chart_recall_at_k(pred, gold, 4) == 1.0
