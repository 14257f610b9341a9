import json

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from conftest import make_table
from oracles import exhaustive_topk
from tabintent.conditions import is_executable
from tabintent.embeddings import HashedNGramEmbedder
from tabintent.errors import IndexOutOfRange, NoNumericField
from tabintent.model import ModelConfig, TrainedModel, init_params
from tabintent.records import (
    ChartType, DataFocusCF as D, OperationCF as O, Param, SemanticsLabel, UserIntentCF as U, UserIntentChart,
)
from tabintent.recommend import (
    CFRecommendation,
    ChartRecommendation,
    accepts,
    decode_cf,
    explain_text,
    rank_decoded,
    recommend_cf,
    recommend_chart,
    to_jsonl,
)
from tabintent.semantics import X_TYPES_BY_CHART, Candidate
from tabintent.table import FieldType

CFG = ModelConfig(D=8, layers=1, heads=2, e=8)


def _model(mode="cf", seed=0, scale=2.0, **kw):
    cfg = ModelConfig(D=8, layers=1, heads=2, e=8, **kw)
    return TrainedModel(mode, cfg, init_params(cfg, mode, seed=seed, head_scale=scale))


def _key(r):
    s, op, params = r
    return (-s, op.order, tuple(p.sort_key() for p in params))


FIELDS = [
    ["12", "#REF!", "30", "", "7", "30", "n/a", "45"],
    ["70", "74", "82", "80", "72", "78", "90", "61"],
    ["x", "y", "x", "z", "y", "x", "", "#N/A"],
]


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("values", FIELDS)
def test_topk_matches_exhaustive_search(seed, values, cfg):
    m = _model(seed=seed)
    t = make_table([values], ["Score"])
    prov = HashedNGramEmbedder(8)
    dec = decode_cf(m, t, 0, cfg, prov)
    got = rank_decoded(dec, t, 0, 5)
    want = exhaustive_topk(dec.op_probs, dec.pools, dec.arity, t.fields[0], 5, is_executable, _key)
    assert [(r.operation, r.params) for r in got] == [(op, p) for _, op, p in want]
    assert [r.score for r in got] == pytest.approx([s for s, _, _ in want], rel=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_recommendations_are_ordered_and_executable(seed, cfg):
    t = make_table([FIELDS[0], FIELDS[1]], ["A", "B"])
    m = _model(seed=seed)
    for fi in range(2):
        recs = recommend_cf(m, t, fi, k=4, settings=cfg, provider=HashedNGramEmbedder(8))
        assert len(recs) <= 4
        assert all(a.score >= b.score for a, b in zip(recs, recs[1:]))
        for r in recs:
            assert is_executable(r.operation, list(r.params), t.fields[fi])
            assert 0 <= r.score <= 1
        # operations come from the decoded semantics only
        dec = decode_cf(m, t, fi, cfg, HashedNGramEmbedder(8))
        assert {r.operation for r in recs} <= set(dec.op_probs)


def test_no_semantics_ablation_has_no_semantics(cfg):
    from tabintent.model import Ablation

    m = _model(ablation=Ablation(no_semantics=True))
    t = make_table([FIELDS[1]], ["B"])
    dec = decode_cf(m, t, 0, cfg, HashedNGramEmbedder(8))
    assert dec.semantics is None
    # every numeric-capable operation is allowed
    assert O.TopBottomK in dec.op_probs and O.Between in dec.op_probs
    recs = recommend_cf(m, t, 0, k=3, settings=cfg, provider=HashedNGramEmbedder(8))
    assert all(r.semantics is None for r in recs)


def test_pruning_never_drops_an_executable_better_combo(cfg):
    # brute force over larger k on a wide pool; search must agree everywhere
    vals = [str(v) for v in [5, 17, 23, 38, 41, 56, 60, 72, 88, 93, 100, 12]]
    t = make_table([vals], ["V"])
    for seed in range(3):
        dec = decode_cf(_model(seed=seed, multi_arity=3), t, 0, cfg, HashedNGramEmbedder(8), multi_arity=3)
        for k in (1, 3, 10):
            got = rank_decoded(dec, t, 0, k)
            want = exhaustive_topk(dec.op_probs, dec.pools, dec.arity, t.fields[0], k, is_executable, _key)
            assert [r.score for r in got] == pytest.approx([s for s, _, _ in want], rel=1e-12)


def test_accepts_rules():
    assert accepts(O.IsError, Candidate(Param.text("#REF!"), "error"))
    assert not accepts(O.IsError, Candidate(Param.text("x"), "cell"))
    assert accepts(O.TopBottomK, Candidate(Param.number(3), "k"))
    assert not accepts(O.Between, Candidate(Param.number(3), "k"))
    assert not accepts(O.Between, Candidate(Param.text("a"), "cell"))
    assert accepts(O.EqualContains, Candidate(Param.text("a"), "cell"))
    assert not accepts(O.IsDuplicate, Candidate(Param.text("a"), "cell"))


def test_field_index_checked(cfg):
    with pytest.raises(IndexOutOfRange):
        recommend_cf(_model(), make_table([["1", "2"]]), 3, settings=cfg)


def _rec(op, params, intent=U.Det, focuses=(D.Rak,)):
    return CFRecommendation(op, [(p, "cell") for p in params], 0.5, SemanticsLabel(frozenset({intent}), frozenset(focuses)))


def test_explanation_templates():
    assert explain_text(_rec(O.TopBottomK, [Param.number(3)])) == \
        "Detect rank-aware values: highlight the top 3 records of this numeric field"
    assert explain_text(_rec(O.IsError, [Param.text("#REF!")], focuses=(D.Err,))) == \
        "Detect error cells: highlight the error cells (#REF!) of this field"
    assert explain_text(_rec(O.Between, [Param.number(10), Param.number(20.5)], U.Com, (D.Rag,))).startswith(
        "Compare range-aware values: highlight values between 10 and 20.5")
    r = CFRecommendation(O.IsBlank, [], 0.4, None)
    assert explain_text(r) == "Highlight the blank cells of this field"
    ttr = SemanticsLabel(frozenset({UserIntentChart.Ttr}), frozenset())
    c = ChartRecommendation(ChartType.Line, [0], [1], 0.8, ttr, "t", ["Month", "Sales"])
    assert explain_text(c) == 'Show the time trend of "Sales" over "Month" with a line chart'
    c = ChartRecommendation(ChartType.Pie, [], [1], 0.8, None, "t", ["Item", "Share"])
    assert explain_text(c) == 'Show the composition of "Share" with a pie chart'
    c = ChartRecommendation(ChartType.Bar, [0], [1, 2], 0.8, None, "t", ["Item", "Q1", "Q2"])
    assert explain_text(c) == 'Compare "Q1" and "Q2" across "Item" with a bar chart'


def test_jsonl_round_trip():
    recs = [_rec(O.TopBottomK, [Param.number(3)]), _rec(O.EqualContains, [Param.text("n/a")], focuses=(D.Mea,))]
    lines = to_jsonl(recs, explain=True).splitlines()
    assert len(lines) == 2
    docs = [json.loads(s) for s in lines]
    assert docs[0]["operation"] == "TopBottomK" and docs[0]["parameters"][0]["source"] == "cell"
    assert docs[1]["explanation"].startswith("Detect meaningless values")
    assert "explanation" not in json.loads(to_jsonl(recs)[: to_jsonl(recs).index("\n")])


CHART_TABLE = [["2021-01", "2021-02", "2021-03", "2021-04"], ["a", "b", "c", "d"], ["3", "5", "8", "2"], ["1.5", "2", "7", "9"]]


@pytest.mark.parametrize("seed", range(5))
def test_chart_axes_respect_type_rules(seed, cfg):
    t = make_table(CHART_TABLE, ["Month", "Item", "Units", "Price"])
    recs = recommend_chart(_model("chart", seed=seed), t, k=4, settings=cfg, provider=HashedNGramEmbedder(8))
    assert len(recs) == 4
    assert all(a.score >= b.score for a, b in zip(recs, recs[1:]))
    for r in recs:
        allowed = X_TYPES_BY_CHART[r.chart_type]
        if r.chart_type is ChartType.Pie:
            assert r.x_fields == []
        else:
            assert len(r.x_fields) == 1 and t.fields[r.x_fields[0]].ftype in allowed
        assert r.y_fields and all(t.fields[i].ftype is FieldType.NUMERIC for i in r.y_fields)
        assert not set(r.x_fields) & set(r.y_fields)


def test_chart_needs_numeric_field(cfg):
    t = make_table([["a", "b"], ["c", "d"]], ["P", "Q"])
    with pytest.raises(NoNumericField):
        recommend_chart(_model("chart"), t, settings=cfg, provider=HashedNGramEmbedder(8))


def test_chart_skips_types_without_valid_x(cfg):
    t = make_table([["3", "5", "8"]], ["Units"])
    recs = recommend_chart(_model("chart"), t, k=4, settings=cfg, provider=HashedNGramEmbedder(8))
    assert [r.chart_type for r in recs] == [ChartType.Pie]


@hsettings(max_examples=25)
@given(st.lists(st.integers(-50, 120).map(str) | st.sampled_from(["", "#DIV/0!", "n/a", "q"]), min_size=1, max_size=8),
       st.integers(0, 50))
def test_topk_property(values, seed):
    from tabintent.config import default_settings

    cfg = default_settings()
    t = make_table([values], ["F"])
    dec = decode_cf(_model(seed=seed), t, 0, cfg, HashedNGramEmbedder(8))
    got = rank_decoded(dec, t, 0, 3)
    want = exhaustive_topk(dec.op_probs, dec.pools, dec.arity, t.fields[0], 3, is_executable, _key)
    assert [(r.operation, r.params) for r in got] == [(op, p) for _, op, p in want]
    assert np.all(np.diff([r.score for r in got]) <= 0)
