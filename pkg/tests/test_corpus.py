import gzip
import json

import pytest
from hypothesis import given, strategies as st

from conftest import make_table
from tabintent.corpus import (
    Corpus,
    SchemaKey,
    dedup_and_sample,
    filter_by_coverage,
    merge_records,
    prepare,
    read_corpus,
    write_corpus,
)
from tabintent.errors import DataError
from tabintent.records import AnalysisRecord, ChartType, OperationCF as O, Param


def cf(rows=None, cov=1.0, op=O.IsBlank, params=(), fi=0, tid="t"):
    return AnalysisRecord.cf(tid, fi, op, list(params), rows, cov)


def test_merge_examples():
    assert merge_records([cf(), cf()]) == [cf()]
    # contiguous and overlapping spans join; coverage follows the joined span
    got = merge_records([cf((0, 5), 0.25), cf((5, 10), 0.25), cf((8, 12), 0.2)])
    assert len(got) == 1 and got[0].rows == (0, 12) and got[0].coverage == pytest.approx(0.6)
    # a gap keeps spans apart
    assert len(merge_records([cf((0, 5), 0.25), cf((6, 10), 0.2)])) == 2
    # a whole-field record absorbs spans
    assert merge_records([cf((0, 5), 0.25), cf()]) == [cf()]
    # different parameters or fields never merge
    assert len(merge_records([cf(params=[Param.text("a")], op=O.EqualContains),
                              cf(params=[Param.text("b")], op=O.EqualContains), cf(fi=1)])) == 3
    ch = AnalysisRecord.chart("t", ChartType.Bar, [0], [1])
    assert merge_records([ch, ch]) == [ch]


spans = st.tuples(st.integers(0, 30), st.integers(1, 10)).map(lambda t: (t[0], t[0] + t[1]))
records = st.lists(
    st.builds(lambda span, whole, fi, op: cf(None, 1.0, op, fi=fi) if whole else cf(span, (span[1] - span[0]) / 40, op, fi=fi),
              spans, st.booleans(), st.integers(0, 2), st.sampled_from([O.IsBlank, O.IsDuplicate])),
    max_size=12,
)


@given(records)
def test_merge_idempotent(rs):
    once = merge_records(rs)
    assert merge_records(once) == once


@given(records, st.randoms(use_true_random=False))
def test_merge_order_insensitive(rs, rnd):
    shuffled = list(rs)
    rnd.shuffle(shuffled)
    key = lambda r: (r.field_index, r.operation.order, r.rows or (-1, -1))  # noqa: E731
    assert sorted(merge_records(rs), key=key) == sorted(merge_records(shuffled), key=key)


@given(records)
def test_merged_spans_disjoint(rs):
    out = merge_records(rs)
    by_key = {}
    for r in out:
        by_key.setdefault((r.field_index, r.operation), []).append(r.rows)
    for spans_ in by_key.values():
        if None in spans_:
            assert spans_ == [None]
            continue
        spans_.sort()
        assert all(a[1] < b[0] for a, b in zip(spans_, spans_[1:]))


def test_filter_by_coverage():
    t = make_table([["1"]])
    ch = AnalysisRecord.chart("t", ChartType.Pie, [], [0])
    pairs = [(cf(cov=0.49), t), (cf(cov=0.5), t), (ch, t)]
    assert [r for r, _ in filter_by_coverage(pairs)] == [pairs[1][0], ch]
    assert len(filter_by_coverage(pairs, 0.0)) == 3
    with pytest.raises(ValueError):
        filter_by_coverage(pairs, 1.5)


def _same_schema(n, start=0):
    return [make_table([[str(i), str(i + 1)], ["a", "b"]], ["Qty", "Name"], id=f"s{i}") for i in range(start, start + n)]


def test_dedup_examples():
    assert len(dedup_and_sample(_same_schema(7))) == 5
    assert len(dedup_and_sample(_same_schema(3))) == 3
    same = [make_table([["1", "2"]], ["Qty"], id=f"d{i}") for i in range(4)]
    assert [t.id for t in dedup_and_sample(same)] == ["d0"]
    # headers compare case- and whitespace-insensitively, types must match
    other = make_table([["x", "y"], ["a", "b"]], ["Qty", "Name"], id="o")
    assert SchemaKey.of(other) != SchemaKey.of(_same_schema(1)[0])
    renamed = make_table([["9", "8"], ["a", "b"]], [" QTY ", "name"], id="r")
    assert SchemaKey.of(renamed) == SchemaKey.of(_same_schema(1)[0])
    with pytest.raises(ValueError):
        dedup_and_sample(same, 0)


def test_dedup_is_seeded_and_keeps_order():
    tables = _same_schema(12)
    a = [t.id for t in dedup_and_sample(tables, 5, seed=1)]
    assert a == [t.id for t in dedup_and_sample(tables, 5, seed=1)]
    idx = [int(i[1:]) for i in a]
    assert idx == sorted(idx) and len(set(idx)) == 5


def _corpus():
    tables = _same_schema(7) + [make_table([["", "3", "4"]], ["Gap"], id="g")]
    recs = [cf(tid=t.id) for t in tables[:7]] + [cf((0, 1), 0.3, tid="g"), cf((1, 3), 0.6, tid="g")]
    return Corpus(tables, recs, {"source": "unit"})


@pytest.mark.parametrize("name", ["c.jsonl", "c.jsonl.gz"])
def test_read_write_round_trip(tmp_path, name):
    c = _corpus()
    write_corpus(tmp_path / name, c)
    back = read_corpus(tmp_path / name)
    assert back.header == c.header and back.records == c.records
    assert [t.id for t in back.tables] == [t.id for t in c.tables]
    assert [t.rows() for t in back.tables] == [t.rows() for t in c.tables]
    assert [[f.ftype for f in t.fields] for t in back.tables] == [[f.ftype for f in t.fields] for t in c.tables]
    if name.endswith(".gz"):
        with gzip.open(tmp_path / name, "rt") as fh:
            assert json.loads(fh.readline())["format"] == "tabintent-corpus/1"


def test_read_errors(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"doc": "mystery"}\n')
    with pytest.raises(DataError):
        read_corpus(p)
    p.write_text('{"doc": "record", "table_id": "nope", "kind": "CF", "field_index": 0, "operation": "IsBlank"}\n')
    with pytest.raises(DataError):
        read_corpus(p)
    p.write_text("{not json\n")
    with pytest.raises(DataError):
        read_corpus(p)


def test_prepare():
    out = prepare(_corpus())
    ids = {t.id for t in out.tables}
    assert len(ids & {f"s{i}" for i in range(7)}) == 5
    # the two spans join into one record covering 0.9 of the field
    g = [r for r in out.records if r.table_id == "g"]
    assert len(g) == 1 and g[0].coverage == pytest.approx(0.9)
    assert all(r.table_id in ids for r in out.records)
    assert out.header == {"source": "unit"}
    strict = prepare(_corpus(), coverage_threshold=1.0)
    assert "g" not in {t.id for t in strict.tables}
