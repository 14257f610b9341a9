import pytest
from hypothesis import given, strategies as st

from tabintent.errors import EmptyInput, IndexOutOfRange
from tabintent.table import (
    CellKind,
    FieldType,
    classify_cell,
    infer_field_type,
    parse_table,
    read_csv,
    write_csv,
)


@pytest.mark.parametrize("raw,kind,value", [
    ("", CellKind.BLANK, None),
    ("   ", CellKind.BLANK, None),
    ("#REF!", CellKind.ERROR, None),
    ("#DIV/0!", CellKind.ERROR, None),
    ("76", CellKind.NUMBER, 76.0),
    ("-1,234.5", CellKind.NUMBER, -1234.5),
    ("$12", CellKind.NUMBER, 12.0),
    ("45%", CellKind.NUMBER, 0.45),
    ("hello", CellKind.TEXT, None),
    ("inf", CellKind.TEXT, None),
])
def test_classify_cell(raw, kind, value):
    c = classify_cell(raw)
    assert c.kind is kind
    if value is not None:
        assert c.value == pytest.approx(value)


def test_dates_parse_to_epoch_days():
    assert classify_cell("1970-01-02").value == 1
    assert classify_cell("01/02/1970").kind is CellKind.DATE
    assert classify_cell("Mar 2021").kind is CellKind.DATE
    assert classify_cell("2021-02-30").kind is CellKind.TEXT


def test_infer_field_type_examples():
    cells = lambda xs: [classify_cell(x) for x in xs]  # noqa: E731
    assert infer_field_type(cells(["85", "76", "92"])) is FieldType.NUMERIC
    assert infer_field_type(cells(["ACCEPTED", "Unknown", "ACCEPTED"])) is FieldType.STRING
    assert infer_field_type(cells(["2021-01-03", "2021-02-07", ""])) is FieldType.DATETIME
    assert infer_field_type(cells(["", ""])) is FieldType.STRING


def test_type_majority_tolerates_stray_cells():
    xs = [str(i) for i in range(40)] + ["oops"]
    assert infer_field_type([classify_cell(x) for x in xs]) is FieldType.NUMERIC  # 40/41 > 0.95
    xs = [str(i) for i in range(10)] + ["oops"]
    assert infer_field_type([classify_cell(x) for x in xs]) is FieldType.STRING


def test_parse_table_examples():
    t = parse_table([["Round 1"], ["9.5"], ["9.8"], ["9.1"]], True)
    assert len(t.fields) == 1 and t.n_rows == 3 and t.fields[0].ftype is FieldType.NUMERIC
    t = parse_table([["a", "b"]], True)
    assert len(t.fields) == 2 and t.n_rows == 0
    t = parse_table([["x", "1"], ["y", "2"]], False)
    assert t.headers == ["col_0", "col_1"] and t.n_rows == 2


def test_parse_table_pads_ragged_rows_and_rejects_empty():
    t = parse_table([["a", "b", "c"], ["1"]], True)
    assert [f.cells[0].kind for f in t.fields] == [CellKind.NUMBER, CellKind.BLANK, CellKind.BLANK]
    with pytest.raises(EmptyInput):
        parse_table([], True)
    with pytest.raises(EmptyInput):
        parse_table([[]], True)
    with pytest.raises(IndexOutOfRange):
        t.field(3)


def test_csv_round_trip(tmp_path):
    rows = [["Name", "Score"], ["Ann, Jr.", "3"], ['say "hi"', ""]]
    t = parse_table(rows, True, "x")
    p = tmp_path / "t.csv"
    p.write_text(write_csv(t), encoding="utf-8")
    assert read_csv(p).to_rows() == rows


texts = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=12)


@given(texts)
def test_classify_is_total_and_idempotent(raw):
    a = classify_cell(raw)
    assert a == classify_cell(raw)
    assert classify_cell(a.raw) == a


@given(st.lists(st.sampled_from(["1", "2.5", "", "#N/A", "x", "2020-01-01", "-3"]), min_size=1, max_size=30),
       st.randoms(use_true_random=False))
def test_field_type_is_permutation_invariant(raws, rnd):
    cells = [classify_cell(r) for r in raws]
    shuffled = list(cells)
    rnd.shuffle(shuffled)
    assert infer_field_type(cells) is infer_field_type(shuffled)


@given(st.integers(1, 4).flatmap(
    lambda w: st.lists(st.lists(texts, min_size=w, max_size=w), min_size=1, max_size=6)))
def test_parse_then_serialize_is_identity(rows):
    assert parse_table(rows, True).to_rows() == rows
