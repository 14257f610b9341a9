import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import make_field, make_table
from oracles import cell_signatures, compare_signatures, random_field_values, rank_positions
from tabintent.errors import IndexOutOfRange, NotNumeric
from tabintent.signatures import (
    FIELD_SIGNATURE_DIM,
    common_range_values,
    common_rank_positions,
    compute_cell_signatures,
    compute_field_signatures,
    header_similarity,
    sample_cells,
)


def _sig(values, vocab):
    f = make_field(values)
    return f, compute_cell_signatures(f, vocab)


def test_frequency_example(vocab):
    _, s = _sig(["a", "a", "b"], vocab)
    assert (s[0].freq_count, s[0].freq_ratio, s[0].freq_rank) == (2, 2 / 3, 1)
    assert s[2].freq_rank == 2


def test_minmax_and_log_examples(vocab):
    _, s = _sig(["60", "80", "100"], vocab)
    assert s[1].range_minmax == 0.5
    _, s = _sig(["-5", "0", "50"], vocab)
    # N = max(ceil(lg 50), ceil(lg 5)) = 2 -> (0 - 100) / 200
    assert s[1].range_log == -0.5


def test_common_rank_positions_examples():
    assert common_rank_positions(3) == {1, 2, 3}
    assert common_rank_positions(1) == {1}
    p20 = common_rank_positions(20)
    assert {1, 3, 5, 10, 20} <= p20
    assert {round(0.1 * k * 19 + 1e-9) + 1 for k in range(1, 10)} <= p20


@given(st.integers(1, 500))
def test_common_rank_positions_match_oracle(n):
    assert common_rank_positions(n) == rank_positions(n)


def test_common_range_values_examples():
    assert 76 in common_range_values(make_field(["70", "76", "82", "80", "72"]))
    assert 80 in common_range_values(make_field(["60", "100"]))
    assert common_range_values(make_field(["5", "5"])) == [5.0]
    with pytest.raises(NotNumeric):
        common_range_values(make_field(["a", "b"]))


def test_field_signature_examples(vocab, cfg):
    t = make_table([[f"ID{i:04d}" for i in range(100)]], ["Key"])
    assert compute_field_signatures(t, 0, vocab, cfg.keywords_x, cfg.keywords_y).is_common_cardinality
    vals = [str(1 + i % 100) for i in range(98)] + ["150", "300"]
    t = make_table([vals], ["Score"])
    sig = compute_field_signatures(t, 0, vocab, cfg.keywords_x, cfg.keywords_y)
    assert sig.is_common_range and sig.has_keyword_y and not sig.has_keyword_x
    t = make_table([["1"], ["2"]], ["Sales 2020", "Sales 2021"])
    sig = compute_field_signatures(t, 0, vocab, cfg.keywords_x, cfg.keywords_y)
    # 8 trigrams each, 7 shared -> 7/9
    assert sig.header_similarity == pytest.approx(7 / 9) and sig.is_common_header
    assert sig.as_array().shape == (FIELD_SIGNATURE_DIM,)
    with pytest.raises(IndexOutOfRange):
        compute_field_signatures(t, 5, vocab, cfg.keywords_x, cfg.keywords_y)


def test_field_signature_date_format_and_affix(vocab, cfg):
    t = make_table([["2020-01-01", "2020-02-01"], ["SKU-1", "SKU-2"], ["3", "4"]], ["When", "Code", "Order Year"])
    sigs = [compute_field_signatures(t, i, vocab, cfg.keywords_x, cfg.keywords_y) for i in range(3)]
    assert sigs[0].is_date_format and sigs[2].is_date_format and not sigs[1].is_date_format
    assert sigs[1].is_common_affix
    assert all(np.isfinite(s.as_array()).all() for s in sigs)


def test_header_similarity_examples():
    assert header_similarity("abc", ["abc"]) == 1.0
    assert header_similarity("abc", []) == 0.0
    # "round 1" vs "round 2": {rou,oun,und,nd } shared, one trigram each differs -> 4/6
    assert header_similarity("Round 1", ["Round 2", "Name"]) == pytest.approx(4 / 6)


def test_sample_cells_examples(vocab):
    f, s = _sig(["12.25", "13.75", "#REF!", "14.5", "15.25"], vocab)
    assert 2 in sample_cells(f, s)
    assert s[2].is_error
    f, s = _sig(["x1", "x2", "x3", "x4"], vocab)
    assert sample_cells(f, s) == []


def test_sample_cells_cap_prefers_errors(vocab):
    vals = ["#N/A"] * 30 + [""] * 30 + ["n/a"] * 40 + ["ok", "ok"] * 50
    f, s = _sig(vals, vocab)
    flagged = [i for i, x in enumerate(s) if x.any_flag()]
    assert len(flagged) == 200
    got = sample_cells(f, s, cap=64)
    assert len(got) == 64 and got == sorted(got)
    assert set(range(30)) <= set(got)  # all errors kept
    assert set(range(30, 60)) <= set(got)  # then blanks
    assert sum(1 for i in got if 60 <= i < 100) == 4  # then meaningless


def test_string_fields_have_no_rank_or_range(vocab):
    _, s = _sig(["b", "a", "b", "n/a"], vocab)
    assert all(x.asc_rank == 0 and x.range_minmax == 0 and not x.is_common_rank for x in s)
    assert s[3].is_meaningless


def test_brute_force_oracle_random_fields(vocab):
    rng = np.random.default_rng(11)
    for _ in range(60):
        f = make_field(random_field_values(rng))
        assert compare_signatures(compute_cell_signatures(f, vocab), cell_signatures(f, vocab)) == []


numeric_lists = st.lists(st.integers(-1000, 1000), min_size=1, max_size=30)


@given(numeric_lists)
def test_rank_orders_values(xs):
    from tabintent.config import default_settings

    f = make_field([str(x) for x in xs])
    s = compute_cell_signatures(f, default_settings().vocab)
    by_asc = [xs[i] for i in sorted(range(len(xs)), key=lambda i: s[i].asc_rank)]
    by_desc = [xs[i] for i in sorted(range(len(xs)), key=lambda i: s[i].desc_rank)]
    assert by_asc == sorted(xs) and by_desc == sorted(xs, reverse=True)
    if len(set(xs)) == len(xs):
        assert all(x.asc_rank + x.desc_rank == len(xs) + 1 for x in s)
    if max(xs) > min(xs):
        assert s[xs.index(min(xs))].range_minmax == 0 and s[xs.index(max(xs))].range_minmax == 1
    assert math.isclose(sum(x.freq_ratio / x.freq_count for x in s), 1.0)


@given(numeric_lists, st.sampled_from([2.0, 3.5, 10.0, 0.25]))
def test_scaling_keeps_ranks_and_frequencies(xs, c):
    from tabintent.config import default_settings

    v = default_settings().vocab
    a = compute_cell_signatures(make_field([str(x) for x in xs]), v)
    b = compute_cell_signatures(make_field([repr(x * c) for x in xs]), v)
    for p, q in zip(a, b):
        assert (p.asc_rank, p.desc_rank, p.freq_count, p.freq_rank) == (q.asc_rank, q.desc_rank, q.freq_count, q.freq_rank)
        assert p.percentile_minmax == q.percentile_minmax and p.freq_ratio == q.freq_ratio


@given(st.lists(st.sampled_from(["1", "2", "3", "", "#REF!", "n/a", "7", "100"]), min_size=1, max_size=40),
       st.integers(1, 10))
def test_sampling_subset_cap_and_determinism(raws, cap):
    from tabintent.config import default_settings

    f = make_field(raws)
    s = compute_cell_signatures(f, default_settings().vocab)
    got = sample_cells(f, s, cap)
    assert len(got) <= cap and all(s[i].any_flag() for i in got)
    assert got == sample_cells(f, s, cap)


@given(st.lists(st.integers(0, 60), min_size=1, max_size=30))
def test_common_rank_flag_matches_positions(xs):
    from tabintent.config import default_settings

    s = compute_cell_signatures(make_field([str(x) for x in xs]), default_settings().vocab)
    pos = rank_positions(len(xs))
    assert all(x.is_common_rank == (x.asc_rank in pos or x.desc_rank in pos) for x in s)
