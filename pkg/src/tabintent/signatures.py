"""Statistical module: per-cell and per-field signatures and cell sampling.

Frequency signatures are computed for every field type; rank and range
signatures only over the Number cells of Numeric fields.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, fields as dc_fields
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import IndexOutOfRange, NotNumeric
from .table import CellKind, Field, FieldType, Table

COMMON_RANK_POSITIONS = (1, 3, 5, 10, 20)
COMMON_FREQUENCY_SHARE = 0.3
RANGE_TOLERANCE = 0.005
CARDINALITY_THRESHOLD = 0.99
HEADER_THRESHOLD = 0.61
FIELD_RANGE_THRESHOLD = 0.97
AFFIX_SHARE = 0.8
DEFAULT_SAMPLE_CAP = 64
DATE_KEYWORDS = ("date", "time", "year", "month", "day", "week", "quarter")

FLAG_NAMES = (
    "is_common_frequency",
    "is_common_rank",
    "is_common_range",
    "is_meaningless",
    "is_empirical",
    "is_blank",
    "is_error",
)
# highest priority first, used when sampling must truncate
SAMPLE_PRIORITY = (
    "is_error",
    "is_blank",
    "is_meaningless",
    "is_empirical",
    "is_common_rank",
    "is_common_range",
    "is_common_frequency",
)
METADATA_NAMES = (
    "cardinality_ratio",
    "key_entropy",
    "char_entropy",
    "mean",
    "variance",
    "min",
    "max",
    "range",
    "benford_deviation",
    "change_rate",
    "proportion_negative",
    "proportion_blank",
    "header_word_count",
)


@dataclass(frozen=True)
class Vocabulary:
    meaningless: frozenset
    empirical: frozenset

    @classmethod
    def from_dict(cls, d) -> "Vocabulary":
        return cls(
            meaningless=frozenset(str(w).strip().lower() for w in d["meaningless"]),
            empirical=frozenset(float(x) for x in d["empirical"]),
        )

    def is_meaningless(self, text: str) -> bool:
        return text.strip().lower() in self.meaningless

    def is_empirical(self, value: float) -> bool:
        return any(math.isclose(value, e, rel_tol=1e-9, abs_tol=1e-12) for e in self.empirical)


@dataclass(frozen=True)
class CellSignature:
    freq_count: int = 0
    freq_ratio: float = 0.0
    freq_rank: int = 0
    asc_rank: int = 0
    desc_rank: int = 0
    range_minmax: float = 0.0
    range_log: float = 0.0
    percentile_minmax: float = 0.0
    is_common_frequency: bool = False
    is_common_rank: bool = False
    is_common_range: bool = False
    is_meaningless: bool = False
    is_empirical: bool = False
    is_blank: bool = False
    is_error: bool = False

    def flags(self) -> dict[str, bool]:
        return {name: getattr(self, name) for name in FLAG_NAMES}

    def any_flag(self) -> bool:
        return any(getattr(self, name) for name in FLAG_NAMES)


CELL_SIGNATURE_NAMES = tuple(f.name for f in dc_fields(CellSignature))


@dataclass(frozen=True)
class FieldSignature:
    ftype_onehot: tuple[bool, bool, bool]
    header_similarity: float
    has_keyword_x: bool
    has_keyword_y: bool
    is_common_cardinality: bool
    is_common_range: bool
    is_common_affix: bool
    is_common_header: bool
    is_common_type: bool
    is_date_format: bool
    metadata: tuple[float, ...]

    def as_array(self) -> np.ndarray:
        head = [
            *map(float, self.ftype_onehot),
            self.header_similarity,
            float(self.has_keyword_x),
            float(self.has_keyword_y),
            float(self.is_common_cardinality),
            float(self.is_common_range),
            float(self.is_common_affix),
            float(self.is_common_header),
            float(self.is_common_type),
            float(self.is_date_format),
        ]
        return np.array(head + list(self.metadata), dtype=np.float64)


FIELD_SIGNATURE_DIM = 3 + 9 + len(METADATA_NAMES)


def value_key(cell) -> object:
    """Identity used for frequency counting: numbers by value, the rest by stripped text."""
    if cell.kind is CellKind.NUMBER:
        return cell.value
    return cell.raw.strip()


def _ceil_lg(a: float) -> int:
    """Smallest integer N with 10**N >= a, for a > 0."""
    n = math.ceil(math.log10(a))
    while 10.0 ** n < a:
        n += 1
    while 10.0 ** (n - 1) >= a:
        n -= 1
    return n


def _floor_pow10(r: float) -> float:
    """Largest power of ten <= r, for r > 0."""
    k = math.floor(math.log10(r))
    while 10.0 ** k > r:
        k -= 1
    while 10.0 ** (k + 1) <= r:
        k += 1
    return 10.0 ** k


def log_range_exponent(lo: float, hi: float) -> int:
    contrib = [max(0, _ceil_lg(abs(x))) if abs(x) > 1 else 0 for x in (hi, lo)]
    return max(contrib)


def common_rank_positions(n: int) -> set[int]:
    fixed = {p for p in COMMON_RANK_POSITIONS if p <= n}
    # round-half-up of k*(n-1)/10, in integers
    deciles = {(k * (n - 1) + 5) // 10 + 1 for k in range(1, 10)}
    return fixed | deciles


@dataclass(frozen=True)
class RangeStats:
    mean: float
    midpoint: float
    lo: float
    hi: float

    @property
    def spread(self) -> float:
        return self.hi - self.lo

    def near_multiple(self, x: float) -> bool:
        r = self.spread
        if r <= 0:
            return False
        step = _floor_pow10(r)
        return abs(x - round(x / step) * step) <= RANGE_TOLERANCE * r

    def is_range_value(self, x: float) -> bool:
        return (
            math.isclose(x, self.mean, rel_tol=1e-9, abs_tol=1e-12)
            or math.isclose(x, self.midpoint, rel_tol=1e-9, abs_tol=1e-12)
            or self.near_multiple(x)
        )


def range_stats(numbers: Sequence[float]) -> RangeStats:
    lo, hi = min(numbers), max(numbers)
    return RangeStats(math.fsum(numbers) / len(numbers), (hi + lo) / 2.0, lo, hi)


def common_range_values(field: Field) -> list[float]:
    """Mean, midpoint and cell values close to integer multiples of the range's power of ten."""
    if field.ftype is not FieldType.NUMERIC:
        raise NotNumeric(f"field {field.header!r} is {field.ftype.value}")
    nums = field.numbers()
    if not nums:
        raise NotNumeric(f"field {field.header!r} has no numbers")
    st = range_stats(nums)
    out = {st.mean, st.midpoint}
    out.update(x for x in nums if st.near_multiple(x))
    return _dedup_close(sorted(out))


def _dedup_close(values: list[float]) -> list[float]:
    out: list[float] = []
    for v in values:
        if not out or not math.isclose(v, out[-1], rel_tol=1e-9, abs_tol=1e-12):
            out.append(v)
    return out


def compute_cell_signatures(field: Field, vocab: Vocabulary) -> list[CellSignature]:
    cells = field.cells
    n = len(cells)
    if n == 0:
        return []
    keys = [value_key(c) if c.kind is not CellKind.BLANK else None for c in cells]
    nonblank = [i for i in range(n) if keys[i] is not None]
    counts = Counter(keys[i] for i in nonblank)
    total = len(nonblank)

    freq_count = np.zeros(n, dtype=np.int64)
    freq_rank = np.zeros(n, dtype=np.int64)
    common_freq = np.zeros(n, dtype=bool)
    if nonblank:
        per_cell = np.array([counts[keys[i]] for i in nonblank], dtype=np.int64)
        desc, asc, u = kernels.dense_ranks(per_cell)
        cut = math.ceil(COMMON_FREQUENCY_SHARE * u)
        for j, i in enumerate(nonblank):
            freq_count[i] = per_cell[j]
            freq_rank[i] = desc[j]
            common_freq[i] = (
                cells[i].kind is not CellKind.ERROR
                and per_cell[j] >= 2
                and (desc[j] <= cut or asc[j] <= cut)
            )

    asc_rank = np.zeros(n, dtype=np.int64)
    desc_rank = np.zeros(n, dtype=np.int64)
    minmax = np.zeros(n)
    logpos = np.zeros(n)
    pct = np.zeros(n)
    common_rank = np.zeros(n, dtype=bool)
    common_range = np.zeros(n, dtype=bool)
    empirical = np.zeros(n, dtype=bool)
    num_idx = [i for i, c in enumerate(cells) if c.kind is CellKind.NUMBER]
    if field.ftype is FieldType.NUMERIC and num_idx:
        vals = np.array([cells[i].value for i in num_idx], dtype=np.float64)
        a, d = kernels.ordinal_ranks(vals)
        m = len(num_idx)
        st = range_stats(vals.tolist())
        scale = 10.0 ** log_range_exponent(st.lo, st.hi)
        positions = common_rank_positions(m)
        for j, i in enumerate(num_idx):
            v = vals[j]
            asc_rank[i], desc_rank[i] = a[j], d[j]
            minmax[i] = (v - st.lo) / st.spread if st.spread > 0 else 0.0
            logpos[i] = (v - scale) / (2.0 * scale)
            pct[i] = (a[j] - 1) / (m - 1) if m > 1 else 0.0
            common_rank[i] = a[j] in positions or d[j] in positions
            common_range[i] = st.is_range_value(v)
            empirical[i] = vocab.is_empirical(v)

    out = []
    for i, c in enumerate(cells):
        out.append(
            CellSignature(
                freq_count=int(freq_count[i]),
                freq_ratio=float(freq_count[i]) / total if total else 0.0,
                freq_rank=int(freq_rank[i]),
                asc_rank=int(asc_rank[i]),
                desc_rank=int(desc_rank[i]),
                range_minmax=float(minmax[i]),
                range_log=float(logpos[i]),
                percentile_minmax=float(pct[i]),
                is_common_frequency=bool(common_freq[i]),
                is_common_rank=bool(common_rank[i]),
                is_common_range=bool(common_range[i]),
                is_meaningless=c.kind is CellKind.TEXT and vocab.is_meaningless(c.raw),
                is_empirical=bool(empirical[i]),
                is_blank=c.kind is CellKind.BLANK,
                is_error=c.kind is CellKind.ERROR,
            )
        )
    return out


def _trigrams(s: str) -> set[str]:
    s = s.lower()
    if len(s) < 3:
        return {s} if s else set()
    return {s[i:i + 3] for i in range(len(s) - 2)}


def header_similarity(target: str, others: Iterable[str]) -> float:
    t = _trigrams(target)
    best = 0.0
    for other in others:
        o = _trigrams(other)
        union = t | o
        if union:
            best = max(best, len(t & o) / len(union))
    return best


def _entropy(counter: Counter) -> float:
    total = sum(counter.values())
    if total == 0:
        return 0.0
    probs = np.array([c / total for c in counter.values()])
    return float(-(probs * np.log2(probs)).sum())


def _has_affix(texts: list[str]) -> bool:
    texts = [t for t in texts if t]
    if len(texts) < 2:
        return False
    need = AFFIX_SHARE * len(texts)
    first = Counter(t[0] for t in texts).most_common(1)[0][1]
    last = Counter(t[-1] for t in texts).most_common(1)[0][1]
    return first >= need or last >= need


def _metadata(field: Field) -> tuple[float, ...]:
    cells = field.cells
    n = len(cells)
    nonblank = [c for c in cells if c.kind is not CellKind.BLANK]
    keys = Counter(value_key(c) for c in nonblank)
    chars = Counter("".join(c.text() for c in nonblank))
    nums = field.numbers() if field.ftype is FieldType.NUMERIC else []
    if nums:
        arr = np.array(nums)
        mean, var = math.fsum(nums) / len(nums), float(arr.var())
        lo, hi = float(arr.min()), float(arr.max())
        neg = float((arr < 0).mean())
    else:
        mean = var = lo = hi = neg = 0.0
    seq = [value_key(c) for c in nonblank]
    changes = sum(a != b for a, b in zip(seq, seq[1:]))
    return (
        len(keys) / len(nonblank) if nonblank else 0.0,
        _entropy(keys),
        _entropy(chars),
        mean,
        var,
        lo,
        hi,
        hi - lo,
        0.0,
        changes / (len(seq) - 1) if len(seq) > 1 else 0.0,
        neg,
        (n - len(nonblank)) / n if n else 0.0,
        float(len(field.header.split())),
    )


def compute_field_signatures(
    table: Table,
    field_index: int,
    vocab: Vocabulary,
    keywords_x: Sequence[str],
    keywords_y: Sequence[str],
) -> FieldSignature:
    if not 0 <= field_index < len(table.fields):
        raise IndexOutOfRange(f"field index {field_index} out of range")
    f = table.fields[field_index]
    header = f.header.lower()
    others = [g.header for g in table.fields if g.index != field_index]
    sim = header_similarity(f.header, others)
    nonblank = [c for c in f.cells if c.kind is not CellKind.BLANK]
    unique_ratio = len({value_key(c) for c in nonblank}) / len(nonblank) if nonblank else 0.0
    nums = [c.value for c in f.cells if c.kind is CellKind.NUMBER]
    if nums:
        in01 = sum(0.0 <= x <= 1.0 for x in nums) / len(nums)
        in100 = sum(1.0 <= x <= 100.0 for x in nums) / len(nums)
        common_range = max(in01, in100) > FIELD_RANGE_THRESHOLD
    else:
        common_range = False
    texts = [c.raw.strip() for c in f.cells if c.kind is CellKind.TEXT]
    common_type = f.ftype in (FieldType.NUMERIC, FieldType.DATETIME) or (
        bool(nonblank) and unique_ratio <= 0.5
    )
    return FieldSignature(
        ftype_onehot=(
            f.ftype is FieldType.NUMERIC,
            f.ftype is FieldType.STRING,
            f.ftype is FieldType.DATETIME,
        ),
        header_similarity=sim,
        has_keyword_x=any(k in header for k in keywords_x),
        has_keyword_y=any(k in header for k in keywords_y),
        is_common_cardinality=unique_ratio > CARDINALITY_THRESHOLD,
        is_common_range=common_range,
        is_common_affix=_has_affix(texts),
        is_common_header=sim > HEADER_THRESHOLD,
        is_common_type=common_type,
        is_date_format=f.ftype is FieldType.DATETIME or any(k in header for k in DATE_KEYWORDS),
        metadata=_metadata(f),
    )


def sample_cells(field: Field, sigs: Sequence[CellSignature], cap: int = DEFAULT_SAMPLE_CAP) -> list[int]:
    flagged = [i for i, s in enumerate(sigs) if s.any_flag()]
    if len(flagged) <= cap:
        return flagged

    def priority(i):
        s = sigs[i]
        return next(p for p, name in enumerate(SAMPLE_PRIORITY) if getattr(s, name))

    keep = sorted(flagged, key=lambda i: (priority(i), i))[:cap]
    return sorted(keep)
