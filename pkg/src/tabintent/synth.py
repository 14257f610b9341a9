"""Seeded synthetic corpus with planted analysis patterns.

Every planted record is built so that its golden semantics follow from the
field's signatures alone, e.g. a mean-split field has no cell equal to its
mean, so the label is exactly (Det, {Rag}).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .errors import InvalidSpec
from .records import AnalysisRecord, ChartType, OperationCF, Param
from .signatures import Vocabulary, range_stats
from .table import Table, table_from_columns

# supported operations, weighted by their counts in the reference corpus statistics
DEFAULT_CF_MIX = {
    "EqualContains": 80932,
    "ColorScale": 71642,
    "LessGreaterThan": 47245,
    "IsBlank": 21318,
    "IsError": 7382,
    "TopBottomK": 3126,
    "IsDuplicate": 2277,
}
DEFAULT_CHART_MIX = {"Line": 1.0, "Bar": 1.0, "Scatter": 1.0, "Pie": 1.0}
DEFAULT_CHART_FRACTION = 0.25
# stream keys; a bare trailing 0 would alias the plain seed in numpy's SeedSequence
_STREAM_KINDS, _STREAM_TABLES = 0x6B1D, 0x7AB1

HEADERS = {
    "IsError": ["Unit Cost", "Margin", "Yield", "Lookup Value", "Conversion", "Ratio", "Net Rate", "Adj Factor"],
    "IsBlank": ["Comments", "Approved By", "Reviewer", "Follow Up", "Contact Phone", "Remarks", "Signed Off"],
    "IsDuplicate": ["Email", "Invoice No", "Order Ref", "SKU", "Customer Code", "Ticket", "Serial"],
    "TopBottomK": ["Final Score", "Points", "Goals", "Votes", "Rating Points", "Race Score", "Quiz Marks"],
    "LessGreaterThan": ["Temperature", "Latency", "Balance", "Humidity", "Wait Minutes", "Pressure", "Weight"],
    "ColorScale": ["Utilization", "Heat", "Intensity", "Load", "Density", "Saturation", "Activity Level"],
    "EqualContains": ["Status", "Stage", "Result", "State", "Progress", "Outcome", "Phase"],
}
STATUS_VALUES = ["Done", "Open", "Closed", "Active", "Shipped", "Approved", "Rejected", "Complete", "Paid", "Draft"]
MEANINGLESS_TOKENS = ["n/a", "tbd", "unknown", "none", "missing", "null", "tba", "?"]
FIRST_NAMES = ["Ana", "Ben", "Chen", "Dara", "Eli", "Fay", "Gus", "Hana", "Ivo", "Jun", "Kai", "Lea",
               "Mo", "Nia", "Oti", "Pam", "Quin", "Rui", "Sol", "Tao", "Uma", "Vik", "Wen", "Xia", "Yuri", "Zoe"]
REGIONS = ["North", "South", "East", "West", "Central"]
PRODUCTS = ["Widget", "Gadget", "Sprocket", "Bracket", "Gizmo", "Doohickey", "Valve", "Rotor", "Panel",
            "Switch", "Sensor", "Relay", "Cable", "Hinge", "Lever", "Gear", "Spring", "Nozzle"]
SEGMENTS = ["Retail", "Online", "Wholesale", "Partners", "Export", "Direct"]
LINE_Y = ["Revenue", "Sales", "Visitors", "Orders", "Signups", "Downloads"]
BAR_Y = ["Units Sold", "Total Sales", "Stock Count", "Returns"]
PIE_Y = ["Share", "Budget", "Headcount", "Spend"]
SCATTER_X = ["Advertising Spend", "Age", "Height", "Study Hours", "Distance", "Engine Size"]
SCATTER_Y = ["Score", "Price", "Rate", "Income", "Fuel Use", "Weight Gain"]
NOTES = ["ok", "check", "late", "fine", "recheck", "see mail", "urgent", "follow", "done?"]


@dataclass(frozen=True)
class SynthSpec:
    n_tables: int
    rows_range: tuple[int, int] = (12, 40)
    seed: int = 7
    pattern_mix: dict | None = None
    chart_mix: dict | None = None
    chart_fraction: float = DEFAULT_CHART_FRACTION

    def validate(self):
        if self.n_tables < 1:
            raise InvalidSpec("n_tables must be at least 1")
        lo, hi = self.rows_range
        if not 8 <= lo <= hi:
            raise InvalidSpec("rows_range must satisfy 8 <= min <= max")
        if not 0.0 <= self.chart_fraction <= 1.0:
            raise InvalidSpec("chart_fraction must lie in [0, 1]")
        for mix, known in ((self.pattern_mix, DEFAULT_CF_MIX), (self.chart_mix, DEFAULT_CHART_MIX)):
            if mix is None:
                continue
            unknown = set(mix) - set(known)
            if unknown:
                raise InvalidSpec(f"unknown pattern(s) in mix: {sorted(unknown)}")
            if any(w < 0 for w in mix.values()) or sum(mix.values()) <= 0:
                raise InvalidSpec("mix weights must be non-negative with a positive sum")

    def to_json(self) -> dict:
        return {
            "n_tables": self.n_tables, "rows_range": list(self.rows_range), "seed": self.seed,
            "pattern_mix": self.pattern_mix or DEFAULT_CF_MIX, "chart_mix": self.chart_mix or DEFAULT_CHART_MIX,
            "chart_fraction": self.chart_fraction,
        }


def _probs(mix: dict) -> tuple[list[str], np.ndarray]:
    names = sorted(mix)
    w = np.array([float(mix[n]) for n in names])
    return names, w / w.sum()


def _fmt(x: float, decimals: int) -> str:
    return f"{x:.{decimals}f}"


def _close(a, b) -> bool:
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


def _name_column(rng, n) -> list[str]:
    picks = rng.choice(len(FIRST_NAMES), size=n)
    return [f"{FIRST_NAMES[i]} {chr(65 + j % 26)}." for j, i in enumerate(picks)]


# --- CF field builders: each returns (header, values, [records params]) --------

def _error_field(rng, n):
    err = str(rng.choice(["#REF!", "#DIV/0!", "#N/A", "#VALUE!", "#NAME?", "#NUM!", "#NULL!"]))
    vals = [_fmt(v, 2) for v in rng.uniform(0.5, 80.0, size=n)]
    for i in rng.choice(n, size=int(rng.integers(2, 5)), replace=False):
        vals[i] = err
    return vals, OperationCF.IsError, [Param.text(err)]


def _blank_field(rng, n):
    if rng.random() < 0.5:
        vals = _name_column(rng, n)
    else:
        vals = [str(v) for v in rng.integers(100, 999, size=n)]
    k = int(rng.integers(max(2, n // 5), max(3, n // 2)))
    for i in rng.choice(n, size=k, replace=False):
        vals[i] = ""
    return vals, OperationCF.IsBlank, [Param.blank()]


def _duplicate_field(rng, n):
    prefix = str(rng.choice(["INV", "ORD", "TK", "SN", "CU"]))
    codes = [f"{prefix}-{c}" for c in rng.choice(np.arange(1000, 9999), size=n, replace=False)]
    n_dup = int(rng.integers(2, max(3, n // 6) + 1))
    for j in range(n_dup):
        src = 2 * j
        for t in rng.choice(np.arange(2 * n_dup, n), size=int(rng.integers(1, 3)), replace=False):
            codes[t] = codes[src]
    return codes, OperationCF.IsDuplicate, []


def _topk_field(rng, n):
    vals = rng.choice(np.arange(20, 20 + 4 * n), size=n, replace=False)
    return [str(v) for v in vals], OperationCF.TopBottomK, [Param.number(3)]


def _numeric_avoiding(rng, n, lo, hi, decimals, bad):
    """Resample until none of the statistics chosen by ``bad`` collides with a cell."""
    while True:
        vals = [_fmt(v, decimals) for v in rng.uniform(lo, hi, size=n)]
        nums = [float(v) for v in vals]
        out = bad(nums)
        if out is not None:
            return vals, out


def _mean_split_field(rng, n, vocab):
    lo = float(rng.choice([-20.0, 0.0, 10.0, 100.0]))

    def bad(nums):
        st = range_stats(nums)
        if any(_close(st.mean, x) for x in nums) or vocab.is_empirical(st.mean):
            return None
        return [Param.number(st.mean)]

    vals, params = _numeric_avoiding(rng, n, lo, lo + float(rng.uniform(30, 300)), 1, bad)
    return vals, OperationCF.LessGreaterThan, params


def _gradient_field(rng, n, vocab):
    def bad(nums):
        st = range_stats(nums)
        cuts = sorted([st.mean, st.midpoint])
        if _close(cuts[0], cuts[1]):
            return None
        for c in cuts:
            if any(_close(c, x) for x in nums) or vocab.is_empirical(c):
                return None
        return [Param.number(c) for c in cuts]

    vals, params = _numeric_avoiding(rng, n, 0.0, float(rng.uniform(1.0, 100.0)), 2, bad)
    return vals, OperationCF.ColorScale, params


def _status_field(rng, n):
    cats = [str(c) for c in rng.choice(STATUS_VALUES, size=int(rng.integers(3, 5)), replace=False)]
    vals = [str(c) for c in rng.choice(cats, size=n)]
    for c in cats:  # every category at least twice
        if vals.count(c) < 2:
            vals[int(rng.integers(0, n))] = c
    while True:
        token = str(rng.choice(MEANINGLESS_TOKENS))
        if not any(token in v.lower() for v in cats):
            break
    vals[int(rng.integers(0, n))] = token
    return vals, OperationCF.EqualContains, [Param.text(token)]


def _cf_table(rng, tid, pattern, n, vocab) -> tuple[Table, list[AnalysisRecord]]:
    builders = {
        "IsError": lambda: _error_field(rng, n),
        "IsBlank": lambda: _blank_field(rng, n),
        "IsDuplicate": lambda: _duplicate_field(rng, n),
        "TopBottomK": lambda: _topk_field(rng, n),
        "LessGreaterThan": lambda: _mean_split_field(rng, n, vocab),
        "ColorScale": lambda: _gradient_field(rng, n, vocab),
        "EqualContains": lambda: _status_field(rng, n),
    }
    vals, op, params = builders[pattern]()
    header = str(rng.choice(HEADERS[pattern]))
    context = [("Name", _name_column(rng, n)), ("Region", [str(r) for r in rng.choice(REGIONS, size=n)])]
    n_ctx = int(rng.integers(1, 3))
    cols = [context[i] for i in sorted(rng.choice(2, size=n_ctx, replace=False))]
    pos = int(rng.integers(0, len(cols) + 1))
    cols.insert(pos, (header, vals))
    table = table_from_columns(tid, [h for h, _ in cols], [c for _, c in cols])
    rec = AnalysisRecord.cf(tid, pos, op, params, rows=(0, n), coverage=1.0)
    return table, [rec]


# --- chart tables ----------------------------------------------------------------

def _dates(rng, n):
    import datetime as dt

    start = dt.date(2018, 1, 1) + dt.timedelta(days=int(rng.integers(0, 1500)))
    step = int(rng.choice([1, 7, 30]))
    return [(start + dt.timedelta(days=step * i)).isoformat() for i in range(n)]


def _series(rng, n, lo=10.0, hi=1000.0):
    base = float(rng.uniform(lo, hi))
    return [_fmt(base * (1 + 0.3 * v), 1) for v in rng.standard_normal(n)]


def _chart_table(rng, tid, kind, n) -> tuple[Table, list[AnalysisRecord]]:
    cols: list[tuple[str, list[str], str]] = []  # (header, values, role)
    if kind == "Line":
        cols.append((str(rng.choice(["Date", "Day", "Week Of", "Period"])), _dates(rng, n), "x"))
        for h in rng.choice(LINE_Y, size=int(rng.integers(1, 3)), replace=False):
            cols.append((str(h), _series(rng, n), "y"))
        if rng.random() < 0.3:
            cols.append(("Notes", [str(s) for s in rng.choice(NOTES, size=n)], "-"))
        chart = ChartType.Line
    elif kind == "Bar":
        n = min(n, len(PRODUCTS))
        cols.append((str(rng.choice(["Product", "Item", "Model"])),
                     [str(p) for p in rng.choice(PRODUCTS, size=n, replace=False)], "x"))
        cols.append((str(rng.choice(BAR_Y)), [str(v) for v in rng.integers(10, 500, size=n)], "y"))
        chart = ChartType.Bar
    elif kind == "Scatter":
        cols.append((str(rng.choice(SCATTER_X)), _series(rng, n, 5.0, 80.0), "x"))
        cols.append((str(rng.choice(SCATTER_Y)), _series(rng, n, 20.0, 400.0), "y"))
        chart = ChartType.Scatter
    else:
        n = int(rng.integers(3, 7))
        cols.append((str(rng.choice(["Segment", "Channel", "Group"])),
                     [str(s) for s in rng.choice(SEGMENTS, size=n, replace=False)], "-"))
        cols.append((str(rng.choice(PIE_Y)), [str(v) for v in rng.integers(5, 90, size=n)], "y"))
        chart = ChartType.Pie
    order = list(range(len(cols)))
    if rng.random() < 0.5:
        rng.shuffle(order)
    cols = [cols[i] for i in order]
    table = table_from_columns(tid, [c[0] for c in cols], [c[1] for c in cols])
    x = [i for i, c in enumerate(cols) if c[2] == "x"]
    y = [i for i, c in enumerate(cols) if c[2] == "y"]
    return table, [AnalysisRecord.chart(tid, chart, x, y)]


def generate_synthetic(spec: SynthSpec, vocab: Vocabulary | None = None) -> Corpus:
    spec.validate()
    if vocab is None:
        from .config import default_settings

        vocab = default_settings().vocab
    cf_names, cf_p = _probs(spec.pattern_mix or DEFAULT_CF_MIX)
    ch_names, ch_p = _probs(spec.chart_mix or DEFAULT_CHART_MIX)
    n_chart = int(round(spec.chart_fraction * spec.n_tables))
    is_chart = np.zeros(spec.n_tables, dtype=bool)
    is_chart[np.random.default_rng([spec.seed, _STREAM_KINDS]).permutation(spec.n_tables)[:n_chart]] = True
    tables, records = [], []
    width = len(str(spec.n_tables - 1))
    for i in range(spec.n_tables):
        rng = np.random.default_rng([spec.seed, _STREAM_TABLES, i])
        tid = f"t{i:0{width}d}"
        n = int(rng.integers(spec.rows_range[0], spec.rows_range[1] + 1))
        if is_chart[i]:
            t, rs = _chart_table(rng, tid, str(rng.choice(ch_names, p=ch_p)), n)
        else:
            t, rs = _cf_table(rng, tid, str(rng.choice(cf_names, p=cf_p)), n, vocab)
        tables.append(t)
        records.extend(rs)
    return Corpus(tables, records, {"generator": spec.to_json()})
