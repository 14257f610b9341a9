"""Analytical semantics: golden-label rules, the intent/focus → operation map,
and semantics-guided pruning of operations and parameters."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyRecordSet, FocusTypeMismatch, InvalidAxis, UnknownPair
from .records import (
    NUMERIC_ONLY_FOCUSES,
    OPERATIONS,
    AnalysisRecord,
    ChartType,
    DataFocusCF,
    DataFocusChart,
    OperationCF,
    Param,
    SemanticsLabel,
    UserIntentCF,
    UserIntentChart,
)
from .signatures import (
    COMMON_RANK_POSITIONS,
    CellSignature,
    FieldSignature,
    Vocabulary,
    common_range_values,
    range_stats,
)
from .table import CellKind, Field, FieldType, Table

COMPARISON_OPS = frozenset({
    OperationCF.DataBar, OperationCF.ColorScale, OperationCF.IconSet,
    OperationCF.PartitionSet, OperationCF.EqualSet,
})
K_CANDIDATES = COMMON_RANK_POSITIONS


class IntentFocusMap:
    """Immutable (intent, focus) → ordered operations mapping."""

    def __init__(self, table: Mapping[tuple[UserIntentCF, DataFocusCF], Sequence[OperationCF]]):
        self._table = {k: tuple(v) for k, v in table.items()}

    @classmethod
    def from_dict(cls, d: Mapping[str, Mapping[str, Sequence[str]]]) -> "IntentFocusMap":
        return cls({
            (UserIntentCF(u), DataFocusCF(f)): [OperationCF(o) for o in ops]
            for u, by_focus in d.items()
            for f, ops in by_focus.items()
        })

    def to_dict(self) -> dict:
        out: dict = {}
        for (u, f), ops in self._table.items():
            out.setdefault(u.value, {})[f.value] = [o.value for o in ops]
        return out

    def __getitem__(self, key) -> tuple[OperationCF, ...]:
        try:
            return self._table[key]
        except KeyError:
            raise UnknownPair(f"no operations mapped for {key[0].value}/{key[1].value}") from None

    def __contains__(self, key) -> bool:
        return key in self._table

    def items(self):
        return self._table.items()


def label_intent_cf(records: Sequence[AnalysisRecord]) -> UserIntentCF:
    if not records:
        raise EmptyRecordSet("no records to label")
    fields = {(r.table_id, r.field_index) for r in records}
    if len(fields) != 1:
        raise EmptyRecordSet("records span more than one field")
    if len(records) >= 2 or any(r.operation in COMPARISON_OPS for r in records):
        return UserIntentCF.Com
    return UserIntentCF.Det


def _cells_matching(field: Field, p: Param) -> list[int]:
    out = []
    for i, c in enumerate(field.cells):
        if p.kind == "number" and c.kind is CellKind.NUMBER:
            if math.isclose(c.value, p.value, rel_tol=1e-9, abs_tol=1e-12):
                out.append(i)
        elif p.kind == "text" and c.kind not in (CellKind.NUMBER, CellKind.BLANK):
            if c.raw.strip() == p.value:
                out.append(i)
    return out


def label_focus_cf(
    record: AnalysisRecord,
    field: Field,
    sigs: Sequence[CellSignature],
    vocab: Vocabulary,
) -> frozenset:
    op = record.operation
    out: set[DataFocusCF] = set()
    if op is OperationCF.IsError:
        out.add(DataFocusCF.Err)
    elif op is OperationCF.IsBlank:
        out.add(DataFocusCF.Bla)
    elif op is OperationCF.IsDuplicate:
        out.add(DataFocusCF.Fre)
    elif op is OperationCF.TopBottomK:
        out.add(DataFocusCF.Rak)

    numeric = field.ftype is FieldType.NUMERIC
    values = [] if op in (OperationCF.TopBottomK, OperationCF.IsBlank) else list(record.parameters)
    crv = common_range_values(field) if numeric and field.numbers() else []
    for p in values:
        hits = _cells_matching(field, p)
        if any(sigs[i].is_common_frequency for i in hits):
            out.add(DataFocusCF.Fre)
        if p.kind == "text" and vocab.is_meaningless(p.value):
            out.add(DataFocusCF.Mea)
        if numeric and p.kind == "number":
            if any(sigs[i].is_common_rank for i in hits):
                out.add(DataFocusCF.Rak)
            if any(math.isclose(p.value, v, rel_tol=1e-9, abs_tol=1e-12) for v in crv):
                out.add(DataFocusCF.Rag)
            if vocab.is_empirical(p.value):
                out.add(DataFocusCF.Emp)

    # selecting every non-meaningless text value is the complement of the meaningless ones
    mea_cells = [i for i, s in enumerate(sigs) if s.is_meaningless]
    text_params = {p.value for p in values if p.kind == "text"}
    if mea_cells and text_params:
        others = {
            c.raw.strip() for c, s in zip(field.cells, sigs)
            if c.kind is CellKind.TEXT and not s.is_meaningless
        }
        if others and text_params == others:
            out.add(DataFocusCF.Mea)
    return frozenset(out)


def label_semantics_cf(
    records: Sequence[AnalysisRecord],
    field: Field,
    sigs: Sequence[CellSignature],
    vocab: Vocabulary,
) -> SemanticsLabel:
    focuses: set = set()
    for r in records:
        focuses |= label_focus_cf(r, field, sigs, vocab)
    return SemanticsLabel(frozenset({label_intent_cf(records)}), frozenset(focuses))


def candidate_operations(
    intent: UserIntentCF,
    focuses,
    fmap: IntentFocusMap,
) -> list[OperationCF]:
    out: list[OperationCF] = []
    for f in sorted(focuses, key=lambda d: list(DataFocusCF).index(d)):
        for op in fmap[(intent, f)]:
            if op not in out:
                out.append(op)
    return out


def filter_operation_scores(scores, allowed) -> np.ndarray:
    """Scores indexed by operation order; disallowed ones become -inf."""
    scores = np.asarray(scores, dtype=np.float64)
    mask = np.zeros(len(OPERATIONS), dtype=bool)
    for op in allowed:
        mask[op.order] = True
    return np.where(mask, scores, -np.inf)


@dataclass(frozen=True)
class Candidate:
    """A parameter candidate and where its score comes from.

    ``cells`` are field cell indices; ``derived`` names field statistics
    (``mean``, ``midpoint``, ``emp:<value>``) that the model scores as
    extra tokens.
    """

    param: Param
    tag: str
    cells: tuple[int, ...] = ()
    derived: tuple[str, ...] = ()


def derived_name_for_empirical(value: float) -> str:
    return f"emp:{value!r}"


def derived_values(field: Field, vocab: Vocabulary) -> dict[str, float]:
    """Non-cell parameter values a numeric field offers (mean, midpoint, in-range empirical)."""
    if field.ftype is not FieldType.NUMERIC:
        return {}
    nums = field.numbers()
    if not nums:
        return {}
    st = range_stats(nums)
    out = {"mean": st.mean, "midpoint": st.midpoint}
    for e in sorted(vocab.empirical):
        if st.lo <= e <= st.hi and not any(
            math.isclose(e, x, rel_tol=1e-9, abs_tol=1e-12) for x in nums
        ):
            out[derived_name_for_empirical(e)] = e
    return out


def _value_groups(field: Field, indices) -> dict:
    """Distinct values among ``indices``: key → (Param, [cell indices])."""
    groups: dict = {}
    for i in indices:
        c = field.cells[i]
        if c.kind is CellKind.NUMBER:
            key, param = ("n", c.value), Param.number(c.value)
        elif c.kind is CellKind.BLANK:
            continue
        else:
            key, param = ("t", c.raw.strip()), Param.text(c.raw.strip())
        groups.setdefault(key, (param, []))[1].append(i)
    return groups


def _stat_names(field: Field, value: float, stats: dict[str, float]) -> tuple[str, ...]:
    return tuple(
        name for name, v in stats.items()
        if math.isclose(v, value, rel_tol=1e-9, abs_tol=1e-12)
    )


def candidate_parameters_for_focus(
    field: Field,
    sigs: Sequence[CellSignature],
    focus: DataFocusCF,
    vocab: Vocabulary,
) -> list[Candidate]:
    numeric = field.ftype is FieldType.NUMERIC
    if focus in NUMERIC_ONLY_FOCUSES and not numeric:
        raise FocusTypeMismatch(f"{focus.value} applies only to numeric fields")
    cells = field.cells
    out: list[Candidate] = []

    def from_cells(indices, tag="cell", stats=None):
        for param, idx in _value_groups(field, indices).values():
            derived = _stat_names(field, param.value, stats) if stats and param.kind == "number" else ()
            out.append(Candidate(param, tag, tuple(idx), derived))

    if focus is DataFocusCF.Err:
        from_cells([i for i, c in enumerate(cells) if c.kind is CellKind.ERROR], tag="error")
    elif focus is DataFocusCF.Bla:
        blanks = tuple(i for i, c in enumerate(cells) if c.kind is CellKind.BLANK)
        if blanks:
            out.append(Candidate(Param.blank(), "blank", blanks))
    elif focus is DataFocusCF.Mea:
        from_cells([i for i, s in enumerate(sigs) if s.is_meaningless])
        if out:
            from_cells(
                [i for i, (c, s) in enumerate(zip(cells, sigs))
                 if c.kind is CellKind.TEXT and not s.is_meaningless],
                tag="complement",
            )
    elif focus is DataFocusCF.Emp:
        from_cells([i for i, s in enumerate(sigs) if s.is_empirical])
        stats = derived_values(field, vocab)
        for name, v in stats.items():
            if name.startswith("emp:"):
                out.append(Candidate(Param.number(v), "empirical", (), (name,)))
    elif focus is DataFocusCF.Rak:
        from_cells([i for i, s in enumerate(sigs) if s.is_common_rank])
        n_num = sum(1 for c in cells if c.kind is CellKind.NUMBER)
        for k in K_CANDIDATES:
            if k < n_num:
                at = tuple(i for i, s in enumerate(sigs) if s.desc_rank == k or s.asc_rank == k)
                out.append(Candidate(Param.number(k), "k", at))
    elif focus is DataFocusCF.Rag:
        stats = {k: v for k, v in derived_values(field, vocab).items() if k in ("mean", "midpoint")}
        crv = common_range_values(field) if field.numbers() else []
        nums = [(i, c.value) for i, c in enumerate(cells) if c.kind is CellKind.NUMBER]
        for v in crv:
            idx = tuple(i for i, x in nums if math.isclose(x, v, rel_tol=1e-9, abs_tol=1e-12))
            names = _stat_names(field, v, stats)
            tag = "cell" if idx else names[0]
            out.append(Candidate(Param.number(v), tag, idx, names))
    elif focus is DataFocusCF.Fre:
        from_cells([i for i, s in enumerate(sigs) if s.is_common_frequency])
        dups = tuple(i for i, s in enumerate(sigs) if s.freq_count >= 2 and not s.is_error)
        if out and dups:
            out.append(Candidate(Param("marker", "duplicate"), "duplicate", dups))
    return out


def cell_value_candidates(field: Field, indices) -> list[Candidate]:
    """One candidate per distinct value among ``indices``, with no focus filter."""
    return [Candidate(param, "cell", tuple(idx)) for param, idx in _value_groups(field, indices).values()]


def candidate_parameters(field, sigs, focuses, vocab, extra: Sequence[Candidate] = ()) -> list[Candidate]:
    """Union over focuses (plus ``extra``); duplicates of the same value merged."""
    merged: dict = {}
    pools = []
    for f in sorted(focuses, key=lambda d: list(DataFocusCF).index(d)):
        if f in NUMERIC_ONLY_FOCUSES and field.ftype is not FieldType.NUMERIC:
            continue
        pools.append(candidate_parameters_for_focus(field, sigs, f, vocab))
    pools.append(list(extra))
    for pool in pools:
        for cand in pool:
            key = (cand.param.kind, cand.param.value, cand.tag == "k")
            if key in merged:
                old = merged[key]
                merged[key] = Candidate(
                    old.param, old.tag,
                    tuple(sorted(set(old.cells) | set(cand.cells))),
                    tuple(dict.fromkeys(old.derived + cand.derived)),
                )
            else:
                merged[key] = cand
    return list(merged.values())


# --- charts -----------------------------------------------------------------

CHART_INTENTS = {
    ChartType.Pie: UserIntentChart.Cps,
    ChartType.Scatter: UserIntentChart.Rlt,
    ChartType.Bar: UserIntentChart.Cpr,
}
X_FOCUS = (DataFocusChart.Fmt, DataFocusChart.Caf, DataFocusChart.Hsi, DataFocusChart.Fre, DataFocusChart.Fty)
Y_FOCUS = (DataFocusChart.Hsi, DataFocusChart.Rag, DataFocusChart.Fre, DataFocusChart.Fty)


def chart_intents(chart_type: ChartType, x_type: FieldType | None) -> frozenset:
    if chart_type is ChartType.Line:
        return frozenset({UserIntentChart.Ttr if x_type is FieldType.DATETIME else UserIntentChart.Cpr})
    return frozenset({CHART_INTENTS[chart_type]})


# field-type restriction on the x axis, by intent
X_TYPE_BY_INTENT = {
    UserIntentChart.Ttr: FieldType.DATETIME,
    UserIntentChart.Cpr: FieldType.STRING,
    UserIntentChart.Rlt: FieldType.NUMERIC,
}
X_TYPES_BY_CHART = {
    ChartType.Line: (FieldType.DATETIME, FieldType.STRING),
    ChartType.Bar: (FieldType.STRING,),
    ChartType.Scatter: (FieldType.NUMERIC,),
    ChartType.Pie: (),
}


def field_focus_flags(sig: FieldSignature) -> dict[DataFocusChart, bool]:
    return {
        DataFocusChart.Fmt: sig.is_date_format,
        DataFocusChart.Caf: sig.is_common_affix,
        DataFocusChart.Hsi: sig.is_common_header,
        DataFocusChart.Rag: sig.is_common_range,
        DataFocusChart.Fre: sig.is_common_cardinality,
        DataFocusChart.Fty: sig.is_common_type,
    }


def label_semantics_chart(
    chart: AnalysisRecord,
    table: Table,
    field_sigs: Sequence[FieldSignature],
) -> SemanticsLabel:
    n = len(table.fields)
    for i in (*chart.x_fields, *chart.y_fields):
        if not 0 <= i < n:
            raise InvalidAxis(f"axis field {i} out of range for {n} fields")
    x_type = table.fields[chart.x_fields[0]].ftype if chart.x_fields else None
    intents = chart_intents(chart.chart_type, x_type)
    focuses: set = set()
    for i in chart.x_fields:
        flags = field_focus_flags(field_sigs[i])
        focuses |= {d for d in X_FOCUS if flags[d]}
    for i in chart.y_fields:
        flags = field_focus_flags(field_sigs[i])
        focuses |= {d for d in Y_FOCUS if flags[d]}
    return SemanticsLabel(intents, frozenset(focuses))
