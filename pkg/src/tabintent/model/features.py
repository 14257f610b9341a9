"""Turn tables and gold records into padded model inputs and label tensors.

A CF example is one field: the field token followed by its sampled cells
and, for numeric fields, virtual tokens for derived statistics (mean,
midpoint, in-range empirical values) so that non-cell parameters can be
scored by the reference head like cells.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..config import Settings
from ..embeddings import EmbeddingProvider, embed_cell, embed_field_context, embed_text
from ..records import (
    AnalysisRecord,
    ChartType,
    DataFocusCF,
    DataFocusChart,
    OperationCF,
    SemanticsLabel,
    UserIntentCF,
    UserIntentChart,
)
from ..semantics import derived_values, label_semantics_cf, label_semantics_chart
from ..signatures import (
    FIELD_SIGNATURE_DIM,
    FLAG_NAMES,
    CellSignature,
    compute_cell_signatures,
    compute_field_signatures,
    log_range_exponent,
    range_stats,
    sample_cells,
)
from ..table import CellKind, Field, Table, format_number
from .config import Ablation
from .network import CELL_FEATURE_DIM, TOKEN_CELL, TOKEN_FIELD, TOKEN_TABLE, Batch

PROVENANCE = ("cell", "mean", "midpoint", "emp")
_META_OFFSET = FIELD_SIGNATURE_DIM - 13


def _slog(x):
    return np.sign(x) * np.log1p(np.abs(x))


def field_signature_vector(sig) -> np.ndarray:
    v = sig.as_array()
    v[_META_OFFSET:] = _slog(v[_META_OFFSET:])
    return v


def cell_feature_vector(sig: CellSignature, provenance: str = "cell") -> np.ndarray:
    inv = lambda r: 1.0 / r if r else 0.0  # noqa: E731
    head = [
        math.log1p(sig.freq_count), sig.freq_ratio, inv(sig.freq_rank),
        inv(sig.asc_rank), inv(sig.desc_rank),
        sig.range_minmax, sig.range_log, sig.percentile_minmax,
    ]
    flags = [float(getattr(sig, n)) for n in FLAG_NAMES]
    prov = [float(provenance == p) for p in PROVENANCE]
    v = np.array(head + flags + prov, dtype=np.float64)
    assert v.shape == (CELL_FEATURE_DIM,)
    return v


def derived_signature(field: Field, value: float, is_empirical: bool) -> CellSignature:
    """Signature-like description of a value that is not a cell of the field."""
    nums = field.numbers()
    st = range_stats(nums)
    scale = 10.0 ** log_range_exponent(st.lo, st.hi)
    below = sum(x < value for x in nums)
    return CellSignature(
        range_minmax=(value - st.lo) / st.spread if st.spread > 0 else 0.0,
        range_log=(value - scale) / (2.0 * scale),
        percentile_minmax=below / len(nums),
        is_common_range=st.is_range_value(value) or not is_empirical,
        is_empirical=is_empirical,
    )


def _provenance(name: str) -> str:
    return "emp" if name.startswith("emp:") else name


@dataclass
class FieldContext:
    """Per-field analysis shared by featurization, labeling and recommendation."""

    table: Table
    field_index: int
    sigs: list
    sampled: list  # cell indices
    derived: dict  # name -> value

    @property
    def field(self) -> Field:
        return self.table.fields[self.field_index]

    @property
    def tokens(self) -> list[tuple[str, object]]:
        return [("cell", i) for i in self.sampled] + [("derived", n) for n in self.derived]

    def cell_positions(self) -> dict[int, int]:
        return {i: p for p, i in enumerate(self.sampled)}

    def derived_positions(self) -> dict[str, int]:
        off = len(self.sampled)
        return {n: off + p for p, n in enumerate(self.derived)}


def field_context(table: Table, field_index: int, settings: Settings, cap: int = 64) -> FieldContext:
    f = table.field(field_index)
    sigs = compute_cell_signatures(f, settings.vocab)
    return FieldContext(table, field_index, sigs, sample_cells(f, sigs, cap), derived_values(f, settings.vocab))


@dataclass
class CFExample:
    table_id: str
    field_index: int
    first: np.ndarray  # (e + |S|,)
    rest: np.ndarray  # (n_tokens, e + CELL_FEATURE_DIM)
    labels: dict | None = None
    semantics: SemanticsLabel | None = None

    @property
    def length(self) -> int:
        return 1 + len(self.rest)


@dataclass
class ChartExample:
    table_id: str
    rest: np.ndarray  # (n_fields, e + |S|)
    labels: dict | None = None
    semantics: SemanticsLabel | None = None

    @property
    def length(self) -> int:
        return 1 + len(self.rest)


def cf_inputs(ctx: FieldContext, provider: EmbeddingProvider, settings: Settings):
    f = ctx.field
    fsig = compute_field_signatures(ctx.table, ctx.field_index, settings.vocab,
                                    settings.keywords_x, settings.keywords_y)
    first = np.concatenate([embed_field_context(provider, ctx.table, ctx.field_index),
                            field_signature_vector(fsig)])
    rows = []
    for i in ctx.sampled:
        rows.append(np.concatenate([embed_cell(provider, f.cells[i]), cell_feature_vector(ctx.sigs[i])]))
    for name, value in ctx.derived.items():
        prov = _provenance(name)
        sig = derived_signature(f, value, prov == "emp")
        rows.append(np.concatenate([embed_text(provider, format_number(value)), cell_feature_vector(sig, prov)]))
    width = provider.dimension() + CELL_FEATURE_DIM
    rest = np.vstack(rows) if rows else np.zeros((0, width))
    return first, rest


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


def reference_targets(ctx: FieldContext, record: AnalysisRecord) -> set[int]:
    """Token positions a gold record refers to."""
    f, sigs = ctx.field, ctx.sigs
    cpos, dpos = ctx.cell_positions(), ctx.derived_positions()
    op = record.operation
    hits: set[int] = set()
    if op is OperationCF.IsDuplicate:
        return hits
    if op is OperationCF.IsBlank:
        return {p for i, p in cpos.items() if f.cells[i].kind is CellKind.BLANK}
    if op is OperationCF.IsError:
        want = record.parameters[0].value if record.parameters else None
        return {p for i, p in cpos.items() if f.cells[i].kind is CellKind.ERROR
                and (want is None or f.cells[i].raw.strip() == want)}
    if op is OperationCF.TopBottomK:
        k = int(record.parameters[0].value)
        return {p for i, p in cpos.items() if sigs[i].desc_rank == k}
    for prm in record.parameters:
        for i, p in cpos.items():
            c = f.cells[i]
            if prm.kind == "number" and c.kind is CellKind.NUMBER and _close(c.value, prm.value):
                hits.add(p)
            elif prm.kind == "text" and c.kind not in (CellKind.NUMBER, CellKind.BLANK) \
                    and c.raw.strip() == prm.value:
                hits.add(p)
        if prm.kind == "number":
            hits |= {p for n, p in dpos.items() if _close(ctx.derived[n], prm.value)}
    return hits


def _onehot(members, universe) -> np.ndarray:
    return np.array([float(u in members) for u in universe])


def cf_example(
    table: Table,
    field_index: int,
    records: Sequence[AnalysisRecord],
    provider: EmbeddingProvider,
    settings: Settings,
    cap: int = 64,
) -> CFExample:
    ctx = field_context(table, field_index, settings, cap)
    first, rest = cf_inputs(ctx, provider, settings)
    ex = CFExample(table.id, field_index, first, rest)
    if records:
        sem = label_semantics_cf(records, ctx.field, ctx.sigs, settings.vocab)
        ref = np.zeros((len(rest), 1))
        for r in records:
            for p in reference_targets(ctx, r):
                ref[p, 0] = 1.0
        ex.semantics = sem
        ex.labels = {
            "intent": _onehot(sem.intents, list(UserIntentCF)),
            "focus": _onehot(sem.focuses, list(DataFocusCF)),
            "operation": _onehot({r.operation for r in records}, list(OperationCF)),
            "reference": ref,
        }
    return ex


def chart_inputs(table: Table, provider: EmbeddingProvider, settings: Settings):
    sigs = [compute_field_signatures(table, i, settings.vocab, settings.keywords_x, settings.keywords_y)
            for i in range(len(table.fields))]
    rest = np.vstack([
        np.concatenate([embed_field_context(provider, table, i), field_signature_vector(s)])
        for i, s in enumerate(sigs)
    ])
    return rest, sigs


def chart_example(
    table: Table,
    charts: Sequence[AnalysisRecord],
    provider: EmbeddingProvider,
    settings: Settings,
) -> ChartExample:
    rest, sigs = chart_inputs(table, provider, settings)
    ex = ChartExample(table.id, rest)
    if charts:
        intents, focuses = set(), set()
        axes = np.zeros((len(table.fields), 2))
        for c in charts:
            lab = label_semantics_chart(c, table, sigs)
            intents |= lab.intents
            focuses |= lab.focuses
            axes[list(c.x_fields), 0] = 1.0
            axes[list(c.y_fields), 1] = 1.0
        ex.semantics = SemanticsLabel(frozenset(intents), frozenset(focuses))
        ex.labels = {
            "intent": _onehot(intents, list(UserIntentChart)),
            "focus": _onehot(focuses, list(DataFocusChart)),
            "operation": _onehot({c.chart_type for c in charts}, list(ChartType)),
            "reference": axes,
        }
    return ex


def apply_ablation(x: np.ndarray, e: int, ablation: Ablation) -> np.ndarray:
    """Zero the embedding part (first ``e`` columns) and/or the signature part."""
    if not (ablation.no_linguistic or ablation.no_statistical):
        return x
    x = np.array(x, dtype=np.float64, copy=True)
    if ablation.no_linguistic:
        x[..., :e] = 0.0
    if ablation.no_statistical:
        x[..., e:] = 0.0
    return x


def collate(examples: Sequence, e: int, ablation: Ablation = Ablation()) -> Batch:
    """Pad a list of CF or chart examples into one batch."""
    mode = "cf" if isinstance(examples[0], CFExample) else "chart"
    B = len(examples)
    T = max(ex.length for ex in examples)
    width = examples[0].rest.shape[1]
    rest = np.zeros((B, T - 1, width))
    mask = np.zeros((B, T), dtype=bool)
    types = np.full((B, T), TOKEN_CELL if mode == "cf" else TOKEN_FIELD, dtype=np.int64)
    types[:, 0] = TOKEN_FIELD if mode == "cf" else TOKEN_TABLE
    for b, ex in enumerate(examples):
        n = len(ex.rest)
        rest[b, :n] = ex.rest
        mask[b, : n + 1] = True
    first = None
    if mode == "cf":
        first = apply_ablation(np.vstack([ex.first for ex in examples]), e, ablation)
    batch = Batch(mode, first, apply_ablation(rest, e, ablation), mask, types)
    if all(ex.labels is not None for ex in examples):
        labels = {k: np.vstack([ex.labels[k][None] for ex in examples]) for k in ("intent", "focus", "operation")}
        nr = examples[0].labels["reference"].shape[1]
        ref = np.zeros((B, T - 1, nr))
        for b, ex in enumerate(examples):
            ref[b, : len(ex.rest)] = ex.labels["reference"]
        labels["reference"] = ref
        batch.labels = labels
    return batch
