"""Ranked CF and chart recommendations with semantics-guided pruning and
one-sentence explanations."""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .config import Settings, default_settings
from .conditions import is_executable
from .embeddings import EmbeddingProvider, HashedNGramEmbedder
from .errors import NoNumericField
from .model import TrainedModel, forward_cf, forward_chart
from .model.features import FieldContext
from .model.loss import sigmoid
from .records import (
    NUMERIC_ONLY_FOCUSES,
    NUMERIC_OPS,
    OPERATIONS,
    ChartType,
    DataFocusCF,
    DataFocusChart,
    OperationCF,
    Param,
    SemanticsLabel,
    UserIntentCF,
    UserIntentChart,
    arity,
)
from .semantics import (
    Candidate,
    X_TYPES_BY_CHART,
    candidate_operations,
    candidate_parameters,
    cell_value_candidates,
    chart_intents,
)
from .table import FieldType, Table, format_number

DECODE_THRESHOLD = 0.5


@dataclass
class CFRecommendation:
    operation: OperationCF
    parameters: list[tuple[Param, str]]  # (value, provenance tag)
    score: float
    semantics: SemanticsLabel | None
    table_id: str = ""
    field_index: int = -1
    header: str = ""
    explanation: str = ""

    @property
    def params(self) -> tuple[Param, ...]:
        return tuple(p for p, _ in self.parameters)

    def sort_key(self):
        return (-self.score, self.operation.order, tuple(p.sort_key() for p in self.params))

    def to_json(self, explain: bool = False) -> dict:
        d = {
            "table_id": self.table_id,
            "field_index": self.field_index,
            "operation": self.operation.value,
            "parameters": [{**p.to_json(), "source": tag} for p, tag in self.parameters],
            "score": self.score,
            "semantics": self.semantics.to_json() if self.semantics else None,
        }
        if explain:
            d["explanation"] = self.explanation or explain_text(self)
        return d


@dataclass
class ChartRecommendation:
    chart_type: ChartType
    x_fields: list[int]
    y_fields: list[int]
    score: float
    semantics: SemanticsLabel | None
    table_id: str = ""
    headers: list[str] = dc_field(default_factory=list)
    explanation: str = ""

    def to_json(self, explain: bool = False) -> dict:
        d = {
            "table_id": self.table_id,
            "chart_type": self.chart_type.value,
            "x_fields": list(self.x_fields),
            "y_fields": list(self.y_fields),
            "score": self.score,
            "semantics": self.semantics.to_json() if self.semantics else None,
        }
        if explain:
            d["explanation"] = self.explanation or explain_text(self)
        return d


# --- CF decoding -----------------------------------------------------------------

def accepts(op: OperationCF, cand: Candidate) -> bool:
    """Whether a candidate can fill a parameter slot of ``op``."""
    if op is OperationCF.IsError:
        return cand.tag == "error"
    if op is OperationCF.IsBlank:
        return cand.tag == "blank"
    if op is OperationCF.TopBottomK:
        return cand.tag == "k"
    if op is OperationCF.IsDuplicate:
        return False
    if op in NUMERIC_OPS:
        return cand.param.kind == "number" and cand.tag != "k"
    return cand.param.kind in ("number", "text") and cand.tag not in ("k", "error")


def _source_tag(cand: Candidate) -> str:
    if cand.tag == "cell" and not cand.cells and cand.derived:
        return cand.derived[0]
    return cand.tag


def candidate_probability(cand: Candidate, ctx: FieldContext, ref_probs: np.ndarray) -> float | None:
    """Max reference probability over the tokens a candidate points at; None if it has none."""
    cpos, dpos = ctx.cell_positions(), ctx.derived_positions()
    pos = [cpos[i] for i in cand.cells if i in cpos] + [dpos[n] for n in cand.derived if n in dpos]
    if not pos:
        return None
    return float(max(ref_probs[p] for p in pos))


@dataclass
class DecodedField:
    """Everything the top-k search needs: allowed operations with their
    probabilities and, per operation, the scored parameter pool."""

    semantics: SemanticsLabel | None
    op_probs: dict  # OperationCF -> float
    pools: dict  # OperationCF -> list[(Param, tag, prob)]
    arity: dict  # OperationCF -> int
    ctx: FieldContext


def decode_semantics_cf(logits: dict, field_type: FieldType) -> SemanticsLabel:
    intent = list(UserIntentCF)[int(np.argmax(logits["intent"]))]
    fp = sigmoid(logits["focus"])
    focuses = list(DataFocusCF)
    ok = [field_type is FieldType.NUMERIC or d not in NUMERIC_ONLY_FOCUSES for d in focuses]
    chosen = {d for d, p, good in zip(focuses, fp, ok) if good and p > DECODE_THRESHOLD}
    if not chosen:
        best = max((p, -j) for j, (p, good) in enumerate(zip(fp, ok)) if good)
        chosen = {focuses[-best[1]]}
    return SemanticsLabel(frozenset({intent}), frozenset(chosen))


def decode_cf(model: TrainedModel, table: Table, field_index: int, settings: Settings,
              provider: EmbeddingProvider, multi_arity: int | None = None) -> DecodedField:
    logits, ctx = forward_cf(model, table, field_index, provider, settings)
    f = ctx.field
    no_sem = model.config.ablation.no_semantics
    if no_sem:
        sem = None
        allowed = list(OPERATIONS)
        focuses = [d for d in DataFocusCF if f.ftype is FieldType.NUMERIC or d not in NUMERIC_ONLY_FOCUSES]
    else:
        sem = decode_semantics_cf(logits, f.ftype)
        allowed = candidate_operations(sem.intent, sem.focuses, settings.focus_map)
        focuses = sem.focuses
    # without semantics nothing is pruned: every sampled cell value is a candidate too
    extra = cell_value_candidates(f, ctx.sampled) if no_sem else ()
    cands = candidate_parameters(f, ctx.sigs, focuses, settings.vocab, extra)
    ref_probs = sigmoid(logits["reference"]) if len(logits["reference"]) else np.zeros(0)
    scored = []
    for c in cands:
        p = candidate_probability(c, ctx, ref_probs)
        if p is not None:
            scored.append((c, p))
    op_p = sigmoid(logits["operation"])
    multi = multi_arity or model.config.multi_arity
    op_probs, pools, arities = {}, {}, {}
    for op in sorted(allowed, key=lambda o: o.order):
        m = arity(op, multi)
        pool = [(c.param, _source_tag(c), p) for c, p in scored if accepts(op, c)]
        if m > len(pool):
            continue
        op_probs[op] = float(op_p[op.order])
        pools[op] = pool
        arities[op] = m
    return DecodedField(sem, op_probs, pools, arities, ctx)


def canonical(chosen: Sequence[tuple[Param, str, float]]) -> list:
    """Parameters in output order; scores are multiplied in this order."""
    return sorted(chosen, key=lambda t: (t[0].sort_key(), t[1]))


def combo_score(op_prob: float, items) -> float:
    s = op_prob
    for _, _, p in items:
        s *= p
    return s


def _make_rec(op, items, score, dec: DecodedField, table: Table, field_index: int) -> CFRecommendation:
    return CFRecommendation(
        op, [(p, tag) for p, tag, _ in items], score, dec.semantics,
        table.id, field_index, table.fields[field_index].header,
    )


def _best_combos(op: OperationCF, dec: DecodedField, k: int, field) -> list[tuple[float, list]]:
    """Executable parameter sets of ``op`` in non-increasing score order, at
    least ``k`` of them plus any that tie with the k-th."""
    op_prob, m = dec.op_probs[op], dec.arity[op]
    if m == 0:
        return [(op_prob, [])] if is_executable(op, (), field) else []
    pool = sorted(dec.pools[op], key=lambda t: (-t[2], t[0].sort_key(), t[1]))
    probs = [t[2] for t in pool]

    def bound(idx):
        s = op_prob
        for i in idx:
            s *= probs[i]
        return s

    start = tuple(range(m))
    heap = [(-bound(start), start)]
    seen = {start}
    out: list[tuple[float, list]] = []
    kth = None
    while heap:
        neg, idx = heapq.heappop(heap)
        if kth is not None and -neg < kth * (1 - 1e-9):
            break
        items = canonical([pool[i] for i in idx])
        params = [p for p, _, _ in items]
        if is_executable(op, params, field):
            out.append((combo_score(op_prob, items), items))
            if len(out) == k:
                kth = min(s for s, _ in out)
        for j in range(m):
            nxt = list(idx)
            nxt[j] += 1
            if nxt[j] >= len(pool) or (j + 1 < m and nxt[j] == idx[j + 1]):
                continue
            nxt = tuple(nxt)
            if nxt not in seen:
                seen.add(nxt)
                heapq.heappush(heap, (-bound(nxt), nxt))
    return out


def rank_decoded(dec: DecodedField, table: Table, field_index: int, k: int) -> list[CFRecommendation]:
    field = table.fields[field_index]
    recs = []
    for op in dec.op_probs:
        for score, items in _best_combos(op, dec, k, field):
            recs.append(_make_rec(op, items, score, dec, table, field_index))
    recs.sort(key=CFRecommendation.sort_key)
    return recs[:k]


def recommend_cf(model: TrainedModel, table: Table, field_index: int, k: int = 3,
                 settings: Settings | None = None, provider: EmbeddingProvider | None = None,
                 multi_arity: int | None = None, explain: bool = False) -> list[CFRecommendation]:
    settings = settings or default_settings()
    provider = provider or default_provider(model)
    table.field(field_index)
    dec = decode_cf(model, table, field_index, settings, provider, multi_arity)
    recs = rank_decoded(dec, table, field_index, k)
    if explain:
        for r in recs:
            r.explanation = explain_text(r)
    return recs


def default_provider(model: TrainedModel) -> EmbeddingProvider:
    return HashedNGramEmbedder(dim=model.config.e)


# --- charts ------------------------------------------------------------------------

def decode_semantics_chart(logits: dict, chart_type: ChartType, x_type: FieldType | None) -> SemanticsLabel:
    fp = sigmoid(logits["focus"])
    focuses = {d for d, p in zip(DataFocusChart, fp) if p > DECODE_THRESHOLD}
    if not focuses:
        focuses = {list(DataFocusChart)[int(np.argmax(fp))]}
    return SemanticsLabel(chart_intents(chart_type, x_type), frozenset(focuses))


def recommend_chart(model: TrainedModel, table: Table, k: int = 3, settings: Settings | None = None,
                    provider: EmbeddingProvider | None = None, explain: bool = False) -> list[ChartRecommendation]:
    settings = settings or default_settings()
    provider = provider or default_provider(model)
    logits, _ = forward_chart(model, table, provider, settings)
    numeric = [f.index for f in table.fields if f.ftype is FieldType.NUMERIC]
    if not numeric:
        raise NoNumericField(f"table {table.id!r} has no numeric field for a y axis")
    type_p = sigmoid(logits["operation"])
    px = sigmoid(logits["axis"][:, 0])
    py = sigmoid(logits["axis"][:, 1])
    recs = []
    for ct in ChartType:
        allowed_x = X_TYPES_BY_CHART[ct]
        x: list[int] = []
        score = float(type_p[list(ChartType).index(ct)])
        if allowed_x:
            xs = [f.index for f in table.fields if f.ftype in allowed_x]
            if not xs:
                continue
            best = max(xs, key=lambda i: (px[i], -i))
            x = [best]
            score *= float(px[best])
        ys = [i for i in numeric if i not in x]
        if not ys:
            continue
        y = [i for i in ys if py[i] > DECODE_THRESHOLD] or [max(ys, key=lambda i: (py[i], -i))]
        score *= float(np.mean([py[i] for i in y]))
        x_type = table.fields[x[0]].ftype if x else None
        recs.append(ChartRecommendation(
            ct, x, y, score, decode_semantics_chart(logits, ct, x_type), table.id, table.headers,
        ))
    recs.sort(key=lambda r: (-r.score, list(ChartType).index(r.chart_type)))
    recs = recs[:k]
    if explain:
        for r in recs:
            r.explanation = explain_text(r)
    return recs


# --- explanations --------------------------------------------------------------------

INTENT_VERB = {UserIntentCF.Det: "Detect", UserIntentCF.Com: "Compare"}
FOCUS_PHRASE = {
    DataFocusCF.Err: "error cells",
    DataFocusCF.Bla: "blank cells",
    DataFocusCF.Mea: "meaningless values",
    DataFocusCF.Emp: "empirical values",
    DataFocusCF.Rak: "rank-aware values",
    DataFocusCF.Rag: "range-aware values",
    DataFocusCF.Fre: "frequent values",
}


def _v(p: Param) -> str:
    if p.kind == "number":
        return format_number(round(p.value, 4)) if abs(p.value) < 1e12 else format_number(p.value)
    return f'"{p.value}"'


def _op_phrase(op: OperationCF, params: Sequence[Param]) -> str:
    vals = [_v(p) for p in params]
    joined = ", ".join(vals)
    if op is OperationCF.IsError:
        return f"highlight the error cells{f' ({params[0].value})' if params else ''} of this field"
    if op is OperationCF.IsBlank:
        return "highlight the blank cells of this field"
    if op is OperationCF.IsDuplicate:
        return "highlight the duplicated values of this field"
    if op is OperationCF.TopBottomK:
        return f"highlight the top {int(params[0].value)} records of this numeric field"
    if op is OperationCF.LessGreaterThan:
        return f"highlight values above and below {vals[0]}"
    if op is OperationCF.Between:
        return f"highlight values between {vals[0]} and {vals[1]}"
    if op is OperationCF.EqualContains:
        return f"highlight cells equal to or containing {vals[0]}"
    if op is OperationCF.EqualSet:
        return f"give each of {joined} its own format"
    if op is OperationCF.DataBar:
        return f"draw data bars scaled across {joined}"
    if op is OperationCF.ColorScale:
        return f"color the cells on a scale through {joined}"
    if op is OperationCF.IconSet:
        return f"assign icons by the thresholds {joined}"
    return f"partition the values at {joined}"


CHART_NAME = {ChartType.Bar: "bar", ChartType.Line: "line", ChartType.Scatter: "scatter", ChartType.Pie: "pie"}


def _names(headers, idx) -> str:
    return " and ".join(f'"{headers[i]}"' if i < len(headers) else f"field {i}" for i in idx)


def explain_text(rec) -> str:
    if isinstance(rec, CFRecommendation):
        action = _op_phrase(rec.operation, rec.params)
        if rec.semantics is None:
            return action[0].upper() + action[1:]
        verb = INTENT_VERB[rec.semantics.intent]
        focus = " and ".join(FOCUS_PHRASE[d] for d in DataFocusCF if d in rec.semantics.focuses)
        return f"{verb} {focus}: {action}"
    ys = _names(rec.headers, rec.y_fields)
    xs = _names(rec.headers, rec.x_fields)
    kind = CHART_NAME[rec.chart_type]
    intents = rec.semantics.intents if rec.semantics else chart_intents(rec.chart_type, None)
    if UserIntentChart.Ttr in intents:
        return f"Show the time trend of {ys} over {xs} with a {kind} chart"
    if UserIntentChart.Cps in intents:
        return f"Show the composition of {ys} with a {kind} chart"
    if UserIntentChart.Rlt in intents:
        return f"Show the relation between {xs} and {ys} with a {kind} chart"
    return f"Compare {ys} across {xs} with a {kind} chart"


def explain(rec) -> str:
    return explain_text(rec)


def to_jsonl(recs, explain: bool = False) -> str:
    return "".join(json.dumps(r.to_json(explain), sort_keys=True) + "\n" for r in recs)
