"""Recall and precision metrics for CF, chart and semantics predictions.

Undefined ratios (empty denominators) are reported as ``NA`` ("n/a" in
reports), never as zero.
"""
from __future__ import annotations

import enum
import json
import math
from collections import Counter
from typing import Mapping, Sequence

from .errors import KeyMismatch
from .records import ChartType, OperationCF, Param

NA = "n/a"


class MatchPolicy(enum.Enum):
    operation_only = "operation_only"
    parameters_only = "parameters_only"
    complete = "complete"


PARAM_REL_TOL = 1e-9


def _param_multiset_equal(a: Sequence[Param], b: Sequence[Param]) -> bool:
    if len(a) != len(b):
        return False
    left = list(b)
    for p in a:
        for j, q in enumerate(left):
            if p.matches(q, PARAM_REL_TOL):
                del left[j]
                break
        else:
            return False
    return True


def _op_params(x):
    """(operation, params) from a record, a recommendation or a plain pair."""
    if isinstance(x, tuple):
        return x[0], tuple(x[1])
    params = x.params if hasattr(x, "params") else x.parameters
    return x.operation, tuple(params)


def cf_match(pred, gold, policy: MatchPolicy = MatchPolicy.complete) -> bool:
    po, pp = _op_params(pred)
    go, gp = _op_params(gold)
    if policy is MatchPolicy.operation_only:
        return po is go
    if policy is MatchPolicy.parameters_only:
        return _param_multiset_equal(pp, gp)
    return po is go and _param_multiset_equal(pp, gp)


def _check_keys(predictions: Mapping, gold: Mapping):
    if set(predictions) != set(gold):
        missing = sorted(map(str, set(gold) ^ set(predictions)))[:5]
        raise KeyMismatch(f"prediction and gold keys differ (e.g. {missing})")


def recall_at_k_cf(predictions: Mapping, gold: Mapping, k: int, policy: MatchPolicy = MatchPolicy.complete):
    _check_keys(predictions, gold)
    if not gold:
        return NA
    hit = sum(
        any(cf_match(p, g, policy) for p in predictions[key][:k] for g in gold[key])
        for key in gold
    )
    return hit / len(gold)


def per_operation_recall(predictions: Mapping, gold: Mapping, operation: OperationCF):
    _check_keys(predictions, gold)
    keys = [key for key, gs in gold.items() if any(_op_params(g)[0] is operation for g in gs)]
    if not keys:
        return NA
    hit = sum(
        any(cf_match(p, g) for p in predictions[key][:1] for g in gold[key] if _op_params(g)[0] is operation)
        for key in keys
    )
    return hit / len(keys)


def _chart_tuple(x):
    if isinstance(x, tuple):
        return x[0], frozenset(x[1]), frozenset(x[2])
    return x.chart_type, frozenset(x.x_fields), frozenset(x.y_fields)


def chart_match(pred, gold) -> bool:
    return _chart_tuple(pred) == _chart_tuple(gold)


def chart_recall_at_k(predictions: Mapping, gold: Mapping, k: int = 1):
    _check_keys(predictions, gold)
    if not gold:
        return NA
    hit = sum(any(chart_match(p, g) for p in predictions[key][:k] for g in gold[key]) for key in gold)
    return hit / len(gold)


def chart_recall_precision(predictions: Mapping, gold: Mapping, chart_type: ChartType):
    """(R@1, P@1) for one chart type."""
    _check_keys(predictions, gold)
    r_keys = [key for key, gs in gold.items() if any(_chart_tuple(g)[0] is chart_type for g in gs)]
    p_keys = [key for key, ps in predictions.items() if ps and _chart_tuple(ps[0])[0] is chart_type]

    def hit(key):
        return bool(predictions[key]) and any(chart_match(predictions[key][0], g) for g in gold[key])

    recall = sum(hit(key) for key in r_keys) / len(r_keys) if r_keys else NA
    precision = sum(hit(key) for key in p_keys) / len(p_keys) if p_keys else NA
    return recall, precision


def _ranked_pairs(pred) -> list[tuple]:
    """A predicted label is either a ranked list of (intent, focus) pairs or a SemanticsLabel."""
    if hasattr(pred, "intents"):
        return sorted(pred.pairs(), key=lambda t: (t[0].value, t[1].value))
    return list(pred)


def semantics_recall(predicted: Mapping, gold: Mapping, k: int = 1) -> dict:
    """Intent recall at top-1, focus recall and overall (pair) recall at top-k."""
    _check_keys(predicted, gold)
    if not gold:
        return {"overall": NA, "intent": NA, "focus": NA}
    n = len(gold)
    hits = Counter()
    for key, g in gold.items():
        pairs = _ranked_pairs(predicted[key])
        topk = pairs[:k]
        if pairs and pairs[0][0] in g.intents:
            hits["intent"] += 1
        if any(d in g.focuses for _, d in topk):
            hits["focus"] += 1
        if any(p in g.pairs() for p in topk):
            hits["overall"] += 1
    return {name: hits[name] / n for name in ("overall", "intent", "focus")}


# --- reports --------------------------------------------------------------------------

def _fmt(v) -> str:
    if v == NA or v is None:
        return NA
    return f"{100.0 * v:6.2f}"


def metrics_json(metrics: dict) -> str:
    """Canonical, byte-stable JSON for a metrics dictionary."""
    def clean(x):
        if isinstance(x, float):
            return round(x, 12) if math.isfinite(x) else str(x)
        if isinstance(x, dict):
            return {str(k): clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        return x

    return json.dumps(clean(metrics), sort_keys=True, indent=2) + "\n"


def text_report(metrics: dict) -> str:
    """Aligned plain-text tables: overall recall, per-operation / per-chart-type rows, semantics."""
    lines = []
    cf = metrics.get("cf")
    if cf:
        lines.append("Conditional formatting (field level, %)")
        lines.append(f"  {'policy':<16}{'R@1':>8}{'R@3':>8}")
        for pol in ("complete", "operation_only", "parameters_only"):
            row = cf["recall"][pol]
            lines.append(f"  {pol:<16}{_fmt(row['1']):>8}{_fmt(row['3']):>8}")
        lines.append(f"  {'operation':<16}{'R@1':>8}{'n':>8}")
        for op, row in cf["per_operation"].items():
            lines.append(f"  {op:<16}{_fmt(row['R@1']):>8}{row['n']:>8}")
        sem = cf.get("semantics")
        if isinstance(sem, dict):
            lines.append(f"  semantics R@1: overall {_fmt(sem['overall'])}  intent {_fmt(sem['intent'])}"
                         f"  focus {_fmt(sem['focus'])}")
    ch = metrics.get("chart")
    if ch:
        lines.append("Charts (table level, %)")
        lines.append(f"  {'type':<16}{'R@1':>8}{'P@1':>8}")
        for t, row in ch["per_type"].items():
            lines.append(f"  {t:<16}{_fmt(row['R@1']):>8}{_fmt(row['P@1']):>8}")
        lines.append(f"  {'overall':<16}{_fmt(ch['recall']['1']):>8}{'':>8}")
    return "\n".join(lines) + "\n"
