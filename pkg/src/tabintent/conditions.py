"""Execute conditional-formatting conditions against a field.

Each operation induces a partition of the field's cells into groups; a
record is executable when its arity and parameter types are right and
the partition is non-degenerate (at least two non-empty groups). Is Error
and Is Blank may legitimately select nothing.
"""
from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

from .records import MULTI_BUCKET, NUMERIC_OPS, OperationCF, Param, arity_ok
from .signatures import value_key
from .table import CellKind, Field, FieldType


def _num_cells(field: Field) -> list[tuple[int, float]]:
    return [(i, c.value) for i, c in enumerate(field.cells) if c.kind is CellKind.NUMBER]


def _matches_cell(param: Param, cell) -> bool:
    if param.kind == "number":
        return cell.kind is CellKind.NUMBER and math.isclose(cell.value, param.value, rel_tol=1e-9, abs_tol=1e-12)
    if param.kind == "text":
        if cell.kind in (CellKind.BLANK, CellKind.NUMBER):
            return False
        raw = cell.raw.strip()
        return raw == param.value or (bool(param.value) and param.value.lower() in raw.lower())
    if param.kind == "blank":
        return cell.kind is CellKind.BLANK
    return False


def partition(op: OperationCF, params: Sequence[Param], field: Field) -> list[list[int]]:
    """Cell-index groups induced by the condition; the first group is the primary selection."""
    cells = field.cells
    if op is OperationCF.IsError:
        sel = [i for i, c in enumerate(cells) if c.kind is CellKind.ERROR
               and (not params or params[0].kind != "text" or c.raw.strip() == params[0].value)]
        return [sel, [i for i in range(len(cells)) if i not in set(sel)]]
    if op is OperationCF.IsBlank:
        sel = [i for i, c in enumerate(cells) if c.kind is CellKind.BLANK]
        return [sel, [i for i in range(len(cells)) if i not in set(sel)]]
    if op is OperationCF.IsDuplicate:
        keys = [value_key(c) if c.kind is not CellKind.BLANK else None for c in cells]
        cnt = Counter(k for k in keys if k is not None)
        dup = [i for i, k in enumerate(keys) if k is not None and cnt[k] > 1]
        rest = [i for i, k in enumerate(keys) if k is not None and cnt[k] == 1]
        return [dup, rest]
    if op is OperationCF.TopBottomK:
        nums = _num_cells(field)
        k = int(params[0].value)
        order = sorted(nums, key=lambda t: -t[1])
        return [[i for i, _ in order[:k]], [i for i, _ in order[k:]]]
    if op is OperationCF.LessGreaterThan:
        p = params[0].value
        nums = _num_cells(field)
        return [
            [i for i, v in nums if v > p],
            [i for i, v in nums if v == p],
            [i for i, v in nums if v < p],
        ]
    if op is OperationCF.Between:
        lo, hi = sorted(q.value for q in params)
        nums = _num_cells(field)
        return [[i for i, v in nums if lo <= v <= hi], [i for i, v in nums if not lo <= v <= hi]]
    if op is OperationCF.EqualContains:
        sel = [i for i, c in enumerate(cells) if _matches_cell(params[0], c)]
        chosen = set(sel)
        return [sel, [i for i, c in enumerate(cells) if c.kind is not CellKind.BLANK and i not in chosen]]
    if op is OperationCF.EqualSet:
        groups, used = [], set()
        for p in params:
            g = [i for i, c in enumerate(cells) if i not in used and _matches_cell(p, c)]
            used.update(g)
            groups.append(g)
        groups.append([i for i, c in enumerate(cells) if c.kind is not CellKind.BLANK and i not in used])
        return groups
    # multi-bucket numeric scales
    cuts = sorted(q.value for q in params)
    nums = _num_cells(field)
    groups = [[] for _ in range(len(cuts) + 1)]
    for i, v in nums:
        b = sum(v >= c for c in cuts)
        groups[b].append(i)
    return groups


def params_typed_ok(op: OperationCF, params: Sequence[Param], field: Field) -> bool:
    if not arity_ok(op, len(params)):
        return False
    if op in NUMERIC_OPS:
        if field.ftype is not FieldType.NUMERIC or any(p.kind != "number" for p in params):
            return False
    if op is OperationCF.TopBottomK:
        p = params[0]
        if field.ftype is not FieldType.NUMERIC or p.kind != "number" or p.value != int(p.value):
            return False
    if op is OperationCF.IsBlank and params[0].kind != "blank":
        return False
    if op is OperationCF.IsError and params[0].kind != "text":
        return False
    if op in (OperationCF.EqualContains, OperationCF.EqualSet) and any(
        p.kind not in ("number", "text") for p in params
    ):
        return False
    if op in MULTI_BUCKET or op is OperationCF.Between:
        vals = [p for p in params]
        for a in range(len(vals)):
            for b in range(a + 1, len(vals)):
                if vals[a].matches(vals[b]):
                    return False
    return True


def is_executable(op: OperationCF, params: Sequence[Param], field: Field) -> bool:
    if not params_typed_ok(op, params, field):
        return False
    if op in (OperationCF.IsError, OperationCF.IsBlank):
        return True
    if op is OperationCF.TopBottomK:
        k = int(params[0].value)
        return 1 <= k < len(_num_cells(field))
    groups = partition(op, params, field)
    return sum(1 for g in groups if g) >= 2


def selected_cells(op: OperationCF, params: Sequence[Param], field: Field) -> list[int]:
    return partition(op, params, field)[0]
