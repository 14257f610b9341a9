"""Action-space enums and analysis records shared by every module."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field
from typing import Any


class OperationCF(enum.Enum):
    IsError = "IsError"
    IsBlank = "IsBlank"
    IsDuplicate = "IsDuplicate"
    LessGreaterThan = "LessGreaterThan"
    TopBottomK = "TopBottomK"
    Between = "Between"
    EqualContains = "EqualContains"
    EqualSet = "EqualSet"
    DataBar = "DataBar"
    ColorScale = "ColorScale"
    IconSet = "IconSet"
    PartitionSet = "PartitionSet"

    @property
    def order(self) -> int:
        return _OP_ORDER[self]


OPERATIONS = tuple(OperationCF)
_OP_ORDER = {op: i for i, op in enumerate(OPERATIONS)}

# operations whose arity is ">= 2"
MULTI_BUCKET = frozenset({
    OperationCF.EqualSet, OperationCF.DataBar, OperationCF.ColorScale,
    OperationCF.IconSet, OperationCF.PartitionSet,
})
# operations whose parameters must be numbers
NUMERIC_OPS = frozenset({
    OperationCF.LessGreaterThan, OperationCF.Between, OperationCF.DataBar,
    OperationCF.ColorScale, OperationCF.IconSet, OperationCF.PartitionSet,
})
DEFAULT_MULTI_ARITY = 2
MAX_MULTI_ARITY = 4


def arity(op: OperationCF, multi: int = DEFAULT_MULTI_ARITY) -> int:
    if op is OperationCF.IsDuplicate:
        return 0
    if op is OperationCF.Between:
        return 2
    if op in MULTI_BUCKET:
        return multi
    return 1


def arity_ok(op: OperationCF, n_params: int) -> bool:
    if op in MULTI_BUCKET:
        return 2 <= n_params
    return n_params == arity(op)


class UserIntentCF(enum.Enum):
    Det = "Det"
    Com = "Com"


class DataFocusCF(enum.Enum):
    Err = "Err"
    Bla = "Bla"
    Mea = "Mea"
    Emp = "Emp"
    Rak = "Rak"
    Rag = "Rag"
    Fre = "Fre"


NUMERIC_ONLY_FOCUSES = frozenset({DataFocusCF.Rak, DataFocusCF.Rag, DataFocusCF.Emp})


class ChartType(enum.Enum):
    Bar = "Bar"
    Line = "Line"
    Scatter = "Scatter"
    Pie = "Pie"


class UserIntentChart(enum.Enum):
    Rlt = "Rlt"
    Cps = "Cps"
    Cpr = "Cpr"
    Ttr = "Ttr"


class DataFocusChart(enum.Enum):
    Fmt = "Fmt"
    Caf = "Caf"
    Hsi = "Hsi"
    Rag = "Rag"
    Fre = "Fre"
    Fty = "Fty"


@dataclass(frozen=True)
class Param:
    """A typed parameter value: ``number``, ``text``, ``blank`` or ``marker``."""

    kind: str
    value: Any = ""

    @classmethod
    def number(cls, x: float) -> "Param":
        return cls("number", float(x))

    @classmethod
    def text(cls, s: str) -> "Param":
        return cls("text", str(s))

    @classmethod
    def blank(cls) -> "Param":
        return cls("blank", "")

    def matches(self, other: "Param", rel_tol: float = 1e-9) -> bool:
        if self.kind != other.kind:
            return False
        if self.kind == "number":
            return math.isclose(self.value, other.value, rel_tol=rel_tol, abs_tol=1e-12)
        return self.value == other.value

    def sort_key(self) -> tuple:
        if self.kind == "number":
            return (0, self.value, "")
        return (1, 0.0, f"{self.kind}:{self.value}")

    def to_json(self) -> dict:
        return {"type": self.kind, "value": self.value}

    @classmethod
    def from_json(cls, d: dict) -> "Param":
        kind = d["type"]
        value = float(d["value"]) if kind == "number" else str(d.get("value", ""))
        return cls(kind, value)


@dataclass(frozen=True)
class AnalysisRecord:
    table_id: str
    kind: str  # "CF" or "Chart"
    field_index: int | None = None
    operation: OperationCF | None = None
    parameters: tuple[Param, ...] = ()
    rows: tuple[int, int] | None = None  # applied row span [start, end); None = whole field
    coverage: float = 1.0
    chart_type: ChartType | None = None
    x_fields: tuple[int, ...] = ()
    y_fields: tuple[int, ...] = ()

    @classmethod
    def cf(cls, table_id, field_index, operation, parameters=(), rows=None, coverage=1.0):
        return cls(table_id, "CF", field_index, operation, tuple(parameters), rows, coverage)

    @classmethod
    def chart(cls, table_id, chart_type, x_fields, y_fields):
        return cls(table_id, "Chart", chart_type=chart_type,
                   x_fields=tuple(x_fields), y_fields=tuple(y_fields))

    @property
    def is_cf(self) -> bool:
        return self.kind == "CF"

    def to_json(self) -> dict:
        d: dict[str, Any] = {"doc": "record", "table_id": self.table_id, "kind": self.kind}
        if self.is_cf:
            d.update(
                field_index=self.field_index,
                operation=self.operation.value,
                parameters=[p.to_json() for p in self.parameters],
                rows=list(self.rows) if self.rows is not None else None,
                coverage=self.coverage,
            )
        else:
            d.update(chart_type=self.chart_type.value, x_fields=list(self.x_fields),
                     y_fields=list(self.y_fields))
        return d

    @classmethod
    def from_json(cls, d: dict) -> "AnalysisRecord":
        if d["kind"] == "CF":
            rows = d.get("rows")
            return cls.cf(
                d["table_id"], int(d["field_index"]), OperationCF(d["operation"]),
                [Param.from_json(p) for p in d.get("parameters", [])],
                tuple(rows) if rows is not None else None, float(d.get("coverage", 1.0)),
            )
        return cls.chart(d["table_id"], ChartType(d["chart_type"]), d.get("x_fields", []),
                         d["y_fields"])


@dataclass(frozen=True)
class SemanticsLabel:
    intents: frozenset
    focuses: frozenset = dc_field(default_factory=frozenset)

    @property
    def intent(self):
        """The single intent of a CF label."""
        (only,) = self.intents
        return only

    def pairs(self) -> set[tuple]:
        return {(u, d) for u in self.intents for d in self.focuses}

    def to_json(self) -> dict:
        return {
            "intents": sorted(u.value for u in self.intents),
            "focuses": sorted(d.value for d in self.focuses),
        }
