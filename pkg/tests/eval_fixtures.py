"""Hand-built prediction/gold fixtures with hand-counted expected metrics."""
from tabintent.records import (
    ChartType,
    DataFocusCF as D,
    OperationCF as O,
    Param,
    SemanticsLabel,
    UserIntentCF as U,
)

N = Param.number
T = Param.text

# Three fields. f1 hits at rank 1, f2 only at rank 2, f3 has the right
# operation with the wrong parameter.
CF_GOLD = {
    ("a", 0): [(O.TopBottomK, [N(3)])],
    ("a", 1): [(O.LessGreaterThan, [N(50)])],
    ("b", 0): [(O.IsError, [T("#REF!")])],
}
CF_PRED = {
    ("a", 0): [(O.TopBottomK, [N(3)]), (O.Between, [N(1), N(9)])],
    ("a", 1): [(O.Between, [N(10), N(20)]), (O.LessGreaterThan, [N(50.0)]), (O.ColorScale, [N(1), N(2)])],
    ("b", 0): [(O.IsError, [T("#N/A")]), (O.IsBlank, [Param.blank()]), (O.IsDuplicate, [])],
}
CF_EXPECTED = {
    "complete": {1: 1 / 3, 3: 2 / 3},
    "operation_only": {1: 2 / 3, 3: 3 / 3},
    "parameters_only": {1: 1 / 3, 3: 2 / 3},
    "per_operation": {O.TopBottomK: 1.0, O.LessGreaterThan: 0.0, O.IsError: 0.0, O.Between: "n/a"},
}

# Four tables: Line predicted twice (one right), Bar never first, the Pie
# prediction has an extra y field, Scatter y fields come in another order.
CHART_GOLD = {
    "c1": [(ChartType.Line, [0], [1])],
    "c2": [(ChartType.Bar, [0], [1])],
    "c3": [(ChartType.Pie, [], [1])],
    "c4": [(ChartType.Scatter, [0], [1, 2])],
}
CHART_PRED = {
    "c1": [(ChartType.Line, [0], [1])],
    "c2": [(ChartType.Line, [0], [1]), (ChartType.Bar, [0], [1])],
    "c3": [(ChartType.Pie, [], [1, 2]), (ChartType.Bar, [0], [1])],
    "c4": [(ChartType.Scatter, [0], [2, 1])],
}
CHART_EXPECTED = {
    "recall": {1: 0.5, 3: 0.75},
    "per_type": {
        ChartType.Line: (1.0, 0.5),
        ChartType.Bar: (0.0, "n/a"),
        ChartType.Pie: (0.0, 0.0),
        ChartType.Scatter: (1.0, 1.0),
    },
}


def _lab(u, *ds):
    return SemanticsLabel(frozenset({u}), frozenset(ds))


# Five fields; only s4 ranks a wrong focus first.
SEM_GOLD = {
    "s1": _lab(U.Det, D.Err),
    "s2": _lab(U.Com, D.Rag),
    "s3": _lab(U.Det, D.Rak, D.Rag),
    "s4": _lab(U.Det, D.Mea),
    "s5": _lab(U.Com, D.Fre),
}
SEM_PRED = {
    "s1": [(U.Det, D.Err)],
    "s2": [(U.Com, D.Rag), (U.Det, D.Rag)],
    "s3": [(U.Det, D.Rag)],
    "s4": [(U.Det, D.Fre), (U.Det, D.Mea)],
    "s5": [(U.Com, D.Fre)],
}
SEM_EXPECTED = {
    1: {"overall": 0.8, "intent": 1.0, "focus": 0.8},
    2: {"overall": 1.0, "intent": 1.0, "focus": 1.0},
}
