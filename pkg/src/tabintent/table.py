"""Typed tables: cell classification, field typing, parsing."""
from __future__ import annotations

import csv
import datetime as _dt
import enum
import gzip
import io
import re
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

from .errors import EmptyInput, IndexOutOfRange


class CellKind(enum.Enum):
    NUMBER = "number"
    TEXT = "text"
    BLANK = "blank"
    ERROR = "error"
    DATE = "date"


class FieldType(enum.Enum):
    NUMERIC = "Numeric"
    STRING = "String"
    DATETIME = "DateTime"


ERROR_LEXICON = frozenset(
    {"#REF!", "#DIV/0!", "#N/A", "#VALUE!", "#NAME?", "#NUM!", "#NULL!", "#####"}
)
TYPE_MAJORITY = 0.95

_NUMBER_RE = re.compile(
    r"^(?P<s1>[+-])?(?P<cur>[$€£])?(?P<s2>[+-])?"
    r"(?P<int>\d{1,3}(?:,\d{3})+|\d*)(?P<frac>\.\d*)?(?P<exp>[eE][+-]?\d+)?(?P<pct>%)?$"
)
_ISO_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})(?:[T ]\d{2}:\d{2}(?::\d{2}(?:\.\d+)?)?(?:Z|[+-]\d{2}:?\d{2})?)?$"
)
_US_RE = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4})$")
_MON_RE = re.compile(r"^([A-Za-z]{3,9})\.?\s+(\d{4})$")
_MONTHS = {
    name.lower(): i + 1
    for i, names in enumerate(
        zip(
            ["jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"],
            ["january", "february", "march", "april", "may", "june", "july", "august",
             "september", "october", "november", "december"],
        )
    )
    for name in names
}
_EPOCH = _dt.date(1970, 1, 1)


@dataclass(frozen=True)
class Cell:
    raw: str
    kind: CellKind
    value: float | int | None = None  # float for NUMBER, epoch days for DATE

    @property
    def is_number(self) -> bool:
        return self.kind is CellKind.NUMBER

    def text(self) -> str:
        """Text used for hashing/embedding: canonical decimal for numbers."""
        if self.kind is CellKind.NUMBER:
            return format_number(self.value)
        if self.kind is CellKind.BLANK:
            return ""
        return self.raw.strip()


def format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _parse_number(s: str) -> float | None:
    m = _NUMBER_RE.match(s)
    if m is None or (m["s1"] and m["s2"]):
        return None
    digits = m["int"] + (m["frac"] or "")
    if not any(ch.isdigit() for ch in digits):
        return None
    try:
        value = float(digits.replace(",", "") + (m["exp"] or ""))
    except ValueError:
        return None
    if m["s1"] == "-" or m["s2"] == "-":
        value = -value
    if m["pct"]:
        value /= 100.0
    if value != value or value in (float("inf"), float("-inf")):
        return None
    return value


def _parse_date(s: str) -> int | None:
    try:
        m = _ISO_RE.match(s)
        if m:
            d = _dt.date(int(m[1]), int(m[2]), int(m[3]))
            return (d - _EPOCH).days
        m = _US_RE.match(s)
        if m:
            d = _dt.date(int(m[3]), int(m[1]), int(m[2]))
            return (d - _EPOCH).days
        m = _MON_RE.match(s)
        if m and m[1].lower() in _MONTHS:
            d = _dt.date(int(m[2]), _MONTHS[m[1].lower()], 1)
            return (d - _EPOCH).days
    except ValueError:
        return None
    return None


def classify_cell(raw: str) -> Cell:
    s = raw.strip()
    if not s:
        return Cell(raw, CellKind.BLANK)
    if s in ERROR_LEXICON:
        return Cell(raw, CellKind.ERROR)
    days = _parse_date(s)
    if days is not None:
        return Cell(raw, CellKind.DATE, days)
    num = _parse_number(s)
    if num is not None:
        return Cell(raw, CellKind.NUMBER, num)
    return Cell(raw, CellKind.TEXT)


def infer_field_type(cells: Sequence[Cell]) -> FieldType:
    typed = [c for c in cells if c.kind not in (CellKind.BLANK, CellKind.ERROR)]
    if not typed:
        return FieldType.STRING
    n = len(typed)
    if sum(c.kind is CellKind.NUMBER for c in typed) >= TYPE_MAJORITY * n:
        return FieldType.NUMERIC
    if sum(c.kind is CellKind.DATE for c in typed) >= TYPE_MAJORITY * n:
        return FieldType.DATETIME
    return FieldType.STRING


@dataclass
class Field:
    index: int
    header: str
    cells: list[Cell]
    ftype: FieldType = dc_field(default=None)

    def __post_init__(self):
        if self.ftype is None:
            self.ftype = infer_field_type(self.cells)

    @property
    def is_numeric(self) -> bool:
        return self.ftype is FieldType.NUMERIC

    def numbers(self) -> list[float]:
        return [c.value for c in self.cells if c.kind is CellKind.NUMBER]

    def __len__(self):
        return len(self.cells)


@dataclass
class Table:
    id: str
    fields: list[Field]

    @property
    def n_rows(self) -> int:
        return len(self.fields[0].cells) if self.fields else 0

    @property
    def headers(self) -> list[str]:
        return [f.header for f in self.fields]

    def field(self, index: int) -> Field:
        if not 0 <= index < len(self.fields):
            raise IndexOutOfRange(f"field index {index} out of range for table {self.id!r}")
        return self.fields[index]

    def rows(self) -> list[list[str]]:
        return [[f.cells[r].raw for f in self.fields] for r in range(self.n_rows)]

    def to_rows(self, include_header: bool = True) -> list[list[str]]:
        body = self.rows()
        return [self.headers] + body if include_header else body


def parse_table(rows: Sequence[Sequence[str]], header_in_first_row: bool = True, id: str = "") -> Table:
    rows = [list(r) for r in rows]
    if not rows:
        raise EmptyInput("no rows")
    width = max(len(r) for r in rows)
    if width == 0:
        raise EmptyInput("no columns")
    rows = [r + [""] * (width - len(r)) for r in rows]
    if header_in_first_row:
        headers, body = rows[0], rows[1:]
    else:
        headers, body = [f"col_{j}" for j in range(width)], rows
    fields = [
        Field(j, headers[j], [classify_cell(r[j]) for r in body])
        for j in range(width)
    ]
    return Table(id, fields)


def _open_text(path):
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, "rt", encoding="utf-8", newline="")
    return open(path, encoding="utf-8", newline="")


def read_csv_rows(path) -> list[list[str]]:
    with _open_text(path) as fh:
        return [row for row in csv.reader(fh)]


def read_csv(path, header_in_first_row: bool = True, id: str | None = None) -> Table:
    rows = read_csv_rows(path)
    return parse_table(rows, header_in_first_row, id if id is not None else str(path))


def write_csv(table: Table, include_header: bool = True) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(table.to_rows(include_header))
    return buf.getvalue()


def table_from_columns(id: str, headers: Iterable[str], columns: Iterable[Sequence[str]]) -> Table:
    headers = list(headers)
    columns = [list(c) for c in columns]
    rows = [headers] + [list(r) for r in zip(*columns)] if columns and columns[0] else [headers]
    return parse_table(rows, True, id)
