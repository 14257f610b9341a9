"""Corpus interchange (JSONL) and the preparation pipeline: record merging,
coverage filtering, schema grouping with dedup and sampling.

A corpus file starts with a header line ``{"format": "tabintent-corpus/1", ...}``
followed by table docs ``{"doc": "table", "id", "headers", "types", "rows"}``
and record docs ``{"doc": "record", ...}``. Files ending in ``.gz`` are gzip.
"""
from __future__ import annotations

import gzip
import json
from collections import defaultdict
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .records import AnalysisRecord
from .table import Field, FieldType, Table, classify_cell

CORPUS_FORMAT = "tabintent-corpus/1"
DEFAULT_COVERAGE_THRESHOLD = 0.5
DEFAULT_MAX_PER_SCHEMA = 5


@dataclass
class Corpus:
    tables: list[Table]
    records: list[AnalysisRecord]
    header: dict = dc_field(default_factory=dict)

    def table_map(self) -> dict[str, Table]:
        return {t.id: t for t in self.tables}

    def cf_records_by_field(self) -> dict[tuple[str, int], list[AnalysisRecord]]:
        out: dict = defaultdict(list)
        for r in self.records:
            if r.is_cf:
                out[(r.table_id, r.field_index)].append(r)
        return dict(out)

    def chart_records_by_table(self) -> dict[str, list[AnalysisRecord]]:
        out: dict = defaultdict(list)
        for r in self.records:
            if not r.is_cf:
                out[r.table_id].append(r)
        return dict(out)


def table_to_doc(table: Table) -> dict:
    return {
        "doc": "table",
        "id": table.id,
        "headers": table.headers,
        "types": [f.ftype.value for f in table.fields],
        "rows": table.rows(),
    }


def table_from_doc(doc: dict) -> Table:
    headers = list(doc["headers"])
    rows = doc.get("rows", [])
    types = doc.get("types")
    if types is not None and len(types) != len(headers):
        raise DataError(f"table {doc.get('id')!r}: {len(types)} types for {len(headers)} headers")
    fields = []
    for j, h in enumerate(headers):
        cells = [classify_cell(str(r[j]) if j < len(r) else "") for r in rows]
        ftype = FieldType(types[j]) if types is not None else None
        fields.append(Field(j, h, cells, ftype))
    return Table(str(doc["id"]), fields)


def _open(path, mode):
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def write_corpus(path, corpus: Corpus) -> None:
    header = {"format": CORPUS_FORMAT, **corpus.header}
    with _open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for t in corpus.tables:
            fh.write(json.dumps(table_to_doc(t), sort_keys=True) + "\n")
        for r in corpus.records:
            fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")


def read_corpus(path) -> Corpus:
    tables, records, header = [], [], {}
    try:
        with _open(path, "r") as fh:
            for n, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                doc = json.loads(line)
                kind = doc.get("doc")
                if kind == "table":
                    tables.append(table_from_doc(doc))
                elif kind == "record":
                    records.append(AnalysisRecord.from_json(doc))
                elif "format" in doc and n == 1:
                    if doc["format"] != CORPUS_FORMAT:
                        raise DataError(f"{path}: unsupported corpus format {doc['format']!r}")
                    header = {k: v for k, v in doc.items() if k != "format"}
                else:
                    raise DataError(f"{path}:{n}: unknown document")
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"cannot read corpus {path}: {exc}") from exc
    ids = {t.id for t in tables}
    for r in records:
        if r.table_id not in ids:
            raise DataError(f"record references unknown table {r.table_id!r}")
    return Corpus(tables, records, header)


# --- preparation steps ---------------------------------------------------------

def _merge_key(r: AnalysisRecord):
    if r.is_cf:
        return ("CF", r.table_id, r.field_index, r.operation, r.parameters)
    return ("Chart", r.table_id, r.chart_type, r.x_fields, r.y_fields)


def merge_records(records: Sequence[AnalysisRecord]) -> list[AnalysisRecord]:
    """Collapse identical records; join contiguous or overlapping row spans of
    otherwise identical CF records. A whole-field record absorbs its spans."""
    groups: dict = {}
    for r in records:
        groups.setdefault(_merge_key(r), []).append(r)
    out = []
    for key, rs in groups.items():
        if not rs[0].is_cf:
            out.append(rs[0])
            continue
        whole = [r for r in rs if r.rows is None]
        if whole:
            out.append(whole[0])
            continue
        spans = sorted(rs, key=lambda r: (r.rows[0], r.rows[1]))
        cur = spans[0]
        for nxt in spans[1:]:
            if nxt.rows[0] <= cur.rows[1]:
                cur = _join(cur, nxt)
            else:
                out.append(cur)
                cur = nxt
        out.append(cur)
    return out


def _join(a: AnalysisRecord, b: AnalysisRecord) -> AnalysisRecord:
    start, end = a.rows[0], max(a.rows[1], b.rows[1])
    if end == a.rows[1]:
        return a
    # coverage is a row share; recover the row count from whichever span allows it
    n_rows = None
    for r in (a, b):
        if r.coverage > 0 and r.rows[1] > r.rows[0]:
            n_rows = (r.rows[1] - r.rows[0]) / r.coverage
            break
    cov = min(1.0, (end - start) / n_rows) if n_rows else max(a.coverage, b.coverage)
    return AnalysisRecord.cf(a.table_id, a.field_index, a.operation, a.parameters, (start, end), cov)


def split_multi_table_records(records: Sequence[AnalysisRecord], tables: Sequence[Table]) -> list[AnalysisRecord]:
    """Extension point for splitting records that span several detected tables.

    The interchange format carries one table per doc and no sheet geometry,
    so there is nothing to split; records pass through unchanged.
    """
    return list(records)


def filter_by_coverage(pairs: Iterable[tuple[AnalysisRecord, Table]], threshold: float = DEFAULT_COVERAGE_THRESHOLD):
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"coverage threshold {threshold} outside [0, 1]")
    return [(r, t) for r, t in pairs if not r.is_cf or r.coverage >= threshold]


@dataclass(frozen=True)
class SchemaKey:
    text: str

    @classmethod
    def of(cls, table: Table) -> "SchemaKey":
        return cls("|".join(f"{f.header.strip().lower()}:{f.ftype.value}" for f in table.fields))


def _content(table: Table):
    return (tuple(table.headers), tuple(tuple(r) for r in table.rows()))


def dedup_and_sample(tables: Sequence[Table], max_per_schema: int = DEFAULT_MAX_PER_SCHEMA, seed: int = 0) -> list[Table]:
    if max_per_schema < 1:
        raise ValueError("max_per_schema must be at least 1")
    groups: dict[SchemaKey, list[Table]] = {}
    for t in tables:
        groups.setdefault(SchemaKey.of(t), []).append(t)
    rng = np.random.default_rng(seed)
    out = []
    for members in groups.values():
        seen, unique = set(), []
        for t in members:
            c = _content(t)
            if c not in seen:
                seen.add(c)
                unique.append(t)
        if len(unique) > max_per_schema:
            keep = sorted(rng.choice(len(unique), size=max_per_schema, replace=False).tolist())
            unique = [unique[i] for i in keep]
        out.extend(unique)
    return out


def prepare(corpus: Corpus, coverage_threshold: float = DEFAULT_COVERAGE_THRESHOLD,
            max_per_schema: int = DEFAULT_MAX_PER_SCHEMA, seed: int = 0) -> Corpus:
    """Merge, split, coverage-filter, then dedup/sample tables and keep their records."""
    tmap = corpus.table_map()
    records = merge_records(corpus.records)
    records = split_multi_table_records(records, corpus.tables)
    pairs = filter_by_coverage([(r, tmap[r.table_id]) for r in records], coverage_threshold)
    with_records = {t.id for _, t in pairs}
    tables = dedup_and_sample([t for t in corpus.tables if t.id in with_records], max_per_schema, seed)
    kept = {t.id for t in tables}
    return Corpus(tables, [r for r, _ in pairs if r.table_id in kept], dict(corpus.header))
