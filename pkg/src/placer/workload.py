"""Domain model and document I/O for table/query/server workloads.

A workload document is a JSON object:

    { "tables":  [{"id", "size"}, ...],
      "queries": [{"id", "refs": [{"table", "cost"}, ...],
                   "frequency"?, "exec_cost"?}, ...],
      "servers": [{"id", "storage_capacity", "load_capacity"?}, ...] }

All quantities are nonnegative 64-bit integers.  A missing "frequency"
defaults to 1, a missing "exec_cost" to the sum of the query's ref costs,
and a missing "load_capacity" means the server's execution capacity is
unbounded.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .common import INT64_MAX, DocumentError

__all__ = [
    "Table",
    "QueryRef",
    "Query",
    "Server",
    "Workload",
    "parse_workload",
    "serialize_workload",
    "validate_workload",
    "validate_capacity_lower_bounds",
]


@dataclass(frozen=True)
class Table:
    id: str
    size: int


@dataclass(frozen=True)
class QueryRef:
    table: str
    cost: int


@dataclass(frozen=True)
class Query:
    id: str
    refs: tuple[QueryRef, ...]
    frequency: int = 1
    exec_cost: int | None = None  # None defaults to the summed ref costs

    def __post_init__(self) -> None:
        if self.exec_cost is None:
            object.__setattr__(self, "exec_cost", sum(r.cost for r in self.refs))


@dataclass(frozen=True)
class Server:
    id: str
    storage_capacity: int
    load_capacity: int | None = None  # None = unbounded


@dataclass(frozen=True)
class Workload:
    tables: tuple[Table, ...]
    queries: tuple[Query, ...]
    servers: tuple[Server, ...]

    def table_by_id(self) -> dict[str, Table]:
        return {t.id: t for t in self.tables}

    def total_size(self) -> int:
        return sum(t.size for t in self.tables)


def _as_int(value: object, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DocumentError(f"{what} must be an integer, got {value!r}")
    return value


def _nonneg(value: object, what: str) -> int:
    n = _as_int(value, what)
    if n < 0:
        raise DocumentError(f"{what} must be nonnegative, got {n}")
    return n


def _as_id(value: object, what: str) -> str:
    if not isinstance(value, str) or not value:
        raise DocumentError(f"{what} must be a nonempty string, got {value!r}")
    return value


def load_json_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(
            f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    return doc


def document_entries(doc: dict, key: str) -> list[dict]:
    entries = doc.get(key, [])
    if not isinstance(entries, list):
        raise DocumentError(f"{key!r} must be a list")
    for entry in entries:
        if not isinstance(entry, dict):
            raise DocumentError(f"entries of {key!r} must be objects, got {entry!r}")
    return entries


def parse_server(entry: dict) -> Server:
    sid = _as_id(entry.get("id"), "server id")
    cap = _nonneg(entry.get("storage_capacity"), f"storage_capacity of server {sid!r}")
    load = entry.get("load_capacity")
    if load is not None:
        load = _nonneg(load, f"load_capacity of server {sid!r}")
    return Server(sid, cap, load)


def _parse_table(entry: dict) -> Table:
    tid = _as_id(entry.get("id"), "table id")
    return Table(tid, _nonneg(entry.get("size"), f"size of table {tid!r}"))


def _parse_query(entry: dict) -> Query:
    qid = _as_id(entry.get("id"), "query id")
    raw_refs = entry.get("refs")
    if not isinstance(raw_refs, list) or not raw_refs:
        raise DocumentError(f"query {qid!r} must have a nonempty 'refs' list")
    refs = []
    for ref in raw_refs:
        if not isinstance(ref, dict):
            raise DocumentError(f"refs of query {qid!r} must be objects")
        table = _as_id(ref.get("table"), f"ref table of query {qid!r}")
        cost = _nonneg(ref.get("cost"), f"cost of ref {qid!r}->{table!r}")
        refs.append(QueryRef(table, cost))
    freq = entry.get("frequency", 1)
    freq = _as_int(freq, f"frequency of query {qid!r}")
    if freq < 1:
        raise DocumentError(f"frequency of query {qid!r} must be >= 1, got {freq}")
    exec_cost = entry.get("exec_cost")
    if exec_cost is not None:
        exec_cost = _nonneg(exec_cost, f"exec_cost of query {qid!r}")
    return Query(qid, tuple(refs), freq, exec_cost)


def parse_workload(text: str) -> Workload:
    """Parse and validate a workload document; all defaults materialized."""
    doc = load_json_document(text)
    tables = tuple(_parse_table(e) for e in document_entries(doc, "tables"))
    queries = tuple(_parse_query(e) for e in document_entries(doc, "queries"))
    servers = tuple(parse_server(e) for e in document_entries(doc, "servers"))
    w = Workload(tables, queries, servers)
    validate_workload(w)
    return w


def validate_workload(w: Workload) -> None:
    """Check id uniqueness, reference resolution, ranges and 64-bit totals."""
    seen: set[str] = set()
    for t in w.tables:
        if t.id in seen:
            raise DocumentError(f"duplicate id: {t.id!r}")
        seen.add(t.id)
        _nonneg(t.size, f"size of table {t.id!r}")
    table_ids = set(seen)
    for q in w.queries:
        if q.id in seen:
            raise DocumentError(f"duplicate id: {q.id!r}")
        seen.add(q.id)
        if not q.refs:
            raise DocumentError(f"query {q.id!r} has no refs")
        if q.frequency < 1:
            raise DocumentError(f"frequency of query {q.id!r} must be >= 1")
        _nonneg(q.exec_cost, f"exec_cost of query {q.id!r}")
        used: set[str] = set()
        for r in q.refs:
            if r.table not in table_ids:
                raise DocumentError(
                    f"query {q.id!r} references undefined table {r.table!r}"
                )
            if r.table in used:
                raise DocumentError(
                    f"query {q.id!r} references table {r.table!r} more than once"
                )
            used.add(r.table)
            _nonneg(r.cost, f"cost of ref {q.id!r}->{r.table!r}")
    server_ids: set[str] = set()
    for s in w.servers:
        if s.id in server_ids:
            raise DocumentError(f"duplicate id: {s.id!r}")
        server_ids.add(s.id)
        _nonneg(s.storage_capacity, f"storage_capacity of server {s.id!r}")
        if s.load_capacity is not None:
            _nonneg(s.load_capacity, f"load_capacity of server {s.id!r}")

    totals = [
        sum(t.size for t in w.tables),
        sum(s.storage_capacity for s in w.servers),
        sum(q.frequency * sum(r.cost for r in q.refs) for q in w.queries),
        sum(q.frequency * q.exec_cost for q in w.queries),
    ]
    if any(total > INT64_MAX for total in totals):
        raise DocumentError("workload totals overflow a signed 64-bit integer")


def serialize_workload(w: Workload) -> str:
    """Serialize to the document format; defaulted fields are omitted."""
    doc: dict = {
        "tables": [{"id": t.id, "size": t.size} for t in w.tables],
        "queries": [],
        "servers": [],
    }
    for q in w.queries:
        entry: dict = {
            "id": q.id,
            "refs": [{"table": r.table, "cost": r.cost} for r in q.refs],
        }
        if q.frequency != 1:
            entry["frequency"] = q.frequency
        if q.exec_cost != sum(r.cost for r in q.refs):
            entry["exec_cost"] = q.exec_cost
        doc["queries"].append(entry)
    for s in w.servers:
        entry = {"id": s.id, "storage_capacity": s.storage_capacity}
        if s.load_capacity is not None:
            entry["load_capacity"] = s.load_capacity
        doc["servers"].append(entry)
    return json.dumps(doc, indent=2) + "\n"


def validate_capacity_lower_bounds(w: Workload) -> list[str]:
    """Cheap necessary-condition checks; warnings only, never an error.

    Deciding feasibility exactly is NP-hard, so only two bounds are
    checked: the largest table must fit on some server, and aggregate
    capacity must cover aggregate size.
    """
    notes: list[str] = []
    if w.tables:
        largest = max(w.tables, key=lambda t: (t.size, t.id))
        best = max((s.storage_capacity for s in w.servers), default=0)
        if best < largest.size:
            notes.append(
                f"largest-table: table {largest.id!r} (size {largest.size}) "
                f"exceeds every server capacity (max {best})"
            )
    total_size = sum(t.size for t in w.tables)
    total_cap = sum(s.storage_capacity for s in w.servers)
    if total_cap < total_size:
        notes.append(
            f"aggregate-capacity: total table size {total_size} exceeds "
            f"total server capacity {total_cap}"
        )
    return notes
