"""Relational persistence of the fact graph, one table per fact kind.

Every fact is an individual row; data about one entity is spread over
multiple tables and reassembled by facet queries. The backend is SQLite:
the database file is attached under a configurable schema name so that
all SQL, including raw observer queries, addresses tables as
``<schema>.<table>`` exactly as documented.

Terminal link storage shares the reference_target table with type-level
targets: a link row's reference column points at a per-instance row in
the reference table (potency 0, instantiates set) whose entity column
records the holder.
"""

from __future__ import annotations

import re
import sqlite3
import threading
from typing import Iterable, Optional

from .errors import (
    ConnectionFailure,
    PermissionDenied,
    SqlError,
    UnknownEntity,
    UnknownTable,
    WriteAttempted,
)
from .kernel import (
    AttributeDecl,
    AttributeValue,
    Entity,
    Generalisation,
    InstanceOf,
    LinkSet,
    ModelGraph,
    ReferenceDecl,
    TargetLink,
    TypeTarget,
)

DEFAULT_SCHEMA = "nivel"

MODEL_TABLES = (
    "entity",
    "attribute",
    "attribute_value",
    "reference",
    "reference_target",
    "instance_of",
    "generalisation",
)

ALL_TABLES = MODEL_TABLES + ("observation_target", "log_record")

TABLE_COLUMNS = {
    "entity": ("id", "identifier", "name", "description"),
    "attribute": ("id", "entity", "instantiates", "name", "datatype", "potency"),
    "attribute_value": ("id", "entity", "attribute", "value"),
    "reference": ("id", "entity", "instantiates", "name", "potency", "ordered",
                  "min_card", "max_card"),
    "reference_target": ("id", "reference", "target", "position"),
    "instance_of": ("id", "instance", "type"),
    "generalisation": ("id", "subtype", "supertype"),
    "observation_target": ("id", "query", "interval_seconds", "function", "parent_reference"),
    "log_record": ("id", "service", "level", "at", "message", "payload"),
}

_SCHEMA_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_READ_PREFIXES = ("select", "with")


def _ddl(schema: str) -> list[str]:
    s = schema
    return [
        f"""CREATE TABLE IF NOT EXISTS {s}.entity (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            identifier VARCHAR(255),
            name VARCHAR(255),
            description VARCHAR(4000))""",
        f"""CREATE TABLE IF NOT EXISTS {s}.attribute (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            entity INT REFERENCES entity(id),
            instantiates INT REFERENCES attribute(id),
            name VARCHAR(255),
            datatype VARCHAR(32),
            potency INT NOT NULL)""",
        f"""CREATE TABLE IF NOT EXISTS {s}.attribute_value (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            entity INT REFERENCES entity(id),
            attribute INT REFERENCES attribute(id),
            value VARCHAR(4000))""",
        f"""CREATE TABLE IF NOT EXISTS {s}.reference (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            entity INT REFERENCES entity(id),
            instantiates INT REFERENCES reference(id),
            name VARCHAR(255),
            potency INT NOT NULL,
            ordered SMALLINT NOT NULL DEFAULT 0,
            min_card INT NOT NULL DEFAULT 0,
            max_card INT)""",
        f"""CREATE TABLE IF NOT EXISTS {s}.reference_target (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            reference INT REFERENCES reference(id),
            target INT REFERENCES entity(id),
            position INT)""",
        f"""CREATE TABLE IF NOT EXISTS {s}.instance_of (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            instance INT REFERENCES entity(id),
            type INT REFERENCES entity(id))""",
        f"""CREATE TABLE IF NOT EXISTS {s}.generalisation (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            subtype INT REFERENCES entity(id),
            supertype INT REFERENCES entity(id))""",
        f"""CREATE TABLE IF NOT EXISTS {s}.observation_target (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            query VARCHAR(4000),
            interval_seconds INT NOT NULL,
            function INT REFERENCES entity(id),
            parent_reference INT REFERENCES reference(id))""",
        f"""CREATE TABLE IF NOT EXISTS {s}.log_record (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            service VARCHAR(255),
            level VARCHAR(16),
            at TIMESTAMP,
            message VARCHAR(4000),
            payload VARCHAR(4000))""",
    ]


def parse_db_url(url: str) -> str:
    """Accepts sqlite:///<path>, sqlite:///:memory:, or a bare filesystem path."""
    if url.startswith("sqlite:///"):
        return url[len("sqlite:///"):] or ":memory:"
    if "://" in url:
        scheme = url.split("://", 1)[0]
        raise ConnectionFailure(f"unsupported database engine {scheme!r}")
    return url


class Store:
    """One logical database. File-backed stores open a connection per
    operation; in-memory stores keep a single guarded connection alive."""

    def __init__(self, url: str, schema: str = DEFAULT_SCHEMA):
        if not _SCHEMA_RE.match(schema):
            raise ConnectionFailure(f"invalid schema name {schema!r}")
        self.path = parse_db_url(url)
        self.schema = schema
        self._lock = threading.RLock()
        self._memory_conn: Optional[sqlite3.Connection] = None

    # --- connections ---------------------------------------------------------

    def _open(self) -> sqlite3.Connection:
        # A path with a query string is attached in URI form, which is how a
        # read-only store (…?mode=ro) is addressed.
        target = self.path
        if "?" in target and target != ":memory:":
            target = f"file:{target}"
        try:
            conn = sqlite3.connect(":memory:", isolation_level=None,
                                   check_same_thread=False)
            conn.execute(f"ATTACH DATABASE ? AS {self.schema}", (target,))
        except sqlite3.OperationalError as exc:
            raise ConnectionFailure(str(exc)) from exc
        conn.row_factory = sqlite3.Row
        conn.execute("PRAGMA busy_timeout = 10000")
        return conn

    def connection(self) -> sqlite3.Connection:
        if self.path == ":memory:":
            with self._lock:
                if self._memory_conn is None:
                    self._memory_conn = self._open()
                return self._memory_conn
        return self._open()

    def _release(self, conn: sqlite3.Connection):
        if conn is not self._memory_conn:
            conn.close()

    def close(self):
        with self._lock:
            if self._memory_conn is not None:
                self._memory_conn.close()
                self._memory_conn = None

    # --- schema ------------------------------------------------------------------

    def migrate(self) -> None:
        """Create the schema's tables; safe to run repeatedly."""
        conn = self.connection()
        try:
            with self._lock:
                try:
                    conn.execute("BEGIN")
                    for stmt in _ddl(self.schema):
                        conn.execute(stmt)
                    conn.execute("COMMIT")
                except sqlite3.OperationalError as exc:
                    conn.execute("ROLLBACK")
                    if "readonly" in str(exc).lower():
                        raise PermissionDenied(str(exc)) from exc
                    raise ConnectionFailure(str(exc)) from exc
        finally:
            self._release(conn)

    def table_names(self) -> list[str]:
        conn = self.connection()
        try:
            rows = conn.execute(
                f"SELECT name FROM {self.schema}.sqlite_master "
                "WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name"
            ).fetchall()
            return [r["name"] for r in rows]
        finally:
            self._release(conn)

    def is_migrated(self) -> bool:
        return set(ALL_TABLES) <= set(self.table_names())

    # --- persist / load -------------------------------------------------------------

    def persist(self, model: ModelGraph) -> None:
        """Write the model's fact rows, ids included, in one transaction."""
        rows = model_rows(model)
        conn = self.connection()
        try:
            with self._lock:
                try:
                    conn.execute("BEGIN IMMEDIATE")
                    for table in MODEL_TABLES:
                        conn.execute(f"DELETE FROM {self.schema}.{table}")
                    for row in rows:
                        self._insert(conn, row["table"],
                                     {k: v for k, v in row.items() if k != "table"})
                    conn.execute("COMMIT")
                except sqlite3.Error as exc:
                    conn.execute("ROLLBACK")
                    raise ConnectionFailure(str(exc)) from exc
        finally:
            self._release(conn)

    def load(self) -> ModelGraph:
        return model_from_rows(self.dump_rows(tables=MODEL_TABLES))

    def _insert(self, conn, table: str, cols: dict) -> int:
        names = ", ".join(cols)
        marks = ", ".join("?" for _ in cols)
        cur = conn.execute(
            f"INSERT INTO {self.schema}.{table} ({names}) VALUES ({marks})",
            tuple(cols.values()))
        return cur.lastrowid

    def insert_row(self, table: str, cols: dict) -> int:
        """Insert one row verbatim; used by import and test fixtures."""
        if table not in ALL_TABLES:
            raise UnknownTable(table)
        unknown = set(cols) - set(TABLE_COLUMNS[table])
        if unknown:
            raise SqlError(f"unknown columns for {table}: {sorted(unknown)}")
        conn = self.connection()
        try:
            with self._lock:
                try:
                    return self._insert(conn, table, cols)
                except sqlite3.Error as exc:
                    raise SqlError(str(exc)) from exc
        finally:
            self._release(conn)

    def dump_rows(self, tables: Iterable[str] = ALL_TABLES) -> list[dict]:
        """Every row of the given tables as {"table": name, column: value}."""
        out: list[dict] = []
        conn = self.connection()
        try:
            for table in tables:
                if table not in ALL_TABLES:
                    raise UnknownTable(table)
                cols = TABLE_COLUMNS[table]
                sel = ", ".join(f'"{c}"' for c in cols)
                try:
                    rows = conn.execute(
                        f"SELECT {sel} FROM {self.schema}.{table} ORDER BY id").fetchall()
                except sqlite3.OperationalError as exc:
                    raise ConnectionFailure(str(exc)) from exc
                for r in rows:
                    rec = {"table": table}
                    rec.update({c: r[c] for c in cols})
                    out.append(rec)
        finally:
            self._release(conn)
        return out

    # --- facet queries ----------------------------------------------------------------

    def facet_rows(self, entity_id: int, usage: str) -> list[dict]:
        """The row closure a facet computation needs, nothing else.

        Queried host-side with plain SQL; building the facet from these rows
        must equal building it from the fully loaded model.
        """
        if usage == "view":
            usage = "edit"
        if usage not in ("edit", "instantiate", "generalise"):
            raise SqlError(f"unknown usage {usage!r}")
        conn = self.connection()
        try:
            return _FacetQuery(conn, self.schema, entity_id, usage).rows()
        finally:
            self._release(conn)

    # --- raw queries -------------------------------------------------------------------

    def raw_query(self, sql: str) -> list[dict]:
        """Run a read-only statement and return rows as column-name maps."""
        stripped = re.sub(r"^\s*(--[^\n]*\n\s*)*", "", sql).lower()
        if not stripped.startswith(_READ_PREFIXES):
            raise WriteAttempted("only SELECT/WITH statements are allowed")
        conn = self.connection()
        try:
            conn.execute("PRAGMA query_only = ON")
            try:
                cur = conn.execute(sql)
                rows = cur.fetchall()
            except sqlite3.Error as exc:
                if "readonly" in str(exc).lower() or "query_only" in str(exc).lower():
                    raise WriteAttempted(str(exc)) from exc
                raise SqlError(str(exc)) from exc
            finally:
                conn.execute("PRAGMA query_only = OFF")
            return [dict(r) for r in rows]
        finally:
            self._release(conn)

    # --- logs ----------------------------------------------------------------------------

    def record_log(self, service: str, level: str, at: str, message: str,
                   payload: str = "") -> None:
        self.insert_row("log_record", {
            "service": service, "level": level, "at": at,
            "message": message, "payload": payload,
        })


# --- row mapping ---------------------------------------------------------------------------


def model_rows(model: ModelGraph) -> list[dict]:
    """Model facts as store rows, deterministic order, ids preserved.

    Link sets become reference rows at potency 0 carrying the governing
    declaration in instantiates and the holder in entity; their links point
    at that row, which is how the holder is recoverable from the shared
    reference_target table.
    """
    rows: list[dict] = []
    for e in sorted(model.entities.values(), key=lambda x: x.id):
        rows.append({"table": "entity", "id": e.id, "identifier": e.identifier,
                     "name": e.name, "description": e.description})
    for d in sorted(model.attributes.values(), key=lambda x: x.id):
        rows.append({"table": "attribute", "id": d.id, "entity": d.owner,
                     "instantiates": d.instantiates, "name": d.name,
                     "datatype": d.datatype, "potency": d.potency})
    for v in sorted(model.values.values(), key=lambda x: x.id):
        rows.append({"table": "attribute_value", "id": v.id, "entity": v.holder,
                     "attribute": v.attribute, "value": v.value})
    ref_rows = []
    for r in model.references.values():
        ref_rows.append({"table": "reference", "id": r.id, "entity": r.owner,
                         "instantiates": r.instantiates, "name": r.name,
                         "potency": r.potency, "ordered": 1 if r.ordered else 0,
                         "min_card": r.min_card, "max_card": r.max_card})
    for ls in model.link_sets.values():
        decl = model.references.get(ls.reference)
        ref_rows.append({"table": "reference", "id": ls.id, "entity": ls.holder,
                         "instantiates": ls.reference,
                         "name": decl.name if decl else "",
                         "potency": 0,
                         "ordered": 1 if decl is not None and decl.ordered else 0,
                         "min_card": decl.min_card if decl else 0,
                         "max_card": decl.max_card if decl else None})
    ref_rows.sort(key=lambda r: r["id"])
    rows.extend(ref_rows)
    tgt_rows = []
    for t in model.type_targets.values():
        tgt_rows.append({"table": "reference_target", "id": t.id, "reference": t.reference,
                         "target": t.target, "position": t.position})
    for l in model.links.values():
        tgt_rows.append({"table": "reference_target", "id": l.id, "reference": l.link_set,
                         "target": l.target, "position": l.position})
    tgt_rows.sort(key=lambda r: r["id"])
    rows.extend(tgt_rows)
    for f in sorted(model.instance_of.values(), key=lambda x: x.id):
        rows.append({"table": "instance_of", "id": f.id, "instance": f.instance,
                     "type": f.type})
    for g in sorted(model.generalisations.values(), key=lambda x: x.id):
        rows.append({"table": "generalisation", "id": g.id, "subtype": g.subtype,
                     "supertype": g.supertype})
    return rows


def model_from_rows(rows: Iterable[dict]) -> ModelGraph:
    """Rebuild a ModelGraph from fact rows, tolerating broken references.

    A reference row with potency <= 0 and instantiates set is a link set;
    with instantiates unset it is kept as an (invalid) declaration for the
    validator to flag. reference_target rows are terminal links when they
    point at a link-set row, type-level targets otherwise.
    """
    m = ModelGraph()
    ref_rows = []
    tgt_rows = []
    max_id = 0
    for row in rows:
        table = row["table"]
        rid = row["id"]
        max_id = max(max_id, rid or 0)
        if table == "entity":
            m.entities[rid] = Entity(rid, row["identifier"] or "", row["name"] or "",
                                     row["description"] or "")
        elif table == "attribute":
            m.attributes[rid] = AttributeDecl(rid, row["entity"], row["name"] or "",
                                              row["datatype"] or "string", row["potency"],
                                              row["instantiates"])
        elif table == "attribute_value":
            m.values[rid] = AttributeValue(rid, row["entity"], row["attribute"],
                                           row["value"] if row["value"] is not None else "")
        elif table == "reference":
            ref_rows.append(row)
        elif table == "reference_target":
            tgt_rows.append(row)
        elif table == "instance_of":
            m.instance_of[rid] = InstanceOf(rid, row["instance"], row["type"])
        elif table == "generalisation":
            m.generalisations[rid] = Generalisation(rid, row["subtype"], row["supertype"])
        else:
            raise UnknownTable(table)

    for row in ref_rows:
        rid = row["id"]
        if row["potency"] <= 0 and row["instantiates"] is not None:
            m.link_sets[rid] = LinkSet(rid, row["entity"], row["instantiates"])
        else:
            m.references[rid] = ReferenceDecl(
                rid, row["entity"], row["name"] or "", row["potency"],
                bool(row["ordered"]), row["min_card"] or 0, row["max_card"],
                row["instantiates"])
    for row in tgt_rows:
        rid = row["id"]
        if row["reference"] in m.link_sets:
            m.links[rid] = TargetLink(rid, row["reference"], row["target"], row["position"])
        else:
            m.type_targets[rid] = TypeTarget(rid, row["reference"], row["target"],
                                             row["position"])
    m.counter = max(m.counter, max_id)
    return m


class _FacetQuery:
    """Assembles the facet row closure for one entity and usage."""

    def __init__(self, conn, schema: str, entity_id: int, usage: str):
        self.conn = conn
        self.s = schema
        self.eid = entity_id
        self.usage = usage
        self.collected: dict[tuple[str, int], dict] = {}

    def _fetch(self, table: str, where: str, params=()) -> list[sqlite3.Row]:
        cols = ", ".join(f'"{c}"' for c in TABLE_COLUMNS[table])
        sql = f"SELECT {cols} FROM {self.s}.{table} WHERE {where} ORDER BY id"
        return self.conn.execute(sql, params).fetchall()

    def _add(self, table: str, row: sqlite3.Row):
        rec = {"table": table}
        rec.update({c: row[c] for c in TABLE_COLUMNS[table]})
        self.collected[(table, rec["id"])] = rec

    def _add_entity(self, eid: Optional[int]):
        if eid is None:
            return
        for r in self._fetch("entity", "id = ?", (eid,)):
            self._add("entity", r)

    def _supertype_closure(self, eid: int) -> set[int]:
        seen: set[int] = set()
        frontier = [eid]
        while frontier:
            e = frontier.pop()
            for r in self._fetch("generalisation", "subtype = ?", (e,)):
                self._add("generalisation", r)
                s = r["supertype"]
                if s is not None and s not in seen:
                    seen.add(s)
                    self._add_entity(s)
                    frontier.append(s)
        return seen

    def _decl_rows(self, owners: set[int],
                   include_link_sets: bool = True) -> tuple[list[dict], list[dict]]:
        ref_where = "entity = ?" if include_link_sets else "entity = ? AND potency >= 1"
        attrs: list[dict] = []
        refs: list[dict] = []
        for owner in sorted(owners):
            for r in self._fetch("attribute", "entity = ?", (owner,)):
                self._add("attribute", r)
                attrs.append(dict(r))
            for r in self._fetch("reference", ref_where, (owner,)):
                self._add("reference", r)
                refs.append(dict(r))
        return attrs, refs

    def _chain_up(self, table: str, start: Optional[int]):
        seen = set()
        current = start
        while current is not None and current not in seen:
            seen.add(current)
            nxt = None
            for r in self._fetch(table, "id = ?", (current,)):
                self._add(table, r)
                nxt = r["instantiates"]
            current = nxt

    def _targets_under(self, ref_ids: Iterable[int]):
        for rid in sorted(set(ref_ids)):
            for r in self._fetch("reference_target", "reference = ?", (rid,)):
                self._add("reference_target", r)
                self._add_entity(r["target"])

    def _all_instance_of(self):
        for r in self._fetch("instance_of", "1 = 1"):
            self._add("instance_of", r)

    def _admissible_entities(self, allowed: set[int]):
        # Transitive instances of any allowed target, walked over instance_of.
        self._all_instance_of()
        children: dict[int, set[int]] = {}
        for (table, _), rec in self.collected.items():
            if table == "instance_of":
                children.setdefault(rec["type"], set()).add(rec["instance"])
        seen: set[int] = set()
        frontier = list(allowed)
        while frontier:
            t = frontier.pop()
            for inst in children.get(t, ()):
                if inst not in seen:
                    seen.add(inst)
                    frontier.append(inst)
        for eid in sorted(seen):
            self._add_entity(eid)

    def rows(self) -> list[dict]:
        ent = self._fetch("entity", "id = ?", (self.eid,))
        if not ent:
            raise UnknownEntity(f"no entity with id {self.eid}")
        self._add("entity", ent[0])

        for r in self._fetch("instance_of", "instance = ?", (self.eid,)):
            self._add("instance_of", r)
            self._add_entity(r["type"])
        self._supertype_closure(self.eid)

        if self.usage == "edit":
            own_attrs, own_refs = self._decl_rows({self.eid})
            for d in own_attrs:
                self._chain_up("attribute", d["instantiates"])
            governing = set()
            for d in own_refs:
                self._chain_up("reference", d["instantiates"])
                if d["instantiates"] is not None:
                    governing.add(d["instantiates"])
            # Slots come from the direct types' effective declarations.
            type_ids = {r["type"] for (t, _), r in list(self.collected.items())
                        if t == "instance_of" and r["instance"] == self.eid}
            for tid in sorted(i for i in type_ids if i is not None):
                owners = {tid} | self._supertype_closure(tid)
                t_attrs, _ = self._decl_rows(owners, include_link_sets=False)
                for d in t_attrs:
                    self._chain_up("attribute", d["instantiates"])
            for r in self._fetch("attribute_value", "entity = ?", (self.eid,)):
                self._add("attribute_value", r)
                self._chain_up("attribute", r["attribute"])
            self._targets_under([d["id"] for d in own_refs] + sorted(governing))
            allowed = {rec["target"] for (t, _), rec in self.collected.items()
                       if t == "reference_target" and rec["target"] is not None}
            self._admissible_entities(allowed)
        else:
            owners = {self.eid} | self._supertype_closure(self.eid)
            _, refs = self._decl_rows(owners, include_link_sets=False)
            decl_ids = [d["id"] for d in refs if d["potency"] >= 1]
            self._targets_under(decl_ids)
            if self.usage == "instantiate":
                allowed = {rec["target"] for (t, _), rec in self.collected.items()
                           if t == "reference_target" and rec["target"] is not None}
                self._admissible_entities(allowed)

        out = sorted(self.collected.values(),
                     key=lambda r: (ALL_TABLES.index(r["table"]), r["id"]))
        return out
