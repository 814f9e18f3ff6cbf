"""Operator command line: schema setup, demo seeding, validation,
import/export, and the service/observer process launchers.

Reports go to standard output, diagnostics to standard error. Exit codes:
validate exits 0 when clean, 1 with only incomplete findings, 2 with any
error finding; every other command exits nonzero on failure.
"""

from __future__ import annotations

import json
import os
import sys

import click

from .builtins import ensure_builtins
from .errors import EngineError, UnknownTable
from .facets import dumps_document
from .fixtures import build_pizza_fixture
from .observer import DatapiRunner, observer_loop
from .store import ALL_TABLES, Store, TABLE_COLUMNS
from .templates import resolve_conversion, convert as run_conversion
from .validation import exit_code, validate


def _store(db: str | None, schema: str | None) -> Store:
    url = db or os.environ.get("NIVEL_DB_URL")
    if not url:
        raise click.ClickException("no database URL; pass --db or set NIVEL_DB_URL")
    return Store(url, schema or os.environ.get("NIVEL_SCHEMA", "nivel"))


db_option = click.option("--db", help="database URL (default: NIVEL_DB_URL)")
schema_option = click.option("--schema", help="schema name (default: NIVEL_SCHEMA or nivel)")


@click.group()
def main():
    """Multi-level model engine."""


@main.command()
@db_option
@schema_option
def migrate(db, schema):
    """Create the schema tables and the builtin function/action entities."""
    store = _store(db, schema)
    try:
        store.migrate()
        model = store.load()
        ids = ensure_builtins(model)
        store.persist(model)
    except EngineError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps({"tables": store.table_names(), "builtins": ids}))


@main.command("seed-demo")
@db_option
@schema_option
def seed_demo(db, schema):
    """Load the pizza demo model and print the created id map."""
    store = _store(db, schema)
    try:
        if not store.is_migrated():
            raise click.ClickException("database is not migrated; run migrate first")
        model = store.load()
        ids = build_pizza_fixture(model)
        store.persist(model)
    except EngineError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(ids, ensure_ascii=False))


@main.command("validate")
@db_option
@schema_option
def validate_cmd(db, schema):
    """Print the violation report and exit 0 (clean), 1 (incomplete), 2 (errors)."""
    store = _store(db, schema)
    try:
        model = store.load()
    except EngineError as exc:
        raise click.ClickException(str(exc))
    findings = validate(model)
    click.echo(dumps_document([v.document() for v in findings]))
    sys.exit(exit_code(findings))


@main.command("export")
@db_option
@schema_option
@click.option("--file", "path", help="write to a file instead of standard output")
def export_cmd(db, schema, path):
    """Dump every fact as one JSON document per line, field "table" plus columns."""
    store = _store(db, schema)
    try:
        rows = store.dump_rows()
    except EngineError as exc:
        raise click.ClickException(str(exc))
    lines = [json.dumps(r, ensure_ascii=False, separators=(",", ":")) for r in rows]
    text = "\n".join(lines) + ("\n" if lines else "")
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@main.command("import")
@db_option
@schema_option
@click.option("--file", "path", help="read from a file instead of standard input")
def import_cmd(db, schema, path):
    """Load an export stream into an empty database, ids preserved."""
    store = _store(db, schema)
    store.migrate()
    if path:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    else:
        lines = sys.stdin.readlines()
    count = 0
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except ValueError:
            raise click.ClickException(f"line {lineno}: not a JSON document")
        table = rec.pop("table", None)
        if table not in ALL_TABLES:
            raise click.ClickException(f"line {lineno}: unknown table {table!r}")
        unknown = set(rec) - set(TABLE_COLUMNS[table])
        if unknown:
            raise click.ClickException(
                f"line {lineno}: unknown columns {sorted(unknown)} for {table}")
        try:
            store.insert_row(table, rec)
        except (EngineError, UnknownTable) as exc:
            raise click.ClickException(f"line {lineno}: {exc}")
        count += 1
    click.echo(json.dumps({"imported": count}))


@main.command("serve")
@db_option
@schema_option
@click.option("--bind", help="host:port to listen on (default: NIVEL_BIND or 127.0.0.1:8000)")
def serve_cmd(db, schema, bind):
    """Run the HTTP service."""
    import logging

    import uvicorn

    from .service import LogSinkHandler, create_app

    bind = bind or os.environ.get("NIVEL_BIND", "127.0.0.1:8000")
    host, _, port = bind.rpartition(":")
    host = host or "127.0.0.1"
    store = _store(db, schema)
    try:
        app = create_app(store=store)
    except EngineError as exc:
        raise click.ClickException(str(exc))
    sink = os.environ.get("NIVEL_LOG_SINK")
    if sink:
        logging.getLogger("multilevel").addHandler(LogSinkHandler(sink))
    uvicorn.run(app, host=host, port=int(port))


@main.command("observe")
@db_option
@schema_option
@click.option("--api", help="base URL of the running service (default: NIVEL_API_URL)")
def observe_cmd(db, schema, api):
    """Run the interval observer until interrupted."""
    store = _store(db, schema)
    base = api or os.environ.get("NIVEL_API_URL")
    if not base:
        bind = os.environ.get("NIVEL_BIND", "127.0.0.1:8000")
        base = f"http://{bind}"
    try:
        observer_loop(store, DatapiRunner(base))
    except EngineError as exc:
        raise click.ClickException(str(exc))


@main.command("convert")
@db_option
@schema_option
@click.argument("conversion_id", type=int)
@click.argument("entity_id", type=int)
def convert_cmd(db, schema, conversion_id, entity_id):
    """Render an entity through a conversion and print the text."""
    store = _store(db, schema)
    try:
        model = store.load()
        cdef = resolve_conversion(model, conversion_id)
        text = run_conversion(model, cdef, entity_id)
    except EngineError as exc:
        raise click.ClickException(str(exc))
    click.echo(text, nl=False)


if __name__ == "__main__":
    main()
