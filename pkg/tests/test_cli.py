"""Operator commands: migrate, seed-demo, validate, export/import, convert."""

import json

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from multilevel.cli import main
from multilevel.service import create_app
from multilevel.store import Store


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def db(tmp_path):
    return f"sqlite:///{tmp_path}/cli.db"


def test_migrate_creates_tables_and_builtins(runner, db):
    result = runner.invoke(main, ["migrate", "--db", db])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert len(report["tables"]) == 9
    assert set(report["builtins"]) == {"function", "action"}
    again = runner.invoke(main, ["migrate", "--db", db])
    assert json.loads(again.output)["builtins"] == report["builtins"]


def test_seed_demo_then_validate_clean(runner, db):
    assert runner.invoke(main, ["migrate", "--db", db]).exit_code == 0
    seeded = runner.invoke(main, ["seed-demo", "--db", db])
    assert seeded.exit_code == 0, seeded.output
    ids = json.loads(seeded.output)
    assert ids["Topping"] == 1003685
    checked = runner.invoke(main, ["validate", "--db", db])
    assert checked.exit_code == 0, checked.output
    assert json.loads(checked.output) == []


def test_seed_demo_requires_migration(runner, db):
    result = runner.invoke(main, ["seed-demo", "--db", db])
    assert result.exit_code != 0


def test_validate_reports_incomplete_after_patch(runner, db):
    runner.invoke(main, ["migrate", "--db", db])
    seeded = runner.invoke(main, ["seed-demo", "--db", db])
    ids = json.loads(seeded.output)
    client = TestClient(create_app(db_url=db))
    resp = client.patch(f"/api/entities/{ids['Margherita']}", json={
        "values": [{"attribute": ids["energy content"], "value": None}]})
    assert resp.status_code == 200
    checked = runner.invoke(main, ["validate", "--db", db])
    assert checked.exit_code == 1
    findings = json.loads(checked.output)
    assert [f["code"] for f in findings] == ["MISSING_VALUE"]


def test_export_import_round_trip_is_byte_identical(runner, db, tmp_path):
    runner.invoke(main, ["migrate", "--db", db])
    runner.invoke(main, ["seed-demo", "--db", db])
    first = runner.invoke(main, ["export", "--db", db])
    assert first.exit_code == 0
    second_db = f"sqlite:///{tmp_path}/copy.db"
    imported = runner.invoke(main, ["import", "--db", second_db],
                             input=first.output)
    assert imported.exit_code == 0, imported.output
    second = runner.invoke(main, ["export", "--db", second_db])
    assert second.output == first.output


def test_export_to_file(runner, db, tmp_path):
    runner.invoke(main, ["migrate", "--db", db])
    out = tmp_path / "dump.jsonl"
    result = runner.invoke(main, ["export", "--db", db, "--file", str(out)])
    assert result.exit_code == 0
    lines = out.read_text().strip().splitlines()
    assert all(json.loads(l)["table"] for l in lines)


def test_import_rejects_unknown_table_with_line_number(runner, db):
    stream = json.dumps({"table": "entity", "id": 1, "identifier": "",
                         "name": "A", "description": ""}) + "\n" \
        + json.dumps({"table": "bogus", "id": 2}) + "\n"
    result = runner.invoke(main, ["import", "--db", db], input=stream)
    assert result.exit_code != 0
    assert "line 2" in result.output


def test_convert_command_prints_text(runner, db):
    from multilevel.fixtures import build_markdown_conversion, build_pizza_fixture

    runner.invoke(main, ["migrate", "--db", db])
    store = Store(db)
    model = store.load()
    ids = build_pizza_fixture(model)
    ids.update(build_markdown_conversion(model))
    store.persist(model)
    result = runner.invoke(main, ["convert", "--db", db,
                                  str(ids["conversion"]), str(ids["Margherita"])])
    assert result.exit_code == 0, result.output
    assert result.output == "## Margherita\nToppings: Mozzarella, Tomato sauce\n"


def test_commands_fail_without_db(runner, monkeypatch):
    monkeypatch.delenv("NIVEL_DB_URL", raising=False)
    result = runner.invoke(main, ["validate"])
    assert result.exit_code != 0


def test_db_url_from_environment(runner, db, monkeypatch):
    monkeypatch.setenv("NIVEL_DB_URL", db)
    result = runner.invoke(main, ["migrate"])
    assert result.exit_code == 0, result.output
