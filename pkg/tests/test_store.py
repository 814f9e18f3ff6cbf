"""Relational persistence: migration, round trips, facet rows, raw queries."""

import random
import sqlite3

import pytest

from multilevel.errors import PermissionDenied, UnknownEntity, WriteAttempted
from multilevel.facets import dumps_document, facet_document
from multilevel.fixtures import build_pizza_fixture
from multilevel.kernel import ModelGraph
from multilevel.store import ALL_TABLES, Store, model_from_rows
from multilevel.validation import validate

from util import random_ops_model


@pytest.fixture
def store(tmp_path):
    s = Store(f"sqlite:///{tmp_path}/model.db")
    s.migrate()
    return s


def test_migrate_creates_nine_tables(store):
    assert sorted(store.table_names()) == sorted(ALL_TABLES)
    assert len(store.table_names()) == 9


def test_migrate_is_idempotent(store, tmp_path):
    before = store.table_names()
    store.migrate()
    assert store.table_names() == before


def test_migrate_without_ddl_privilege(tmp_path):
    db = tmp_path / "ro.db"
    sqlite3.connect(db).close()  # valid empty database file
    s = Store(f"sqlite:///{db}?mode=ro")
    with pytest.raises(PermissionDenied):
        s.migrate()


def test_demo_round_trip_is_exact(store, pizza):
    model, _ = pizza
    store.persist(model)
    loaded = store.load()
    assert loaded.fact_multiset() == model.fact_multiset()


def test_empty_model_round_trip(store):
    model = ModelGraph()
    store.persist(model)
    assert store.load().fact_multiset() == []


def test_random_models_round_trip(tmp_path):
    rng = random.Random(1234)
    for trial in range(25):
        s = Store(f"sqlite:///{tmp_path}/rt{trial}.db")
        s.migrate()
        model = random_ops_model(rng)
        s.persist(model)
        assert s.load().fact_multiset() == model.fact_multiset()


def test_persist_twice_is_stable(store, pizza):
    model, _ = pizza
    store.persist(model)
    first = store.dump_rows()
    store.persist(store.load())
    assert store.dump_rows() == first


def test_dangling_row_loads_and_validates(store, pizza):
    model, ids = pizza
    store.persist(model)
    store.insert_row("attribute_value",
                     {"id": 2000000, "entity": ids["Margherita"],
                      "attribute": 1999999, "value": "9"})
    loaded = store.load()
    assert "DANGLING_FACT" in [v.code for v in validate(loaded)]


def test_facet_rows_for_margherita_edit(store, pizza):
    model, ids = pizza
    store.persist(model)
    rows = store.facet_rows(ids["Margherita"], "edit")
    toppings_rows = [r for r in rows if r["table"] == "reference_target"
                     and r["reference"] == ids["Margherita.toppings"]]
    assert len(toppings_rows) == 2
    value_rows = [r for r in rows if r["table"] == "attribute_value"]
    assert len(value_rows) == 1 and value_rows[0]["entity"] == ids["Margherita"]


def test_facet_rows_for_bare_entity_instantiate(store):
    model = ModelGraph()
    bare = model.add_entity("bare", "Bare", "")
    store.persist(model)
    rows = store.facet_rows(bare, "instantiate")
    assert rows == [{"table": "entity", "id": bare, "identifier": "bare",
                     "name": "Bare", "description": ""}]


def test_facet_rows_for_pizza_generalise_includes_energy(store, pizza):
    model, ids = pizza
    store.persist(model)
    rows = store.facet_rows(ids["Pizza"], "generalise")
    attr_rows = [r for r in rows if r["table"] == "attribute"]
    assert any(r["name"] == "energy content" and r["potency"] == 1 for r in attr_rows)


def test_facet_rows_unknown_entity(store):
    with pytest.raises(UnknownEntity):
        store.facet_rows(123456, "edit")


def test_facet_from_rows_equals_facet_from_model(store, pizza):
    model, ids = pizza
    store.persist(model)
    full = store.load()
    for eid in sorted(model.entities):
        for usage in ("edit", "view", "instantiate", "generalise"):
            partial = model_from_rows(store.facet_rows(eid, usage))
            assert facet_document(partial, eid, usage) == \
                facet_document(full, eid, usage), (eid, usage)


def test_serialization_identical_across_loads(store, pizza):
    model, ids = pizza
    store.persist(model)
    one = dumps_document(facet_document(store.load(), ids["Margherita"], "view"))
    two = dumps_document(facet_document(store.load(), ids["Margherita"], "view"))
    assert one == two


def test_raw_query_counts_entities(store, pizza):
    model, _ = pizza
    store.persist(model)
    rows = store.raw_query("SELECT id AS entity FROM nivel.entity")
    assert len(rows) == len(model.entities)
    assert all("entity" in r for r in rows)


def test_raw_query_empty_result(store):
    assert store.raw_query("SELECT id FROM nivel.entity WHERE id < 0") == []


def test_raw_query_rejects_writes(store):
    with pytest.raises(WriteAttempted):
        store.raw_query("DELETE FROM nivel.entity")
    with pytest.raises(WriteAttempted):
        store.raw_query("UPDATE nivel.entity SET name = 'x'")


def test_record_log_appends(store):
    before = len([r for r in store.dump_rows() if r["table"] == "log_record"])
    store.record_log("datapi", "info", "2026-01-01T00:00:00", "started", "{}")
    after = [r for r in store.dump_rows() if r["table"] == "log_record"]
    assert len(after) == before + 1


def test_many_log_records_have_increasing_ids(store):
    for i in range(1000):
        store.record_log("datapi", "info", "2026-01-01T00:00:00", f"m{i}")
    rows = [r for r in store.dump_rows() if r["table"] == "log_record"]
    ids = [r["id"] for r in rows]
    assert len(ids) == 1000
    assert ids == sorted(ids) and len(set(ids)) == 1000


def test_empty_payload_allowed(store):
    store.record_log("datapi", "info", "2026-01-01T00:00:00", "msg", "")
    row = [r for r in store.dump_rows() if r["table"] == "log_record"][-1]
    assert row["payload"] == ""


def test_identity_values_not_reused_after_delete(store):
    store.record_log("a", "info", "t", "one")
    conn = sqlite3.connect(store.path)
    conn.execute("DELETE FROM log_record")
    conn.commit()
    conn.close()
    store.record_log("a", "info", "t", "two")
    rows = [r for r in store.dump_rows() if r["table"] == "log_record"]
    assert rows[0]["id"] == 2


def test_unsupported_engine_rejected():
    from multilevel.errors import ConnectionFailure

    with pytest.raises(ConnectionFailure):
        Store("postgresql://localhost/x")
