"""HTTP API exposing entities in entity form.

The serving process owns the model: it loads the fact graph once, keeps it
in memory, and is the single writer. Writers clone the graph, apply all
edits, persist in one transaction, then swap the reference; readers use
whatever reference they grabbed, so reads never block and a failed
mutation leaves no trace. Response bodies are canonical JSON, byte-equal
to the kernel's facet documents.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from typing import Optional

import requests as _requests
from fastapi import Body, FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError

from . import runner as runner_mod
from . import templates
from .errors import (
    ActionFailed,
    ConnectionFailure,
    ConvertError,
    DuplicateIdentifier,
    EngineError,
    ExecutionError,
    ModelError,
    UnknownDeclaration,
    UnknownEntity,
)
from .facets import USAGES, dumps_document, facet_document, object_facet
from .kernel import ModelGraph
from .store import Store

log = logging.getLogger(__name__)


def _json_response(doc, status_code: int = 200) -> Response:
    return Response(content=dumps_document(doc), status_code=status_code,
                    media_type="application/json")


def _error_response(status: int, code: str, message: str) -> Response:
    return _json_response({"error": code, "message": message}, status)


def _status_for(exc: EngineError) -> int:
    if isinstance(exc, (UnknownEntity, UnknownDeclaration)):
        return 404
    if isinstance(exc, ActionFailed):
        return 502
    if isinstance(exc, (ModelError, ExecutionError, ConvertError)):
        return 422
    return 500


class LogSinkHandler(logging.Handler):
    """Forwards this service's own log records to a central log endpoint."""

    def __init__(self, sink_url: str, service_name: str = "datapi"):
        super().__init__()
        self.sink_url = sink_url
        self.service_name = service_name
        self.session = _requests.Session()

    def emit(self, record: logging.LogRecord) -> None:
        try:
            self.session.post(self.sink_url, json={
                "service": self.service_name,
                "level": record.levelname.lower(),
                "at": self.formatter.formatTime(record) if self.formatter
                else str(record.created),
                "message": record.getMessage(),
                "payload": "",
            }, timeout=5)
        except Exception:
            pass  # log forwarding must never break the service


def create_app(db_url: Optional[str] = None, schema: Optional[str] = None,
               store: Optional[Store] = None,
               http_client: Optional[runner_mod.HttpClient] = None) -> FastAPI:
    if store is None:
        url = db_url or os.environ.get("NIVEL_DB_URL")
        if not url:
            raise ConnectionFailure("NIVEL_DB_URL is not set")
        store = Store(url, schema or os.environ.get("NIVEL_SCHEMA", "nivel"))
    if not store.is_migrated():
        raise ConnectionFailure("database is not migrated; run the migrate command")

    app = FastAPI(title="multilevel model service", openapi_url=None)
    app.state.store = store
    app.state.model = store.load()
    app.state.write_lock = threading.Lock()
    app.state.http_client = http_client or runner_mod.RequestsClient()

    @app.exception_handler(RequestValidationError)
    async def _malformed(request: Request, exc: RequestValidationError):
        return _error_response(400, "MalformedBody", "request body is not valid JSON")

    def current_model() -> ModelGraph:
        return app.state.model

    def mutate(fn):
        """Clone, apply, persist, swap; any error leaves the model untouched."""
        with app.state.write_lock:
            work = app.state.model.clone()
            result = fn(work)
            store.persist(work)
            app.state.model = work
            return result

    # --- entity collection -------------------------------------------------

    @app.get("/api/entities")
    def list_entities(name_like: Optional[str] = None,
                      instance_of: Optional[int] = None):
        model = current_model()
        out = []
        for eid in sorted(model.entities):
            e = model.entities[eid]
            if name_like is not None and name_like.lower() not in e.name.lower():
                continue
            if instance_of is not None and instance_of not in model.instance_closure(eid):
                continue
            out.append({"id": e.id, "identifier": e.identifier, "name": e.name})
        return _json_response(out)

    @app.post("/api/entities")
    def create_entity(payload: Optional[dict] = Body(None)):
        body = payload or {}
        instantiate_of = body.get("instantiate_of")
        specialise_of = body.get("specialise_of")
        if instantiate_of is not None and specialise_of is not None:
            return _error_response(400, "BadRequest",
                                   "at most one of instantiate_of/specialise_of")
        identifier = body.get("identifier", "") or ""
        name = body.get("name", "") or ""
        description = body.get("description", "") or ""

        def apply(work: ModelGraph) -> int:
            if instantiate_of is not None:
                return work.instantiate(int(instantiate_of), identifier, name, description)
            eid = work.add_entity(identifier, name, description)
            if specialise_of is not None:
                work.assert_specialisation(eid, int(specialise_of))
            return eid

        try:
            eid = mutate(apply)
        except DuplicateIdentifier as exc:
            return _error_response(409, exc.code, str(exc))
        except EngineError as exc:
            return _error_response(_status_for(exc), exc.code, str(exc))
        return _json_response(object_facet(current_model(), eid), 201)

    # --- single entity ------------------------------------------------------

    @app.get("/api/entities/{entity_id}")
    def get_entity(entity_id: int, usage: str = "view"):
        if usage not in USAGES:
            return _error_response(400, "BadUsage", f"usage must be one of {USAGES}")
        model = current_model()
        try:
            doc = facet_document(model, entity_id, usage)
        except UnknownEntity as exc:
            return _error_response(404, exc.code, str(exc))
        return _json_response(doc)

    @app.patch("/api/entities/{entity_id}")
    def patch_entity(entity_id: int, payload: Optional[dict] = Body(None)):
        body = payload or {}

        def apply(work: ModelGraph):
            work.require_entity(entity_id)
            namefields = body.get("namefields") or {}
            if namefields:
                work.set_entity_fields(entity_id,
                                       identifier=namefields.get("identifier"),
                                       name=namefields.get("name"),
                                       description=namefields.get("description"))
            for edit in body.get("values") or []:
                decl = int(edit["attribute"])
                if edit.get("value") is None:
                    work.remove_value(entity_id, decl)
                else:
                    work.assign_value(entity_id, decl, str(edit["value"]))
            for edit in body.get("targets") or []:
                decl = int(edit["reference"])
                for row_id in edit.get("remove") or []:
                    work.remove_type_target(int(row_id))
                for item in edit.get("add") or []:
                    target, position = _target_spec(item)
                    work.add_type_target(decl, target, position)
            for edit in body.get("links") or []:
                decl = int(edit["reference"])
                for link_id in edit.get("remove") or []:
                    work.remove_link(int(link_id))
                for item in edit.get("add") or []:
                    target, position = _target_spec(item)
                    if position is None and _is_ordered(work, decl):
                        ls = work.link_set_of(entity_id, decl)
                        position = len(work.links_of(ls.id)) if ls else 0
                    work.link_target(entity_id, decl, target, position)

        try:
            mutate(apply)
        except UnknownEntity as exc:
            return _error_response(404, exc.code, str(exc))
        except (EngineError, KeyError, TypeError, ValueError) as exc:
            code = exc.code if isinstance(exc, EngineError) else "BadEdit"
            return _error_response(422, code, str(exc))
        return _json_response(object_facet(current_model(), entity_id))

    @app.delete("/api/entities/{entity_id}")
    def delete_entity(entity_id: int):
        try:
            mutate(lambda work: work.delete_entity(entity_id))
        except UnknownEntity as exc:
            return _error_response(404, exc.code, str(exc))
        except EngineError as exc:
            return _error_response(_status_for(exc), exc.code, str(exc))
        return Response(status_code=204)

    # --- function execution ---------------------------------------------------

    @app.post("/api/entities/{entity_id}/run/{function_id}")
    def run_function(entity_id: int, function_id: int,
                     parent_reference: Optional[int] = None):
        model = current_model()
        try:
            model.require_entity(entity_id)
            model.require_entity(function_id)
            fdef = runner_mod.resolve_function(model, function_id, parent_reference)
        except UnknownEntity as exc:
            return _error_response(404, exc.code, str(exc))
        except ExecutionError as exc:
            return _error_response(422, exc.code, str(exc))
        result = runner_mod.run(model, fdef, entity_id, app.state.http_client)
        doc = result.document()
        if not result.success:
            doc["error"] = "ActionFailed"
            return _json_response(doc, 502)
        return _json_response(doc)

    # --- conversion --------------------------------------------------------------

    @app.post("/api/convert/{conversion_id}/{entity_id}")
    def convert_entity(conversion_id: int, entity_id: int):
        model = current_model()
        try:
            model.require_entity(conversion_id)
            model.require_entity(entity_id)
            cdef = templates.resolve_conversion(model, conversion_id)
            text = templates.convert(model, cdef, entity_id)
        except UnknownEntity as exc:
            return _error_response(404, exc.code, str(exc))
        except (ConvertError, ExecutionError) as exc:
            return _error_response(422, exc.code, str(exc))
        media = cdef.output_media or "text/plain"
        return Response(content=text, media_type=f"{media}; charset=utf-8")

    # --- log ingestion --------------------------------------------------------------

    @app.post("/api/logs")
    def post_log(payload: Optional[dict] = Body(None)):
        body = payload or {}
        missing = [k for k in ("service", "level", "at", "message") if k not in body]
        if missing:
            return _error_response(400, "MalformedBody",
                                   f"missing fields: {', '.join(missing)}")
        raw = body.get("payload", "")
        if isinstance(raw, (dict, list)):
            raw = json.dumps(raw, ensure_ascii=False, separators=(",", ":"))
        store.record_log(str(body["service"]), str(body["level"]), str(body["at"]),
                         str(body["message"]), str(raw))
        return Response(status_code=204)

    return app


def _target_spec(item) -> tuple[int, Optional[int]]:
    if isinstance(item, dict):
        return int(item["target"]), (int(item["position"])
                                     if item.get("position") is not None else None)
    return int(item), None


def _is_ordered(model: ModelGraph, decl_id: int) -> bool:
    decl = model.references.get(decl_id)
    return decl is not None and decl.ordered
