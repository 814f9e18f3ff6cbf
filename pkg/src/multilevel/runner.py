"""Function resolution and execution.

Functions are model entities: their ordered steps reference points at
sub-functions and actions, and an action's HTTP method and address live in
attribute values on the action entity. Running a function walks the
resolved tree depth first in step order against a shared context document.
The context starts with the subject's object facet under the key "entity";
each completed action parses its response into the context under its output
key, so later actions can substitute data from earlier ones.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Protocol, Union

import requests

from . import placeholders
from .builtins import ACTION, FUNCTION
from .errors import ActionFailed, BadPattern, CyclicSteps, MalformedAction, NotAFunction
from .facets import object_facet
from .kernel import ModelGraph
from .templates import _attr_value, _targets_of

log = logging.getLogger(__name__)


@dataclass
class ActionDef:
    entity: int
    method: str
    address: str
    body_template: Optional[str] = None
    output_key: str = ""


@dataclass
class FunctionDef:
    entity: int
    steps: list[Union["FunctionDef", ActionDef]] = field(default_factory=list)


@dataclass
class StepOutcome:
    step: int
    kind: str
    status: str
    detail: dict = field(default_factory=dict)

    def document(self) -> dict:
        return {"step": self.step, "kind": self.kind, "status": self.status,
                "detail": self.detail}


@dataclass
class RunResult:
    success: bool
    outcomes: list[StepOutcome]
    context: dict

    def document(self) -> dict:
        return {
            "success": self.success,
            "steps": [o.document() for o in self.outcomes],
            "context": self.context,
        }


class HttpClient(Protocol):
    def request(self, method: str, url: str,
                body: Optional[str] = None) -> tuple[int, str]:
        """Perform the call; returns (status code, response text)."""


class RequestsClient:
    """Production HTTP client; safe to share across workers."""

    def __init__(self, timeout: float = 30.0):
        self.timeout = timeout
        self.session = requests.Session()

    def request(self, method: str, url: str, body: Optional[str] = None):
        headers = {}
        data = None
        if body is not None:
            data = body.encode("utf-8")
            headers["Content-Type"] = "application/json" if _parses_as_json(body) \
                else "text/plain; charset=utf-8"
        resp = self.session.request(method, url, data=data, headers=headers,
                                    timeout=self.timeout)
        return resp.status_code, resp.text


def _parses_as_json(text: str) -> bool:
    try:
        json.loads(text)
        return True
    except ValueError:
        return False


ALLOWED_METHODS = ("GET", "POST", "PUT", "PATCH", "DELETE")


def resolve_function(model: ModelGraph, function_entity: int,
                     steps_reference: Optional[int] = None) -> FunctionDef:
    """Resolve the step tree of a function entity.

    steps_reference picks the reference whose targets form the root step
    list when several steps-bearing references exist; the builtin steps
    reference is assumed otherwise. Cycles in the steps graph are rejected.
    """
    builtin_fn = model.entity_by_identifier(FUNCTION)
    builtin_act = model.entity_by_identifier(ACTION)
    if builtin_fn is None or builtin_act is None:
        raise NotAFunction("builtin function/action entities are missing; run migrate")

    def is_function(eid: int) -> bool:
        return builtin_fn.id in model.instance_closure(eid)

    def is_action(eid: int) -> bool:
        return builtin_act.id in model.instance_closure(eid)

    if not is_function(function_entity):
        raise NotAFunction(f"entity {function_entity} is not an instance of function")

    def step_targets(eid: int, ref_id: Optional[int]) -> list[int]:
        if ref_id is not None:
            decl = model.references.get(ref_id)
            if decl is None:
                raise NotAFunction(f"parent reference {ref_id} does not exist")
            ls = model.link_set_of(eid, decl.id)
            if ls is not None:
                return [l.target for l in model.links_of(ls.id)]
            if decl.owner == eid:
                return [t.target for t in model.decl_type_targets(decl.id)]
            return []
        return _targets_of(model, eid, "steps")

    def resolve(eid: int, ref_id: Optional[int], trail: tuple[int, ...]) -> FunctionDef:
        if eid in trail:
            raise CyclicSteps(f"function {eid} reached through its own steps")
        fdef = FunctionDef(eid)
        for target in step_targets(eid, ref_id):
            if is_action(target):
                fdef.steps.append(_resolve_action(model, target))
            elif is_function(target):
                fdef.steps.append(resolve(target, None, trail + (eid,)))
            else:
                raise MalformedAction(
                    f"step target {target} is neither a function nor an action")
        return fdef

    return resolve(function_entity, steps_reference, ())


def _resolve_action(model: ModelGraph, eid: int) -> ActionDef:
    method = _attr_value(model, eid, "method")
    address = _attr_value(model, eid, "address")
    if not method or not address:
        raise MalformedAction(f"action {eid} lacks a method or address value")
    method = method.upper()
    if method not in ALLOWED_METHODS:
        raise MalformedAction(f"action {eid} has unsupported method {method!r}")
    entity = model.entities[eid]
    output_key = _attr_value(model, eid, "output_key") \
        or entity.identifier or f"step_{eid}"
    if output_key == "entity":
        raise MalformedAction(
            f"action {eid} must not use the reserved output key 'entity'")
    return ActionDef(eid, method, address,
                     body_template=_attr_value(model, eid, "body_template"),
                     output_key=output_key)


def run(model: ModelGraph, function_def: FunctionDef, subject: int,
        http_client: HttpClient) -> RunResult:
    """Execute the resolved function on a subject entity.

    Actions run depth first in step order; the first failure aborts the run
    and the partial outcome list is preserved. Placeholder substitution is
    total: an unresolvable path fails the action before any request is sent.
    """
    context: dict = {"entity": object_facet(model, subject)}
    outcomes: list[StepOutcome] = []

    def fail(outcome: StepOutcome, message: str) -> RunResult:
        outcome.status = "failed"
        outcome.detail["error"] = message
        outcomes.append(outcome)
        return RunResult(False, outcomes, context)

    def execute(fdef: FunctionDef) -> Optional[RunResult]:
        for step in fdef.steps:
            if isinstance(step, FunctionDef):
                result = execute(step)
                if result is not None:
                    return result
                continue
            outcome = StepOutcome(step.entity, "action", "ok",
                                  {"output_key": step.output_key})
            try:
                url = placeholders.substitute(step.address, context)
                body = None
                if step.body_template is not None:
                    body = placeholders.substitute(step.body_template, context)
            except (KeyError, BadPattern) as exc:
                return fail(outcome, f"unresolvable placeholder: {exc}")
            try:
                status, text = http_client.request(step.method, url, body)
            except Exception as exc:  # transport failure
                return fail(outcome, f"transport error: {exc}")
            outcome.detail["status_code"] = status
            if not 200 <= status < 300:
                return fail(outcome, f"endpoint returned status {status}")
            try:
                parsed = json.loads(text) if text else {}
            except ValueError:
                parsed = {"raw": text}
            if not isinstance(parsed, dict):
                parsed = {"raw": parsed}
            context[step.output_key] = parsed
            outcomes.append(outcome)
        return None

    result = execute(function_def)
    if result is not None:
        log.warning("function %s failed at step %s on entity %s",
                    function_def.entity, result.outcomes[-1].step, subject)
        return result
    return RunResult(True, outcomes, context)
