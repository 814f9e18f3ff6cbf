"""Reserved model entities created at migration time.

``function`` instances hold an ordered ``steps`` reference over further
functions and actions. ``action`` instances carry the HTTP call definition
as attribute values: method and address are required, body_template and
output_key optional.
"""

from __future__ import annotations

from .kernel import ModelGraph

FUNCTION = "function"
ACTION = "action"

ACTION_ATTRS = ("method", "address", "body_template", "output_key")


def ensure_builtins(model: ModelGraph) -> dict[str, int]:
    """Create the builtin entities if absent; returns their ids by identifier."""
    out: dict[str, int] = {}

    fn = model.entity_by_identifier(FUNCTION)
    if fn is None:
        fn_id = model.add_entity(FUNCTION, "function", "Runnable sequence of steps")
    else:
        fn_id = fn.id
    out[FUNCTION] = fn_id

    act = model.entity_by_identifier(ACTION)
    if act is None:
        act_id = model.add_entity(ACTION, "action", "HTTP endpoint call")
    else:
        act_id = act.id
    out[ACTION] = act_id

    steps = [d for d in model.own_references(fn_id) if d.name == "steps"]
    if not steps:
        model.declare_reference(fn_id, "steps", potency=1, ordered=True,
                                min_card=0, max_card=None,
                                type_targets=(fn_id, act_id))
    declared = {d.name for d in model.own_attributes(act_id)}
    for name in ACTION_ATTRS:
        if name not in declared:
            model.declare_attribute(act_id, name, "string", 1)
    return out
