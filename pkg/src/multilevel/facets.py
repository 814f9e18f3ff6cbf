"""Entity-form documents: one nested document per entity and usage.

Three facets exist. The object facet is the entity's own data (used for
viewing and editing), the type facet describes what an instance would
receive, and the generalise facet describes what a specialisation inherits.
Documents are plain dicts with a fixed key order so that serialization is
byte-identical for identical model contents.
"""

from __future__ import annotations

import json
from typing import Optional

from .kernel import ModelGraph, ReferenceDecl

USAGES = ("view", "edit", "instantiate", "generalise")


def dumps_document(doc) -> str:
    """Canonical JSON used on the wire and in golden files."""
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":"))


def entity_summary(model: ModelGraph, eid: int) -> dict:
    e = model.entities[eid]
    return {"id": e.id, "identifier": e.identifier, "name": e.name}


def _summaries(model: ModelGraph, ids) -> list[dict]:
    return [entity_summary(model, i) for i in ids if i in model.entities]


def _admissible(model: ModelGraph, target_ids: set[int]) -> list[dict]:
    members = [e for e in model.entities
               if model.instance_closure(e) & target_ids]
    return _summaries(model, sorted(members))


def _header(model: ModelGraph, eid: int) -> dict:
    e = model.require_entity(eid)
    return {
        "id": e.id,
        "identifier": e.identifier,
        "name": e.name,
        "description": e.description,
        "types": _summaries(model, model.direct_types(eid)),
        "supertypes": _summaries(model, model.direct_supertypes(eid)),
    }


def _decl_entry(model: ModelGraph, d: ReferenceDecl, potency: int,
                targets: list[dict], admissible: Optional[list[dict]]) -> dict:
    entry = {
        "name": d.name,
        "potency": potency,
        "ordered": d.ordered,
        "minCard": d.min_card,
        "maxCard": d.max_card,
        "targets": targets,
    }
    if admissible is not None:
        entry["admissible"] = admissible
    return entry


def object_facet(model: ModelGraph, eid: int, include_admissible: bool = False) -> dict:
    """The entity's own data: values, open slots, links, own declarations.

    With include_admissible (edit usage) every narrowable declaration and
    link set also lists the entities currently admissible as targets, and
    entries carry the handles an editor needs to build a PATCH: slot entries
    the declaration id ("attribute"), reference entries the declaration id
    ("reference"), and each target its row id ("link").
    """
    doc = _header(model, eid)

    attrs = []
    for d in model.own_attributes(eid):
        attrs.append((d.id, {"name": d.name, "datatype": d.datatype, "potency": d.potency}))
    for root in model.value_slots(eid):
        entry = {"name": root.name, "datatype": root.datatype, "potency": 0}
        if include_admissible:
            entry["attribute"] = root.id
        v = model.value_of(eid, root.id)
        if v is not None:
            entry["value"] = v.value
        attrs.append((root.id, entry))
    attrs.sort(key=lambda item: item[0])
    doc["attributes"] = [entry for _, entry in attrs]

    def target_items(rows):
        items = []
        for row in rows:
            if row.target not in model.entities:
                continue
            item = entity_summary(model, row.target)
            if include_admissible:
                item["link"] = row.id
            items.append(item)
        return items

    refs = []
    for d in model.own_references(eid):
        targets = target_items(model.decl_type_targets(d.id))
        admissible = None
        if include_admissible and d.instantiates is not None:
            allowed = model._governing_target_ids(d)
            admissible = _admissible(model, allowed or set())
        entry = _decl_entry(model, d, d.potency, targets, admissible)
        if include_admissible:
            entry["reference"] = d.id
        refs.append((d.id, entry))
    for ls in model.link_sets_of(eid):
        d = model.references.get(ls.reference)
        if d is None:
            continue
        targets = target_items(model.links_of(ls.id))
        admissible = None
        if include_admissible:
            allowed = {t.target for t in model.decl_type_targets(d.id)}
            admissible = _admissible(model, allowed)
        entry = _decl_entry(model, d, 0, targets, admissible)
        if include_admissible:
            entry["reference"] = d.id
        refs.append((ls.id, entry))
    refs.sort(key=lambda item: item[0])
    doc["references"] = [entry for _, entry in refs]
    return doc


def type_facet(model: ModelGraph, eid: int) -> dict:
    """What an instance of the entity would receive, potencies decremented.

    Potency-1 declarations show up at potency 0: open value slots and link
    slots with their cardinality bounds and admissible target sets.
    """
    doc = _header(model, eid)
    eff_attrs, eff_refs = model.effective_declarations(eid)

    # Value slots land on the instance keyed by their root declaration, which
    # always precedes the instance's freshly derived declarations; mirror that
    # order here so the promised structure matches the instance's facet.
    slots = sorted((d for d in eff_attrs if d.potency == 1),
                   key=lambda d: model.attribute_root(d.id).id)
    derived = [d for d in eff_attrs if d.potency >= 2]
    doc["attributes"] = [
        {"name": d.name, "datatype": d.datatype, "potency": 0}
        for d in slots
    ] + [
        {"name": d.name, "datatype": d.datatype, "potency": d.potency - 1}
        for d in derived
    ]
    refs = []
    for d in eff_refs:
        allowed = {t.target for t in model.decl_type_targets(d.id)}
        refs.append(_decl_entry(model, d, d.potency - 1, [], _admissible(model, allowed)))
    doc["references"] = refs
    return doc


def generalise_facet(model: ModelGraph, eid: int) -> dict:
    """What a specialisation inherits: effective declarations, potencies unchanged."""
    doc = _header(model, eid)
    eff_attrs, eff_refs = model.effective_declarations(eid)
    doc["attributes"] = [
        {"name": d.name, "datatype": d.datatype, "potency": d.potency}
        for d in eff_attrs
    ]
    doc["references"] = [
        _decl_entry(model, d, d.potency,
                    _summaries(model, [t.target for t in model.decl_type_targets(d.id)]),
                    None)
        for d in eff_refs
    ]
    return doc


def facet_document(model: ModelGraph, eid: int, usage: str) -> dict:
    if usage == "view":
        return object_facet(model, eid, include_admissible=False)
    if usage == "edit":
        return object_facet(model, eid, include_admissible=True)
    if usage == "instantiate":
        return type_facet(model, eid)
    if usage == "generalise":
        return generalise_facet(model, eid)
    raise ValueError(f"unknown usage {usage!r}")
