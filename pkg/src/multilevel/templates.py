"""Pattern-based model-to-text conversion.

A conversion is an ordinary function entity holding a set of named pattern
entities, one of which is the root. Rendering starts at the root pattern and
recurses into sub-patterns through reference placeholders, walking the
subject entity's reference targets in position order.

Placeholder kinds:

    ${field:name}                    entity field (id, identifier, name, description)
    ${attr:energy content}          attribute value, empty string when unset
    ${ref:toppings:line}            render pattern "line" for every target
    ${ref:toppings:line:, }         same, joined with a separator
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from . import placeholders
from .errors import BadPattern, MissingRoot, NotAConversion, RecursionLimit
from .kernel import ModelGraph

log = logging.getLogger(__name__)

FIELDS = ("id", "identifier", "name", "description")

MAX_DEPTH = 64


@dataclass(frozen=True)
class TextSeg:
    value: str


@dataclass(frozen=True)
class Placeholder:
    kind: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class PatternAst:
    segments: tuple


@dataclass(frozen=True)
class ConversionDef:
    function: int
    patterns: dict[str, PatternAst]
    root: str
    output_media: str | None = None


def parse_pattern(text: str) -> PatternAst:
    segments = []
    for seg in placeholders.scan(text):
        if isinstance(seg, placeholders.Text):
            segments.append(TextSeg(seg.value))
            continue
        inner = seg.inner
        kind, _, rest = inner.partition(":")
        if kind == "field":
            if rest not in FIELDS:
                raise BadPattern(f"field placeholder needs one of {FIELDS}, got {rest!r}")
            segments.append(Placeholder("field", (rest,)))
        elif kind == "attr":
            if not rest:
                raise BadPattern("attr placeholder needs an attribute name")
            segments.append(Placeholder("attr", (rest,)))
        elif kind == "ref":
            parts = rest.split(":", 2)
            if len(parts) < 2 or not parts[0] or not parts[1]:
                raise BadPattern(
                    "ref placeholder needs a reference name and a pattern name")
            segments.append(Placeholder("ref", tuple(parts)))
        else:
            raise BadPattern(f"unknown placeholder kind {kind!r}")
    return PatternAst(tuple(segments))


def serialize_pattern(ast: PatternAst) -> str:
    segs: list[placeholders.Segment] = []
    for seg in ast.segments:
        if isinstance(seg, TextSeg):
            segs.append(placeholders.Text(seg.value))
        else:
            segs.append(placeholders.Hole(seg.kind + ":" + ":".join(seg.args)))
    return placeholders.unscan(segs)


def _attr_value(model: ModelGraph, eid: int, name: str) -> str | None:
    for v in model.values.values():
        if v.holder != eid:
            continue
        decl = model.attributes.get(v.attribute)
        if decl is not None and decl.name == name:
            return v.value
    return None


def _targets_of(model: ModelGraph, eid: int, ref_name: str) -> list[int]:
    """Targets the entity presents under a reference name, position order.

    Unifies the two target kinds: type targets of effective declarations and
    terminal links of the entity's link sets.
    """
    out: list[int] = []
    _, eff_refs = model.effective_declarations(eid)
    for d in eff_refs:
        if d.name == ref_name:
            out.extend(t.target for t in model.decl_type_targets(d.id))
    for ls in model.link_sets_of(eid):
        decl = model.references.get(ls.reference)
        if decl is not None and decl.name == ref_name:
            out.extend(l.target for l in model.links_of(ls.id))
    return out


def resolve_conversion(model: ModelGraph, conversion_entity: int) -> ConversionDef:
    """Gather and parse the pattern set of a conversion function entity."""
    fn = model.entity_by_identifier("function")
    if fn is None or fn.id not in model.instance_closure(conversion_entity):
        raise NotAConversion(f"entity {conversion_entity} is not a function instance")

    pattern_ids = _targets_of(model, conversion_entity, "patterns")
    root_ids = _targets_of(model, conversion_entity, "root_pattern")
    if len(root_ids) != 1:
        raise MissingRoot(
            f"conversion {conversion_entity} needs exactly one root_pattern target, "
            f"found {len(root_ids)}")
    root_id = root_ids[0]
    if root_id not in pattern_ids:
        pattern_ids = pattern_ids + [root_id]

    patterns: dict[str, PatternAst] = {}
    root_name = None
    for pid in pattern_ids:
        entity = model.entities.get(pid)
        if entity is None:
            raise BadPattern(f"pattern entity {pid} does not exist")
        template = _attr_value(model, pid, "template")
        if template is None:
            raise BadPattern(f"pattern entity {pid} has no template value")
        name = _attr_value(model, pid, "name") or entity.identifier or entity.name
        if not name:
            raise BadPattern(f"pattern entity {pid} has no usable name")
        if name in patterns:
            raise BadPattern(f"duplicate pattern name {name!r}")
        patterns[name] = parse_pattern(template)
        if pid == root_id:
            root_name = name

    return ConversionDef(conversion_entity, patterns, root_name,
                         _attr_value(model, conversion_entity, "output_media"))


def convert(model: ModelGraph, conversion: ConversionDef, subject: int) -> str:
    """Render the subject entity through the conversion's root pattern."""
    model.require_entity(subject)

    def render(pattern_name: str, eid: int, depth: int) -> str:
        if depth > MAX_DEPTH:
            raise RecursionLimit(f"pattern recursion exceeded {MAX_DEPTH} levels")
        ast = conversion.patterns.get(pattern_name)
        if ast is None:
            raise BadPattern(f"no pattern named {pattern_name!r}")
        entity = model.entities.get(eid)
        out: list[str] = []
        for seg in ast.segments:
            if isinstance(seg, TextSeg):
                out.append(seg.value)
            elif seg.kind == "field":
                f = seg.args[0]
                if entity is None:
                    out.append("")
                else:
                    out.append(str(entity.id) if f == "id" else getattr(entity, f))
            elif seg.kind == "attr":
                value = _attr_value(model, eid, seg.args[0])
                if value is None:
                    log.info("attribute %r unset on entity %s; rendered empty",
                             seg.args[0], eid)
                    value = ""
                out.append(value)
            else:
                ref_name, sub_pattern = seg.args[0], seg.args[1]
                sep = seg.args[2] if len(seg.args) > 2 else ""
                parts = [render(sub_pattern, t, depth + 1)
                         for t in _targets_of(model, eid, ref_name)]
                out.append(sep.join(parts))
        return "".join(out)

    return render(conversion.root, subject, 0)
