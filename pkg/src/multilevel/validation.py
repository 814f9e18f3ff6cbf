"""Whole-model well-formedness checking.

Findings are data, not exceptions: the checker accepts arbitrary fact
graphs, including broken ones loaded from hand-edited stores. Severity
splits in two. Structural breaches (cycles, typing, potency arithmetic)
are errors; states a modeller is still expected to finish (unfilled
mandatory slots, unmet or exceeded cardinalities, ambiguous orders) are
incomplete.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .kernel import ModelGraph, parse_literal
from .errors import TypeMismatch, UnknownDatatype

ERROR = "error"
INCOMPLETE = "incomplete"

CODES = (
    "CYCLE_INSTANCE_OF",
    "CYCLE_SPECIALISATION",
    "NONPOSITIVE_REF_POTENCY",
    "POTENCY_DECREMENT_BROKEN",
    "TARGET_TYPE_MISMATCH",
    "CARDINALITY_MIN",
    "CARDINALITY_MAX",
    "VALUE_AT_WRONG_ORDER",
    "VALUE_TYPE_MISMATCH",
    "MISSING_VALUE",
    "AMBIGUOUS_ORDER",
    "DANGLING_FACT",
)

_SEVERITY = {
    "CYCLE_INSTANCE_OF": ERROR,
    "CYCLE_SPECIALISATION": ERROR,
    "NONPOSITIVE_REF_POTENCY": ERROR,
    "POTENCY_DECREMENT_BROKEN": ERROR,
    "TARGET_TYPE_MISMATCH": ERROR,
    "CARDINALITY_MIN": INCOMPLETE,
    "CARDINALITY_MAX": INCOMPLETE,
    "VALUE_AT_WRONG_ORDER": ERROR,
    "VALUE_TYPE_MISMATCH": ERROR,
    "MISSING_VALUE": INCOMPLETE,
    "AMBIGUOUS_ORDER": INCOMPLETE,
    "DANGLING_FACT": ERROR,
}


@dataclass(frozen=True)
class Violation:
    code: str
    severity: str
    subjects: tuple[int, ...]
    message: str

    def document(self) -> dict:
        return {
            "code": self.code,
            "severity": self.severity,
            "subjects": list(self.subjects),
            "message": self.message,
        }


def _v(code: str, subjects, message: str) -> Violation:
    return Violation(code, _SEVERITY[code], tuple(subjects), message)


def _cycle_nodes(edges: dict[int, set[int]]) -> list[tuple[int, ...]]:
    """Strongly connected components of size > 1, plus self-loops."""
    index = 0
    stack: list[int] = []
    on_stack: set[int] = set()
    indices: dict[int, int] = {}
    low: dict[int, int] = {}
    out: list[tuple[int, ...]] = []

    def strongconnect(v: int):
        nonlocal index
        work = [(v, iter(sorted(edges.get(v, ()))))]
        indices[v] = low[v] = index
        index += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in indices:
                    indices[w] = low[w] = index
                    index += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(edges.get(w, ())))))
                    advanced = True
                    break
                elif w in on_stack:
                    low[node] = min(low[node], indices[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == indices[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                if len(comp) > 1 or node in edges.get(node, ()):
                    out.append(tuple(sorted(comp)))

    for v in sorted(edges):
        if v not in indices:
            strongconnect(v)
    return out


class _Checker:
    def __init__(self, model: ModelGraph):
        self.m = model
        self.found: list[Violation] = []

    def run(self) -> list[Violation]:
        self.check_dangling()
        self.check_cycles()
        self.check_potencies()
        self.check_target_typing()
        self.check_cardinalities()
        self.check_values()
        self.check_missing_values()
        self.check_ambiguous_orders()
        self.found.sort(key=lambda v: (v.code, v.subjects))
        return self.found

    def check_dangling(self):
        m = self.m

        def entity_ok(eid):
            return eid in m.entities

        for d in m.attributes.values():
            if not entity_ok(d.owner):
                self.found.append(_v("DANGLING_FACT", [d.id],
                                     f"attribute {d.id} owned by missing entity {d.owner}"))
            if d.instantiates is not None and d.instantiates not in m.attributes:
                self.found.append(_v("DANGLING_FACT", [d.id],
                                     f"attribute {d.id} instantiates missing declaration"))
        for r in m.references.values():
            if not entity_ok(r.owner):
                self.found.append(_v("DANGLING_FACT", [r.id],
                                     f"reference {r.id} owned by missing entity {r.owner}"))
            if r.instantiates is not None and r.instantiates not in m.references:
                self.found.append(_v("DANGLING_FACT", [r.id],
                                     f"reference {r.id} instantiates missing declaration"))
        for v in m.values.values():
            if not entity_ok(v.holder):
                self.found.append(_v("DANGLING_FACT", [v.id],
                                     f"value {v.id} held by missing entity {v.holder}"))
            if v.attribute not in m.attributes:
                self.found.append(_v("DANGLING_FACT", [v.id],
                                     f"value {v.id} points at missing attribute {v.attribute}"))
        for t in m.type_targets.values():
            if t.reference not in m.references:
                self.found.append(_v("DANGLING_FACT", [t.id],
                                     f"target row {t.id} under missing reference {t.reference}"))
            if not entity_ok(t.target):
                self.found.append(_v("DANGLING_FACT", [t.id],
                                     f"target row {t.id} points at missing entity {t.target}"))
        for ls in m.link_sets.values():
            if not entity_ok(ls.holder):
                self.found.append(_v("DANGLING_FACT", [ls.id],
                                     f"link set {ls.id} held by missing entity {ls.holder}"))
            if ls.reference not in m.references:
                self.found.append(_v("DANGLING_FACT", [ls.id],
                                     f"link set {ls.id} resolves missing reference {ls.reference}"))
        for l in m.links.values():
            if l.link_set not in m.link_sets:
                self.found.append(_v("DANGLING_FACT", [l.id],
                                     f"link {l.id} under missing link set {l.link_set}"))
            if not entity_ok(l.target):
                self.found.append(_v("DANGLING_FACT", [l.id],
                                     f"link {l.id} points at missing entity {l.target}"))
        for f in m.instance_of.values():
            if not entity_ok(f.instance) or not entity_ok(f.type):
                self.found.append(_v("DANGLING_FACT", [f.id],
                                     f"instance-of fact {f.id} references a missing entity"))
        for g in m.generalisations.values():
            if not entity_ok(g.subtype) or not entity_ok(g.supertype):
                self.found.append(_v("DANGLING_FACT", [g.id],
                                     f"generalisation fact {g.id} references a missing entity"))

    def check_cycles(self):
        m = self.m
        inst_edges: dict[int, set[int]] = {}
        for f in m.instance_of.values():
            inst_edges.setdefault(f.instance, set()).add(f.type)
        for comp in _cycle_nodes(inst_edges):
            self.found.append(_v("CYCLE_INSTANCE_OF", comp,
                                 "instance-of closure is cyclic over entities "
                                 + ", ".join(map(str, comp))))
        gen_edges: dict[int, set[int]] = {}
        for g in m.generalisations.values():
            gen_edges.setdefault(g.subtype, set()).add(g.supertype)
        for comp in _cycle_nodes(gen_edges):
            self.found.append(_v("CYCLE_SPECIALISATION", comp,
                                 "generalisation closure is cyclic over entities "
                                 + ", ".join(map(str, comp))))

    def check_potencies(self):
        m = self.m
        for d in m.attributes.values():
            if d.potency < 1:
                self.found.append(_v("NONPOSITIVE_REF_POTENCY", [d.id],
                                     f"attribute {d.id} has potency {d.potency}"))
            if d.instantiates is not None:
                parent = m.attributes.get(d.instantiates)
                if parent is not None and d.potency != parent.potency - 1:
                    self.found.append(_v("POTENCY_DECREMENT_BROKEN", [d.id, parent.id],
                                         f"attribute {d.id} has potency {d.potency}, parent "
                                         f"{parent.id} has {parent.potency}"))
        for r in m.references.values():
            if r.potency < 1:
                self.found.append(_v("NONPOSITIVE_REF_POTENCY", [r.id],
                                     f"reference {r.id} has potency {r.potency}"))
            if r.instantiates is not None:
                parent = m.references.get(r.instantiates)
                if parent is not None and r.potency != parent.potency - 1:
                    self.found.append(_v("POTENCY_DECREMENT_BROKEN", [r.id, parent.id],
                                         f"reference {r.id} has potency {r.potency}, parent "
                                         f"{parent.id} has {parent.potency}"))
        for ls in m.link_sets.values():
            decl = m.references.get(ls.reference)
            if decl is not None and decl.potency != 1:
                self.found.append(_v("POTENCY_DECREMENT_BROKEN", [ls.id, decl.id],
                                     f"link set {ls.id} resolves reference {decl.id} "
                                     f"of potency {decl.potency}, expected 1"))

    def check_target_typing(self):
        m = self.m
        for r in m.references.values():
            if r.instantiates is None:
                continue
            parent = m.references.get(r.instantiates)
            if parent is None:
                continue
            allowed = {t.target for t in m.decl_type_targets(parent.id)}
            for t in m.decl_type_targets(r.id):
                if t.target not in m.entities:
                    continue
                if not (m.instance_closure(t.target) & allowed):
                    self.found.append(_v("TARGET_TYPE_MISMATCH", [t.id, r.id],
                                         f"target {t.target} of reference {r.id} is not an "
                                         f"instance of any target of reference {parent.id}"))
        for l in m.links.values():
            ls = m.link_sets.get(l.link_set)
            if ls is None:
                continue
            decl = m.references.get(ls.reference)
            if decl is None:
                continue
            allowed = {t.target for t in m.decl_type_targets(decl.id)}
            if l.target not in m.entities:
                continue
            if not (m.instance_closure(l.target) & allowed):
                self.found.append(_v("TARGET_TYPE_MISMATCH", [l.id, decl.id],
                                     f"link target {l.target} is not an instance of any "
                                     f"target of reference {decl.id}"))

    def check_cardinalities(self):
        for ls in self.m.link_sets.values():
            decl = self.m.references.get(ls.reference)
            if decl is None:
                continue
            self.found.extend(check_cardinality(self.m, ls.holder, decl.id))

    def check_values(self):
        m = self.m
        for v in m.values.values():
            decl = m.attributes.get(v.attribute)
            if decl is None or v.holder not in m.entities:
                continue  # reported as dangling
            root = m.attribute_root(decl.id)
            try:
                parse_literal(root.datatype, v.value)
            except (TypeMismatch, UnknownDatatype):
                self.found.append(_v("VALUE_TYPE_MISMATCH", [v.id, root.id],
                                     f"value {v.value!r} does not parse as {root.datatype}"))
            if root.owner not in m.entities:
                continue
            lengths = m.chain_lengths(v.holder, root.owner)
            if root.potency not in lengths:
                self.found.append(_v("VALUE_AT_WRONG_ORDER", [v.id, root.id],
                                     f"value {v.id} held at order(s) {sorted(lengths)} of "
                                     f"entity {root.owner}, declaration demands {root.potency}"))

    def check_missing_values(self):
        m = self.m
        for eid in sorted(m.entities):
            for root in m.value_slots(eid):
                if m.value_of(eid, root.id) is None:
                    self.found.append(_v("MISSING_VALUE", [eid, root.id],
                                         f"entity {eid} has no value for attribute "
                                         f"{root.name!r} ({root.id})"))

    def check_ambiguous_orders(self):
        m = self.m
        for eid in sorted(m.entities):
            for anc in sorted(m.instance_closure(eid)):
                lengths = m.chain_lengths(eid, anc)
                if len(lengths) > 1:
                    self.found.append(_v("AMBIGUOUS_ORDER", [eid, anc],
                                         f"entity {eid} reaches entity {anc} at orders "
                                         f"{sorted(lengths)}"))


def check_cardinality(model: ModelGraph, holder: int, reference_decl: int) -> list[Violation]:
    """Bounds check for one terminally resolved reference on one holder."""
    decl = model.references.get(reference_decl)
    if decl is None:
        return []
    ls = model.link_set_of(holder, reference_decl)
    if ls is None:
        return []
    n = len(model.links_of(ls.id))
    found = []
    if n < decl.min_card:
        found.append(_v("CARDINALITY_MIN", [holder, decl.id],
                        f"entity {holder} has {n} links for {decl.name!r}, "
                        f"minimum is {decl.min_card}"))
    if decl.max_card is not None and n > decl.max_card:
        found.append(_v("CARDINALITY_MAX", [holder, decl.id],
                        f"entity {holder} has {n} links for {decl.name!r}, "
                        f"maximum is {decl.max_card}"))
    return found


def validate(model: ModelGraph) -> list[Violation]:
    """Complete violation sweep; empty exactly when the model is well formed
    and every mandatory value slot at a reached order is filled."""
    return _Checker(model).run()


def exit_code(violations: list[Violation]) -> int:
    """0 clean, 1 incomplete findings only, 2 any error."""
    if any(v.severity == ERROR for v in violations):
        return 2
    if violations:
        return 1
    return 0
