"""In-memory multi-level model kernel.

The model is a graph of individual facts. An entity is a clabject: it can
declare attributes and references for its instances (type side) while also
holding values and links of its own (object side). Declarations carry a
potency counting how many instantiation steps remain until they resolve:
to a value for attributes, to terminal links for references. Instantiating
a declaration of potency p >= 2 derives a declaration of potency p - 1 on
the instance; at potency 1 an attribute leaves an open value slot and a
reference leaves an open link set that terminal links attach to.

The kernel is not internally synchronized. Mutating operations require
exclusive access; concurrent readers are safe as long as no writer runs.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation
from typing import Iterable, Optional

from .errors import (
    BadCardinality,
    ConflictingFact,
    DuplicateIdentifier,
    InstanceOfCycle,
    MissingPosition,
    NonPositivePotency,
    PositionOnUnordered,
    ReferenceNotResolvable,
    SpecialisationCycle,
    TargetInUse,
    TargetTypeMismatch,
    TypeMismatch,
    UnknownDatatype,
    UnknownDeclaration,
    UnknownEntity,
    ValueAtWrongOrder,
)

DATATYPES = ("string", "integer", "decimal", "boolean")

_INTEGER_RE = re.compile(r"^[+-]?\d+$")


def parse_literal(datatype: str, literal: str):
    """Parse a text literal under one of the supported datatypes.

    Returns the parsed Python value; raises TypeMismatch if the literal does
    not conform. Values are persisted as text, so this is a gatekeeper, not a
    storage conversion.
    """
    if datatype == "string":
        return literal
    if datatype == "integer":
        if not _INTEGER_RE.match(literal):
            raise TypeMismatch(f"not an integer literal: {literal!r}")
        return int(literal)
    if datatype == "decimal":
        try:
            return Decimal(literal)
        except InvalidOperation:
            raise TypeMismatch(f"not a decimal literal: {literal!r}") from None
    if datatype == "boolean":
        if literal not in ("true", "false"):
            raise TypeMismatch(f"not a boolean literal: {literal!r}")
        return literal == "true"
    raise UnknownDatatype(datatype)


@dataclass
class Entity:
    id: int
    identifier: str = ""
    name: str = ""
    description: str = ""


@dataclass
class AttributeDecl:
    id: int
    owner: int
    name: str
    datatype: str
    potency: int
    instantiates: Optional[int] = None


@dataclass
class AttributeValue:
    id: int
    holder: int
    attribute: int  # id of the root (original) declaration
    value: str


@dataclass
class ReferenceDecl:
    id: int
    owner: int
    name: str
    potency: int
    ordered: bool = False
    min_card: int = 0
    max_card: Optional[int] = None  # None is unbounded
    instantiates: Optional[int] = None


@dataclass
class TypeTarget:
    """A type-level target row hanging off a reference declaration."""

    id: int
    reference: int
    target: int
    position: Optional[int] = None


@dataclass
class LinkSet:
    """Terminal resolution of a potency-1 reference on an instance.

    Created when instantiation reaches potency 1; terminal links attach here.
    It is not a declaration and carries no potency of its own.
    """

    id: int
    holder: int
    reference: int  # the potency-1 declaration being resolved


@dataclass
class TargetLink:
    id: int
    link_set: int
    target: int
    position: Optional[int] = None


@dataclass
class InstanceOf:
    id: int
    instance: int
    type: int


@dataclass
class Generalisation:
    id: int
    subtype: int
    supertype: int


@dataclass
class ModelGraph:
    """All facts of one model plus the shared surrogate-id counter.

    Ids are unique across fact kinds and are never reused after deletion.
    """

    entities: dict[int, Entity] = field(default_factory=dict)
    attributes: dict[int, AttributeDecl] = field(default_factory=dict)
    values: dict[int, AttributeValue] = field(default_factory=dict)
    references: dict[int, ReferenceDecl] = field(default_factory=dict)
    type_targets: dict[int, TypeTarget] = field(default_factory=dict)
    link_sets: dict[int, LinkSet] = field(default_factory=dict)
    links: dict[int, TargetLink] = field(default_factory=dict)
    instance_of: dict[int, InstanceOf] = field(default_factory=dict)
    generalisations: dict[int, Generalisation] = field(default_factory=dict)
    counter: int = 0

    # --- id and lookup helpers ------------------------------------------

    def next_id(self) -> int:
        self.counter += 1
        return self.counter

    def require_entity(self, eid: int) -> Entity:
        try:
            return self.entities[eid]
        except KeyError:
            raise UnknownEntity(f"no entity with id {eid}") from None

    def entity_by_identifier(self, identifier: str) -> Optional[Entity]:
        for e in self.entities.values():
            if e.identifier == identifier:
                return e
        return None

    def _check_identifier_free(self, identifier: str, ignore: Optional[int] = None):
        if not identifier:
            return
        for e in self.entities.values():
            if e.identifier == identifier and e.id != ignore:
                raise DuplicateIdentifier(f"identifier {identifier!r} already used by entity {e.id}")

    # --- construction -----------------------------------------------------

    def add_entity(self, identifier: str = "", name: str = "", description: str = "") -> int:
        self._check_identifier_free(identifier)
        eid = self.next_id()
        self.entities[eid] = Entity(eid, identifier, name, description)
        return eid

    def declare_attribute(self, owner: int, name: str, datatype: str, potency: int,
                          instantiates: Optional[int] = None) -> int:
        self.require_entity(owner)
        if datatype not in DATATYPES:
            raise UnknownDatatype(datatype)
        if potency < 1:
            raise NonPositivePotency(f"attribute potency must be >= 1, got {potency}")
        for d in self.attributes.values():
            if d.owner == owner and d.name == name:
                raise DuplicateIdentifier(f"entity {owner} already declares attribute {name!r}")
        did = self.next_id()
        self.attributes[did] = AttributeDecl(did, owner, name, datatype, potency, instantiates)
        return did

    def declare_reference(self, owner: int, name: str, potency: int, ordered: bool = False,
                          min_card: int = 0, max_card: Optional[int] = None,
                          type_targets: Iterable[int] = (),
                          instantiates: Optional[int] = None) -> int:
        self.require_entity(owner)
        if potency < 1:
            raise NonPositivePotency(f"reference potency must be >= 1, got {potency}")
        if min_card < 0:
            raise BadCardinality(f"min_card must be >= 0, got {min_card}")
        if max_card is not None and min_card > max_card:
            raise BadCardinality(f"min_card {min_card} exceeds max_card {max_card}")
        targets = list(type_targets)
        for t in targets:
            self.require_entity(t)
        rid = self.next_id()
        self.references[rid] = ReferenceDecl(rid, owner, name, potency, ordered,
                                             min_card, max_card, instantiates)
        for pos, t in enumerate(targets):
            tid = self.next_id()
            self.type_targets[tid] = TypeTarget(tid, rid, t, pos if ordered else None)
        return rid

    def assert_instance_of(self, instance: int, type_: int) -> None:
        self.require_entity(instance)
        self.require_entity(type_)
        if instance == type_ or instance in self.instance_closure(type_):
            raise InstanceOfCycle(f"instance-of ({instance}, {type_}) would close a cycle")
        for g in self.generalisations.values():
            if g.subtype == instance and g.supertype == type_:
                raise ConflictingFact(f"({instance}, {type_}) is already a generalisation pair")
        fid = self.next_id()
        self.instance_of[fid] = InstanceOf(fid, instance, type_)

    def assert_specialisation(self, subtype: int, supertype: int) -> None:
        self.require_entity(subtype)
        self.require_entity(supertype)
        if subtype == supertype or subtype in self.supertype_closure(supertype):
            raise SpecialisationCycle(f"generalisation ({subtype}, {supertype}) would close a cycle")
        for f in self.instance_of.values():
            if f.instance == subtype and f.type == supertype:
                raise ConflictingFact(f"({subtype}, {supertype}) is already an instance-of pair")
        fid = self.next_id()
        self.generalisations[fid] = Generalisation(fid, subtype, supertype)

    # --- closures and orders ----------------------------------------------

    def direct_types(self, eid: int) -> list[int]:
        return sorted({f.type for f in self.instance_of.values() if f.instance == eid})

    def direct_supertypes(self, eid: int) -> list[int]:
        return sorted({g.supertype for g in self.generalisations.values() if g.subtype == eid})

    def instance_closure(self, eid: int) -> set[int]:
        """All entities reachable through one or more instance-of hops."""
        seen: set[int] = set()
        frontier = deque(self.direct_types(eid))
        while frontier:
            t = frontier.popleft()
            if t in seen:
                continue
            seen.add(t)
            frontier.extend(self.direct_types(t))
        return seen

    def supertype_closure(self, eid: int) -> set[int]:
        seen: set[int] = set()
        frontier = deque(self.direct_supertypes(eid))
        while frontier:
            s = frontier.popleft()
            if s in seen:
                continue
            seen.add(s)
            frontier.extend(self.direct_supertypes(s))
        return seen

    def order_of(self, instance: int, ancestor: int) -> Optional[int]:
        """Length of the shortest instance-of chain, or None if unreachable."""
        self.require_entity(instance)
        self.require_entity(ancestor)
        if instance == ancestor:
            return 0
        depth = 0
        frontier = {instance}
        seen = {instance}
        while frontier:
            depth += 1
            nxt = set()
            for e in frontier:
                for t in self.direct_types(e):
                    if t == ancestor:
                        return depth
                    if t not in seen:
                        seen.add(t)
                        nxt.add(t)
            frontier = nxt
        return None

    def chain_lengths(self, instance: int, ancestor: int) -> set[int]:
        """All distinct instance-of chain lengths from instance to ancestor.

        The instance-of closure is acyclic for accepted models, so a depth
        first walk with memoisation terminates; broken (cyclic) models are
        guarded by a visiting stack.
        """
        memo: dict[int, set[int]] = {}
        visiting: set[int] = set()

        def walk(e: int) -> set[int]:
            if e in memo:
                return memo[e]
            if e in visiting:
                return set()
            visiting.add(e)
            lengths: set[int] = set()
            for t in self.direct_types(e):
                if t == ancestor:
                    lengths.add(1)
                lengths.update(l + 1 for l in walk(t))
            visiting.discard(e)
            memo[e] = lengths
            return lengths

        if instance == ancestor:
            return {0}
        return walk(instance)

    # --- declarations -------------------------------------------------------

    def own_attributes(self, eid: int) -> list[AttributeDecl]:
        return sorted((d for d in self.attributes.values() if d.owner == eid), key=lambda d: d.id)

    def own_references(self, eid: int) -> list[ReferenceDecl]:
        return sorted((d for d in self.references.values() if d.owner == eid), key=lambda d: d.id)

    def effective_declarations(self, eid: int) -> tuple[list[AttributeDecl], list[ReferenceDecl]]:
        """Own declarations plus inherited ones, nearest declaration wins per name.

        Inheritance walks supertypes breadth first; a declaration is shadowed
        by any same-named declaration seen earlier. Diamonds contribute a
        shared declaration once (keyed by id).
        """
        self.require_entity(eid)
        attrs: list[AttributeDecl] = []
        refs: list[ReferenceDecl] = []
        attr_names: set[str] = set()
        ref_names: set[str] = set()
        attr_ids: set[int] = set()
        ref_ids: set[int] = set()

        level = [eid]
        seen = {eid}
        while level:
            nxt: list[int] = []
            for e in level:
                for d in self.own_attributes(e):
                    if d.name in attr_names or d.id in attr_ids:
                        continue
                    attr_names.add(d.name)
                    attr_ids.add(d.id)
                    attrs.append(d)
                for d in self.own_references(e):
                    if d.name in ref_names or d.id in ref_ids:
                        continue
                    ref_names.add(d.name)
                    ref_ids.add(d.id)
                    refs.append(d)
                for s in self.direct_supertypes(e):
                    if s not in seen:
                        seen.add(s)
                        nxt.append(s)
            level = nxt
        attrs.sort(key=lambda d: d.id)
        refs.sort(key=lambda d: d.id)
        return attrs, refs

    def attribute_root(self, decl_id: int) -> AttributeDecl:
        """Walk the instantiates chain of an attribute declaration to its origin."""
        d = self.attributes.get(decl_id)
        if d is None:
            raise UnknownDeclaration(f"no attribute declaration with id {decl_id}")
        seen = {d.id}
        while d.instantiates is not None:
            parent = self.attributes.get(d.instantiates)
            if parent is None or parent.id in seen:
                break
            seen.add(parent.id)
            d = parent
        return d

    def reference_root(self, decl_id: int) -> ReferenceDecl:
        d = self.references.get(decl_id)
        if d is None:
            raise UnknownDeclaration(f"no reference declaration with id {decl_id}")
        seen = {d.id}
        while d.instantiates is not None:
            parent = self.references.get(d.instantiates)
            if parent is None or parent.id in seen:
                break
            seen.add(parent.id)
            d = parent
        return d

    def decl_type_targets(self, decl_id: int) -> list[TypeTarget]:
        rows = [t for t in self.type_targets.values() if t.reference == decl_id]
        rows.sort(key=lambda t: (t.position if t.position is not None else 1 << 30, t.id))
        return rows

    def link_set_of(self, holder: int, decl_id: int) -> Optional[LinkSet]:
        for ls in self.link_sets.values():
            if ls.holder == holder and ls.reference == decl_id:
                return ls
        return None

    def link_sets_of(self, holder: int) -> list[LinkSet]:
        return sorted((ls for ls in self.link_sets.values() if ls.holder == holder),
                      key=lambda ls: ls.id)

    def links_of(self, link_set_id: int) -> list[TargetLink]:
        rows = [l for l in self.links.values() if l.link_set == link_set_id]
        rows.sort(key=lambda l: (l.position if l.position is not None else 1 << 30, l.id))
        return rows

    def value_slots(self, eid: int) -> list[AttributeDecl]:
        """Root declarations of the open or filled value slots of an entity.

        A slot exists for every potency-1 attribute declaration effective on
        any direct type of the entity. Slots are keyed by the root
        declaration, deduplicated, sorted by root id.
        """
        roots: dict[int, AttributeDecl] = {}
        for t in self.direct_types(eid):
            eff_attrs, _ = self.effective_declarations(t)
            for d in eff_attrs:
                if d.potency == 1:
                    root = self.attribute_root(d.id)
                    roots[root.id] = root
        return [roots[k] for k in sorted(roots)]

    def value_of(self, holder: int, root_decl_id: int) -> Optional[AttributeValue]:
        best = None
        for v in self.values.values():
            if v.holder == holder and v.attribute == root_decl_id:
                if best is None or v.id < best.id:
                    best = v
        return best

    # --- instantiation ------------------------------------------------------

    def instantiate(self, type_id: int, identifier: str = "", name: str = "",
                    description: str = "") -> int:
        """Create an instance of type_id, deriving declarations one potency down.

        Potency >= 2 declarations derive a copy at potency - 1 on the instance
        (references start with no type targets; the modeller narrows them).
        Potency-1 attributes leave an implicit open value slot; potency-1
        references leave an open link set ready for terminal links.
        """
        self.require_entity(type_id)
        self._check_identifier_free(identifier)
        eid = self.next_id()
        self.entities[eid] = Entity(eid, identifier, name, description)
        fid = self.next_id()
        self.instance_of[fid] = InstanceOf(fid, eid, type_id)

        eff_attrs, eff_refs = self.effective_declarations(type_id)
        for d in eff_attrs:
            if d.potency >= 2:
                did = self.next_id()
                self.attributes[did] = AttributeDecl(did, eid, d.name, d.datatype,
                                                     d.potency - 1, instantiates=d.id)
        for r in eff_refs:
            if r.potency >= 2:
                rid = self.next_id()
                self.references[rid] = ReferenceDecl(rid, eid, r.name, r.potency - 1,
                                                     r.ordered, r.min_card, r.max_card,
                                                     instantiates=r.id)
            else:
                lid = self.next_id()
                self.link_sets[lid] = LinkSet(lid, eid, r.id)
        return eid

    # --- values ---------------------------------------------------------------

    def _chain_decl_for_value(self, holder: int, decl_id: int) -> AttributeDecl:
        d = self.attributes.get(decl_id)
        if d is None:
            raise UnknownDeclaration(f"no attribute declaration with id {decl_id}")
        lengths = self.chain_lengths(holder, d.owner)
        if d.potency not in lengths:
            raise ValueAtWrongOrder(
                f"entity {holder} is not an order-{d.potency} instance of entity {d.owner}")
        return d

    def assign_value(self, holder: int, attribute_decl: int, literal: str) -> None:
        """Set the value resolving an attribute slot, replacing any previous one.

        The holder must sit at an instantiation order matching the declared
        potency; the value fact is recorded against the root declaration of
        the instantiates chain.
        """
        self.require_entity(holder)
        d = self._chain_decl_for_value(holder, attribute_decl)
        parse_literal(d.datatype, literal)
        root = self.attribute_root(d.id)
        existing = [v for v in self.values.values()
                    if v.holder == holder and v.attribute == root.id]
        for v in existing:
            del self.values[v.id]
        vid = self.next_id()
        self.values[vid] = AttributeValue(vid, holder, root.id, literal)

    def remove_value(self, holder: int, attribute_decl: int) -> None:
        d = self.attributes.get(attribute_decl)
        if d is None:
            raise UnknownDeclaration(f"no attribute declaration with id {attribute_decl}")
        root = self.attribute_root(d.id)
        doomed = [v.id for v in self.values.values()
                  if v.holder == holder and v.attribute == root.id]
        for vid in doomed:
            del self.values[vid]

    # --- reference targets ------------------------------------------------------

    def _governing_target_ids(self, decl: ReferenceDecl) -> Optional[set[int]]:
        """Type targets constraining additions under a declaration the holder owns.

        For a derived declaration these are the parent declaration's targets;
        a root declaration is unconstrained (None).
        """
        if decl.instantiates is None:
            return None
        parent = self.references.get(decl.instantiates)
        if parent is None:
            return None
        return {t.target for t in self.decl_type_targets(parent.id)}

    def _check_target_typing(self, target: int, allowed: Optional[set[int]]) -> None:
        if allowed is None:
            return
        if not (self.instance_closure(target) & allowed):
            raise TargetTypeMismatch(
                f"entity {target} is not an instance of any admissible target type")

    def _place_position(self, rows, ordered: bool, position: Optional[int]) -> Optional[int]:
        if not ordered:
            if position is not None:
                raise PositionOnUnordered("position given for an unordered reference")
            return None
        if position is None:
            raise MissingPosition("ordered reference requires a position")
        n = len(rows)
        if position < 0 or position > n:
            raise MissingPosition(f"position {position} out of range 0..{n}")
        for r in rows:
            if r.position is not None and r.position >= position:
                r.position += 1
        return position

    def link_target(self, holder: int, reference_decl: int, target: int,
                    position: Optional[int] = None) -> int:
        """Attach a target under a potency-1 reference in the holder's hands.

        Two cases share this operation, mirroring the shared storage row:
        the owner of a potency-1 declaration narrows its type targets,
        checked against the parent declaration's targets; an instance holding
        a link set adds a terminal link, checked against the potency-1
        declaration's targets. Cardinality bounds are validated later, not
        here, so partially built models stay editable.
        """
        self.require_entity(holder)
        self.require_entity(target)
        decl = self.references.get(reference_decl)
        if decl is None:
            raise UnknownDeclaration(f"no reference declaration with id {reference_decl}")

        if decl.owner == holder:
            if decl.potency != 1:
                raise ReferenceNotResolvable(
                    f"reference {decl.id} has potency {decl.potency}; narrowing via "
                    "link_target needs potency 1")
            self._check_target_typing(target, self._governing_target_ids(decl))
            rows = self.decl_type_targets(decl.id)
            pos = self._place_position(rows, decl.ordered, position)
            tid = self.next_id()
            self.type_targets[tid] = TypeTarget(tid, decl.id, target, pos)
            return tid

        ls = self.link_set_of(holder, decl.id)
        if ls is None:
            # Allow hand-built instances: resolve lazily when the order fits.
            if decl.potency == 1 and self.order_of(holder, decl.owner) == 1:
                lid = self.next_id()
                ls = LinkSet(lid, holder, decl.id)
                self.link_sets[lid] = ls
            else:
                raise ReferenceNotResolvable(
                    f"reference {decl.id} is not resolvable on entity {holder}")
        allowed = {t.target for t in self.decl_type_targets(decl.id)}
        self._check_target_typing(target, allowed)
        rows = self.links_of(ls.id)
        pos = self._place_position(rows, decl.ordered, position)
        lid = self.next_id()
        self.links[lid] = TargetLink(lid, ls.id, target, pos)
        return lid

    def add_type_target(self, reference_decl: int, target: int,
                        position: Optional[int] = None) -> int:
        """Narrow a declaration's type targets regardless of its potency."""
        decl = self.references.get(reference_decl)
        if decl is None:
            raise UnknownDeclaration(f"no reference declaration with id {reference_decl}")
        self.require_entity(target)
        self._check_target_typing(target, self._governing_target_ids(decl))
        rows = self.decl_type_targets(decl.id)
        pos = self._place_position(rows, decl.ordered, position)
        tid = self.next_id()
        self.type_targets[tid] = TypeTarget(tid, decl.id, target, pos)
        return tid

    def remove_type_target(self, row_id: int) -> None:
        """Remove a type target unless an existing fact still depends on it."""
        row = self.type_targets.get(row_id)
        if row is None:
            raise UnknownDeclaration(f"no reference target row with id {row_id}")
        decl = self.references.get(row.reference)
        if decl is not None:
            remaining = {t.target for t in self.decl_type_targets(decl.id) if t.id != row_id}
            for ls in self.link_sets.values():
                if ls.reference != decl.id:
                    continue
                for l in self.links_of(ls.id):
                    if not (self.instance_closure(l.target) & remaining):
                        raise TargetInUse(
                            f"link {l.id} is typed only through target row {row_id}")
            for child in self.references.values():
                if child.instantiates != decl.id:
                    continue
                for t in self.decl_type_targets(child.id):
                    if not (self.instance_closure(t.target) & remaining):
                        raise TargetInUse(
                            f"derived target row {t.id} is typed only through row {row_id}")
        self._compact_positions(row.reference, self.type_targets, removing=row_id)
        del self.type_targets[row_id]

    def remove_link(self, link_id: int) -> None:
        link = self.links.get(link_id)
        if link is None:
            raise UnknownDeclaration(f"no link with id {link_id}")
        self._compact_positions(link.link_set, self.links, removing=link_id)
        del self.links[link_id]

    def _compact_positions(self, parent_id, table, removing):
        doomed = table[removing]
        if doomed.position is None:
            return
        key = "reference" if isinstance(doomed, TypeTarget) else "link_set"
        for row in table.values():
            if getattr(row, key) == parent_id and row.position is not None \
                    and row.position > doomed.position:
                row.position -= 1

    # --- entity edits and deletion -------------------------------------------

    def set_entity_fields(self, eid: int, identifier: Optional[str] = None,
                          name: Optional[str] = None,
                          description: Optional[str] = None) -> None:
        e = self.require_entity(eid)
        if identifier is not None and identifier != e.identifier:
            self._check_identifier_free(identifier, ignore=eid)
            e.identifier = identifier
        if name is not None:
            e.name = name
        if description is not None:
            e.description = description

    def delete_entity(self, eid: int) -> None:
        """Remove an entity and every fact that would dangle without it."""
        self.require_entity(eid)

        dead_attrs = {d.id for d in self.attributes.values() if d.owner == eid}
        dead_refs = {d.id for d in self.references.values() if d.owner == eid}
        # Declarations derived from a dead declaration die with it.
        changed = True
        while changed:
            changed = False
            for d in self.attributes.values():
                if d.id not in dead_attrs and d.instantiates in dead_attrs:
                    dead_attrs.add(d.id)
                    changed = True
            for d in self.references.values():
                if d.id not in dead_refs and d.instantiates in dead_refs:
                    dead_refs.add(d.id)
                    changed = True

        dead_sets = {ls.id for ls in self.link_sets.values()
                     if ls.holder == eid or ls.reference in dead_refs}
        for l in list(self.links.values()):
            if l.link_set in dead_sets or l.target == eid:
                del self.links[l.id]
        for t in list(self.type_targets.values()):
            if t.reference in dead_refs or t.target == eid:
                del self.type_targets[t.id]
        for ls in dead_sets:
            del self.link_sets[ls]
        for d in dead_refs:
            del self.references[d]
        for v in list(self.values.values()):
            if v.holder == eid or v.attribute in dead_attrs:
                del self.values[v.id]
        for d in dead_attrs:
            del self.attributes[d]
        for f in list(self.instance_of.values()):
            if eid in (f.instance, f.type):
                del self.instance_of[f.id]
        for g in list(self.generalisations.values()):
            if eid in (g.subtype, g.supertype):
                del self.generalisations[g.id]
        del self.entities[eid]

        # Values whose slot justification disappeared with the entity.
        for v in list(self.values.values()):
            slots = {d.id for d in self.value_slots(v.holder)}
            if v.attribute not in slots:
                del self.values[v.id]

    # --- misc -------------------------------------------------------------------

    def clone(self) -> "ModelGraph":
        m = ModelGraph(counter=self.counter)
        m.entities = {k: replace(v) for k, v in self.entities.items()}
        m.attributes = {k: replace(v) for k, v in self.attributes.items()}
        m.values = {k: replace(v) for k, v in self.values.items()}
        m.references = {k: replace(v) for k, v in self.references.items()}
        m.type_targets = {k: replace(v) for k, v in self.type_targets.items()}
        m.link_sets = {k: replace(v) for k, v in self.link_sets.items()}
        m.links = {k: replace(v) for k, v in self.links.items()}
        m.instance_of = {k: replace(v) for k, v in self.instance_of.items()}
        m.generalisations = {k: replace(v) for k, v in self.generalisations.items()}
        return m

    def fact_multiset(self) -> list[tuple]:
        """Canonical sortable listing of every fact, ids included."""
        out: list[tuple] = []
        for e in self.entities.values():
            out.append(("entity", e.id, e.identifier, e.name, e.description))
        for d in self.attributes.values():
            out.append(("attribute", d.id, d.owner, d.name, d.datatype, d.potency, d.instantiates))
        for v in self.values.values():
            out.append(("value", v.id, v.holder, v.attribute, v.value))
        for r in self.references.values():
            out.append(("reference", r.id, r.owner, r.name, r.potency, r.ordered,
                        r.min_card, r.max_card, r.instantiates))
        for t in self.type_targets.values():
            out.append(("type_target", t.id, t.reference, t.target, t.position))
        for ls in self.link_sets.values():
            out.append(("link_set", ls.id, ls.holder, ls.reference))
        for l in self.links.values():
            out.append(("link", l.id, l.link_set, l.target, l.position))
        for f in self.instance_of.values():
            out.append(("instance_of", f.id, f.instance, f.type))
        for g in self.generalisations.values():
            out.append(("generalisation", g.id, g.subtype, g.supertype))
        out.sort(key=lambda t: (t[0], t[1]))
        return out
