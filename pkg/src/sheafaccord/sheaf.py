"""Sheaves of lattice products on posets of theory subsets, plus extensional sheaves.

Theory sheaves keep stalks symbolic: a singleton stalk is a union of down-sets of
boxes, a larger node holds the full product of every predicate its members share.
Restrictions are identities except where a theory stated values in a convertible
unit; such values are mapped into the signature unit on the way out of the singleton.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations, product
from typing import Hashable, Iterable, Mapping, Optional, Sequence

from .lattice import ConversionMap, LatticeError, Value, compose, convert, truth_type
from .theory import (
    Box,
    Corpus,
    GroundTheory,
    PredicateSignature,
    combine_boxes,
    conversion_for,
    maximal_boxes,
    predicate_rows,
)


class SheafError(Exception):
    pass


class MapDomainError(SheafError):
    pass


class CompositionViolation(SheafError):
    pass


Node = Hashable


@dataclass(frozen=True)
class Poset:
    """A finite poset given by its nodes and strict order pairs (transitively closed)."""

    nodes: tuple
    less: frozenset

    def leq(self, x, y) -> bool:
        return x == y or (x, y) in self.less

    @cached_property
    def hasse(self) -> tuple:
        return tuple(
            (x, y)
            for x in self.nodes
            for y in self.nodes
            if (x, y) in self.less
            and not any((x, z) in self.less and (z, y) in self.less for z in self.nodes)
        )

    def triples(self):
        """Every chain x < y < z, in node order."""
        for x in self.nodes:
            for y in self.nodes:
                if (x, y) not in self.less:
                    continue
                for z in self.nodes:
                    if (y, z) in self.less:
                        yield x, y, z

    def up(self, x) -> tuple:
        return tuple(y for y in self.nodes if (x, y) in self.less)


def _node_key(node: frozenset):
    return (len(node), sorted(node))


def build_poset(theories: Sequence[GroundTheory]) -> Poset:
    """Singletons, plus every subset whose members all constrain some common predicate."""
    if not theories:
        raise SheafError("cannot build a poset over an empty corpus")
    ids = [g.doc_id for g in theories]
    if len(set(ids)) != len(ids):
        raise SheafError("theories must come from distinct documents")
    preds = {g.doc_id: g.predicates() for g in theories}
    nodes = [frozenset([i]) for i in ids]
    for size in range(2, len(ids) + 1):
        for subset in combinations(sorted(ids), size):
            if frozenset.intersection(*(preds[i] for i in subset)):
                nodes.append(frozenset(subset))
    nodes.sort(key=_node_key)
    less = frozenset((x, y) for x in nodes for y in nodes if x < y)
    return Poset(tuple(nodes), less)


@dataclass(frozen=True)
class Restriction:
    """Per-predicate slot conversions along one order pair; ``None`` slots are identities."""

    source: frozenset
    target: frozenset
    conversions: Mapping[str, tuple] = field(default_factory=dict)

    def slot_maps(self, box: Box) -> tuple:
        return self.conversions.get(box.predicate, (None,) * len(box.generator))

    def apply(self, box: Box) -> Box:
        maps = self.slot_maps(box)
        gen = tuple(v if m is None else convert(v, m) for v, m in zip(box.generator, maps))
        return Box(box.predicate, gen, box.truth)

    @property
    def is_identity(self) -> bool:
        return all(m is None for maps in self.conversions.values() for m in maps)


@dataclass(frozen=True)
class SingletonStalk:
    theory: GroundTheory
    boxes: Mapping[str, tuple]
    agnostic: Mapping[str, tuple] = field(default_factory=dict)

    def generators(self, predicate: str) -> tuple:
        return tuple(self.boxes.get(predicate, ())) + tuple(self.agnostic.get(predicate, ()))


@dataclass(frozen=True)
class FullStalk:
    predicates: frozenset


@dataclass(frozen=True)
class Section:
    domain: frozenset
    assignment: tuple  # sorted (node, element) pairs

    def __getitem__(self, node):
        for n, e in self.assignment:
            if n == node:
                return e
        raise KeyError(node)

    def as_dict(self) -> dict:
        return dict(self.assignment)


@dataclass
class Sheaf:
    poset: Poset
    mode: str
    theories: dict[str, GroundTheory]
    signatures: Mapping[str, PredicateSignature]
    stalks: dict
    conversions: Mapping = field(default_factory=dict)

    def stalk(self, node) -> SingletonStalk | FullStalk:
        return self.stalks[frozenset(node)]

    def _unit_maps(self, box: Box) -> tuple:
        sig = self.signatures[box.predicate]
        return tuple(
            None if v.type == t else conversion_for(v.type, t, self.conversions)
            for v, t in zip(box.generator, sig.types)
        )

    def to_signature(self, box: Box) -> Box:
        """Map a singleton-stalk generator into the predicate's signature units."""
        maps = self._unit_maps(box)
        if all(m is None for m in maps):
            return box
        gen = tuple(v if m is None else convert(v, m) for v, m in zip(box.generator, maps))
        return Box(box.predicate, gen, box.truth)

    def restriction(self, x, y) -> Restriction:
        x, y = frozenset(x), frozenset(y)
        if not self.poset.leq(x, y):
            raise SheafError(f"{sorted(x)} is not below {sorted(y)}")
        if x == y or len(x) > 1:
            return Restriction(x, y)
        stalk = self.stalks[x]
        maps = {}
        for pred in self.stalks[y].predicates:
            native = stalk.generators(pred)
            if native:
                maps[pred] = self._unit_maps(native[0])
        return Restriction(x, y, maps)

    @cached_property
    def restrictions(self) -> dict:
        return {(x, y): self.restriction(x, y) for x, y in self.poset.hasse}

    def contains(self, node, tup: Box) -> bool:
        """Stalk membership of a concrete tuple (given as a box generator)."""
        stalk = self.stalk(node)
        if isinstance(stalk, FullStalk):
            if tup.predicate not in stalk.predicates:
                return False
            sig = self.signatures[tup.predicate]
            return tuple(v.type for v in tup.generator) == sig.types and not tup.is_bottom
        try:
            return any(tup.leq(b) for b in stalk.generators(tup.predicate))
        except LatticeError:
            return False

    def check_composition(self) -> None:
        """Compare R(x<=z) with R(y<=z) . R(x<=y) on every stalk generator."""
        for x, y, z in self.poset.triples():
            rxy, ryz, rxz = self.restriction(x, y), self.restriction(y, z), self.restriction(x, z)
            if rxy.is_identity and ryz.is_identity and rxz.is_identity:
                continue
            stalk = self.stalks[x]
            for pred in self.stalks[z].predicates:
                for box in stalk.generators(pred):
                    composed = [compose(a, b) for a, b in zip(rxy.slot_maps(box), ryz.slot_maps(box))]
                    direct = rxz.slot_maps(box)
                    if ryz.apply(rxy.apply(box)) != rxz.apply(box) or tuple(composed) != tuple(direct):
                        raise CompositionViolation(
                            f"restrictions {sorted(x)} <= {sorted(y)} <= {sorted(z)} "
                            f"do not compose on {box}"
                        )

    @property
    def has_conversions(self) -> bool:
        return any(not r.is_identity for r in self.restrictions.values())


def agnostic_region(
    theory: GroundTheory,
    predicate: str,
    signature: PredicateSignature,
    mode: str = "permissive",
    conversions: Optional[Mapping] = None,
    signatures: Optional[Mapping[str, PredicateSignature]] = None,
) -> tuple[Box, ...]:
    """Maximal boxes of parameter tuples the theory says nothing about, tagged ``U``.

    Covered means below some atom of the predicate, of either sign.  Since T and F
    sit below U, the returned boxes also hold the T and F copies.
    """
    if mode != "permissive":
        raise SheafError("the agnostic region only exists in permissive mode")
    sigs = signatures if signatures is not None else {predicate: signature}
    rows = predicate_rows(theory, predicate, sigs, conversions)
    slot_types = [v.type for v in rows[0][0]] if rows else list(signature.types)
    try:
        region = [tuple(combo) for combo in product(*[t.tops() for t in slot_types])]
    except LatticeError as e:
        raise SheafError(f"agnostic region of {predicate}: {e}") from None
    for args, _sign in rows:
        carved = []
        for box in region:
            if any(b.type._meet(b.payload, a.payload) is None for b, a in zip(box, args)):
                carved.append(box)
                continue
            for i, (b, a) in enumerate(zip(box, args)):
                for piece in b.type.carve(b.payload, a.payload):
                    carved.append(box[:i] + (Value(b.type, piece),) + box[i + 1 :])
        region = _maximal_tuples(carved)
    u = truth_type(mode).element("U")
    return maximal_boxes(Box(predicate, gen, u) for gen in region)


def _maximal_tuples(tuples) -> list:
    uniq = list(dict.fromkeys(tuples))
    out = []
    for t in uniq:
        dominated = any(
            t != s and all(a.type._meet(a.payload, b.payload) == a.payload for a, b in zip(t, s))
            for s in uniq
        )
        if not dominated:
            out.append(t)
    return out


def build_sheaf(
    theories: Sequence[GroundTheory],
    mode: str = "strict",
    corpus: Optional[Corpus] = None,
    signatures: Optional[Mapping[str, PredicateSignature]] = None,
    conversions: Optional[Mapping] = None,
) -> Sheaf:
    """Attach combined boxes (plus the agnostic region in permissive mode) to singletons
    and full products to larger nodes."""
    if corpus is not None:
        signatures = corpus.predicates if signatures is None else signatures
        conversions = corpus.conversions if conversions is None else conversions
    signatures = signatures or {}
    conversions = conversions or {}
    truth_type(mode)
    poset = build_poset(theories)
    by_id = {g.doc_id: g for g in theories}
    stalks: dict = {}
    for node in poset.nodes:
        if len(node) == 1:
            (tid,) = node
            g = by_id[tid]
            boxes = combine_boxes(g, mode, signatures, conversions)
            agnostic = {}
            if mode == "permissive":
                for pred in boxes:
                    agnostic[pred] = agnostic_region(
                        g, pred, signatures[pred], mode, conversions, signatures
                    )
            stalks[node] = SingletonStalk(g, boxes, agnostic)
        else:
            shared = frozenset.intersection(*(by_id[t].predicates() for t in node))
            stalks[node] = FullStalk(shared)
    sheaf = Sheaf(poset, mode, by_id, signatures, stalks, conversions)
    if sheaf.has_conversions:
        sheaf.check_composition()
    return sheaf


def member_generators(sheaf: Sheaf, member: str, predicate: str) -> tuple[Box, ...]:
    """A theory's stalk generators for ``predicate``, mapped into signature units."""
    gens = sheaf.stalk([member]).generators(predicate)
    return tuple(b for b in (sheaf.to_signature(g) for g in gens) if not b.is_bottom)


def maximal_sections(sheaf: Sheaf, members: Iterable[str], predicate: str) -> tuple[Box, ...]:
    """Maximal tuples of ``predicate`` compatible with every member's stalk.

    Each member contributes one generator; the componentwise meets without a bottom
    slot are kept and reduced to their maximal elements.
    """
    members = sorted(set(members))
    if not members:
        return ()
    for m in members:
        if predicate not in sheaf.stalk([m]).boxes:
            raise SheafError(f"theory {m} does not constrain {predicate}")
    acc = maximal_boxes(member_generators(sheaf, members[0], predicate))
    for m in members[1:]:
        gens = member_generators(sheaf, m, predicate)
        acc = maximal_boxes(
            b for b in (a.meet(g) for a in acc for g in gens) if not b.is_bottom
        )
        if not acc:
            break
    return acc


def section_from_tuple(sheaf: Sheaf, members: Iterable[str], tup: Box) -> Section:
    """Spread a tuple over the members' singletons and every poset node they span."""
    members = frozenset(members)
    domain = [n for n in sheaf.poset.nodes if n <= members]
    return Section(frozenset(domain), tuple((n, tup) for n in domain))


# extensional sheaves


@dataclass(frozen=True)
class Violation:
    triple: tuple
    element: str
    direct: str
    composed: str

    def __str__(self):
        x, y, z = self.triple
        return (
            f"({x},{y},{z}): R[{x}<={z}]({self.element}) = {self.direct} but "
            f"R[{y}<={z}](R[{x}<={y}]({self.element})) = {self.composed}"
        )


@dataclass(frozen=True)
class SheafCheck:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def first(self) -> Optional[Violation]:
        return self.violations[0] if self.violations else None


@dataclass(frozen=True)
class GenericSheafSpec:
    """A finite sheaf written out in full: nodes, order, stalk elements and map tables."""

    name: str
    poset: Poset
    stalks: Mapping[str, tuple]
    maps: Mapping[tuple, Mapping[str, str]]

    @classmethod
    def build(cls, name, nodes, order, stalks, maps) -> "GenericSheafSpec":
        nodes = tuple(str(n) for n in nodes)
        if not nodes:
            raise SheafError(f"generic sheaf {name} has no nodes")
        if len(set(nodes)) != len(nodes):
            raise SheafError(f"generic sheaf {name} repeats a node")
        known = set(nodes)
        less = set()
        for x, y in order:
            if x not in known or y not in known:
                raise SheafError(f"order pair {x} <= {y} names an unknown node")
            if x != y:
                less.add((x, y))
        changed = True
        while changed:
            extra = {(x, z) for x, y in less for y2, z in less if y == y2} - less
            less |= extra
            changed = bool(extra)
        for x, y in less:
            if x == y or (y, x) in less:
                raise SheafError(f"order is not antisymmetric at {x}, {y}")
        for node in stalks:
            if node not in known:
                raise SheafError(f"stalk given for unknown node {node}")
        missing = [n for n in nodes if n not in stalks]
        if missing:
            raise SheafError(f"no stalk declared for node(s) {', '.join(missing)}")
        for pair in maps:
            if pair not in less:
                raise SheafError(f"map {pair[0]} -> {pair[1]} is not along the order")
        absent = [p for p in sorted(less, key=lambda p: (nodes.index(p[0]), nodes.index(p[1]))) if p not in maps]
        if absent:
            x, y = absent[0]
            raise SheafError(f"no restriction map declared for {x} -> {y}")
        return cls(
            name,
            Poset(nodes, frozenset(less)),
            {n: tuple(stalks[n]) for n in nodes},
            {p: dict(t) for p, t in maps.items()},
        )

    def restrict(self, x, y, element):
        if x == y:
            return element
        table = self.maps[x, y]
        if element not in table:
            raise MapDomainError(f"map {x} -> {y} is undefined on {element}")
        image = table[element]
        if image not in self.stalks[y]:
            raise MapDomainError(f"map {x} -> {y} sends {element} outside the stalk of {y}")
        return image


def verify_axioms(spec: GenericSheafSpec) -> SheafCheck:
    """Check every map is total into its target stalk and every chain composes."""
    for (x, y) in spec.maps:
        for e in spec.stalks[x]:
            spec.restrict(x, y, e)
    violations = []
    for x, y, z in spec.poset.triples():
        for e in spec.stalks[x]:
            direct = spec.restrict(x, z, e)
            composed = spec.restrict(y, z, spec.restrict(x, y, e))
            if direct != composed:
                violations.append(Violation((x, y, z), e, direct, composed))
    return SheafCheck(tuple(violations))


def enumerate_sections(spec: GenericSheafSpec, domain: Optional[Iterable] = None) -> list[Section]:
    """All compatible assignments over ``domain`` (default: every node), by backtracking."""
    check = verify_axioms(spec)
    if not check.ok:
        raise CompositionViolation(f"{spec.name} is not a sheaf: {check.first}")
    nodes = spec.poset.nodes
    if domain is None:
        domain = nodes
    domain = set(str(d) for d in domain)
    unknown = domain - set(nodes)
    if unknown:
        raise SheafError(f"unknown node(s) {', '.join(sorted(unknown))}")
    order = [n for n in nodes if n in domain]
    results = []

    def extend(i, assigned):
        if i == len(order):
            results.append(Section(frozenset(order), tuple(assigned)))
            return
        node = order[i]
        for e in spec.stalks[node]:
            if all(_compatible(spec, n, f, node, e) for n, f in assigned):
                extend(i + 1, assigned + [(node, e)])

    extend(0, [])
    return results


def _compatible(spec, a, ea, b, eb) -> bool:
    if spec.poset.leq(a, b):
        return spec.restrict(a, b, ea) == eb
    if spec.poset.leq(b, a):
        return spec.restrict(b, a, eb) == ea
    return True
