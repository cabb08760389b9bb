"""Theories, their ground models, and canonical per-predicate boxes."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from itertools import product
from math import prod
from typing import Mapping, Optional

from .lattice import (
    ConversionMap,
    LatticeType,
    Value,
    convert,
    meet,
    truth_type,
)

DEFAULT_MODEL_CAP = 4096


class TheoryError(Exception):
    pass


class UnsatisfiableTheory(TheoryError):
    pass


class ModelCapExceeded(TheoryError):
    pass


@dataclass(frozen=True)
class PredicateSignature:
    name: str
    types: tuple[LatticeType, ...]

    @property
    def arity(self) -> int:
        return len(self.types)

    def slot_names(self) -> tuple[str, ...]:
        names = [t.name for t in self.types]
        out = []
        for i, n in enumerate(names):
            out.append(n if names.count(n) == 1 else f"{n}@{i + 1}")
        return tuple(out) + ("Truth",)


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[Value, ...]

    def __str__(self):
        return f"{self.predicate}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self):
        return str(self.atom) if self.positive else f"not {self.atom}"


@dataclass(frozen=True)
class TheoryDoc:
    """A theory as written: a list of clauses, each a disjunction of literals."""

    id: str
    clauses: tuple[tuple[Literal, ...], ...]

    @property
    def has_negation(self) -> bool:
        return any(not lit.positive for clause in self.clauses for lit in clause)


@dataclass(frozen=True)
class GroundTheory:
    doc_id: str
    model: int
    literals: frozenset[Literal]

    @property
    def id(self) -> str:
        return f"{self.doc_id}#{self.model}"

    def predicates(self) -> frozenset[str]:
        return frozenset(lit.atom.predicate for lit in self.literals)


@dataclass(frozen=True)
class Box:
    """Down-set generator: argument values plus a truth tag."""

    predicate: str
    generator: tuple[Value, ...]
    truth: Value

    @property
    def slots(self) -> tuple[Value, ...]:
        return self.generator + (self.truth,)

    @classmethod
    def from_slots(cls, predicate: str, slots) -> "Box":
        slots = tuple(slots)
        return cls(predicate, slots[:-1], slots[-1])

    def meet(self, other: "Box") -> "Box":
        return Box.from_slots(self.predicate, (meet(a, b) for a, b in zip(self.slots, other.slots)))

    @property
    def is_bottom(self) -> bool:
        return any(v.is_bottom for v in self.slots)

    def leq(self, other: "Box") -> bool:
        return self.predicate == other.predicate and all(
            meet(a, b) == a for a, b in zip(self.slots, other.slots)
        )

    def sort_key(self):
        return (self.predicate,) + tuple(v.sort_key() for v in self.slots)

    def __str__(self):
        return f"{self.predicate}({', '.join(str(v) for v in self.slots)})"


def maximal_boxes(boxes) -> tuple[Box, ...]:
    """Deduplicated maximal elements, in deterministic order."""
    uniq = sorted(set(boxes), key=Box.sort_key)
    return tuple(b for b in uniq if not any(b != c and b.leq(c) for c in uniq))


@dataclass
class Corpus:
    """Everything declared by one or more DSL sources."""

    types: dict[str, LatticeType] = field(default_factory=dict)
    conversions: dict[tuple[str, str], ConversionMap] = field(default_factory=dict)
    predicates: dict[str, PredicateSignature] = field(default_factory=dict)
    theories: list[TheoryDoc] = field(default_factory=list)
    generic_sheaves: dict = field(default_factory=dict)
    sources: list[str] = field(default_factory=list)

    def theory(self, theory_id: str) -> TheoryDoc:
        for doc in self.theories:
            if doc.id == theory_id:
                return doc
        raise KeyError(theory_id)

    @property
    def has_negation(self) -> bool:
        return any(doc.has_negation for doc in self.theories)


def model_cap_from_env(default: int = DEFAULT_MODEL_CAP) -> int:
    raw = os.environ.get("SHEAFACCORD_MODEL_CAP")
    if not raw:
        return default
    cap = int(raw)
    if cap <= 0:
        raise ValueError("SHEAFACCORD_MODEL_CAP must be positive")
    return cap


def expand_models(doc: TheoryDoc, cap: int = DEFAULT_MODEL_CAP) -> list[GroundTheory]:
    """Pick one literal per clause; drop choices asserting an atom both ways; deduplicate."""
    width = prod(len(c) for c in doc.clauses)
    if width > cap:
        raise ModelCapExceeded(f"theory {doc.id} has {width} literal choices (cap {cap})")
    seen: set[frozenset[Literal]] = set()
    literal_sets = []
    for choice in product(*doc.clauses):
        lits = frozenset(choice)
        pos = {lit.atom for lit in lits if lit.positive}
        if any(not lit.positive and lit.atom in pos for lit in lits):
            continue
        if lits not in seen:
            seen.add(lits)
            literal_sets.append(lits)
    if not literal_sets:
        raise UnsatisfiableTheory(f"theory {doc.id} has no consistent model")
    return [GroundTheory(doc.id, i, lits) for i, lits in enumerate(literal_sets)]


def expand_corpus(docs, cap: int = DEFAULT_MODEL_CAP) -> dict[str, list[GroundTheory]]:
    models = {doc.id: expand_models(doc, cap) for doc in docs}
    total = prod(len(m) for m in models.values())
    if total > cap:
        raise ModelCapExceeded(f"corpus has {total} model combinations (cap {cap})")
    return models


def _maximal_compatible(atoms: list[tuple[Value, ...]]) -> list[tuple[Value, ...]]:
    """Meets of maximal subsets whose componentwise meet has no bottom slot."""
    n = len(atoms)
    found = []

    def extend(i, chosen, acc):
        if i == n:
            if not chosen:
                return
            for j in range(n):
                if j not in chosen and not any(
                    meet(a, b).is_bottom for a, b in zip(acc, atoms[j])
                ):
                    return
            found.append(acc)
            return
        if acc is None:
            extend(i + 1, chosen | {i}, atoms[i])
        else:
            joint = tuple(meet(a, b) for a, b in zip(acc, atoms[i]))
            if not any(v.is_bottom for v in joint):
                extend(i + 1, chosen | {i}, joint)
        extend(i + 1, chosen, acc)

    extend(0, frozenset(), None)
    return found


def canonical_args(
    atom: Atom,
    signature: PredicateSignature,
    conversions: Mapping[tuple[str, str], ConversionMap],
) -> tuple[Value, ...]:
    out = []
    for v, t in zip(atom.args, signature.types):
        if v.type == t:
            out.append(v)
        else:
            out.append(convert(v, conversion_for(v.type, t, conversions)))
    return tuple(out)


def conversion_for(source, target, conversions) -> ConversionMap:
    try:
        return conversions[source.name, target.name]
    except KeyError:
        raise TheoryError(f"no conversion from {source.name} to {target.name}") from None


def predicate_rows(
    g: GroundTheory,
    predicate: str,
    signatures: Optional[Mapping[str, PredicateSignature]] = None,
    conversions: Optional[Mapping[tuple[str, str], ConversionMap]] = None,
) -> list[tuple[tuple[Value, ...], bool]]:
    """``(args, positive)`` for each literal of ``predicate``.

    Atoms keep the units they were stated in unless one slot mixes units within the
    theory, in which case every atom of that predicate is converted to its signature types.
    """
    lits = [lit for lit in g.literals if lit.atom.predicate == predicate]
    if not lits:
        return []
    arity = len(lits[0].atom.args)
    mixed = any(len({lit.atom.args[i].type for lit in lits}) > 1 for i in range(arity))
    if not mixed:
        return [(lit.atom.args, lit.positive) for lit in lits]
    if signatures is None:
        raise TheoryError(f"predicate {predicate} mixes units in {g.id}; signatures required")
    rows = []
    for lit in lits:
        args = canonical_args(lit.atom, signatures[predicate], conversions or {})
        if not any(v.is_bottom for v in args):
            rows.append((args, lit.positive))
    return rows


def combine_boxes(
    g: GroundTheory,
    mode: str = "strict",
    signatures: Optional[Mapping[str, PredicateSignature]] = None,
    conversions: Optional[Mapping[tuple[str, str], ConversionMap]] = None,
) -> dict[str, tuple[Box, ...]]:
    """One box per maximal jointly-compatible set of atoms, per predicate and sign.

    Subsets that could take another atom without a bottom slot are suppressed, so a
    witness must satisfy every atom it is jointly compatible with.
    """
    truth = truth_type(mode)
    out = {}
    for pred in sorted(g.predicates()):
        rows = predicate_rows(g, pred, signatures, conversions)
        boxes = []
        for positive in (True, False):
            gens = sorted(
                {args for args, sign in rows if sign == positive},
                key=lambda r: tuple(v.sort_key() for v in r),
            )
            if not gens:
                continue
            tag = truth.element("T" if positive else "F")
            boxes.extend(Box(pred, gen, tag) for gen in _maximal_compatible(gens))
        out[pred] = tuple(sorted(set(boxes), key=Box.sort_key))
    return out
