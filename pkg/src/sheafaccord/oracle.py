"""Brute-force reference semantics.

Nothing here touches boxes or the sheaf construction.  Theories are read atom by
atom and every ground tuple of the bounded parameter product is tested directly.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import prod
from typing import Mapping, Optional, Sequence

from .lattice import Value, convert, leq, truth_type
from .theory import Corpus, GroundTheory, PredicateSignature, expand_corpus

DEFAULT_ORACLE_CAP = 10**6


class OracleError(Exception):
    pass


@dataclass(frozen=True, order=False)
class GroundTuple:
    predicate: str
    values: tuple[Value, ...]  # argument points, then the truth point

    def sort_key(self):
        return tuple(v.sort_key() for v in self.values)

    def __str__(self):
        return f"{self.predicate}({', '.join(str(v) for v in self.values)})"


def _atoms(theory: GroundTheory, predicate: str, signature: PredicateSignature, conversions, mode):
    """Atoms of ``predicate`` in signature units, with the sign appended as a truth value."""
    truth = truth_type(mode)
    out = []
    for lit in theory.literals:
        if lit.atom.predicate != predicate:
            continue
        args = []
        for v, t in zip(lit.atom.args, signature.types):
            if v.type != t:
                try:
                    v = convert(v, conversions[v.type.name, t.name])
                except KeyError:
                    raise OracleError(f"no conversion from {v.type.name} to {t.name}") from None
            args.append(v)
        if any(v.is_bottom for v in args):
            continue
        out.append(tuple(args) + (truth.element("T" if lit.positive else "F"),))
    return out


def _points(signature: PredicateSignature, mode: str, cap: int):
    try:
        axes = [t.points() for t in signature.types]
    except Exception as e:
        raise OracleError(f"cannot enumerate {signature.name}: {e}") from None
    axes.append(truth_type(mode).points())
    size = prod(len(a) for a in axes)
    if size > cap:
        raise OracleError(f"{signature.name} has {size} ground tuples (cap {cap})")
    return list(product(*axes))


def _admitted(atoms, points, mode) -> set:
    """Points whose set of atoms-above is a maximal one (or which no atom covers, permissively)."""
    above = {p: frozenset(i for i, a in enumerate(atoms) if all(leq(x, y) for x, y in zip(p, a))) for p in points}
    ups = {s for s in above.values() if s}
    maximal = {s for s in ups if not any(s < t for t in ups)}
    admitted = {p for p, s in above.items() if s in maximal}
    if mode == "permissive":
        covered = set()
        for p in points:
            params = p[:-1]
            if any(all(leq(x, y) for x, y in zip(params, a[:-1])) for a in atoms):
                covered.add(params)
        admitted |= {p for p in points if p[:-1] not in covered}
    return admitted


def oracle_consistent(
    theories: Sequence[GroundTheory],
    predicate: str,
    signature: PredicateSignature,
    mode: str = "strict",
    conversions: Optional[Mapping] = None,
    cap: int = DEFAULT_ORACLE_CAP,
) -> tuple[bool, frozenset]:
    """Is some ground tuple admitted by every theory constraining ``predicate``?

    Returns the verdict and every such tuple.
    """
    conversions = conversions or {}
    points = _points(signature, mode, cap)
    common = set(points)
    for g in theories:
        atoms = _atoms(g, predicate, signature, conversions, mode)
        if not any(lit.atom.predicate == predicate for lit in g.literals):
            continue
        common &= _admitted(atoms, points, mode)
        if not common:
            break
    witnesses = frozenset(GroundTuple(predicate, p) for p in common)
    return bool(witnesses), witnesses


def oracle_corpus_consistent(
    corpus: Corpus,
    predicate: str,
    mode: str = "strict",
    model_cap: int = 4096,
    cap: int = DEFAULT_ORACLE_CAP,
) -> bool:
    """True iff some choice of one model per theory is consistent on ``predicate``."""
    models = expand_corpus(corpus.theories, model_cap)
    sig = corpus.predicates[predicate]
    for combo in product(*models.values()):
        ok, _ = oracle_consistent(combo, predicate, sig, mode, corpus.conversions, cap)
        if ok:
            return True
    return False


def oracle_sections(spec) -> list:
    """Every element of the product of stalks compatible on every order pair."""
    from .sheaf import Section

    nodes = spec.poset.nodes
    out = []
    for choice in product(*(spec.stalks[n] for n in nodes)):
        assign = dict(zip(nodes, choice))
        if all(spec.maps[x, y].get(assign[x]) == assign[y] for x, y in spec.poset.less):
            out.append(Section(frozenset(nodes), tuple(zip(nodes, choice))))
    return out
