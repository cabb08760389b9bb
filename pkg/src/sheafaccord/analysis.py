"""Corpus verdicts, conflict witnesses, reconciliation and a disagreement score.

Every theory is first expanded into its ground models.  Per predicate, a set of
theories *admits a section* when some choice of one model per theory leaves a
non-bottom meet (theories whose chosen model says nothing about the predicate
impose nothing).  Contradiction means the whole corpus admits no section.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from itertools import combinations, product
from typing import Iterable, Optional

from .lattice import Value, meet_all
from .sheaf import Sheaf, build_sheaf, maximal_sections, member_generators
from .theory import Box, Corpus, expand_corpus, maximal_boxes, model_cap_from_env


class AnalysisError(Exception):
    pass


class NoContradiction(AnalysisError):
    pass


class Status(IntEnum):
    AGREEMENT = 0
    DISAGREEMENT = 1
    CONTRADICTION = 2

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class ConflictWitness:
    predicate: str
    theories: tuple[str, ...]
    slot: int
    slot_name: str
    values: tuple[Value, ...]
    overlap: tuple[tuple[str, Value], ...] = ()

    def __str__(self):
        clash = " vs ".join(str(v) for v in self.values)
        where = ", ".join(f"{n}={v}" for n, v in self.overlap)
        s = f"{{{','.join(self.theories)}}} {self.slot_name}: {clash}"
        return s + (f" (on {where})" if where else "")


@dataclass(frozen=True)
class Coalition:
    members: tuple[str, ...]
    sections: tuple[Box, ...]


@dataclass(frozen=True)
class PredicateVerdict:
    predicate: str
    status: Status
    theories: tuple[str, ...]
    sections: tuple[Box, ...]
    witnesses: tuple[ConflictWitness, ...]
    coalitions: tuple[Coalition, ...]
    degree: Fraction


@dataclass(frozen=True)
class Verdict:
    mode: str
    predicates: tuple[PredicateVerdict, ...]

    @property
    def status(self) -> Status:
        return max((p.status for p in self.predicates), default=Status.AGREEMENT)

    def __getitem__(self, predicate: str) -> PredicateVerdict:
        for p in self.predicates:
            if p.predicate == predicate:
                return p
        raise KeyError(predicate)


@dataclass(frozen=True)
class PredicateReconciliation:
    predicate: str
    dominant: tuple[Box, ...]
    coalitions: tuple[Coalition, ...]
    degree: Fraction


@dataclass(frozen=True)
class ReconciliationReport:
    mode: str
    predicates: tuple[PredicateReconciliation, ...]

    def __getitem__(self, predicate: str) -> PredicateReconciliation:
        for p in self.predicates:
            if p.predicate == predicate:
                return p
        raise KeyError(predicate)


class Analyzer:
    """Shared machinery: model expansion, one sheaf per model combination, cached queries."""

    def __init__(self, corpus: Corpus, mode: str = "strict", model_cap: Optional[int] = None):
        if mode not in ("strict", "permissive"):
            raise AnalysisError(f"unknown mode {mode!r}")
        self.corpus = corpus
        self.mode = mode
        cap = model_cap if model_cap is not None else model_cap_from_env()
        self.models = expand_corpus(corpus.theories, cap)
        self.doc_ids = tuple(doc.id for doc in corpus.theories)
        self.combos = list(product(*(self.models[d] for d in self.doc_ids)))
        self._sheaves: dict[int, Sheaf] = {}
        self._admits: dict = {}

    def sheaf(self, index: int) -> Sheaf:
        if index not in self._sheaves:
            self._sheaves[index] = build_sheaf(self.combos[index], self.mode, self.corpus)
        return self._sheaves[index]

    def predicates(self) -> tuple[str, ...]:
        preds = {p for models in self.models.values() for g in models for p in g.predicates()}
        return tuple(sorted(preds))

    def constraining(self, predicate: str) -> tuple[str, ...]:
        return tuple(
            d for d in self.doc_ids if any(predicate in g.predicates() for g in self.models[d])
        )

    def _combos_for(self, members):
        """Combination indices giving distinct model choices for ``members``."""
        seen = set()
        idx = [self.doc_ids.index(m) for m in members]
        for i, combo in enumerate(self.combos):
            key = tuple(combo[j].model for j in idx)
            if key not in seen:
                seen.add(key)
                yield i, combo

    def _active(self, combo, members, predicate):
        return [m for m in members if predicate in combo[self.doc_ids.index(m)].predicates()]

    def sections(self, predicate: str, members: Iterable[str]) -> tuple[bool, tuple[Box, ...]]:
        """Whether ``members`` admit a section on ``predicate``, and the maximal sections
        found across all model combinations."""
        members = tuple(sorted(set(members), key=self.doc_ids.index))
        key = (predicate, members)
        if key in self._admits:
            return self._admits[key]
        admits = False
        found = []
        for i, combo in self._combos_for(members):
            active = self._active(combo, members, predicate)
            if not active:
                admits = True
                continue
            secs = maximal_sections(self.sheaf(i), active, predicate)
            if secs:
                admits = True
                found.extend(secs)
        result = (admits, maximal_boxes(found))
        self._admits[key] = result
        return result

    def admits(self, predicate: str, members) -> bool:
        return self.sections(predicate, members)[0]

    def agreement(self, predicate: str) -> bool:
        """Some combination gives every constraining theory the same canonical boxes."""
        members = self.constraining(predicate)
        for i, combo in self._combos_for(members):
            active = self._active(combo, members, predicate)
            if not active:
                continue
            sheaf = self.sheaf(i)
            box_sets = set()
            for m in active:
                stalk = sheaf.stalk([m])
                box_sets.add(frozenset(sheaf.to_signature(b) for b in stalk.boxes[predicate]))
            if len(box_sets) == 1:
                return True
        return False

    def coalitions(self, predicate: str) -> tuple[Coalition, ...]:
        """Maximal subsets of theories admitting a section, largest first."""
        members = self.constraining(predicate)
        found: list[tuple[str, ...]] = []
        for size in range(len(members), 0, -1):
            for subset in combinations(members, size):
                if any(set(subset) <= set(c) for c in found):
                    continue
                if self.admits(predicate, subset):
                    found.append(subset)
        return tuple(Coalition(c, self.sections(predicate, c)[1]) for c in found)

    def degree(self, predicate: str) -> Fraction:
        members = self.constraining(predicate)
        if not members:
            raise AnalysisError(f"no theory constrains {predicate}")
        best = max(len(c.members) for c in self.coalitions(predicate))
        return 1 - Fraction(best, len(members))

    def witnesses(self, predicate: str) -> tuple[ConflictWitness, ...]:
        """Bottom slots for every minimal set of theories admitting no section."""
        members = self.constraining(predicate)
        minimal: list[tuple[str, ...]] = []
        for size in range(2, len(members) + 1):
            for subset in combinations(members, size):
                if any(set(m) <= set(subset) for m in minimal):
                    continue
                if not self.admits(predicate, subset):
                    minimal.append(subset)
        sig = self.corpus.predicates[predicate]
        names = sig.slot_names()
        out = []
        for subset in minimal:
            for i, combo in self._combos_for(subset):
                sheaf = self.sheaf(i)
                gens = [member_generators(sheaf, m, predicate) for m in subset]
                for choice in product(*gens):
                    slots = [meet_all(b.slots[k] for b in choice) for k in range(len(names))]
                    overlap = tuple(
                        (names[k], v) for k, v in enumerate(slots) if not v.is_bottom
                    )
                    for k, v in enumerate(slots):
                        if v.is_bottom:
                            values = tuple(b.slots[k] for b in choice)
                            out.append(
                                ConflictWitness(predicate, subset, k, names[k], values, overlap)
                            )
        uniq = list(dict.fromkeys(out))
        uniq.sort(
            key=lambda w: (
                len(w.theories),
                [members.index(t) for t in w.theories],
                w.slot,
                [v.sort_key() for v in w.values],
                [(n, v.sort_key()) for n, v in w.overlap],
            )
        )
        return tuple(uniq)

    def verdict(self, predicate: str) -> PredicateVerdict:
        members = self.constraining(predicate)
        admits, sections = self.sections(predicate, members)
        if not admits:
            status = Status.CONTRADICTION
            witnesses = self.witnesses(predicate)
            coalitions = self.coalitions(predicate)
            degree = self.degree(predicate)
        else:
            status = Status.AGREEMENT if self.agreement(predicate) else Status.DISAGREEMENT
            witnesses = ()
            coalitions = (Coalition(members, sections),)
            degree = Fraction(0)
        return PredicateVerdict(predicate, status, members, sections, witnesses, coalitions, degree)


def _selected(analyzer: Analyzer, predicates) -> tuple[str, ...]:
    known = analyzer.predicates()
    if predicates is None:
        return known
    if isinstance(predicates, str):
        predicates = [predicates]
    missing = [p for p in predicates if p not in known]
    if missing:
        raise AnalysisError(f"no theory constrains {', '.join(missing)}")
    return tuple(sorted(set(predicates)))


def classify(
    corpus: Corpus,
    mode: str = "strict",
    predicates=None,
    model_cap: Optional[int] = None,
    analyzer: Optional[Analyzer] = None,
) -> Verdict:
    """Agreement, disagreement or contradiction per predicate; worst case overall."""
    an = analyzer or Analyzer(corpus, mode, model_cap)
    return Verdict(an.mode, tuple(an.verdict(p) for p in _selected(an, predicates)))


def reconcile(
    corpus: Corpus,
    mode: str = "strict",
    predicates=None,
    model_cap: Optional[int] = None,
    analyzer: Optional[Analyzer] = None,
) -> ReconciliationReport:
    """Dominant global sections where they exist, otherwise the maximal coalitions."""
    an = analyzer or Analyzer(corpus, mode, model_cap)
    out = []
    for p in _selected(an, predicates):
        admits, sections = an.sections(p, an.constraining(p))
        if admits:
            out.append(PredicateReconciliation(p, sections, (), Fraction(0)))
        else:
            out.append(PredicateReconciliation(p, (), an.coalitions(p), an.degree(p)))
    return ReconciliationReport(an.mode, tuple(out))


def disagreement_degree(
    corpus: Corpus, predicate: str, mode: str = "strict", model_cap: Optional[int] = None
) -> Fraction:
    """``1 - largest coalition / theories constraining the predicate``.  A diagnostic score."""
    return Analyzer(corpus, mode, model_cap).degree(predicate)


def explain(
    corpus: Corpus,
    mode: str = "strict",
    predicates=None,
    model_cap: Optional[int] = None,
    analyzer: Optional[Analyzer] = None,
) -> list[ConflictWitness]:
    an = analyzer or Analyzer(corpus, mode, model_cap)
    out = []
    for p in _selected(an, predicates):
        if not an.admits(p, an.constraining(p)):
            out.extend(an.witnesses(p))
    if not out:
        raise NoContradiction("the corpus has a global section on every predicate")
    return out
