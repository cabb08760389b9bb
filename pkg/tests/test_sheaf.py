from __future__ import annotations

import random
from itertools import combinations, product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randcorpus import random_corpus
from sheafaccord.analysis import Analyzer
from sheafaccord.dsl import parse, parse_files
from sheafaccord.lattice import enumerate_downset, leq, truth_type
from sheafaccord.oracle import oracle_consistent, oracle_sections
from sheafaccord.sheaf import (
    CompositionViolation,
    FullStalk,
    GenericSheafSpec,
    MapDomainError,
    SheafError,
    agnostic_region,
    build_poset,
    build_sheaf,
    enumerate_sections,
    maximal_sections,
    section_from_tuple,
    verify_axioms,
)
from sheafaccord.theory import TheoryError, expand_models

from conftest import CORPORA


def ground(corpus, model_choice=None):
    model_choice = model_choice or {}
    return [expand_models(d)[model_choice.get(d.id, 0)] for d in corpus.theories]


def test_screening_poset():
    corpus = parse_files([CORPORA / "screening.sheaf"])
    poset = build_poset(ground(corpus))
    assert [tuple(sorted(n)) for n in poset.nodes] == [
        ("Ta",), ("Tb",), ("Tc",), ("Ta", "Tb"), ("Ta", "Tc"), ("Tb", "Tc"), ("Ta", "Tb", "Tc"),
    ]
    assert poset.leq(frozenset({"Ta"}), frozenset({"Ta", "Tb"}))
    assert (frozenset({"Ta"}), frozenset({"Ta", "Tb", "Tc"})) not in poset.hasse


def test_poset_skips_unrelated_theories():
    c = parse("type A = interval 0..5\npred p(A)\npred q(A)\ntheory X { p(1) }\ntheory Y { q(1) }\ntheory Z { p(2); q(2) }")
    poset = build_poset(ground(c))
    names = {tuple(sorted(n)) for n in poset.nodes}
    assert ("X", "Y") not in names and ("X", "Z") in names and ("Y", "Z") in names
    assert ("X", "Y", "Z") not in names


def test_stalks_and_restrictions():
    corpus = parse_files([CORPORA / "screening.sheaf"])
    sheaf = build_sheaf(ground(corpus), "strict", corpus)
    assert isinstance(sheaf.stalk(["Ta", "Tb"]), FullStalk)
    assert all(r.is_identity for r in sheaf.restrictions.values())
    assert not sheaf.has_conversions
    with pytest.raises(SheafError):
        sheaf.restriction(frozenset({"Ta", "Tb"}), frozenset({"Ta"}))


def test_conversion_restriction():
    corpus = parse_files([CORPORA / "exercise.sheaf"])
    sheaf = build_sheaf(ground(corpus), "strict", corpus)
    assert sheaf.has_conversions
    (mayo_box,) = sheaf.stalk(["Mayo"]).generators("exercise")
    r = sheaf.restriction(frozenset({"Mayo"}), frozenset({"Cdc", "Mayo"}))
    assert str(r.apply(mayo_box)) == "exercise([210,1000], T)"
    sheaf.check_composition()


def test_screening_sections():
    corpus = parse_files([CORPORA / "screening.sheaf"])
    sheaf = build_sheaf(ground(corpus, {"Tc": 1}), "strict", corpus)
    secs = maximal_sections(sheaf, ["Ta", "Tc"], "s")
    assert [str(b) for b in secs] == ["s([50,54], m^bx, an, T)", "s([55,74], m^bx, an, T)"]
    assert maximal_sections(sheaf, ["Ta", "Tb"], "s") == ()
    section = section_from_tuple(sheaf, ["Ta", "Tc"], secs[0])
    assert set(section.domain) == {frozenset({"Ta"}), frozenset({"Tc"}), frozenset({"Ta", "Tc"})}
    assert all(sheaf.contains(n, secs[0]) for n in section.domain)


def test_member_must_constrain_predicate():
    c = parse("type A = interval 0..5\npred p(A)\npred q(A)\ntheory X { p(1) }\ntheory Y { q(1) }")
    sheaf = build_sheaf(ground(c), "strict", c)
    with pytest.raises(SheafError):
        maximal_sections(sheaf, ["X", "Y"], "p")


AG_HEADER = "type A = interval 0..6\nlattice L { x, y, z <= x, z <= y }\npred p(A, L)\n"
atom = st.tuples(st.integers(0, 6), st.integers(0, 6), st.sampled_from(["x", "y", "z"]), st.booleans())


@given(st.lists(atom, min_size=1, max_size=4))
@settings(max_examples=80, deadline=None)
def test_agnostic_region_matches_enumeration(atoms):
    lits = "; ".join(
        f"{'' if pos else 'not '}p([{min(a, b)},{max(a, b)}], {e})" for a, b, e, pos in atoms
    )
    c = parse(AG_HEADER + f"theory T {{ {lits} }}")
    try:
        (g,) = ground(c)
    except TheoryError:
        return
    sig = c.predicates["p"]
    region = agnostic_region(g, "p", sig, "permissive", c.conversions, c.predicates)
    assert all(str(b.truth) == "U" for b in region)
    raw = [lit.atom.args for lit in g.literals]
    a_type, l_type = sig.types

    def covered(i, e):
        return any(leq(i, r[0]) and leq(e, r[1]) for r in raw)

    below = {
        (i, e)
        for b in region
        for i in enumerate_downset(b.generator[0])
        for e in enumerate_downset(b.generator[1])
    }
    # the region holds only uncovered tuples, and every uncovered ground point
    assert not any(covered(i, e) for i, e in below)
    uncovered = {(i, e) for i in a_type.points() for e in l_type.points() if not covered(i, e)}
    assert uncovered <= below


def test_agnostic_region_negation_example():
    corpus = parse_files([CORPORA / "negation.sheaf"])
    tp = ground(corpus)[1]
    region = agnostic_region(tp, "s", corpus.predicates["s"], "permissive", corpus.conversions, corpus.predicates)
    assert [str(b) for b in region] == ["s([50,54], m, U)"]


def _random_analyzers(count, seed=11):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        c = parse(random_corpus(rng))
        try:
            out.append((Analyzer(c, "strict"), Analyzer(c, "permissive")))
        except TheoryError:
            continue
    return out


def test_section_points_equal_oracle_witnesses():
    checked = 0
    for strict, permissive in _random_analyzers(120):
        for an in (strict, permissive):
            for i, combo in enumerate(an.combos):
                sheaf = an.sheaf(i)
                for p in an.predicates():
                    members = [g.doc_id for g in combo if p in g.predicates()]
                    if not members:
                        continue
                    secs = maximal_sections(sheaf, members, p)
                    sig = an.corpus.predicates[p]
                    axes = [t.points() for t in sig.types] + [truth_type(an.mode).points()]
                    below = {
                        pt
                        for pt in product(*axes)
                        if any(all(leq(x, y) for x, y in zip(pt, b.slots)) for b in secs)
                    }
                    _, tuples = oracle_consistent(combo, p, sig, an.mode, an.corpus.conversions)
                    assert below == {t.values for t in tuples}
                    checked += 1
    assert checked > 100


def test_permissive_admits_whenever_strict_does():
    for strict, permissive in _random_analyzers(150, seed=5):
        for p in strict.predicates():
            if strict.admits(p, strict.constraining(p)):
                assert permissive.admits(p, permissive.constraining(p))


def test_admission_is_monotone_in_members():
    for strict, _ in _random_analyzers(100, seed=9):
        for p in strict.predicates():
            members = strict.constraining(p)
            for size in range(2, len(members) + 1):
                for subset in combinations(members, size):
                    if strict.admits(p, subset):
                        for smaller in combinations(subset, size - 1):
                            assert strict.admits(p, smaller)


# generic sheaves


def load(name):
    return parse_files([CORPORA / name]).generic_sheaves


def test_shift_sheaf_sections():
    spec = load("shift.sheaf")["Shift"]
    assert verify_axioms(spec).ok
    assert len(enumerate_sections(spec)) == 1
    assert len(enumerate_sections(spec, ["2", "3"])) == 4
    assert len(enumerate_sections(spec, ["3"])) == 6
    assert sorted(s.assignment for s in enumerate_sections(spec)) == sorted(
        s.assignment for s in oracle_sections(spec)
    )


def test_broken_shift_violations():
    spec = load("shift_broken.sheaf")["ShiftByOne"]
    check = verify_axioms(spec)
    assert check.first.triple == ("0", "1", "2")
    assert ("1", "2", "3") in {v.triple for v in check.violations}
    with pytest.raises(CompositionViolation):
        enumerate_sections(spec)


def test_generic_sheaf_validation():
    with pytest.raises(SheafError):
        GenericSheafSpec.build("S", ["a", "b"], [("a", "b")], {"a": ["1"], "b": ["1"]}, {})
    with pytest.raises(SheafError):
        GenericSheafSpec.build("S", ["a", "b"], [("a", "b"), ("b", "a")], {"a": ["1"], "b": ["1"]}, {})
    with pytest.raises(SheafError):
        GenericSheafSpec.build("S", ["a"], [], {}, {})
    spec = GenericSheafSpec.build("S", ["a", "b"], [("a", "b")], {"a": ["1"], "b": ["2"]}, {("a", "b"): {"1": "3"}})
    with pytest.raises(MapDomainError):
        verify_axioms(spec)


def _chain_spec(size, f01, f12, f02):
    elems = [str(i) for i in range(size)]
    return GenericSheafSpec.build(
        "R",
        ["0", "1", "2"],
        [("0", "1"), ("1", "2")],
        {n: elems for n in "012"},
        {
            ("0", "1"): dict(zip(elems, map(str, f01))),
            ("1", "2"): dict(zip(elems, map(str, f12))),
            ("0", "2"): dict(zip(elems, map(str, f02))),
        },
    )


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(*(st.lists(st.integers(0, n - 1), min_size=n, max_size=n) for _ in range(3)))))
@settings(max_examples=100)
def test_random_chain_sheaves(maps):
    f01, f12, f02 = maps
    n = len(f01)
    composed = [f12[f01[i]] for i in range(n)]
    spec = _chain_spec(n, f01, f12, f02)
    assert verify_axioms(spec).ok == (composed == f02)
    good = _chain_spec(n, f01, f12, composed)
    got = sorted(s.assignment for s in enumerate_sections(good))
    assert got == sorted(s.assignment for s in oracle_sections(good))
    # a global section is fixed by its value at the bottom node
    assert len(got) == n
