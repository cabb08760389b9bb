from __future__ import annotations

from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sheafaccord.dsl import DslError, parse, parse_files, tokenize
from sheafaccord.lattice import TRUTH3, TRUTH4
from sheafaccord.theory import (
    Box,
    ModelCapExceeded,
    UnsatisfiableTheory,
    combine_boxes,
    expand_corpus,
    expand_models,
    maximal_boxes,
    model_cap_from_env,
)

from conftest import CORPORA

HEADER = "type A = interval 0..10\nlattice L { x, y }\npred p(A, L)\npred r(A)\n"


def boxes_of(corpus, doc_id, mode="strict", model=0):
    doc = corpus.theory(doc_id)
    g = expand_models(doc)[model]
    return combine_boxes(g, mode, corpus.predicates, corpus.conversions)


# parsing


def test_parse_screening():
    corpus = parse_files([CORPORA / "screening.sheaf"])
    assert [d.id for d in corpus.theories] == ["Ta", "Tb", "Tc"]
    assert corpus.predicates["s"].slot_names() == ("Age", "Exam", "Freq", "Truth")
    assert not corpus.has_negation
    exam = corpus.types["Exam"]
    assert str(exam._meets["m", "bx"]) == "m^bx"


def test_parse_literal_forms():
    c = parse(HEADER + "theory T { p(A:[1,], L:x) | ~p(2, y); not r(4); r([0,3]) }")
    (doc,) = c.theories
    first, second, third = doc.clauses
    assert [str(lit) for lit in first] == ["p([1,10], x)", "not p([2,2], y)"]
    assert not second[0].positive
    assert str(third[0]) == "r([0,3])"
    assert c.has_negation


def test_parse_extends_existing_corpus():
    c = parse(HEADER)
    parse("theory T { r(1) }", c)
    assert c.theory("T").clauses[0][0].atom.predicate == "r"


def test_parse_conversion_label():
    c = parse_files([CORPORA / "exercise.sheaf"])
    arg = c.theory("Mayo").clauses[0][0].atom.args[0]
    assert arg.type.name == "Daily" and str(arg) == "[30,1440]"
    assert ("Daily", "Weekly") in c.conversions


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("theory T { r([3,20]) }", "outside bounds"),
        ("pred q(Z)", "unknown type Z"),
        ("theory T { q(1) }", "unknown predicate q"),
        ("theory T { r(1, 2) }", "expects 1 arguments"),
        ("theory T { r(1) }\ntheory T { r(2) }", "duplicate theory id"),
        ("theory T { }", "no statements"),
        ("theory T { not not r(1) }", "double negation"),
        ("theory T { p(1, z) }", "z"),
        ("theory T { r(1) ", "eof"),
        ("lattice W { a, b, c <= a, c <= b, d <= a, d <= b }", "greatest lower bound"),
    ],
)
def test_parse_errors(body, fragment):
    with pytest.raises(DslError) as info:
        parse(HEADER + body)
    assert fragment in str(info.value)
    assert info.value.line >= 1


def test_error_location():
    with pytest.raises(DslError) as info:
        parse("type A = interval 0..10\npred r(A)\ntheory T { q(1) }", filename="f.sheaf")
    assert str(info.value).startswith("f.sheaf:3:12:")


def test_comments_are_ignored():
    assert [t.kind for t in tokenize("# note\n# more\n")][:-1] == []
    c = parse(HEADER + "theory T { r(1) } # trailing")
    assert len(c.theories) == 1


# model expansion


def truth_table_models(clauses):
    """Consistent literal choices, rebuilt by enumerating truth assignments."""
    atoms = sorted({lit.atom for clause in clauses for lit in clause}, key=str)
    keep = set()
    for bits in product([False, True], repeat=len(atoms)):
        val = dict(zip(atoms, bits))
        if not all(any(val[lit.atom] == lit.positive for lit in c) for c in clauses):
            continue
        # the literal choices this assignment can support
        for choice in product(*clauses):
            if all(val[lit.atom] == lit.positive for lit in choice):
                keep.add(frozenset(choice))
    return keep


def test_expand_models_disjunction():
    c = parse(HEADER + "theory T { r(1) | r(2); r(3) | r(4) }")
    assert len(expand_models(c.theories[0])) == 4


def test_expand_models_drops_contradictory_branch():
    c = parse(HEADER + "theory T { r(1) | r(2); not r(1) }")
    models = expand_models(c.theories[0])
    assert [sorted(map(str, m.literals)) for m in models] == [["not r([1,1])", "r([2,2])"]]


def test_unsatisfiable_theory():
    c = parse(HEADER + "theory T { r(1); not r(1) }")
    with pytest.raises(UnsatisfiableTheory):
        expand_models(c.theories[0])


def test_model_cap(monkeypatch):
    c = parse(HEADER + "theory T { r(1) | r(2); r(3) | r(4); r(5) | r(6) }")
    with pytest.raises(ModelCapExceeded):
        expand_models(c.theories[0], cap=7)
    c2 = parse(HEADER + "theory U { r(1) | r(2) }\ntheory V { r(3) | r(4) }")
    with pytest.raises(ModelCapExceeded):
        expand_corpus(c2.theories, cap=3)
    monkeypatch.setenv("SHEAFACCORD_MODEL_CAP", "17")
    assert model_cap_from_env() == 17
    monkeypatch.setenv("SHEAFACCORD_MODEL_CAP", "0")
    with pytest.raises(ValueError):
        model_cap_from_env()


literal = st.tuples(st.integers(0, 3), st.booleans())
clause = st.lists(literal, min_size=1, max_size=2, unique_by=lambda x: x[0])


@given(st.lists(clause, min_size=1, max_size=4))
@settings(max_examples=80)
def test_expand_models_matches_truth_table(raw):
    text = "; ".join(" | ".join(("" if pos else "not ") + f"r({a})" for a, pos in c) for c in raw)
    doc = parse(HEADER + f"theory T {{ {text} }}").theories[0]
    expected = truth_table_models(doc.clauses)
    if not expected:
        with pytest.raises(UnsatisfiableTheory):
            expand_models(doc)
        return
    got = {m.literals for m in expand_models(doc)}
    assert got == expected


# boxes


def test_screening_boxes():
    c = parse_files([CORPORA / "screening.sheaf"])
    assert [str(b) for b in boxes_of(c, "Ta")["s"]] == ["s([50,74], m^bx, an, T)"]
    assert [str(b) for b in boxes_of(c, "Tb")["s"]] == ["s([50,74], m, bi, T)"]
    tc = {str(b) for m in range(2) for b in boxes_of(c, "Tc", model=m)["s"]}
    assert tc == {"s([50,54], m, an, T)", "s([55,74], m, bi, T)", "s([55,74], m, an, T)"}


def test_incompatible_atoms_stay_separate():
    c = parse(HEADER + "theory T { p([0,3], x); p([5,8], x); p([2,6], x) }")
    got = [str(b) for b in boxes_of(c, "T")["p"]]
    assert got == ["p([2,3], x, T)", "p([5,6], x, T)"]


def test_negative_atoms_tagged_false():
    c = parse(HEADER + "theory T { not r([2,4]) }")
    (box,) = boxes_of(c, "T")["r"]
    assert box.truth == TRUTH3.element("F")
    (pbox,) = boxes_of(c, "T", mode="permissive")["r"]
    assert pbox.truth == TRUTH4.element("F")


def test_mixed_units_are_canonicalized():
    c = parse_files([CORPORA / "exercise.sheaf"])
    parse("theory Both { exercise(Weekly:[100,400]); exercise(Daily:[30,]) }", c)
    assert [str(b) for b in boxes_of(c, "Both")["exercise"]] == ["exercise([210,400], T)"]


@given(st.lists(st.tuples(st.integers(0, 10), st.integers(0, 10)), min_size=1, max_size=4))
@settings(max_examples=60)
def test_combine_boxes_idempotent(pairs):
    atoms = "; ".join(f"r([{min(a, b)},{max(a, b)}])" for a, b in pairs)
    c = parse(HEADER + f"theory T {{ {atoms} }}")
    boxes = boxes_of(c, "T")["r"]
    again = "; ".join(f"r({b.generator[0]})" for b in boxes)
    c2 = parse(HEADER + f"theory T {{ {again} }}")
    assert boxes_of(c2, "T")["r"] == boxes
    # no box sits below another
    assert set(maximal_boxes(boxes)) == set(boxes)
