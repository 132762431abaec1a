"""Sorts, sort checking, substitution, and alpha-normalization."""

import random

import pytest

from mindroom import (
    Substitution,
    alpha_equivalent,
    alpha_normalize,
    compose,
    parse_formula,
    render,
    sort_check,
    substitute,
)
from mindroom import formulas as F
from mindroom.sorts import SignatureError, default_signature
from mindroom.terms import Constant, FunctionApplication, Variable

from gen import random_formula


def test_default_sort_forest_edges():
    sig = default_signature()
    assert sig.subsort("Action", "Event")
    assert sig.subsort("Self", "Agent")
    assert sig.subsort("Surface", "Object")
    assert sig.subsort("Block", "Surface")
    assert sig.subsort("Block", "Object")
    assert not sig.subsort("Agent", "Object")


def test_signature_rejects_cycles():
    from mindroom.sorts import Signature, Sort

    bad = Signature(sorts={"A": Sort("A", "B"), "B": Sort("B", "A")})
    with pytest.raises(SignatureError, match="cycle"):
        bad.validate()


def test_constant_redeclaration_rejected():
    sig = default_signature()
    sig2 = sig.with_constants({"A": "Block"})
    with pytest.raises(SignatureError):
        sig2.with_constants({"A": "Agent"})


def test_event_calculus_symbols_have_declared_arities():
    sig = default_signature()
    assert sig.function("holds").arity == 2
    assert sig.function("clipped").arity == 3
    assert sig.function("initiates").arity == 3
    assert sig.function("action").result == "Action"
    assert sig.function("vicinity").result == "Fluent"
    # the vicinity argument accepts fluents, events, and agents
    assert set(sig.function("vicinity").args[1]) == {"Fluent", "Event", "Agent"}


def test_sort_check_accepts_blocks_fluent(sig):
    f = parse_formula("(holds (on A ctable) 0)", sig)
    assert sort_check(f, sig) == []


def test_sort_check_flags_argument_inversion(sig):
    bad = F.Atom(
        FunctionApplication(
            "on", (Constant("ctable", "Surface"), Constant("A", "Block"))
        )
    )
    violations = sort_check(F.Atom(FunctionApplication("holds", (bad.term, Constant("0", "Moment")))), sig)
    assert violations and "Block" in violations[0]


def test_desires_body_restricted_to_holds(sig):
    ok = parse_formula("(desires h1 1 (holds (clear A) 2))", sig)
    assert sort_check(ok, sig) == []
    bad = F.Desires(
        Constant("h1", "Agent"),
        Constant("1", "Moment"),
        parse_formula("(happens (enters h2) 1)", sig),
    )
    violations = sort_check(bad, sig)
    assert any("Desires body" in v for v in violations)


def test_substitute_single_binding(sig):
    f = parse_formula("(P ?x)", sig)
    x = Variable("x", "Object")
    out = substitute(f, Substitution({x: Constant("c1", "Object")}))
    assert render(out) == "(P c1)"


def test_substitute_respects_binders(sig):
    f = parse_formula("(forall (?x Object) (P ?x))", sig)
    x = Variable("x", "Object")
    out = substitute(f, Substitution({x: Constant("c1", "Object")}))
    assert alpha_equivalent(out, f)


def test_substitute_avoids_capture(sig):
    # substituting f(y) for x under a binder for y renames the binder
    f = parse_formula("(forall (?y Object) (R2 ?x ?y))", sig)
    x = Variable("x", "Object")
    y = Variable("y", "Object")
    out = substitute(f, Substitution({x: FunctionApplication("fo", (y,))}))
    assert isinstance(out, F.ForAll)
    assert out.var != y
    inner = out.body
    assert inner.term.arguments[0] == FunctionApplication("fo", (y,))
    assert inner.term.arguments[1] == out.var


def test_substitution_is_sort_preserving(sig):
    s = Substitution({Variable("x", "Block"): Constant("c1", "Object")})
    from mindroom.transform import SortViolation

    with pytest.raises(SortViolation):
        s.check_sorts(sig)


def test_composition_lemma_on_disjoint_substitutions(sig):
    """substitute(substitute(f, s1), s2) equals substitute(f, compose(s1, s2))
    for variable-disjoint substitutions, over generated formulas."""
    rng = random.Random(7)
    x = Variable("x0", "Agent")
    y = Variable("x1", "Block")
    s1 = Substitution({x: Constant("h1", "Agent")})
    s2 = Substitution({y: Constant("B", "Block")})
    for _ in range(300):
        f = random_formula(rng, sig)
        lhs = substitute(substitute(f, s1), s2)
        rhs = substitute(f, compose(s1, s2))
        assert lhs == rhs


def test_substitute_matches_reference_on_random_formulae(sig):
    """Checked against an independent rename-first substitution."""
    from oracles_subst import reference_substitute

    rng = random.Random(99)
    x = Variable("x0", "Block")
    s = Substitution({x: Constant("C", "Block")})
    checked = 0
    for _ in range(500):
        f = random_formula(rng, sig)
        got = substitute(f, s)
        want = reference_substitute(f, s)
        assert alpha_equivalent(got, want), render(f)
        checked += 1
    assert checked == 500


def test_alpha_normalize_idempotent(sig):
    rng = random.Random(3)
    for _ in range(300):
        f = random_formula(rng, sig)
        once = alpha_normalize(f)
        assert alpha_normalize(once) == once


def test_alpha_pair_identical(sig):
    f = parse_formula("(forall (?x Object) (P ?x))", sig)
    g = parse_formula("(forall (?y Object) (P ?y))", sig)
    assert alpha_normalize(f) == alpha_normalize(g)


def test_closed_atom_unchanged(sig):
    f = parse_formula("(holds (clear A) 0)", sig)
    assert alpha_normalize(f) == f


def test_alpha_equivalence_matches_exhaustive_renaming(sig):
    """Cross-checked with the rename-and-compare oracle on formulas with
    at most three binders."""
    from oracles_subst import exhaustive_alpha

    rng = random.Random(41)
    pairs = 0
    while pairs < 200:
        f = random_formula(rng, sig, depth=2)
        g = random_formula(rng, sig, depth=2)
        got = alpha_equivalent(f, g)
        want = exhaustive_alpha(f, g)
        assert got == want, (render(f), render(g))
        pairs += 1
    # and every formula is equivalent to a brute renaming of itself
    for _ in range(100):
        f = random_formula(rng, sig, depth=2)
        assert alpha_equivalent(f, f)


def test_sort_check_accepts_generator_output(sig):
    rng = random.Random(11)
    for _ in range(400):
        f = random_formula(rng, sig)
        assert sort_check(f, sig) == [], render(f)
