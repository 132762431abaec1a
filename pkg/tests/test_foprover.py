"""First-order core: soundness, the equality demonstration, unification,
and derivation replay."""

import random
from itertools import product

import pytest

from mindroom import parse_formula
from mindroom.foprover import (
    Budget,
    EXHAUSTED,
    ModalInputError,
    NOT_PROVED,
    PROVED,
    prove_fo,
    unify,
)
from mindroom.replay import ReplayError, replay
from mindroom.sorts import FunctionDecl, default_signature
from mindroom.terms import Constant, FunctionApplication, Variable


@pytest.fixture(scope="module")
def moe_sig():
    return (
        default_signature()
        .with_functions(
            {
                "Manager": FunctionDecl("Manager", (("Object",), ("Agent",)), "Boolean"),
                "mostResponsible": FunctionDecl(
                    "mostResponsible", (("Object",),), "Agent"
                ),
                "Kp": FunctionDecl("Kp", (("Agent",), ("Boolean",)), "Boolean"),
            }
        )
        .with_constants({"team": "Object", "Moe": "Agent", "r": "Agent"})
    )


def test_identity(sig):
    f = parse_formula("(P c1)", sig)
    r = prove_fo([f], f, sig=sig)
    assert r.status == PROVED
    assert replay(r.derivation, [f], f, sig)


def test_manager_inference_via_equality(moe_sig):
    premises = [
        parse_formula("(Manager team (mostResponsible team))", moe_sig),
        parse_formula("(= Moe (mostResponsible team))", moe_sig),
    ]
    goal = parse_formula("(Manager team Moe)", moe_sig)
    r = prove_fo(premises, goal, sig=moe_sig)
    assert r.status == PROVED
    assert replay(r.derivation, premises, goal, moe_sig)


def test_extensional_knowledge_predicate_collapses(moe_sig):
    """With knowledge as an ordinary predicate, equality substitutes into
    its argument and the premises turn contradictory."""
    premises = [
        parse_formula("(Kp r (Manager team (mostResponsible team)))", moe_sig),
        parse_formula("(not (Kp r (Manager team Moe)))", moe_sig),
        parse_formula("(= Moe (mostResponsible team))", moe_sig),
    ]
    derived = prove_fo(
        premises, parse_formula("(Kp r (Manager team Moe))", moe_sig), sig=moe_sig
    )
    bottom = prove_fo(premises, parse_formula("false", moe_sig), sig=moe_sig)
    assert derived.status == PROVED
    assert bottom.status == PROVED


def test_universal_instantiation_and_its_limit(sig):
    premises = [
        parse_formula("(forall (?x Object) (implies (P ?x) (Q ?x)))", sig),
        parse_formula("(P c1)", sig),
    ]
    yes = prove_fo(premises, parse_formula("(Q c1)", sig), sig=sig)
    no = prove_fo(premises, parse_formula("(Q c2)", sig), sig=sig)
    assert yes.status == PROVED
    assert no.status == NOT_PROVED
    # Herbrand check over the two-constant universe: Q(c2) has a countermodel
    from oracles import ground_models

    atoms = ["P(c1)", "P(c2)", "Q(c1)", "Q(c2)"]
    models = ground_models(
        atoms,
        [
            lambda m: ("P(c1)" not in m) or ("Q(c1)" in m),
            lambda m: ("P(c2)" not in m) or ("Q(c2)" in m),
            lambda m: "P(c1)" in m,
        ],
    )
    assert all("Q(c1)" in m for m in models)
    assert any("Q(c2)" not in m for m in models)


def test_modal_input_is_a_contract_violation(sig):
    modal = parse_formula("(believes a 1 (P c1))", sig)
    with pytest.raises(ModalInputError):
        prove_fo([modal], parse_formula("(P c1)", sig), sig=sig)


def test_budget_exhaustion_reported(sig):
    # a growing recursion: P(x) -> P(fo(x)) never saturates within depth
    premises = [
        parse_formula("(forall (?x Object) (implies (P ?x) (P (fo ?x))))", sig),
        parse_formula("(P c1)", sig),
    ]
    r = prove_fo(premises, parse_formula("(Q c1)", sig),
                 budget=Budget(max_time_ms=400, max_inferences=500, max_term_depth=6),
                 sig=sig)
    assert r.status == EXHAUSTED


def test_existential_goal(sig):
    premises = [parse_formula("(P c2)", sig)]
    goal = parse_formula("(exists (?x Object) (P ?x))", sig)
    r = prove_fo(premises, goal, sig=sig)
    assert r.status == PROVED


def test_monotonicity(sig):
    premises = [parse_formula("(P c1)", sig)]
    goal = parse_formula("(P c1)", sig)
    assert prove_fo(premises, goal, sig=sig).status == PROVED
    more = premises + [
        parse_formula("(Q c2)", sig),
        parse_formula("(forall (?x Object) (implies (Q ?x) (P ?x)))", sig),
    ]
    assert prove_fo(more, goal, sig=sig).status == PROVED


# -- unification -----------------------------------------------------------


def test_unify_function_to_constant(sig):
    x = Variable("x", "Object")
    t1 = FunctionApplication("fo", (x,))
    t2 = FunctionApplication("fo", (Constant("c1", "Object"),))
    s = unify(t1, t2, sig)
    assert s is not None and s.apply_term(t1) == t2


def test_unify_occurs_check(sig):
    x = Variable("x", "Object")
    assert unify(x, FunctionApplication("fo", (x,)), sig) is None


def test_unify_sorts_narrow_to_surface(sig):
    b1 = Constant("B", "Block")
    y = Variable("y", "Surface")
    x = Variable("x", "Block")
    t1 = FunctionApplication("on", (b1, y))
    t2 = FunctionApplication("on", (x, Constant("ctable", "Surface")))
    s = unify(t1, t2, sig)
    assert s is not None
    assert s.apply_term(t1) == s.apply_term(t2)
    assert s.get(y) == Constant("ctable", "Surface")
    assert s.get(x) == b1


def test_unify_rejects_sort_clash(sig):
    x = Variable("x", "Agent")
    assert unify(x, Constant("A", "Block"), sig) is None


def test_unifier_generality_by_enumeration(sig):
    """Any unifier over a small ground term space factors through the
    returned one: every ground common instance of the pair is an instance
    of the mgu's instance."""
    from mindroom.transform import Substitution

    x = Variable("x", "Block")
    y = Variable("y", "Surface")
    t1 = FunctionApplication("on", (x, y))
    t2 = FunctionApplication("on", (Constant("A", "Block"), y))
    mgu = unify(t1, t2, sig)
    assert mgu is not None
    unified = mgu.apply_term(t1)
    space = [Constant(n, s) for n, s in
             [("A", "Block"), ("B", "Block"), ("ctable", "Surface")]]
    found = 0
    for vx, vy in product(space, repeat=2):
        s = Substitution({x: vx, y: vy})
        if s.apply_term(t1) == s.apply_term(t2):
            found += 1
            # the common instance must match the mgu image
            ren = unify(unified, s.apply_term(t1), sig)
            assert ren is not None
    assert found > 0


# -- replay tampering --------------------------------------------------------


def test_tampered_derivation_is_rejected(sig):
    premises = [
        parse_formula("(forall (?x Object) (implies (P ?x) (Q ?x)))", sig),
        parse_formula("(P c1)", sig),
    ]
    goal = parse_formula("(Q c1)", sig)
    r = prove_fo(premises, goal, sig=sig)
    assert r.status == PROVED
    assert replay(r.derivation, premises, goal, sig)
    # swap in a premise that was never given
    bad = parse_formula("(Q c2)", sig)
    tampered = list(r.derivation)
    for i, s in enumerate(tampered):
        if s.rule == "premise":
            from mindroom.foprover import Step

            tampered[i] = Step("premise", (), formula=bad)
            break
    with pytest.raises(ReplayError):
        replay(tampered, premises, goal, sig)
