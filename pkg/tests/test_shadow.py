"""Modal layer: shadowing, schema application, the schema suite, and the
opacity guarantees."""

import random

import pytest

from mindroom import formulas as F
from mindroom import parse_formula, render
from mindroom.foprover import Budget, NOT_PROVED, PROVED
from mindroom.replay import replay
from mindroom.shadow import (
    SchemaSet,
    ShadowMap,
    apply_schemata,
    derivation_rules,
    prove,
    shadow,
)
from mindroom.sorts import FunctionDecl, default_signature
from mindroom.terms import Constant
from mindroom.transform import canonical

from gen import random_formula


# -- shadowing ---------------------------------------------------------------


def test_closed_modal_subformula_becomes_nullary_atom(sig):
    smap = ShadowMap()
    f = parse_formula("(knows a 1 (P c1))", sig)
    out = shadow(f, smap)
    assert isinstance(out, F.Atom)
    assert isinstance(out.term, Constant)
    assert out.term.name.startswith("$s")


def test_extensional_formula_is_a_fixpoint(sig):
    smap = ShadowMap()
    f = parse_formula("(P c1)", sig)
    assert shadow(f, smap) == f


def test_alpha_equivalent_bodies_share_one_atom(sig):
    smap = ShadowMap()
    f = parse_formula(
        "(believes a 1 (forall (?x Object) (P ?x)))", sig
    )
    g = parse_formula(
        "(believes a 1 (forall (?y Object) (P ?y)))", sig
    )
    pair = parse_formula("(and {} {})".format(render(f), render(g)), sig)
    out = shadow(pair, smap)
    assert isinstance(out, F.And)
    assert out.items[0] == out.items[1]


def test_alpha_pairs_share_atoms_over_generated_formulae(sig):
    rng = random.Random(5)
    smap = ShadowMap()
    from mindroom.transform import alpha_normalize

    for _ in range(200):
        f = random_formula(rng, sig, depth=2)
        if not F.is_modal(f) or F.free_variables(f):
            continue
        g = alpha_normalize(f)
        assert shadow(f, smap) == shadow(g, smap)


def test_open_modal_subformula_parameterized(sig):
    smap = ShadowMap()
    f = parse_formula(
        "(forall (?x Object) (implies (P ?x) (believes a 1 (Q ?x))))", sig
    )
    out = shadow(f, smap)
    inner = out.body.rhs
    assert isinstance(inner, F.Atom)
    assert not isinstance(inner.term, Constant)
    assert inner.term.symbol.startswith("$s")


# -- forward schemata --------------------------------------------------------


def test_perception_to_knowledge_chain(sig):
    base = [parse_formula("(perceives a 1 pc)", sig)]
    out = apply_schemata(base, SchemaSet(), sig)
    assert parse_formula("(knows a 1 pc)", sig) in out


def test_knowledge_to_belief_chain(sig):
    base = [parse_formula("(knows a 1 pc)", sig)]
    out = apply_schemata(base, SchemaSet(), sig)
    assert parse_formula("(believes a 1 pc)", sig) in out
    assert parse_formula("pc", sig) in out  # factivity


def test_common_knowledge_unrolls_exactly_to_depth(sig):
    """Two agents, depth two: the four nested knowledge forms, nothing
    else, when only the knowledge-instantiation rules are on."""
    base = [
        parse_formula("(common 1 pc)", sig),
        parse_formula("(= a a)", sig),
        parse_formula("(= b b)", sig),
    ]
    schemas = SchemaSet(rules=frozenset({"I_3", "C_INST"}), modal_depth_bound=2)
    out = apply_schemata(base, schemas, sig)
    got = {canonical(f) for f in out}
    want = {
        canonical(parse_formula(t, sig))
        for t in (
            "(knows a 1 pc)",
            "(knows b 1 pc)",
            "(knows a 1 (knows b 1 pc))",
            "(knows b 1 (knows a 1 pc))",
        )
    }
    assert got == want


# -- the schema suite (premise/conclusion per the calculus) ------------------


def _proved(premises, goal, sig, **kw):
    r = prove(premises, goal, **kw)
    assert r.status == PROVED, r.reason
    assert replay(r.derivation, premises, goal, sig)
    return r


def test_schema_I_K(sig):
    # knowledge is closed under consequence at later times
    premises = [parse_formula("(knows a 1 (and pc qc))", sig)]
    _proved(premises, parse_formula("(knows a 2 pc)", sig), sig)


def test_schema_I_B(sig):
    premises = [parse_formula("(believes a 1 (and pc qc))", sig)]
    _proved(premises, parse_formula("(believes a 2 pc)", sig), sig)


def test_schema_I_1(sig):
    goal = parse_formula(
        "(common 1 (implies (perceives a 1 pc) (knows a 1 pc)))", sig
    )
    _proved([], goal, sig)


def test_schema_I_2(sig):
    goal = parse_formula(
        "(common 1 (implies (knows a 1 pc) (believes a 1 pc)))", sig
    )
    _proved([], goal, sig)


def test_schema_I_3(sig):
    premises = [parse_formula("(common 1 pc)", sig)]
    _proved(premises, parse_formula("(knows a 2 (knows b 3 pc))", sig), sig)


def test_schema_I_4(sig):
    premises = [parse_formula("(knows a 1 pc)", sig)]
    _proved(premises, parse_formula("pc", sig), sig)


def test_schema_D_PK(sig):
    premises = [parse_formula("(perceives a 1 pc)", sig)]
    _proved(premises, parse_formula("(knows a 1 pc)", sig), sig)


def test_schema_D_KB(sig):
    premises = [parse_formula("(knows a 1 pc)", sig)]
    _proved(premises, parse_formula("(believes a 1 pc)", sig), sig)


def test_schema_D_CB(sig):
    premises = [parse_formula("(common 1 pc)", sig)]
    _proved(premises, parse_formula("(believes a 1 pc)", sig), sig)


# -- negative space ----------------------------------------------------------


def test_belief_does_not_yield_knowledge(sig):
    r = prove([parse_formula("(believes a 1 pc)", sig)],
              parse_formula("(knows a 1 pc)", sig))
    assert r.status == NOT_PROVED


def test_no_time_travel(sig):
    r = prove([parse_formula("(believes a 5 pc)", sig)],
              parse_formula("(believes a 2 pc)", sig))
    assert r.status == NOT_PROVED


def test_schema_ablation_disables_the_rule(sig):
    premises = [parse_formula("(perceives a 1 pc)", sig)]
    goal = parse_formula("(knows a 1 pc)", sig)
    r = prove(premises, goal, schemas=SchemaSet().without("D_PK"))
    assert r.status == NOT_PROVED


# -- referential opacity -----------------------------------------------------


@pytest.fixture(scope="module")
def opaque_sig():
    return (
        default_signature()
        .with_functions(
            {
                "Manager": FunctionDecl("Manager", (("Object",), ("Agent",)), "Boolean"),
                "mostResponsible": FunctionDecl(
                    "mostResponsible", (("Object",),), "Agent"
                ),
            }
        )
        .with_constants({"team": "Object", "Moe": "Agent", "r": "Agent"})
    )


def test_opacity_regression(opaque_sig):
    """The three premises with a modal knowledge operator must yield
    neither the substituted knowledge claim nor a contradiction."""
    P = lambda s: parse_formula(s, opaque_sig)
    premises = [
        P("(knows r 1 (Manager team (mostResponsible team)))"),
        P("(not (knows r 1 (Manager team Moe)))"),
        P("(= Moe (mostResponsible team))"),
    ]
    budget = Budget(max_time_ms=10_000)
    assert prove(premises, P("(knows r 1 (Manager team Moe))"),
                 budget=budget, sig=opaque_sig).status == NOT_PROVED
    assert prove(premises, P("false"),
                 budget=budget, sig=opaque_sig).status == NOT_PROVED


def test_proving_invariant_under_alpha_renaming(sig):
    f1 = parse_formula("(believes a 1 (forall (?x Object) (P ?x)))", sig)
    f2 = parse_formula("(believes a 1 (forall (?z Object) (P ?z)))", sig)
    goal1 = parse_formula("(believes a 2 (forall (?y Object) (P ?y)))", sig)
    r1 = prove([f1], goal1)
    r2 = prove([f2], goal1)
    assert r1.status == r2.status == PROVED


def test_depth_monotonicity(sig):
    premises = [parse_formula("(common 1 pc)", sig)]
    goal = parse_formula("(believes a 1 (believes b 2 pc))", sig)
    shallow = prove(premises, goal, schemas=SchemaSet(modal_depth_bound=2))
    deeper = prove(premises, goal, schemas=SchemaSet(modal_depth_bound=3))
    assert shallow.status == PROVED
    assert deeper.status == PROVED


def test_derivation_rule_inventory(sig):
    premises = [parse_formula("(perceives a 1 pc)", sig)]
    r = prove(premises, parse_formula("(believes a 1 pc)", sig))
    used = derivation_rules(r.derivation)
    assert "D_PK" in used and "D_KB" in used
