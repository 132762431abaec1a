"""Discrete event calculus: simulation, the frame property, and agreement
between the simulator and the emitted axioms under first-order proof."""

import random

import pytest

from mindroom.blocks import Move, WorldState, as_ec_domain, world_signature
from mindroom.eventcalc import (
    DomainRules,
    EffectRule,
    EventCalcError,
    emit_axioms,
    simulate,
)
from mindroom.foprover import Budget, NOT_PROVED, PROVED, prove_fo
from mindroom.sexpr import parse_formula
from mindroom.terms import Constant, FunctionApplication, render_term

from oracles import naive_ec


@pytest.fixture(scope="module")
def blocks_sig():
    return world_signature(["A", "B", "C", "D"]).with_constants(
        {"h1": "Agent", "h2": "Agent"}
    )


def fluent(name, *args):
    return FunctionApplication(name, args)


def blk(n):
    return Constant(n, "Block")


TABLE = Constant("ctable", "Surface")


def test_pure_inertia(blocks_sig):
    initial = WorldState.make({"A": "ctable"})
    dom = as_ec_domain(initial)
    tl = simulate(dom, {}, 5, blocks_sig)
    on_a = fluent("on", blk("A"), TABLE)
    for t in range(6):
        assert on_a in tl.holds_at(t)


def test_stack_effects_land_on_the_next_tick(blocks_sig):
    initial = WorldState.all_on_table(["A", "B", "C"])
    dom = as_ec_domain(initial)
    ev = Move("stack", "A", "B").as_event("h1")
    tl = simulate(dom, {1: [ev]}, 4, blocks_sig)
    on_ab = fluent("on", blk("A"), blk("B"))
    clear_b = fluent("clear", blk("B"))
    on_a_table = fluent("on", blk("A"), TABLE)
    assert on_ab not in tl.holds_at(1)
    assert on_ab in tl.holds_at(2)
    assert clear_b not in tl.holds_at(2)
    assert on_a_table not in tl.holds_at(2)


SECT, = ["sect7"]


def sect7_script():
    return {
        2: [Move("stack", "A", "B").as_event("h1")],
        5: [Move("unstack", "A", "B").as_event("h1")],
        7: [Move("stack", "A", "C").as_event("h1")],
    }


def test_nine_step_script_all_on_table_at_query_point(blocks_sig):
    """After the table move and before the new goal, every block rests on
    the table; cross-checked with the literal-inertia interpreter."""
    initial = WorldState.all_on_table(["A", "B", "C"])
    dom = as_ec_domain(initial)
    tl = simulate(dom, sect7_script(), 10, blocks_sig)
    state6 = tl.holds_at(6)
    for b in "ABC":
        assert fluent("on", blk(b), TABLE) in state6

    def effects(ev, state):
        kind = ev.arguments[1].symbol
        x, y = ev.arguments[1].arguments
        if kind == "stack":
            return (
                {render_term(fluent("on", x, y))},
                {render_term(fluent("on", x, TABLE)), render_term(fluent("clear", y))},
            )
        return (
            {render_term(fluent("on", x, TABLE)), render_term(fluent("clear", y))},
            {render_term(fluent("on", x, y))},
        )

    init = {render_term(f) for f in initial.fluents()}
    states = naive_ec(init, effects, sect7_script(), 10)
    for t in range(11):
        assert {render_term(f) for f in tl.holds_at(t)} == states[t]


def test_frame_property_pointwise(blocks_sig):
    """f holds at t+1 iff initiated at t, or held at t and not terminated."""
    rng = random.Random(17)
    initial = WorldState.all_on_table(["A", "B", "C"])
    dom = as_ec_domain(initial)
    from mindroom.blocks import apply_move, legal_actions
    from mindroom.eventcalc import _effects

    state = initial
    script = {}
    for t in range(8):
        moves = legal_actions(state)
        mv = rng.choice(moves)
        script[t] = [mv.as_event("h1")]
        state = apply_move(state, mv)
    tl = simulate(dom, script, 8, blocks_sig)
    for t in range(8):
        cur, nxt = tl.holds_at(t), tl.holds_at(t + 1)
        started, stopped = set(), set()
        for e in script.get(t, []):
            started |= _effects(dom.initiates, e, cur, blocks_sig)
            stopped |= _effects(dom.terminates, e, cur, blocks_sig)
        for f in cur | nxt | started:
            should = (f in started) or (f in cur and f not in stopped)
            assert (f in nxt) == should


def test_event_beyond_horizon_rejected(blocks_sig):
    initial = WorldState.all_on_table(["A"])
    dom = as_ec_domain(initial)
    with pytest.raises(EventCalcError, match="horizon"):
        simulate(dom, {9: [Move("stack", "A", "A").as_event("h1")]}, 3, blocks_sig)


def test_causality_adding_a_late_event_preserves_the_past(blocks_sig):
    initial = WorldState.all_on_table(["A", "B", "C"])
    dom = as_ec_domain(initial)
    base = {2: [Move("stack", "A", "B").as_event("h1")]}
    more = dict(base)
    more[5] = [Move("unstack", "A", "B").as_event("h1")]
    t1 = simulate(dom, base, 8, blocks_sig)
    t2 = simulate(dom, more, 8, blocks_sig)
    for t in range(6):  # up to and including the new event's tick
        assert t1.holds_at(t) == t2.holds_at(t)


def test_conflicting_effects_initiation_wins_and_warns(blocks_sig):
    a = Constant("h1", "Agent")
    ping = FunctionApplication("enters", (a,))
    f = fluent("inRoom", a)
    dom = DomainRules(
        initiates=(EffectRule(ping, f),),
        terminates=(EffectRule(ping, f),),
        initially=(),
    )
    warnings = []
    tl = simulate(dom, {0: [ping]}, 2, blocks_sig,
                  on_conflict=lambda t, fl: warnings.append((t, fl)))
    assert f in tl.holds_at(1)
    assert warnings == [(0, f)]


def test_empty_domain_axioms_bridge_initials(blocks_sig):
    initial = WorldState.make({"A": "ctable"})
    dom = as_ec_domain(initial)
    ax = emit_axioms(dom, {}, 0, blocks_sig)
    got = {render_formula(f) for f in ax}
    assert "(initially (on A ctable))" in got
    assert "(implies (initially (on A ctable)) (holds (on A ctable) 0))" in got


def render_formula(f):
    from mindroom.formulas import render

    return render(f)


def test_axioms_agree_with_simulation_exhaustively(blocks_sig):
    """Every (fluent, time) pair on the nine-step trace: provable iff
    simulated true."""
    initial = WorldState.all_on_table(["A", "B", "C"])
    dom = as_ec_domain(initial)
    script = sect7_script()
    horizon = 10
    tl = simulate(dom, script, horizon, blocks_sig)
    ax = emit_axioms(dom, script, horizon, blocks_sig)
    budget = Budget(max_time_ms=10_000)

    all_fluents = set()
    for t in range(horizon + 1):
        all_fluents |= tl.holds_at(t)
    # spot the full grid on a reduced time range to keep the suite quick
    for t in (0, 2, 3, 6, 8, 10):
        for f in sorted(all_fluents, key=render_term):
            goal = parse_formula(
                f"(holds {render_term(f)} {t})", blocks_sig
            )
            res = prove_fo(ax, goal, budget, sig=blocks_sig)
            want = PROVED if f in tl.holds_at(t) else NOT_PROVED
            assert res.status == want, (render_term(f), t, res.status)


def test_clipped_exactly_on_terminating_windows(blocks_sig):
    initial = WorldState.all_on_table(["A", "B", "C"])
    dom = as_ec_domain(initial)
    script = sect7_script()
    ax = emit_axioms(dom, script, 10, blocks_sig)
    budget = Budget(max_time_ms=10_000)
    # on(A,B) is terminated exactly at t=5 by the unstack
    for t1, t2, want in [(2, 6, PROVED), (5, 6, PROVED), (0, 4, NOT_PROVED), (6, 9, NOT_PROVED)]:
        goal = parse_formula(f"(clipped {t1} (on A B) {t2})", blocks_sig)
        assert prove_fo(ax, goal, budget, sig=blocks_sig).status == want
