"""Seeded random well-sorted formula and term generators for the tests."""

from __future__ import annotations

import random

from mindroom import formulas as F
from mindroom.sorts import (
    AGENT,
    BLOCK,
    BOOLEAN,
    EVENT,
    FLUENT,
    MOMENT,
    SURFACE,
    Signature,
)
from mindroom.terms import Constant, FunctionApplication, Term, Variable, numeral


def constants_of(sig: Signature, sort: str) -> list[Constant]:
    return [
        Constant(n, s)
        for n, s in sorted(sig.constants.items())
        if sig.subsort(s, sort) and n not in ("true", "false")
    ]


def random_term(rng: random.Random, sig: Signature, sort: str, env=(), depth=2) -> Term:
    """A ground-or-env term of the requested sort."""
    scoped = [v for v in env if sig.subsort(v.sort, sort)]
    if scoped and rng.random() < 0.4:
        return rng.choice(scoped)
    if sort == MOMENT:
        return numeral(rng.randrange(0, 9))
    if sort == FLUENT and depth > 0:
        kind = rng.choice(["on", "clear", "inRoom"])
        if kind == "on":
            return FunctionApplication(
                "on",
                (
                    random_term(rng, sig, BLOCK, env, depth - 1),
                    random_term(rng, sig, SURFACE, env, depth - 1),
                ),
            )
        if kind == "clear":
            return FunctionApplication(
                "clear", (random_term(rng, sig, BLOCK, env, depth - 1),)
            )
        return FunctionApplication(
            "inRoom", (random_term(rng, sig, AGENT, env, depth - 1),)
        )
    if sort == EVENT and depth > 0:
        which = rng.choice(["enters", "leaves", "action"])
        if which == "action":
            move = rng.choice(["stack", "unstack"])
            return FunctionApplication(
                "action",
                (
                    random_term(rng, sig, AGENT, env, depth - 1),
                    FunctionApplication(
                        move,
                        (
                            random_term(rng, sig, BLOCK, env, 0),
                            random_term(rng, sig, BLOCK, env, 0),
                        ),
                    ),
                ),
            )
        return FunctionApplication(
            which, (random_term(rng, sig, AGENT, env, depth - 1),)
        )
    pool = constants_of(sig, sort)
    if not pool:
        raise ValueError(f"no constants of sort {sort} in the test signature")
    return rng.choice(pool)


def random_atom(rng: random.Random, sig: Signature, env=()) -> F.Formula:
    kind = rng.choice(["holds", "happens", "On", "Clear", "prop"])
    if kind == "holds":
        return F.Atom(
            FunctionApplication(
                "holds",
                (random_term(rng, sig, FLUENT, env), random_term(rng, sig, MOMENT, env)),
            )
        )
    if kind == "happens":
        return F.Atom(
            FunctionApplication(
                "happens",
                (random_term(rng, sig, EVENT, env), random_term(rng, sig, MOMENT, env)),
            )
        )
    if kind == "On":
        return F.Atom(
            FunctionApplication(
                "On",
                (random_term(rng, sig, BLOCK, env), random_term(rng, sig, SURFACE, env)),
            )
        )
    if kind == "Clear":
        return F.Atom(
            FunctionApplication("Clear", (random_term(rng, sig, BLOCK, env),))
        )
    pool = constants_of(sig, BOOLEAN)
    return F.Atom(rng.choice(pool)) if pool else F.TRUE


def random_formula(
    rng: random.Random, sig: Signature, depth: int = 3, env: tuple = ()
) -> F.Formula:
    if depth <= 0:
        return random_atom(rng, sig, env)
    roll = rng.random()
    if roll < 0.30:
        return random_atom(rng, sig, env)
    if roll < 0.38:
        return F.Not(random_formula(rng, sig, depth - 1, env))
    if roll < 0.50:
        items = tuple(
            random_formula(rng, sig, depth - 1, env) for _ in range(rng.choice([2, 3]))
        )
        return (F.And if rng.random() < 0.5 else F.Or)(items)
    if roll < 0.58:
        return F.Implies(
            random_formula(rng, sig, depth - 1, env),
            random_formula(rng, sig, depth - 1, env),
        )
    if roll < 0.66:
        var = Variable(f"x{rng.randrange(3)}", rng.choice([AGENT, BLOCK, MOMENT]))
        node = F.ForAll if rng.random() < 0.7 else F.Exists
        return node(var, random_formula(rng, sig, depth - 1, env + (var,)))
    agent = random_term(rng, sig, AGENT, env)
    time = random_term(rng, sig, MOMENT, env)
    body = random_formula(rng, sig, depth - 1, env)
    node = rng.choice([F.Believes, F.Knows, F.Perceives])
    if rng.random() < 0.15:
        return F.Common(time, body)
    return node(agent, time, body)
