"""Substitution and alpha-normalization."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

from . import formulas as F
from .formulas import ATTITUDES, Formula, free_variables
from .sorts import Signature
from .terms import (
    FunctionApplication,
    Term,
    Variable,
    plus,
    numeral_value,
    term_variables,
)


class SortViolation(Exception):
    """A binding maps a variable to a term of an incompatible sort."""


@dataclass(frozen=True)
class Substitution:
    """Sort-preserving variable bindings.  Identity bindings are dropped
    so that composition normalization keeps application idempotent."""

    bindings: Mapping[Variable, Term] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {v: t for v, t in self.bindings.items() if t != v}
        object.__setattr__(self, "bindings", cleaned)

    def __bool__(self) -> bool:
        return bool(self.bindings)

    def get(self, v: Variable) -> Term | None:
        return self.bindings.get(v)

    def domain(self) -> set[Variable]:
        return set(self.bindings)

    def check_sorts(self, sig: Signature) -> None:
        from .terms import term_sort

        for v, t in self.bindings.items():
            if not sig.subsort(term_sort(t, sig), v.sort):
                raise SortViolation(
                    f"cannot bind {v.name}:{v.sort} to a {term_sort(t, sig)} term"
                )

    def apply_term(self, t: Term) -> Term:
        if isinstance(t, Variable):
            return self.bindings.get(t, t)
        if isinstance(t, FunctionApplication):
            args = tuple(self.apply_term(a) for a in t.arguments)
            if t.symbol == "+" and numeral_value(args[1]) is not None:
                return plus(args[0], numeral_value(args[1]))
            return FunctionApplication(t.symbol, args)
        return t


def compose(s1: Substitution, s2: Substitution) -> Substitution:
    """Applying the result equals applying s1 then s2."""
    merged = {v: s2.apply_term(t) for v, t in s1.bindings.items()}
    for v, t in s2.bindings.items():
        if v not in s1.bindings:
            merged[v] = t
    return Substitution(merged)


def _used_names(f: Formula, s: Substitution) -> set[str]:
    names = {v.name for v in free_variables(f)}
    for t in s.bindings.values():
        names |= {v.name for v in term_variables(t)}
    names |= {v.name for v in s.bindings}
    return names


def _fresh(base: str, used: set[str]) -> str:
    i = 1
    while f"{base}_{i}" in used:
        i += 1
    return f"{base}_{i}"


def substitute(f: Formula, s: Substitution) -> Formula:
    """Capture-avoiding simultaneous substitution."""
    if not s:
        return f
    if isinstance(f, F.Atom):
        return F.Atom(s.apply_term(f.term))
    if isinstance(f, F.Equals):
        return F.Equals(s.apply_term(f.left), s.apply_term(f.right))
    if isinstance(f, F.Not):
        return F.Not(substitute(f.body, s))
    if isinstance(f, (F.And, F.Or)):
        return type(f)(tuple(substitute(i, s) for i in f.items))
    if isinstance(f, (F.Implies, F.Iff)):
        return type(f)(substitute(f.lhs, s), substitute(f.rhs, s))
    if isinstance(f, (F.ForAll, F.Exists)):
        inner = Substitution({v: t for v, t in s.bindings.items() if v != f.var})
        if not inner:
            return f
        var = f.var
        body = f.body
        range_vars = set()
        for v in free_variables(f.body) - {f.var}:
            t = inner.get(v)
            if t is not None:
                range_vars |= term_variables(t)
        if var in range_vars:
            new = Variable(_fresh(var.name, _used_names(f.body, inner)), var.sort)
            body = substitute(body, Substitution({var: new}))
            var = new
        return type(f)(var, substitute(body, inner))
    if isinstance(f, ATTITUDES):
        return type(f)(s.apply_term(f.agent), s.apply_term(f.time), substitute(f.body, s))
    if isinstance(f, F.Common):
        return F.Common(s.apply_term(f.time), substitute(f.body, s))
    if isinstance(f, F.Says):
        return F.Says(s.apply_term(f.speaker), s.apply_term(f.time), substitute(f.body, s))
    if isinstance(f, F.SaysTo):
        return F.SaysTo(
            s.apply_term(f.speaker),
            s.apply_term(f.addressee),
            s.apply_term(f.time),
            substitute(f.body, s),
        )
    raise TypeError(f"not a formula: {f!r}")


def alpha_normalize(f: Formula) -> Formula:
    """Canonical bound-variable renaming: binders become _b1, _b2, ... in
    traversal order, skipping any name free in the input.  Alpha-equivalent
    formulae produce structurally equal results; the map is idempotent."""
    avoid = {v.name for v in free_variables(f)}
    counter = [0]

    def next_name() -> str:
        while True:
            counter[0] += 1
            name = f"_b{counter[0]}"
            if name not in avoid:
                return name

    def walk(g: Formula, env: dict[Variable, Variable]) -> Formula:
        if isinstance(g, F.Atom):
            return F.Atom(_rename_term(g.term, env))
        if isinstance(g, F.Equals):
            return F.Equals(_rename_term(g.left, env), _rename_term(g.right, env))
        if isinstance(g, F.Not):
            return F.Not(walk(g.body, env))
        if isinstance(g, (F.And, F.Or)):
            return type(g)(tuple(walk(i, env) for i in g.items))
        if isinstance(g, (F.Implies, F.Iff)):
            return type(g)(walk(g.lhs, env), walk(g.rhs, env))
        if isinstance(g, (F.ForAll, F.Exists)):
            new = Variable(next_name(), g.var.sort)
            return type(g)(new, walk(g.body, {**env, g.var: new}))
        if isinstance(g, ATTITUDES):
            return type(g)(
                _rename_term(g.agent, env), _rename_term(g.time, env), walk(g.body, env)
            )
        if isinstance(g, F.Common):
            return F.Common(_rename_term(g.time, env), walk(g.body, env))
        if isinstance(g, F.Says):
            return F.Says(
                _rename_term(g.speaker, env), _rename_term(g.time, env), walk(g.body, env)
            )
        if isinstance(g, F.SaysTo):
            return F.SaysTo(
                _rename_term(g.speaker, env),
                _rename_term(g.addressee, env),
                _rename_term(g.time, env),
                walk(g.body, env),
            )
        raise TypeError(f"not a formula: {g!r}")

    return walk(f, {})


def _rename_term(t: Term, env: dict[Variable, Variable]) -> Term:
    if isinstance(t, Variable):
        return env.get(t, t)
    if isinstance(t, FunctionApplication):
        return FunctionApplication(
            t.symbol, tuple(_rename_term(a, env) for a in t.arguments)
        )
    return t


def alpha_equivalent(f: Formula, g: Formula) -> bool:
    return alpha_normalize(f) == alpha_normalize(g)


@lru_cache(maxsize=262_144)
def canonical(f: Formula) -> str:
    """Canonical rendering: alpha-normal form, rendered.  Used as the key
    wherever formula identity up to renaming matters."""
    from .formulas import render

    return render(alpha_normalize(f))
