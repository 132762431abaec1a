"""Reference implementations for substitution and alpha-equivalence,
independent of the production code paths: substitution renames every
binder to a fresh name before a naive replacement, and alpha-equivalence
tries every binder renaming over a fixed pool."""

from __future__ import annotations

from itertools import count, product

from mindroom import formulas as F
from mindroom.formulas import Formula
from mindroom.terms import FunctionApplication, Term, Variable


def _rename_term(t: Term, env) -> Term:
    if isinstance(t, Variable):
        return env.get(t, t)
    if isinstance(t, FunctionApplication):
        return FunctionApplication(t.symbol, tuple(_rename_term(a, env) for a in t.arguments))
    return t


def _map_formula(f: Formula, env, fresh) -> Formula:
    if isinstance(f, F.Atom):
        return F.Atom(_rename_term(f.term, env))
    if isinstance(f, F.Equals):
        return F.Equals(_rename_term(f.left, env), _rename_term(f.right, env))
    if isinstance(f, F.Not):
        return F.Not(_map_formula(f.body, env, fresh))
    if isinstance(f, (F.And, F.Or)):
        return type(f)(tuple(_map_formula(i, env, fresh) for i in f.items))
    if isinstance(f, (F.Implies, F.Iff)):
        return type(f)(_map_formula(f.lhs, env, fresh), _map_formula(f.rhs, env, fresh))
    if isinstance(f, (F.ForAll, F.Exists)):
        new = Variable(next(fresh), f.var.sort)
        env2 = dict(env)
        env2[f.var] = new
        return type(f)(new, _map_formula(f.body, env2, fresh))
    if isinstance(f, F.ATTITUDES):
        return type(f)(
            _rename_term(f.agent, env), _rename_term(f.time, env),
            _map_formula(f.body, env, fresh),
        )
    if isinstance(f, F.Common):
        return F.Common(_rename_term(f.time, env), _map_formula(f.body, env, fresh))
    if isinstance(f, F.Says):
        return F.Says(
            _rename_term(f.speaker, env), _rename_term(f.time, env),
            _map_formula(f.body, env, fresh),
        )
    if isinstance(f, F.SaysTo):
        return F.SaysTo(
            _rename_term(f.speaker, env), _rename_term(f.addressee, env),
            _rename_term(f.time, env), _map_formula(f.body, env, fresh),
        )
    raise TypeError(f)


def reference_substitute(f: Formula, s) -> Formula:
    """Rename every binder to a globally fresh name, then replace free
    variables naively: capture is impossible by construction."""
    fresh = (f"_fresh{i}" for i in count())
    renamed = _map_formula(f, {}, fresh)
    return _map_formula(renamed, dict(s.bindings), (f"_post{i}" for i in count()))


def _binder_count(f: Formula) -> int:
    n = 0
    for g in F.subformulas(f):
        if isinstance(g, (F.ForAll, F.Exists)):
            n += 1
    return n


def _rebind(f: Formula, names: tuple[str, ...]):
    """Every way of renaming the binders of f onto the name pool
    (with repetition allowed only when shadowing keeps it well-formed)."""
    k = _binder_count(f)
    if k == 0:
        yield f
        return
    for combo in product(names, repeat=k):
        it = iter(combo)

        def walk(g, env):
            if isinstance(g, (F.ForAll, F.Exists)):
                new = Variable(next(it), g.var.sort)
                env2 = dict(env)
                env2[g.var] = new
                return type(g)(new, walk(g.body, env2))
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
            if isinstance(g, F.ATTITUDES):
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
                    _rename_term(g.speaker, env), _rename_term(g.addressee, env),
                    _rename_term(g.time, env), walk(g.body, env),
                )
            return g

        yield walk(f, {})


def exhaustive_alpha(f: Formula, g: Formula, names=("va", "vb", "vc")) -> bool:
    """Alpha-equivalence by trying every renaming onto a shared pool.
    Sound and complete for formulas with at most len(names) binders and
    no name collisions between pool and free variables."""
    if _binder_count(f) > len(names) or _binder_count(g) > len(names):
        raise ValueError("oracle limited to three binders")
    fs = {F.render(x) for x in _rebind(f, names)}
    gs = {F.render(x) for x in _rebind(g, names)}
    return bool(fs & gs)
