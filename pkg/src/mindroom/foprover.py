"""Sound first-order prover with equality.

Refutation by saturation: premises plus negated goal go through a
deterministic CNF pipeline, then a given-clause loop applies binary
resolution, factoring, equality resolution, and paramodulation (from
unit equalities).  Every derived clause records its rule and parents,
so a Proved result carries a derivation that replays without search
(see replay.py).

Predicates whose name starts with "$" are opaque: their arguments are
never rewritten by paramodulation.  The modal layer uses such atoms for
frozen modal subformulae, which is what keeps equality substitution out
of modal contexts.
"""

from __future__ import annotations

import hashlib
import heapq
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Optional

from . import formulas as F
from .formulas import Formula, is_extensional
from .sorts import FunctionDecl, Signature
from .terms import (
    Constant,
    FunctionApplication,
    Term,
    Variable,
    render_term,
    term_depth,
    term_sort,
)
from .transform import Substitution, substitute

PROVED = "Proved"
NOT_PROVED = "NotProvedSaturated"
EXHAUSTED = "BudgetExhausted"

_MAX_CLAUSE_LITERALS = 12


class ModalInputError(ValueError):
    """A modal operator reached the first-order core: contract violation."""


@dataclass(frozen=True)
class Budget:
    max_time_ms: int = 10_000
    max_inferences: int = 200_000
    max_term_depth: int = 12

    def __post_init__(self):
        if min(self.max_time_ms, self.max_inferences, self.max_term_depth) <= 0:
            raise ValueError("budget limits must be positive")


class BudgetClock:
    """Wall-clock deadline plus inference counter; one clock can serve
    many nested prover calls."""

    def __init__(self, budget: Budget, deadline: float | None = None):
        self.budget = budget
        self.deadline = deadline or (time.monotonic() + budget.max_time_ms / 1000.0)
        self.inferences = 0

    def slice(self, max_time_ms: int, max_inferences: int) -> "BudgetClock":
        sub = Budget(
            max_time_ms=max_time_ms,
            max_inferences=max_inferences,
            max_term_depth=self.budget.max_term_depth,
        )
        clock = BudgetClock(sub)
        clock.deadline = min(clock.deadline, self.deadline)
        return clock

    def absorb(self, other: "BudgetClock") -> None:
        self.inferences += other.inferences

    def charge(self, n: int = 1) -> bool:
        self.inferences += n
        return self.ok()

    def ok(self) -> bool:
        return (
            self.inferences <= self.budget.max_inferences
            and time.monotonic() < self.deadline
        )


@dataclass(frozen=True)
class Literal:
    positive: bool
    pred: str
    args: tuple[Term, ...]

    def negate(self) -> "Literal":
        return Literal(not self.positive, self.pred, self.args)

    def render(self) -> str:
        body = (
            self.pred
            if not self.args
            else "(" + self.pred + " " + " ".join(render_term(a) for a in self.args) + ")"
        )
        return body if self.positive else f"(not {body})"


@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, ...]

    @property
    def empty(self) -> bool:
        return not self.literals

    def render(self) -> str:
        if self.empty:
            return "<empty>"
        return " | ".join(l.render() for l in self.literals)


@dataclass
class Step:
    """One derivation line: rule name, indices of premise steps, and the
    concluded formula or clause.  `sub` nests an embedded derivation."""

    rule: str
    premises: tuple[int, ...]
    formula: Optional[Formula] = None
    clause: Optional[Clause] = None
    sub: Optional[list] = None

    def render(self) -> str:
        concl = (
            F.render(self.formula) if self.formula is not None else self.clause.render()
        )
        src = ",".join(str(p) for p in self.premises)
        return f"{self.rule}({src}): {concl}" if src else f"{self.rule}: {concl}"


@dataclass
class ProofResult:
    status: str
    derivation: Optional[list[Step]] = None
    reason: str = ""

    @property
    def proved(self) -> bool:
        return self.status == PROVED


def render_derivation(steps: list[Step], indent: int = 0) -> str:
    lines = []
    pad = "  " * indent
    for i, s in enumerate(steps):
        lines.append(f"{pad}{i}. {s.render()}")
        if s.sub:
            lines.append(render_derivation(s.sub, indent + 1))
    return "\n".join(lines)


# -- unification -------------------------------------------------------


def _walk(t: Term, bind: dict[Variable, Term]) -> Term:
    while isinstance(t, Variable) and t in bind:
        t = bind[t]
    return t


def _occurs(v: Variable, t: Term, bind: dict[Variable, Term]) -> bool:
    t = _walk(t, bind)
    if t == v:
        return True
    if isinstance(t, FunctionApplication):
        return any(_occurs(v, a, bind) for a in t.arguments)
    return False


def _resolve_term(t: Term, bind: dict[Variable, Term]) -> Term:
    t = _walk(t, bind)
    if isinstance(t, FunctionApplication):
        return FunctionApplication(
            t.symbol, tuple(_resolve_term(a, bind) for a in t.arguments)
        )
    return t


def _bind_var(v: Variable, t: Term, bind, sig: Signature) -> bool:
    if _occurs(v, t, bind):
        return False
    if isinstance(t, Variable):
        if sig.subsort(t.sort, v.sort):
            bind[v] = t
            return True
        if sig.subsort(v.sort, t.sort):
            bind[t] = v
            return True
        return False
    if not sig.subsort(term_sort(_resolve_term(t, bind), sig), v.sort):
        return False
    bind[v] = t
    return True


def _unify_into(t1: Term, t2: Term, bind, sig: Signature) -> bool:
    t1, t2 = _walk(t1, bind), _walk(t2, bind)
    if t1 == t2:
        return True
    if isinstance(t1, Variable):
        return _bind_var(t1, t2, bind, sig)
    if isinstance(t2, Variable):
        return _bind_var(t2, t1, bind, sig)
    if (
        isinstance(t1, FunctionApplication)
        and isinstance(t2, FunctionApplication)
        and t1.symbol == t2.symbol
        and len(t1.arguments) == len(t2.arguments)
    ):
        return all(
            _unify_into(a, b, bind, sig) for a, b in zip(t1.arguments, t2.arguments)
        )
    return False


def unify(t1: Term, t2: Term, sig: Signature | None = None) -> Substitution | None:
    """Most general sort-respecting unifier, or None.  Occurs check on."""
    from .sorts import default_signature

    sig = sig or default_signature()
    bind: dict[Variable, Term] = {}
    if not _unify_into(t1, t2, bind, sig):
        return None
    return Substitution({v: _resolve_term(t, bind) for v, t in bind.items()})


def _unify_tuples(a, b, sig) -> Substitution | None:
    if len(a) != len(b):
        return None
    bind: dict[Variable, Term] = {}
    for x, y in zip(a, b):
        if not _unify_into(x, y, bind, sig):
            return None
    return Substitution({v: _resolve_term(t, bind) for v, t in bind.items()})


# -- CNF ---------------------------------------------------------------


class _Cnf:
    """Deterministic CNF pipeline.  Skolem and renamed-binder symbols are
    derived from the formula's canonical rendering, so converting the same
    formula always yields the same clauses (replay relies on this)."""

    def __init__(self, sig: Signature):
        self.sig = sig
        self.extra_functions: dict[str, FunctionDecl] = {}
        self.extra_constants: dict[str, str] = {}

    def extended_signature(self) -> Signature:
        sig = self.sig
        if self.extra_functions:
            sig = sig.with_functions(self.extra_functions)
        if self.extra_constants:
            sig = sig.with_constants(self.extra_constants)
        return sig

    def clauses(self, f: Formula) -> list[Clause]:
        from .transform import canonical

        if not is_extensional(f):
            raise ModalInputError("modal operator in first-order input: " + F.render(f))
        tag = hashlib.blake2s(canonical(f).encode()).hexdigest()[:8]
        state = {"sk": 0, "q": 0, "tag": tag}
        g = self._nnf(f, True)
        g = self._standardize(g, state)
        g = self._skolemize(g, (), state)
        matrix = self._strip(g)
        out = []
        for lits in self._distribute(matrix):
            cl = _simplify_literals(lits)
            if cl is not None:
                out.append(cl)
        return out

    def _nnf(self, f: Formula, pos: bool) -> Formula:
        if isinstance(f, F.Not):
            return self._nnf(f.body, not pos)
        if isinstance(f, F.Implies):
            return self._nnf(F.Or((F.Not(f.lhs), f.rhs)), pos)
        if isinstance(f, F.Iff):
            both = F.And((F.Implies(f.lhs, f.rhs), F.Implies(f.rhs, f.lhs)))
            return self._nnf(both, pos)
        if isinstance(f, F.And):
            items = tuple(self._nnf(i, pos) for i in f.items)
            return F.And(items) if pos else F.Or(items)
        if isinstance(f, F.Or):
            items = tuple(self._nnf(i, pos) for i in f.items)
            return F.Or(items) if pos else F.And(items)
        if isinstance(f, F.ForAll):
            node = F.ForAll if pos else F.Exists
            return node(f.var, self._nnf(f.body, pos))
        if isinstance(f, F.Exists):
            node = F.Exists if pos else F.ForAll
            return node(f.var, self._nnf(f.body, pos))
        if isinstance(f, (F.Atom, F.Equals)):
            return f if pos else F.Not(f)
        raise ModalInputError("modal operator in first-order input")

    def _standardize(self, f: Formula, state) -> Formula:
        if isinstance(f, (F.ForAll, F.Exists)):
            state["q"] += 1
            new = Variable(f"_q{state['q']}_{state['tag']}", f.var.sort)
            body = substitute(f.body, Substitution({f.var: new}))
            return type(f)(new, self._standardize(body, state))
        if isinstance(f, F.Not):
            return F.Not(self._standardize(f.body, state))
        if isinstance(f, (F.And, F.Or)):
            return type(f)(tuple(self._standardize(i, state) for i in f.items))
        return f

    def _skolemize(self, f: Formula, uvars: tuple[Variable, ...], state) -> Formula:
        if isinstance(f, F.ForAll):
            return F.ForAll(f.var, self._skolemize(f.body, uvars + (f.var,), state))
        if isinstance(f, F.Exists):
            state["sk"] += 1
            name = f"_sk{state['sk']}_{state['tag']}"
            if uvars:
                self.extra_functions[name] = FunctionDecl(
                    name, tuple((v.sort,) for v in uvars), f.var.sort
                )
                witness: Term = FunctionApplication(name, uvars)
            else:
                self.extra_constants[name] = f.var.sort
                witness = Constant(name, f.var.sort)
            body = substitute(f.body, Substitution({f.var: witness}))
            return self._skolemize(body, uvars, state)
        if isinstance(f, F.Not):
            return F.Not(self._skolemize(f.body, uvars, state))
        if isinstance(f, (F.And, F.Or)):
            return type(f)(tuple(self._skolemize(i, uvars, state) for i in f.items))
        return f

    def _strip(self, f: Formula) -> Formula:
        if isinstance(f, F.ForAll):
            return self._strip(f.body)
        if isinstance(f, (F.And, F.Or)):
            return type(f)(tuple(self._strip(i) for i in f.items))
        if isinstance(f, F.Not):
            return F.Not(self._strip(f.body))
        return f

    def _distribute(self, f: Formula) -> list[tuple[Literal, ...]]:
        if isinstance(f, F.And):
            out = []
            for i in f.items:
                out.extend(self._distribute(i))
            return out
        if isinstance(f, F.Or):
            acc: list[tuple[Literal, ...]] = [()]
            for i in f.items:
                branch = self._distribute(i)
                acc = [a + b for a in acc for b in branch]
            return acc
        return [(_to_literal(f),)]


def _to_literal(f: Formula) -> Literal:
    pos = True
    if isinstance(f, F.Not):
        pos, f = False, f.body
    if isinstance(f, F.Equals):
        return Literal(pos, "=", (f.left, f.right))
    if isinstance(f, F.Atom):
        t = f.term
        if isinstance(t, Constant):
            return Literal(pos, t.name, ())
        if isinstance(t, FunctionApplication):
            return Literal(pos, t.symbol, t.arguments)
        raise ModalInputError(
            f"uninstantiated propositional placeholder ?{t.name} in first-order input"
        )
    raise ModalInputError("non-literal after NNF: " + F.render(f))


def _simplify_literals(lits: tuple[Literal, ...]) -> Clause | None:
    """Drop true/false literals and duplicates; None means the clause is
    valid and can be discarded."""
    kept = []
    seen = set()
    for l in lits:
        if l.pred == "true":
            if l.positive:
                return None
            continue
        if l.pred == "false":
            if l.positive:
                continue
            return None
        if l.pred == "=" and l.positive and l.args[0] == l.args[1]:
            return None
        key = (l.positive, l.pred, l.args)
        if key in seen:
            continue
        seen.add(key)
        kept.append(l)
    for l in kept:
        if (not l.positive, l.pred, l.args) in seen:
            return None
    return Clause(tuple(kept))


# -- clause utilities --------------------------------------------------


def _clause_vars(c: Clause) -> list[Variable]:
    out: list[Variable] = []
    seen = set()
    for l in c.literals:
        for a in l.args:
            for v in _term_vars_ordered(a):
                if v not in seen:
                    seen.add(v)
                    out.append(v)
    return out


def _term_vars_ordered(t: Term) -> Iterator[Variable]:
    if isinstance(t, Variable):
        yield t
    elif isinstance(t, FunctionApplication):
        for a in t.arguments:
            yield from _term_vars_ordered(a)


def _rename_apart(c: Clause, suffix: str) -> Clause:
    ren = Substitution({v: Variable(v.name + suffix, v.sort) for v in _clause_vars(c)})
    lits = tuple(
        Literal(l.positive, l.pred, tuple(ren.apply_term(a) for a in l.args))
        for l in c.literals
    )
    return Clause(lits)


@lru_cache(maxsize=262_144)
def canonical_clause(c: Clause) -> str:
    """Renaming-invariant key used for deduplication."""
    order = sorted(range(len(c.literals)), key=lambda i: _literal_skeleton(c.literals[i]))
    ren: dict[Variable, Variable] = {}
    parts = []
    for i in order:
        l = c.literals[i]
        args = tuple(_canon_term(a, ren) for a in l.args)
        parts.append(Literal(l.positive, l.pred, args).render())
    return " | ".join(parts)


def _literal_skeleton(l: Literal) -> tuple:
    def skel(t: Term) -> str:
        if isinstance(t, Variable):
            return "?"
        if isinstance(t, Constant):
            return t.name
        return "(" + t.symbol + " " + " ".join(skel(a) for a in t.arguments) + ")"

    return (l.pred, not l.positive, tuple(skel(a) for a in l.args))


def _canon_term(t: Term, ren: dict[Variable, Variable]) -> Term:
    if isinstance(t, Variable):
        if t not in ren:
            ren[t] = Variable(f"_c{len(ren)}", t.sort)
        return ren[t]
    if isinstance(t, FunctionApplication):
        return FunctionApplication(t.symbol, tuple(_canon_term(a, ren) for a in t.arguments))
    return t


def _clause_depth(c: Clause) -> int:
    return max((term_depth(a) for l in c.literals for a in l.args), default=1)


def _subsumes(small: Clause, big: Clause, sig: Signature) -> bool:
    """True when some substitution maps every literal of `small` onto a
    literal of `big` (one-way matching)."""

    def match_term(p: Term, t: Term, bind) -> bool:
        if isinstance(p, Variable):
            if p in bind:
                return bind[p] == t
            if not sig.subsort(term_sort(t, sig), p.sort):
                return False
            bind[p] = t
            return True
        if isinstance(p, Constant):
            return p == t
        return (
            isinstance(t, FunctionApplication)
            and t.symbol == p.symbol
            and len(t.arguments) == len(p.arguments)
            and all(match_term(a, b, bind) for a, b in zip(p.arguments, t.arguments))
        )

    def go(i: int, bind) -> bool:
        if i == len(small.literals):
            return True
        l = small.literals[i]
        for t in big.literals:
            if t.positive != l.positive or t.pred != l.pred:
                continue
            trial = dict(bind)
            if all(match_term(a, b, trial) for a, b in zip(l.args, t.args)):
                if go(i + 1, trial):
                    return True
        return False

    return len(small.literals) <= len(big.literals) and go(0, {})


def _positions(t: Term, path=()) -> Iterator[tuple[tuple[int, ...], Term]]:
    yield path, t
    if isinstance(t, FunctionApplication):
        for i, a in enumerate(t.arguments):
            yield from _positions(a, path + (i,))


def _replace(t: Term, path: tuple[int, ...], new: Term) -> Term:
    if not path:
        return new
    assert isinstance(t, FunctionApplication)
    args = list(t.arguments)
    args[path[0]] = _replace(args[path[0]], path[1:], new)
    return FunctionApplication(t.symbol, tuple(args))


# -- saturation --------------------------------------------------------


@dataclass
class _Entry:
    clause: Clause
    rule: str
    parents: tuple[int, ...]
    key: str
    size: int
    depth: int
    ground: bool
    litkeys: frozenset


class Prover:
    def __init__(self, sig: Signature, clock: BudgetClock):
        self.sig = sig
        self.clock = clock
        self.table: list[_Entry] = []
        self.keys: dict[str, int] = {}
        self.discarded = False

    def add(self, clause: Clause, rule: str, parents: tuple[int, ...]) -> int | None:
        if (
            _clause_depth(clause) > self.clock.budget.max_term_depth
            or len(clause.literals) > _MAX_CLAUSE_LITERALS
        ):
            self.discarded = True
            return None
        key = canonical_clause(clause)
        if key in self.keys:
            return None
        idx = len(self.table)
        self.keys[key] = idx
        self.table.append(
            _Entry(
                clause,
                rule,
                parents,
                key,
                len(clause.literals),
                _clause_depth(clause),
                not _clause_vars(clause),
                frozenset((l.positive, l.pred, l.args) for l in clause.literals),
            )
        )
        return idx

    def _subsumed(self, entry: _Entry, processed: list[int]) -> bool:
        for p in processed:
            pe = self.table[p]
            if pe.size > entry.size:
                continue
            if pe.ground:
                if pe.litkeys <= entry.litkeys:
                    return True
            elif _subsumes(pe.clause, entry.clause, self.sig):
                return True
        return False

    def _order(self, idx: int) -> tuple:
        e = self.table[idx]
        return (e.size, e.depth, e.key, idx)

    @staticmethod
    def _is_unit_eq(c: Clause) -> bool:
        return (
            len(c.literals) == 1
            and c.literals[0].positive
            and c.literals[0].pred == "="
        )

    def saturate(self, initial: list[int]) -> int | None:
        heap = [self._order(i) for i in initial]
        heapq.heapify(heap)
        queued = set(initial)
        processed: list[int] = []
        pred_index: dict[tuple[str, bool], list[int]] = {}
        eq_units: list[int] = []

        while heap:
            if not self.clock.ok():
                return None
            *_, given = heapq.heappop(heap)
            queued.discard(given)
            entry = self.table[given]
            if entry.clause.empty:
                return given
            if self._subsumed(entry, processed):
                continue
            processed.append(given)
            for l in entry.clause.literals:
                pred_index.setdefault((l.pred, l.positive), []).append(given)
            if self._is_unit_eq(entry.clause):
                eq_units.append(given)

            partners: set[int] = set()
            for l in entry.clause.literals:
                partners.update(pred_index.get((l.pred, not l.positive), ()))
            new: list[int] = []
            new.extend(self._factors(given))
            new.extend(self._equality_resolvents(given))
            for p in sorted(partners):
                new.extend(self._resolvents(given, p))
            if self._is_unit_eq(entry.clause):
                for p in processed:
                    if p != given:
                        new.extend(self._paramodulants(given, p))
            for eq in eq_units:
                if eq != given:
                    new.extend(self._paramodulants(eq, given))
            for idx in new:
                if self.table[idx].clause.empty:
                    return idx
                if idx not in queued:
                    queued.add(idx)
                    heapq.heappush(heap, self._order(idx))
        return None

    def _emit(self, lits, rule, parents, subst) -> Iterator[int]:
        if not self.clock.charge():
            return
        cl = _simplify_literals(
            tuple(
                Literal(l.positive, l.pred, tuple(subst.apply_term(a) for a in l.args))
                for l in lits
            )
        )
        if cl is None:
            return
        idx = self.add(cl, rule, parents)
        if idx is not None:
            yield idx

    def _factors(self, ci: int):
        c = self.table[ci].clause
        for i in range(len(c.literals)):
            for j in range(i + 1, len(c.literals)):
                a, b = c.literals[i], c.literals[j]
                if a.positive != b.positive or a.pred != b.pred:
                    continue
                s = _unify_tuples(a.args, b.args, self.sig)
                if s is None:
                    continue
                yield from self._emit(
                    c.literals[:j] + c.literals[j + 1 :], "factor", (ci,), s
                )

    def _resolvents(self, ci: int, pi: int):
        c1 = self.table[ci].clause
        c2_raw = self.table[pi].clause
        needed = {(l.pred, not l.positive) for l in c1.literals}
        if not any((l.pred, l.positive) in needed for l in c2_raw.literals):
            return
        c2 = _rename_apart(c2_raw, "_r")
        for i, l1 in enumerate(c1.literals):
            for j, l2 in enumerate(c2.literals):
                if l1.positive == l2.positive or l1.pred != l2.pred:
                    continue
                s = _unify_tuples(l1.args, l2.args, self.sig)
                if s is None:
                    continue
                lits = (
                    c1.literals[:i]
                    + c1.literals[i + 1 :]
                    + c2.literals[:j]
                    + c2.literals[j + 1 :]
                )
                yield from self._emit(lits, "resolve", (ci, pi), s)

    def _equality_resolvents(self, ci: int):
        c = self.table[ci].clause
        for i, l in enumerate(c.literals):
            if l.positive or l.pred != "=":
                continue
            s = _unify_tuples((l.args[0],), (l.args[1],), self.sig)
            if s is None:
                continue
            yield from self._emit(c.literals[:i] + c.literals[i + 1 :], "eqres", (ci,), s)

    def _paramodulants(self, fi: int, ii: int):
        """Paramodulate unit equalities of clause `fi` into clause `ii`."""
        cfrom = self.table[fi].clause
        if fi == ii:
            return
        if len(cfrom.literals) != 1:
            return
        eq = cfrom.literals[0]
        if not eq.positive or eq.pred != "=":
            return
        cinto = _rename_apart(self.table[ii].clause, "_p")
        for s_term, t_term in ((eq.args[0], eq.args[1]), (eq.args[1], eq.args[0])):
            if isinstance(s_term, Variable):
                continue
            for j, lit in enumerate(cinto.literals):
                if lit.pred.startswith("$"):
                    continue  # opaque: frozen modal atom
                for ai, arg in enumerate(lit.args):
                    for path, sub in _positions(arg):
                        if isinstance(sub, Variable):
                            continue
                        s = _unify_tuples((s_term,), (sub,), self.sig)
                        if s is None:
                            continue
                        new_arg = _replace(arg, path, t_term)
                        new_args = lit.args[:ai] + (new_arg,) + lit.args[ai + 1 :]
                        lits = (
                            cinto.literals[:j]
                            + (Literal(lit.positive, lit.pred, new_args),)
                            + cinto.literals[j + 1 :]
                        )
                        yield from self._emit(lits, "paramod", (fi, ii), s)


# -- public entry points -------------------------------------------------


@dataclass
class Consequences:
    """Result of a goal-free saturation sweep: the derived positive ground
    units, whether the sweep ran to true saturation, and whether the
    premise set turned out inconsistent."""

    units: list[tuple[Literal, list[Step]]]
    complete: bool
    inconsistent: bool


def saturate_consequences(
    premises: Iterable[Formula],
    budget: Budget | None = None,
    sig: Signature | None = None,
    clock: BudgetClock | None = None,
    clause_cache: dict | None = None,
) -> Consequences:
    """Saturate the premises (no goal) and report every derived positive
    ground unit clause, each with a replayable derivation.  Used by the
    modal layer to surface first-order consequences wholesale."""
    from .sorts import default_signature
    from .transform import canonical

    sig = sig or default_signature()
    budget = budget or Budget()
    clock = clock or BudgetClock(budget)

    ordered = sorted({canonical(p): p for p in premises}.items())
    extra_fns: dict[str, FunctionDecl] = {}
    extra_consts: dict[str, str] = {}

    def clausify(f: Formula, key: str):
        if clause_cache is not None and key in clause_cache:
            return clause_cache[key]
        out = formula_clauses(f, sig)
        if clause_cache is not None:
            clause_cache[key] = out
        return out

    prover_parts = []
    for idx, (key, p) in enumerate(ordered):
        clauses, fns, consts = clausify(p, key)
        extra_fns.update(fns)
        extra_consts.update(consts)
        prover_parts.append((clauses, idx))

    esig = sig
    if extra_fns:
        esig = esig.with_functions(extra_fns)
    if extra_consts:
        esig = esig.with_constants(extra_consts)

    prover = Prover(esig, clock)
    initial: list[int] = []
    step_of_clause: dict[int, tuple[str, int]] = {}
    input_count = 0
    for clauses, src in prover_parts:
        for cl in clauses:
            ci = prover.add(cl, "cnf", ())
            if ci is not None:
                step_of_clause[ci] = ("premise", src)
                initial.append(ci)
                input_count += 1
    empty_idx = prover.saturate(initial)

    premise_formulas = [p for _, p in ordered]
    out: list[tuple[Literal, list[Step]]] = []
    for i in range(input_count, len(prover.table)):
        entry = prover.table[i]
        if entry.size != 1 or not entry.ground:
            continue
        lit = entry.clause.literals[0]
        if not lit.positive:
            continue
        steps = _derivation_to(prover, i, premise_formulas, step_of_clause)
        out.append((lit, steps))
    complete = empty_idx is None and clock.ok() and not prover.discarded
    return Consequences(out, complete, empty_idx is not None)


def _derivation_to(
    prover: Prover,
    target: int,
    premises: list[Formula],
    step_of_clause: dict[int, tuple[str, int]],
) -> list[Step]:
    needed: list[int] = []
    seen = set()
    stack = [target]
    while stack:
        i = stack.pop()
        if i in seen:
            continue
        seen.add(i)
        needed.append(i)
        stack.extend(prover.table[i].parents)
    needed.sort()
    steps: list[Step] = []
    premise_steps: dict[int, int] = {}
    clause_steps: dict[int, int] = {}
    for i in needed:
        entry = prover.table[i]
        if i in step_of_clause:
            kind, src = step_of_clause[i]
            if src not in premise_steps:
                steps.append(Step("premise", (), formula=premises[src]))
                premise_steps[src] = len(steps) - 1
            steps.append(Step("cnf", (premise_steps[src],), clause=entry.clause))
        else:
            refs = tuple(clause_steps[p] for p in entry.parents)
            steps.append(Step(entry.rule, refs, clause=entry.clause))
        clause_steps[i] = len(steps) - 1
    return steps


def formula_clauses(
    f: Formula, sig: Signature
) -> tuple[list[Clause], dict[str, FunctionDecl], dict[str, str]]:
    """Deterministic clause form of one formula plus the skolem symbols it
    introduces.  Cacheable: same formula, same output."""
    cnf = _Cnf(sig)
    clauses = cnf.clauses(f)
    return clauses, cnf.extra_functions, cnf.extra_constants


def prove_fo(
    premises: Iterable[Formula],
    goal: Formula,
    budget: Budget | None = None,
    sig: Signature | None = None,
    clock: BudgetClock | None = None,
    clause_cache: dict | None = None,
) -> ProofResult:
    """Sound first-order entailment check with equality.

    Inputs must be extensional; a modal operator raises ModalInputError.
    Deterministic for fixed inputs and budget."""
    from .sorts import default_signature
    from .transform import canonical

    sig = sig or default_signature()
    budget = budget or Budget()
    clock = clock or BudgetClock(budget)

    ordered = sorted({canonical(p): p for p in premises}.items())
    extra_fns: dict[str, FunctionDecl] = {}
    extra_consts: dict[str, str] = {}

    def clausify(f: Formula, key: str):
        if clause_cache is not None and key in clause_cache:
            return clause_cache[key]
        out = formula_clauses(f, sig)
        if clause_cache is not None:
            clause_cache[key] = out
        return out

    parts: list[tuple[list[Clause], int]] = []
    for idx, (key, p) in enumerate(ordered):
        clauses, fns, consts = clausify(p, key)
        extra_fns.update(fns)
        extra_consts.update(consts)
        parts.append((clauses, idx))
    negated = F.Not(goal)
    goal_clauses, fns, consts = clausify(negated, canonical(negated))
    extra_fns.update(fns)
    extra_consts.update(consts)

    esig = sig
    if extra_fns:
        esig = esig.with_functions(extra_fns)
    if extra_consts:
        esig = esig.with_constants(extra_consts)

    prover = Prover(esig, clock)
    initial: list[int] = []
    step_of_clause: dict[int, tuple[str, int]] = {}
    for clauses, src in parts:
        for cl in clauses:
            ci = prover.add(cl, "cnf", ())
            if ci is not None:
                step_of_clause[ci] = ("premise", src)
                initial.append(ci)
    for cl in goal_clauses:
        ci = prover.add(cl, "cnf", ())
        if ci is not None:
            step_of_clause[ci] = ("negated-goal", -1)
            initial.append(ci)

    empty_idx = next((i for i in initial if prover.table[i].clause.empty), None)
    if empty_idx is None:
        empty_idx = prover.saturate(initial)
    if empty_idx is not None:
        premise_formulas = [p for _, p in ordered]
        return ProofResult(
            PROVED,
            _build_derivation(prover, empty_idx, premise_formulas, goal, step_of_clause),
        )
    if not clock.ok():
        return ProofResult(EXHAUSTED, reason="saturation budget exhausted")
    if prover.discarded:
        return ProofResult(
            EXHAUSTED, reason="size limits discarded clauses before saturation"
        )
    return ProofResult(NOT_PROVED, reason="saturated without deriving the goal")


def _build_derivation(
    prover: Prover,
    empty_idx: int,
    premises: list[Formula],
    goal: Formula,
    step_of_clause: dict[int, tuple[str, int]],
) -> list[Step]:
    needed: list[int] = []
    seen = set()
    stack = [empty_idx]
    while stack:
        i = stack.pop()
        if i in seen:
            continue
        seen.add(i)
        needed.append(i)
        stack.extend(prover.table[i].parents)
    needed.sort()

    steps: list[Step] = []
    premise_steps: dict[int, int] = {}
    clause_steps: dict[int, int] = {}
    for i in needed:
        entry = prover.table[i]
        if i in step_of_clause:
            kind, src = step_of_clause[i]
            if kind == "premise":
                if src not in premise_steps:
                    steps.append(Step("premise", (), formula=premises[src]))
                    premise_steps[src] = len(steps) - 1
                steps.append(Step("cnf", (premise_steps[src],), clause=entry.clause))
            else:
                steps.append(Step("negated-goal", (), formula=F.Not(goal)))
                steps.append(Step("cnf", (len(steps) - 1,), clause=entry.clause))
            clause_steps[i] = len(steps) - 1
        else:
            refs = tuple(clause_steps[p] for p in entry.parents)
            steps.append(Step(entry.rule, refs, clause=entry.clause))
            clause_steps[i] = len(steps) - 1
    steps.append(Step("goal-by-refutation", (clause_steps[empty_idx],), formula=goal))
    return steps
