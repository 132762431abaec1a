"""Discrete event-calculus semantics.

Fluents evolve over integer time: an event at tick t takes effect at
t+1, and a fluent persists (inertia) unless some event terminates it.
Besides forward simulation, the module emits the ground completion of
the narrative as first-order axioms, so the prover derives exactly the
fluents the simulator reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import formulas as F
from .formulas import Formula
from .sortcheck import sort_check
from .sorts import EVENT, FLUENT, Signature, default_signature
from .terms import FunctionApplication, Term, Variable, is_ground, numeral, render_term
from .transform import Substitution, substitute


class EventCalcError(Exception):
    pass


@dataclass(frozen=True)
class EffectRule:
    """`event` pattern initiates/terminates `fluent` pattern; the optional
    guard is an extensional formula over the pre-state, with `(holds F)`
    reading F against the current tick."""

    event: Term
    fluent: Term
    guard: Formula | None = None


@dataclass(frozen=True)
class DomainRules:
    initiates: tuple[EffectRule, ...]
    terminates: tuple[EffectRule, ...]
    initially: tuple[Term, ...]

    def validate(self, sig: Signature) -> None:
        from .terms import check_term, term_sort

        for rule in self.initiates + self.terminates:
            for t, want in ((rule.event, EVENT), (rule.fluent, FLUENT)):
                check_term(t, sig)
                if not sig.subsort(term_sort(t, sig), want):
                    raise EventCalcError(
                        f"{render_term(t)} is not a {want} term"
                    )
        for f in self.initially:
            check_term(f, sig)


@dataclass(frozen=True)
class Timeline:
    horizon: int
    events: tuple[tuple[int, tuple[Term, ...]], ...]
    states: tuple[frozenset[Term], ...]

    def holds_at(self, t: int) -> frozenset[Term]:
        if not 0 <= t <= self.horizon:
            raise EventCalcError(f"time {t} outside horizon {self.horizon}")
        return self.states[t]

    def events_at(self, t: int) -> tuple[Term, ...]:
        for time, evs in self.events:
            if time == t:
                return evs
        return ()


def _match(pattern: Term, term: Term, sig: Signature) -> Substitution | None:
    """One-way matching of a ground term against an effect pattern."""
    bind: dict[Variable, Term] = {}

    def go(p: Term, t: Term) -> bool:
        if isinstance(p, Variable):
            from .terms import term_sort

            if p in bind:
                return bind[p] == t
            if not sig.subsort(term_sort(t, sig), p.sort):
                return False
            bind[p] = t
            return True
        if isinstance(p, FunctionApplication) and isinstance(t, FunctionApplication):
            return (
                p.symbol == t.symbol
                and len(p.arguments) == len(t.arguments)
                and all(go(a, b) for a, b in zip(p.arguments, t.arguments))
            )
        return p == t

    if go(pattern, term):
        return Substitution(bind)
    return None


def _guard_holds(guard: Formula | None, state: frozenset[Term], s: Substitution) -> bool:
    if guard is None:
        return True
    g = substitute(guard, s)

    def ev(f: Formula) -> bool:
        if isinstance(f, F.Atom):
            t = f.term
            if isinstance(t, FunctionApplication) and t.symbol == "holds":
                return t.arguments[0] in state
            if t == F.TRUE.term:
                return True
            if t == F.FALSE.term:
                return False
            raise EventCalcError("guards may only test (holds F): " + F.render(f))
        if isinstance(f, F.Not):
            return not ev(f.body)
        if isinstance(f, F.And):
            return all(ev(i) for i in f.items)
        if isinstance(f, F.Or):
            return any(ev(i) for i in f.items)
        if isinstance(f, F.Implies):
            return (not ev(f.lhs)) or ev(f.rhs)
        if isinstance(f, F.Iff):
            return ev(f.lhs) == ev(f.rhs)
        raise EventCalcError("guard is not extensional-propositional: " + F.render(f))

    return ev(g)


def _effects(
    rules: Iterable[EffectRule], event: Term, state: frozenset[Term], sig: Signature
) -> set[Term]:
    out: set[Term] = set()
    for rule in rules:
        s = _match(rule.event, event, sig)
        if s is None:
            continue
        if not _guard_holds(rule.guard, state, s):
            continue
        fluent = s.apply_term(rule.fluent)
        if not is_ground(fluent):
            raise EventCalcError(
                f"effect fluent {render_term(fluent)} not ground after matching"
            )
        out.add(fluent)
    return out


def simulate(
    rules: DomainRules,
    events: Mapping[int, Iterable[Term]],
    horizon: int,
    sig: Signature | None = None,
    on_conflict=None,
) -> Timeline:
    """Forward simulation.  Events at tick t act between t and t+1; when
    one tick both initiates and terminates the same fluent, initiation
    wins and the conflict is reported through on_conflict."""
    sig = sig or default_signature()
    rules.validate(sig)
    script: dict[int, tuple[Term, ...]] = {}
    for t, evs in events.items():
        evs = tuple(evs)
        if t < 0 or t > horizon:
            raise EventCalcError(f"event at time {t} outside horizon {horizon}")
        for e in evs:
            if not is_ground(e):
                raise EventCalcError(f"event {render_term(e)} is not ground")
            from .terms import check_term

            check_term(e, sig)
        script[t] = evs

    states = [frozenset(rules.initially)]
    for t in range(horizon):
        state = states[-1]
        started: set[Term] = set()
        stopped: set[Term] = set()
        for e in script.get(t, ()):
            started |= _effects(rules.initiates, e, state, sig)
            stopped |= _effects(rules.terminates, e, state, sig)
        both = started & stopped
        if both and on_conflict is not None:
            for f in sorted(both, key=render_term):
                on_conflict(t, f)
        nxt = (state - (stopped - started)) | started
        states.append(frozenset(nxt))
    return Timeline(
        horizon=horizon,
        events=tuple(sorted((t, tuple(sorted(evs, key=render_term)))
                            for t, evs in script.items())),
        states=tuple(states),
    )


# -- axiom emission ------------------------------------------------------

_EMIT_CAP = 200_000


def emit_axioms(
    rules: DomainRules,
    events: Mapping[int, Iterable[Term]],
    horizon: int,
    sig: Signature | None = None,
) -> list[Formula]:
    """Ground completion of the narrative: initiation, termination, frame,
    and clipping instances under which first-order proof agrees with
    simulate on every (fluent, time) pair."""
    sig = sig or default_signature()
    timeline = simulate(rules, events, horizon, sig)

    def holds(f: Term, t: int) -> Formula:
        return F.Atom(FunctionApplication("holds", (f, numeral(t))))

    def happens(e: Term, t: int) -> Formula:
        return F.Atom(FunctionApplication("happens", (e, numeral(t))))

    out: list[Formula] = []
    fluents: set[Term] = set(rules.initially)
    for t in range(horizon + 1):
        fluents |= timeline.holds_at(t)

    # initial state bridge
    for f in sorted(rules.initially, key=render_term):
        out.append(
            F.Atom(FunctionApplication("initially", (f,)))
        )
        out.append(
            F.Implies(F.Atom(FunctionApplication("initially", (f,))), holds(f, 0))
        )

    terminated_at: dict[tuple[Term, int], list[Term]] = {}
    initiated_at: dict[tuple[Term, int], list[Term]] = {}
    for t in range(horizon):
        state = timeline.holds_at(t)
        for e in timeline.events_at(t):
            out.append(happens(e, t))
            for f in sorted(_effects(rules.initiates, e, state, sig), key=render_term):
                out.append(
                    F.Atom(FunctionApplication("initiates", (e, f, numeral(t))))
                )
                out.append(
                    F.Implies(
                        F.And((happens(e, t),
                               F.Atom(FunctionApplication("initiates", (e, f, numeral(t)))))),
                        holds(f, t + 1),
                    )
                )
                initiated_at.setdefault((f, t), []).append(e)
                fluents.add(f)
            for f in sorted(_effects(rules.terminates, e, state, sig), key=render_term):
                out.append(
                    F.Atom(FunctionApplication("terminates", (e, f, numeral(t))))
                )
                terminated_at.setdefault((f, t), []).append(e)
                fluents.add(f)

    if (horizon + 1) * max(len(fluents), 1) > _EMIT_CAP:
        raise EventCalcError(
            f"instantiation budget exceeded: {(horizon + 1) * len(fluents)} "
            f"instances over cap {_EMIT_CAP}"
        )

    # frame instances: a fluent carries over exactly when the tick does
    # not terminate it (completion over the known narrative); initiation
    # beats termination on the same tick
    for f in sorted(fluents, key=render_term):
        for t in range(horizon):
            if (f, t) in terminated_at and (f, t) not in initiated_at:
                continue
            if (f, t) in terminated_at:
                continue  # initiation instance above already yields t+1
            out.append(F.Implies(holds(f, t), holds(f, t + 1)))

    # clipping: a terminating event inside the window
    for (f, t), evs in sorted(
        terminated_at.items(), key=lambda kv: (render_term(kv[0][0]), kv[0][1])
    ):
        for t1 in range(t + 1):
            for t2 in range(t + 1, horizon + 1):
                out.append(
                    F.Atom(
                        FunctionApplication(
                            "clipped", (numeral(t1), f, numeral(t2))
                        )
                    )
                )
    # time order facts
    for t1 in range(horizon + 1):
        for t2 in range(t1 + 1, horizon + 1):
            out.append(
                F.Atom(FunctionApplication("prior", (numeral(t1), numeral(t2))))
            )

    seen: set[str] = set()
    deduped = []
    for f in out:
        r = F.render(f)
        if r not in seen:
            seen.add(r)
            deduped.append(f)
    return deduped
