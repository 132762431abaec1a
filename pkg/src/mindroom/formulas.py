"""Formula AST for the sorted modal event-calculus fragment.

An atom wraps a single Boolean-sorted term (a predicate application, a
propositional constant, or a propositional placeholder variable).  The
epistemic operators are dedicated nodes, never encoded as predicates:
that separation is what lets the prover keep them referentially opaque.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .terms import (
    Constant,
    FunctionApplication,
    Term,
    Variable,
    render_term,
    term_variables,
)


@dataclass(frozen=True)
class Atom:
    term: Term  # Boolean-sorted


@dataclass(frozen=True)
class Equals:
    left: Term
    right: Term


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    items: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    items: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Iff:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class ForAll:
    var: Variable
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    var: Variable
    body: "Formula"


@dataclass(frozen=True)
class Perceives:
    agent: Term
    time: Term
    body: "Formula"


@dataclass(frozen=True)
class Knows:
    agent: Term
    time: Term
    body: "Formula"


@dataclass(frozen=True)
class Believes:
    agent: Term
    time: Term
    body: "Formula"


@dataclass(frozen=True)
class Desires:
    agent: Term
    time: Term
    body: "Formula"


@dataclass(frozen=True)
class Intends:
    agent: Term
    time: Term
    body: "Formula"


@dataclass(frozen=True)
class Common:
    time: Term
    body: "Formula"


@dataclass(frozen=True)
class Says:
    speaker: Term
    time: Term
    body: "Formula"


@dataclass(frozen=True)
class SaysTo:
    speaker: Term
    addressee: Term
    time: Term
    body: "Formula"


Formula = Union[
    Atom, Equals, Not, And, Or, Implies, Iff, ForAll, Exists,
    Perceives, Knows, Believes, Desires, Intends, Common, Says, SaysTo,
]

ATTITUDES = (Perceives, Knows, Believes, Desires, Intends)
MODAL_TYPES = ATTITUDES + (Common, Says, SaysTo)
TRUE = Atom(Constant("true", "Boolean"))
FALSE = Atom(Constant("false", "Boolean"))


def atom(symbol: str, *args: Term) -> Atom:
    if not args:
        return Atom(Constant(symbol, "Boolean"))
    return Atom(FunctionApplication(symbol, tuple(args)))


def conj(*items: Formula) -> Formula:
    return items[0] if len(items) == 1 else And(tuple(items))


def is_modal(f: Formula) -> bool:
    return isinstance(f, MODAL_TYPES)


def is_extensional(f: Formula) -> bool:
    """No modal operator anywhere inside."""
    return not any(is_modal(g) for g in subformulas(f))


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Atom, Equals)):
        return ()
    if isinstance(f, Not):
        return (f.body,)
    if isinstance(f, (And, Or)):
        return f.items
    if isinstance(f, (Implies, Iff)):
        return (f.lhs, f.rhs)
    if isinstance(f, (ForAll, Exists)):
        return (f.body,)
    return (f.body,)  # modal nodes


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    for c in children(f):
        yield from subformulas(c)


def formula_terms(f: Formula) -> Iterator[Term]:
    """Every term appearing anywhere in the formula, modal slots included."""
    for g in subformulas(f):
        if isinstance(g, Atom):
            yield g.term
        elif isinstance(g, Equals):
            yield g.left
            yield g.right
        elif isinstance(g, ATTITUDES):
            yield g.agent
            yield g.time
        elif isinstance(g, Common):
            yield g.time
        elif isinstance(g, Says):
            yield g.speaker
            yield g.time
        elif isinstance(g, SaysTo):
            yield g.speaker
            yield g.addressee
            yield g.time


def free_variables(f: Formula) -> set[Variable]:
    if isinstance(f, Atom):
        return term_variables(f.term)
    if isinstance(f, Equals):
        return term_variables(f.left) | term_variables(f.right)
    if isinstance(f, (ForAll, Exists)):
        return free_variables(f.body) - {f.var}
    out: set[Variable] = set()
    for c in children(f):
        out |= free_variables(c)
    if isinstance(f, ATTITUDES):
        out |= term_variables(f.agent) | term_variables(f.time)
    elif isinstance(f, Common):
        out |= term_variables(f.time)
    elif isinstance(f, Says):
        out |= term_variables(f.speaker) | term_variables(f.time)
    elif isinstance(f, SaysTo):
        out |= (
            term_variables(f.speaker)
            | term_variables(f.addressee)
            | term_variables(f.time)
        )
    return out


def is_closed(f: Formula) -> bool:
    return not free_variables(f)


_HEADS = {
    Not: "not", And: "and", Or: "or", Implies: "implies", Iff: "iff",
    ForAll: "forall", Exists: "exists", Perceives: "perceives",
    Knows: "knows", Believes: "believes", Desires: "desires",
    Intends: "intends", Common: "common", Says: "says", SaysTo: "says-to",
}


def render(f: Formula) -> str:
    """Deterministic concrete syntax; the parser inverts it exactly."""
    if isinstance(f, Atom):
        return render_term(f.term)
    if isinstance(f, Equals):
        return f"(= {render_term(f.left)} {render_term(f.right)})"
    if isinstance(f, Not):
        return f"(not {render(f.body)})"
    if isinstance(f, (And, Or)):
        head = _HEADS[type(f)]
        return f"({head} " + " ".join(render(i) for i in f.items) + ")"
    if isinstance(f, (Implies, Iff)):
        return f"({_HEADS[type(f)]} {render(f.lhs)} {render(f.rhs)})"
    if isinstance(f, (ForAll, Exists)):
        head = _HEADS[type(f)]
        return f"({head} (?{f.var.name} {f.var.sort}) {render(f.body)})"
    if isinstance(f, ATTITUDES):
        head = _HEADS[type(f)]
        return f"({head} {render_term(f.agent)} {render_term(f.time)} {render(f.body)})"
    if isinstance(f, Common):
        return f"(common {render_term(f.time)} {render(f.body)})"
    if isinstance(f, Says):
        return f"(says {render_term(f.speaker)} {render_term(f.time)} {render(f.body)})"
    if isinstance(f, SaysTo):
        return (
            f"(says-to {render_term(f.speaker)} {render_term(f.addressee)} "
            f"{render_term(f.time)} {render(f.body)})"
        )
    raise TypeError(f"not a formula: {f!r}")
