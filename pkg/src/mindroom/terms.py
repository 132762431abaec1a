"""Terms: variables, constants, and function applications.

All term values are immutable and hashable.  Integer literals are
constants whose name is the decimal numeral; they are created with
sort Moment or Numeric depending on the position they appear in.
`(+ t k)` offset terms normalize on construction so that `(+ 6 1)`
and `7` are the same term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .sorts import MOMENT, NUMERIC, Signature, SignatureError


@dataclass(frozen=True)
class Variable:
    name: str
    sort: str


@dataclass(frozen=True)
class Constant:
    name: str
    sort: str

    @property
    def is_numeral(self) -> bool:
        return self.name.isdigit()


@dataclass(frozen=True)
class FunctionApplication:
    symbol: str
    arguments: tuple["Term", ...]


Term = Union[Variable, Constant, FunctionApplication]


def numeral(value: int, sort: str = MOMENT) -> Constant:
    if value < 0:
        raise ValueError("time and priority literals are nonnegative")
    return Constant(str(value), sort)


def numeral_value(t: Term) -> int | None:
    if isinstance(t, Constant) and t.is_numeral:
        return int(t.name)
    return None


def plus(base: Term, offset: int) -> Term:
    """Offset time term, folding numerals: plus(6, 1) == 7,
    plus(plus(t,1),1) == plus(t,2)."""
    if offset == 0:
        return base
    n = numeral_value(base)
    if n is not None:
        return numeral(n + offset, base.sort)
    if isinstance(base, FunctionApplication) and base.symbol == "+":
        inner = numeral_value(base.arguments[1])
        if inner is not None:
            return plus(base.arguments[0], inner + offset)
    return FunctionApplication("+", (base, numeral(offset, NUMERIC)))


def split_offset(t: Term) -> tuple[Term, int]:
    """Decompose a time term into (base, numeric offset)."""
    if isinstance(t, FunctionApplication) and t.symbol == "+":
        inner = numeral_value(t.arguments[1])
        if inner is not None:
            base, k = split_offset(t.arguments[0])
            return base, k + inner
    return t, 0


def time_leq(t1: Term, t2: Term) -> bool:
    """Decidable fragment of the time order: numerals compare numerically,
    equal bases compare by offset, and 0 precedes every moment."""
    n1, n2 = numeral_value(t1), numeral_value(t2)
    if n1 is not None and n2 is not None:
        return n1 <= n2
    if n1 == 0:
        return True
    b1, k1 = split_offset(t1)
    b2, k2 = split_offset(t2)
    if b1 == b2:
        return k1 <= k2
    return False


def term_sort(t: Term, sig: Signature) -> str:
    if isinstance(t, (Variable, Constant)):
        return t.sort
    return sig.function(t.symbol).result


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, FunctionApplication):
        for a in t.arguments:
            yield from subterms(a)


def term_variables(t: Term) -> set[Variable]:
    return {s for s in subterms(t) if isinstance(s, Variable)}


def is_ground(t: Term) -> bool:
    return not any(isinstance(s, Variable) for s in subterms(t))


def term_depth(t: Term) -> int:
    if isinstance(t, FunctionApplication):
        return 1 + max((term_depth(a) for a in t.arguments), default=0)
    return 1


def check_term(t: Term, sig: Signature) -> None:
    """Raise SignatureError when an application violates declared sorts."""
    if isinstance(t, FunctionApplication):
        decl = sig.function(t.symbol)
        if len(t.arguments) != decl.arity:
            raise SignatureError(
                f"{t.symbol} expects {decl.arity} arguments, got {len(t.arguments)}"
            )
        for arg, accepted in zip(t.arguments, decl.args):
            check_term(arg, sig)
            actual = term_sort(arg, sig)
            if not sig.fits(actual, accepted):
                raise SignatureError(
                    f"{t.symbol}: argument {render_term(arg)} has sort {actual}, "
                    f"expected {' or '.join(accepted)}"
                )
    elif isinstance(t, Constant):
        if not t.is_numeral and t.name not in ("true", "false"):
            declared = sig.constant_sort(t.name)
            if declared != t.sort:
                raise SignatureError(
                    f"constant {t.name} declared {declared}, used as {t.sort}"
                )


def render_term(t: Term) -> str:
    if isinstance(t, Variable):
        return f"?{t.name}"
    if isinstance(t, Constant):
        return t.name
    inner = " ".join(render_term(a) for a in t.arguments)
    return f"({t.symbol} {inner})"
