"""Whole-formula sort checking.  Returns violations, never raises."""

from __future__ import annotations

from . import formulas as F
from .formulas import ATTITUDES, Formula
from .sorts import AGENT, BOOLEAN, MOMENT, Signature, SignatureError
from .terms import FunctionApplication, Term, check_term, render_term, term_sort


def _check_slot(t: Term, expected: str, role: str, sig: Signature, out: list[str]):
    try:
        check_term(t, sig)
        actual = term_sort(t, sig)
    except SignatureError as exc:
        out.append(str(exc))
        return
    if not sig.subsort(actual, expected):
        out.append(
            f"{role} {render_term(t)} has sort {actual}, expected {expected}"
        )


def sort_check(f: Formula, sig: Signature) -> list[str]:
    """Empty list means the formula respects the signature, subsorting
    included.  Desires bodies are restricted to holds(f, t)."""
    out: list[str] = []
    _walk(f, sig, out)
    return out


def _walk(f: Formula, sig: Signature, out: list[str]) -> None:
    if isinstance(f, F.Atom):
        _check_slot(f.term, BOOLEAN, "atom", sig, out)
        return
    if isinstance(f, F.Equals):
        for side in (f.left, f.right):
            try:
                check_term(side, sig)
            except SignatureError as exc:
                out.append(str(exc))
        return
    if isinstance(f, F.Not):
        _walk(f.body, sig, out)
        return
    if isinstance(f, (F.And, F.Or)):
        if len(f.items) < 2:
            out.append(f"{type(f).__name__} requires at least 2 operands")
        for i in f.items:
            _walk(i, sig, out)
        return
    if isinstance(f, (F.Implies, F.Iff)):
        _walk(f.lhs, sig, out)
        _walk(f.rhs, sig, out)
        return
    if isinstance(f, (F.ForAll, F.Exists)):
        if f.var.sort not in sig.sorts:
            out.append(f"binder ?{f.var.name}: unknown sort {f.var.sort}")
        _walk(f.body, sig, out)
        return
    if isinstance(f, ATTITUDES):
        _check_slot(f.agent, AGENT, "agent position", sig, out)
        _check_slot(f.time, MOMENT, "time position", sig, out)
        if isinstance(f, F.Desires) and not _is_holds_atom(f.body):
            out.append(
                "Desires body must be holds(f, t), got " + F.render(f.body)
            )
        _walk(f.body, sig, out)
        return
    if isinstance(f, F.Common):
        _check_slot(f.time, MOMENT, "time position", sig, out)
        _walk(f.body, sig, out)
        return
    if isinstance(f, F.Says):
        _check_slot(f.speaker, AGENT, "agent position", sig, out)
        _check_slot(f.time, MOMENT, "time position", sig, out)
        _walk(f.body, sig, out)
        return
    if isinstance(f, F.SaysTo):
        _check_slot(f.speaker, AGENT, "agent position", sig, out)
        _check_slot(f.addressee, AGENT, "agent position", sig, out)
        _check_slot(f.time, MOMENT, "time position", sig, out)
        _walk(f.body, sig, out)
        return
    out.append(f"not a formula node: {f!r}")


def _is_holds_atom(f: Formula) -> bool:
    return (
        isinstance(f, F.Atom)
        and isinstance(f.term, FunctionApplication)
        and f.term.symbol == "holds"
    )
