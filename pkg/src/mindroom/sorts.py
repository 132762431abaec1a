"""Sort forest and sorted signatures.

A signature fixes the vocabulary every other module works over: a forest
of sorts (subsort edges point at the parent), function symbols with
declared argument/result sorts, and sorted constants.  Signatures are
immutable; extension returns a new signature.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace


class SignatureError(Exception):
    """Raised for malformed signatures or unknown symbols."""


@dataclass(frozen=True)
class Sort:
    name: str
    parent: str | None = None


@dataclass(frozen=True)
class FunctionDecl:
    """A function symbol.  Each argument slot lists the sorts it accepts
    (almost always one; `vicinity` accepts several)."""

    name: str
    args: tuple[tuple[str, ...], ...]
    result: str

    @property
    def arity(self) -> int:
        return len(self.args)


@dataclass(frozen=True)
class Signature:
    sorts: dict[str, Sort] = field(default_factory=dict)
    functions: dict[str, FunctionDecl] = field(default_factory=dict)
    constants: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        for s in self.sorts.values():
            if s.parent is not None and s.parent not in self.sorts:
                raise SignatureError(f"sort {s.name} has unknown parent {s.parent}")
            # walk to the root; a revisit means a cycle
            seen = {s.name}
            cur = s.parent
            while cur is not None:
                if cur in seen:
                    raise SignatureError(f"subsort cycle through {cur}")
                seen.add(cur)
                cur = self.sorts[cur].parent
        for f in self.functions.values():
            for alts in f.args:
                for a in alts:
                    if a not in self.sorts:
                        raise SignatureError(f"function {f.name}: unknown sort {a}")
            if f.result not in self.sorts:
                raise SignatureError(f"function {f.name}: unknown result sort {f.result}")
        for c, s in self.constants.items():
            if s not in self.sorts:
                raise SignatureError(f"constant {c}: unknown sort {s}")

    def subsort(self, sub: str, sup: str) -> bool:
        """True iff `sub` equals `sup` or lies below it in the forest."""
        cur: str | None = sub
        while cur is not None:
            if cur == sup:
                return True
            cur = self.sorts[cur].parent if cur in self.sorts else None
        return False

    def fits(self, actual: str, accepted: tuple[str, ...]) -> bool:
        return any(self.subsort(actual, a) for a in accepted)

    def function(self, name: str) -> FunctionDecl:
        try:
            return self.functions[name]
        except KeyError:
            raise SignatureError(f"unknown function symbol: {name}") from None

    def constant_sort(self, name: str) -> str:
        try:
            return self.constants[name]
        except KeyError:
            raise SignatureError(f"unknown constant: {name}") from None

    def with_constants(self, extra: dict[str, str]) -> "Signature":
        for name, sort in extra.items():
            if sort not in self.sorts:
                raise SignatureError(f"constant {name}: unknown sort {sort}")
            if name in self.constants and self.constants[name] != sort:
                raise SignatureError(f"constant {name} redeclared with sort {sort}")
            if name in self.functions:
                raise SignatureError(f"constant {name} clashes with a function symbol")
        merged = dict(self.constants)
        merged.update(extra)
        return replace(self, constants=merged)

    def with_functions(self, extra: dict[str, FunctionDecl]) -> "Signature":
        for name in extra:
            if name in self.constants:
                raise SignatureError(f"function {name} clashes with a constant")
        merged = dict(self.functions)
        merged.update(extra)
        sig = replace(self, functions=merged)
        sig.validate()
        return sig


# Sort names used throughout.
OBJECT = "Object"
AGENT = "Agent"
SELF = "Self"
EVENT = "Event"
ACTION = "Action"
ACTIONTYPE = "ActionType"
MOMENT = "Moment"
BOOLEAN = "Boolean"
FLUENT = "Fluent"
NUMERIC = "Numeric"
SURFACE = "Surface"
BLOCK = "Block"


def _fn(name: str, *args: str, result: str) -> FunctionDecl:
    return FunctionDecl(name, tuple((a,) for a in args), result)


def default_signature() -> Signature:
    """The stock signature: event-calculus vocabulary, the vicinity fluent,
    and the blocks/table microworld symbols."""
    sorts = {
        s.name: s
        for s in [
            Sort(OBJECT),
            Sort(AGENT),
            Sort(SELF, parent=AGENT),
            Sort(EVENT),
            Sort(ACTION, parent=EVENT),
            Sort(ACTIONTYPE),
            Sort(MOMENT),
            Sort(BOOLEAN),
            Sort(FLUENT),
            Sort(NUMERIC),
            Sort(SURFACE, parent=OBJECT),
            Sort(BLOCK, parent=SURFACE),
        ]
    }
    functions = {
        f.name: f
        for f in [
            _fn("action", AGENT, ACTIONTYPE, result=ACTION),
            _fn("initially", FLUENT, result=BOOLEAN),
            _fn("holds", FLUENT, MOMENT, result=BOOLEAN),
            _fn("happens", EVENT, MOMENT, result=BOOLEAN),
            _fn("clipped", MOMENT, FLUENT, MOMENT, result=BOOLEAN),
            _fn("initiates", EVENT, FLUENT, MOMENT, result=BOOLEAN),
            _fn("terminates", EVENT, FLUENT, MOMENT, result=BOOLEAN),
            _fn("prior", MOMENT, MOMENT, result=BOOLEAN),
            FunctionDecl("vicinity", ((AGENT,), (FLUENT, EVENT, AGENT)), FLUENT),
            _fn("on", BLOCK, SURFACE, result=FLUENT),
            _fn("clear", BLOCK, result=FLUENT),
            _fn("inRoom", AGENT, result=FLUENT),
            _fn("goal", BOOLEAN, NUMERIC, result=BOOLEAN),
            _fn("stack", BLOCK, BLOCK, result=ACTIONTYPE),
            _fn("unstack", BLOCK, BLOCK, result=ACTIONTYPE),
            # goal-condition makers: state assertions usable inside goals
            _fn("On", BLOCK, SURFACE, result=BOOLEAN),
            _fn("Clear", BLOCK, result=BOOLEAN),
            # goal-change and room-traffic events
            _fn("setGoal", BOOLEAN, result=EVENT),
            _fn("dropGoal", BOOLEAN, result=EVENT),
            _fn("enters", AGENT, result=EVENT),
            _fn("leaves", AGENT, result=EVENT),
            _fn("attempts", AGENT, ACTIONTYPE, result=EVENT),
            # successor-offset time term (+ t k)
            _fn("+", MOMENT, NUMERIC, result=MOMENT),
        ]
    }
    constants = {"ctable": SURFACE, "true": BOOLEAN, "false": BOOLEAN}
    sig = Signature(sorts=sorts, functions=functions, constants=constants)
    sig.validate()
    return sig
