"""The blocks-and-table microworld.

Every block sits on exactly one surface (another block or the table);
a block is clear when nothing sits on it.  Two moves exist: stack a
table-resting block onto a clear block, and unstack a block back onto
the table.  The same dynamics are exported as event-calculus rules so
the simulator and the functional semantics can be cross-checked.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import formulas as F
from .eventcalc import DomainRules, EffectRule
from .formulas import Formula
from .sorts import AGENT, BLOCK, SURFACE, Signature, default_signature
from .terms import Constant, FunctionApplication, Term, Variable, render_term

TABLE = "ctable"


class IllegalMove(Exception):
    """A move whose named precondition fails."""


@dataclass(frozen=True)
class Move:
    kind: str  # "stack" | "unstack"
    top: str
    dest: str

    def __post_init__(self):
        if self.kind not in ("stack", "unstack"):
            raise ValueError(f"unknown move kind: {self.kind}")

    def action_type(self) -> Term:
        return FunctionApplication(
            self.kind, (Constant(self.top, BLOCK), Constant(self.dest, BLOCK))
        )

    def as_event(self, agent: str) -> Term:
        return FunctionApplication(
            "action", (Constant(agent, AGENT), self.action_type())
        )

    def render(self) -> str:
        return f"{self.kind}({self.top},{self.dest})"


@dataclass(frozen=True)
class WorldState:
    blocks: tuple[str, ...]
    on: tuple[tuple[str, str], ...]  # block -> surface, sorted by block

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(sorted(self.blocks)))
        object.__setattr__(self, "on", tuple(sorted(self.on)))

    @staticmethod
    def make(on: dict[str, str]) -> "WorldState":
        return WorldState(blocks=tuple(on), on=tuple(on.items()))

    @staticmethod
    def all_on_table(blocks) -> "WorldState":
        return WorldState.make({b: TABLE for b in blocks})

    @property
    def on_map(self) -> dict[str, str]:
        return dict(self.on)

    @property
    def clear(self) -> frozenset[str]:
        supports = {s for _, s in self.on}
        return frozenset(b for b in self.blocks if b not in supports)

    def validate(self) -> None:
        placed = self.on_map
        if set(placed) != set(self.blocks):
            raise ValueError("every block needs exactly one support")
        for b in self.blocks:
            seen = {b}
            cur = placed[b]
            while cur != TABLE:
                if cur in seen:
                    raise ValueError(f"support cycle through {cur}")
                if cur not in placed:
                    raise ValueError(f"{b} rests on undeclared {cur}")
                seen.add(cur)
                cur = placed[cur]

    def key(self) -> str:
        return ";".join(f"{b}>{s}" for b, s in self.on)

    def fluents(self) -> frozenset[Term]:
        out = set()
        for b, s in self.on:
            out.add(
                FunctionApplication(
                    "on", (Constant(b, BLOCK), Constant(s, SURFACE if s == TABLE else BLOCK))
                )
            )
        for b in self.clear:
            out.add(FunctionApplication("clear", (Constant(b, BLOCK),)))
        return frozenset(out)


def legal_actions(s: WorldState) -> list[Move]:
    """stack(x,y): x on the table, x and y clear, x != y.
    unstack(x,y): x on y, x clear, y a block.  Deterministic order."""
    placed = s.on_map
    clear = s.clear
    out = []
    for x in s.blocks:
        for y in s.blocks:
            if x == y:
                continue
            if placed[x] == TABLE and x in clear and y in clear:
                out.append(Move("stack", x, y))
            if placed[x] == y and x in clear:
                out.append(Move("unstack", x, y))
    out.sort(key=lambda m: (m.kind, m.top, m.dest))
    return out


def apply_move(s: WorldState, m: Move) -> WorldState:
    placed = s.on_map
    clear = s.clear
    if m.top not in placed:
        raise IllegalMove(f"unknown block {m.top}")
    if m.kind == "stack":
        if placed[m.top] != TABLE:
            raise IllegalMove(f"stack({m.top},{m.dest}): {m.top} is not on the table")
        if m.top not in clear:
            raise IllegalMove(f"stack({m.top},{m.dest}): {m.top} is not clear")
        if m.dest not in clear:
            raise IllegalMove(f"stack({m.top},{m.dest}): {m.dest} is not clear")
        placed[m.top] = m.dest
    else:
        if placed[m.top] != m.dest:
            raise IllegalMove(f"unstack({m.top},{m.dest}): {m.top} is not on {m.dest}")
        if m.top not in clear:
            raise IllegalMove(f"unstack({m.top},{m.dest}): {m.top} is not clear")
        placed[m.top] = TABLE
    return WorldState.make(placed)


def as_ec_domain(initial: WorldState) -> DomainRules:
    """Event-calculus rules matching apply_move: effects of
    action(agent, stack/unstack(x,y)) on on/clear fluents."""
    a = Variable("a", AGENT)
    x = Variable("x", BLOCK)
    y = Variable("y", BLOCK)
    table = Constant(TABLE, SURFACE)

    def act(kind: str) -> Term:
        return FunctionApplication(
            "action", (a, FunctionApplication(kind, (x, y)))
        )

    def on(top: Term, below: Term) -> Term:
        return FunctionApplication("on", (top, below))

    def clear(b: Term) -> Term:
        return FunctionApplication("clear", (b,))

    initiates = (
        EffectRule(act("stack"), on(x, y)),
        EffectRule(act("unstack"), on(x, table)),
        EffectRule(act("unstack"), clear(y)),
    )
    terminates = (
        EffectRule(act("stack"), on(x, table)),
        EffectRule(act("stack"), clear(y)),
        EffectRule(act("unstack"), on(x, y)),
    )
    return DomainRules(
        initiates=initiates,
        terminates=terminates,
        initially=tuple(sorted(initial.fluents(), key=render_term)),
    )


@dataclass(frozen=True)
class GoalSpec:
    condition: Formula
    priority: int = 0

    def __post_init__(self):
        if self.priority < 0:
            raise ValueError("goal priority must be nonnegative")


def condition_holds(cond: Formula, s: WorldState) -> bool:
    """Evaluate an extensional goal condition (over On/Clear assertions,
    with the usual connectives) against a state."""
    if isinstance(cond, F.Atom):
        t = cond.term
        if isinstance(t, FunctionApplication) and t.symbol == "On":
            top, below = t.arguments
            return s.on_map.get(_name(top)) == _name(below)
        if isinstance(t, FunctionApplication) and t.symbol == "Clear":
            return _name(t.arguments[0]) in s.clear
        if t == F.TRUE.term:
            return True
        if t == F.FALSE.term:
            return False
        raise ValueError("goal conditions use On/Clear assertions: " + F.render(cond))
    if isinstance(cond, F.Not):
        return not condition_holds(cond.body, s)
    if isinstance(cond, F.And):
        return all(condition_holds(i, s) for i in cond.items)
    if isinstance(cond, F.Or):
        return any(condition_holds(i, s) for i in cond.items)
    if isinstance(cond, F.Implies):
        return (not condition_holds(cond.lhs, s)) or condition_holds(cond.rhs, s)
    if isinstance(cond, F.Iff):
        return condition_holds(cond.lhs, s) == condition_holds(cond.rhs, s)
    raise ValueError("goal condition is not extensional: " + F.render(cond))


def _name(t: Term) -> str:
    if isinstance(t, Constant):
        return t.name
    raise ValueError(f"expected a constant, got {t!r}")


def world_signature(blocks, sig: Signature | None = None) -> Signature:
    sig = sig or default_signature()
    extra = {b: BLOCK for b in blocks if b not in sig.constants}
    return sig.with_constants(extra)


def load_world(path: str, sig: Signature | None = None):
    """`.world` files: lines `block NAME`, `on NAME NAME|table`,
    `goal PRIORITY FORMULA`."""
    from .sexpr import ParseError, parse_formula

    blocks: list[str] = []
    placements: dict[str, str] = {}
    goal_lines: list[tuple[int, int, str]] = []
    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith(";"):
                continue
            parts = line.split(None, 2)
            if parts[0] == "block" and len(parts) == 2:
                blocks.append(parts[1])
            elif parts[0] == "on" and len(parts) == 3:
                dest = parts[2].split()[0]
                placements[parts[1]] = TABLE if dest == "table" else dest
            elif parts[0] == "goal" and len(parts) == 3:
                prio_str, rest = parts[1], parts[2]
                if not prio_str.isdigit():
                    raise ParseError(f"{path}:{lineno}: priority must be an integer")
                goal_lines.append((lineno, int(prio_str), rest))
            else:
                raise ParseError(f"{path}:{lineno}: unrecognized line: {line}")
    for b in placements:
        if b not in blocks:
            raise ParseError(f"{path}: placement for undeclared block {b}")
    on = {b: placements.get(b, TABLE) for b in blocks}
    state = WorldState.make(on)
    state.validate()
    sig = world_signature(blocks, sig)
    goals = []
    for lineno, prio, text in goal_lines:
        try:
            goals.append(GoalSpec(parse_formula(text, sig), prio))
        except ParseError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
    return state, goals, sig
