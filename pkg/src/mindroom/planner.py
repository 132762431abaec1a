"""Forward state-space planning with prover-discharged goals.

Search is breadth-first with duplicate pruning on canonical state keys
and a fixed action ordering, so results are deterministic and plans on
the small worlds are shortest.  Extensional goal conditions are checked
against the state directly; modal goal formulae (someone must come to
believe something) are discharged by the modal prover over the final
state's exported belief premises.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import formulas as F
from .blocks import (
    GoalSpec,
    IllegalMove,
    Move,
    WorldState,
    apply_move,
    condition_holds,
    legal_actions,
)
from .formulas import Formula, is_extensional
from .foprover import Budget, NOT_PROVED, PROVED, ProofResult, prove_fo
from .shadow import SchemaSet, prove
from .sorts import Signature, default_signature
from .transform import canonical


@dataclass(frozen=True)
class PlanningProblem:
    initial: WorldState
    goals: tuple[GoalSpec, ...]
    background: tuple[Formula, ...] = ()
    max_depth: int = 20

    def active_goal(self) -> Formula:
        """Highest priority wins; ties go to the latest-added goal."""
        if not self.goals:
            return F.TRUE
        best = max(
            range(len(self.goals)), key=lambda i: (self.goals[i].priority, i)
        )
        return self.goals[best].condition


@dataclass
class Plan:
    steps: list[Move]
    justifications: list[ProofResult]
    final: WorldState

    def render(self) -> str:
        lines = [m.render() for m in self.steps]
        lines.append(f"; length={len(self.steps)}")
        return "\n".join(lines)


@dataclass
class NoPlanWithinBounds:
    reason: str


def _precondition(s: WorldState, m: Move) -> Formula:
    """The extensional condition legal_actions enforces for one move."""
    from .terms import Constant, FunctionApplication

    def on_atom(x, y):
        return F.atom("On", Constant(x, "Block"), Constant(y, "Surface" if y == "ctable" else "Block"))

    def clear_atom(x):
        return F.atom("Clear", Constant(x, "Block"))

    if m.kind == "stack":
        return F.And((on_atom(m.top, "ctable"), clear_atom(m.top), clear_atom(m.dest)))
    return F.And((on_atom(m.top, m.dest), clear_atom(m.top)))


def _state_premises(s: WorldState, sig: Signature) -> list[Formula]:
    from .terms import Constant

    out: list[Formula] = []
    for b, surf in s.on:
        out.append(
            F.atom(
                "On",
                Constant(b, "Block"),
                Constant(surf, "Surface" if surf == "ctable" else "Block"),
            )
        )
    for b in sorted(s.clear):
        out.append(F.atom("Clear", Constant(b, "Block")))
    return out


def _justify(s: WorldState, m: Move, sig: Signature, budget: Budget) -> ProofResult:
    return prove_fo(
        _state_premises(s, sig), _precondition(s, m), budget=budget, sig=sig
    )


def _goal_satisfied(
    cond: Formula,
    s: WorldState,
    background: tuple[Formula, ...],
    sig: Signature,
    budget: Budget,
) -> bool:
    if is_extensional(cond):
        return condition_holds(cond, s)
    premises = list(background) + _state_premises(s, sig)
    return prove(premises, cond, budget=budget, sig=sig).proved


def plan(
    problem: PlanningProblem,
    budget: Budget | None = None,
    sig: Signature | None = None,
) -> Plan | NoPlanWithinBounds:
    """Breadth-first over reachable states; returns a shortest plan for
    the active goal, with a per-step entailment proof that the
    precondition held."""
    sig = sig or default_signature()
    budget = budget or Budget()
    goal = problem.active_goal()

    start = problem.initial
    start.validate()
    if _goal_satisfied(goal, start, problem.background, sig, budget):
        return Plan([], [], start)

    frontier = deque([(start, [])])
    seen = {start.key()}
    while frontier:
        state, path = frontier.popleft()
        if len(path) >= problem.max_depth:
            continue
        for move in legal_actions(state):
            nxt = apply_move(state, move)
            key = nxt.key()
            if key in seen:
                continue
            seen.add(key)
            new_path = path + [(state, move)]
            if _goal_satisfied(goal, nxt, problem.background, sig, budget):
                justifications = [
                    _justify(s, m, sig, budget) for s, m in new_path
                ]
                return Plan([m for _, m in new_path], justifications, nxt)
            frontier.append((nxt, new_path))
    return NoPlanWithinBounds(f"no plan within depth {problem.max_depth}")


def validate_plan(
    problem: PlanningProblem,
    p: Plan,
    budget: Budget | None = None,
    sig: Signature | None = None,
) -> str | None:
    """Replay the plan through the move semantics, recheck every
    precondition proof and the final goal.  None means valid; otherwise a
    message naming the first violated step.  Independent of search."""
    sig = sig or default_signature()
    budget = budget or Budget()
    state = problem.initial
    for i, move in enumerate(p.steps):
        try:
            cond = _precondition(state, move)
            if not condition_holds(cond, state):
                return f"step {i}: precondition failed: {F.render(cond)}"
            if i < len(p.justifications) and not p.justifications[i].proved:
                return f"step {i}: missing precondition proof"
            state = apply_move(state, move)
        except IllegalMove as exc:
            return f"step {i}: {exc}"
    goal = problem.active_goal()
    if not _goal_satisfied(goal, state, problem.background, sig, budget):
        return f"final state does not entail the goal: {F.render(goal)}"
    return None


def blocks_background(blocks, sig: Signature) -> list[Formula]:
    """Domain constraints for conflict checking: On is functional, blocks
    are pairwise distinct, and nothing shares a block as support."""
    from .sexpr import parse_formula

    axioms = [
        parse_formula(
            "(forall (?x Block) (forall (?y Surface) (forall (?z Surface)"
            " (implies (and (On ?x ?y) (On ?x ?z)) (= ?y ?z)))))",
            sig,
        ),
        parse_formula(
            "(forall (?x Block) (forall (?y Block) (forall (?z Block)"
            " (implies (and (On ?x ?z) (On ?y ?z)) (= ?x ?y)))))",
            sig,
        ),
        parse_formula("(forall (?x Block) (not (On ?x ?x)))", sig),
    ]
    names = sorted(blocks) + ["ctable"]
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            axioms.append(parse_formula(f"(not (= {a} {b}))", sig))
    return axioms


@dataclass(frozen=True)
class ConflictReport:
    first: GoalSpec
    second: GoalSpec
    verdict: str  # "conflict" | "compatible" | "unknown"
    kept: GoalSpec | None = None
    dropped: GoalSpec | None = None


def goal_conflict(
    goals: list[GoalSpec],
    background: list[Formula],
    budget: Budget | None = None,
    sig: Signature | None = None,
) -> list[ConflictReport]:
    """Flag goal pairs whose conditions are jointly unsatisfiable with the
    background constraints; higher priority wins, later-added breaks
    ties.  Pairs the prover cannot settle within budget come back as
    `unknown`, never silently dropped."""
    sig = sig or default_signature()
    budget = budget or Budget(max_time_ms=5_000)
    out: list[ConflictReport] = []
    for i, g1 in enumerate(goals):
        for j in range(i + 1, len(goals)):
            g2 = goals[j]
            res = prove(
                list(background) + [g1.condition, g2.condition],
                F.FALSE,
                budget=budget,
                sig=sig,
            )
            if res.proved:
                keep, drop = (g1, g2) if g1.priority > g2.priority else (g2, g1)
                out.append(ConflictReport(g1, g2, "conflict", keep, drop))
            elif res.status == NOT_PROVED:
                out.append(ConflictReport(g1, g2, "compatible"))
            else:
                out.append(ConflictReport(g1, g2, "unknown"))
    return out
