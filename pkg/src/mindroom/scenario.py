"""Session orchestration for the overseen room.

Runs a discrete timeline of enter/leave/move/goal-change events over the
blocks world, maintains the overseer's omniscient belief base plus its
model of every human agent (gated by room membership), answers belief
queries, and fires corrective interventions when an agent's modeled
beliefs diverge from the room's.

Timing conventions: script step k executes at tick k and its effects are
visible from k+1; an agent entering at tick t perceives the resulting
configuration immediately but only counts as present from t+1; queries
at tick t read the post-effect state; interventions fire at detection
time plus the configured delay.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import formulas as F
from .beliefs import BeliefBase, INERTIA, PERCEIVED, TOLD
from .blocks import (
    GoalSpec,
    IllegalMove,
    Move,
    TABLE,
    WorldState,
    apply_move,
    as_ec_domain,
    condition_holds,
    legal_actions,
    world_signature,
)
from .eventcalc import DomainRules, EffectRule, simulate
from .formulas import Formula
from .foprover import Budget
from .kernel import (
    Divergence,
    FALSE_BELIEF,
    Intervention,
    MISSING_BELIEF,
    RequirementConfig,
    detect_divergence,
    make_intervention,
)
from .planner import PlanningProblem, plan
from .sexpr import ParseError, parse_formula, parse_term
from .shadow import prove
from .sorts import AGENT, BLOCK, FLUENT, NUMERIC, SURFACE, Signature
from .terms import (
    Constant,
    FunctionApplication,
    Term,
    Variable,
    numeral,
    render_term,
    term_variables,
)
from .transform import Substitution, canonical, substitute


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class ScriptEvent:
    time: int
    kind: str  # enter | leave | move | setgoal | dropgoal | attempt
    agent: str
    move: Move | None = None
    goal: GoalSpec | None = None

    def event_term(self, sig: Signature) -> Term:
        a = Constant(self.agent, AGENT)
        if self.kind == "enter":
            return FunctionApplication("enters", (a,))
        if self.kind == "leave":
            return FunctionApplication("leaves", (a,))
        if self.kind == "move":
            return self.move.as_event(self.agent)
        if self.kind == "attempt":
            return FunctionApplication("attempts", (a, self.move.action_type()))
        cond_term = _reify_condition(self.goal.condition)
        maker = "setGoal" if self.kind == "setgoal" else "dropGoal"
        return FunctionApplication(maker, (cond_term,))


@dataclass(frozen=True)
class BeliefQuery:
    subject: str
    pattern: Term  # fluent pattern with exactly one variable

    def variable(self) -> Variable:
        vs = sorted(term_variables(self.pattern), key=lambda v: v.name)
        if len(vs) != 1:
            raise ScenarioError(
                f"query pattern needs exactly one variable: {render_term(self.pattern)}"
            )
        return vs[0]


@dataclass
class Scenario:
    blocks: list[str]
    agents: list[str]
    initial: WorldState
    script: list[ScriptEvent]
    queries: list[tuple[int, BeliefQuery]]
    config: RequirementConfig
    sig: Signature

    def validate(self) -> list[str]:
        problems = []
        declared = set(self.agents)
        last = -1
        for ev in self.script:
            if ev.time < last:
                problems.append(f"script times decrease at t={ev.time}")
            last = ev.time
            if ev.agent not in declared:
                problems.append(f"undeclared agent {ev.agent} at t={ev.time}")
            if ev.move is not None:
                for b in (ev.move.top, ev.move.dest):
                    if b not in self.blocks:
                        problems.append(f"undeclared block {b} at t={ev.time}")
        for t, q in self.queries:
            if q.subject != self.config.gamma and q.subject not in declared:
                problems.append(f"query at t={t}: unknown subject {q.subject}")
        return problems

    @property
    def horizon(self) -> int:
        times = [ev.time for ev in self.script] + [t for t, _ in self.queries]
        return (max(times) if times else 0) + self.config.delta + 1


def _reify_condition(cond: Formula) -> Term:
    if isinstance(cond, F.Atom) and isinstance(cond.term, FunctionApplication):
        return cond.term
    raise ScenarioError(
        "goal conditions in scripts must be atomic assertions, got "
        + F.render(cond)
    )


def _goal_atom(g: GoalSpec) -> Formula:
    return F.Atom(
        FunctionApplication(
            "goal", (_reify_condition(g.condition), numeral(g.priority, NUMERIC))
        )
    )


# -- per-agent world models ----------------------------------------------


@dataclass
class AgentModel:
    """What the overseer takes one agent to believe: the block layout,
    the goal set, and the goal-change events the agent has witnessed."""

    name: str
    fluents: dict[str, tuple[Term, int, str]] = field(default_factory=dict)
    events: BeliefBase = None
    goals: dict[str, tuple[GoalSpec, int, str]] = field(default_factory=dict)

    def __post_init__(self):
        if self.events is None:
            self.events = BeliefBase(self.name)

    def refresh_fluents(self, fluents, at: int, source: str) -> None:
        self.fluents = {
            render_term(f): (f, at, source) for f in sorted(fluents, key=render_term)
        }

    def set_goals(self, goals: list[GoalSpec], at: int, source: str) -> None:
        self.goals = {
            canonical(_goal_atom(g)): (g, at, source) for g in goals
        }

    def drop_goal(self, cond: Formula) -> None:
        self.goals = {
            k: v
            for k, v in self.goals.items()
            if canonical(v[0].condition) != canonical(cond)
        }

    def believed_state(self, blocks) -> WorldState | None:
        placed = {}
        for f, _, _ in self.fluents.values():
            if isinstance(f, FunctionApplication) and f.symbol == "on":
                placed[f.arguments[0].name] = f.arguments[1].name
        if set(placed) != set(blocks):
            return None
        return WorldState.make(placed)

    def goal_base(self) -> BeliefBase:
        base = BeliefBase(self.name)
        for key in sorted(self.goals):
            g, at, source = self.goals[key]
            base.add(_goal_atom(g), at, source if source in ("Perceived", "Told") else PERCEIVED)
        return base


# -- the trace -------------------------------------------------------------


@dataclass
class TickRecord:
    time: int
    events: list[str] = field(default_factory=list)
    blocked: list[str] = field(default_factory=list)
    state: list[str] = field(default_factory=list)
    members: list[str] = field(default_factory=list)
    perceptions: list[str] = field(default_factory=list)
    detections: list[str] = field(default_factory=list)
    display: list[str] = field(default_factory=list)
    said: list[str] = field(default_factory=list)


@dataclass
class QueryRecord:
    time: int
    subject: str
    pattern: str
    answers: list[tuple[str, str]]  # (ground value, justification formula)


@dataclass
class SessionTrace:
    ticks: list[TickRecord]
    queries: list[QueryRecord]
    interventions: list[Intervention]
    timeline: object
    gamma_base: dict[int, list[str]]
    models: dict[str, AgentModel]
    perception_log: list[Formula]

    def dump(self) -> str:
        lines = []
        for tick in self.ticks:
            lines.append(f"tick {tick.time}")
            for label, rows in (
                ("event", tick.events),
                ("blocked", tick.blocked),
                ("state", tick.state),
                ("members", tick.members),
                ("perceives", tick.perceptions),
                ("detect", tick.detections),
                ("display", tick.display),
                ("says", tick.said),
            ):
                for row in rows:
                    lines.append(f"  {label} {row}")
            for q in self.queries:
                if q.time == tick.time:
                    lines.append(f"  query {q.subject} {q.pattern}")
                    for value, justification in q.answers:
                        lines.append(f"    answer {value} {justification}")
        return "\n".join(lines) + "\n"


# -- the engine -------------------------------------------------------------


def run(sc: Scenario, budget: Budget | None = None) -> SessionTrace:
    problems = sc.validate()
    if problems:
        raise ScenarioError("; ".join(problems))
    budget = budget or Budget(max_time_ms=5_000)
    sig = sc.sig
    gamma = sc.config.gamma
    delta = sc.config.delta
    horizon = sc.horizon

    world = sc.initial
    room_goals: list[GoalSpec] = []
    members: set[str] = set()
    gamma_events = BeliefBase(gamma)
    gamma_fluents: dict[str, tuple[Term, int, str]] = {}
    models = {a: AgentModel(a) for a in sc.agents}
    for m in models.values():
        m.refresh_fluents(sc.initial.fluents(), 0, PERCEIVED)

    pending: dict[int, list[Intervention]] = {}
    delivered: set[tuple[str, str]] = set()
    interventions: list[Intervention] = []
    perception_log: list[Formula] = []
    ec_events: dict[int, list[Term]] = {}
    ticks: list[TickRecord] = []
    queries: list[QueryRecord] = []
    gamma_base_log: dict[int, list[str]] = {}

    by_time: dict[int, list[ScriptEvent]] = {}
    for ev in sc.script:
        by_time.setdefault(ev.time, []).append(ev)
    query_times: dict[int, list[BeliefQuery]] = {}
    for t, q in sc.queries:
        query_times.setdefault(t, []).append(q)

    def perceive_event(t: int, term: Term, observers, absentees):
        ec_events.setdefault(t, []).append(term)
        gamma_events.add(_happens(term, t), t, PERCEIVED)
        for x in sorted(observers):
            if x == gamma:
                continue
            perception_log.append(
                F.Perceives(Constant(x, AGENT), numeral(t), _happens(term, t))
            )
            models[x].events.add(_happens(term, t), t, PERCEIVED)
            for y in sorted(absentees):
                if y == x:
                    continue
                missed = F.Not(
                    F.Atom(
                        FunctionApplication(
                            "holds",
                            (
                                FunctionApplication(
                                    "vicinity", (Constant(y, AGENT), term)
                                ),
                                numeral(t),
                            ),
                        )
                    )
                )
                perception_log.append(
                    F.Perceives(Constant(x, AGENT), numeral(t), missed)
                )

    for t in range(horizon + 1):
        record = TickRecord(time=t)
        present_before = set(members)
        tick_events = by_time.get(t, [])
        enters_now = {e.agent for e in tick_events if e.kind == "enter"}
        leaves_now = {e.agent for e in tick_events if e.kind == "leave"}
        observers = set(present_before)
        absentees = set(sc.agents) - present_before

        plog_start = len(perception_log)

        # deliver scheduled interventions first: the room speaks, the
        # addressee (and everyone present) hears
        for iv in pending.pop(t, []):
            term_said = iv.as_formula()
            record.said.append(F.render(term_said))
            interventions.append(iv)
            delivered.add((iv.addressee, canonical(iv.content)))
            if iv.addressee in models:
                model = models[iv.addressee]
                model.events.add(iv.content, t, TOLD)
                _apply_goal_news(model, iv.content, t)

        # script events
        for ev in tick_events:
            term = ev.event_term(sig)
            actor_observers = observers | {ev.agent}
            if ev.kind == "move":
                try:
                    world = apply_move(world, ev.move)
                except IllegalMove as exc:
                    record.blocked.append(f"{ev.move.render()} ({exc})")
                    continue
                record.events.append(F.render(_happens(term, t)))
                perceive_event(t, term, actor_observers, absentees)
            elif ev.kind == "attempt":
                reason = _blocked_reason(world, ev.move, room_goals)
                record.blocked.append(
                    f"{ev.move.render()} by {ev.agent}"
                    + (f" ({reason})" if reason else "")
                )
                perceive_event(t, term, actor_observers, absentees)
            elif ev.kind == "enter":
                members.add(ev.agent)
                record.events.append(F.render(_happens(term, t)))
                perceive_event(t, term, actor_observers, absentees)
            elif ev.kind == "leave":
                members.discard(ev.agent)
                record.events.append(F.render(_happens(term, t)))
                perceive_event(t, term, actor_observers, absentees)
            elif ev.kind in ("setgoal", "dropgoal"):
                if ev.kind == "setgoal":
                    room_goals = [ev.goal]
                else:
                    room_goals = [
                        g
                        for g in room_goals
                        if canonical(g.condition) != canonical(ev.goal.condition)
                    ]
                record.events.append(F.render(_happens(term, t)))
                perceive_event(t, term, actor_observers, absentees)
                for x in sorted(actor_observers):
                    if x == gamma or x not in models:
                        continue
                    if ev.kind == "setgoal":
                        models[x].set_goals([ev.goal], t, PERCEIVED)
                    else:
                        models[x].drop_goal(ev.goal.condition)

        # perception of the resulting configuration
        state_perceivers = present_before | enters_now
        gamma_fluents = {
            render_term(f): (f, t, PERCEIVED)
            for f in sorted(world.fluents(), key=render_term)
        }
        for x in sorted(state_perceivers):
            models[x].refresh_fluents(world.fluents(), t, PERCEIVED)

        record.perceptions = [
            F.render(p) for p in perception_log[plog_start:]
        ]

        # divergence detection for agents present through the tick
        salient = [
            e.formula
            for e in gamma_events.items()
            if _is_goal_news(e.formula)
        ]
        gamma_goal_base = BeliefBase(gamma)
        for g in room_goals:
            gamma_goal_base.add(_goal_atom(g), t, PERCEIVED)
        for s in salient:
            gamma_goal_base.add(s, t, PERCEIVED)
        for x in sorted(present_before - {gamma}):
            model = models[x]
            agent_base = model.goal_base()
            for e in model.events.items():
                agent_base.add(e.formula, e.acquired_at, e.source)
            facts = _goal_exclusivity(gamma_goal_base, agent_base)
            divs = detect_divergence(
                gamma_goal_base, agent_base, facts=facts,
                salient=salient, at=t, sig=sig,
            )
            for d in divs:
                record.detections.append(f"{d.kind} {x} {F.render(d.content)}")
                if d.kind == MISSING_BELIEF:
                    key = (x, canonical(d.content))
                    scheduled = any(
                        (iv.addressee, canonical(iv.content)) == key
                        for ivs in pending.values()
                        for iv in ivs
                    )
                    if key not in delivered and not scheduled:
                        iv = make_intervention(d, sc.config)
                        pending.setdefault(iv.time, []).append(iv)
                elif d.kind == FALSE_BELIEF:
                    record.display.extend(
                        _goal_comparison(sc, world, room_goals, model, sig, budget)
                    )

        record.state = sorted(render_term(f) for f in world.fluents())
        record.members = sorted(members)
        gamma_base_log[t] = sorted(gamma_fluents)

        # queries read the post-effect state
        for q in query_times.get(t, []):
            queries.append(_answer_query(sc, q, t, world, models, sig, budget))

        ticks.append(record)

    domain = _session_domain(sc)
    timeline = simulate(domain, ec_events, horizon, sig)

    return SessionTrace(
        ticks=ticks,
        queries=queries,
        interventions=interventions,
        timeline=timeline,
        gamma_base=gamma_base_log,
        models=models,
        perception_log=perception_log,
    )


def _happens(term: Term, t: int) -> Formula:
    return F.Atom(FunctionApplication("happens", (term, numeral(t))))


def _is_goal_news(f: Formula) -> bool:
    if not isinstance(f, F.Atom):
        return False
    t = f.term
    if not (isinstance(t, FunctionApplication) and t.symbol == "happens"):
        return False
    ev = t.arguments[0]
    return isinstance(ev, FunctionApplication) and ev.symbol in ("setGoal", "dropGoal")


def _apply_goal_news(model: AgentModel, content: Formula, t: int) -> None:
    """Being told about a goal-change event also corrects the modeled
    goal set."""
    if not _is_goal_news(content):
        return
    ev = content.term.arguments[0]
    cond = F.Atom(ev.arguments[0])
    if ev.symbol == "setGoal":
        model.set_goals([GoalSpec(cond, 1)], t, TOLD)
    else:
        model.drop_goal(cond)


def _goal_exclusivity(*bases: BeliefBase) -> list[Formula]:
    """The room runs one goal set: distinct believed goal atoms exclude
    each other."""
    atoms: dict[str, Formula] = {}
    for base in bases:
        for e in base.items():
            f = e.formula
            if (
                isinstance(f, F.Atom)
                and isinstance(f.term, FunctionApplication)
                and f.term.symbol == "goal"
            ):
                atoms[canonical(f)] = f
    keys = sorted(atoms)
    out = []
    for i, k1 in enumerate(keys):
        for k2 in keys[i + 1 :]:
            out.append(F.Not(F.And((atoms[k1], atoms[k2]))))
    return out


def _blocked_reason(world: WorldState, move: Move, goals: list[GoalSpec]) -> str:
    try:
        nxt = apply_move(world, move)
    except IllegalMove as exc:
        return str(exc)
    for g in goals:
        if condition_holds(g.condition, world) and not condition_holds(g.condition, nxt):
            return f"conflicts with active goal {F.render(g.condition)}"
    return "conflicts with the room's plan"


def _goal_comparison(sc, world, room_goals, model: AgentModel, sig, budget) -> list[str]:
    """Side-by-side record: the room's goals with a plan, and the agent's
    believed goals with a plan from the agent's believed configuration."""
    out = []
    room_plan = "-"
    if room_goals:
        p = plan(PlanningProblem(world, tuple(room_goals)), budget, sig)
        room_plan = (
            " ".join(m.render() for m in p.steps) or "(already satisfied)"
            if hasattr(p, "steps")
            else "(none)"
        )
        out.append(
            f"room goals: {', '.join(F.render(g.condition) for g in room_goals)}"
            f" | plan: {room_plan}"
        )
    believed = [v[0] for v in model.goals.values()]
    if believed:
        state = model.believed_state(sc.blocks) or world
        p = plan(PlanningProblem(state, tuple(believed)), budget, sig)
        agent_plan = (
            " ".join(m.render() for m in p.steps) or "(already satisfied)"
            if hasattr(p, "steps")
            else "(none)"
        )
        out.append(
            f"{model.name} believes goals: "
            f"{', '.join(F.render(g.condition) for g in believed)}"
            f" | plan: {agent_plan}"
        )
    return out


def _answer_query(
    sc: Scenario, q: BeliefQuery, t: int, world, models, sig, budget
) -> QueryRecord:
    var = q.variable()
    if sig.subsort(BLOCK, var.sort):
        candidates = [Constant(b, BLOCK) for b in sorted(sc.blocks)]
        if sig.subsort(SURFACE, var.sort) or var.sort == SURFACE:
            candidates.append(Constant(TABLE, SURFACE))
    elif var.sort == AGENT:
        candidates = [Constant(a, AGENT) for a in sorted(sc.agents)]
    else:
        raise ScenarioError(f"unsupported query variable sort {var.sort}")

    gamma = sc.config.gamma
    subject_fluents = (
        {render_term(f): (f, t, PERCEIVED) for f in sorted(world.fluents(), key=render_term)}
        if q.subject == gamma
        else models[q.subject].fluents
    )
    subj = Constant(q.subject, AGENT)
    premises = [
        F.Believes(subj, numeral(t), F.Atom(FunctionApplication("holds", (f, numeral(t)))))
        for f, _, _ in (subject_fluents[k] for k in sorted(subject_fluents))
    ]
    answers = []
    for cand in candidates:
        instance = substitute(
            F.Atom(FunctionApplication("holds", (q.pattern, numeral(t)))),
            Substitution({var: cand}),
        )
        goal = F.Believes(subj, numeral(t), instance)
        res = prove(premises, goal, budget=budget, sig=sig)
        if res.proved:
            answers.append((render_term(cand), F.render(goal)))
    return QueryRecord(
        time=t,
        subject=q.subject,
        pattern=render_term(q.pattern),
        answers=answers,
    )


def _session_domain(sc: Scenario) -> DomainRules:
    """Blocks dynamics plus room membership as a fluent."""
    base = as_ec_domain(sc.initial)
    a = Variable("a", AGENT)
    in_room = FunctionApplication("inRoom", (a,))
    initiates = base.initiates + (
        EffectRule(FunctionApplication("enters", (a,)), in_room),
    )
    terminates = base.terminates + (
        EffectRule(FunctionApplication("leaves", (a,)), in_room),
    )
    return DomainRules(initiates=initiates, terminates=terminates, initially=base.initially)


# -- scenario files ----------------------------------------------------------


def load_scenario(path: str, sig: Signature | None = None) -> Scenario:
    """`.scn` files, line-based: `block NAME`, `agent NAME`,
    `on BLOCK BLOCK|table`, `overseer NAME`, `delta K`,
    `at T enter AGENT | leave AGENT | move AGENT stack X Y |
     move AGENT unstack X Y | setgoal AGENT PRIO FORMULA |
     dropgoal AGENT FORMULA | attempt AGENT stack X Y |
     attempt AGENT unstack X Y`,
    `query T SUBJECT PATTERN`.  Errors are reported exhaustively with
    line numbers."""
    blocks: list[str] = []
    agents: list[str] = []
    placements: dict[str, str] = {}
    overseer = "cir"
    delta = 1
    raw_events: list[tuple[int, list[str], str]] = []
    raw_queries: list[tuple[int, list[str], str]] = []
    errors: list[str] = []

    with open(path, encoding="ascii") as fh:
        for lineno, rawline in enumerate(fh, start=1):
            line = rawline.strip()
            if not line or line.startswith(";"):
                continue
            parts = line.split()
            head = parts[0]
            try:
                if head == "block" and len(parts) == 2:
                    blocks.append(parts[1])
                elif head == "agent" and len(parts) == 2:
                    agents.append(parts[1])
                elif head == "on" and len(parts) == 3:
                    placements[parts[1]] = TABLE if parts[2] == "table" else parts[2]
                elif head == "overseer" and len(parts) == 2:
                    overseer = parts[1]
                elif head == "delta" and len(parts) == 2:
                    delta = int(parts[1])
                elif head == "at" and len(parts) >= 3:
                    raw_events.append((lineno, parts, line))
                elif head == "query" and len(parts) >= 4:
                    raw_queries.append((lineno, parts, line))
                else:
                    errors.append(f"{path}:{lineno}: unrecognized line: {line}")
            except ValueError as exc:
                errors.append(f"{path}:{lineno}: {exc}")

    sig = world_signature(blocks, sig)
    extra = {a: AGENT for a in agents if a not in sig.constants}
    if overseer not in sig.constants:
        extra[overseer] = AGENT
    sig = sig.with_constants(extra)

    script: list[ScriptEvent] = []
    for lineno, parts, line in raw_events:
        try:
            t = int(parts[1])
            kind = parts[2]
            if kind in ("enter", "leave") and len(parts) == 4:
                script.append(ScriptEvent(t, kind, parts[3]))
            elif kind in ("move", "attempt") and len(parts) == 7:
                agent, mk, x, y = parts[3], parts[4], parts[5], parts[6]
                script.append(ScriptEvent(t, kind, agent, move=Move(mk, x, y)))
            elif kind == "setgoal" and len(parts) >= 6:
                agent, prio = parts[3], int(parts[4])
                cond = parse_formula(" ".join(parts[5:]), sig)
                script.append(
                    ScriptEvent(t, kind, agent, goal=GoalSpec(cond, prio))
                )
            elif kind == "dropgoal" and len(parts) >= 5:
                agent = parts[3]
                cond = parse_formula(" ".join(parts[4:]), sig)
                script.append(ScriptEvent(t, kind, agent, goal=GoalSpec(cond, 0)))
            else:
                errors.append(f"{path}:{lineno}: unrecognized event: {line}")
        except (ValueError, ParseError) as exc:
            errors.append(f"{path}:{lineno}: {exc}")

    queries: list[tuple[int, BeliefQuery]] = []
    for lineno, parts, line in raw_queries:
        try:
            t = int(parts[1])
            subject = parts[2]
            pattern = parse_term(" ".join(parts[3:]), sig, (FLUENT,))
            queries.append((t, BeliefQuery(subject, pattern)))
        except (ValueError, ParseError, ScenarioError) as exc:
            errors.append(f"{path}:{lineno}: {exc}")

    on = {b: placements.get(b, TABLE) for b in blocks}
    try:
        initial = WorldState.make(on)
        initial.validate()
    except ValueError as exc:
        errors.append(f"{path}: {exc}")
        initial = WorldState.all_on_table(blocks)

    config = RequirementConfig(
        gamma=overseer, delta=delta, agents_in_scope=tuple(sorted(agents))
    )
    scenario = Scenario(
        blocks=blocks,
        agents=agents,
        initial=initial,
        script=sorted(script, key=lambda e: (e.time,)),
        queries=sorted(queries, key=lambda tq: tq[0]),
        config=config,
        sig=sig,
    )
    errors.extend(f"{path}: {p}" for p in scenario.validate())
    if errors:
        raise ScenarioError("\n".join(errors))
    return scenario
