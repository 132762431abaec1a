"""The overseer kernel.

Holds the formal requirement axioms for the room agent (gamma): the two
cognitive requirements (correct false beliefs, fill missing beliefs) and
the immersive requirements (vicinity-gated perception for ordinary
agents, omniscient perception for gamma).  On top of them it provides
the machine-checked derivation of the expectation-of-usefulness
property, belief-divergence detection, and intervention generation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import formulas as F
from .beliefs import BeliefBase
from .formulas import Formula
from .foprover import Budget, NOT_PROVED, PROVED, ProofResult, prove_fo
from .shadow import SchemaSet, derivation_rules, prove
from .sorts import (
    ACTIONTYPE,
    AGENT,
    BOOLEAN,
    EVENT,
    FLUENT,
    MOMENT,
    Signature,
    default_signature,
)
from .terms import Constant, FunctionApplication, Term, Variable, numeral, plus
from .transform import canonical


@dataclass(frozen=True)
class RequirementConfig:
    gamma: str = "cir"
    delta: int = 1
    agents_in_scope: tuple[str, ...] = ("h1", "h2")

    def __post_init__(self):
        if self.delta < 1:
            raise ValueError("delta must be at least 1 so that t < t + delta")
        if self.gamma in self.agents_in_scope:
            raise ValueError("the overseer is not one of the enclosed agents")

    @property
    def gamma_term(self) -> Constant:
        return Constant(self.gamma, AGENT)

    def signature(self, base: Signature | None = None) -> Signature:
        sig = base or default_signature()
        extra = {self.gamma: AGENT}
        for a in self.agents_in_scope:
            extra[a] = AGENT
        known = {n: s for n, s in extra.items() if n not in sig.constants}
        return sig.with_constants(known)


def _v(name: str, sort: str) -> Variable:
    return Variable(name, sort)


def requirement_axioms(cfg: RequirementConfig) -> list[Formula]:
    """The requirement axioms with gamma and delta substituted in: the two
    cognitive conditionals, both vicinity restrictions, the own-action
    vicinity rule, and the four omniscience biconditionals."""
    g = cfg.gamma_term
    t = _v("t", MOMENT)
    x = _v("x", AGENT)
    phi = _v("phi", BOOLEAN)
    f = _v("f", FLUENT)
    e = _v("e", EVENT)
    alpha = _v("alpha", ACTIONTYPE)
    zero = numeral(0)

    def says(content: Formula) -> Formula:
        return F.SaysTo(g, x, plus(t, cfg.delta), content)

    false_belief = F.ForAll(
        t,
        F.Common(
            t,
            F.ForAll(
                x,
                F.ForAll(
                    phi,
                    F.Implies(
                        F.And(
                            (
                                F.Believes(g, t, F.Atom(phi)),
                                F.Believes(g, t, F.Believes(x, t, F.Not(F.Atom(phi)))),
                            )
                        ),
                        says(F.Atom(phi)),
                    ),
                ),
            ),
        ),
    )
    missing_belief = F.ForAll(
        t,
        F.Common(
            t,
            F.ForAll(
                x,
                F.ForAll(
                    phi,
                    F.Implies(
                        F.And(
                            (
                                F.Believes(g, t, F.Atom(phi)),
                                F.Believes(g, t, F.Not(F.Believes(x, t, F.Atom(phi)))),
                            )
                        ),
                        says(F.Atom(phi)),
                    ),
                ),
            ),
        ),
    )

    def holds(fl: Term, at: Term) -> Formula:
        return F.Atom(FunctionApplication("holds", (fl, at)))

    def happens(ev: Term, at: Term) -> Formula:
        return F.Atom(FunctionApplication("happens", (ev, at)))

    def vic(who: Term, what: Term) -> Term:
        return FunctionApplication("vicinity", (who, what))

    not_gamma = F.Not(F.Equals(x, g))
    vicinity_fluents = F.Common(
        zero,
        F.ForAll(
            x,
            F.ForAll(
                t,
                F.ForAll(
                    f,
                    F.Implies(
                        not_gamma,
                        F.Implies(
                            F.Perceives(x, t, holds(f, t)), holds(vic(x, f), t)
                        ),
                    ),
                ),
            ),
        ),
    )
    vicinity_events = F.Common(
        zero,
        F.ForAll(
            x,
            F.ForAll(
                t,
                F.ForAll(
                    e,
                    F.Implies(
                        not_gamma,
                        F.Implies(
                            F.Perceives(x, t, happens(e, t)), holds(vic(x, e), t)
                        ),
                    ),
                ),
            ),
        ),
    )
    own_actions = F.Common(
        zero,
        F.ForAll(
            x,
            F.ForAll(
                alpha,
                F.ForAll(
                    t,
                    holds(vic(x, FunctionApplication("action", (x, alpha))), t),
                ),
            ),
        ),
    )

    def omniscience(var: Variable, maker) -> tuple[Formula, Formula]:
        pos = F.Common(
            zero,
            F.ForAll(
                t,
                F.ForAll(
                    var,
                    F.Iff(maker(var, t), F.Perceives(g, t, maker(var, t))),
                ),
            ),
        )
        neg = F.Common(
            zero,
            F.ForAll(
                t,
                F.ForAll(
                    var,
                    F.Iff(
                        F.Not(maker(var, t)),
                        F.Perceives(g, t, F.Not(maker(var, t))),
                    ),
                ),
            ),
        )
        return pos, neg

    fluents_pos, fluents_neg = omniscience(f, holds)
    events_pos, events_neg = omniscience(e, happens)

    return [
        false_belief,       # C_f1
        missing_belief,     # C_f2
        vicinity_fluents,   # I_f1 (fluents)
        vicinity_events,    # I_f1 (events)
        own_actions,        # I_f2
        fluents_pos,        # I_f3 (i)
        events_pos,         # I_f3 (ii)
        fluents_neg,        # I_f3 (iii)
        events_neg,         # I_f3 (iv)
    ]


AXIOM_NAMES = (
    "C_f1", "C_f2", "I_f1_fluents", "I_f1_events", "I_f2",
    "I_f3_i", "I_f3_ii", "I_f3_iii", "I_f3_iv",
)

ABLATABLE = {
    "C_f1": (0,),
    "C_f2": (1,),
    "I_f1": (2, 3),
    "I_f1_fluents": (2,),
    "I_f1_events": (3,),
    "I_f2": (4,),
    "I_f3_i": (5,),
    "I_f3_ii": (6,),
    "I_f3_iii": (7,),
    "I_f3_iv": (8,),
}


def perception_grounding(cfg: RequirementConfig) -> Formula:
    """Agents other than gamma come to believe that an event happened only
    by having perceived it when it happened.  Common knowledge; the
    usefulness-property derivation leans on its contrapositive."""
    g = cfg.gamma_term
    x = _v("x", AGENT)
    t = _v("t", MOMENT)
    t2 = _v("t2", MOMENT)
    e = _v("e", EVENT)
    happens = F.Atom(FunctionApplication("happens", (e, t)))
    return F.Common(
        numeral(0),
        F.ForAll(
            x,
            F.ForAll(
                t,
                F.ForAll(
                    t2,
                    F.ForAll(
                        e,
                        F.Implies(
                            F.Not(F.Equals(x, g)),
                            F.Implies(
                                F.Believes(x, t2, happens),
                                F.Perceives(x, t, happens),
                            ),
                        ),
                    ),
                ),
            ),
        ),
    )


def distinct_agents(names: list[Term]) -> list[Formula]:
    out = []
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            out.append(F.Not(F.Equals(a, b)))
    return out


@dataclass(frozen=True)
class Property1Instance:
    """The symbolic derivation by default; pass ground terms to replay a
    concrete scenario instantiation."""

    observer: Term = Constant("a", AGENT)
    absentee: Term = Constant("b", AGENT)
    event: Term = Constant("e", EVENT)
    event_time: Term = Constant("t", MOMENT)
    belief_time: Term | None = None  # defaults to event_time


def property1_problem(
    cfg: RequirementConfig,
    inst: Property1Instance | None = None,
    sig: Signature | None = None,
    ablate: str | None = None,
) -> tuple[list[Formula], Formula, Signature]:
    inst = inst or Property1Instance()
    g = cfg.gamma_term
    a, b, e = inst.observer, inst.absentee, inst.event
    t = inst.event_time
    bt = inst.belief_time or t

    sig = cfg.signature(sig)
    extra = {}
    for c in (a, b, e, t):
        if isinstance(c, Constant) and not c.is_numeral and c.name not in sig.constants:
            extra[c.name] = c.sort
    if extra:
        sig = sig.with_constants(extra)

    axioms = requirement_axioms(cfg)
    if ablate is not None:
        if ablate not in ABLATABLE:
            raise ValueError(f"unknown axiom name: {ablate}")
        drop = set(ABLATABLE[ablate])
        axioms = [ax for i, ax in enumerate(axioms) if i not in drop]

    happens = F.Atom(FunctionApplication("happens", (e, t)))
    missed = F.Not(
        F.Atom(
            FunctionApplication(
                "holds", (FunctionApplication("vicinity", (b, e)), t)
            )
        )
    )
    premises = axioms + [
        perception_grounding(cfg),
        *distinct_agents([a, b, g]),
        F.Perceives(a, t, happens),
        F.Perceives(a, t, missed),
        F.Believes(a, t, F.Believes(g, t, F.Not(F.Equals(b, g)))),
    ]
    goal = F.Believes(
        a, bt, F.SaysTo(g, b, plus(bt, cfg.delta), happens)
    )
    return premises, goal, sig


SKETCH_RULES = ("D_PK", "D_KB", "D_CB", "I_B")


def derive_property1(
    cfg: RequirementConfig,
    budget: Budget | None = None,
    inst: Property1Instance | None = None,
    ablate: str | None = None,
    schemas: SchemaSet | None = None,
    sig: Signature | None = None,
) -> ProofResult:
    """Machine-check the expectation-of-usefulness property: an agent that
    perceives an event another agent missed concludes that gamma will
    inform the other agent at t + delta."""
    premises, goal, sig = property1_problem(cfg, inst, sig, ablate)
    result = prove(premises, goal, schemas=schemas, budget=budget, sig=sig)
    if result.proved and ablate is None:
        used = derivation_rules(result.derivation)
        missing = [r for r in SKETCH_RULES if r not in used]
        if missing:
            return ProofResult(
                NOT_PROVED,
                reason=f"derivation does not exercise {missing}",
            )
    return result


# -- divergence detection and interventions ------------------------------

FALSE_BELIEF = "false-belief"
MISSING_BELIEF = "missing-belief"


@dataclass(frozen=True)
class Divergence:
    kind: str
    content: Formula  # the corrective truth, never its negation
    agent: str
    detected_at: int


@dataclass(frozen=True)
class Intervention:
    speaker: str
    addressee: str
    time: int
    content: Formula
    cause: Divergence

    def as_formula(self) -> Formula:
        return F.SaysTo(
            Constant(self.speaker, AGENT),
            Constant(self.addressee, AGENT),
            numeral(self.time),
            self.content,
        )


def detect_divergence(
    gamma_beliefs: BeliefBase,
    agent_model: BeliefBase,
    facts: list[Formula] | None = None,
    salient: list[Formula] | None = None,
    at: int = 0,
    budget: Budget | None = None,
    sig: Signature | None = None,
) -> list[Divergence]:
    """Compare gamma's beliefs against gamma's model of one agent.

    A false belief is a gamma-believed truth the model contradicts
    (directly, or jointly with the declared background facts).  A missing
    belief is a gamma-believed member of the salient set absent from the
    model.  Output order is canonical."""
    sig = sig or default_signature()
    budget = budget or Budget(max_time_ms=2_000)
    facts = facts or []
    out: list[Divergence] = []
    model_keys = {canonical(f) for f in agent_model.formulas()}

    for truth in gamma_beliefs.formulas():
        negated = truth.body if isinstance(truth, F.Not) else F.Not(truth)
        contradicted = canonical(negated) in model_keys
        if not contradicted and facts:
            for believed in agent_model.formulas():
                if canonical(believed) == canonical(truth):
                    continue
                r = prove_fo(
                    facts + [truth, believed], F.FALSE, budget=budget, sig=sig
                )
                if r.proved:
                    contradicted = True
                    break
        if contradicted:
            out.append(Divergence(FALSE_BELIEF, truth, agent_model.owner, at))

    for want in salient or []:
        if gamma_beliefs.holds(want) and canonical(want) not in model_keys:
            out.append(Divergence(MISSING_BELIEF, want, agent_model.owner, at))

    out.sort(key=lambda d: (d.kind, canonical(d.content)))
    return out


def make_intervention(div: Divergence, cfg: RequirementConfig) -> Intervention:
    """Schedule the corrective utterance at detection time + delta."""
    if div.agent == cfg.gamma:
        raise ValueError("the overseer never addresses itself")
    return Intervention(
        speaker=cfg.gamma,
        addressee=div.agent,
        time=div.detected_at + cfg.delta,
        content=div.content,
        cause=div,
    )
