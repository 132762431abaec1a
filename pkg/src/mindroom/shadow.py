"""Modal reasoning by shadowing.

The prover alternates two moves until the goal falls out or nothing new
can be said:

  * freeze every maximal modal subformula into an opaque atom and hand
    the now-extensional problem to the first-order core;
  * apply the modal inference schemata forward, and recurse goal-directed
    through attitude contexts (belief and knowledge are closed under the
    calculus within an agent's context, bounded by modal depth).

Quantified formulae containing modal operators are instantiated over the
ground terms of the problem before shadowing, so frozen atoms are closed
and equality reasoning can never reach inside an attitude.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from . import formulas as F
from .formulas import Formula, free_variables, is_extensional, is_modal, subformulas
from .foprover import (
    EXHAUSTED,
    NOT_PROVED,
    PROVED,
    Budget,
    BudgetClock,
    ProofResult,
    Step,
    prove_fo,
    saturate_consequences,
)
from .sorts import AGENT, BOOLEAN, FunctionDecl, Signature
from .terms import (
    Constant,
    FunctionApplication,
    Term,
    Variable,
    is_ground,
    render_term,
    subterms,
    term_sort,
    time_leq,
)
from .transform import Substitution, canonical, substitute

ALL_RULES = frozenset(
    {"I_K", "I_B", "I_1", "I_2", "I_3", "I_4", "D_PK", "D_KB", "D_CB", "C_INST"}
)


@dataclass(frozen=True)
class SchemaSet:
    rules: frozenset[str] = ALL_RULES
    modal_depth_bound: int = 3
    round_bound: int = 8

    def __post_init__(self):
        unknown = set(self.rules) - ALL_RULES
        if unknown:
            raise ValueError(f"unknown schema rules: {sorted(unknown)}")
        if self.modal_depth_bound <= 0 or self.round_bound <= 0:
            raise ValueError("depth and round bounds must be positive")

    def has(self, rule: str) -> bool:
        return rule in self.rules

    def without(self, *names: str) -> "SchemaSet":
        return SchemaSet(
            rules=self.rules - set(names),
            modal_depth_bound=self.modal_depth_bound,
            round_bound=self.round_bound,
        )


class ShadowMap:
    """Bijection between canonical modal subformulae and reserved "$"
    atoms.  Closed subformulae map to nullary atoms; open ones map to
    atoms applied to their free extensional variables.  Keys are
    alpha-normal renderings, so alpha-variants share one atom."""

    def __init__(self):
        self._atoms: dict[str, tuple[str, tuple[str, ...]]] = {}
        self._originals: dict[str, Formula] = {}
        self.decls: dict[str, FunctionDecl] = {}
        self.consts: dict[str, str] = {}

    def atom_for(self, f: Formula) -> F.Atom:
        import hashlib

        fv = sorted(free_variables(f), key=lambda v: (v.name, v.sort))
        # the key ignores the particular free-variable names
        placeholder = Substitution(
            {v: Variable(f"_f{i}", v.sort) for i, v in enumerate(fv)}
        )
        key = canonical(substitute(f, placeholder))
        if key not in self._atoms:
            # content-derived name: any map shadows the same subformula to
            # the same atom, so recorded derivations replay byte-for-byte
            name = "$s" + hashlib.blake2s(key.encode()).hexdigest()[:12]
            sorts = tuple(v.sort for v in fv)
            self._atoms[key] = (name, sorts)
            self._originals[name] = f
            if sorts:
                self.decls[name] = FunctionDecl(name, tuple((s,) for s in sorts), BOOLEAN)
            else:
                self.consts[name] = BOOLEAN
        name, _ = self._atoms[key]
        if not fv:
            return F.Atom(Constant(name, BOOLEAN))
        return F.Atom(FunctionApplication(name, tuple(fv)))

    def original(self, name: str) -> Formula | None:
        return self._originals.get(name)

    def extend_signature(self, sig: Signature) -> Signature:
        if self.decls:
            sig = sig.with_functions(dict(self.decls))
        if self.consts:
            sig = sig.with_constants(dict(self.consts))
        return sig


def shadow(f: Formula, smap: ShadowMap) -> Formula:
    """Replace every maximal modal subformula by its shadow atom.  The
    result contains no modal operator."""
    if is_modal(f):
        return smap.atom_for(f)
    if isinstance(f, (F.Atom, F.Equals)):
        return f
    if isinstance(f, F.Not):
        return F.Not(shadow(f.body, smap))
    if isinstance(f, (F.And, F.Or)):
        return type(f)(tuple(shadow(i, smap) for i in f.items))
    if isinstance(f, (F.Implies, F.Iff)):
        return type(f)(shadow(f.lhs, smap), shadow(f.rhs, smap))
    if isinstance(f, (F.ForAll, F.Exists)):
        return type(f)(f.var, shadow(f.body, smap))
    raise TypeError(f"not a formula: {f!r}")


# -- ground-term pools and instantiation --------------------------------


def _node_terms(g: Formula):
    if isinstance(g, F.Atom):
        return (g.term,)
    if isinstance(g, F.Equals):
        return (g.left, g.right)
    if isinstance(g, F.ATTITUDES):
        return (g.agent, g.time)
    if isinstance(g, F.Common):
        return (g.time,)
    if isinstance(g, F.Says):
        return (g.speaker, g.time)
    if isinstance(g, F.SaysTo):
        return (g.speaker, g.addressee, g.time)
    return ()


def _ground_pool(formulas: list[Formula], sig: Signature) -> dict[str, list[Term]]:
    """Ground terms of the problem grouped by sort.  Boolean candidates are
    reified extensional ground atoms."""
    by_sort: dict[str, dict[str, Term]] = {}

    def note(t: Term):
        if not is_ground(t):
            return
        # offset time terms are never instantiation values: letting them in
        # mints ever-later offsets through the requirement schemata and the
        # pool would creep one step per nesting level
        if isinstance(t, FunctionApplication) and t.symbol == "+":
            return
        try:
            s = term_sort(t, sig)
        except Exception:
            return
        if isinstance(t, Constant) and t.name in ("true", "false"):
            return
        by_sort.setdefault(s, {}).setdefault(render_term(t), t)

    for f in formulas:
        for g in subformulas(f):
            for t in _node_terms(g):
                for sub in subterms(t):
                    note(sub)
    return {s: [m[k] for k in sorted(m)] for s, m in by_sort.items()}


_INSTANCE_CAP = 4096


def herbrand_instances(
    work: list[Formula],
    goal: Formula,
    sig: Signature,
    pool: dict[str, list[Term]] | None = None,
) -> list[tuple[Formula, Formula, Substitution]]:
    """Ground instances of universally quantified formulae whose bodies
    contain modal operators.  Extensional quantified formulae are left to
    the first-order core.  Returns (instance, source, binding) triples.

    The term pool defaults to the ground terms of the problem itself;
    callers that iterate fix the pool once, so instantiation-created
    terms (such as ever-later time offsets) never feed re-instantiation."""
    if pool is None:
        pool = _ground_pool(work + [goal], sig)
    out: list[tuple[Formula, Formula, Substitution]] = []
    for f in work:
        prefix: list[Variable] = []
        body = f
        while isinstance(body, F.ForAll):
            prefix.append(body.var)
            body = body.body
        if not prefix or is_extensional(body):
            continue
        pools = []
        for v in prefix:
            cands = [
                t
                for s, terms in sorted(pool.items())
                if sig.subsort(s, v.sort)
                for t in terms
            ]
            pools.append(cands)
        total = 1
        for c in pools:
            total *= len(c)
        if total == 0 or total > _INSTANCE_CAP:
            continue
        for combo in product(*pools):
            s = Substitution(dict(zip(prefix, combo)))
            out.append((substitute(body, s), f, s))
    return out


# -- forward schema application -----------------------------------------


def _agents_in(formulas: list[Formula], sig: Signature) -> list[Term]:
    seen: dict[str, Term] = {}
    for f in formulas:
        for g in subformulas(f):
            for t in _node_terms(g):
                for sub in subterms(t):
                    if isinstance(sub, Constant) and sig.subsort(sub.sort, AGENT):
                        seen.setdefault(sub.name, sub)
    return [seen[k] for k in sorted(seen)]


def _common_chains(
    f: F.Common, agents: list[Term], schemas: SchemaSet
) -> list[tuple[str, Formula]]:
    """Bounded unrolling of common knowledge: attitude chains over the
    mentioned agents, no immediate repetition, length up to the modal
    depth bound."""
    depth = schemas.modal_depth_bound if schemas.has("C_INST") else 1
    chains: list[list[Term]] = [[a] for a in agents]
    i = 0
    while i < len(chains):
        chain = chains[i]
        if len(chain) < depth:
            chains.extend(chain + [a] for a in agents if a != chain[-1])
        i += 1
    out = []
    for node, rule in ((F.Knows, "I_3"), (F.Believes, "D_CB")):
        if not schemas.has(rule):
            continue
        for chain in chains:
            g: Formula = f.body
            for a in reversed(chain):
                g = node(a, f.time, g)
            out.append((rule, g))
    return out


def apply_schemata(
    base, schemas: SchemaSet, sig: Signature | None = None
) -> set[Formula]:
    """One forward round: all conclusions a single application of each
    enabled schema draws from members of base."""
    from .sorts import default_signature

    sig = sig or default_signature()
    pool = sorted(base, key=canonical)
    existing = {canonical(f) for f in pool}
    agents = _agents_in(pool, sig)
    out: dict[str, Formula] = {}

    def add(g: Formula):
        key = canonical(g)
        if key not in existing and key not in out:
            out[key] = g

    for f in pool:
        if isinstance(f, F.Perceives) and schemas.has("D_PK"):
            add(F.Knows(f.agent, f.time, f.body))
        if isinstance(f, F.Knows):
            if schemas.has("D_KB"):
                add(F.Believes(f.agent, f.time, f.body))
            if schemas.has("I_4"):
                add(f.body)
        if isinstance(f, F.Common):
            for _, g in _common_chains(f, agents, schemas):
                add(g)
    return set(out.values())


# -- attitude contexts ----------------------------------------------------


@dataclass
class _CtxEntry:
    body: Formula
    source: Formula
    rule: str


def attitude_context(
    agent: Term, time: Term, pool: list[Formula], kind: str, schemas: SchemaSet
) -> list[_CtxEntry]:
    """Formulae available inside an agent's attitude context at a time:
    bodies of this agent's attitudes at earlier-or-equal times, plus
    common knowledge, which yields its content and persists as common."""
    out: list[_CtxEntry] = []
    for f in pool:
        if kind == "belief":
            if isinstance(f, F.Believes) and f.agent == agent and time_leq(f.time, time):
                out.append(_CtxEntry(f.body, f, "I_B-context"))
            elif isinstance(f, F.Knows) and f.agent == agent and time_leq(f.time, time):
                if schemas.has("D_KB"):
                    out.append(_CtxEntry(f.body, f, "D_KB"))
            elif isinstance(f, F.Common) and time_leq(f.time, time):
                if schemas.has("D_CB"):
                    out.append(_CtxEntry(f.body, f, "D_CB"))
                    out.append(_CtxEntry(f, f, "C-persist"))
        else:
            if isinstance(f, F.Knows) and f.agent == agent and time_leq(f.time, time):
                out.append(_CtxEntry(f.body, f, "I_K-context"))
            elif isinstance(f, F.Common) and time_leq(f.time, time):
                if schemas.has("I_3"):
                    out.append(_CtxEntry(f.body, f, "I_3"))
                    out.append(_CtxEntry(f, f, "C-persist"))
    return out


# -- the prover -----------------------------------------------------------


@dataclass
class _Outcome:
    status: str
    steps: list[Step] | None = None


class _Engine:
    """One prove() invocation: shared clock, shadow map, memo tables, and
    clause caches across the whole recursion.

    The workhorse is `closure`: the goal-independent deductive closure of
    a premise set under instantiation, the forward schemata, and
    first-order unit consequences (frozen modal atoms that the
    first-order core derives outright).  Closures are cached, so the
    many subproblems spawned by attitude-context recursion share work.
    """

    def __init__(self, schemas: SchemaSet, budget: Budget, sig: Signature):
        self.schemas = schemas
        self.sig = sig
        self.budget = budget
        self.clock = BudgetClock(budget)
        self.smap = ShadowMap()
        self.memo: dict[tuple, _Outcome] = {}
        self.closure_memo: dict[tuple, tuple[dict, dict, bool]] = {}
        self.shadow_cache: dict[str, Formula] = {}
        self.skip_cache: dict[str, bool] = {}
        self.clause_cache: dict = {}
        self.fo_memo: dict[tuple, tuple] = {}
        self.pred_cache: dict[str, frozenset[str]] = {}
        self.hit_round_bound = False

    def prove(self, premises, goal: Formula, depth: int) -> _Outcome:
        pkeys = frozenset(canonical(p) for p in premises)
        key = (pkeys, canonical(goal), depth)
        if key in self.memo:
            return self.memo[key]
        self.memo[key] = _Outcome(NOT_PROVED)  # guard against re-entry
        base, prov, clean = self.closure(list(premises), goal)
        out = self._attack(base, prov, goal, depth, clean)
        self.memo[key] = out
        return out

    # .. goal-independent closure ..

    def closure(self, premises: list[Formula], goal: Formula) -> tuple[dict, dict, bool]:
        """Returns (base, prov, clean) where `clean` means every unit
        sweep truly saturated on a consistent set, so the base provably
        contains every first-order-derivable closed modal atom."""
        pool = _ground_pool(premises + [goal], self.sig)
        pool_key = frozenset(
            (s, render_term(t)) for s, ts in pool.items() for t in ts
        )
        pkeys = frozenset(canonical(p) for p in premises)
        ckey = (pkeys, pool_key)
        hit = self.closure_memo.get(ckey)
        if hit is not None:
            base, prov, clean = hit
            return dict(base), dict(prov), clean

        base: dict[str, Formula] = {}
        prov: dict[str, tuple] = {}
        for p in sorted(premises, key=canonical):
            k = canonical(p)
            if k not in base:
                base[k] = p
                prov[k] = ("premise", (), None)

        rounds = 0
        clean = True
        while self.clock.ok():
            grew = self._instantiate(base, prov, pool)
            work = [base[k] for k in sorted(base)]
            grew |= self._forward(base, prov, work)
            if not grew:
                grew, sweep_clean = self._unit_harvest(base, prov, work)
                clean = clean and sweep_clean
            if not grew:
                break
            rounds += 1
            if rounds > self.schemas.round_bound:
                self.hit_round_bound = True
                clean = False
                break
        if not self.clock.ok():
            clean = False

        self.closure_memo[ckey] = (dict(base), dict(prov), clean)
        # the result is its own fixpoint: record it so follow-up calls on
        # the closed set return immediately
        self.closure_memo[(frozenset(base), pool_key)] = (
            dict(base), dict(prov), clean,
        )
        return base, prov, clean

    def _instantiate(self, base, prov, pool) -> bool:
        work = [base[k] for k in sorted(base)]
        grew = False
        for inst, src, _ in herbrand_instances(work, F.TRUE, self.sig, pool):
            k = canonical(inst)
            if k not in base:
                base[k] = inst
                prov[k] = ("forall-elim", (canonical(src),), None)
                grew = True
        return grew

    def _forward(self, base, prov, work) -> bool:
        agents = _agents_in(work, self.sig)
        grew = False

        def add(g: Formula, rule: str, parent: Formula):
            nonlocal grew
            k = canonical(g)
            if k not in base:
                base[k] = g
                prov[k] = (rule, (canonical(parent),), None)
                grew = True

        for f in work:
            if isinstance(f, F.Perceives) and self.schemas.has("D_PK"):
                add(F.Knows(f.agent, f.time, f.body), "D_PK", f)
            if isinstance(f, F.Knows):
                if self.schemas.has("D_KB"):
                    add(F.Believes(f.agent, f.time, f.body), "D_KB", f)
                if self.schemas.has("I_4"):
                    add(f.body, "I_4", f)
            if isinstance(f, F.Common):
                # single forward level; nesting comes from the
                # goal-directed context recursion
                for a in agents:
                    if self.schemas.has("I_3"):
                        add(F.Knows(a, f.time, f.body), "I_3", f)
                    if self.schemas.has("D_CB"):
                        add(F.Believes(a, f.time, f.body), "D_CB", f)
        return grew

    def _unit_harvest(self, base, prov, work) -> tuple[bool, bool]:
        """One consequence sweep of the first-order core over the frozen
        base; every derived closed modal atom becomes a new fact.  Also
        reports whether the sweep truly saturated a consistent set."""
        keyed = [(canonical(f), f) for f in work]
        probe = [(k, f) for k, f in keyed if not self._skip_fo(f, k)]
        shadowed = []
        back: dict[str, Formula] = {}
        for k, f in probe:
            s = self._shadow(f, k)
            shadowed.append(s)
            back.setdefault(canonical(s), f)
        esig = self.smap.extend_signature(self.sig)
        slice_clock = self.clock.slice(max_time_ms=1_500, max_inferences=50_000)
        cons = saturate_consequences(
            shadowed,
            self.budget,
            sig=esig,
            clock=slice_clock,
            clause_cache=self.clause_cache,
        )
        self.clock.absorb(slice_clock)
        grew = False
        for lit, steps in cons.units:
            if lit.args or not lit.pred.startswith("$"):
                continue
            orig = self.smap.original(lit.pred)
            if orig is None:
                continue
            k = canonical(orig)
            if k in base:
                continue
            sub = self._wrap_fo(base, prov, steps, back, orig)
            base[k] = orig
            prov[k] = ("harvest", (), sub)
            grew = True
        return grew, cons.complete and not cons.inconsistent

    # .. goal-directed attack on a closed base ..

    def _attack(self, base, prov, goal: Formula, depth: int, clean: bool) -> _Outcome:
        for iteration in range(3):
            if not self.clock.ok():
                return _Outcome(EXHAUSTED)
            work = [base[k] for k in sorted(base)]
            gkey = canonical(goal)
            if gkey in base:
                steps: list[Step] = []
                self._place(gkey, base, prov, steps, {})
                return _Outcome(PROVED, steps)
            # a clean closure already holds every first-order-derivable
            # closed modal atom, so probing for an absent one is futile
            skip_probe = iteration == 0 and clean and is_modal(goal)
            if not skip_probe:
                res, back = self._fo(work, goal)
                if res.proved:
                    return _Outcome(
                        PROVED, self._fo_steps(base, prov, res, back, goal)
                    )
            direct = self._goal_directed(base, prov, work, goal, depth)
            if direct is not None:
                return direct
            if depth <= 0 or not self._targeted_harvest(
                base, prov, work, goal, depth, clean
            ):
                return _Outcome(NOT_PROVED)
        return _Outcome(EXHAUSTED)

    def _targeted_harvest(self, base, prov, work, goal, depth, clean) -> bool:
        """Establish modal atoms that sit next to the goal (inside the
        same formula) as standalone facts, via context recursion.  Runs at
        the current level so the harvested facts keep their provenance."""
        goal_keys = {
            canonical(g) for g in subformulas(goal) if is_modal(g)
        }
        cands: dict[str, Formula] = {}
        for f in work:
            fmods = {canonical(g): g for g in subformulas(f) if is_modal(g)}
            if not (set(fmods) & goal_keys):
                continue
            for k, g in fmods.items():
                if k not in base and k not in goal_keys and not free_variables(g):
                    cands.setdefault(k, g)

        def rank(key: str) -> tuple:
            order = {F.Perceives: 0, F.Knows: 1, F.Believes: 2}
            return (order.get(type(cands[key]), 3), key)

        grew = False
        for k in sorted(cands, key=rank):
            if not self.clock.ok():
                break
            cand = cands[k]
            sub = None
            if not clean:
                res, back = self._fo(work, cand)
                if res.proved:
                    sub = self._fo_steps(base, prov, res, back, cand)
            if sub is None:
                direct = self._goal_directed(base, prov, work, cand, depth - 1)
                if direct is not None and direct.status == PROVED:
                    sub = direct.steps
            if sub is not None:
                base[k] = cand
                prov[k] = ("harvest", (), sub)
                grew = True
        return grew

    def _goal_directed(self, base, prov, work, goal, depth) -> _Outcome | None:
        axiom = self._axiom_match(goal)
        if axiom is not None:
            return _Outcome(PROVED, [Step(f"{axiom}-axiom", (), formula=goal)])

        if isinstance(goal, F.And):
            subs = []
            for item in goal.items:
                r = self.prove(work, item, depth)
                if r.status != PROVED:
                    subs = None
                    break
                subs.append((item, r))
            if subs is not None:
                steps: list[Step] = []
                refs = []
                for item, r in subs:
                    steps.append(Step("conjunct", (), formula=item, sub=r.steps))
                    refs.append(len(steps) - 1)
                steps.append(Step("and-intro", tuple(refs), formula=goal))
                return _Outcome(PROVED, steps)

        if isinstance(goal, F.Common):
            for f in work:
                if (
                    isinstance(f, F.Common)
                    and time_leq(f.time, goal.time)
                    and canonical(f.body) == canonical(goal.body)
                ):
                    key = canonical(f)
                    steps, placed = [], {}
                    self._place(key, base, prov, steps, placed)
                    steps.append(Step("C-persist", (placed[key],), formula=goal))
                    return _Outcome(PROVED, steps)

        if depth > 0:
            kinds = []
            if isinstance(goal, F.Believes) and self.schemas.has("I_B"):
                kinds.append(("I_B", "belief"))
            if isinstance(goal, F.Knows) and self.schemas.has("I_K"):
                kinds.append(("I_K", "knowledge"))
            for rule, kind in kinds:
                ctx = attitude_context(goal.agent, goal.time, work, kind, self.schemas)
                if not ctx:
                    continue
                r = self.prove([e.body for e in ctx], goal.body, depth - 1)
                if r.status == PROVED:
                    used = _premise_keys(r.steps)
                    steps: list[Step] = []
                    placed: dict[str, int] = {}
                    refs = []
                    for e in ctx:
                        if canonical(e.body) not in used:
                            continue
                        skey = canonical(e.source)
                        self._place(skey, base, prov, steps, placed)
                        steps.append(Step(e.rule, (placed[skey],), formula=e.body))
                        refs.append(len(steps) - 1)
                    steps.append(Step(rule, tuple(refs), formula=goal, sub=r.steps))
                    return _Outcome(PROVED, steps)
        return None

    def _axiom_match(self, goal: Formula) -> str | None:
        """I_1 / I_2 axiom instances are provable outright."""
        if not isinstance(goal, F.Common) or not isinstance(goal.body, F.Implies):
            return None
        lhs, rhs = goal.body.lhs, goal.body.rhs
        if (
            self.schemas.has("I_1")
            and isinstance(lhs, F.Perceives)
            and isinstance(rhs, F.Knows)
            and lhs.agent == rhs.agent
            and lhs.time == rhs.time == goal.time
            and canonical(lhs.body) == canonical(rhs.body)
        ):
            return "I_1"
        if (
            self.schemas.has("I_2")
            and isinstance(lhs, F.Knows)
            and isinstance(rhs, F.Believes)
            and lhs.agent == rhs.agent
            and lhs.time == rhs.time == goal.time
            and canonical(lhs.body) == canonical(rhs.body)
        ):
            return "I_2"
        return None

    # .. the first-order layer ..

    def _skip_fo(self, f: Formula, key: str) -> bool:
        """Quantified formulae with modal bodies are represented in the
        first-order layer by their ground instances; the originals would
        only feed saturation noise."""
        if key not in self.skip_cache:
            body = f
            while isinstance(body, F.ForAll):
                body = body.body
            self.skip_cache[key] = body is not f and not is_extensional(body)
        return self.skip_cache[key]

    def _shadow(self, f: Formula, key: str) -> Formula:
        if key not in self.shadow_cache:
            self.shadow_cache[key] = shadow(f, self.smap)
        return self.shadow_cache[key]

    def _preds(self, f: Formula, key: str) -> frozenset[str]:
        if key not in self.pred_cache:
            preds = set()
            for g in subformulas(self._shadow(f, key)):
                if isinstance(g, F.Atom):
                    t = g.term
                    preds.add(t.symbol if isinstance(t, FunctionApplication) else t.name)
                elif isinstance(g, F.Equals):
                    preds.add("=")
            self.pred_cache[key] = frozenset(preds)
        return self.pred_cache[key]

    def _relevant_probe(self, keyed: list, goal: Formula, gkey: str) -> list:
        """Premises reachable from the goal through shared predicate
        symbols.  Equality premises always ride along (paramodulation can
        link clauses that share no predicate); a `false` goal asks about
        outright inconsistency, so everything is relevant then."""
        gpreds = self._preds(goal, gkey)
        if "false" in gpreds or "true" in gpreds:
            return keyed
        relevant = set(gpreds)
        pending = list(keyed)
        chosen = []
        for k, f in list(pending):
            if "=" in self._preds(f, k):
                chosen.append((k, f))
                relevant |= self._preds(f, k)
                pending.remove((k, f))
        changed = True
        while changed:
            changed = False
            for k, f in list(pending):
                preds = self._preds(f, k)
                if preds & relevant:
                    chosen.append((k, f))
                    relevant |= preds
                    pending.remove((k, f))
                    changed = True
        chosen.sort(key=lambda kf: kf[0])
        return chosen

    def _fo(self, work: list[Formula], goal: Formula):
        keyed = [(canonical(f), f) for f in work]
        probe = [(k, f) for k, f in keyed if not self._skip_fo(f, k)]
        gkey = canonical(goal)
        probe = self._relevant_probe(probe, goal, gkey)
        memo_key = (frozenset(k for k, _ in probe), gkey)
        if memo_key in self.fo_memo:
            return self.fo_memo[memo_key]
        shadowed = []
        back: dict[str, Formula] = {}
        for k, f in probe:
            s = self._shadow(f, k)
            shadowed.append(s)
            back.setdefault(canonical(s), f)
        sgoal = self._shadow(goal, gkey)
        esig = self.smap.extend_signature(self.sig)
        slice_clock = self.clock.slice(max_time_ms=700, max_inferences=12_000)
        res = prove_fo(
            shadowed,
            sgoal,
            self.budget,
            sig=esig,
            clock=slice_clock,
            clause_cache=self.clause_cache,
        )
        self.clock.absorb(slice_clock)
        self.fo_memo[memo_key] = (res, back)
        return res, back

    # .. derivation assembly ..

    def _place(self, key, base, prov, steps, placed) -> int:
        if key in placed:
            return placed[key]
        rule, parents, sub = prov.get(key, ("premise", (), None))
        refs = tuple(
            self._place(p, base, prov, steps, placed) for p in parents if p in base
        )
        steps.append(Step(rule, refs, formula=base[key], sub=sub))
        placed[key] = len(steps) - 1
        return placed[key]

    def _wrap_fo(self, base, prov, fo_steps: list[Step], back, concl: Formula):
        """Wrap an embedded first-order derivation as a subproof whose
        premises carry their full provenance back to real premises."""
        steps: list[Step] = []
        placed: dict[str, int] = {}
        refs = []
        for s in fo_steps:
            if s.rule == "premise" and s.formula is not None:
                orig = back.get(canonical(s.formula))
                if orig is not None:
                    k = canonical(orig)
                    if k not in placed:
                        if k in base:
                            self._place(k, base, prov, steps, placed)
                        else:
                            steps.append(Step("premise", (), formula=orig))
                            placed[k] = len(steps) - 1
                    refs.append(placed[k])
        steps.append(Step("fo-shadow", tuple(refs), formula=concl, sub=fo_steps))
        return steps

    def _fo_steps(self, base, prov, res: ProofResult, back, goal) -> list[Step]:
        used: list[str] = []
        seen = set()
        for s in res.derivation or []:
            if s.rule == "premise" and s.formula is not None:
                orig = back.get(canonical(s.formula))
                if orig is not None:
                    k = canonical(orig)
                    if k not in seen:
                        seen.add(k)
                        used.append(k)
        steps: list[Step] = []
        placed: dict[str, int] = {}
        for k in used:
            self._place(k, base, prov, steps, placed)
        steps.append(
            Step(
                "fo-shadow",
                tuple(placed[k] for k in used),
                formula=goal,
                sub=res.derivation,
            )
        )
        return steps


def _premise_keys(steps: list[Step] | None) -> set[str]:
    """Premise formulas consumed anywhere in a derivation, nested
    subproofs included."""
    out: set[str] = set()
    for s in steps or []:
        if s.rule == "premise" and s.formula is not None:
            out.add(canonical(s.formula))
        if s.sub:
            out |= _premise_keys(s.sub)
    return out


def prove(
    premises,
    goal: Formula,
    schemas: SchemaSet | None = None,
    budget: Budget | None = None,
    sig: Signature | None = None,
) -> ProofResult:
    """Prove a (possibly modal) goal from premises.

    Negative results are NotProvedSaturated when the schema closure
    quiesced within bounds and BudgetExhausted otherwise; the system
    never claims refutation.  Referential opacity holds throughout:
    equality never substitutes inside an attitude.
    """
    from .sorts import default_signature

    schemas = schemas or SchemaSet()
    budget = budget or Budget()
    sig = sig or default_signature()
    engine = _Engine(schemas, budget, sig)
    outcome = engine.prove(list(premises), goal, schemas.modal_depth_bound)
    if outcome.status == PROVED:
        return ProofResult(PROVED, outcome.steps)
    if outcome.status == EXHAUSTED or not engine.clock.ok():
        return ProofResult(EXHAUSTED, reason="modal search budget exhausted")
    return ProofResult(NOT_PROVED, reason="schema closure saturated")


def derivation_rules(steps: list[Step] | None) -> set[str]:
    """All rule names used anywhere in a derivation, nested parts included."""
    out: set[str] = set()
    for s in steps or []:
        out.add(s.rule)
        if s.sub:
            out |= derivation_rules(s.sub)
    return out
