"""Derivation replay: check a Proved result step by step, without search.

Each step must follow from its referenced premises under the named
rule's definition.  First-order steps are rechecked by recomputing the
rule application; modal schema steps are structural checks; nested
subproofs replay recursively against the premises their parent step
grants them.
"""

from __future__ import annotations

from . import formulas as F
from .foprover import (
    Clause,
    Prover,
    Budget,
    BudgetClock,
    Step,
    canonical_clause,
    formula_clauses,
)
from .formulas import Formula
from .sorts import Signature, default_signature
from .terms import FunctionApplication, Term, time_leq
from .transform import canonical


class ReplayError(Exception):
    def __init__(self, index: int, step: Step, message: str):
        super().__init__(f"step {index} ({step.rule}): {message}")
        self.index = index


def replay(
    steps: list[Step],
    premises,
    goal: Formula | None = None,
    sig: Signature | None = None,
) -> bool:
    """Raise ReplayError at the first bad step; True when every step
    checks out and the last step concludes the goal (when given)."""
    sig = sig or default_signature()
    allowed = {canonical(p) for p in premises}
    fo_rules = {"cnf", "negated-goal", "goal-by-refutation", "resolve",
                "factor", "eqres", "paramod"}
    if any(s.rule in fo_rules for s in steps):
        marker = Step("fo", ())
        _replay_fo(0, marker, steps, allowed, goal, sig)
    else:
        _replay_steps(steps, allowed, sig)
    if goal is not None and steps:
        last = steps[-1]
        if last.formula is None or canonical(last.formula) != canonical(goal):
            raise ReplayError(len(steps) - 1, last, "final step is not the goal")
    return True


def _replay_steps(steps: list[Step], allowed: set[str], sig: Signature) -> None:
    for i, step in enumerate(steps):
        checker = _CHECKERS.get(step.rule)
        if checker is None:
            raise ReplayError(i, step, "unknown rule")
        checker(i, step, steps, allowed, sig)


def _premise_of(steps, idx):
    return steps[idx]


def _fml(i, step, idx, steps):
    ref = steps[idx]
    if ref.formula is None:
        raise ReplayError(i, step, f"premise step {idx} has no formula")
    return ref.formula


def _check_premise(i, step, steps, allowed, sig):
    if step.formula is None:
        raise ReplayError(i, step, "premise without a formula")
    if canonical(step.formula) not in allowed:
        raise ReplayError(i, step, "premise not among the granted formulas")


def _check_forall_elim(i, step, steps, allowed, sig):
    src = _fml(i, step, step.premises[0], steps)
    inst = step.formula
    prefix = []
    body = src
    while isinstance(body, F.ForAll):
        prefix.append(body.var)
        body = body.body
    if not prefix:
        raise ReplayError(i, step, "source is not universally quantified")
    if not _matches_instance(body, inst, set(prefix)):
        raise ReplayError(i, step, "not an instance of the quantified body")


def _matches_instance(pattern: Formula, instance: Formula, vars_) -> bool:
    """Structural one-way match of formulae, binding the prefix variables."""
    bind: dict = {}

    def terms_match(p: Term, t: Term) -> bool:
        from .terms import Variable, numeral_value, split_offset

        if isinstance(p, Variable) and p in vars_:
            if p in bind:
                return bind[p] == t
            bind[p] = t
            return True
        if isinstance(p, FunctionApplication):
            if p.symbol == "+":
                # offset patterns may normalize to numerals or folded sums
                base, k = split_offset(p)
                if isinstance(base, Variable) and base in vars_:
                    if base in bind:
                        from .terms import plus

                        return plus(bind[base], k) == t
                    n = numeral_value(t)
                    if n is not None and n >= k:
                        from .terms import numeral

                        bind[base] = numeral(n - k)
                        return True
                    tb, tk = split_offset(t)
                    if tk >= k:
                        from .terms import plus as mkplus

                        bind[base] = mkplus(tb, tk - k)
                        return True
                    return False
            return (
                isinstance(t, FunctionApplication)
                and t.symbol == p.symbol
                and len(t.arguments) == len(p.arguments)
                and all(terms_match(a, b) for a, b in zip(p.arguments, t.arguments))
            )
        return p == t

    def go(p: Formula, f: Formula) -> bool:
        if type(p) is not type(f):
            return False
        if isinstance(p, F.Atom):
            return terms_match(p.term, f.term)
        if isinstance(p, F.Equals):
            return terms_match(p.left, f.left) and terms_match(p.right, f.right)
        if isinstance(p, F.Not):
            return go(p.body, f.body)
        if isinstance(p, (F.And, F.Or)):
            return len(p.items) == len(f.items) and all(
                go(a, b) for a, b in zip(p.items, f.items)
            )
        if isinstance(p, (F.Implies, F.Iff)):
            return go(p.lhs, f.lhs) and go(p.rhs, f.rhs)
        if isinstance(p, (F.ForAll, F.Exists)):
            return p.var == f.var and go(p.body, f.body)
        if isinstance(p, F.ATTITUDES):
            return (
                terms_match(p.agent, f.agent)
                and terms_match(p.time, f.time)
                and go(p.body, f.body)
            )
        if isinstance(p, F.Common):
            return terms_match(p.time, f.time) and go(p.body, f.body)
        if isinstance(p, F.Says):
            return (
                terms_match(p.speaker, f.speaker)
                and terms_match(p.time, f.time)
                and go(p.body, f.body)
            )
        if isinstance(p, F.SaysTo):
            return (
                terms_match(p.speaker, f.speaker)
                and terms_match(p.addressee, f.addressee)
                and terms_match(p.time, f.time)
                and go(p.body, f.body)
            )
        return False

    return go(pattern, instance)


def _check_d_pk(i, step, steps, allowed, sig):
    src = _fml(i, step, step.premises[0], steps)
    ok = (
        isinstance(src, F.Perceives)
        and step.formula == F.Knows(src.agent, src.time, src.body)
    )
    if not ok:
        raise ReplayError(i, step, "conclusion is not perception-to-knowledge")


def _check_d_kb(i, step, steps, allowed, sig):
    src = _fml(i, step, step.premises[0], steps)
    if isinstance(src, F.Knows):
        if step.formula == F.Believes(src.agent, src.time, src.body):
            return
        # context form: the known body enters the agent's belief context
        if canonical(step.formula) == canonical(src.body):
            return
    raise ReplayError(i, step, "conclusion is not knowledge-to-belief")


def _check_i4(i, step, steps, allowed, sig):
    src = _fml(i, step, step.premises[0], steps)
    if not (isinstance(src, F.Knows) and canonical(step.formula) == canonical(src.body)):
        raise ReplayError(i, step, "conclusion is not the known body")


def _check_chain(i, step, steps, allowed, sig):
    """Common knowledge instantiated to an attitude chain at its time, or
    its content entering an attitude context."""
    src = _fml(i, step, step.premises[0], steps)
    if not isinstance(src, F.Common):
        raise ReplayError(i, step, "source is not common knowledge")
    if canonical(step.formula) == canonical(src.body):
        return  # context form
    g = step.formula
    node = F.Knows if step.rule == "I_3" else F.Believes
    peeled = 0
    while isinstance(g, node) and time_leq(src.time, g.time):
        g = g.body
        peeled += 1
    if peeled == 0 or canonical(g) != canonical(src.body):
        raise ReplayError(i, step, "not a bounded attitude chain over the content")


def _check_c_persist(i, step, steps, allowed, sig):
    src = _fml(i, step, step.premises[0], steps)
    goal = step.formula
    ok = (
        isinstance(src, F.Common)
        and isinstance(goal, F.Common)
        and time_leq(src.time, goal.time)
        and canonical(src.body) == canonical(goal.body)
    )
    if not ok:
        raise ReplayError(i, step, "not persistence of common knowledge")


def _check_axiom(i, step, steps, allowed, sig):
    goal = step.formula
    if not (isinstance(goal, F.Common) and isinstance(goal.body, F.Implies)):
        raise ReplayError(i, step, "axiom conclusion malformed")
    lhs, rhs = goal.body.lhs, goal.body.rhs
    if step.rule == "I_1-axiom":
        ok = (
            isinstance(lhs, F.Perceives)
            and isinstance(rhs, F.Knows)
        )
    else:
        ok = isinstance(lhs, F.Knows) and isinstance(rhs, F.Believes)
    ok = (
        ok
        and lhs.agent == rhs.agent
        and lhs.time == rhs.time == goal.time
        and canonical(lhs.body) == canonical(rhs.body)
    )
    if not ok:
        raise ReplayError(i, step, "not an introspection axiom instance")


def _check_attitude_closure(i, step, steps, allowed, sig):
    """I_B / I_K: the subproof derives the body from this agent's
    attitude contents at earlier-or-equal times."""
    goal = step.formula
    node = F.Believes if step.rule == "I_B" else F.Knows
    if not isinstance(goal, node):
        raise ReplayError(i, step, "conclusion operator does not match the rule")
    granted: set[str] = set()
    for idx in step.premises:
        ctx = _fml(i, step, idx, steps)
        granted.add(canonical(ctx))
        src_step = steps[idx]
        if src_step.premises:
            source = _fml(i, step, src_step.premises[0], steps)
        else:
            source = ctx
        ok = False
        if isinstance(source, (F.Believes, F.Knows)):
            ok = source.agent == goal.agent and time_leq(source.time, goal.time)
            if step.rule == "I_K" and isinstance(source, F.Believes):
                ok = False  # belief never grounds knowledge
        elif isinstance(source, F.Common):
            ok = time_leq(source.time, goal.time)
        if not ok and canonical(source) != canonical(ctx):
            raise ReplayError(i, step, "context formula has no licensed source")
    if step.sub is None:
        raise ReplayError(i, step, "attitude closure without a subproof")
    _replay_steps(step.sub, granted, sig)
    last = step.sub[-1]
    if last.formula is None or canonical(last.formula) != canonical(goal.body):
        raise ReplayError(i, step, "subproof does not conclude the body")


def _check_context_extraction(i, step, steps, allowed, sig):
    src = _fml(i, step, step.premises[0], steps)
    body = step.formula
    if isinstance(src, (F.Believes, F.Knows, F.Common)):
        if canonical(src.body) == canonical(body):
            return
        if isinstance(src, F.Common) and canonical(src) == canonical(body):
            return
    if canonical(src) == canonical(body):
        return
    raise ReplayError(i, step, "extracted content does not match its source")


def _check_harvest(i, step, steps, allowed, sig):
    if step.sub is None:
        raise ReplayError(i, step, "harvest without a subproof")
    earlier = {canonical(s.formula) for s in steps[:i] if s.formula is not None}
    _replay_steps(step.sub, allowed | earlier, sig)
    last = step.sub[-1]
    if last.formula is None or canonical(last.formula) != canonical(step.formula):
        raise ReplayError(i, step, "subproof does not conclude the harvested fact")


def _check_conjunct(i, step, steps, allowed, sig):
    _check_harvest(i, step, steps, allowed, sig)


def _check_and_intro(i, step, steps, allowed, sig):
    goal = step.formula
    if not isinstance(goal, F.And):
        raise ReplayError(i, step, "not a conjunction")
    got = {canonical(_fml(i, step, idx, steps)) for idx in step.premises}
    want = {canonical(item) for item in goal.items}
    if got != want:
        raise ReplayError(i, step, "conjuncts do not match the premises")


# -- first-order steps ---------------------------------------------------


def _check_fo_shadow(i, step, steps, allowed, sig):
    """An embedded first-order derivation over shadowed premises: either a
    refutation of the negated goal, or a consequence sweep ending in the
    unit clause for the concluded (frozen) formula."""
    from .foprover import Literal
    from .shadow import ShadowMap, shadow

    if step.sub is None:
        raise ReplayError(i, step, "fo-shadow without the embedded derivation")
    smap = ShadowMap()
    granted = set()
    for idx in step.premises:
        f = _fml(i, step, idx, steps)
        granted.add(canonical(shadow(f, smap)))
    goal = shadow(step.formula, smap) if step.formula is not None else None
    unit_key = None
    if isinstance(goal, F.Atom):
        from .terms import Constant as _C

        t = goal.term
        if isinstance(t, _C):
            unit_key = canonical_clause(Clause((Literal(True, t.name, ()),)))
        elif isinstance(t, FunctionApplication):
            unit_key = canonical_clause(
                Clause((Literal(True, t.symbol, t.arguments),))
            )
    esig = smap.extend_signature(sig)
    _replay_fo(i, step, step.sub, granted, goal, esig, unit_key)


def _replay_fo(i, step, sub: list[Step], granted: set[str], goal, sig: Signature,
               unit_key: str | None = None):
    clause_keys: dict[int, str] = {}
    clause_at: dict[int, Clause] = {}
    empty_seen = False
    unit_seen = False
    for j, s in enumerate(sub):
        if s.rule == "premise":
            if canonical(s.formula) not in granted:
                raise ReplayError(i, step, f"fo premise {j} not granted")
        elif s.rule == "negated-goal":
            if goal is not None and canonical(s.formula) != canonical(F.Not(goal)):
                raise ReplayError(i, step, f"fo step {j}: wrong negated goal")
        elif s.rule == "cnf":
            src = sub[s.premises[0]]
            clauses, fns, consts = formula_clauses(src.formula, sig)
            keys = {canonical_clause(c) for c in clauses}
            if canonical_clause(s.clause) not in keys:
                raise ReplayError(i, step, f"fo step {j}: clause not in the CNF")
            clause_keys[j] = canonical_clause(s.clause)
            clause_at[j] = s.clause
        elif s.rule in ("resolve", "factor", "eqres", "paramod"):
            parents = [clause_at.get(p) for p in s.premises]
            if any(p is None for p in parents):
                raise ReplayError(i, step, f"fo step {j}: missing parent clause")
            if not _recheck_inference(s.rule, parents, s.clause, sig):
                raise ReplayError(
                    i, step, f"fo step {j}: {s.rule} does not yield the clause"
                )
            clause_at[j] = s.clause
            if s.clause.empty:
                empty_seen = True
            if unit_key is not None and canonical_clause(s.clause) == unit_key:
                unit_seen = True
        elif s.rule == "goal-by-refutation":
            ref = clause_at.get(s.premises[0])
            if ref is None or not ref.empty:
                raise ReplayError(i, step, f"fo step {j}: no empty clause derived")
            empty_seen = True
        else:
            raise ReplayError(i, step, f"fo step {j}: unknown rule {s.rule}")
    if unit_key is not None and (unit_seen or unit_key in {
        canonical_clause(c) for c in clause_at.values()
    }):
        return
    if not empty_seen:
        raise ReplayError(i, step, "fo derivation does not reach a contradiction")


def _recheck_inference(rule: str, parents: list[Clause], concl: Clause, sig) -> bool:
    clock = BudgetClock(Budget())
    prover = Prover(sig, clock)
    idxs = [prover.add(c, "cnf", ()) for c in parents]
    idxs = [x for x in idxs if x is not None]
    want = canonical_clause(concl)
    if prover.keys.get(want) is not None:
        # duplicate parents collapse; accept when the clause is present
        pass
    outs: list[int] = []
    if rule == "factor":
        outs.extend(prover._factors(idxs[0]))
    elif rule == "eqres":
        outs.extend(prover._equality_resolvents(idxs[0]))
    elif rule == "resolve":
        a = idxs[0]
        b = idxs[-1]
        outs.extend(prover._resolvents(a, b))
        outs.extend(prover._resolvents(b, a))
    elif rule == "paramod":
        a = idxs[0]
        b = idxs[-1]
        outs.extend(prover._paramodulants(a, b))
        outs.extend(prover._paramodulants(b, a))
    return any(prover.table[o].key == want for o in outs)


_CHECKERS = {
    "premise": _check_premise,
    "forall-elim": _check_forall_elim,
    "D_PK": _check_d_pk,
    "D_KB": _check_d_kb,
    "I_4": _check_i4,
    "I_3": _check_chain,
    "D_CB": _check_chain,
    "C-persist": _check_c_persist,
    "I_1-axiom": _check_axiom,
    "I_2-axiom": _check_axiom,
    "I_B": _check_attitude_closure,
    "I_K": _check_attitude_closure,
    "I_B-context": _check_context_extraction,
    "I_K-context": _check_context_extraction,
    "harvest": _check_harvest,
    "conjunct": _check_conjunct,
    "and-intro": _check_and_intro,
    "fo-shadow": _check_fo_shadow,
}
