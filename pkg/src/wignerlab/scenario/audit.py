"""
Collapse-safety audit and conditional reasoning over run results.

For an agent step ``i`` the audit compares two evaluations that differ only
in whether step ``i`` collapses: the baseline keeps every agent unitary. A
later external measurement ``k`` is an unsafe partner of ``i`` when the
distribution of record ``k`` changes by more than ``tol``. This is
:func:`wignerlab.collapse_safety` with the agent's decomposition taken at the
pre-step state and ``k`` seen through the dynamics in between.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

from ..errors import ZeroProbabilityError
from ..interference import interference_report
from ..qcore import SelfAdjointOperator, SubspaceDecomposition, computational_basis, lift_decomposition, lift_operator
from .engine import UNRESOLVED, Policy, RunResult, compile_scenario, evaluate, initial_state
from .model import AgentMeasure, ExternalMeasure, Scenario

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class PairGap:
    step: int
    record: str
    gap: float
    safe: bool


@dataclass(frozen=True)
class AgentAudit:
    step: int
    agent: str
    record: str
    pairs: tuple
    # gap on the joint of all external records, the strongest comparison
    joint_gap: float
    tol: float

    @property
    def unsafe(self) -> tuple:
        return tuple(p for p in self.pairs if not p.safe)

    @property
    def safe(self) -> bool:
        return not self.unsafe and self.joint_gap <= self.tol

    @property
    def first_unsafe_step(self) -> int | None:
        return self.unsafe[0].step if self.unsafe else None


@dataclass(frozen=True)
class AuditReport:
    agents: tuple
    tol: float

    @property
    def all_safe(self) -> bool:
        return all(a.safe for a in self.agents)

    @property
    def unsafe_pairs(self) -> tuple:
        """(agent record, later record, gap) for every unsafe pair."""
        return tuple((a.record, p.record, p.gap) for a in self.agents for p in a.unsafe)

    def for_record(self, record: str) -> AgentAudit:
        for a in self.agents:
            if a.record == record:
                return a
        raise KeyError(record)


def audit(s: Scenario, tol: float = DEFAULT_TOL) -> AuditReport:
    base = evaluate(s, Policy.UNITARY_AGENTS)
    externals = [(k, st.record) for k, st in enumerate(s.steps) if isinstance(st, ExternalMeasure)]
    ext_names = tuple(r for _, r in externals)
    out = []
    for i, st in enumerate(s.steps):
        if not isinstance(st, AgentMeasure):
            continue
        alt = evaluate(s, collapse_steps={i})
        pairs = []
        for k, rec in externals:
            if k <= i:
                continue
            gap = base.marginal([rec]).max_gap(alt.marginal([rec]))
            pairs.append(PairGap(k, rec, gap, gap <= tol))
        joint = base.marginal(ext_names).max_gap(alt.marginal(ext_names)) if ext_names else 0.0
        out.append(AgentAudit(i, st.agent, st.record, tuple(pairs), joint, tol))
    return AuditReport(tuple(out), tol)


# ---------------------------------------------------------------------------
# interference table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InterferenceRow:
    agent_record: str
    external_record: str
    outcome: str
    superposition: float
    mixture: float
    interference: float
    max_abs_term: float


def _agent_decomposition(s: Scenario, agent: str) -> SubspaceDecomposition:
    reg = s.register(agent)
    local = computational_basis(s.layout.sublayout([agent]))
    local = SubspaceDecomposition(local.layout, [(l, (v,)) for l, v in zip(reg.labels, local.vectors)])
    return lift_decomposition(local, s.layout)


def interference_table(s: Scenario, tol: float = DEFAULT_TOL) -> tuple[InterferenceRow, ...]:
    """Interference of each external outcome projector with each earlier agent
    record decomposition, at the state just before the external step.

    Evaluated under ``UNITARY_AGENTS``; when earlier external steps have split
    the run, values are weighted over the branches (the identity
    superposition = mixture + interference holds branch by branch).
    """
    ops = compile_scenario(s)
    layout = s.layout
    rows = []
    for k, st in enumerate(s.steps):
        if not isinstance(st, ExternalMeasure):
            continue
        prefix = evaluate(s.truncated(k), Policy.UNITARY_AGENTS) if k else None
        branches = [(b.weight, b.state) for b in prefix.branches] if prefix else [(1.0, initial_state(s))]
        agents = [(j, a) for j, a in enumerate(s.steps[:k]) if isinstance(a, AgentMeasure)]
        for label, P in ops[k].projectors:
            full = lift_operator(P, layout.sublayout(st.targets), layout)
            S = SelfAdjointOperator(layout, (full + full.conj().T) / 2)
            for _, a in agents:
                B = _agent_decomposition(s, a.agent)
                sup = mix = inter = 0.0
                mx = 0.0
                for w, psi in branches:
                    rep = interference_report(S, B, psi, tol)
                    sup += w * rep.superposition_expectation
                    mix += w * rep.mixture_expectation
                    inter += w * rep.interference_total
                    mx = max(mx, rep.max_abs_term)
                rows.append(InterferenceRow(a.record, st.record, label, sup, mix, inter, mx))
    return tuple(rows)


# ---------------------------------------------------------------------------
# conditional probabilities
# ---------------------------------------------------------------------------


class _Tracking(Mapping):
    def __init__(self, data, seen: set):
        self._data = data
        self._seen = seen

    def __getitem__(self, key):
        self._seen.add(key)
        return self._data[key]

    def __iter__(self):
        self._seen.update(self._data)
        return iter(self._data)

    def __len__(self):
        return len(self._data)


def _predicate(pred):
    """Callable over a records mapping; dict predicates match a label or any
    of a collection of labels per record."""
    if pred is None:
        return lambda rec: True
    if callable(pred):
        return pred
    if isinstance(pred, Mapping):
        wanted = {k: ({v} if isinstance(v, str) else set(v)) for k, v in pred.items()}

        def match(rec):
            return all(rec[k] in vals for k, vals in wanted.items())

        return match
    raise TypeError("predicate must be a mapping or a callable")


def _referenced(pred, branches, names) -> set:
    if pred is None:
        return set()
    if isinstance(pred, Mapping):
        unknown = set(pred) - set(names)
        if unknown:
            raise KeyError(f"unknown records {sorted(unknown)}")
        return set(pred)
    seen: set = set()
    for b in branches:
        pred(_Tracking(b.records, seen))
    return seen


@dataclass(frozen=True)
class ConditionalResult:
    value: float | None
    valid: bool
    reason: str

    def __bool__(self):
        return self.valid


def conditional_probability(r: RunResult, event, given=None, tol: float = DEFAULT_TOL) -> ConditionalResult:
    """``P(event | given)`` over the joint records of ``r``.

    The query is INVALID when it touches an agent record that was not
    collapsed in ``r`` and either

    * the record is unresolved in some branch, or
    * some external measurement that interferes with that agent's record
      (an unsafe audit pair) happens no later than the last step the query
      depends on, so the agent's outcome is not a fact the standard formalism
      can condition on.

    A condition with probability zero raises :class:`ZeroProbabilityError`.
    """
    s = r.scenario
    ev, gv = _predicate(event), _predicate(given)
    refs = _referenced(event, r.branches, r.records) | _referenced(given, r.branches, r.records)
    agent_steps = {st.record: i for i, st in enumerate(s.steps) if isinstance(st, AgentMeasure)}
    pending = sorted(
        (rec for rec in refs if rec in agent_steps and agent_steps[rec] not in r.collapsed_steps),
        key=agent_steps.get,
    )

    problems = []
    if pending:
        unresolved = [rec for rec in pending if any(b.records[rec] == UNRESOLVED for b in r.branches)]
        for rec in unresolved:
            problems.append(f"record {rec} is unresolved: the agent's outcome was never read out")
        horizon = 0
        for rec in refs:
            if rec in pending:
                at = [b.resolved_at[rec] for b in r.branches if rec in b.resolved_at]
                horizon = max([horizon, agent_steps[rec], *at])
            else:
                horizon = max(horizon, s.record_step(rec))
        report = audit(s, tol)
        for rec in pending:
            a = report.for_record(rec)
            hits = [p for p in a.unsafe if p.step <= horizon]
            if hits:
                p = hits[0]
                problems.append(
                    f"collapsing record {rec} is unsafe against {p.record} (gap {p.gap:.12g}) "
                    f"which happens before the query is settled"
                )
    if problems:
        return ConditionalResult(None, False, "; ".join(problems))

    num = den = 0.0
    for b in r.branches:
        if gv(b.records):
            den += b.weight
            if ev(b.records):
                num += b.weight
    if den <= 0.0:
        raise ZeroProbabilityError("the condition has probability 0")
    reason = "standard ratio"
    if r.collapsed_steps and refs & {st.record for i, st in enumerate(s.steps) if i in r.collapsed_steps}:
        reason += " (naive collapse of agent records)"
    return ConditionalResult(min(1.0, num / den), True, reason)


def probability(r: RunResult, event) -> float:
    ev = _predicate(event)
    return sum(b.weight for b in r.branches if ev(b.records))


__all__ = [
    "AgentAudit",
    "AuditReport",
    "ConditionalResult",
    "InterferenceRow",
    "PairGap",
    "audit",
    "conditional_probability",
    "interference_table",
    "probability",
]
