"""
Exact evaluation of scenarios by branch enumeration.

Under ``UNITARY_AGENTS`` an agent's measurement is the entangling map
``psi_j (x) theta_ready -> psi_j (x) theta_j`` extended linearly, and only
external measurements split branches. Under ``COLLAPSE_ON_RECORD`` the
agent's measurement also collapses the state onto the observed outcome.

Agent records that have not been read out carry :data:`UNRESOLVED`. After
every external measurement, a pending record whose agent register has become
definite (one label with probability ``>= 1 - 1e-9``) takes that label.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable

import numpy as np

from ..errors import InvariantViolation, ScenarioError
from ..measure import OutcomeDistribution
from ..qcore import STRUCT_TOL, SpaceLayout, StateVector, completing_unitary
from .model import (
    AgentMeasure,
    ApplyUnitary,
    ControlledPrepare,
    ExternalMeasure,
    Prepare,
    Scenario,
    STEP_KEYWORDS,
    _unitary,
    measurement_vectors,
    unit_amps,
)

UNRESOLVED = "?"
PRUNE_WEIGHT = 1e-15
DEFINITE_TOL = 1e-9


class Policy(enum.Enum):
    UNITARY_AGENTS = "unitary-agents"
    COLLAPSE_ON_RECORD = "collapse-on-record"


@dataclass(frozen=True, eq=False)
class Branch:
    records: MappingProxyType
    weight: float
    state: StateVector
    # record -> index of the step after which it was first known
    resolved_at: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))


@dataclass(frozen=True, eq=False)
class RunResult:
    distribution: OutcomeDistribution
    branches: tuple
    policy: Policy
    annotations: tuple
    scenario: Scenario
    viewpoint: frozenset | None = None
    collapsed_steps: frozenset = frozenset()

    @property
    def records(self) -> tuple[str, ...]:
        return self.distribution.names

    def marginal(self, records: Iterable[str]) -> OutcomeDistribution:
        """Marginal over ``records``, rows in record label order with
        unresolved values last."""
        records = tuple(records)
        d = self.distribution.marginal(records)
        key = _label_key(self.scenario, records)
        return OutcomeDistribution(sorted(d, key=lambda kv: key(kv[0])), records)

    def external_distribution(self) -> OutcomeDistribution:
        """Joint distribution of the external measurement records only."""
        return self.marginal(self.scenario.external_records)


# ---------------------------------------------------------------------------
# compilation
# ---------------------------------------------------------------------------


def apply_local(amps: np.ndarray, layout: SpaceLayout, names, matrix: np.ndarray) -> np.ndarray:
    """``(matrix (x) I) amps`` where ``matrix`` acts on ``names`` (first name
    most significant) and the identity on every other factor."""
    axes = [layout.index(n) for n in names]
    k = len(axes)
    t = np.moveaxis(amps.reshape(layout.dims), axes, range(k))
    shape = t.shape
    d = int(np.prod(shape[:k]))
    t = (matrix @ t.reshape(d, -1)).reshape(shape)
    return np.moveaxis(t, range(k), axes).reshape(-1)


def _shift(d: int, k: int) -> np.ndarray:
    """Cyclic shift ``|j> -> |j + k mod d>``."""
    return np.roll(np.eye(d, dtype=np.complex128), k % d, axis=0)


def _fiducial_unitary(column: np.ndarray, fid: int) -> np.ndarray:
    """Unitary sending basis vector ``fid`` to ``column``."""
    U = completing_unitary(column)
    perm = np.arange(len(column))
    perm[[0, fid]] = perm[[fid, 0]]
    return U[:, perm]


@dataclass(frozen=True, eq=False)
class _Op:
    index: int
    step: object
    kind: str
    names: tuple = ()
    matrix: np.ndarray | None = None
    projectors: tuple = ()  # (label, local projector)
    cases: dict | None = None
    fiducial: tuple | None = None  # (register, label index)

    @property
    def what(self) -> str:
        return f"step {self.index + 1} ({STEP_KEYWORDS[type(self.step)]})"


def compile_scenario(s: Scenario) -> tuple[_Op, ...]:
    """Local matrices for every step."""
    ops = []
    producers: dict[str, object] = {}
    for i, step in enumerate(s.steps):
        what = f"step {i + 1} ({STEP_KEYWORDS[type(step)]})"
        if isinstance(step, Prepare):
            r = s.register(step.register)
            fid = r.labels.index(r.initial)
            U = _fiducial_unitary(unit_amps(step.amps, what), fid)
            ops.append(_Op(i, step, "prepare", (r.name,), U, fiducial=(r.name, fid)))
        elif isinstance(step, ApplyUnitary):
            d = int(np.prod([s.register(n).dim for n in step.registers]))
            ops.append(_Op(i, step, "unitary", step.registers, _unitary(step.rows, d, what)))
        elif isinstance(step, (AgentMeasure, ExternalMeasure)):
            d = int(np.prod([s.register(n).dim for n in step.targets]))
            projs = tuple((label, V @ V.conj().T) for label, V in measurement_vectors(step.measurement, d, what))
            if isinstance(step, AgentMeasure):
                a = s.register(step.agent)
                ready = a.labels.index(a.ready)
                U = sum(np.kron(P, _shift(a.dim, a.labels.index(label) - ready)) for label, P in projs)
                ops.append(
                    _Op(i, step, "agent", step.targets + (a.name,), U, projs, fiducial=(a.name, ready))
                )
            else:
                ops.append(_Op(i, step, "external", step.targets, None, projs))
            producers[step.record] = step
        elif isinstance(step, ControlledPrepare):
            r = s.register(step.target)
            fid = r.labels.index(r.initial)
            cases = {o: _fiducial_unitary(unit_amps(a, f"{what}, case {o!r}"), fid) for o, a in step.cases}
            ctrl = producers[step.control]
            if isinstance(ctrl, AgentMeasure):
                a = s.register(ctrl.agent)
                blocks = []
                for label in a.labels:
                    blocks.append(cases.get(label, np.eye(r.dim, dtype=np.complex128)))
                U = np.zeros((a.dim * r.dim,) * 2, dtype=np.complex128)
                for j, W in enumerate(blocks):
                    U[j * r.dim:(j + 1) * r.dim, j * r.dim:(j + 1) * r.dim] = W
                ops.append(_Op(i, step, "cprep_agent", (a.name, r.name), U, fiducial=(r.name, fid)))
            else:
                ops.append(_Op(i, step, "cprep_external", (r.name,), None, cases=cases, fiducial=(r.name, fid)))
        else:
            raise ScenarioError(f"{what}: unknown step type")
    return tuple(ops)


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------


def initial_state(s: Scenario) -> StateVector:
    layout = s.layout
    amps = np.zeros(layout.total_dim, dtype=np.complex128)
    flat = 0
    for r in s.registers:
        flat = flat * r.dim + r.labels.index(r.initial)
    amps[flat] = 1.0
    return StateVector(layout, amps)


def _require_fiducial(op: _Op, psi: StateVector, s: Scenario):
    name, idx = op.fiducial
    p = psi.marginal(name)[idx]
    if p < 1.0 - DEFINITE_TOL:
        label = s.register(name).labels[idx]
        if op.kind == "agent":
            raise ScenarioError(f"{op.what}: agent {name!r} is not in its ready state {label!r}")
        raise ScenarioError(f"{op.what}: register {name!r} must be in its initial label {label!r} to be prepared")


def _resolve(s: Scenario, records: dict, resolved_at: dict, psi: StateVector, index: int):
    for rec, value in records.items():
        if value != UNRESOLVED:
            continue
        step = s.steps[s.record_step(rec)]
        a = s.register(step.agent)
        m = psi.marginal(step.agent)
        j = int(np.argmax(m))
        if m[j] >= 1.0 - DEFINITE_TOL and a.labels[j] in step.measurement.labels:
            records[rec] = a.labels[j]
            resolved_at[rec] = index


def advance(s: Scenario, op: _Op, branch_state: StateVector, records, collapse: bool):
    """Children of one branch at one step: list of (conditional probability,
    state, record update or None)."""
    layout = branch_state.layout
    psi = branch_state.amps
    if op.kind in ("prepare", "cprep_agent", "cprep_external", "agent"):
        _require_fiducial(op, branch_state, s)
    if op.kind in ("prepare", "unitary", "cprep_agent"):
        return [(1.0, StateVector(layout, apply_local(psi, layout, op.names, op.matrix)), None)]
    if op.kind == "cprep_external":
        W = op.cases[records[op.step.control]]
        return [(1.0, StateVector(layout, apply_local(psi, layout, op.names, W)), None)]
    if op.kind == "agent" and not collapse:
        return [(1.0, StateVector(layout, apply_local(psi, layout, op.names, op.matrix)), UNRESOLVED)]
    # splitting step
    targets = op.step.targets
    out = []
    for label, P in op.projectors:
        v = apply_local(psi, layout, targets, P)
        p = float(np.real(np.vdot(v, v)))
        if p <= 0.0:
            continue
        v = v / np.sqrt(p)
        if op.kind == "agent":
            v = apply_local(v, layout, op.names, op.matrix)
        out.append((p, StateVector(layout, v), label))
    return out


def collapse_set(s: Scenario, policy: Policy, viewpoint=None) -> frozenset:
    if policy is Policy.UNITARY_AGENTS:
        return frozenset()
    return frozenset(
        i
        for i, st in enumerate(s.steps)
        if isinstance(st, AgentMeasure) and (viewpoint is None or st.agent in viewpoint)
    )


def _label_key(s: Scenario, records: tuple[str, ...]):
    orders = [{l: j for j, l in enumerate(s.record_labels(r))} for r in records]

    def key(values):
        return tuple(o.get(v, len(o)) for o, v in zip(orders, values))

    return key


def evaluate(
    s: Scenario,
    policy: Policy = Policy.UNITARY_AGENTS,
    viewpoint: Iterable[str] | None = None,
    *,
    collapse_steps: Iterable[int] | None = None,
) -> RunResult:
    """Exact joint distribution over all records.

    ``viewpoint`` restricts ``COLLAPSE_ON_RECORD`` to the named agents (the
    others keep the entangling map); ``None`` collapses every agent.
    ``collapse_steps`` overrides both and names the agent steps to collapse.
    """
    policy = Policy(policy)
    viewpoint = frozenset(viewpoint) if viewpoint is not None else None
    if viewpoint is not None:
        unknown = viewpoint - {r.name for r in s.registers if r.is_agent}
        if unknown:
            raise ScenarioError(f"viewpoint names unknown agents {sorted(unknown)}")
    collapsed = frozenset(collapse_steps) if collapse_steps is not None else collapse_set(s, policy, viewpoint)
    ops = compile_scenario(s)
    branches = [(1.0, initial_state(s), {}, {})]
    notes = []
    for op in ops:
        nxt = []
        pruned = 0
        collapse = op.index in collapsed
        for w, psi, recs, res in branches:
            for p, child, value in advance(s, op, psi, recs, collapse):
                cw = w * p
                if cw < PRUNE_WEIGHT:
                    pruned += 1
                    continue
                crecs, cres = dict(recs), dict(res)
                if value is not None:
                    crecs[op.step.record] = value
                    if value != UNRESOLVED:
                        cres[op.step.record] = op.index
                if op.kind == "external":
                    _resolve(s, crecs, cres, child, op.index)
                if abs(child.norm - 1.0) > STRUCT_TOL:
                    raise InvariantViolation(f"{op.what}: branch state has norm {child.norm!r}")
                nxt.append((cw, child, crecs, cres))
        total = sum(b[0] for b in nxt)
        if abs(total - 1.0) > STRUCT_TOL:
            raise InvariantViolation(f"{op.what}: branch weights sum to {total!r}")
        branches = nxt
        notes.append(_annotation(op, collapse, len(branches), pruned))

    names = s.records
    acc: dict = {}
    for w, _, recs, _ in branches:
        key = tuple(recs[n] for n in names)
        acc[key] = acc.get(key, 0.0) + w
    order = _label_key(s, names)
    dist = OutcomeDistribution(sorted(acc.items(), key=lambda kv: order(kv[0])), names)
    final = tuple(
        Branch(MappingProxyType({n: recs[n] for n in names}), w, psi, MappingProxyType(res))
        for w, psi, recs, res in branches
    )
    return RunResult(dist, final, policy, tuple(notes), s, viewpoint, collapsed)


def _annotation(op: _Op, collapse: bool, n_branches: int, pruned: int) -> str:
    st = op.step
    if op.kind == "agent":
        body = (
            f"{st.agent} measures {','.join(st.targets)}, record {st.record} "
            + ("collapsed" if collapse else f"entangled ({UNRESOLVED} until read out)")
        )
    elif op.kind == "external":
        body = f"external measurement of {','.join(st.targets)}, record {st.record}"
    elif op.kind == "prepare":
        body = f"prepare {st.register}"
    elif op.kind == "unitary":
        body = f"unitary on {','.join(st.registers)}"
    else:
        body = f"prepare {st.target} controlled by {st.control}"
    tail = f"; {n_branches} branch{'es' if n_branches != 1 else ''}"
    if pruned:
        tail += f", {pruned} pruned"
    return f"{op.what}: {body}{tail}"
