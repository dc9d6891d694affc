"""
Declarative description of a multi-agent measurement experiment.

A :class:`Scenario` declares registers (tensor factors) and an ordered list
of steps. Agent-record registers carry a ``ready`` label; they start there and
an :class:`AgentMeasure` moves them to the label of the outcome the agent saw.
Every other register starts in its first label. Amplitudes are stored as
canonical expression text (see :mod:`wignerlab.scenario.expr`), which keeps
structural equality exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..errors import ScenarioError
from ..qcore import STRUCT_TOL, SpaceLayout
from .expr import amp_value, canonical_amp

NORM_TOL = 1e-6
COMPLEMENT = "*"


def _amps(values) -> tuple[str, ...]:
    return tuple(canonical_amp(a) for a in values)


def amps_to_array(amps: Sequence[str]) -> np.ndarray:
    return np.array([amp_value(a) for a in amps], dtype=np.complex128)


def unit_amps(amps: Sequence[str], what: str) -> np.ndarray:
    """Evaluate, check the norm is 1 within ``NORM_TOL`` and renormalize."""
    v = amps_to_array(amps)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > NORM_TOL:
        raise ScenarioError(f"{what}: amplitudes have norm {n:.9g}, expected 1 (tolerance {NORM_TOL})")
    return v / n


@dataclass(frozen=True)
class Register:
    name: str
    labels: tuple
    ready: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def is_agent(self) -> bool:
        return self.ready is not None

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def initial(self) -> str:
        return self.ready if self.is_agent else self.labels[0]


def register(name: str, labels: Sequence[str]) -> Register:
    return Register(name, tuple(labels))


def agent(name: str, labels: Sequence[str], ready: str | None = None) -> Register:
    labels = tuple(labels)
    return Register(name, labels, ready if ready is not None else labels[0])


@dataclass(frozen=True)
class MeasureDecl:
    """Outcome labels with their spanning vectors on the measured registers.

    ``kind`` is ``"basis"`` (one vector per outcome, complete) or ``"blocks"``
    (any number of vectors per outcome; a block whose vectors are ``"*"``
    takes the orthogonal complement of all the others).
    """

    kind: str
    entries: tuple

    def __post_init__(self):
        if self.kind not in ("basis", "blocks"):
            raise ScenarioError(f"unknown measurement kind {self.kind!r}")
        entries = []
        for label, vecs in self.entries:
            if isinstance(vecs, str):
                if vecs != COMPLEMENT:
                    raise ScenarioError(f"block {label!r}: expected vectors or '*'")
                entries.append((str(label), COMPLEMENT))
            else:
                entries.append((str(label), tuple(_amps(v) for v in vecs)))
        object.__setattr__(self, "entries", tuple(entries))

    @classmethod
    def basis(cls, entries) -> "MeasureDecl":
        """``entries``: (label, amplitudes) pairs, one vector each."""
        return cls("basis", tuple((label, (amps,)) for label, amps in entries))

    @classmethod
    def blocks(cls, entries) -> "MeasureDecl":
        """``entries``: (label, list of amplitude vectors or ``"*"``) pairs."""
        return cls("blocks", tuple(entries))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.entries)


@dataclass(frozen=True)
class Prepare:
    register: str
    amps: tuple

    def __post_init__(self):
        object.__setattr__(self, "amps", _amps(self.amps))


@dataclass(frozen=True)
class ApplyUnitary:
    registers: tuple
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "registers", tuple(self.registers))
        object.__setattr__(self, "rows", tuple(_amps(r) for r in self.rows))


@dataclass(frozen=True)
class AgentMeasure:
    agent: str
    targets: tuple
    measurement: MeasureDecl
    record: str

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))


@dataclass(frozen=True)
class ControlledPrepare:
    target: str
    control: str
    cases: tuple

    def __post_init__(self):
        object.__setattr__(self, "cases", tuple((str(o), _amps(a)) for o, a in self.cases))


@dataclass(frozen=True)
class ExternalMeasure:
    targets: tuple
    measurement: MeasureDecl
    record: str

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))


Step = Union[Prepare, ApplyUnitary, AgentMeasure, ControlledPrepare, ExternalMeasure]

STEP_KEYWORDS = {
    Prepare: "prepare",
    ApplyUnitary: "unitary",
    AgentMeasure: "ameasure",
    ControlledPrepare: "cprepare",
    ExternalMeasure: "xmeasure",
}


@dataclass(frozen=True)
class Scenario:
    registers: tuple
    steps: tuple

    def __post_init__(self):
        object.__setattr__(self, "registers", tuple(self.registers))
        object.__setattr__(self, "steps", tuple(self.steps))
        validate(self)

    @property
    def layout(self) -> SpaceLayout:
        return SpaceLayout([(r.name, r.labels) for r in self.registers])

    def register(self, name: str) -> Register:
        for r in self.registers:
            if r.name == name:
                return r
        raise ScenarioError(f"unknown register {name!r}")

    @property
    def records(self) -> tuple[str, ...]:
        return tuple(s.record for s in self.steps if isinstance(s, (AgentMeasure, ExternalMeasure)))

    def record_step(self, record: str) -> int:
        for i, s in enumerate(self.steps):
            if isinstance(s, (AgentMeasure, ExternalMeasure)) and s.record == record:
                return i
        raise ScenarioError(f"unknown record {record!r}")

    def record_labels(self, record: str) -> tuple[str, ...]:
        return self.steps[self.record_step(record)].measurement.labels

    @property
    def agent_records(self) -> tuple[str, ...]:
        return tuple(s.record for s in self.steps if isinstance(s, AgentMeasure))

    @property
    def external_records(self) -> tuple[str, ...]:
        return tuple(s.record for s in self.steps if isinstance(s, ExternalMeasure))

    def truncated(self, n_steps: int) -> "Scenario":
        return Scenario(self.registers, self.steps[:n_steps])

    def with_steps(self, steps) -> "Scenario":
        return Scenario(self.registers, tuple(steps))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def measurement_vectors(decl: MeasureDecl, dim: int, what: str) -> list[tuple[str, np.ndarray]]:
    """Evaluate a declaration into (label, matrix with orthonormal columns)
    pairs, completing any ``*`` block; raises ScenarioError on bad input."""
    if len(set(decl.labels)) != len(decl.labels):
        raise ScenarioError(f"{what}: duplicate outcome labels {list(decl.labels)}")
    explicit = []
    star = None
    for label, vecs in decl.entries:
        if vecs == COMPLEMENT:
            if star is not None:
                raise ScenarioError(f"{what}: at most one '*' block is allowed")
            star = label
            continue
        if decl.kind == "basis" and len(vecs) != 1:
            raise ScenarioError(f"{what}: basis outcome {label!r} needs exactly one vector")
        if not vecs:
            raise ScenarioError(f"{what}: outcome {label!r} has no vectors")
        cols = []
        for v in vecs:
            if len(v) != dim:
                raise ScenarioError(
                    f"{what}: outcome {label!r} has {len(v)} amplitudes, measured space has dimension {dim}"
                )
            cols.append(unit_amps(v, f"{what}, outcome {label!r}"))
        explicit.append((label, np.column_stack(cols)))
    allv = np.hstack([m for _, m in explicit]) if explicit else np.zeros((dim, 0))
    err = np.max(np.abs(allv.conj().T @ allv - np.eye(allv.shape[1])), initial=0.0)
    if err > STRUCT_TOL:
        raise ScenarioError(f"{what}: measurement vectors are not orthonormal (max error {err:.3e})")
    used = allv.shape[1]
    if star is None and used != dim:
        raise ScenarioError(f"{what}: vectors span dimension {used} of {dim}; add a '*' block or more vectors")
    if decl.kind == "basis" and star is not None:
        raise ScenarioError(f"{what}: '*' is only allowed in blocks")
    out = dict(explicit)
    if star is not None:
        if used >= dim:
            raise ScenarioError(f"{what}: '*' block {star!r} would be empty")
        Q, _ = np.linalg.qr(np.hstack([allv, np.eye(dim)]), mode="complete")
        comp = Q[:, used:]
        comp = comp - allv @ (allv.conj().T @ comp)
        comp, _ = np.linalg.qr(comp)
        out[star] = comp
    return [(label, out[label]) for label in decl.labels]


def _unitary(rows, dim, what) -> np.ndarray:
    if len(rows) != dim or any(len(r) != dim for r in rows):
        raise ScenarioError(f"{what}: matrix must be {dim}x{dim}")
    m = np.array([amps_to_array(r) for r in rows])
    err = np.max(np.abs(m.conj().T @ m - np.eye(dim)), initial=0.0)
    if err > STRUCT_TOL:
        raise ScenarioError(f"{what}: matrix is not unitary (max error {err:.3e})")
    return m


def validate(s: Scenario) -> None:
    if not s.registers:
        raise ScenarioError("no registers declared")
    names = [r.name for r in s.registers]
    if len(set(names)) != len(names):
        raise ScenarioError(f"duplicate register names in {names}")
    for r in s.registers:
        if not r.labels:
            raise ScenarioError(f"register {r.name!r} has no labels")
        if len(set(r.labels)) != len(r.labels):
            raise ScenarioError(f"register {r.name!r} has duplicate labels")
        if r.is_agent and r.ready not in r.labels:
            raise ScenarioError(f"agent {r.name!r}: ready label {r.ready!r} is not among its labels")
    # builds the layout, enforcing the dimension cap
    s.layout
    regs = {r.name: r for r in s.registers}

    def reg(name, what):
        if name not in regs:
            raise ScenarioError(f"{what}: unknown register {name!r}")
        return regs[name]

    def targets_dim(targets, what):
        if not targets:
            raise ScenarioError(f"{what}: no target registers")
        if len(set(targets)) != len(targets):
            raise ScenarioError(f"{what}: repeated target register")
        d = 1
        for t in targets:
            d *= reg(t, what).dim
        return d

    records: dict[str, MeasureDecl] = {}
    for i, step in enumerate(s.steps):
        what = f"step {i + 1} ({STEP_KEYWORDS.get(type(step), type(step).__name__)})"
        if isinstance(step, Prepare):
            r = reg(step.register, what)
            if len(step.amps) != r.dim:
                raise ScenarioError(f"{what}: {len(step.amps)} amplitudes for register {r.name!r} of dimension {r.dim}")
            unit_amps(step.amps, what)
        elif isinstance(step, ApplyUnitary):
            _unitary(step.rows, targets_dim(step.registers, what), what)
        elif isinstance(step, (AgentMeasure, ExternalMeasure)):
            d = targets_dim(step.targets, what)
            measurement_vectors(step.measurement, d, what)
            if step.record in records:
                raise ScenarioError(f"{what}: duplicate record label {step.record!r}")
            if isinstance(step, AgentMeasure):
                a = reg(step.agent, what)
                if not a.is_agent:
                    raise ScenarioError(f"{what}: {a.name!r} is not an agent register")
                if a.name in step.targets:
                    raise ScenarioError(f"{what}: agent {a.name!r} cannot measure its own record")
                missing = [l for l in step.measurement.labels if l not in a.labels]
                if missing:
                    raise ScenarioError(f"{what}: agent {a.name!r} has no record labels for outcomes {missing}")
            records[step.record] = step.measurement
        elif isinstance(step, ControlledPrepare):
            r = reg(step.target, what)
            if step.control not in records:
                raise ScenarioError(f"{what}: control record {step.control!r} is not produced by an earlier step")
            outcomes = records[step.control].labels
            seen = [o for o, _ in step.cases]
            if len(set(seen)) != len(seen):
                raise ScenarioError(f"{what}: duplicate case labels")
            extra = [o for o in seen if o not in outcomes]
            if extra:
                raise ScenarioError(f"{what}: {extra} are not outcomes of record {step.control!r}")
            missing = [o for o in outcomes if o not in seen]
            if missing:
                raise ScenarioError(f"{what}: no preparation for outcomes {missing} of record {step.control!r}")
            ctrl = s.steps[[j for j in range(i) if getattr(s.steps[j], "record", None) == step.control][0]]
            if isinstance(ctrl, AgentMeasure) and ctrl.agent == step.target:
                raise ScenarioError(f"{what}: target is the control agent's own record register")
            for o, amps in step.cases:
                if len(amps) != r.dim:
                    raise ScenarioError(
                        f"{what}: case {o!r} has {len(amps)} amplitudes for register of dimension {r.dim}"
                    )
                unit_amps(amps, f"{what}, case {o!r}")
        else:
            raise ScenarioError(f"{what}: unknown step type")
