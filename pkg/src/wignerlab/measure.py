"""
Projective measurement: Born probabilities, collapse, observables and
expectation values.

A measurement is given either by a complete orthonormal basis (one outcome
per vector) or by a decomposition of the space into mutually orthogonal
subspaces (one outcome per subspace). Both are wrapped in
:class:`MeasurementSpec`; every function here also accepts the raw
:class:`~wignerlab.qcore.OrthonormalBasis` or
:class:`~wignerlab.qcore.SubspaceDecomposition`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import (
    BasisError,
    InvariantViolation,
    NormalizationError,
    ZeroProbabilityError,
)
from .qcore import (
    STRUCT_TOL,
    OrthonormalBasis,
    SelfAdjointOperator,
    StateVector,
    SubspaceDecomposition,
    UnitaryMap,
    _check_same_layout,
)

# probabilities in [-NEG_DUST, 0) are rounding noise and clamp to zero
NEG_DUST = 1e-12
COLLAPSE_MIN_PROB = 1e-12
EIGEN_GAP = 1e-6


@dataclass(frozen=True, eq=False)
class MeasurementSpec:
    decomposition: SubspaceDecomposition
    basis: OrthonormalBasis | None = None

    @classmethod
    def from_basis(cls, basis: OrthonormalBasis) -> "MeasurementSpec":
        return cls(SubspaceDecomposition.from_basis(basis), basis)

    @property
    def layout(self):
        return self.decomposition.layout

    @property
    def labels(self) -> tuple[str, ...]:
        return self.decomposition.labels

    @property
    def is_basis(self) -> bool:
        return self.basis is not None

    @cached_property
    def projectors(self) -> dict:
        return self.decomposition.projectors

    def transformed(self, U: UnitaryMap) -> "MeasurementSpec":
        """This measurement with every vector replaced by ``U v``."""
        _check_same_layout(self.layout, U.layout)
        blocks = [
            (label, tuple(StateVector(self.layout, U.matrix @ v.amps) for v in vecs))
            for label, vecs in self.decomposition.blocks
        ]
        dec = SubspaceDecomposition(self.layout, blocks)
        if self.basis is None:
            return MeasurementSpec(dec)
        basis = OrthonormalBasis(self.layout, [vecs[0] for _, vecs in blocks], self.labels)
        return MeasurementSpec(dec, basis)


def as_measurement(M) -> MeasurementSpec:
    if isinstance(M, MeasurementSpec):
        return M
    if isinstance(M, OrthonormalBasis):
        return MeasurementSpec.from_basis(M)
    if isinstance(M, SubspaceDecomposition):
        return MeasurementSpec(M)
    raise TypeError(f"cannot interpret {type(M).__name__} as a measurement")


class OutcomeDistribution:
    """Ordered outcome -> probability table.

    Outcomes are strings for a single measurement, or tuples of strings for a
    joint distribution over several named records (``names``).
    """

    def __init__(self, entries: Iterable[tuple[Hashable, float]], names: Sequence[str] | None = None):
        items = []
        for label, p in entries:
            p = float(p)
            if p < -NEG_DUST:
                raise InvariantViolation(f"negative probability {p:.3e} for outcome {label!r}")
            items.append((label, max(p, 0.0)))
        labels = [l for l, _ in items]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate outcomes in distribution")
        total = sum(p for _, p in items)
        if items and abs(total - 1.0) > STRUCT_TOL:
            raise InvariantViolation(f"probabilities sum to {total!r}")
        self._items = tuple(items)
        self._index = {l: i for i, l in enumerate(labels)}
        self.names = tuple(names) if names is not None else None

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, label) -> float:
        return self._items[self._index[label]][1]

    def get(self, label, default=0.0) -> float:
        i = self._index.get(label)
        return default if i is None else self._items[i][1]

    def __contains__(self, label):
        return label in self._index

    @property
    def labels(self) -> tuple:
        return tuple(l for l, _ in self._items)

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self._items])

    def items(self):
        return self._items

    def as_dict(self) -> dict:
        return dict(self._items)

    def marginal(self, names: Sequence[str]) -> "OutcomeDistribution":
        if self.names is None:
            raise ValueError("marginal needs a joint distribution with record names")
        pos = [self.names.index(n) for n in names]
        acc: dict = {}
        for label, p in self._items:
            key = tuple(label[i] for i in pos)
            acc[key] = acc.get(key, 0.0) + p
        return OutcomeDistribution(acc.items(), names)

    def max_gap(self, other: "OutcomeDistribution") -> float:
        keys = set(self.labels) | set(other.labels)
        return max((abs(self.get(k) - other.get(k)) for k in keys), default=0.0)

    def __repr__(self):
        body = ", ".join(f"{l!r}: {p:.6g}" for l, p in self._items)
        return f"OutcomeDistribution({{{body}}})"


def _require_normalized(psi: StateVector):
    if not psi.normalized:
        raise NormalizationError(f"state has norm {psi.norm!r}, expected 1")


def born_distribution(psi: StateVector, M) -> OutcomeDistribution:
    """Outcome probabilities ``|<v_j, psi>|^2`` (basis) or ``||P_j psi||^2``
    (decomposition)."""
    M = as_measurement(M)
    _check_same_layout(psi.layout, M.layout)
    _require_normalized(psi)
    if M.is_basis:
        a = M.basis.matrix.conj().T @ psi.amps
        probs = np.abs(a) ** 2
    else:
        probs = []
        for label in M.labels:
            proj = M.projectors[label] @ psi.amps
            probs.append(np.real(np.vdot(proj, proj)))
    return OutcomeDistribution(zip(M.labels, probs))


def project(psi: StateVector, M, outcome: str) -> StateVector:
    """Unnormalized orthogonal projection of ``psi`` onto an outcome subspace."""
    M = as_measurement(M)
    _check_same_layout(psi.layout, M.layout)
    try:
        P = M.projectors[outcome]
    except KeyError:
        raise KeyError(f"measurement has no outcome {outcome!r}; outcomes are {list(M.labels)}")
    return StateVector(psi.layout, P @ psi.amps)


def collapse(psi: StateVector, M, outcome: str) -> StateVector:
    """Post-measurement state for ``outcome``: the normalized projection."""
    proj = project(psi, M, outcome)
    p = proj.norm**2
    if p < COLLAPSE_MIN_PROB:
        raise ZeroProbabilityError(f"outcome {outcome!r} has probability {p:.3e}; cannot collapse onto it")
    return proj.normalize()


def observable_from(B: OrthonormalBasis, values: Sequence[float]) -> SelfAdjointOperator:
    """The self-adjoint ``T`` with ``T(v_j) = r_j v_j`` for every basis vector."""
    values = np.asarray(values, dtype=float)
    if values.shape != (len(B),):
        raise ValueError(f"{values.shape[0] if values.ndim else 0} values for a basis of {len(B)} vectors")
    if not B.complete:
        raise BasisError("observable needs a complete basis")
    V = B.matrix
    return SelfAdjointOperator(B.layout, (V * values) @ V.conj().T)


def expectation(T: SelfAdjointOperator, psi: StateVector) -> float:
    """``<T psi, psi>`` for a normalized state."""
    _check_same_layout(T.layout, psi.layout)
    _require_normalized(psi)
    raw = np.vdot(T.matrix @ psi.amps, psi.amps)
    if abs(raw.imag) > STRUCT_TOL * max(1.0, abs(raw.real)):
        raise InvariantViolation(f"expectation has imaginary part {raw.imag:.3e}")
    return float(raw.real)


def eigen_clusters(S: SelfAdjointOperator, gap: float = EIGEN_GAP) -> list[tuple[float, np.ndarray]]:
    """Eigenvalues grouped when consecutive ones are within ``gap``; each
    cluster is (mean eigenvalue, matrix whose columns span its eigenspace)."""
    w, V = np.linalg.eigh(S.matrix)
    clusters = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > gap:
            clusters.append((float(np.mean(w[start:i])), V[:, start:i]))
            start = i
    return clusters


def eigenprojector(S: SelfAdjointOperator, r: float, gap: float = EIGEN_GAP) -> SelfAdjointOperator:
    """Orthogonal projector onto the eigenspace of ``S`` for eigenvalue ``r``."""
    for value, V in eigen_clusters(S, gap):
        if abs(value - r) <= gap:
            return SelfAdjointOperator(S.layout, V @ V.conj().T)
    raise ValueError(f"{r!r} is not an eigenvalue of the operator (tolerance {gap})")


def eigen_probability(S: SelfAdjointOperator, r: float, psi: StateVector) -> float:
    """Probability ``||P_r psi||^2`` of obtaining eigenvalue ``r`` when measuring ``S``."""
    _check_same_layout(S.layout, psi.layout)
    _require_normalized(psi)
    P = eigenprojector(S, r)
    v = P.matrix @ psi.amps
    return float(np.real(np.vdot(v, v)))


def measurement_of(S: SelfAdjointOperator, gap: float = EIGEN_GAP) -> MeasurementSpec:
    """Decomposition of the space into the eigenspaces of ``S``; outcome labels
    are the eigenvalues formatted with 12 significant digits."""
    blocks = []
    for value, V in eigen_clusters(S, gap):
        blocks.append((f"{value:.12g}", tuple(StateVector(S.layout, c) for c in V.T)))
    return MeasurementSpec(SubspaceDecomposition(S.layout, blocks))


__all__ = [
    "MeasurementSpec",
    "OutcomeDistribution",
    "as_measurement",
    "born_distribution",
    "collapse",
    "eigen_clusters",
    "eigen_probability",
    "eigenprojector",
    "expectation",
    "measurement_of",
    "observable_from",
    "project",
]
