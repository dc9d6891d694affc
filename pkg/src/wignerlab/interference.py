"""
Superposition versus mixture: interference terms and collapse safety.

For a state ``psi = sum_j a_j psi_j`` and a self-adjoint ``S``::

    <S psi, psi> = sum_j |a_j|^2 <S psi_j, psi_j>                 (mixture)
                 + sum_{j<k} 2 Re(conj(a_j) a_k <S psi_j, psi_k>)  (interference)

With a subspace decomposition in place of a basis the same identity holds
with ``a_j psi_j`` replaced by the block projections ``P_j psi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolation, ZeroProbabilityError
from .measure import (
    OutcomeDistribution,
    _require_normalized,
    as_measurement,
    born_distribution,
    collapse,
    eigenprojector,
    expectation,
)
from .qcore import (
    OrthonormalBasis,
    SelfAdjointOperator,
    StateVector,
    SubspaceDecomposition,
    _check_same_layout,
    expand_in_basis,
)

DEFAULT_TOL = 1e-9
IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class InterferenceReport:
    superposition_expectation: float
    mixture_expectation: float
    terms: dict = field(repr=False)
    max_abs_term: float
    safe: bool
    tol: float = DEFAULT_TOL

    @property
    def interference_total(self) -> float:
        return float(sum(self.terms.values()))


def _components(B, psi: StateVector) -> np.ndarray:
    """Rows are the pieces of ``psi`` along each basis vector / block."""
    _check_same_layout(B.layout, psi.layout)
    if isinstance(B, OrthonormalBasis):
        a = expand_in_basis(psi, B)
        return (B.matrix * a).T
    if isinstance(B, SubspaceDecomposition):
        return np.array([B.projectors[l] @ psi.amps for l in B.labels])
    raise TypeError(f"expected a basis or decomposition, got {type(B).__name__}")


def mixture_expectation(S: SelfAdjointOperator, B, psi: StateVector) -> float:
    """Expected value of ``S`` if ``psi`` were the mixture of its components
    along ``B`` with Born weights."""
    _check_same_layout(S.layout, psi.layout)
    _require_normalized(psi)
    comps = _components(B, psi)
    Sc = comps @ S.matrix.T
    return float(np.sum(np.real(np.einsum("ij,ij->i", Sc.conj(), comps))))


def interference_term(S: SelfAdjointOperator, B: OrthonormalBasis, psi: StateVector, j: int, k: int) -> float:
    """``2 Re(conj(a_j) a_k <S psi_j, psi_k>)`` for basis indices ``j < k``."""
    _check_same_layout(S.layout, psi.layout, B.layout)
    n = len(B)
    if not (0 <= j < n and 0 <= k < n):
        raise IndexError(f"indices ({j}, {k}) out of range for a basis of {n} vectors")
    if j >= k:
        raise ValueError("interference terms are indexed with j < k")
    a = expand_in_basis(psi, B)
    vj, vk = B.matrix[:, j], B.matrix[:, k]
    return float(2.0 * np.real(np.conj(a[j]) * a[k] * np.vdot(S.matrix @ vj, vk)))


def interference_report(S: SelfAdjointOperator, B, psi: StateVector, tol: float = DEFAULT_TOL) -> InterferenceReport:
    _check_same_layout(S.layout, psi.layout)
    _require_normalized(psi)
    comps = _components(B, psi)
    Sc = comps @ S.matrix.T
    # gram[j, k] = <S c_j, c_k>
    gram = Sc.conj() @ comps.T
    mixture = float(np.sum(np.real(np.diag(gram))))
    terms = {}
    n = comps.shape[0]
    for j in range(n):
        for k in range(j + 1, n):
            terms[(j, k)] = float(2.0 * np.real(gram[j, k]))
    sup = expectation(S, psi)
    total = sum(terms.values())
    if abs(sup - mixture - total) > IDENTITY_TOL * max(1.0, float(np.max(np.abs(S.matrix)))):
        raise InvariantViolation(f"superposition {sup!r} != mixture {mixture!r} + interference {total!r}")
    max_abs = max((abs(t) for t in terms.values()), default=0.0)
    return InterferenceReport(sup, mixture, terms, max_abs, max_abs <= tol, tol)


def projector_interference(
    S: SelfAdjointOperator, r: float, B, psi: StateVector, tol: float = DEFAULT_TOL
) -> InterferenceReport:
    """Interference report for the probability of eigenvalue ``r`` of ``S``:
    the eigenprojector ``P_r`` takes the place of ``S``."""
    return interference_report(eigenprojector(S, r), B, psi, tol)


@dataclass(frozen=True)
class SafetyVerdict:
    safe: bool
    gap: float
    superposition: OutcomeDistribution = field(repr=False)
    mixture: OutcomeDistribution = field(repr=False)
    branch_weights: dict = field(repr=False, default_factory=dict)


def mixture_prediction(psi: StateVector, D, later) -> tuple[OutcomeDistribution, dict]:
    """``sum_m p_m born(collapse(psi, D, m), later)`` over outcomes ``m`` of
    ``D`` that can occur; also returns the weights ``p_m``."""
    D = as_measurement(D)
    later = as_measurement(later)
    weights = born_distribution(psi, D)
    acc = dict.fromkeys(later.labels, 0.0)
    used = {}
    for m, p in weights:
        if p <= 0.0:
            continue
        try:
            post = collapse(psi, D, m)
        except ZeroProbabilityError:
            # below the collapse threshold: contributes nothing measurable
            continue
        used[m] = p
        for label, q in born_distribution(post, later):
            acc[label] += p * q
    total = sum(acc.values())
    return OutcomeDistribution((l, v / total) for l, v in acc.items()), used


def collapse_safety(psi: StateVector, D, later, tol: float = DEFAULT_TOL) -> SafetyVerdict:
    """Does collapsing ``psi`` with respect to ``D`` change the predicted
    distribution of the ``later`` measurement?

    ``safe`` iff the largest per-outcome difference between the superposition
    prediction and the collapsed-mixture prediction is ``<= tol``.
    """
    later = as_measurement(later)
    _check_same_layout(psi.layout, as_measurement(D).layout, later.layout)
    sup = born_distribution(psi, later)
    mix, weights = mixture_prediction(psi, D, later)
    gap = sup.max_gap(mix)
    return SafetyVerdict(gap <= tol, gap, sup, mix, weights)
