"""
Complex linear algebra over labeled finite-dimensional tensor-product spaces.

Amplitudes are stored densely, row-major over the mixed-radix index defined
by the factor order of a :class:`SpaceLayout` (first factor is the most
significant digit, exactly as ``np.kron`` orders a product).

Inner-product convention
------------------------
``inner(x, y)`` is conjugate-linear in the FIRST argument and linear in the
second::

    inner(a * x, b * y) == conj(a) * b * inner(x, y)

so that expansion coefficients are ``a_j = inner(basis_j, psi)`` and the
expectation of ``T`` is ``inner(T psi, psi)``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BasisError,
    DimensionCapError,
    InvariantViolation,
    LayoutMismatchError,
    NormalizationError,
)

STRUCT_TOL = 1e-9
DEFAULT_DIM_CAP = 2**20


def dim_cap() -> int:
    """Current dimension cap; ``WIGNERLAB_DIM_CAP`` overrides the default."""
    raw = os.environ.get("WIGNERLAB_DIM_CAP")
    if raw is None:
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise DimensionCapError(f"WIGNERLAB_DIM_CAP must be an integer, got {raw!r}")
    if cap < 1:
        raise DimensionCapError("WIGNERLAB_DIM_CAP must be positive")
    return cap


# ---------------------------------------------------------------------------
# Layouts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered tensor factors, each with its own ordered outcome labels.

    >>> L = SpaceLayout([("coin", ["h", "t"]), ("spin", ["u", "d"])])
    >>> L.dims, L.total_dim
    ((2, 2), 4)
    """

    factors: tuple

    def __post_init__(self):
        if isinstance(self.factors, Mapping):
            items = list(self.factors.items())
        else:
            items = list(self.factors)
        norm = tuple((str(name), tuple(str(l) for l in labels)) for name, labels in items)
        object.__setattr__(self, "factors", norm)
        names = [n for n, _ in norm]
        if len(set(names)) != len(names):
            raise LayoutMismatchError(f"duplicate factor labels in {names}")
        for name, labels in norm:
            if len(labels) < 1:
                raise LayoutMismatchError(f"factor {name!r} has no outcome labels")
            if len(set(labels)) != len(labels):
                raise LayoutMismatchError(f"duplicate outcome labels in factor {name!r}")
        total = 1
        for _, labels in norm:
            total *= len(labels)
        cap = dim_cap()
        if total > cap:
            raise DimensionCapError(f"total dimension {total} exceeds cap {cap}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(len(l) for _, l in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.factors else 1

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise LayoutMismatchError(f"unknown factor {name!r}; layout has {list(self.names)}")

    def labels(self, name: str) -> tuple[str, ...]:
        return self.factors[self.index(name)][1]

    def dim(self, name: str) -> int:
        return len(self.labels(name))

    def outcome_index(self, name: str, label: str) -> int:
        labels = self.labels(name)
        try:
            return labels.index(label)
        except ValueError:
            raise LayoutMismatchError(f"factor {name!r} has no outcome {label!r}")

    def sublayout(self, names: Iterable[str]) -> "SpaceLayout":
        return SpaceLayout([(n, self.labels(n)) for n in names])

    def complement(self, names: Iterable[str]) -> tuple[str, ...]:
        names = set(names)
        for n in names:
            self.index(n)
        return tuple(n for n in self.names if n not in names)

    def concat(self, other: "SpaceLayout") -> "SpaceLayout":
        clash = set(self.names) & set(other.names)
        if clash:
            raise LayoutMismatchError(f"duplicate factor labels {sorted(clash)}")
        return SpaceLayout(self.factors + other.factors)


def _reorder_index(layout: SpaceLayout, order: Sequence[str]) -> np.ndarray:
    """For every flat index in ``layout`` order, the flat index of the same
    basis element when the factors are arranged as ``order``."""
    order = tuple(order)
    if sorted(order) != sorted(layout.names):
        raise LayoutMismatchError(f"{order} is not a permutation of {layout.names}")
    if order == layout.names:
        return np.arange(layout.total_dim)
    dims = [layout.dim(n) for n in order]
    grid = np.arange(layout.total_dim).reshape(dims)
    axes = [order.index(n) for n in layout.names]
    return grid.transpose(axes).ravel()


def _check_same_layout(*layouts: SpaceLayout):
    first = layouts[0]
    for other in layouts[1:]:
        if other != first:
            raise LayoutMismatchError(f"layout mismatch: {first.names} vs {other.names}")


# ---------------------------------------------------------------------------
# States and structured sets of states
# ---------------------------------------------------------------------------


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=np.complex128)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StateVector:
    layout: SpaceLayout
    amps: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amps).reshape(-1)
        if amps.shape[0] != self.layout.total_dim:
            raise LayoutMismatchError(
                f"{amps.shape[0]} amplitudes for a layout of dimension {self.layout.total_dim}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("state amplitudes must be finite")
        object.__setattr__(self, "amps", amps)

    @cached_property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    @property
    def normalized(self) -> bool:
        return abs(self.norm - 1.0) <= STRUCT_TOL

    def normalize(self) -> "StateVector":
        n = self.norm
        if n == 0.0:
            raise NormalizationError("cannot normalize the zero vector")
        return StateVector(self.layout, self.amps / n)

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_same_layout(self.layout, other.layout)
        return StateVector(self.layout, self.amps + other.amps)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _check_same_layout(self.layout, other.layout)
        return StateVector(self.layout, self.amps - other.amps)

    def __mul__(self, scalar) -> "StateVector":
        return StateVector(self.layout, self.amps * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "StateVector":
        return StateVector(self.layout, self.amps / complex(scalar))

    def __neg__(self) -> "StateVector":
        return StateVector(self.layout, -self.amps)

    def allclose(self, other: "StateVector", atol: float = 1e-12) -> bool:
        return self.layout == other.layout and bool(np.max(np.abs(self.amps - other.amps), initial=0.0) <= atol)

    def reorder(self, order: Sequence[str]) -> "StateVector":
        """Same state expressed with the factors arranged as ``order``."""
        idx = _reorder_index(self.layout, order)
        new = self.layout.sublayout(order)
        out = np.empty_like(self.amps)
        out[idx] = self.amps
        return StateVector(new, out)

    def marginal(self, name: str) -> np.ndarray:
        """Outcome probabilities of a single factor (squared amplitudes summed
        over every other factor)."""
        axis = self.layout.index(name)
        p = np.abs(self.amps.reshape(self.layout.dims)) ** 2
        other = tuple(i for i in range(len(self.layout.dims)) if i != axis)
        return p.sum(axis=other)

    def __repr__(self):
        return f"StateVector({list(self.layout.names)}, {np.array2string(self.amps, precision=4)})"


def ket(layout: SpaceLayout, labels: Mapping[str, str] | Sequence[str]) -> StateVector:
    """Computational basis element picked by one outcome label per factor."""
    if isinstance(labels, Mapping):
        labels = [labels[n] for n in layout.names]
    if len(labels) != len(layout.names):
        raise LayoutMismatchError("one label per factor is required")
    flat = 0
    for name, label in zip(layout.names, labels):
        flat = flat * layout.dim(name) + layout.outcome_index(name, label)
    amps = np.zeros(layout.total_dim, dtype=np.complex128)
    amps[flat] = 1.0
    return StateVector(layout, amps)


def state(layout: SpaceLayout, amps) -> StateVector:
    return StateVector(layout, amps)


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Orthonormal vectors with one outcome label each.

    Orthonormal *sets* (fewer vectors than the dimension) are allowed; check
    ``complete`` before treating one as a basis of the whole space.
    """

    layout: SpaceLayout
    vectors: tuple
    labels: tuple = None

    def __post_init__(self):
        vectors = tuple(self.vectors)
        labels = tuple(str(l) for l in self.labels) if self.labels is not None else tuple(
            str(i) for i in range(len(vectors))
        )
        if len(labels) != len(vectors):
            raise BasisError("one outcome label per vector is required")
        if len(set(labels)) != len(labels):
            raise BasisError(f"duplicate outcome labels {labels}")
        for v in vectors:
            _check_same_layout(self.layout, v.layout)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "labels", labels)
        if vectors:
            gram = self.matrix.conj().T @ self.matrix
            err = np.max(np.abs(gram - np.eye(len(vectors))))
            if err > STRUCT_TOL:
                raise BasisError(f"vectors are not orthonormal (max Gram error {err:.3e})")
        if len(vectors) > self.layout.total_dim:
            raise BasisError("more vectors than the space dimension")

    @cached_property
    def matrix(self) -> np.ndarray:
        """Columns are the basis vectors."""
        if not self.vectors:
            return np.zeros((self.layout.total_dim, 0), dtype=np.complex128)
        return np.column_stack([v.amps for v in self.vectors])

    @property
    def complete(self) -> bool:
        return len(self.vectors) == self.layout.total_dim

    def __len__(self):
        return len(self.vectors)

    def __getitem__(self, key) -> StateVector:
        if isinstance(key, str):
            return self.vectors[self.labels.index(key)]
        return self.vectors[key]


def computational_basis(layout: SpaceLayout) -> OrthonormalBasis:
    eye = np.eye(layout.total_dim, dtype=np.complex128)
    vectors = [StateVector(layout, eye[i]) for i in range(layout.total_dim)]
    labels = [",".join(t) for t in _label_tuples(layout)]
    return OrthonormalBasis(layout, vectors, labels)


def _label_tuples(layout: SpaceLayout):
    from itertools import product

    return list(product(*[labels for _, labels in layout.factors]))


@dataclass(frozen=True, eq=False)
class SubspaceDecomposition:
    """Mutually orthogonal subspaces, each spanned by orthonormal vectors and
    tagged with an outcome label; together they span the whole space."""

    layout: SpaceLayout
    blocks: tuple

    def __post_init__(self):
        blocks = tuple((str(label), tuple(vecs)) for label, vecs in self.blocks)
        labels = [b[0] for b in blocks]
        if len(set(labels)) != len(labels):
            raise BasisError(f"duplicate outcome labels {labels}")
        for _, vecs in blocks:
            if not vecs:
                raise BasisError("every block needs at least one spanning vector")
            for v in vecs:
                _check_same_layout(self.layout, v.layout)
        object.__setattr__(self, "blocks", blocks)
        total = sum(len(v) for _, v in blocks)
        if total != self.layout.total_dim:
            raise BasisError(f"block dimensions sum to {total}, space dimension is {self.layout.total_dim}")
        allv = np.column_stack([v.amps for _, vecs in blocks for v in vecs])
        err = np.max(np.abs(allv.conj().T @ allv - np.eye(total)))
        if err > STRUCT_TOL:
            raise BasisError(f"block vectors are not orthonormal (max Gram error {err:.3e})")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(b[0] for b in self.blocks)

    def block(self, label: str) -> tuple:
        for l, vecs in self.blocks:
            if l == label:
                return vecs
        raise KeyError(label)

    @cached_property
    def projectors(self) -> dict:
        out = {}
        for label, vecs in self.blocks:
            V = np.column_stack([v.amps for v in vecs])
            out[label] = V @ V.conj().T
        return out

    @classmethod
    def from_basis(cls, basis: OrthonormalBasis) -> "SubspaceDecomposition":
        if not basis.complete:
            raise BasisError("basis is incomplete")
        return cls(basis.layout, [(l, (v,)) for l, v in zip(basis.labels, basis.vectors)])


def _check_unitary(m: np.ndarray, what="matrix"):
    err = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])), initial=0.0)
    if err > STRUCT_TOL:
        raise InvariantViolation(f"{what} is not unitary (max error {err:.3e})")


@dataclass(frozen=True, eq=False)
class UnitaryMap:
    layout: SpaceLayout
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        n = self.layout.total_dim
        if m.shape != (n, n):
            raise LayoutMismatchError(f"matrix shape {m.shape} does not match dimension {n}")
        _check_unitary(m, "UnitaryMap")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True, eq=False)
class SelfAdjointOperator:
    layout: SpaceLayout
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        n = self.layout.total_dim
        if m.shape != (n, n):
            raise LayoutMismatchError(f"matrix shape {m.shape} does not match dimension {n}")
        err = np.max(np.abs(m - m.conj().T), initial=0.0)
        if err > STRUCT_TOL:
            raise InvariantViolation(f"operator is not self-adjoint (max error {err:.3e})")
        object.__setattr__(self, "matrix", m)

    def __call__(self, psi: StateVector) -> StateVector:
        _check_same_layout(self.layout, psi.layout)
        return StateVector(self.layout, self.matrix @ psi.amps)

    def __add__(self, other):
        _check_same_layout(self.layout, other.layout)
        return SelfAdjointOperator(self.layout, self.matrix + other.matrix)

    def __mul__(self, scalar: float):
        return SelfAdjointOperator(self.layout, self.matrix * float(scalar))

    __rmul__ = __mul__


def identity(layout: SpaceLayout) -> SelfAdjointOperator:
    return SelfAdjointOperator(layout, np.eye(layout.total_dim))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def inner(x: StateVector, y: StateVector) -> complex:
    """<x, y>, conjugate-linear in ``x``."""
    _check_same_layout(x.layout, y.layout)
    return complex(np.vdot(x.amps, y.amps))


def tensor(x: StateVector, y: StateVector) -> StateVector:
    layout = x.layout.concat(y.layout)
    return StateVector(layout, np.kron(x.amps, y.amps))


def tensor_all(*states: StateVector) -> StateVector:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def expand_in_basis(psi: StateVector, basis: OrthonormalBasis) -> np.ndarray:
    """Coefficients ``a_j = <basis_j, psi>`` of ``psi`` in a complete basis."""
    _check_same_layout(psi.layout, basis.layout)
    if not basis.complete:
        raise BasisError(f"basis has {len(basis)} vectors, space dimension is {psi.layout.total_dim}")
    return basis.matrix.conj().T @ psi.amps


def apply_unitary(U: UnitaryMap, psi: StateVector) -> StateVector:
    _check_same_layout(U.layout, psi.layout)
    out = StateVector(psi.layout, U.matrix @ psi.amps)
    if abs(out.norm - psi.norm) > STRUCT_TOL:
        raise InvariantViolation("unitary failed to preserve the norm")
    return out


def embed(local: StateVector, rest: StateVector, layout: SpaceLayout) -> StateVector:
    """``local ⊗ rest`` re-expressed in the factor order of ``layout``."""
    return tensor(local, rest).reorder(layout.names)


def lift_operator(matrix: np.ndarray, local: SpaceLayout, layout: SpaceLayout) -> np.ndarray:
    """Matrix of ``A ⊗ I`` on ``layout``, where ``A`` acts on the factors of
    ``local`` (in ``local``'s order) and the identity on everything else."""
    for name, labels in local.factors:
        if layout.labels(name) != labels:
            raise LayoutMismatchError(f"factor {name!r} has different outcome labels in the two layouts")
    rest = layout.complement(local.names)
    drest = int(np.prod([layout.dim(n) for n in rest], dtype=np.int64)) if rest else 1
    full = np.kron(np.asarray(matrix), np.eye(drest))
    idx = _reorder_index(layout, local.names + rest)
    return full[np.ix_(idx, idx)]


def lift_decomposition(local, layout: SpaceLayout) -> SubspaceDecomposition:
    """Extend a decomposition (or basis) on a subset of factors to the whole
    layout: block ``m`` becomes ``span{v ⊗ e}`` for ``v`` in the local block
    and ``e`` running over the computational basis of the other factors."""
    if isinstance(local, OrthonormalBasis):
        local = SubspaceDecomposition.from_basis(local)
    sub = local.layout
    for name, labels in sub.factors:
        if layout.labels(name) != labels:
            raise LayoutMismatchError(f"factor {name!r} has different outcome labels in the two layouts")
    rest_names = layout.complement(sub.names)
    rest_layout = layout.sublayout(rest_names)
    rest_basis = computational_basis(rest_layout).vectors
    order = sub.names + rest_names
    idx = _reorder_index(layout, order)
    blocks = []
    for label, vecs in local.blocks:
        lifted = []
        for v in vecs:
            for e in rest_basis:
                lifted.append(StateVector(layout, np.kron(v.amps, e.amps)[idx]))
        blocks.append((label, tuple(lifted)))
    return SubspaceDecomposition(layout, blocks)


def product_decomposition(*decomps, sep: str = ",") -> SubspaceDecomposition:
    """Joint decomposition of measurements on disjoint factor sets.

    Each argument must live on the whole target layout (e.g. produced by
    :func:`lift_decomposition`) and the blocks must commute; the joint block
    ``(m1, m2, ...)`` is the intersection, obtained from the product of the
    block projectors.
    """
    layout = decomps[0].layout
    for d in decomps:
        _check_same_layout(layout, d.layout)
    from itertools import product

    blocks = []
    for combo in product(*[d.blocks for d in decomps]):
        P = np.eye(layout.total_dim, dtype=np.complex128)
        for d, (label, _) in zip(decomps, combo):
            P = P @ d.projectors[label]
        rank = int(round(np.real(np.trace(P))))
        if rank == 0:
            continue
        w, V = np.linalg.eigh((P + P.conj().T) / 2)
        cols = V[:, w > 0.5]
        if cols.shape[1] != rank:
            raise BasisError("decompositions do not commute")
        label = sep.join(l for l, _ in combo)
        blocks.append((label, tuple(StateVector(layout, c) for c in cols.T)))
    return SubspaceDecomposition(layout, blocks)


def orthogonal_complement(vectors: Sequence[StateVector], layout: SpaceLayout) -> list[StateVector]:
    """Orthonormal spanning set of the complement of ``span(vectors)``."""
    n = layout.total_dim
    if not vectors:
        return [StateVector(layout, row) for row in np.eye(n, dtype=np.complex128)]
    V = np.column_stack([v.amps for v in vectors])
    Q, _ = np.linalg.qr(np.hstack([V, np.eye(n, dtype=np.complex128)]), mode="complete")
    comp = Q[:, V.shape[1]:]
    # project out V explicitly; QR of rank-deficient stacks can leave dust
    comp = comp - V @ (V.conj().T @ comp)
    comp, _ = np.linalg.qr(comp)
    comp[np.abs(comp) < 1e-15] = 0.0
    return [StateVector(layout, c) for c in comp.T]


def complete_decomposition(blocks, layout: SpaceLayout, rest_label: str) -> SubspaceDecomposition:
    """Decomposition made of ``blocks`` plus one block ``rest_label`` holding
    the orthogonal complement (omitted when the blocks already span)."""
    blocks = [(l, tuple(v)) for l, v in blocks]
    used = [v for _, vecs in blocks for v in vecs]
    if len(used) < layout.total_dim:
        blocks.append((rest_label, tuple(orthogonal_complement(used, layout))))
    return SubspaceDecomposition(layout, blocks)


def completing_unitary(first_column: np.ndarray) -> np.ndarray:
    """A unitary whose first column is the given unit vector."""
    v = np.asarray(first_column, dtype=np.complex128)
    n = v.shape[0]
    if abs(np.linalg.norm(v) - 1) > STRUCT_TOL:
        raise NormalizationError("column must be a unit vector")
    Q, R = np.linalg.qr(np.column_stack([v, np.eye(n, dtype=np.complex128)]), mode="complete")
    Q = Q.copy()
    Q[:, 0] *= R[0, 0]
    return Q


@dataclass(frozen=True)
class ProductTest:
    """Result of :func:`is_product`; ``factors`` is ``None`` when entangled."""

    product: bool
    singular_values: np.ndarray = field(repr=False)
    factors: tuple | None = None

    def __bool__(self):
        return self.product


def is_product(psi: StateVector, split: Iterable[str], rtol: float = 1e-9) -> ProductTest:
    """Whether ``psi`` factorizes across ``split | rest``.

    Rank of the amplitude matrix reshaped along the split, with singular values
    beyond the first counted as zero when ``<= rtol * s1``. When it is a product,
    the returned factors satisfy ``tensor(x, y).reorder(...) == psi``.
    """
    split = tuple(split)
    rest = psi.layout.complement(split)
    a_layout = psi.layout.sublayout(split)
    b_layout = psi.layout.sublayout(rest)
    m = psi.reorder(split + rest).amps.reshape(a_layout.total_dim, b_layout.total_dim)
    U, s, Vh = np.linalg.svd(m)
    if s.size == 0 or s[0] == 0.0:
        return ProductTest(False, s)
    if s.size > 1 and s[1] > rtol * s[0]:
        return ProductTest(False, s)
    x = StateVector(a_layout, U[:, 0] * s[0])
    y = StateVector(b_layout, Vh[0, :])
    return ProductTest(True, s, (x, y))


def phase_distance(x: StateVector, y: StateVector) -> float:
    """``min_alpha max_j |x_j - e^{i alpha} y_j|`` with ``alpha`` taken from the
    phase of the overlap ``<y, x>``."""
    _check_same_layout(x.layout, y.layout)
    ov = np.vdot(y.amps, x.amps)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.max(np.abs(x.amps - phase * y.amps), initial=0.0))


def random_state(layout: SpaceLayout, rng: np.random.Generator) -> StateVector:
    z = rng.normal(size=layout.total_dim) + 1j * rng.normal(size=layout.total_dim)
    return StateVector(layout, z / np.linalg.norm(z))


def random_unitary_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_basis(layout: SpaceLayout, rng: np.random.Generator, labels=None) -> OrthonormalBasis:
    U = random_unitary_matrix(layout.total_dim, rng)
    return OrthonormalBasis(layout, [StateVector(layout, c) for c in U.T], labels)


def random_hermitian(layout: SpaceLayout, rng: np.random.Generator) -> SelfAdjointOperator:
    n = layout.total_dim
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return SelfAdjointOperator(layout, (z + z.conj().T) / 2)


def qudits(*dims: int, prefix: str = "q") -> SpaceLayout:
    """Layout of anonymous factors ``q0, q1, ...`` with labels ``0..d-1``."""
    return SpaceLayout([(f"{prefix}{i}", [str(j) for j in range(d)]) for i, d in enumerate(dims)])
