"""wignerlab: exact state-vector analysis of nested-observer measurement scenarios."""

from .errors import (
    BasisError,
    DimensionCapError,
    InvariantViolation,
    LayoutMismatchError,
    NormalizationError,
    ScenarioError,
    ScenarioParseError,
    WignerLabError,
    ZeroProbabilityError,
)
from .interference import (
    InterferenceReport,
    SafetyVerdict,
    collapse_safety,
    interference_report,
    interference_term,
    mixture_expectation,
    projector_interference,
)
from .measure import (
    MeasurementSpec,
    OutcomeDistribution,
    born_distribution,
    collapse,
    eigen_probability,
    expectation,
    observable_from,
)
from .qcore import (
    OrthonormalBasis,
    SelfAdjointOperator,
    SpaceLayout,
    StateVector,
    SubspaceDecomposition,
    UnitaryMap,
    apply_unitary,
    computational_basis,
    expand_in_basis,
    inner,
    is_product,
    ket,
    lift_decomposition,
    tensor,
)

__version__ = "0.1.0"
