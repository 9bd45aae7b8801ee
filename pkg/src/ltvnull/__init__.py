"""Canonical forms, memoryless output-feedback nullification and sampling of
discrete-time linear time-varying SISO systems."""

from .canonical import (
    CanonicalResult,
    EquivalenceTransform,
    IllConditionedError,
    NotControllableError,
    apply_equivalence,
    canonical_transform,
    invariance_residual,
    is_canonical_form,
)
from .nullifier import (
    NullificationError,
    all_states_bound,
    build_construction,
    find_k0,
    k0_bound,
    nullify_all,
    nullify_state,
    state_bound,
    uniform_bound,
)
from .sampling import (
    CtSystem,
    IntegrationError,
    coeff_matrix_det,
    continuous_controllability_matrix,
    delta_sweep,
    discretize,
    f_derivative_check,
    transition,
)
from .scalar import FLOAT, RATIONAL, ScalarPolicy, SingularMatrixError
from .system import (
    FeedbackSchedule,
    IndexOutOfRange,
    LtvSystem,
    Trajectory,
    adjugate,
    controllability_matrix,
    decoupling_term,
    is_completely_controllable,
    is_completely_observable,
    observability_matrix,
    simulate,
)

__version__ = "0.1.0"
