"""quasiweyl: regularization matrices, quasi-derivative systems and Weyl
matrices for higher-order linear differential expressions with
distributional coefficients of mixed singularity orders.
"""

from .symbolic import CoeffExpression, Polynomial, sigma
from .model import (
    BoundaryForm,
    CoefficientFunction,
    CoefficientSet,
    DomainViolation,
    Geometry,
    LengthMismatch,
    NonDifferentiableKind,
    NonIntegrableTail,
    NotAPermutation,
    NotUnitLowerTriangular,
    OrderOutOfRange,
    SectorContext,
    SingularityOrders,
    ZeroRho,
    all_order_tuples,
    finite_interval,
    order_bound,
    order_roots,
    principal_rho,
    rho_in_sector,
    sector_of,
    singular_set,
    truncated_half_line,
    validate_boundary_form,
    validate_orders,
)
from .regularize import (
    AssociatedMatrix,
    ChiMatrix,
    IndexOutOfRange,
    QuadraticForm,
    ShapeMismatch,
    StructureReport,
    StructureViolation,
    associated_matrix,
    binomial_stencil,
    quadratic_form,
    quadratic_form_from_associated,
    regularize,
    structure_report,
    system_evaluator,
)
from .quasideriv import (
    NonPolynomialCoefficient,
    QuasiChain,
    apply_classical,
    quasi_chain,
    quasi_derivatives,
    random_residual_case,
    regularization_residual,
    system_matrix,
)
from .spectral import (
    AsymptoticProbe,
    BirkhoffMode,
    ConditioningWarning,
    FundamentalMatrix,
    IntegrationOverflow,
    SampledSystem,
    SingularAtLambda,
    WeylSample,
    asymptotic_probe,
    birkhoff_mode,
    f2_system,
    fundamental_matrix,
    integrate_system,
    sample_system,
    sturm_liouville_potential,
    weyl_limit_constant,
    weyl_matrix_finite,
    weyl_matrix_halfline,
)
from .equivalence import (
    ContinuityAtZeroRequired,
    InvalidCase,
    InvarianceReport,
    KnownBoundaryData,
    LOWER,
    N4_CASES,
    Problem,
    RAISE,
    VEquivalenceReport,
    boundary_knowns,
    finite_shift_n2,
    finite_shift_n4,
    problem_from_json,
    problem_to_json,
    required_knowns,
    shift_order_n2,
    shift_order_n4,
    v_equivalence_report,
    weyl_invariance_report,
)

__version__ = "0.1.0"
