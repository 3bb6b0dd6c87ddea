"""Higher-order perturbation traces of multivariate operator functions.

Dense-matrix machinery for commuting contraction tuples along linear paths:
confluent multivariate divided differences, explicit higher-order derivatives
of operator functions, the Taylor-remainder trace integral, per-term trace
bounds, and the linear functionals standing in for spectral shift measures —
all wired to seeded ensembles and batch verification suites.
"""

from .divdiff import (
    DividedDiffSpec,
    complete_homogeneous,
    divdiff_apply,
    divdiff_apply_recursive,
    divdiff_bound,
    divdiff_integral,
    divdiff_monomial,
    divdiff_recursive,
    divdiff_univariate,
)
from .ensembles import (
    ENSEMBLE_KINDS,
    EnsembleDraw,
    EnsembleSpec,
    FunctionSpec,
    adversarial_path,
    draw_function,
    draw_path,
    draw_path_with_data,
    draw_projector_family,
    make_rng,
)
from .estimates import (
    EstimateReport,
    HSBlockReport,
    SweepConfig,
    SweepReport,
    estimate_sweep,
    hs_block_bound_check,
    trace_estimate_check,
)
from .matcore import (
    CommutingTuple,
    PerturbationPath,
    as_cmatrix,
    build_path,
    certify_tuple,
    op_norm,
    ordered_monomial,
    schatten_norm,
    trace,
)
from .mpoly import (
    DomainKind,
    MultiPoly,
    VonNeumannReport,
    grid_sup,
    sup_norm,
    von_neumann_check,
)
from .opderiv import (
    DerivTermSpec,
    compositions,
    d_term,
    enumerate_terms,
    finite_difference,
    full_derivative,
    power_derivative,
)
from .remainder import (
    RemainderReport,
    remainder_check,
    remainder_trace_integral,
    taylor_remainder,
)
from .ssm import (
    MomentTable,
    ReductionReport,
    SSMFunctional,
    TraceFormulaReport,
    moment_table,
    phi,
    single_variable_reduction,
    trace_formula_check,
    tv_bound,
)
from .suites import RunConfig, SuiteResult, run_all, run_suite

__version__ = "0.1.0"
