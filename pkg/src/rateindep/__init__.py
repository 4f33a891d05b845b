"""Incremental-minimization solver and verification harness for
rate-independent evolutions with a quadratic gradient regularizer."""

import os as _os

# Pin numeric thread counts before numpy is first imported anywhere in
# the package; explicit user settings of the BLAS variables win.
if "RATEINDEP_THREADS" in _os.environ:
    _n = _os.environ["RATEINDEP_THREADS"]
    for _var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        _os.environ.setdefault(_var, _n)

__version__ = "0.1.0"

from .grid import (  # noqa: E402
    Field,
    Grid,
    TimePartition,
    gradient,
    hessian_interior,
    lp_norm,
    poincare_constant,
    read_snapshot,
    write_snapshot,
)
from .energy import (  # noqa: E402
    EnergySpec,
    custom_polynomial,
    double_well,
    dw0,
    quadratic,
    validate_convexity,
    validate_growth,
    w0,
)
from .dissipation import (  # noqa: E402
    DissipationSpec,
    euclidean,
    prox_r1,
    r1,
    subdiff_residual,
    weighted_l1,
    yield_bound,
)
from .elliptic import (  # noqa: E402
    CoeffField,
    apply_operator,
    bilinear_form,
    constant_anisotropic,
    laplacian,
    time_modulated,
    validate_coeffs,
)
from .loading import (  # noqa: E402
    LoadingSpec,
    analytic_loading,
    reparametrize,
    sampled_loading,
    space_bump,
    space_sine,
    space_uniform,
    time_constant,
    time_ramp,
    time_sine,
)
from .rothe import (  # noqa: E402
    Problem,
    RunResult,
    SolverConfig,
    SolverError,
    StepResult,
    incremental_functional,
    run_evolution,
    step_minimize,
)

__all__ = [
    "__version__",
    "Field",
    "Grid",
    "TimePartition",
    "gradient",
    "hessian_interior",
    "lp_norm",
    "poincare_constant",
    "read_snapshot",
    "write_snapshot",
    "EnergySpec",
    "custom_polynomial",
    "double_well",
    "dw0",
    "quadratic",
    "validate_convexity",
    "validate_growth",
    "w0",
    "DissipationSpec",
    "euclidean",
    "prox_r1",
    "r1",
    "subdiff_residual",
    "weighted_l1",
    "yield_bound",
    "CoeffField",
    "apply_operator",
    "bilinear_form",
    "constant_anisotropic",
    "laplacian",
    "time_modulated",
    "validate_coeffs",
    "LoadingSpec",
    "analytic_loading",
    "reparametrize",
    "sampled_loading",
    "space_bump",
    "space_sine",
    "space_uniform",
    "time_constant",
    "time_ramp",
    "time_sine",
    "Problem",
    "RunResult",
    "SolverConfig",
    "SolverError",
    "StepResult",
    "incremental_functional",
    "run_evolution",
    "step_minimize",
]
