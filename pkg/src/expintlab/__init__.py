"""Exponential integrators on Fourier-spectral discretisations of semilinear PDEs."""

__version__ = "0.1.0"

from .errors import (
    BlowUpError,
    ConfigError,
    ContractionGuardError,
    ContractViolationError,
    DegenerateLadderError,
    DimensionError,
    ExpIntError,
    GridMismatchError,
    InvariantError,
    ResolvableRangeError,
    StageDivergenceError,
    UnreliableReferenceError,
    UnsupportedOrderError,
)
from .spectral import (
    DiagonalOperator,
    ModeGrid,
    SpectralState,
    apply_diag,
    project_Pm,
    project_Qm,
    to_physical,
    to_spectral,
    y_ell_norm,
)
from .phi import expm, phi, phi_diag, phi_matvec, phi_scalar
from .problems import (
    ProblemSpec,
    make_linear_commuting,
    make_nls,
    make_problem,
    make_wave,
    smooth_initial_data,
    y_ell_initial_data,
)
from .exprk import (
    ExponentialTableau,
    PhiCombination,
    StageSolveConfig,
    builtin_tableaus,
    get_tableau,
    integrate,
    solve_stages,
    step,
)
from .rosenbrock import assemble_jacobian, integrate_rosenbrock, remainder_G, rosenbrock_step
from .experiments import (
    ErrorLadder,
    GalerkinScan,
    OrderEstimate,
    estimate_order,
    galerkin_scan,
    order_scan,
    reference_solution,
    sharpness_probe,
    trajectory_error,
)
