"""Numerical lab for a quasi-periodic unitary CMV operator.

Continued-fraction arithmetic, Szego cocycles with closed-form growth rates,
log-scaled Dirichlet determinants, interpolation window diagnostics, and
finite-volume localization experiments.
"""

from .arithmetic import (
    BetaEstimate,
    Frequency,
    PhaseDiagnostic,
    ScaleClass,
    beta_estimate,
    cf_build,
    cf_expand,
    classify_scale,
    gamma_tilde,
    golden_mean,
    norm_qn_omega,
    torus_norm,
)
from .cocycle import (
    LyapunovEstimate,
    SpectralPoint,
    TransferProduct,
    check_rho_product,
    cocycle_product,
    lyapunov_closed_form,
    lyapunov_estimate,
    szego_matrix,
    upper_bound_check,
)
from .determinant import (
    LogComplex,
    PolyCoeffs,
    dirichlet_det,
    poisson_check,
    star,
    szego_connection_check,
)
from .interpolation import (
    SumDecomposition,
    WindowSelection,
    ave_low_check,
    cos_product_deviation,
    interpolation_defect,
    lagrange_eval,
    select_windows,
    sine_structure_check,
)
from .localization import (
    EigenfunctionProfile,
    ExperimentConfig,
    ResonanceProfile,
    fit_decay,
    resonance_profile,
    run_localization_experiment,
    truncation_spectrum,
)
from .model import (
    Coupling,
    FiniteCMV,
    VerblunskySequence,
    apply_w,
    build_finite_cmv,
    cmv_block,
    make_coupling,
    verblunsky,
)

__version__ = "0.1.0"
