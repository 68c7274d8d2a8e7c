"""Exact excess-risk predictions and Monte Carlo verification for correlated
factor regression models, covering the minimum-norm interpolator, ridge and
least-squares estimators."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .errors import FrmRiskError
from .model import (
    DenseCovariance,
    DenseLoadings,
    Dimensions,
    IdentityScaled,
    LeadingEigenvectors,
    ModelConfig,
    ModelInstance,
    ScaledUnitary,
    ToeplitzMix,
    build_loadings,
    build_toeplitz_mix,
    factor_snr,
    materialize,
    null_risk,
)
from .montecarlo import Aggregate, Gls, Ls, Ridge, TrialResult, fit, run_trials, sample_data
from .numerics import RngStream, bisect, minimize_scalar, normal_stream, psd_root, resolvent_trace, sym_eig
from .theory import (
    GlsPrediction,
    LrmEquivalent,
    LsPrediction,
    RidgePrediction,
    SpectralModel,
    build_spectral,
    frm_excess_risk,
    frm_to_lrm,
    gamma_gls_closed_uncorr,
    gls_limit_overparam,
    gls_predict,
    ls_predict,
    lrm_excess_risk,
    optimal_lambda,
    ridge_predict,
    solve_gamma_gls,
    solve_gamma_ridge,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND", "FrmRiskError", "__version__",
    "Dimensions", "IdentityScaled", "ToeplitzMix", "DenseCovariance",
    "ScaledUnitary", "LeadingEigenvectors", "DenseLoadings",
    "ModelConfig", "ModelInstance",
    "build_toeplitz_mix", "build_loadings", "materialize", "null_risk", "factor_snr",
    "RngStream", "normal_stream", "sym_eig", "psd_root", "resolvent_trace",
    "bisect", "minimize_scalar",
    "SpectralModel", "GlsPrediction", "RidgePrediction", "LsPrediction", "LrmEquivalent",
    "build_spectral", "solve_gamma_gls", "gls_predict", "solve_gamma_ridge", "ridge_predict",
    "ls_predict", "gamma_gls_closed_uncorr", "gls_limit_overparam", "optimal_lambda",
    "frm_to_lrm", "frm_excess_risk", "lrm_excess_risk",
    "Gls", "Ridge", "Ls", "TrialResult", "Aggregate",
    "sample_data", "fit", "run_trials",
]
