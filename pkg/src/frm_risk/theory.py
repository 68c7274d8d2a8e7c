"""Closed-form excess-risk predictors for the minimum-norm interpolator (GLS),
ridge and least-squares estimators, plus limit formulas, optimal ridge tuning
and the equivalence map onto a plain linear regression model.

Every predictor is a plug-in evaluation at the configured finite dimensions:
a scalar fixed point gamma solved on the spectrum of the feature second-moment
matrix, then a handful of spectral sums. Compact matrix-form twins of the
spectral sums are provided for cross-checking.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import resolvent_trace as _rt
from ._kernels import weighted_resolvent_sum as _wrs
from .errors import IllConditioned, InterpolationSingularity, InvalidParameter, NotPsd, RegimeError
from .numerics import bisect, minimize_scalar, sym_eig

_SINGULARITY_FLOOR = 1e-8   # declare divergence when 1 - alpha*a2 drops below this
_DUAL_PATH_TOL = 1e-10      # spectral vs compact agreement enforced in ls_predict
DEFAULT_LAMBDA_RANGE = (1e-6, 1e3)


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Spectral substrate shared by all predictors.

    d holds the eigenvalues of the feature second-moment matrix
    M = L' Sigma_Z L + Sigma_E (ascending); cbar the signal projected through
    the loadings onto the eigenbasis; signal_energy the factor-covariance
    quadratic form of the signal.
    """

    n: int
    d: np.ndarray
    cbar: np.ndarray
    signal_energy: float
    d_sq: np.ndarray = None
    cbar_sq: np.ndarray = None
    cbar_sq_d: np.ndarray = None

    def __post_init__(self):
        if self.d_sq is None:
            object.__setattr__(self, "d_sq", self.d * self.d)
        if self.cbar_sq is None:
            object.__setattr__(self, "cbar_sq", self.cbar * self.cbar)
        if self.cbar_sq_d is None:
            object.__setattr__(self, "cbar_sq_d", self.cbar_sq * self.d)


@dataclass(frozen=True)
class GlsPrediction:
    gamma_hat: float
    a1: float
    a2: float
    sigma_bar_sq: float
    risk: float
    objective: float    # squared norm of the interpolator
    nu1_hat: float

    @property
    def norm_sq(self):
        return self.objective

    @property
    def residual_sq(self):
        return 0.0


@dataclass(frozen=True)
class RidgePrediction:
    lam: float
    gamma_hat: float
    a1r: float
    a2r: float
    sigma_bar_sq: float
    risk: float
    objective: float
    nu1_hat: float
    residual_sq: float
    norm_sq: float


@dataclass(frozen=True)
class LsPrediction:
    gamma_hat: float
    a1r: float
    sigma_bar_sq: float
    risk: float
    objective: float
    norm_sq: float
    residual_sq: float
    nu1_hat: float


@dataclass(frozen=True, eq=False)
class LrmEquivalent:
    """Linear-regression model induced by the factor model: coefficients,
    inflated noise variance, and the constant risk offset between the two."""

    beta_ddot: np.ndarray
    sigma_ddot_sq: float
    offset: float


def build_spectral(instance):
    """Eigendecompose M = L' Sigma_Z L + Sigma_E and project the signal."""
    L = instance.loadings
    M = L.T @ instance.factor_cov @ L + instance.feature_noise_cov
    fac = sym_eig(M)
    if fac.eigenvalues[0] <= 0.0:
        raise NotPsd(f"feature second-moment matrix has eigenvalue {fac.eigenvalues[0]:.3e} <= 0")
    v = L.T @ (instance.factor_cov @ instance.beta_bar)
    cbar = fac.basis.T @ v
    se = float(instance.beta_bar @ instance.factor_cov @ instance.beta_bar)
    return SpectralModel(n=instance.dims.n, d=fac.eigenvalues, cbar=cbar, signal_energy=se)


def _newton_polish(x, f, fprime, lo, hi, iters=4):
    # quadratic cleanup of a bisection root; keeps the best iterate seen
    fx = f(x)
    for _ in range(iters):
        slope = fprime(x)
        if slope == 0.0:
            break
        x_new = x - fx / slope
        if not lo < x_new < hi:
            break
        f_new = f(x_new)
        if abs(f_new) >= abs(fx):
            break
        x, fx = x_new, f_new
    return x


def solve_gamma_gls(spec, alpha):
    """Unique gamma > 0 with (1/n) sum 1/(1 + gamma d_i) = 1 - alpha."""
    if not 0.0 < alpha < 1.0:
        raise RegimeError(f"interpolator fixed point needs alpha in (0,1), got {alpha}")
    d, n = spec.d, spec.n

    def residual(g):
        return _rt(d, 1.0, g, 1) - (1.0 - alpha)

    def slope(g):
        return -_wrs(d, d, 1.0, g, 2) / n

    g = bisect(lambda g: _rt(d, 1.0, g, 1), 1.0 - alpha, 0.0, 1.0, rel_tol=1e-13)
    return _newton_polish(g, residual, slope, 0.0, math.inf)


def gls_predict(spec, alpha, sigma_bar_sq):
    """Excess risk and optimizing quantities of the minimum-norm interpolator."""
    g = solve_gamma_gls(spec, alpha)
    se = spec.signal_energy
    s1 = _wrs(spec.cbar_sq, spec.d, 1.0, g, 1)
    s2 = _wrs(spec.cbar_sq, spec.d, 1.0, g, 2)
    a1 = se - g * (s1 + s2)
    a2 = (g * g / (alpha * alpha)) * _wrs(spec.d_sq, spec.d, 1.0, g, 2) / spec.n
    denom = 1.0 - alpha * a2
    if denom < _SINGULARITY_FLOOR:
        raise InterpolationSingularity(f"risk denominator 1 - alpha*a2 = {denom:.3e} at alpha = {alpha}")
    risk = (a1 + alpha * sigma_bar_sq * a2) / denom
    objective = -g * g * s1 + g * se + g * sigma_bar_sq
    nu1 = 2.0 * g * math.sqrt(risk + sigma_bar_sq) / math.sqrt(alpha)
    return GlsPrediction(gamma_hat=g, a1=a1, a2=a2, sigma_bar_sq=sigma_bar_sq,
                         risk=risk, objective=objective, nu1_hat=nu1)


def solve_gamma_ridge(spec, alpha, lam):
    """Unique gamma > 0 with lam*(1/n) sum 1/(lam + gamma d_i) = 1 - alpha(1 - gamma).

    lam = 0 is the least-squares limit and is admitted only for alpha > 1,
    where the fixed point degenerates to gamma = 1 - 1/alpha.
    """
    if alpha <= 0.0:
        raise RegimeError(f"alpha must be > 0, got {alpha}")
    if lam < 0.0:
        raise InvalidParameter(f"lambda must be >= 0, got {lam}")
    if lam == 0.0:
        if alpha <= 1.0:
            raise RegimeError(f"lambda = 0 requires alpha > 1, got {alpha}")
        return 1.0 - 1.0 / alpha
    d, n = spec.d, spec.n

    # work with the 1/lam-normalized residual so the root stays accurate as
    # lam -> 0, where the equation degenerates to the interpolator fixed point
    def residual(g):
        return _rt(d, lam, g, 1) - (1.0 - alpha * (1.0 - g)) / lam

    def slope(g):
        return -_wrs(d, d, lam, g, 2) / n - alpha / lam

    # residual(0) = alpha/lam > 0 and residual(1) < 0: the root lives in (0, 1)
    g = bisect(residual, 0.0, 0.0, 1.0, rel_tol=1e-13)
    return _newton_polish(g, residual, slope, 0.0, 1.0)


def ridge_predict(spec, alpha, lam, sigma_bar_sq):
    """Excess risk and optimizing quantities of the ridge estimator."""
    g = solve_gamma_ridge(spec, alpha, lam)
    se = spec.signal_energy
    n = spec.n
    t1 = _wrs(spec.cbar_sq, spec.d, lam, g, 1)
    t2 = _wrs(spec.cbar_sq_d, spec.d, lam, g, 2)
    a1r = se - 2.0 * g * t1 + g * g * t2
    a2r = (g * g / (alpha * alpha)) * _wrs(spec.d_sq, spec.d, lam, g, 2) / n
    denom = 1.0 - alpha * a2r
    if denom < _SINGULARITY_FLOOR:
        raise InterpolationSingularity(f"risk denominator 1 - alpha*a2 = {denom:.3e} at alpha = {alpha}")
    risk = (a1r + alpha * sigma_bar_sq * a2r) / denom
    objective = -g * g * t1 + g * se + g * sigma_bar_sq
    residual_sq = g * g * (risk + sigma_bar_sq)
    nu1 = 2.0 * g * math.sqrt(risk + sigma_bar_sq) / math.sqrt(alpha)
    norm_sq = (nu1 * nu1 / 4.0) * _wrs(spec.d, spec.d, lam, g, 2) / n \
        + g * g * _wrs(spec.cbar_sq, spec.d, lam, g, 2)
    return RidgePrediction(lam=lam, gamma_hat=g, a1r=a1r, a2r=a2r, sigma_bar_sq=sigma_bar_sq,
                           risk=risk, objective=objective, nu1_hat=nu1,
                           residual_sq=residual_sq, norm_sq=norm_sq)


def ls_a1_compact(instance):
    """Bias coefficient of least squares in its compact k x k form: the signal
    quadratic form of (Sigma_Z^-1 + L Sigma_E^-1 L')^-1."""
    L = instance.loadings
    b = instance.beta_bar
    inner = np.linalg.inv(instance.factor_cov) + L @ np.linalg.solve(instance.feature_noise_cov, L.T)
    return float(b @ np.linalg.solve(inner, b))


def ls_predict(instance, spec, alpha, sigma_bar_sq):
    """Excess risk and optimizing quantities of plain least squares (alpha > 1).

    The bias coefficient is computed along both the spectral and the compact
    matrix path; disagreement beyond tolerance means the inputs are too ill
    conditioned to trust and raises.
    """
    if alpha <= 1.0:
        raise RegimeError(f"least squares needs alpha > 1, got {alpha}")
    g = 1.0 - 1.0 / alpha
    se = spec.signal_energy
    a1r_spectral = se - _wrs(spec.cbar_sq, spec.d, 0.0, 1.0, 1)
    a1r_compact = ls_a1_compact(instance)
    gap = abs(a1r_spectral - a1r_compact) / max(abs(a1r_compact), 1e-300)
    if gap > _DUAL_PATH_TOL:
        raise IllConditioned(f"spectral/compact bias coefficients disagree by {gap:.3e} relative")
    a1r = a1r_compact
    risk = (alpha * a1r + sigma_bar_sq) / (alpha - 1.0)
    objective = (a1r + sigma_bar_sq) * (alpha - 1.0) / alpha
    norm_sq = _wrs(spec.cbar_sq, spec.d, 0.0, 1.0, 2) \
        + (a1r + sigma_bar_sq) / (alpha - 1.0) * _rt(spec.d, 0.0, 1.0, 1)
    nu1 = 2.0 * math.sqrt(a1r + sigma_bar_sq) * math.sqrt(alpha - 1.0) / alpha
    return LsPrediction(gamma_hat=g, a1r=a1r, sigma_bar_sq=sigma_bar_sq, risk=risk,
                        objective=objective, norm_sq=norm_sq, residual_sq=objective, nu1_hat=nu1)


def gls_coefficients_compact(instance, gamma, alpha):
    """Compact matrix-form twins of the interpolator's (a1, a2)."""
    L = instance.loadings
    n = instance.dims.n
    M = L.T @ instance.factor_cov @ L + instance.feature_noise_cov
    v = L.T @ (instance.factor_cov @ instance.beta_bar)
    R = np.linalg.inv(np.eye(n) + gamma * M)
    se = float(instance.beta_bar @ instance.factor_cov @ instance.beta_bar)
    a1 = se - gamma * float(v @ R @ v + v @ R @ (R @ v))
    K = np.linalg.inv(gamma * np.eye(n) + np.linalg.inv(M))
    a2 = (gamma * gamma / (alpha * alpha)) * float(np.trace(K @ K)) / n
    return a1, a2


def ridge_coefficients_compact(instance, gamma, alpha, lam):
    """Compact matrix-form twins of the ridge (a1r, a2r)."""
    L = instance.loadings
    n = instance.dims.n
    M = L.T @ instance.factor_cov @ L + instance.feature_noise_cov
    v = L.T @ (instance.factor_cov @ instance.beta_bar)
    R = np.linalg.inv(lam * np.eye(n) + gamma * M)
    se = float(instance.beta_bar @ instance.factor_cov @ instance.beta_bar)
    a1r = se - gamma * float(v @ R @ v + lam * (v @ R @ (R @ v)))
    K = np.linalg.inv(gamma * np.eye(n) + lam * np.linalg.inv(M))
    a2r = (gamma * gamma / (alpha * alpha)) * float(np.trace(K @ K)) / n
    return a1r, a2r


def gamma_gls_closed_uncorr(alpha, kappa, c_L):
    """Closed-form interpolator fixed point on the two-level spectrum of the
    uncorrelated scaled-unitary setup (radical expression)."""
    if not 0.0 < alpha < 1.0:
        raise InvalidParameter(f"alpha must be in (0,1), got {alpha}")
    if not alpha * kappa < 1.0 or kappa <= 0:
        raise InvalidParameter(f"need 0 < alpha*kappa < 1, got alpha={alpha}, kappa={kappa}")
    if c_L < 0:
        raise InvalidParameter(f"c_L must be >= 0, got {c_L}")
    if c_L == 0.0:
        return alpha / (1.0 - alpha)
    ak = alpha * kappa
    disc = alpha**2 * c_L**2 - 2.0 * alpha * c_L * ((c_L + 2.0) * ak - 1.0) + (c_L * ak + 1.0) ** 2
    num = math.sqrt(disc) + alpha * (c_L + 2.0) - c_L * ak - 1.0
    return num / (2.0 * (1.0 - alpha) * (c_L + 1.0))


def gls_limit_overparam(kappa, c_l, sigma_bar_sq):
    """Infinite over-parametrization limit of the interpolator risk in the
    uncorrelated scaled-unitary setup with per-feature SNR c_l."""
    if not 0.0 < kappa < 1.0:
        raise InvalidParameter(f"kappa must be in (0,1), got {kappa}")
    if c_l <= 0:
        raise InvalidParameter(f"c_l must be > 0, got {c_l}")
    z = (math.sqrt(c_l**2 / kappa**2 + 2.0 * c_l / kappa - 2.0 * c_l**2 / kappa + (c_l + 1.0) ** 2)
         + c_l / kappa - c_l - 1.0) / (2.0 * c_l)
    top = 1.0 + kappa * z * z * c_l * c_l * sigma_bar_sq
    bot = (1.0 + c_l * z) ** 2 - kappa * z * z * c_l * c_l
    return top / bot


def optimal_lambda(spec, alpha, sigma_bar_sq, lambda_range=DEFAULT_LAMBDA_RANGE):
    """Risk-minimizing ridge penalty via golden section over log lambda.

    Returns (lambda_star, prediction at lambda_star); the returned risk is the
    best value sampled, endpoints included.
    """
    lo, hi = lambda_range
    if not 0.0 < lo <= hi:
        raise InvalidParameter(f"need 0 < lo <= hi, got ({lo}, {hi})")
    if lo == hi:
        return lo, ridge_predict(spec, alpha, lo, sigma_bar_sq)

    def risk_at(t):
        return ridge_predict(spec, alpha, math.exp(t), sigma_bar_sq).risk

    t_star, _ = minimize_scalar(risk_at, math.log(lo), math.log(hi), rel_tol=1e-10)
    lam_star = math.exp(t_star)
    return lam_star, ridge_predict(spec, alpha, lam_star, sigma_bar_sq)


def frm_excess_risk(instance, beta_hat):
    """Excess prediction risk of an arbitrary coefficient vector: factor-space
    bias plus feature-noise energy of the estimate."""
    beta_hat = np.asarray(beta_hat, dtype=np.float64)
    if beta_hat.shape != (instance.dims.n,):
        raise InvalidParameter(f"beta_hat must have length {instance.dims.n}, got shape {beta_hat.shape}")
    miss = instance.beta_bar - instance.loadings @ beta_hat
    return float(miss @ instance.factor_cov @ miss
                 + beta_hat @ instance.feature_noise_cov @ beta_hat)


def frm_to_lrm(instance):
    """Map the factor model onto the plain linear regression model with the
    same training-pair distribution.

    Defined for white response noise only. For every estimate, the factor
    model's excess risk equals the induced linear model's excess risk plus a
    constant offset (sigma_ddot_sq = sigma_sq + offset).
    """
    if instance.response_noise_scale is None or \
            not math.isclose(instance.response_noise_scale, instance.sigma_sq, rel_tol=1e-12):
        raise RegimeError("the linear-model equivalence is defined for white response noise only")
    L = instance.loadings
    b = instance.beta_bar
    try:
        inner = np.linalg.inv(instance.factor_cov) + L @ np.linalg.solve(instance.feature_noise_cov, L.T)
        offset = float(b @ np.linalg.solve(inner, b))
        sigma_x = L.T @ instance.factor_cov @ L + instance.feature_noise_cov
        beta_ddot = np.linalg.solve(sigma_x, L.T @ (instance.factor_cov @ b))
    except np.linalg.LinAlgError as exc:
        raise NotPsd(f"covariances must be invertible: {exc}") from exc
    return LrmEquivalent(beta_ddot=beta_ddot, sigma_ddot_sq=instance.sigma_sq + offset, offset=offset)


def lrm_excess_risk(instance, lrm, beta_hat):
    """Excess risk of beta_hat in the induced linear regression model."""
    beta_hat = np.asarray(beta_hat, dtype=np.float64)
    L = instance.loadings
    sigma_x = L.T @ instance.factor_cov @ L + instance.feature_noise_cov
    miss = lrm.beta_ddot - beta_hat
    return float(miss @ sigma_x @ miss)
