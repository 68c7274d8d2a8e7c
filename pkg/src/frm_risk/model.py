"""Correlated factor regression model: declarative specs and materialization.

The model generates responses y and features X from hidden factors through a
loadings matrix, with three covariances: factors (k x k), feature noise
(n x n) and response noise (m x m, noise variance folded in).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .errors import DimensionMismatch, DivisionByZero, InvalidParameter, NotPsd
from .numerics import PsdRoot, psd_root, sym_eig

ENTRY_DISTRIBUTIONS = ("gaussian", "rademacher", "scaled_uniform")


def _round_half_up(x):
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Dimensions:
    """Problem sizes: n features, m samples, k factors.

    alpha = m/n is the under-parametrization ratio (its inverse n/m is the
    over-parametrization ratio); kappa = k/m. k < n is required.
    """

    n: int
    m: int
    k: int

    def __post_init__(self):
        if min(self.n, self.m, self.k) < 1:
            raise InvalidParameter(f"all dimensions must be >= 1, got {self}")
        if self.k >= self.m:
            raise InvalidParameter(f"need k < m, got k={self.k}, m={self.m}")
        if self.k >= self.n:
            raise InvalidParameter(f"need k < n (alpha*kappa < 1), got k={self.k}, n={self.n}")

    @property
    def alpha(self):
        return self.m / self.n

    @property
    def kappa(self):
        return self.k / self.m

    @classmethod
    def from_ratios(cls, n, inv_alpha, kappa):
        """Nearest-integer m = n/inv_alpha and k = kappa*m (ties round up)."""
        if inv_alpha <= 0 or kappa <= 0:
            raise InvalidParameter(f"ratios must be positive, got 1/alpha={inv_alpha}, kappa={kappa}")
        m = _round_half_up(n / inv_alpha)
        k = _round_half_up(kappa * m)
        return cls(n=int(n), m=m, k=k)


@dataclass(frozen=True)
class IdentityScaled:
    scale: float = 1.0

    def __post_init__(self):
        if self.scale <= 0:
            raise InvalidParameter(f"scale must be > 0, got {self.scale}")


@dataclass(frozen=True)
class ToeplitzMix:
    q: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise InvalidParameter(f"q must be in [0, 1), got {self.q}")
        if self.scale <= 0:
            raise InvalidParameter(f"scale must be > 0, got {self.scale}")


@dataclass(frozen=True, eq=False)
class DenseCovariance:
    matrix: np.ndarray


@dataclass(frozen=True)
class ScaledUnitary:
    """Loadings L = sqrt(c_L) Q with orthonormal rows Q; c_L = c_l * n/k so
    that c_l is the per-feature factor SNR."""

    c_l: float

    def __post_init__(self):
        if self.c_l <= 0:
            raise InvalidParameter(f"c_l must be > 0, got {self.c_l}")


@dataclass(frozen=True)
class LeadingEigenvectors:
    """Loadings rows are the top-k unit eigenvectors of the Toeplitz-mix
    matrix with parameter q_L."""

    q_L: float

    def __post_init__(self):
        if not 0.0 <= self.q_L < 1.0:
            raise InvalidParameter(f"q_L must be in [0, 1), got {self.q_L}")


@dataclass(frozen=True, eq=False)
class DenseLoadings:
    matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class ModelConfig:
    dims: Dimensions
    sigma_sq: float
    loadings: object
    factor_cov: object = field(default_factory=IdentityScaled)
    feature_noise_cov: object = field(default_factory=IdentityScaled)
    response_noise_cov: object = field(default_factory=IdentityScaled)
    beta_bar: np.ndarray | None = None  # defaults to ones/sqrt(k)
    entry_distribution: str = "gaussian"

    def __post_init__(self):
        if self.sigma_sq < 0:
            raise InvalidParameter(f"sigma_sq must be >= 0, got {self.sigma_sq}")
        if self.entry_distribution not in ENTRY_DISTRIBUTIONS:
            raise InvalidParameter(
                f"entry_distribution must be one of {ENTRY_DISTRIBUTIONS}, got {self.entry_distribution!r}")


@dataclass(frozen=True, eq=False)
class ModelInstance:
    """Materialized model: covariances, loadings, signal and sampling roots.

    response_noise_scale is set (and the dense m x m matrix skipped) when the
    response covariance is a multiple of the identity.
    """

    dims: Dimensions
    factor_cov: np.ndarray           # k x k
    feature_noise_cov: np.ndarray    # n x n
    response_noise_cov: np.ndarray | None   # m x m, sigma_sq included
    response_noise_scale: float | None
    loadings: np.ndarray             # k x n
    beta_bar: np.ndarray             # k, unit norm
    factor_root: PsdRoot
    feature_root: PsdRoot
    response_root: PsdRoot | None
    sigma_bar_sq: float              # (1/m) tr of the response covariance
    sigma_sq: float
    entry_distribution: str

    def response_noise(self, v):
        """Apply the response-noise root to a vector of unit-variance draws."""
        if self.response_noise_scale is not None:
            return math.sqrt(self.response_noise_scale) * v
        return self.response_root.factor @ v


def build_toeplitz_mix(q, size, scale=1.0):
    """Size x size matrix with entries scale * (delta_ij + q^|i-j|) / 2."""
    if not 0.0 <= q < 1.0:
        raise InvalidParameter(f"q must be in [0, 1), got {q}")
    if size < 1:
        raise InvalidParameter(f"size must be >= 1, got {size}")
    if scale <= 0:
        raise InvalidParameter(f"scale must be > 0, got {scale}")
    band = q ** np.arange(size, dtype=np.float64)
    return scale * 0.5 * (np.eye(size) + toeplitz(band))


def _materialize_cov(spec, size, what):
    if isinstance(spec, IdentityScaled):
        return spec.scale * np.eye(size)
    if isinstance(spec, ToeplitzMix):
        return build_toeplitz_mix(spec.q, size, spec.scale)
    if isinstance(spec, DenseCovariance):
        a = np.asarray(spec.matrix, dtype=np.float64)
        if a.shape != (size, size):
            raise DimensionMismatch(f"{what}: expected {size}x{size}, got {a.shape}")
        return a
    raise InvalidParameter(f"{what}: unknown covariance spec {type(spec).__name__}")


def build_loadings(spec, dims):
    """k x n loadings matrix for the given spec."""
    k, n = dims.k, dims.n
    if k > n:
        raise DimensionMismatch(f"need k <= n, got k={k}, n={n}")
    if isinstance(spec, ScaledUnitary):
        c_L = spec.c_l * n / k
        L = np.zeros((k, n))
        L[:, :k] = math.sqrt(c_L) * np.eye(k)
        return L
    if isinstance(spec, LeadingEigenvectors):
        cov = build_toeplitz_mix(spec.q_L, n)
        fac = sym_eig(cov)
        # top-k eigenvectors, largest eigenvalue first; ties keep solver order
        cols = fac.basis[:, n - k:][:, ::-1].T.copy()
        for row in cols:
            nz = np.nonzero(np.abs(row) > 1e-12)[0]
            if nz.size and row[nz[0]] < 0:
                row *= -1.0
        return cols
    if isinstance(spec, DenseLoadings):
        a = np.asarray(spec.matrix, dtype=np.float64)
        if a.shape != (k, n):
            raise DimensionMismatch(f"loadings: expected {k}x{n}, got {a.shape}")
        return a
    raise InvalidParameter(f"unknown loadings spec {type(spec).__name__}")


def _scalar_response_scale(spec):
    # identity fast path: covariance is a multiple of I_m
    if isinstance(spec, IdentityScaled):
        return spec.scale
    if isinstance(spec, ToeplitzMix) and spec.q == 0.0:
        return spec.scale
    return None


def materialize(config):
    """Validate a ModelConfig and build the sampled-ready ModelInstance."""
    dims = config.dims
    k, n, m = dims.k, dims.n, dims.m

    factor_cov = _materialize_cov(config.factor_cov, k, "factor_cov")
    feature_cov = _materialize_cov(config.feature_noise_cov, n, "feature_noise_cov")

    if config.beta_bar is None:
        beta_bar = np.ones(k) / math.sqrt(k)
    else:
        beta_bar = np.asarray(config.beta_bar, dtype=np.float64)
        if beta_bar.shape != (k,):
            raise DimensionMismatch(f"beta_bar: expected length {k}, got shape {beta_bar.shape}")
        if abs(np.linalg.norm(beta_bar) - 1.0) > 1e-10:
            raise InvalidParameter(f"beta_bar must have unit norm, got {np.linalg.norm(beta_bar)}")

    loadings = build_loadings(config.loadings, dims)

    factor_root = psd_root(factor_cov)
    feature_root = psd_root(feature_cov)

    scale = _scalar_response_scale(config.response_noise_cov)
    if scale is not None:
        response_cov = None
        response_root = None
        response_scale = config.sigma_sq * scale
        sigma_bar_sq = response_scale
    else:
        base = _materialize_cov(config.response_noise_cov, m, "response_noise_cov")
        response_cov = config.sigma_sq * base
        if config.sigma_sq == 0.0:
            response_root = None
            response_scale = 0.0
            sigma_bar_sq = 0.0
        else:
            response_root = psd_root(response_cov)
            response_scale = None
            sigma_bar_sq = float(np.trace(response_cov)) / m
    if sigma_bar_sq < 0:
        raise NotPsd(f"response covariance has negative trace per sample: {sigma_bar_sq}")

    return ModelInstance(
        dims=dims,
        factor_cov=factor_cov,
        feature_noise_cov=feature_cov,
        response_noise_cov=response_cov,
        response_noise_scale=response_scale,
        loadings=loadings,
        beta_bar=beta_bar,
        factor_root=factor_root,
        feature_root=feature_root,
        response_root=response_root,
        sigma_bar_sq=sigma_bar_sq,
        sigma_sq=config.sigma_sq,
        entry_distribution=config.entry_distribution,
    )


def null_risk(instance):
    """Excess risk of the zero estimator: the factor-covariance quadratic form
    of the signal."""
    b = instance.beta_bar
    return float(b @ instance.factor_cov @ b)


def factor_snr(instance):
    """Signal-to-noise ratio of the factor part: energy of the loaded factors
    per unit of feature-noise energy."""
    denom = float(np.trace(instance.feature_noise_cov))
    if denom == 0.0:
        raise DivisionByZero("feature noise covariance has zero trace")
    L = instance.loadings
    num = float(np.trace(instance.factor_cov @ (L @ L.T)))
    return num / denom
