"""Deterministic Monte Carlo: sample the factor model, fit the estimators by
direct linear algebra, and measure every quantity the theory predicts.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import IllConditioned, InvalidParameter, RegimeError
from .numerics import RngStream
from .theory import frm_excess_risk

_SOLVE_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class Gls:
    """Minimum-norm interpolator; over-parameterized regime (m < n) only."""


@dataclass(frozen=True)
class Ridge:
    """Ridge estimator with penalty lam > 0; any regime."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0.0:
            raise InvalidParameter(f"ridge lambda must be > 0, got {self.lam}")


@dataclass(frozen=True)
class Ls:
    """Plain least squares; under-parameterized regime (m > n) only."""


@dataclass(frozen=True)
class TrialResult:
    norm_sq: float
    objective: float
    residual_sq: float   # (1/m) squared training residual
    excess_risk: float


@dataclass(frozen=True)
class Aggregate:
    """Per-field mean/std/stderr over trials, reduced in trial order."""

    count: int
    mean: TrialResult
    std: TrialResult
    stderr: TrialResult


def _draw(gen, shape, distribution):
    if distribution == "gaussian":
        return gen.standard_normal(shape)
    if distribution == "rademacher":
        return gen.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0
    if distribution == "scaled_uniform":
        return (gen.random(shape) - 0.5) * math.sqrt(12.0)
    raise InvalidParameter(f"unknown entry distribution {distribution!r}")


def sample_data(instance, stream):
    """One training set (X, y) from the model.

    A single generator is opened for the stream and consumed in the fixed
    order factors, feature noise, response noise, so the draw is reproducible
    independently of any parallel scheduling around it.
    """
    dims = instance.dims
    gen = stream.generator()
    dist = instance.entry_distribution
    Z = _draw(gen, (dims.m, dims.k), dist)
    E = _draw(gen, (dims.m, dims.n), dist)
    v = _draw(gen, dims.m, dist)
    factors = Z @ instance.factor_root.factor.T
    X = factors @ instance.loadings + E @ instance.feature_root.factor.T
    y = factors @ instance.beta_bar + instance.response_noise(v)
    return X, y


def _spd_solve(A, b):
    # jitter only on factorization failure, retried once
    try:
        return cho_solve(cho_factor(A, lower=True, check_finite=False), b, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-12 * np.trace(A) / A.shape[0]
    try:
        A_j = A + jitter * np.eye(A.shape[0])
        return cho_solve(cho_factor(A_j, lower=True, check_finite=False), b, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise IllConditioned(f"SPD solve failed after jitter retry: {exc}") from exc


def _check_residual(A, x, b, what):
    resid = np.linalg.norm(A @ x - b) / max(np.linalg.norm(b), 1e-300)
    if resid > _SOLVE_RESIDUAL_TOL:
        raise IllConditioned(f"{what} linear system residual {resid:.3e} exceeds {_SOLVE_RESIDUAL_TOL:.0e}")


def fit(kind, X, y):
    """Solve the estimation program for one data set, returning the coefficients."""
    m, n = X.shape
    if isinstance(kind, Gls):
        if m >= n:
            raise RegimeError(f"interpolator needs m < n, got m={m}, n={n}")
        G = X @ X.T
        w = _spd_solve(G, y)
        _check_residual(G, w, y, "interpolator")
        return X.T @ w
    if isinstance(kind, Ridge):
        H = X.T @ X + kind.lam * m * np.eye(n)
        rhs = X.T @ y
        beta = _spd_solve(H, rhs)
        _check_residual(H, beta, rhs, "ridge")
        return beta
    if isinstance(kind, Ls):
        if m <= n:
            raise RegimeError(f"least squares needs m > n, got m={m}, n={n}")
        H = X.T @ X
        rhs = X.T @ y
        beta = _spd_solve(H, rhs)
        _check_residual(H, beta, rhs, "least squares")
        return beta
    raise InvalidParameter(f"unknown estimator kind {type(kind).__name__}")


def measure_trial(instance, kind, X, y, beta):
    """All per-trial metrics for a fitted coefficient vector."""
    m = X.shape[0]
    norm_sq = float(beta @ beta)
    residual_sq = float(np.sum((y - X @ beta) ** 2)) / m
    if isinstance(kind, Gls):
        objective = norm_sq
    elif isinstance(kind, Ridge):
        objective = kind.lam * norm_sq + residual_sq
    else:
        objective = residual_sq
    return TrialResult(norm_sq=norm_sq, objective=objective, residual_sq=residual_sq,
                       excess_risk=frm_excess_risk(instance, beta))


def run_trial(instance, kind, stream):
    X, y = sample_data(instance, stream)
    beta = fit(kind, X, y)
    return measure_trial(instance, kind, X, y, beta)


def aggregate(results):
    """Two-pass mean/std/stderr over stored per-trial results."""
    count = len(results)
    if count < 1:
        raise InvalidParameter("need at least one trial")
    fields = ("norm_sq", "objective", "residual_sq", "excess_risk")
    arrays = {f: np.array([getattr(r, f) for r in results]) for f in fields}
    mean = TrialResult(**{f: float(arrays[f].mean()) for f in fields})
    if count == 1:
        std = TrialResult(norm_sq=0.0, objective=0.0, residual_sq=0.0, excess_risk=0.0)
    else:
        std = TrialResult(**{f: float(arrays[f].std(ddof=1)) for f in fields})
    stderr = TrialResult(**{f: getattr(std, f) / math.sqrt(count) for f in fields})
    return Aggregate(count=count, mean=mean, std=std, stderr=stderr)


def run_trials(instance, kind, trials, master_seed):
    """Independent trials with stream index = trial index; trial t fails with
    its index attached."""
    if trials < 1:
        raise InvalidParameter(f"trials must be >= 1, got {trials}")
    results = []
    for t in range(trials):
        try:
            results.append(run_trial(instance, kind, RngStream(master_seed, t)))
        except (IllConditioned, RegimeError) as exc:
            raise type(exc)(f"trial {t}: {exc}") from exc
    return aggregate(results)
