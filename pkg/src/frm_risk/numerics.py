"""Numerical substrate: symmetric factorizations, resolvent traces, scalar
root finding and minimization, seeded randomness.

Matrices are plain float64 numpy arrays in row-major order.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    InvalidParameter,
    NoBracket,
    NonSquare,
    NotConverged,
    NotMonotone,
    NotPsd,
    SingularResolvent,
)

_ASYM_TOL = 1e-8    # max relative asymmetry accepted before symmetrizing
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SpectralFactorization:
    """Eigendecomposition of a symmetric matrix: basis @ diag(eigenvalues) @ basis.T."""

    dimension: int
    eigenvalues: np.ndarray  # ascending
    basis: np.ndarray        # orthonormal columns


@dataclass(frozen=True)
class PsdRoot:
    """Lower-triangular factor R with R @ R.T equal to the input PSD matrix."""

    dimension: int
    factor: np.ndarray


def _as_square(matrix):
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {a.shape}")
    return a


def _symmetrize(a):
    scale = np.abs(a).max()
    asym = np.abs(a - a.T).max()
    if scale > 0 and asym > _ASYM_TOL * scale:
        raise NonSquare(f"matrix asymmetry {asym / scale:.2e} exceeds {_ASYM_TOL:.0e} relative")
    return 0.5 * (a + a.T)


def sym_eig(matrix):
    """Eigendecompose a symmetric matrix, eigenvalues ascending."""
    a = _symmetrize(_as_square(matrix))
    try:
        vals, vecs = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NotConverged(f"symmetric eigensolver failed: {exc}") from exc
    return SpectralFactorization(dimension=a.shape[0], eigenvalues=vals, basis=vecs)


def psd_root(matrix):
    """Lower-triangular root of a symmetric PSD matrix.

    Eigenvalues in [-1e-10 * trace/dim, 0) are treated as round-off and
    clamped to zero; anything below that raises NotPsd.
    """
    a = _symmetrize(_as_square(matrix))
    n = a.shape[0]
    try:
        return PsdRoot(dimension=n, factor=np.linalg.cholesky(a))
    except np.linalg.LinAlgError:
        pass
    vals, vecs = np.linalg.eigh(a)
    floor = -1e-10 * max(np.trace(a), 0.0) / n
    if vals[0] < floor:
        raise NotPsd(f"smallest eigenvalue {vals[0]:.3e} below tolerance {floor:.3e}")
    clamped = np.clip(vals, 0.0, None)
    rebuilt = (vecs * clamped) @ vecs.T
    rebuilt = 0.5 * (rebuilt + rebuilt.T)
    jitter = 1e-14 * max(np.trace(a) / n, 1.0)
    try:
        return PsdRoot(dimension=n, factor=np.linalg.cholesky(rebuilt + jitter * np.eye(n)))
    except np.linalg.LinAlgError as exc:
        raise NotPsd(f"Cholesky failed after eigenvalue clamping: {exc}") from exc


def resolvent_trace(spec, shift, scale, power=1):
    """(1/dim) * sum_i 1/(shift + scale*d_i)**power over the spectrum.

    `spec` may be a SpectralFactorization or a 1-D eigenvalue array.
    """
    if power not in (1, 2):
        raise InvalidParameter(f"power must be 1 or 2, got {power}")
    eigs = spec.eigenvalues if isinstance(spec, SpectralFactorization) else np.asarray(spec, dtype=np.float64)
    den_min = shift + scale * (eigs.min() if scale >= 0 else eigs.max())
    if den_min <= 0.0:
        raise SingularResolvent(f"shift + scale*eig reaches {den_min:.3e} <= 0")
    return _kernels.resolvent_trace(np.ascontiguousarray(eigs, dtype=np.float64), float(shift), float(scale), power)


def bisect(f, target, lo, hi, rel_tol=1e-12, max_expansions=64):
    """Solve f(x) = target for monotone f on [lo, hi] by bisection.

    If the target is not straddled the interval is expanded by doubling its
    width (up to `max_expansions` times) before giving up.
    """
    if not hi > lo:
        raise InvalidParameter(f"need lo < hi, got [{lo}, {hi}]")
    resid_tol = rel_tol * (abs(target) + 1.0)
    g_lo = f(lo) - target
    if abs(g_lo) <= resid_tol:
        return lo
    g_hi = f(hi) - target
    if abs(g_hi) <= resid_tol:
        return hi
    expansions = 0
    while g_lo * g_hi > 0.0 and expansions < max_expansions:
        hi = lo + 2.0 * (hi - lo)
        g_hi = f(hi) - target
        expansions += 1
    if g_lo * g_hi > 0.0:
        raise NoBracket(f"target {target} never straddled on [{lo}, {hi}] after {expansions} expansions")
    if abs(g_hi) <= resid_tol:
        return hi
    lo_v, hi_v = min(g_lo, g_hi), max(g_lo, g_hi)
    slack = 64.0 * np.finfo(float).eps * (abs(g_lo) + abs(g_hi) + abs(target) + 1.0)
    for _ in range(4096):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rel_tol * max(1.0, abs(mid)):
            return mid
        g_mid = f(mid) - target
        if abs(g_mid) <= resid_tol:
            return mid
        if g_mid < lo_v - slack or g_mid > hi_v + slack:
            raise NotMonotone(f"f({mid}) = {g_mid + target} falls outside the bracket values")
        if (g_mid > 0.0) == (g_hi > 0.0):
            hi, g_hi = mid, g_mid
        else:
            lo, g_lo = mid, g_mid
        lo_v, hi_v = min(g_lo, g_hi), max(g_lo, g_hi)
    raise NotConverged("bisection iteration budget exhausted")


def minimize_scalar(f, lo, hi, rel_tol=1e-10):
    """Golden-section minimization of a unimodal f on [lo, hi].

    Returns (argmin, min) for the best point sampled, endpoints included.
    Degenerate flat functions return the midpoint.
    """
    if hi < lo:
        raise InvalidParameter(f"need lo <= hi, got [{lo}, {hi}]")
    if hi == lo:
        return lo, f(lo)
    a, b = float(lo), float(hi)
    samples = [(a, f(a)), (b, f(b))]
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    samples += [(x1, f1), (x2, f2)]
    while b - a > rel_tol * max(1.0, abs(0.5 * (a + b))):
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
            samples.append((x1, f1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
            samples.append((x2, f2))
    values = [v for _, v in samples]
    if max(values) == min(values):
        mid = 0.5 * (lo + hi)
        return mid, f(mid)
    best_x, best_f = min(samples, key=lambda s: (s[1], s[0]))
    return best_x, best_f


@dataclass(frozen=True)
class RngStream:
    """Addressable random stream: (master_seed, stream_index) pins the sequence.

    Realized as numpy's PCG64 seeded through SeedSequence((master_seed,
    stream_index)); distinct stream indices give statistically independent
    streams. Instances are value types; call generator() for a fresh,
    privately owned generator.
    """

    master_seed: int
    stream_index: int

    def generator(self):
        seq = np.random.SeedSequence((int(self.master_seed), int(self.stream_index)))
        return np.random.Generator(np.random.PCG64(seq))


def normal_stream(stream, count):
    """`count` standard normal draws; a pure function of the stream identity."""
    return stream.generator().standard_normal(int(count))
