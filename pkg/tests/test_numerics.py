import numpy as np
import pytest

from frm_risk.errors import InvalidParameter, NoBracket, NonSquare, NotPsd, SingularResolvent
from frm_risk.model import build_toeplitz_mix
from frm_risk.numerics import (
    RngStream,
    bisect,
    minimize_scalar,
    normal_stream,
    psd_root,
    resolvent_trace,
    sym_eig,
)

from oracle_values import GLS3, TOEPLITZ3_EIGS


# ---------------------------------------------------------------- sym_eig

def test_sym_eig_identity():
    fac = sym_eig(np.eye(3))
    np.testing.assert_allclose(fac.eigenvalues, [1.0, 1.0, 1.0], atol=1e-14)
    np.testing.assert_allclose(fac.basis.T @ fac.basis, np.eye(3), atol=1e-12)


def test_sym_eig_diagonal():
    fac = sym_eig(np.diag([5.0, 2.0]))
    np.testing.assert_allclose(fac.eigenvalues, [2.0, 5.0], atol=1e-14)
    # basis is identity up to sign/permutation
    np.testing.assert_allclose(np.abs(fac.basis), [[0, 1], [1, 0]], atol=1e-14)


def test_sym_eig_toeplitz3_exact_spectrum():
    fac = sym_eig(build_toeplitz_mix(0.5, 3))
    np.testing.assert_allclose(fac.eigenvalues, TOEPLITZ3_EIGS, rtol=1e-13)
    assert np.all(fac.eigenvalues > 0) and np.all(fac.eigenvalues <= 1.5)
    assert fac.eigenvalues.sum() == pytest.approx(3.0, rel=1e-13)


def test_sym_eig_reconstructs(rng):
    for n in (2, 5, 40):
        a = rng.standard_normal((n, n))
        a = a + a.T
        fac = sym_eig(a)
        rebuilt = (fac.basis * fac.eigenvalues) @ fac.basis.T
        err = np.linalg.norm(rebuilt - a) / np.linalg.norm(a)
        assert err < 1e-9
        assert fac.eigenvalues.sum() == pytest.approx(np.trace(a), rel=1e-9, abs=1e-12)


def test_sym_eig_rejects_nonsquare_and_asymmetric():
    with pytest.raises(NonSquare):
        sym_eig(np.ones((2, 3)))
    a = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(NonSquare):
        sym_eig(a)


# ---------------------------------------------------------------- psd_root

def test_psd_root_identity_and_diagonal():
    np.testing.assert_allclose(psd_root(np.eye(4)).factor, np.eye(4), atol=1e-14)
    np.testing.assert_allclose(psd_root(np.diag([4.0, 9.0])).factor, np.diag([2.0, 3.0]), atol=1e-14)


def test_psd_root_toeplitz_reconstructs():
    a = build_toeplitz_mix(0.3, 4)
    root = psd_root(a)
    assert np.linalg.norm(root.factor @ root.factor.T - a) < 1e-10
    assert np.allclose(np.triu(root.factor, 1), 0.0)


def test_psd_root_clamps_roundoff_negatives():
    # rank-deficient PSD matrix with eigenvalue -O(eps) after symmetrization
    v = np.array([1.0, 1.0, 1.0]) / np.sqrt(3)
    a = np.outer(v, v)
    root = psd_root(a)
    assert np.linalg.norm(root.factor @ root.factor.T - a) < 1e-9


def test_psd_root_rejects_indefinite():
    with pytest.raises(NotPsd):
        psd_root(np.diag([1.0, -0.5]))


def test_psd_root_round_trips_sym_eig_reconstruction(rng):
    w = rng.standard_normal((12, 24))
    a = w @ w.T / 24 + 0.1 * np.eye(12)
    fac = sym_eig(a)
    rebuilt = (fac.basis * fac.eigenvalues) @ fac.basis.T
    root = psd_root(rebuilt)
    err = np.linalg.norm(root.factor @ root.factor.T - rebuilt) / np.linalg.norm(rebuilt)
    assert err < 1e-8


# ---------------------------------------------------------------- resolvent_trace

def test_resolvent_trace_simple_values():
    assert resolvent_trace(np.array([1.0, 1.0]), 1.0, 1.0, 1) == pytest.approx(0.5, rel=1e-15)
    assert resolvent_trace(np.array([2.0, 4.0]), 0.0, 1.0, 2) == pytest.approx(0.15625, rel=1e-15)


def test_resolvent_trace_scale_zero_is_inverse_shift():
    d = np.linspace(0.1, 9.0, 17)
    lam = 3.7
    assert resolvent_trace(d, lam, 0.0, 1) == pytest.approx(1.0 / lam, rel=1e-15)


def test_resolvent_trace_closes_table1_fixed_point():
    # two-level spectrum of the n=600, 1/alpha=3, c_L=24 configuration
    d = np.concatenate([np.full(100, 25.0), np.ones(500)])
    val = resolvent_trace(d, 1.0, GLS3["gamma"], 1)
    assert abs(val - 2.0 / 3.0) < 1e-10


def test_resolvent_trace_monotone_in_shift_and_scale(rng):
    d = rng.standard_normal(30) ** 2 + 0.2
    base = resolvent_trace(d, 1.0, 0.5, 1)
    assert resolvent_trace(d, 1.2, 0.5, 1) < base
    assert resolvent_trace(d, 1.0, 0.7, 1) < base


def test_resolvent_trace_rejects_singular_denominator():
    with pytest.raises(SingularResolvent):
        resolvent_trace(np.array([0.0, 1.0]), 0.0, 1.0, 1)
    with pytest.raises(InvalidParameter):
        resolvent_trace(np.array([1.0]), 1.0, 1.0, 3)


def test_resolvent_trace_accepts_factorization():
    fac = sym_eig(np.diag([1.0, 1.0]))
    assert resolvent_trace(fac, 1.0, 1.0, 1) == pytest.approx(0.5)


# ---------------------------------------------------------------- bisect

def test_bisect_identity():
    assert bisect(lambda x: x, 0.5, 0.0, 1.0) == pytest.approx(0.5, abs=1e-12)


def test_bisect_scalar_fixed_point():
    # 1/(1+x) = 1 - alpha with alpha = 0.5 -> x = 1
    root = bisect(lambda x: 1.0 / (1.0 + x), 0.5, 0.0, 1.0)
    assert root == pytest.approx(1.0, rel=1e-10)


def test_bisect_expands_bracket():
    root = bisect(lambda x: x, 37.0, 0.0, 1.0)
    assert root == pytest.approx(37.0, rel=1e-10)


def test_bisect_idempotent():
    f = lambda x: 1.0 / (1.0 + x)
    root = bisect(f, 0.5, 0.0, 1.0)
    again = bisect(f, 0.5, root, root + 1.0)
    assert again == pytest.approx(root, rel=1e-10, abs=1e-12)


def test_bisect_no_bracket():
    with pytest.raises(NoBracket):
        bisect(lambda x: -x, 0.5, 0.0, 1.0, max_expansions=8)


# ---------------------------------------------------------------- minimize_scalar

def test_minimize_parabola():
    x, v = minimize_scalar(lambda x: (x - 2.0) ** 2, 0.0, 5.0)
    assert x == pytest.approx(2.0, abs=1e-8)
    assert v == pytest.approx(0.0, abs=1e-15)


def test_minimize_abs():
    x, _ = minimize_scalar(abs, -1.0, 3.0)
    assert x == pytest.approx(0.0, abs=1e-8)


def test_minimize_flat_returns_midpoint():
    x, _ = minimize_scalar(lambda x: 1.0, 0.0, 4.0)
    assert x == pytest.approx(2.0)


def test_minimize_collapsed_interval():
    x, v = minimize_scalar(lambda x: x * x, 3.0, 3.0)
    assert (x, v) == (3.0, 9.0)


# ---------------------------------------------------------------- RngStream

def test_normal_stream_deterministic():
    s = RngStream(12345, 7)
    a = normal_stream(s, 1000)
    b = normal_stream(s, 1000)
    np.testing.assert_array_equal(a, b)


def test_normal_streams_independent():
    a = normal_stream(RngStream(12345, 0), 100_000)
    b = normal_stream(RngStream(12345, 1), 100_000)
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) < 0.02
    assert not np.array_equal(a[:100], b[:100])


def test_normal_stream_moments():
    draws = normal_stream(RngStream(99, 0), 1_000_000)
    assert abs(draws.mean()) < 4e-3
    assert abs(draws.var() - 1.0) < 1e-2
