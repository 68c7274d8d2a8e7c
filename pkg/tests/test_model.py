import numpy as np
import pytest

from frm_risk.errors import DimensionMismatch, InvalidParameter
from frm_risk.model import (
    Dimensions,
    IdentityScaled,
    LeadingEigenvectors,
    ModelConfig,
    ScaledUnitary,
    ToeplitzMix,
    build_loadings,
    build_toeplitz_mix,
    factor_snr,
    materialize,
    null_risk,
)

from conftest import random_instance


def uncorr_config(n=600, inv_alpha=3.0, kappa=0.5, c_l=4.0, sigma_sq=0.2, **kw):
    return ModelConfig(dims=Dimensions.from_ratios(n, inv_alpha, kappa), sigma_sq=sigma_sq,
                       loadings=ScaledUnitary(c_l=c_l), **kw)


# ------------------------------------------------------------- toeplitz mix

def test_toeplitz_mix_q_zero_is_identity():
    np.testing.assert_array_equal(build_toeplitz_mix(0.0, 3), np.eye(3))


def test_toeplitz_mix_direct_entries():
    expected = np.array([[1.0, 0.25, 0.125], [0.25, 1.0, 0.25], [0.125, 0.25, 1.0]])
    np.testing.assert_allclose(build_toeplitz_mix(0.5, 3), expected, atol=1e-15)


def test_toeplitz_mix_scaled():
    expected = np.array([[0.01, 0.0015], [0.0015, 0.01]])
    np.testing.assert_allclose(build_toeplitz_mix(0.3, 2, scale=0.01), expected, atol=1e-18)


def test_toeplitz_mix_rejects_bad_q():
    with pytest.raises(InvalidParameter):
        build_toeplitz_mix(1.0, 3)
    with pytest.raises(InvalidParameter):
        build_toeplitz_mix(-0.1, 3)


def test_toeplitz_mix_positive_definite():
    for q in (0.0, 0.3, 0.9, 0.99):
        vals = np.linalg.eigvalsh(build_toeplitz_mix(q, 50))
        assert vals.min() > 0


# ------------------------------------------------------------- dimensions

def test_dimensions_from_ratios_table1():
    dims = Dimensions.from_ratios(600, 3.0, 0.5)
    assert (dims.n, dims.m, dims.k) == (600, 200, 100)
    assert dims.alpha == pytest.approx(1.0 / 3.0)
    assert dims.kappa == pytest.approx(0.5)


def test_dimensions_validation():
    with pytest.raises(InvalidParameter):
        Dimensions(n=10, m=5, k=5)   # k == m
    with pytest.raises(InvalidParameter):
        Dimensions(n=4, m=8, k=4)    # k == n
    with pytest.raises(InvalidParameter):
        Dimensions.from_ratios(100, -1.0, 0.5)


# ------------------------------------------------------------- loadings

def test_scaled_unitary_canonical_row():
    dims = Dimensions(n=2, m=2, k=1)
    # c_L = c_l * n/k = 2*2 = 4 -> L = [2, 0]
    L = build_loadings(ScaledUnitary(c_l=2.0), dims)
    np.testing.assert_allclose(L, [[2.0, 0.0]], atol=1e-15)
    np.testing.assert_allclose(L @ L.T, [[4.0]], atol=1e-15)


def test_scaled_unitary_gram_identity():
    for n, k in ((10, 3), (60, 30), (600, 100)):
        dims = Dimensions(n=n, m=k + 1, k=k)
        L = build_loadings(ScaledUnitary(c_l=4.0), dims)
        c_L = 4.0 * n / k
        err = np.linalg.norm(L @ L.T - c_L * np.eye(k)) / c_L
        assert err < 1e-10


def test_scaled_unitary_snr_scaling_table1():
    # c_l=4 with alpha=1/3, kappa=1/2 gives c_L = 4/(alpha kappa) = 24
    dims = Dimensions.from_ratios(600, 3.0, 0.5)
    L = build_loadings(ScaledUnitary(c_l=4.0), dims)
    assert L[0, 0] ** 2 == pytest.approx(24.0, rel=1e-12)


def test_leading_eigenvectors_identity_covariance():
    dims = Dimensions(n=3, m=3, k=2)
    L = build_loadings(LeadingEigenvectors(q_L=0.0), dims)
    # degenerate spectrum: rows are canonical basis rows, unit norm, orthogonal
    np.testing.assert_allclose(L @ L.T, np.eye(2), atol=1e-12)
    for row in L:
        assert row[np.abs(row).argmax()] > 0


def test_leading_eigenvectors_are_top_eigenvectors():
    dims = Dimensions(n=20, m=10, k=4)
    cov = build_toeplitz_mix(0.3, 20)
    L = build_loadings(LeadingEigenvectors(q_L=0.3), dims)
    vals = np.sort(np.linalg.eigvalsh(cov))
    for i, row in enumerate(L):
        lam = row @ cov @ row
        assert lam == pytest.approx(vals[-1 - i], rel=1e-10)


def test_dense_loadings_shape_checked():
    from frm_risk.model import DenseLoadings
    dims = Dimensions(n=5, m=4, k=2)
    with pytest.raises(DimensionMismatch):
        build_loadings(DenseLoadings(matrix=np.ones((3, 5))), dims)


# ------------------------------------------------------------- materialize

def test_materialize_white_noise_sigma_bar():
    inst = materialize(uncorr_config())
    assert inst.sigma_bar_sq == pytest.approx(0.2, rel=1e-14)
    assert inst.response_noise_scale == pytest.approx(0.2)
    assert inst.response_noise_cov is None  # identity fast path


def test_materialize_toeplitz_qv_zero_reduces_to_identity():
    cfg = uncorr_config(response_noise_cov=ToeplitzMix(q=0.0))
    inst = materialize(cfg)
    assert inst.sigma_bar_sq == pytest.approx(0.2, rel=1e-14)
    assert inst.response_noise_cov is None


def test_materialize_dense_response_noise():
    cfg = uncorr_config(n=30, response_noise_cov=ToeplitzMix(q=0.4))
    inst = materialize(cfg)
    m = inst.dims.m
    assert inst.response_noise_cov.shape == (m, m)
    assert inst.sigma_bar_sq == pytest.approx(np.trace(inst.response_noise_cov) / m, rel=1e-14)
    # diagonal of the mix matrix is 1, so the per-sample energy is sigma^2
    assert inst.sigma_bar_sq == pytest.approx(0.2, rel=1e-14)


def test_materialize_default_beta_unit_norm():
    inst = materialize(uncorr_config())
    assert np.linalg.norm(inst.beta_bar) == pytest.approx(1.0, abs=1e-12)
    assert inst.beta_bar.shape == (100,)


def test_materialize_rejects_nonunit_beta():
    dims = Dimensions.from_ratios(600, 3.0, 0.5)
    cfg = ModelConfig(dims=dims, sigma_sq=0.2, loadings=ScaledUnitary(c_l=4.0),
                      beta_bar=np.ones(dims.k))
    with pytest.raises(InvalidParameter):
        materialize(cfg)


def test_materialize_deterministic():
    a = materialize(uncorr_config(feature_noise_cov=ToeplitzMix(q=0.3, scale=0.01)))
    b = materialize(uncorr_config(feature_noise_cov=ToeplitzMix(q=0.3, scale=0.01)))
    np.testing.assert_array_equal(a.loadings, b.loadings)
    np.testing.assert_array_equal(a.feature_root.factor, b.feature_root.factor)
    np.testing.assert_array_equal(a.beta_bar, b.beta_bar)


# ------------------------------------------------------------- null risk / snr

def test_null_risk_identity():
    inst = materialize(uncorr_config())
    assert null_risk(inst) == pytest.approx(1.0, rel=1e-12)


def test_null_risk_scaled_diagonal():
    dims = Dimensions.from_ratios(30, 3.0, 0.5)
    b = np.zeros(dims.k)
    b[0] = 1.0
    cfg = ModelConfig(dims=dims, sigma_sq=0.2, loadings=ScaledUnitary(c_l=4.0),
                      factor_cov=IdentityScaled(scale=2.0), beta_bar=b)
    assert null_risk(materialize(cfg)) == pytest.approx(2.0, rel=1e-12)


def test_null_risk_toeplitz_matches_double_sum_oracle():
    cfg = uncorr_config(factor_cov=ToeplitzMix(q=0.5))
    inst = materialize(cfg)
    k = inst.dims.k
    # direct summation over all entries of the covariance (ones/sqrt(k) signal)
    oracle = sum(0.5 * ((i == j) + 0.5 ** abs(i - j)) for i in range(k) for j in range(k)) / k
    assert null_risk(inst) == pytest.approx(oracle, rel=1e-12)
    assert oracle == pytest.approx(1.98, abs=1e-12)  # k=100: 1 + (1/k) sum (k-d) q^d


def test_factor_snr_correlated_family():
    # SNR_f = alpha*kappa/sigma_e^2 in the Toeplitz family with eigenvector loadings
    cfg = ModelConfig(dims=Dimensions.from_ratios(600, 3.0, 0.5), sigma_sq=0.2,
                      loadings=LeadingEigenvectors(q_L=0.3),
                      factor_cov=ToeplitzMix(q=0.5),
                      feature_noise_cov=ToeplitzMix(q=0.3, scale=0.01))
    inst = materialize(cfg)
    alpha, kappa = inst.dims.alpha, inst.dims.kappa
    assert factor_snr(inst) == pytest.approx(alpha * kappa / 0.01, rel=1e-9)


def test_factor_snr_scaled_unitary_equals_c_l():
    inst = materialize(uncorr_config(c_l=4.0))
    assert factor_snr(inst) == pytest.approx(4.0, rel=1e-12)


def test_factor_snr_zero_loadings():
    from frm_risk.model import DenseLoadings
    dims = Dimensions(n=12, m=8, k=3)
    cfg = ModelConfig(dims=dims, sigma_sq=0.1, loadings=DenseLoadings(matrix=np.zeros((3, 12))))
    assert factor_snr(materialize(cfg)) == 0.0


def test_random_instance_roots_reconstruct(rng):
    inst = random_instance(rng)
    r = inst.factor_root.factor
    err = np.linalg.norm(r @ r.T - inst.factor_cov) / np.linalg.norm(inst.factor_cov)
    assert err < 1e-10
