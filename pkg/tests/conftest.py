import numpy as np
import pytest

from frm_risk.model import DenseCovariance, DenseLoadings, Dimensions, ModelConfig, materialize


def random_instance(rng, over=True, sigma_sq=None):
    """Well-conditioned random dense model; over=True puts it in m < n."""
    n = int(rng.integers(24, 61))
    if over:
        m = int(rng.integers(max(6, n // 4), n - 2))
    else:
        m = int(rng.integers(n + 2, 2 * n + 10))
    k = int(rng.integers(2, min(m, n) // 2))
    wz = rng.standard_normal((k, 2 * k))
    sig_z = wz @ wz.T / (2 * k) + 0.3 * np.eye(k)
    we = rng.standard_normal((n, 2 * n))
    sig_e = we @ we.T / (2 * n) + 0.3 * np.eye(n)
    loadings = rng.standard_normal((k, n)) / np.sqrt(n)
    beta = rng.standard_normal(k)
    beta /= np.linalg.norm(beta)
    if sigma_sq is None:
        sigma_sq = float(rng.uniform(0.05, 0.4))
    config = ModelConfig(
        dims=Dimensions(n=n, m=m, k=k),
        sigma_sq=sigma_sq,
        loadings=DenseLoadings(matrix=loadings),
        factor_cov=DenseCovariance(matrix=sig_z),
        feature_noise_cov=DenseCovariance(matrix=sig_e),
        beta_bar=beta,
    )
    return materialize(config)


@pytest.fixture
def rng():
    return np.random.default_rng(20250810)
