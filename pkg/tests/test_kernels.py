import importlib

import numpy as np
import pytest

from frm_risk import _kernels


def _cases(rng):
    for n in (1, 7, 600):
        d = np.abs(rng.standard_normal(n)) + 0.1
        w = rng.standard_normal(n) ** 2
        for shift, scale in ((1.0, 0.3), (0.0, 1.0), (2.5, 0.0), (1e-6, 0.9)):
            for power in (1, 2):
                yield w, d, shift, scale, power


def test_resolvent_trace_matches_direct(rng):
    for w, d, shift, scale, power in _cases(rng):
        expect = np.mean(1.0 / (shift + scale * d) ** power)
        got = _kernels.resolvent_trace(d, shift, scale, power)
        assert got == pytest.approx(expect, rel=1e-13)


def test_weighted_resolvent_sum_matches_direct(rng):
    for w, d, shift, scale, power in _cases(rng):
        expect = np.sum(w / (shift + scale * d) ** power)
        got = _kernels.weighted_resolvent_sum(w, d, shift, scale, power)
        assert got == pytest.approx(expect, rel=1e-13)


def test_scale_zero_degenerates_to_inverse_shift(rng):
    d = rng.standard_normal(50) ** 2 + 0.5
    assert _kernels.resolvent_trace(d, 4.0, 0.0, 1) == pytest.approx(0.25, rel=1e-15)


def test_backends_agree(rng):
    py = importlib.import_module("frm_risk._kernels._spectral_py")
    try:
        cy = importlib.import_module("frm_risk._kernels._spectral_cy")
    except ImportError:
        pytest.skip("compiled kernels not built")
    for w, d, shift, scale, power in _cases(rng):
        a = py.resolvent_trace(d, shift, scale, power)
        b = cy.resolvent_trace(d, shift, scale, power)
        assert a == pytest.approx(b, rel=1e-12)
        a = py.weighted_resolvent_sum(w, d, shift, scale, power)
        b = cy.weighted_resolvent_sum(w, d, shift, scale, power)
        assert a == pytest.approx(b, rel=1e-12)


def test_backend_is_reported():
    assert _kernels.BACKEND in ("compiled", "numpy")
