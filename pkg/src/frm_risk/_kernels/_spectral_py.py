"""NumPy implementations of the spectral-sum kernels.

Fallback used when the compiled extension is unavailable (or disabled via
FRM_RISK_PURE_PYTHON=1).
"""

import numpy as np

BACKEND = "numpy"


def resolvent_trace(eigs, shift, scale, power):
    """(1/n) * sum_i 1/(shift + scale*eigs[i])**power for power in {1, 2}."""
    den = shift + scale * np.asarray(eigs, dtype=np.float64)
    if power == 1:
        return float(np.mean(1.0 / den))
    return float(np.mean(1.0 / (den * den)))


def weighted_resolvent_sum(weights, eigs, shift, scale, power):
    """sum_i weights[i]/(shift + scale*eigs[i])**power for power in {1, 2}."""
    den = shift + scale * np.asarray(eigs, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if power == 1:
        return float(np.sum(w / den))
    return float(np.sum(w / (den * den)))
