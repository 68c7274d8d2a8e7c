"""Spectral-sum kernels with a compiled core and a NumPy fallback.

The compiled extension is preferred when importable; set the environment
variable FRM_RISK_PURE_PYTHON=1 before import to force the NumPy backend
(used by the benchmark and the backend-parity tests). Whichever backend is
selected stays fixed for the lifetime of the process, so results are
bit-reproducible within one build.
"""

import os

if os.environ.get("FRM_RISK_PURE_PYTHON"):
    from ._spectral_py import BACKEND, resolvent_trace, weighted_resolvent_sum
else:
    try:
        from ._spectral_cy import BACKEND, resolvent_trace, weighted_resolvent_sum
    except ImportError:
        from ._spectral_py import BACKEND, resolvent_trace, weighted_resolvent_sum

__all__ = ["BACKEND", "resolvent_trace", "weighted_resolvent_sum"]
