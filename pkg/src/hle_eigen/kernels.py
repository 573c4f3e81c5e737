"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy/scipy
fallback is imported. Setting ``HLE_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("HLE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = _impl.BACKEND
signed_power = _impl.signed_power
weighted_power_sum = _impl.weighted_power_sum
TridiagonalSolver = _impl.TridiagonalSolver


def available_backends():
    """Modules implementing the kernel interface that import cleanly."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
        out["cython"] = _kernels
    except ImportError:
        pass
    return out
