"""Select the compiled kernel module when available, else the Python one.

Set ``CFMM_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BUY_ALPHA = _pykernels.BUY_ALPHA
SELL_ALPHA = _pykernels.SELL_ALPHA
STATUS_INTERIOR = _pykernels.STATUS_INTERIOR
STATUS_ZERO = _pykernels.STATUS_ZERO
STATUS_MAXITER = _pykernels.STATUS_MAXITER

_impl = _pykernels
if os.environ.get("CFMM_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

cp_out = _impl.cp_out
cp_in_for_out = _impl.cp_in_for_out
riskless_alpha = _impl.riskless_alpha
penalized_alpha = _impl.penalized_alpha
mean_reserves_at = _impl.mean_reserves_at
mean_dual_solve = _impl.mean_dual_solve


def available_backends():
    """Map backend name to kernel module for every backend that imports."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
