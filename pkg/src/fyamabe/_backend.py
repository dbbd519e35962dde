"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``FYAMABE_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernel

try:
    from . import _kernel as _ckernel
except ImportError:  # extension not built
    _ckernel = None

KERNELS = {"python": _pykernel.integrate_kernel}
if _ckernel is not None:
    KERNELS["cython"] = _ckernel.integrate_kernel

if _ckernel is not None and os.environ.get("FYAMABE_PURE_PYTHON", "").lower() not in ("1", "true", "yes"):
    BACKEND = "cython"
else:
    BACKEND = "python"


def get_kernel(name=None):
    """Return the integration kernel called ``name`` (default: the active one)."""
    name = name or BACKEND
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available "
                         f"(have: {', '.join(sorted(KERNELS))})") from None
