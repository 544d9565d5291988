"""Backend selection for the hot kernels.

The compiled extension ``lambertmc._kernels`` is used when importable;
otherwise the numpy implementation in ``_kernels_py``. Setting the
environment variable ``LAMBERTMC_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

STRATEGY_ZERO = _kernels_py.STRATEGY_ZERO
STRATEGY_DETERMINISTIC = _kernels_py.STRATEGY_DETERMINISTIC
STRATEGY_MERTON = _kernels_py.STRATEGY_MERTON

_impl = _kernels_py
BACKEND = "numpy"
if os.environ.get("LAMBERTMC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

lambert_w_array = _impl.lambert_w_array
hedge_paths = _impl.hedge_paths


def get_backend(name=None):
    """Return the kernel module for ``name`` ('cython' or 'numpy'); default active."""
    if name is None:
        return _impl
    if name == "numpy":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
