"""Numba switch.

Kernels are compiled with ``numba.njit`` when numba is importable and the
environment variable ``STABCERT_DISABLE_NUMBA`` is unset (or set to a false
value). Otherwise the pure-numpy fallbacks in :mod:`stabcert.kernels` are used.
The flag is read once, at import time.
"""

from __future__ import annotations

import os

_FALSE = {"", "0", "false", "no", "off"}

try:  # pragma: no cover - depends on the environment
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

NUMBA_AVAILABLE = _numba is not None
NUMBA_DISABLED = os.environ.get("STABCERT_DISABLE_NUMBA", "").strip().lower() not in _FALSE
USE_NUMBA = NUMBA_AVAILABLE and not NUMBA_DISABLED


def njit(func):
    """Compile ``func`` in nopython mode, or return ``None`` if numba is missing.

    Compilation happens even when the flag disables numba, so the benchmark can
    compare both paths in one process.
    """
    if not NUMBA_AVAILABLE:
        return None
    return _numba.njit(cache=True)(func)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
