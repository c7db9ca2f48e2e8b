"""Backend selection for the numeric kernels.

Every hot kernel exists twice: a loop version compiled with numba and a
vectorized numpy version. Which one the dispatchers call is decided by
``USE_NUMBA``, set at import time from the ``FRACELL_DISABLE_NUMBA``
environment variable (``1``/``true``/``yes`` selects numpy). Both versions
stay importable so tests and the benchmark can compare them in-process.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None
    HAVE_NUMBA = False

_FLAG = os.environ.get("FRACELL_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` in nopython mode when numba is present."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)


def backend():
    return "numba" if USE_NUMBA else "numpy"


def set_backend(name):
    """Switch the kernel backend at runtime ("numba" or "numpy")."""
    global USE_NUMBA
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    USE_NUMBA = name == "numba"
