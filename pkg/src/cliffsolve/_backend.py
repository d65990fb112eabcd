"""Backend selection for the numeric kernels.

``CLIFFSOLVE_BACKEND=numpy`` forces the pure-numpy path; ``numba`` (the
default when numba imports) uses the ``@njit`` kernels.  ``CLIFFSOLVE_THREADS``
caps numba's thread pool.
"""

from __future__ import annotations

import logging
import os

log = logging.getLogger(__name__)

try:
    import numba

    HAS_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # skip the TBB probe, which warns on older TBB installs
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAS_NUMBA = False


def _requested_backend() -> str:
    value = os.environ.get("CLIFFSOLVE_BACKEND", "numba").strip().lower()
    if value not in ("numba", "numpy"):
        log.warning("unknown CLIFFSOLVE_BACKEND=%r, falling back to numpy", value)
        return "numpy"
    if value == "numba" and not HAS_NUMBA:
        log.warning("numba unavailable, using numpy kernels")
        return "numpy"
    return value


BACKEND = _requested_backend()
USE_NUMBA = BACKEND == "numba"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise the identity decorator."""
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


if HAS_NUMBA:
    prange = numba.prange
else:  # pragma: no cover
    prange = range


def apply_thread_cap() -> int | None:
    """Honour ``CLIFFSOLVE_THREADS``; returns the thread count actually set."""
    raw = os.environ.get("CLIFFSOLVE_THREADS")
    if not raw or not HAS_NUMBA:
        return None
    try:
        wanted = int(raw)
    except ValueError:
        log.warning("ignoring non-integer CLIFFSOLVE_THREADS=%r", raw)
        return None
    wanted = max(1, min(wanted, numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(wanted)
    return wanted
