"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time. Set ``ACCID_DISABLE_NUMBA=1`` to
force the numpy path; it is also used when numba cannot be imported.
Both backends stay importable as ``numpy_backend`` / ``numba_backend()`` so
tests and the benchmark can compare them directly.
"""

import logging
import os

from . import _numpy as numpy_backend

logger = logging.getLogger(__name__)

KERNELS = (
    "speed_heading",
    "acceleration",
    "fill_heading",
    "heading_deviation",
    "sustained",
    "assign_lanes",
    "lead_search",
    "pairwise_distances",
    "nearest_neighbor",
    "rule_predicates",
)


def numba_backend():
    """Return the numba kernel module, or None when numba is unavailable."""
    try:
        from . import _numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        return None
    return _numba


def _disabled() -> bool:
    return os.environ.get("ACCID_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


def _select():
    if _disabled():
        return numpy_backend, "numpy"
    mod = numba_backend()
    if mod is None:
        logger.warning("numba not importable; using numpy kernels")
        return numpy_backend, "numpy"
    return mod, "numba"


_impl, BACKEND = _select()

speed_heading = _impl.speed_heading
acceleration = _impl.acceleration
fill_heading = _impl.fill_heading
heading_deviation = _impl.heading_deviation
sustained = _impl.sustained
assign_lanes = _impl.assign_lanes
lead_search = _impl.lead_search
pairwise_distances = _impl.pairwise_distances
nearest_neighbor = _impl.nearest_neighbor
rule_predicates = _impl.rule_predicates
