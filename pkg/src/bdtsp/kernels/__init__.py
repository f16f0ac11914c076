"""Hot numeric kernels with selectable backend.

Two twin implementations exist: :mod:`bdtsp.kernels.numba_impl` (jitted, the
default) and :mod:`bdtsp.kernels.numpy_impl` (pure Python/numpy fallback).
The active backend is chosen once at import time:

* ``BDTSP_BACKEND=numpy`` forces the fallback,
* ``BDTSP_BACKEND=numba`` forces the jitted path (import error if numba is
  unavailable),
* unset: numba when importable, fallback otherwise.

Both backends are deterministic and return identical results; ``bdtsp bench
--kernels`` times one against the other.
"""

import os

from . import numpy_impl

_requested = os.environ.get("BDTSP_BACKEND", "").strip().lower()

if _requested == "numpy":
    _impl = numpy_impl
elif _requested == "numba":
    from . import numba_impl as _impl
else:
    try:
        from . import numba_impl as _impl
    except ImportError:  # pragma: no cover - exercised only without numba
        _impl = numpy_impl

BACKEND = "numba" if _impl is not numpy_impl else "numpy"

HK_INF = numpy_impl.HK_INF

held_karp_table = _impl.held_karp_table
components_and_bridges = _impl.components_and_bridges
two_cut_sides = _impl.two_cut_sides
connected_small_subsets = _impl.connected_small_subsets


def backend_name() -> str:
    return BACKEND
