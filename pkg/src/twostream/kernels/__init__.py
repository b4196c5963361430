"""Hot loops of the solvers, dispatched to numba or numpy.

The backend is chosen once at import from ``TWOSTREAM_BACKEND``.
"""
from .._accel import active_backend

BACKEND = active_backend()

if BACKEND == "numba":
    from ._numba import (
        coupled_explicit,
        coupled_implicit,
        mc_advance,
        sink_sweep,
        uniform_stream,
    )
else:
    from ._numpy import (
        coupled_explicit,
        coupled_implicit,
        mc_advance,
        sink_sweep,
        uniform_stream,
    )

__all__ = [
    "BACKEND",
    "coupled_explicit",
    "coupled_implicit",
    "mc_advance",
    "sink_sweep",
    "uniform_stream",
]
