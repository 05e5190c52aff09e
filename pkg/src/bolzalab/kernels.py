"""Selects the compiled trajectory kernel when available, else the numpy one."""

import os

import numpy as np

from . import _fallback
from .hyperbolic import DISK_INRADIUS, GEN_ALPHA, GEN_BETA, RENORM_EVERY, reduce_frames

try:
    if os.environ.get("BOLZALAB_PURE_PYTHON"):
        raise ImportError("compiled kernel disabled by environment")
    from . import _trajkernel
except ImportError:
    _trajkernel = None

HAVE_COMPILED = _trajkernel is not None
BACKEND = "cython" if HAVE_COMPILED else "numpy"


def geodesic_trajectories(alpha, beta, dt, nsteps, backend=None):
    """Reduced ``(z, theta)`` samples along geodesic orbits, shape ``(n, nsteps + 1)``."""
    backend = backend or BACKEND
    if backend == "numpy":
        return _fallback.geodesic_trajectories(alpha, beta, dt, nsteps)
    if _trajkernel is None:
        raise RuntimeError("compiled kernel not built")
    a, b = reduce_frames(np.asarray(alpha, dtype=complex), np.asarray(beta, dtype=complex))
    return _trajkernel.geodesic_trajectories(
        a, b, float(dt), int(nsteps), GEN_ALPHA, GEN_BETA, DISK_INRADIUS, RENORM_EVERY
    )
