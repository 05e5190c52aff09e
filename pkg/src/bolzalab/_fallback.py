"""Pure-numpy trajectory kernel, used when the compiled extension is absent."""

import numpy as np

from .hyperbolic import (
    DISK_INRADIUS,
    GEN_ALPHA,
    GEN_BETA,
    RENORM_EVERY,
    phase_from_su,
    reduce_frames,
    su_mul,
    su_normalize,
)


def geodesic_trajectories(alpha, beta, dt, nsteps):
    """Reduced ``(z, theta)`` along geodesic orbits, sampled every ``dt``.

    ``alpha``, ``beta`` describe the start frames; output arrays have shape
    ``(n, nsteps + 1)`` and column 0 is the (reduced) start.
    """
    a, b = reduce_frames(np.asarray(alpha, dtype=complex), np.asarray(beta, dtype=complex))
    n = a.size
    z = np.empty((n, nsteps + 1), dtype=complex)
    theta = np.empty((n, nsteps + 1))
    z[:, 0], theta[:, 0] = phase_from_su(a, b)
    c = np.cosh(dt / 2.0)
    s = np.sinh(dt / 2.0)
    for k in range(1, nsteps + 1):
        a, b = a * c + b * s, a * s + b * c
        zk = b / np.conj(a)
        out = np.flatnonzero(np.abs(zk) > DISK_INRADIUS)
        while out.size:
            zo = zk[out]
            cand = (GEN_ALPHA[None, :] * zo[:, None] + GEN_BETA[None, :]) / (
                np.conj(GEN_BETA)[None, :] * zo[:, None] + np.conj(GEN_ALPHA)[None, :]
            )
            mods = np.abs(cand)
            j = np.argmin(mods, axis=1)
            move = mods[np.arange(out.size), j] < np.abs(zo) * (1.0 - 1e-13)
            if not move.any():
                break
            idx = out[move]
            jm = j[move]
            a[idx], b[idx] = su_mul(GEN_ALPHA[jm], GEN_BETA[jm], a[idx], b[idx])
            zk[idx] = b[idx] / np.conj(a[idx])
            out = idx[np.abs(zk[idx]) > DISK_INRADIUS]
        if k % RENORM_EVERY == 0:
            a, b = su_normalize(a, b)
        z[:, k] = zk
        theta[:, k] = np.mod(2.0 * np.angle(a), 2.0 * np.pi)
    return z, theta
