"""Symmetric m-cotensors on the surface in the orthonormal coframe.

A tensor of degree ``m`` is stored by its ``m + 1`` independent components
``f_j`` (``j`` = number of indices equal to 2) as functions of the disk
coordinate, for the frame ``e_i = e^{-omega} d/dx_i``.  Full contractions weight
component ``j`` by ``binom(m, j)``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from . import hyperbolic as hyp
from .errors import DegreeError, IllConditioned
from .fiber import DEFAULT_H, FiberBump, FiberField, derive

FD_STEP = 1e-3


class SymmetricTensor:
    """Evaluator ``z -> components`` of a symmetric m-cotensor field."""

    def __init__(self, m, comps, label=""):
        self.m = int(m)
        self.comps = comps
        self.label = label
        self._tf = None

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.asarray(self.comps(z), dtype=float)
        return np.broadcast_to(out, (self.m + 1,) + z.shape)

    def full(self, z):
        """All ``2**m`` components as an array of shape ``(2,)*m + z.shape``."""
        c = self(z)
        out = np.empty((2,) * self.m + np.shape(z))
        for idx in np.ndindex(*(2,) * self.m):
            out[idx] = c[sum(idx)]
        return out

    def __add__(self, other):
        _same_degree(self, other)
        return SymmetricTensor(self.m, lambda z: self(z) + other(z), f"({self.label}+{other.label})")

    def __sub__(self, other):
        _same_degree(self, other)
        return SymmetricTensor(self.m, lambda z: self(z) - other(z), f"({self.label}-{other.label})")

    def __mul__(self, s):
        return SymmetricTensor(self.m, lambda z: s * self(z), self.label)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    @property
    def trace_free(self):
        if self._tf is None:
            self._tf = trace_free_part(self)
        return self._tf


def _same_degree(a, b):
    if a.m != b.m:
        raise DegreeError(f"degree mismatch {a.m} != {b.m}")


def weights(m):
    return np.array([math.comb(m, j) for j in range(m + 1)], dtype=float)


# ---------------------------------------------------------------------------
# components <-> fiber modes


@lru_cache(maxsize=32)
def mode_matrix(m):
    """Complex matrix sending components to fiber modes ``k = m, m-2, ..., -m``."""
    n = 2 * m + 2
    th = 2.0 * np.pi * np.arange(n) / n
    A = np.zeros((m + 1, m + 1), dtype=complex)
    for j in range(m + 1):
        vals = math.comb(m, j) * np.cos(th) ** (m - j) * np.sin(th) ** j
        c = np.fft.fft(vals) / n
        for r in range(m + 1):
            A[r, j] = c[(m - 2 * r) % n]
    return A


@lru_cache(maxsize=32)
def mode_matrix_inv(m):
    return np.linalg.inv(mode_matrix(m))


def modes_of(f, z):
    """Fiber modes of pi_m^* f at ``z``; rows ``k = m, m-2, ..., -m``."""
    c = f(z)
    return np.tensordot(mode_matrix(f.m), c, axes=1)


def from_modes(m, modes_fn, label=""):
    """Tensor whose pullback has fiber modes ``modes_fn(z)`` (rows ``k = m, ..., -m``)."""
    Ainv = mode_matrix_inv(m)
    return SymmetricTensor(m, lambda z: np.real(np.tensordot(Ainv, modes_fn(z), axes=1)), label)


def from_fiber(u, m, label=""):
    """Tensor of degree ``m`` with pi_m^* f equal to the band-limited field ``u``.

    ``u`` must only contain modes of parity ``m`` with ``|k| <= m``.
    """
    ks = [m - 2 * r for r in range(m + 1)]

    def modes(z):
        z = np.asarray(z, dtype=complex)
        n = max(u.n_theta, 2 * m + 4)
        th = 2.0 * np.pi * np.arange(n) / n
        vals = u(np.broadcast_to(z[..., None], z.shape + (n,)), np.broadcast_to(th, z.shape + (n,)))
        c = np.fft.fft(vals, axis=-1) / n
        return np.stack([c[..., k % n] for k in ks])

    return from_modes(m, modes, label)


# ---------------------------------------------------------------------------
# constructors


def metric():
    return SymmetricTensor(2, lambda z: np.stack([np.ones(z.shape), np.zeros(z.shape), np.ones(z.shape)]), "g")


def scalar(fn, label="h"):
    return SymmetricTensor(0, lambda z: np.real(np.asarray(fn(z)))[None], label)


def coframe(i):
    """Orthonormal coframe element (i = 1 or 2) of the disk; not defined on the quotient."""
    c = [1.0, 0.0] if i == 1 else [0.0, 1.0]
    return SymmetricTensor(1, lambda z: np.stack([np.full(z.shape, c[0]), np.full(z.shape, c[1])]), f"e{i}")


def constant_tensor(m, comps, label="const"):
    comps = np.asarray(comps, dtype=float)
    return SymmetricTensor(m, lambda z: comps.reshape((m + 1,) + (1,) * z.ndim) * np.ones(z.shape), label)


def tensor_bump(center, radius, m, coeffs, spatial=None, label="tbump"):
    """Invariant tensor field whose pullback is a FiberBump with modes of parity m.

    ``coeffs`` gives the complex mode amplitudes for ``k = m, m-2, ..., (m mod 2)``;
    negative modes are conjugates so the tensor is real.
    """
    modes = {}
    for r, a in enumerate(coeffs):
        k = m - 2 * r
        if k < 0:
            break
        modes[k] = complex(a) if k else complex(a).real
        if k:
            modes[-k] = np.conj(complex(a))
    bump = FiberBump(center, radius, modes, spatial=spatial, label=label)
    ks = [m - 2 * r for r in range(m + 1)]

    def mfn(z):
        vals = bump.mode_values(z)
        zero = np.zeros(np.shape(z), dtype=complex)
        return np.stack([vals.get(k, zero) for k in ks])

    t = from_modes(m, mfn, label)
    t.bump = bump
    return t


def random_tensor_bump(rng, m, radius=(0.9, 1.4), center=None):
    if center is None:
        while True:
            c = hyp.DISK_CIRCUMRADIUS * math.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
            if hyp.in_octagon(np.array([c]))[0]:
                break
    else:
        c = center
    n = m // 2 + 1
    coeffs = (rng.normal(size=n) + 1j * rng.normal(size=n)) / (1.0 + np.arange(n))
    rad = rng.uniform(*radius) if isinstance(radius, tuple) else radius
    tilt = 0.5 * (rng.normal() + 1j * rng.normal())
    r_e = math.tanh(rad / 2.0)
    spatial = lambda w, tilt=tilt, r_e=r_e: 1.0 + np.real(np.conj(tilt) * w) / r_e
    return tensor_bump(c, rad, m, coeffs, spatial=spatial)


# ---------------------------------------------------------------------------
# algebra


def trace(f):
    if f.m < 2:
        raise DegreeError("trace needs degree >= 2")
    return SymmetricTensor(f.m - 2, lambda z: (lambda c: c[:-2] + c[2:])(f(z)), f"T{f.label}")


def trace_free_part(f):
    """Projection onto the top fiber modes +-m (the trace-free part)."""
    m = f.m
    if m < 2:
        return f

    def mfn(z):
        md = modes_of(f, z)
        md[1:-1] = 0.0
        return md

    return from_modes(m, mfn, f"tf({f.label})")


def pi_star_up(f):
    """Pullback to SM: ``(x, theta) -> <f(x), v^m>`` with ``v = (cos theta, sin theta)``."""
    m = f.m
    w = weights(m)

    def fn(z, t):
        c = f(z)
        out = np.zeros(z.shape)
        ct, st = np.cos(t), np.sin(t)
        for j in range(m + 1):
            out = out + w[j] * c[j] * ct ** (m - j) * st**j
        return out + 0j

    return FiberField(fn, m, label=f"pi{m}*{f.label}")


def pi_star_down(u, m):
    """Push-forward: the tensor ``T`` with ``<T, psi> = int u pi_m^* psi dtheta`` at each point."""

    def comps(z):
        n = max(u.n_theta, 2 * (u.K + m) + 2)
        th = 2.0 * np.pi * np.arange(n) / n
        Z = np.broadcast_to(z[..., None], z.shape + (n,))
        vals = u(Z, np.broadcast_to(th, Z.shape))
        out = []
        for j in range(m + 1):
            mono = np.cos(th) ** (m - j) * np.sin(th) ** j
            out.append(np.real(np.sum(vals * mono, axis=-1)) * (2.0 * np.pi / n))
        return np.stack(out)

    return SymmetricTensor(m, comps, f"pi{m}_*({u.label})")


def c_m_constant(m, n=4096):
    """Brute-force value of c_m with pi_m^* pi_m_* q = c_m q on q = cos(m theta)."""
    th = 2.0 * np.pi * np.arange(n) / n
    q = np.cos(m * th)
    comps = [np.sum(q * np.cos(th) ** (m - j) * np.sin(th) ** j) * (2.0 * np.pi / n) for j in range(m + 1)]
    back = sum(math.comb(m, j) * comps[j] * np.cos(th) ** (m - j) * np.sin(th) ** j for j in range(m + 1))
    return float(np.dot(back, q) / np.dot(q, q))


# ---------------------------------------------------------------------------
# covariant calculus, coordinate route


def _frame_derivatives(f, z, h=FD_STEP):
    """``(e_1 f_j, e_2 f_j)`` by fourth-order central differences in the disk."""
    z = np.asarray(z, dtype=complex)
    step = h * (1.0 - np.abs(z) ** 2) / 2.0
    out = []
    for direction in (1.0, 1j):
        d = step * direction
        diff = (8.0 * (f(z + d) - f(z - d)) - (f(z + 2 * d) - f(z - 2 * d))) / (12.0 * step)
        out.append(diff * (1.0 - np.abs(z) ** 2) / 2.0)
    return out


def nabla(f, z):
    """Components of ``nabla_{e_k} f`` for k = 1, 2 (each a symmetric m-tensor)."""
    m = f.m
    c = f(z)
    zz = np.asarray(z, dtype=complex)
    # connection: nabla_{e_k} e_1 = -c_k e_2, nabla_{e_k} e_2 = c_k e_1
    ck = (zz.imag, -zz.real)
    d1, d2 = _frame_derivatives(f, z)
    res = []
    for k, dk in enumerate((d1, d2)):
        out = dk.copy()
        for j in range(m + 1):
            if j < m:
                out[j] += ck[k] * (m - j) * c[j + 1]
            if j > 0:
                out[j] -= ck[k] * j * c[j - 1]
        res.append(out)
    return res


def sym_derivative(f):
    """D f: symmetrized covariant derivative, degree m + 1."""
    m = f.m

    def comps(z):
        n1, n2 = nabla(f, z)
        out = np.zeros((m + 2,) + np.shape(z))
        for j in range(m + 2):
            if j <= m:
                out[j] += (m + 1 - j) * n1[j]
            if j >= 1:
                out[j] += j * n2[j - 1]
        return out / (m + 1)

    return SymmetricTensor(m + 1, comps, f"D{f.label}")


def divergence(f):
    """D^* f = -trace(nabla f), degree m - 1."""
    m = f.m
    if m < 1:
        raise DegreeError("divergence needs degree >= 1")

    def comps(z):
        n1, n2 = nabla(f, z)
        return -(n1[:m] + n2[1:])

    return SymmetricTensor(m - 1, comps, f"D*{f.label}")


# ---------------------------------------------------------------------------
# fiber route (X acting on pullbacks)


def sym_derivative_fiber(f, h=DEFAULT_H):
    """D f computed as ``X pi_m^* f`` followed by reading off components."""
    xf = derive(pi_star_up(f), "X", h)
    xf.n_theta = 4 * (f.m + 1) + 4
    return from_fiber(xf, f.m + 1, f"Dfib{f.label}")


def divergence_fiber(f, h=DEFAULT_H):
    """D^* f from the fiber route: -(1/2)[(m+1) T(Df) - (m-1) D(T f)]."""
    m = f.m
    if m < 1:
        raise DegreeError("divergence needs degree >= 1")
    tdf = trace(sym_derivative_fiber(f, h))
    if m >= 2:
        dtf = sym_derivative_fiber(trace(f), h)
        return SymmetricTensor(m - 1, lambda z: -0.5 * ((m + 1) * tdf(z) - (m - 1) * dtf(z)), f"D*fib{f.label}")
    return SymmetricTensor(m - 1, lambda z: -0.5 * (m + 1) * tdf(z), f"D*fib{f.label}")


def splitting_residual(f, z, theta, h=DEFAULT_H):
    """Residual of X pi^* f = pi^*(tf(Df)) - (1/2) pi^*(D^* f) for the trace-free part of f."""
    m = f.m
    if m < 1:
        raise DegreeError("splitting identity needs degree >= 1")
    ftf = f.trace_free
    lhs = derive(pi_star_up(ftf), "X", h)(z, theta)
    up = pi_star_up(trace_free_part(sym_derivative(ftf)))(z, theta)
    down = pi_star_up(divergence(ftf))(z, theta)
    return lhs - (up - 0.5 * down)


# ---------------------------------------------------------------------------
# inner products


def sample(f, z):
    return np.asarray(f(z))


def inner_arrays(m, a, b, w):
    """L^2(M) pairing of sampled components ``a``, ``b`` with area weights ``w``."""
    return float(np.sum(weights(m)[:, None] * a * b * w[None, :]))


def l2_inner(f, h, quad=None):
    _same_degree(f, h)
    z, w = quad if quad is not None else hyp.octagon_quadrature()
    return inner_arrays(f.m, f(z), h(z), w)


def mc_inner(f, h, n, seed):
    """Monte-Carlo ``int_M <f, h> dA`` with standard error (uniform area samples)."""
    rng = np.random.default_rng(seed)
    z, _ = hyp.sample_liouville_arrays(n, rng)
    x = hyp.AREA * np.sum(weights(f.m)[:, None] * f(z) * h(z), axis=0)
    return float(x.mean()), float(x.std() / math.sqrt(n))


def potential_coefficients(F, P, w, m, reg=1e-8, max_cond=1e12):
    """Least-squares coefficients of sampled tensors ``F`` on sampled potentials ``P``.

    ``F`` has shape ``(n_f, m+1, n_nodes)`` and ``P`` shape ``(n_p, m+1, n_nodes)``;
    returns ``Q`` with ``F_i - sum_j Q_ij P_j`` L^2-orthogonal to every ``P_j``.
    """
    W = weights(m)[:, None] * w[None, :]
    N = np.einsum("ajn,bjn,jn->ab", P, P, W)
    rhs = np.einsum("ijn,bjn,jn->ib", F, P, W)
    ev = np.linalg.eigvalsh(N)
    cond = ev[-1] / max(ev[0], 1e-300)
    if cond > max_cond:
        raise IllConditioned(f"normal matrix condition {cond:.3e} exceeds {max_cond:.1e}", cond)
    return np.linalg.solve(N + reg * ev[-1] * np.eye(len(P)), rhs.T).T


def solenoidal_project(f, basis, quad=None, reg=1e-8, max_cond=1e12):
    """Remove from ``f`` its L^2-best approximation by ``D q``, q in span(basis).

    Returns ``(f_sol, q)``; ``f_sol = f - sum_j q_j D basis_j``.
    """
    z, w = quad if quad is not None else hyp.octagon_quadrature()
    m = f.m
    dq = [sym_derivative(b) for b in basis]
    for d in dq:
        _same_degree(f, d)
    P = np.stack([d(z) for d in dq])
    q = potential_coefficients(f(z)[None], P, w, m, reg, max_cond)[0]

    def comps(zz):
        out = f(zz).copy()
        for qj, d in zip(q, dq):
            out = out - qj * d(zz)
        return out

    return SymmetricTensor(m, comps, f"sol({f.label})"), q


def c1_norm(f, probe=None):
    """sup |f_j| + sup |nabla_k f_j| over a fixed probe set in the octagon."""
    if probe is None:
        probe = _probe_points()
    n1, n2 = nabla(f, probe)
    return float(np.abs(f(probe)).max() + max(np.abs(n1).max(), np.abs(n2).max()))


@lru_cache(maxsize=1)
def _probe_points():
    z, _ = hyp.sample_liouville_arrays(1000, np.random.default_rng(12345))
    return z
