"""Functions on SM with fiber-Fourier structure and the frame operators.

A :class:`FiberField` is a vectorised evaluator ``f(z, theta)`` taking disk
coordinates of points in (a small neighbourhood of) the fundamental octagon.
Fields built here are invariant under the surface group, so evaluating at any
reduced representative gives the value on SM.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import hyperbolic as hyp

DEFAULT_H = 1e-4
# hyperbolic slack around the octagon on which evaluators remain valid
MARGIN = 0.3


class FiberField:
    """Composable evaluator on SM with a fiber mode cutoff ``K``."""

    def __init__(self, fn, K, n_theta=None, label=""):
        self.fn = fn
        self.K = int(K)
        self.n_theta = int(n_theta) if n_theta else 4 * self.K + 4
        self.label = label

    def __call__(self, z, theta):
        z = np.asarray(z, dtype=complex)
        theta = np.broadcast_to(np.asarray(theta, dtype=float), z.shape)
        return np.asarray(self.fn(z, theta), dtype=complex)

    def at(self, p):
        return complex(self(np.array([p.z]), np.array([p.theta]))[0])

    def _wrap(self, fn, K=None, label=""):
        return FiberField(fn, self.K if K is None else K, label=label)

    def __add__(self, other):
        if isinstance(other, FiberField):
            K = max(self.K, other.K)
            return FiberField(lambda z, t: self(z, t) + other(z, t), K, label=f"({self.label}+{other.label})")
        return self._wrap(lambda z, t: self(z, t) + other, label=self.label)

    __radd__ = __add__

    def __neg__(self):
        return self._wrap(lambda z, t: -self(z, t), label=f"-{self.label}")

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, FiberField):
            return FiberField(lambda z, t: self(z, t) * other(z, t), self.K + other.K, label=f"{self.label}*{other.label}")
        return self._wrap(lambda z, t: other * self(z, t), label=self.label)

    __rmul__ = __mul__

    def conj(self):
        return self._wrap(lambda z, t: np.conj(self(z, t)), label=f"conj({self.label})")

    def coefficients(self, z):
        """Fiber-Fourier coefficients at base points ``z``; shape ``(2K+1,) + z.shape``.

        Row ``k + K`` holds ``u_k(z)`` so that ``u = sum_k u_k e^{ik theta}``.
        """
        z = np.asarray(z, dtype=complex)
        n = self.n_theta
        th = 2.0 * np.pi * np.arange(n) / n
        vals = self(np.broadcast_to(z[..., None], z.shape + (n,)), np.broadcast_to(th, z.shape + (n,)))
        c = np.fft.fft(vals, axis=-1) / n
        ks = np.arange(-self.K, self.K + 1)
        return np.moveaxis(c[..., ks % n], -1, 0)

    def full_spectrum(self, z, n=None):
        """All ``n`` fiber coefficients (for truncation checks); modes ordered by ``np.fft.fftfreq``."""
        n = n or 4 * self.n_theta
        z = np.asarray(z, dtype=complex)
        th = 2.0 * np.pi * np.arange(n) / n
        vals = self(np.broadcast_to(z[..., None], z.shape + (n,)), np.broadcast_to(th, z.shape + (n,)))
        ks = np.rint(np.fft.fftfreq(n, 1.0 / n)).astype(int)
        return ks, np.fft.fft(vals, axis=-1) / n

    def project_modes(self, keep):
        """Field keeping only the fiber modes ``k`` for which ``keep(k)`` is true."""
        ks = np.arange(-self.K, self.K + 1)
        mask = np.array([bool(keep(k)) for k in ks])

        def fn(z, t):
            c = self.coefficients(z)
            phase = np.exp(1j * ks[(slice(None),) + (None,) * z.ndim] * t[None])
            return np.sum(np.where(mask[(slice(None),) + (None,) * z.ndim], c * phase, 0.0), axis=0)

        return FiberField(fn, self.K, self.n_theta, label=f"P({self.label})")

    def mode(self, k):
        return self.project_modes(lambda j: j == k)


@dataclass(frozen=True)
class ModeCoefficients:
    k: int
    values: np.ndarray
    weights: np.ndarray


def mode_coefficients(u, k, z, weights=None):
    c = u.coefficients(z)[k + u.K]
    w = np.full(np.shape(z), 1.0 / np.size(z)) if weights is None else np.asarray(weights)
    return ModeCoefficients(k, c, w)


def constant(c, label="const"):
    return FiberField(lambda z, t: np.full(np.shape(z), c, dtype=complex), 0, label=label)


# ---------------------------------------------------------------------------
# localized fields on SM


def bump_profile(s):
    """Smooth compactly supported profile of ``s = r^2 / r_max^2``, equal to 1 at 0."""
    out = np.zeros_like(s, dtype=float)
    inside = s < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside]))
    return out


@lru_cache(maxsize=256)
def _translates(center, radius):
    """Maps T = tau_c o gamma^-1 for translates gamma c near the octagon."""
    c = complex(center)
    reach = hyp.CIRCUMRADIUS + radius + MARGIN
    ga, gb, _ = hyp.group_ball(round(reach + hyp.hyperbolic_distance_to_origin(c) + 1e-9, 6))
    imgs = hyp.su_apply(ga, gb, c)
    keep = hyp.hyperbolic_distance(imgs, 0.0) <= reach
    ga, gb = ga[keep], gb[keep]
    s = 1.0 / math.sqrt(1.0 - abs(c) ** 2)
    ta, tb = s + 0j, -c * s
    ia, ib = hyp.su_inv(ga, gb)
    return hyp.su_mul(ta, tb, ia, ib)


class FiberBump(FiberField):
    """Surface-group invariant bump on SM.

    In the frame at ``center`` (disk axes) the field is
    ``chi(|w|^2/r^2) * spatial(w) * sum_k modes[k] e^{ik theta}`` where ``w`` are
    disk coordinates centred at ``center`` and ``r = tanh(radius/2)``.
    """

    def __init__(self, center, radius, modes, spatial=None, label="bump"):
        self.center = complex(center)
        self.radius = float(radius)
        self.modes = {int(k): complex(v) for k, v in modes.items()}
        self.spatial = spatial
        self.r_e = math.tanh(self.radius / 2.0)
        self.maps = _translates(self.center, self.radius)
        K = max((abs(k) for k in self.modes), default=0)
        super().__init__(self._eval, K, label=label)

    def local_terms(self, z):
        """Yield ``(idx, w, rotation, s)`` for each translate, restricted to its support.

        ``idx`` indexes the flattened ``z``.
        """
        zf = np.ravel(z)
        ta, tb = self.maps
        r2 = self.r_e**2
        for a, b in zip(ta, tb):
            w = hyp.su_apply(a, b, zf)
            s = (w.real**2 + w.imag**2) / r2
            idx = np.flatnonzero(s < 1.0)
            if idx.size:
                zi = zf[idx]
                yield idx, w[idx], hyp.su_rotation_angle(a, b, zi), s[idx]

    def _base(self, w, s):
        base = np.exp(1.0 - 1.0 / (1.0 - s))
        if self.spatial is not None:
            base = base * self.spatial(w)
        return base

    def mode_values(self, z):
        """Fiber coefficients ``{k: u_k(z)}`` evaluated directly (no quadrature)."""
        z = np.asarray(z, dtype=complex)
        out = {k: np.zeros(z.size, dtype=complex) for k in self.modes}
        for idx, w, rot, s in self.local_terms(z):
            base = self._base(w, s)
            for k, a in self.modes.items():
                out[k][idx] += a * base * np.exp(1j * k * rot)
        return {k: v.reshape(z.shape) for k, v in out.items()}

    def _eval(self, z, t):
        z = np.asarray(z, dtype=complex)
        t = np.broadcast_to(np.asarray(t, dtype=float), z.shape).ravel()
        total = np.zeros(z.size, dtype=complex)
        K = self.K
        coeffs = np.array([self.modes.get(k, 0.0) for k in range(-K, K + 1)], dtype=complex)
        for idx, w, rot, s in self.local_terms(z):
            e = np.exp(1j * (rot + t[idx]))
            # sum_k c_k e^{ik phi} by Horner in e, starting from the lowest mode
            acc = np.full(idx.size, coeffs[-1], dtype=complex)
            for c in coeffs[-2::-1]:
                acc = acc * e + c
            if K:
                acc = acc * e ** (-K)
            total[idx] += self._base(w, s) * acc
        return total.reshape(z.shape)


def random_bump(rng, K, radius=(0.9, 1.4), parity=None, real=True):
    """FiberBump with random centre in the octagon and random modes ``|k| <= K``."""
    while True:
        c = hyp.DISK_CIRCUMRADIUS * math.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        if hyp.in_octagon(np.array([c]))[0]:
            break
    ks = [k for k in range(-K, K + 1) if parity is None or (k - parity) % 2 == 0]
    modes = {}
    for k in ks:
        if real and k < 0:
            continue
        a = (rng.normal() + 1j * rng.normal()) / (1.0 + abs(k))
        if real and k == 0:
            a = a.real
        modes[k] = a
        if real and k > 0 and -k in ks:
            modes[-k] = np.conj(a)
    rad = rng.uniform(*radius)
    tilt = (rng.normal() + 1j * rng.normal()) * 0.5
    r_e = math.tanh(rad / 2.0)
    spatial = lambda w, tilt=tilt, r_e=r_e: 1.0 + np.real(np.conj(tilt) * w) / r_e
    return FiberBump(c, rad, modes, spatial=spatial, label="rbump")


def random_field(rng, K=8, n_bumps=3, real=False, parity=None):
    f = random_bump(rng, K, parity=parity, real=real)
    for _ in range(n_bumps - 1):
        f = f + random_bump(rng, K, parity=parity, real=real)
    f.K = K
    return f


class GeodesicTube(FiberField):
    """Function on M equal to 1 within ``inner`` of a closed geodesic, 0 beyond ``outer``.

    The geodesic is given by an SU(1,1) element whose axis (through its fixed
    points) is one lift; all lifts near the octagon are included.
    """

    def __init__(self, alpha, beta, inner=0.15, outer=0.4, label="tube"):
        self.inner, self.outer = float(inner), float(outer)
        # Moebius map sending the axis to the real diameter
        p, q = axis_endpoints(alpha, beta)
        self.to_diameter = _diameter_map(p, q)
        ga, gb, _ = hyp.group_ball(round(2 * hyp.CIRCUMRADIUS + outer + MARGIN, 6))
        lifts = []
        seen = set()
        for a, b in zip(ga, gb):
            pp, qq = hyp.su_apply(a, b, p), hyp.su_apply(a, b, q)
            key = tuple(sorted([(round(pp.real, 9), round(pp.imag, 9)), (round(qq.real, 9), round(qq.imag, 9))]))
            if key in seen:
                continue
            seen.add(key)
            # distance from 0 to the geodesic pp-qq
            ma, mb = _diameter_map(pp, qq)
            w0 = hyp.su_apply(ma, mb, 0.0)
            d0 = np.arcsinh(2 * abs(w0.imag) / (1 - abs(w0) ** 2))
            if d0 <= hyp.CIRCUMRADIUS + outer + MARGIN:
                lifts.append((ma, mb))
        self.lifts = lifts
        super().__init__(self._eval, 0, label=label)

    def _eval(self, z, t):
        out = np.zeros(z.shape)
        for a, b in self.lifts:
            w = hyp.su_apply(a, b, z)
            d = np.arcsinh(2 * np.abs(w.imag) / (1 - np.abs(w) ** 2))
            s = np.clip((d - self.inner) / (self.outer - self.inner), 0.0, 1.0)
            out += smoothstep_down(s)
        return out + 0j


def smoothstep_down(s):
    """C-infinity transition from 1 (s <= 0) to 0 (s >= 1)."""
    s = np.asarray(s, dtype=float)
    f = lambda x: np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    return f(1.0 - s) / (f(1.0 - s) + f(s))


def axis_endpoints(alpha, beta):
    """Repelling and attracting fixed points on the unit circle of a hyperbolic element."""
    # fixed points of z -> (a z + b)/(conj(b) z + conj(a)):  conj(b) z^2 + (conj(a) - a) z - b = 0
    bb = np.conj(beta)
    disc = np.sqrt((np.conj(alpha) - alpha) ** 2 + 4 * bb * beta)
    r1 = (alpha - np.conj(alpha) + disc) / (2 * bb)
    r2 = (alpha - np.conj(alpha) - disc) / (2 * bb)
    # derivative at a fixed point: 1/(conj(b) z + conj(a))^2; attracting if < 1
    d1 = abs(1.0 / (bb * r1 + np.conj(alpha)) ** 2)
    return (r2, r1) if d1 < 1 else (r1, r2)


def _diameter_map(p, q):
    """SU(1,1) element sending boundary points p -> -1, q -> +1."""
    # a disk automorphism is fixed by three boundary points; choose the one
    # sending the geodesic midpoint (closest point to 0) to 0.
    pq = p + q
    if abs(pq) < 1e-14:
        foot = 0.0
    else:
        # orthogonal circle through p, q has centre rho*m with rho = 2/|p+q|
        m = pq / abs(pq)
        rho = 2.0 / abs(pq)
        foot = m * (rho - math.sqrt(rho * rho - 1.0))
    s = 1.0 / math.sqrt(1.0 - abs(foot) ** 2)
    a, b = s + 0j, -foot * s
    pp = hyp.su_apply(a, b, p)
    # rotate so that pp goes to -1
    rot = np.exp(1j * (np.pi - np.angle(pp)))
    ra, rb = np.sqrt(rot), 0j
    return hyp.su_mul(ra, rb, a, b)


# ---------------------------------------------------------------------------
# frame operators


def derive(u, which, h=DEFAULT_H):
    """Central difference of ``u`` along the exact flow for X, X_perp or V."""
    flow = {"X": "geodesic", "Xperp": "perpendicular", "V": "rotation"}[which]

    def fn(z, t):
        zp, tp = hyp.flow_phase_arrays(z, t, h, flow)
        zm, tm = hyp.flow_phase_arrays(z, t, -h, flow)
        return (u(zp, tp) - u(zm, tm)) / (2.0 * h)

    K = u.K if which != "X" and which != "Xperp" else u.K + 1
    return FiberField(fn, K, label=f"{which}{u.label}")


def eta_pm(u, sign, h=DEFAULT_H):
    """eta_+ (sign=+1) or eta_- (sign=-1): (X u +- i X_perp u) / 2."""
    xu = derive(u, "X", h)
    xp = derive(u, "Xperp", h)
    s = 1j if sign > 0 else -1j

    def fn(z, t):
        return 0.5 * (xu(z, t) + s * xp(z, t))

    return FiberField(fn, u.K + 1, label=f"eta{'+' if sign > 0 else '-'}{u.label}")


def szego(u):
    """Projection on the positive fiber modes ``1 <= k <= K``."""
    out = u.project_modes(lambda k: k >= 1)
    out.label = f"S{u.label}"
    return out


def antipodal(u):
    return FiberField(lambda z, t: u(z, t + np.pi), u.K, u.n_theta, label=f"A*{u.label}")


def antipodal_split(u):
    """(even, odd) parts: even modes and odd modes of ``u``."""
    even = FiberField(lambda z, t: 0.5 * (u(z, t) + u(z, t + np.pi)), u.K, u.n_theta, label=f"ev({u.label})")
    odd = FiberField(lambda z, t: 0.5 * (u(z, t) - u(z, t + np.pi)), u.K, u.n_theta, label=f"od({u.label})")
    return even, odd


def commutator_residual(u, z, theta, which="XV", h=DEFAULT_H):
    """Pointwise residual of a structure equation on ``u``.

    ``XV``: [X,V]u - X_perp u;  ``XperpV``: [X_perp,V]u + X u;  ``XXperp``: [X,X_perp]u - V u.
    """
    a, b, c, sign = {
        "XV": ("X", "V", "Xperp", -1.0),
        "XperpV": ("Xperp", "V", "X", 1.0),
        "XXperp": ("X", "Xperp", "V", -1.0),
    }[which]
    # [A,B]u = A(Bu) - B(Au)
    ab = derive(derive(u, b, h), a, h)
    ba = derive(derive(u, a, h), b, h)
    return ab(z, theta) - ba(z, theta) + sign * derive(u, c, h)(z, theta)


# ---------------------------------------------------------------------------
# inner products and norms


@lru_cache(maxsize=4)
def probe_set(n=1000, seed=12345):
    rng = np.random.default_rng(seed)
    return hyp.sample_liouville_arrays(n, rng)


def sup_norm(u, probe=None):
    z, t = probe if probe is not None else probe_set()
    return float(np.max(np.abs(u(z, t))))


def c_norm(u, order=1, probe=None, h=DEFAULT_H):
    """Sup over a probe set of |u| and its frame derivatives up to ``order``."""
    z, t = probe if probe is not None else probe_set()
    fields = [u]
    best = float(np.max(np.abs(u(z, t))))
    for _ in range(order):
        nxt = []
        for f in fields:
            for w in ("X", "Xperp", "V"):
                d = derive(f, w, h if order == 1 else 1e-3)
                best = max(best, float(np.max(np.abs(d(z, t)))))
                nxt.append(d)
        fields = nxt
    return best


@lru_cache(maxsize=8)
def sm_quadrature(n_space=64, n_theta=24):
    """Deterministic product rule on SM: octagon rule times fiber trapezoid.

    Weights are normalized to the Liouville probability measure.
    """
    z, w = hyp.octagon_quadrature(n_space)
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    Z = np.repeat(z, n_theta)
    T = np.tile(th, z.size)
    W = np.repeat(w, n_theta) * (2.0 * np.pi / n_theta) / hyp.LIOUVILLE_MASS
    return Z, T, W


def l2_inner(u, v, quad=None):
    """Liouville-normalized ``<u, v> = int u conj(v) dmu`` by deterministic quadrature."""
    Z, T, W = quad if quad is not None else sm_quadrature()
    return complex(np.sum(W * u(Z, T) * np.conj(v(Z, T))))


def mc_inner(u, v, n, seed):
    """Monte-Carlo estimate of ``<u, v>`` with its standard error."""
    rng = np.random.default_rng(seed)
    z, t = hyp.sample_liouville_arrays(n, rng)
    x = u(z, t) * np.conj(v(z, t))
    return complex(x.mean()), float(np.std(x) / math.sqrt(n))
