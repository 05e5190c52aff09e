"""Exact hyperbolic geometry of the Bolza surface.

The unit tangent bundle of the disk is identified with PSU(1,1): the matrix
``[[alpha, beta], [conj(beta), conj(alpha)]]`` is the frame at ``z = beta /
conj(alpha)`` pointing in direction ``theta = 2 arg(alpha)``.  The three frame
flows are right translations by one-parameter subgroups, so every flow is an
exact matrix product.  The surface group acts on the left.

Public group elements are carried as real SL(2, R) matrices (upper half-plane
model); everything vectorised works directly on ``(alpha, beta)`` arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConstructionError, IterationCap

SQRT2 = math.sqrt(2.0)
GEN_COSH = 1.0 + SQRT2
GEN_SINH = math.sqrt(GEN_COSH**2 - 1.0)
SYSTOLE = 2.0 * math.acosh(GEN_COSH)
INRADIUS = 0.5 * SYSTOLE
CIRCUMRADIUS = math.acosh(GEN_COSH**2)
GENUS = 2
AREA = 4.0 * math.pi * (GENUS - 1)
LIOUVILLE_MASS = 2.0 * math.pi * AREA

# Euclidean radii in the disk model
DISK_INRADIUS = math.tanh(INRADIUS / 2.0)
DISK_CIRCUMRADIUS = math.tanh(CIRCUMRADIUS / 2.0)
KLEIN_INRADIUS = math.tanh(INRADIUS)

RENORM_EVERY = 64
MAX_REDUCE_STEPS = 10_000

# side-pairing generators s_j, j = 0..7, translate by the systole towards angle j*pi/4;
# s_{j+4} = s_j^{-1}
_SIDE_ANGLES = np.arange(8) * (np.pi / 4.0)
GEN_ALPHA = np.full(8, GEN_COSH, dtype=complex)
GEN_BETA = GEN_SINH * np.exp(1j * _SIDE_ANGLES)

# vertex cycle of the octagon: g0 g1^-1 g2 g3^-1 g0^-1 g1 g2^-1 g3 with g_k = s_k
RELATION_WORD = (0, 5, 2, 7, 4, 1, 6, 3)

_CAYLEY = np.array([[1.0, -1.0j], [1.0, 1.0j]])
_CAYLEY_INV = np.linalg.inv(_CAYLEY)


# ---------------------------------------------------------------------------
# vectorised PSU(1,1) helpers


def su_mul(a1, b1, a2, b2):
    return a1 * a2 + b1 * np.conj(b2), a1 * b2 + b1 * np.conj(a2)


def su_inv(a, b):
    return np.conj(a), -b


def su_apply(a, b, z):
    return (a * z + b) / (np.conj(b) * z + np.conj(a))


def su_normalize(a, b):
    det = np.abs(a) ** 2 - np.abs(b) ** 2
    s = 1.0 / np.sqrt(det)
    return a * s, b * s


def su_rotation_angle(a, b, z):
    """Angle by which the isometry ``(a, b)`` rotates tangent directions at ``z``."""
    return -2.0 * np.angle(np.conj(b) * z + np.conj(a))


def phase_from_su(a, b):
    z = b / np.conj(a)
    theta = np.mod(2.0 * np.angle(a), 2.0 * np.pi)
    return z, theta


def su_from_phase(z, theta):
    z = np.asarray(z, dtype=complex)
    mod = 1.0 / np.sqrt(1.0 - np.abs(z) ** 2)
    a = mod * np.exp(0.5j * np.asarray(theta, dtype=float))
    return a, z * np.conj(a)


def flow_step(which, t):
    """(alpha, beta) of exp(t * generator) for the named frame flow."""
    t = np.asarray(t, dtype=float)
    if which == "geodesic":
        return np.cosh(t / 2.0) + 0j, np.sinh(t / 2.0) + 0j
    if which == "perpendicular":
        # sign fixed by [X, V] = X_perp
        return np.cosh(t / 2.0) + 0j, -1j * np.sinh(t / 2.0)
    if which == "rotation":
        return np.exp(0.5j * t), np.zeros_like(t) + 0j
    raise ValueError(f"unknown flow {which!r}")


def flow_arrays(a, b, t, which="geodesic"):
    """Right-translate frames ``(a, b)`` by the flow for time ``t`` (no reduction)."""
    sa, sb = flow_step(which, t)
    return su_mul(a, b, sa, sb)


def flow_phase_arrays(z, theta, t, which="geodesic"):
    a, b = su_from_phase(z, theta)
    return phase_from_su(*flow_arrays(a, b, t, which))


def hyperbolic_distance_to_origin(z):
    return 2.0 * np.arctanh(np.minimum(np.abs(z), 1.0 - 1e-16))


def hyperbolic_distance(z, w):
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    num = 2.0 * np.abs(z - w) ** 2
    den = (1.0 - np.abs(z) ** 2) * (1.0 - np.abs(w) ** 2)
    return np.arccosh(1.0 + num / den)


def conformal_factor(z):
    """omega(z) with metric e^{2 omega} |dz|^2 of curvature -1."""
    return np.log(2.0 / (1.0 - np.abs(z) ** 2))


def in_octagon(z, tol=1e-12):
    k = 2.0 * np.asarray(z, dtype=complex) / (1.0 + np.abs(z) ** 2)
    proj = np.real(k[..., None] * np.exp(-1j * _SIDE_ANGLES))
    return np.all(proj <= KLEIN_INRADIUS + tol, axis=-1)


def reduce_arrays(z, max_steps=MAX_REDUCE_STEPS):
    """Greedy side-pairing reduction of disk points into the octagon.

    Returns ``(z_reduced, alpha, beta)`` where ``(alpha, beta)`` maps ``z`` to
    ``z_reduced``.
    """
    z = np.array(z, dtype=complex, copy=True)
    shape = z.shape
    z = z.ravel()
    ga = np.ones_like(z)
    gb = np.zeros_like(z)
    active = np.flatnonzero(np.abs(z) > DISK_INRADIUS)
    steps = 0
    while active.size:
        if steps >= max_steps:
            raise IterationCap(f"reduction did not terminate after {max_steps} steps")
        za = z[active]
        cand = su_apply(GEN_ALPHA[None, :], GEN_BETA[None, :], za[:, None])
        mods = np.abs(cand)
        j = np.argmin(mods, axis=1)
        best = mods[np.arange(active.size), j]
        move = best < np.abs(za) * (1.0 - 1e-13)
        if not move.any():
            break
        idx = active[move]
        jm = j[move]
        z[idx] = cand[np.flatnonzero(move), jm]
        ga[idx], gb[idx] = su_mul(GEN_ALPHA[jm], GEN_BETA[jm], ga[idx], gb[idx])
        steps += 1
        if steps % RENORM_EVERY == 0:
            ga[idx], gb[idx] = su_normalize(ga[idx], gb[idx])
        active = idx[np.abs(z[idx]) > DISK_INRADIUS]
    return z.reshape(shape), ga.reshape(shape), gb.reshape(shape)


def reduce_phase_arrays(z, theta):
    zr, ga, gb = reduce_arrays(z)
    rot = su_rotation_angle(ga, gb, np.asarray(z, dtype=complex))
    return zr, np.mod(np.asarray(theta) + rot, 2.0 * np.pi)


def reduce_frames(a, b):
    """Reduce frames given as SU(1,1) arrays; returns reduced ``(a, b)``."""
    z = b / np.conj(a)
    _, ga, gb = reduce_arrays(z)
    return su_normalize(*su_mul(ga, gb, a, b))


# ---------------------------------------------------------------------------
# value types


def _real_from_su(alpha, beta):
    m_su = np.array([[alpha, beta], [np.conj(beta), np.conj(alpha)]])
    m = (_CAYLEY_INV @ m_su @ _CAYLEY).real
    return m


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Real unimodular matrix ``[[a, b], [c, d]]`` taken up to sign."""

    a: float
    b: float
    c: float
    d: float
    products: int = field(default=0, compare=False)

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_su11(cls, alpha, beta, products=0):
        m = _real_from_su(complex(alpha), complex(beta))
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1], products)

    @property
    def matrix(self):
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def su11(self):
        m = _CAYLEY @ self.matrix @ _CAYLEY_INV
        return complex(m[0, 0]), complex(m[0, 1])

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    @property
    def trace(self):
        return self.a + self.d

    def normalized(self):
        s = 1.0 / math.sqrt(self.det)
        return GroupElement(self.a * s, self.b * s, self.c * s, self.d * s, 0)

    def __matmul__(self, other):
        m = self.matrix @ other.matrix
        n = max(self.products, other.products) + 1
        out = GroupElement(m[0, 0], m[0, 1], m[1, 0], m[1, 1], n)
        return out.normalized() if n >= RENORM_EVERY else out

    def inverse(self):
        return GroupElement(self.d, -self.b, -self.c, self.a, self.products)

    def equals(self, other, tol=1e-12):
        x, y = self.matrix, other.matrix
        return bool(min(np.abs(x - y).max(), np.abs(x + y).max()) <= tol)

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    def apply_disk(self, z):
        alpha, beta = self.su11
        return su_apply(alpha, beta, z)

    def is_hyperbolic(self):
        return abs(self.trace) > 2.0

    def translation_length(self):
        tr = abs(self.trace)
        return 2.0 * math.acosh(tr / 2.0) if tr > 2.0 else 0.0


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """Point of SM: a frame ``g`` with cached disk coordinates ``(z, theta)``."""

    g: GroupElement
    z: complex
    theta: float

    @classmethod
    def from_group(cls, g):
        alpha, beta = g.su11
        z, theta = phase_from_su(alpha, beta)
        return cls(g, complex(z), float(theta))

    @classmethod
    def from_disk(cls, z, theta):
        alpha, beta = su_from_phase(complex(z), float(theta))
        return cls(GroupElement.from_su11(alpha, beta), complex(z), float(np.mod(theta, 2 * np.pi)))

    def consistency_residual(self):
        alpha, beta = self.g.su11
        z, theta = phase_from_su(alpha, beta)
        dtheta = abs((theta - self.theta + np.pi) % (2 * np.pi) - np.pi)
        return max(abs(z - self.z), dtheta)

    def distance(self, other):
        dtheta = abs((self.theta - other.theta + np.pi) % (2 * np.pi) - np.pi)
        return max(abs(self.z - other.z), dtheta)

    def distance_mod(self, other):
        """Distance allowing a side pairing on ``other``; points on the octagon boundary have two lifts."""
        a, b = other.g.su11
        ta, tb = su_mul(GEN_ALPHA, GEN_BETA, a, b)
        z, theta = phase_from_su(np.append(ta, a), np.append(tb, b))
        dtheta = np.abs((self.theta - theta + np.pi) % (2 * np.pi) - np.pi)
        return float(np.min(np.maximum(np.abs(self.z - z), dtheta)))


@dataclass(frozen=True, eq=False)
class SurfaceGroup:
    generators: tuple
    octagon_vertices: np.ndarray
    relation_residual: float

    @property
    def gen_su11(self):
        return GEN_ALPHA, GEN_BETA


def octagon_vertices():
    return DISK_CIRCUMRADIUS * np.exp(1j * (_SIDE_ANGLES + np.pi / 8.0))


def side_pairing_residual():
    """Max distance between s_j(side opposite j) and side j, over endpoints."""
    v = octagon_vertices()
    worst = 0.0
    for j in range(8):
        # side j is spanned by vertices j-1, j (angles j*pi/4 -+ pi/8)
        target = {v[(j - 1) % 8], v[j]}
        opp = j + 4
        src = [v[(opp - 1) % 8], v[opp % 8]]
        img = [su_apply(GEN_ALPHA[j], GEN_BETA[j], w) for w in src]
        for w in img:
            worst = max(worst, min(abs(w - t) for t in target))
    return worst


def relation_residual():
    a, b = 1.0 + 0j, 0.0 + 0j
    for j in RELATION_WORD:
        a, b = su_mul(a, b, GEN_ALPHA[j], GEN_BETA[j])
    a, b = su_normalize(a, b)
    return float(min(abs(a - 1) + abs(b), abs(a + 1) + abs(b)))


def build_bolza(tol=1e-9):
    """Regular-octagon (vertex angle pi/4) genus-2 surface group."""
    gens = tuple(GroupElement.from_su11(GEN_ALPHA[j], GEN_BETA[j]) for j in range(8))
    res = relation_residual()
    if res > tol:
        raise ConstructionError(f"Bolza relation residual {res:.3e} exceeds {tol}")
    if side_pairing_residual() > tol:
        raise ConstructionError("side pairings do not map opposite sides")
    for g in gens:
        if not g.is_hyperbolic():
            raise ConstructionError("generator is not hyperbolic")
    return SurfaceGroup(gens, octagon_vertices(), res)


def reduce(z, grp=None):
    """Reduce a disk point into the octagon; returns ``(z', gamma)`` with gamma z = z'."""
    zr, ga, gb = reduce_arrays(np.array([z], dtype=complex))
    return complex(zr[0]), GroupElement.from_su11(ga[0], gb[0])


def reduce_point(p):
    alpha, beta = p.g.su11
    a, b = reduce_frames(np.array([alpha]), np.array([beta]))
    return PhasePoint.from_group(GroupElement.from_su11(a[0], b[0]))


def flow(p, t, which="geodesic", reduce=True):
    alpha, beta = p.g.su11
    a, b = flow_arrays(alpha, beta, t, which)
    if reduce:
        a, b = reduce_frames(np.array([a]), np.array([b]))
        a, b = a[0], b[0]
    return PhasePoint.from_group(GroupElement.from_su11(a, b, p.g.products + 1))


# ---------------------------------------------------------------------------
# Liouville measure


def sample_liouville_arrays(n, rng):
    """``n`` i.i.d. Liouville samples as ``(z, theta)`` arrays (rejection sampling)."""
    zs = []
    got = 0
    dmax = 4.0 / (1.0 - DISK_CIRCUMRADIUS**2) ** 2
    while got < n:
        m = max(64, int(1.3 * (n - got) / 0.12))
        r = DISK_CIRCUMRADIUS * np.sqrt(rng.random(m))
        phi = 2.0 * np.pi * rng.random(m)
        z = r * np.exp(1j * phi)
        dens = 4.0 / (1.0 - r**2) ** 2
        keep = in_octagon(z) & (rng.random(m) * dmax < dens)
        zs.append(z[keep])
        got += int(keep.sum())
    z = np.concatenate(zs)[:n]
    theta = 2.0 * np.pi * rng.random(n)
    return z, theta


def sample_liouville(n, seed):
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    z, theta = sample_liouville_arrays(n, rng)
    return [PhasePoint.from_disk(zi, ti) for zi, ti in zip(z, theta)]


# ---------------------------------------------------------------------------
# quadrature and group balls


@lru_cache(maxsize=8)
def octagon_quadrature(n=64):
    """Nodes and area weights for integrating over the octagon.

    The octagon is a Euclidean polygon in the Klein model; each of its 8
    central triangles gets a collapsed tensor Gauss-Legendre rule.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    U, Vv = np.meshgrid(u, u, indexing="ij")
    W = np.outer(wu, wu)
    verts = math.tanh(CIRCUMRADIUS) * np.exp(1j * (_SIDE_ANGLES + np.pi / 8.0))
    nodes, weights = [], []
    for j in range(8):
        A = verts[j - 1]
        B = verts[j]
        k = U * (A + Vv * (B - A))
        jac = U * abs((np.conj(A) * B).imag)
        dens = (1.0 - np.abs(k) ** 2) ** -1.5
        nodes.append(k.ravel())
        weights.append((W * jac * dens).ravel())
    k = np.concatenate(nodes)
    z = k / (1.0 + np.sqrt(1.0 - np.abs(k) ** 2))
    return z, np.concatenate(weights)


def octagon_area_polar(n=64):
    """Independent octagon area: radial integral in closed form, angular Gauss rule per sector."""
    x, w = np.polynomial.legendre.leggauss(n)
    rel = x * (np.pi / 8.0)
    # Klein boundary radius along each direction, mapped back to the disk
    kb = KLEIN_INRADIUS / np.cos(rel)
    rb = kb / (1.0 + np.sqrt(1.0 - kb**2))
    sector = np.sum(w * 2.0 * rb**2 / (1.0 - rb**2)) * (np.pi / 8.0)
    return float(8.0 * sector)


@lru_cache(maxsize=8)
def group_ball(radius):
    """All group elements gamma with d(0, gamma 0) <= radius.

    Breadth-first search through side-adjacent tiles ``gamma D -> gamma s_j D``.  A tile is expanded
    while a lower bound for its distance to the origin (the largest signed
    distance to one of its side lines) is within ``radius``, so tiles met by
    the ball only near a corner are still visited.  Returns
    ``(alpha, beta, words)`` sorted by displacement; ``words[i]`` lists the
    generator indices ``(j1, j2, ...)`` with ``gamma = s_j1 s_j2 ...``.
    """
    cosh_r, sinh_r = math.cosh(INRADIUS), math.sinh(INRADIUS)
    sinh_bound = math.sinh(radius)

    def keys(a, b):
        sgn = np.where((a.real < 0) | ((a.real == 0) & (a.imag < 0)), -1.0, 1.0)
        k = np.stack([(a * sgn).real, (a * sgn).imag, (b * sgn).real, (b * sgn).imag], axis=1)
        return np.round(k * 1e4).astype(np.int64)

    def near(a, b):
        # position of gamma^{-1} 0 and its distance to each side line
        w = -b / a
        d = 2.0 * np.arctanh(np.minimum(np.abs(w), 1.0 - 1e-16))
        psi = np.angle(w)
        s = np.sinh(d)[:, None] * np.cos(psi[:, None] - _SIDE_ANGLES[None, :]) * cosh_r
        s = s - np.cosh(d)[:, None] * sinh_r
        return s.max(axis=1) <= sinh_bound

    fa = np.array([1.0 + 0j])
    fb = np.array([0.0 + 0j])
    parent = [np.array([-1])]
    letter = [np.array([-1])]
    level_keys = [{tuple(k) for k in keys(fa, fb).tolist()}]
    prev_keys = set()
    all_a, all_b = [fa], [fb]
    offset = 0
    while fa.size:
        n = fa.size
        ca, cb = su_mul(fa[None, :], fb[None, :], GEN_ALPHA[:, None], GEN_BETA[:, None])
        ca, cb = ca.ravel(), cb.ravel()
        par = np.tile(np.arange(n), 8) + offset
        let = np.repeat(np.arange(8), n)
        ok = near(ca, cb)
        ca, cb, par, let = ca[ok], cb[ok], par[ok], let[ok]
        k = keys(ca, cb)
        _, first = np.unique(k, axis=0, return_index=True)
        first = np.sort(first)
        klist = [tuple(r) for r in k[first].tolist()]
        fresh = np.array([t not in level_keys[-1] and t not in prev_keys for t in klist], dtype=bool)
        sel = first[fresh] if first.size else first
        offset += n
        fa, fb = su_normalize(ca[sel], cb[sel]) if sel.size else (ca[sel], cb[sel])
        prev_keys = level_keys[-1]
        level_keys.append({t for t, f in zip(klist, fresh) if f})
        all_a.append(fa)
        all_b.append(fb)
        parent.append(par[sel])
        letter.append(let[sel])
    a = np.concatenate(all_a)
    b = np.concatenate(all_b)
    parent = np.concatenate(parent)
    letter = np.concatenate(letter)
    disp = 2.0 * np.arccosh(np.maximum(np.abs(a), 1.0))
    keep = disp <= radius + 1e-12
    order = np.argsort(disp[keep], kind="stable")
    idx = np.flatnonzero(keep)[order]
    words = []
    for i in idx:
        w = []
        while parent[i] >= 0:
            w.append(int(letter[i]))
            i = parent[i]
        words.append(tuple(reversed(w)))
    return a[idx], b[idx], tuple(words)
