"""Closed geodesics of the Bolza surface up to a length bound.

Every closed geodesic has lifts whose axes cross the octagon.  Those lifts are
the hyperbolic group elements with axis through the fundamental domain, and
they all move the origin by at most ``2 asinh(cosh R sinh(L/2))`` (R the
circumradius), so a ball enumeration finds all of them.  Lifts of the same
free-homotopy class are linked by following the axis out of the octagon and
conjugating by the reducing element.  Inverses and conjugates by a side
pairing are linked as well.
"""

from __future__ import annotations

import builtins
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import hyperbolic as hyp
from .errors import BudgetExceeded, NotHyperbolic
from .fiber import _diameter_map, axis_endpoints

MAX_ELEMENTS = 2_000_000
LENGTH_TOL = 1e-9


@dataclass(frozen=True)
class GeodesicRecord:
    """One free-homotopy class of closed geodesics.

    ``alpha, beta`` is the SU(1,1) form of a representative whose axis meets
    the octagon; ``frame`` is the unit-speed starting frame on that axis at
    the point closest to the origin, pointing in the translation direction.
    """

    word: tuple
    trace: float
    length: float
    primitive: bool
    alpha: complex = field(repr=False)
    beta: complex = field(repr=False)
    frame: tuple = field(repr=False)
    lifts: int = field(default=1, repr=False)

    @property
    def element(self):
        return hyp.GroupElement.from_su11(self.alpha, self.beta)

    def axis(self, t, reduce=True):
        """PhasePoint at arclength ``t`` along the closed geodesic."""
        a, b = hyp.flow_arrays(self.frame[0], self.frame[1], t)
        if reduce:
            a, b = hyp.reduce_frames(np.atleast_1d(a), np.atleast_1d(b))
            a, b = a[0], b[0]
        return hyp.PhasePoint.from_group(hyp.GroupElement.from_su11(a, b))

    def closure_residual(self):
        start = self.axis(0.0)
        end = self.axis(self.length)
        return start.distance_mod(end)

    @property
    def word_string(self):
        return " ".join(str(j) for j in self.word)


class Census(list):
    """List of GeodesicRecord sorted by (length, word), plus run metadata."""

    def __init__(self, records, L, ball_radius, flags=()):
        super().__init__(records)
        self.L = L
        self.ball_radius = ball_radius
        self.flags = list(flags)

    def counting(self, L):
        return sum(1 for r in self if r.length <= L + LENGTH_TOL)


def ball_radius_for(L):
    """Largest displacement of the origin by a lift with axis meeting the octagon."""
    return 2.0 * math.asinh(math.cosh(hyp.CIRCUMRADIUS) * math.sinh(L / 2.0))


def _keys(a, b):
    sgn = np.where((a.real < 0) | ((a.real == 0) & (a.imag < 0)), -1.0, 1.0)
    k = np.stack([(a * sgn).real, (a * sgn).imag, (b * sgn).real, (b * sgn).imag], axis=-1)
    return [tuple(r) for r in np.round(k * 1e4).astype(np.int64).tolist()]


def _endpoints(alpha, beta):
    pq = [axis_endpoints(a, b) for a, b in zip(alpha, beta)]
    return np.array([x for x, _ in pq]), np.array([y for _, y in pq])


def _clip_chord(p, q):
    """Parameters ``(t_in, t_out)`` of the Klein chord p->q inside the octagon."""
    d = q - p
    t_in = np.zeros(p.shape)
    t_out = np.ones(p.shape)
    for phi in np.arange(8) * (np.pi / 4.0):
        rot = np.exp(-1j * phi)
        c0 = np.real(p * rot) - hyp.KLEIN_INRADIUS
        c1 = np.real(d * rot)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = -c0 / c1
        t_out = np.where(c1 > 0, np.minimum(t_out, t), t_out)
        t_in = np.where(c1 < 0, np.maximum(t_in, t), t_in)
        t_out = np.where((c1 == 0) & (c0 > 0), -1.0, t_out)
    return t_in, t_out


def _klein_to_disk(k):
    return k / (1.0 + np.sqrt(np.maximum(1.0 - np.abs(k) ** 2, 0.0)))


def _cyclic_reduce(w):
    # free reduction (letters j and j+4 are inverse), then strip inverse pairs at the ends
    stack = []
    for j in w:
        if stack and (stack[-1] - j) % 8 == 4:
            stack.pop()
        else:
            stack.append(j)
    w = stack
    while len(w) >= 2 and (w[0] - w[-1]) % 8 == 4:
        w = w[1:-1]
    return tuple(w)


def _min_rotation(w):
    if not w:
        return w
    return min(tuple(w[i:] + w[:i]) for i in range(len(w)))


def inverse_word(w):
    return tuple((j + 4) % 8 for j in reversed(w))


def canonical_word(words):
    """Lexicographically minimal cyclic rotation over words and their inverses (shortest first)."""
    cands = []
    for w in words:
        w = _cyclic_reduce(w)
        cands.append(_min_rotation(w))
        cands.append(_min_rotation(inverse_word(w)))
    return min(cands, key=lambda w: (len(w), w))


def axis_frame(alpha, beta):
    """SU(1,1) frame on the axis of ``(alpha, beta)`` nearest the origin, moving toward the attracting end."""
    tr = abs(2.0 * complex(alpha).real)
    if tr <= 2.0:
        raise NotHyperbolic(f"|trace| = {tr:.15g} <= 2")
    p, q = axis_endpoints(complex(alpha), complex(beta))
    ma, mb = _diameter_map(p, q)
    fa, fb = hyp.su_inv(ma, mb)
    return complex(fa), complex(fb)


def axis_point(rec):
    """PhasePoint on the axis of a record or of a GroupElement."""
    if isinstance(rec, GeodesicRecord):
        alpha, beta = rec.alpha, rec.beta
    else:
        alpha, beta = rec.su11
    a, b = axis_frame(alpha, beta)
    a, b = hyp.reduce_frames(np.array([a]), np.array([b]))
    return hyp.PhasePoint.from_group(hyp.GroupElement.from_su11(a[0], b[0]))


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            # smaller index wins so the result does not depend on link order
            self.parent[max(ri, rj)] = min(ri, rj)


def enumerate(grp=None, L=8.0, max_elements=MAX_ELEMENTS):  # noqa: A001 - public name
    """Closed geodesics of length <= L, one record per free-homotopy class.

    Both orientations of a geodesic are one class.  Proper powers are kept
    with ``primitive=False``.
    """
    if L <= 0:
        raise ValueError("L must be positive")
    radius = ball_radius_for(L)
    estimate = 0.5 * (math.cosh(radius + hyp.INRADIUS) - 1.0)
    if estimate > max_elements:
        raise BudgetExceeded(f"L={L} needs about {estimate:.3g} group elements (cap {max_elements})")
    ga, gb, gw = hyp.group_ball(round(radius + 1e-9, 9))
    tr = 2.0 * np.abs(ga.real)
    with np.errstate(invalid="ignore"):
        length = 2.0 * np.arccosh(np.maximum(tr / 2.0, 1.0))
    sel = np.flatnonzero((tr > 2.0 + 1e-12) & (length <= L + LENGTH_TOL))
    if sel.size == 0:
        return Census([], L, radius)
    p, q = _endpoints(ga[sel], gb[sel])
    t_in, t_out = _clip_chord(p, q)
    crosses = t_out - t_in > 1e-9
    sel, p, q, t_in, t_out = sel[crosses], p[crosses], q[crosses], t_in[crosses], t_out[crosses]
    if sel.size == 0:
        return Census([], L, radius)
    a, b, lens = ga[sel], gb[sel], length[sel]
    words = [gw[i] for i in sel]
    index = {k: i for i, k in builtins.enumerate(_keys(a, b))}
    uf = _UnionFind(sel.size)

    # inverse: same unoriented geodesic
    for i, k in builtins.enumerate(_keys(*hyp.su_inv(a, b))):
        j = index.get(k)
        if j is not None:
            uf.union(i, j)

    # next segment: push past the exit point and conjugate by the reducing element
    d = (q - p) / np.abs(q - p)
    k_exit = p + t_out * (q - p) + 1e-7 * d
    _, ha, hb = hyp.reduce_arrays(_klein_to_disk(k_exit))
    ca, cb = hyp.su_mul(*hyp.su_mul(ha, hb, a, b), *hyp.su_inv(ha, hb))
    missing = 0
    for i, k in builtins.enumerate(_keys(ca, cb)):
        j = index.get(k)
        if j is None:
            missing += 1
        else:
            uf.union(i, j)

    # conjugation by a side pairing; joins geodesics that run along a side
    for j in range(8):
        sa, sb = hyp.GEN_ALPHA[j], hyp.GEN_BETA[j]
        ca, cb = hyp.su_mul(*hyp.su_mul(sa, sb, a, b), *hyp.su_inv(sa, sb))
        for i, k in builtins.enumerate(_keys(ca, cb)):
            jj = index.get(k)
            if jj is not None:
                uf.union(i, jj)

    roots = [uf.find(i) for i in range(sel.size)]
    classes = {}
    for i, r in builtins.enumerate(roots):
        classes.setdefault(r, []).append(i)

    # proper powers
    non_primitive = set()
    for i in range(sel.size):
        pa, pb = a[i], b[i]
        for kpow in range(2, int(L / lens[i] + LENGTH_TOL) + 1):
            pa, pb = hyp.su_mul(pa, pb, a[i], b[i])
            j = index.get(_keys(np.array([pa]), np.array([pb]))[0])
            if j is not None:
                non_primitive.add(roots[j])

    flags = []
    if missing:
        flags.append(f"{missing} lifts had no matching successor")
    records = []
    for r, members in classes.items():
        ls = lens[members]
        if ls.max() - ls.min() > LENGTH_TOL:
            flags.append(f"class with word {words[members[0]]} has spread lengths {ls.min():.12g}..{ls.max():.12g}")
        word = canonical_word([words[i] for i in members])
        # representative: axis closest to the origin, ties broken by word
        dist = []
        for i in members:
            fa, fb = axis_frame(a[i], b[i])
            dist.append((round(abs(fb / np.conj(fa)), 12), words[i], i))
        _, _, rep = min(dist)
        fa, fb = axis_frame(a[rep], b[rep])
        trace = float(2.0 * abs(a[rep].real))
        records.append(
            GeodesicRecord(
                word=word,
                trace=trace,
                length=float(2.0 * math.acosh(trace / 2.0)),
                primitive=r not in non_primitive,
                alpha=complex(a[rep]),
                beta=complex(b[rep]),
                frame=(fa, fb),
                lifts=len(members),
            )
        )
    records.sort(key=lambda rec: (round(rec.length, 9), len(rec.word), rec.word))
    # trace-clustering safety net: equal length and equal canonical word means a missed merge
    for r1, r2 in zip(records, records[1:]):
        if abs(r1.length - r2.length) <= LENGTH_TOL and r1.word == r2.word:
            flags.append(f"ambiguous cluster at length {r1.length:.12g} word {r1.word}")
    return Census(records, L, radius, flags)


def write_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["word", "trace", "length", "primitive"])
        for r in records:
            w.writerow([r.word_string, f"{r.trace:.17g}", f"{r.length:.17g}", int(r.primitive)])
