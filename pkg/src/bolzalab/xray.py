"""X-ray transform of symmetric tensors over the geodesic census."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import hyperbolic as hyp
from . import tensors as tn
from .errors import QuadratureNotConverged, RankDeficientCensus

QUADRATURE_N = 128
PANEL_NODES = 32
GATE_TOL = 1e-8
KERNEL_GAP = 1e3


@lru_cache(maxsize=64)
def _gauss(n):
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=4096)
def orbit_nodes(rec, quadrature_n=QUADRATURE_N, shift=0.0):
    """Reduced phase points ``(z, theta)`` and weights along one period of ``rec``.

    Composite Gauss-Legendre with ``PANEL_NODES`` nodes per panel and about
    ``quadrature_n`` nodes per unit length.
    """
    n_panels = max(1, math.ceil(rec.length * quadrature_n / PANEL_NODES))
    x, wx = _gauss(PANEL_NODES)
    h = rec.length / n_panels
    left = np.arange(n_panels) * h
    t = (left[:, None] + 0.5 * h * (x[None, :] + 1.0)).ravel() + shift
    w = np.tile(0.5 * h * wx, n_panels)
    a, b = hyp.flow_arrays(rec.frame[0], rec.frame[1], t)
    a, b = hyp.reduce_frames(a, b)
    z, theta = hyp.phase_from_su(a, b)
    return z, theta, w


def orbit_integral(u, rec, quadrature_n=QUADRATURE_N, shift=0.0):
    """Integral of a FiberField over one period of the closed orbit."""
    z, theta, w = orbit_nodes(rec, quadrature_n, shift)
    return complex(np.sum(w * u(z, theta)))


def xray(f, rec, quadrature_n=QUADRATURE_N, shift=0.0):
    """I_m f over the closed geodesic ``rec``."""
    z, theta, w = orbit_nodes(rec, quadrature_n, shift)
    return float(np.sum(w * _pullback_values(f, z, theta)))


def _pullback_values(f, z, theta):
    c = f(z)
    ct, st = np.cos(theta), np.sin(theta)
    ww = tn.weights(f.m)
    return sum(ww[j] * c[j] * ct ** (f.m - j) * st**j for j in range(f.m + 1))


def _stacked_nodes(records, quadrature_n):
    zs, ts, ws, lens = [], [], [], []
    for r in records:
        z, t, w = orbit_nodes(r, quadrature_n)
        zs.append(z)
        ts.append(t)
        ws.append(w)
        lens.append(z.size)
    starts = np.concatenate([[0], np.cumsum(lens)[:-1]])
    return np.concatenate(zs), np.concatenate(ts), np.concatenate(ws), starts


def _columns(basis, records, quadrature_n):
    z, t, w, starts = _stacked_nodes(records, quadrature_n)
    cols, sups = [], []
    for f in basis:
        v = _pullback_values(f, z, t)
        cols.append(np.add.reduceat(w * v, starts))
        sups.append(np.abs(v).max())
    return np.stack(cols, axis=1), np.array(sups)


@dataclass
class XrayMatrix:
    """Entries ``I_m(f_j)(gamma_i)`` with row records and column labels."""

    rows: list
    cols: list
    entries: np.ndarray
    quadrature_n: int
    m: int
    gate_residual: float = 0.0
    noise: np.ndarray = field(default=None, repr=False)

    @property
    def lengths(self):
        return np.array([r.length for r in self.rows])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["word", "length"] + list(self.cols))
            for r, row in zip(self.rows, self.entries):
                w.writerow([r.word_string, f"{r.length:.17g}"] + [f"{x:.17g}" for x in row])


def assemble(basis, census, m, quadrature_n=QUADRATURE_N, gate=True, labels=None):
    """X-ray matrix of ``basis`` (tensors of degree ``m``) over ``census``.

    With ``gate`` the entries are recomputed at twice the density; a change
    above ``GATE_TOL * length * sup|pi_m^* f|`` raises QuadratureNotConverged.
    """
    if not len(census):
        raise ValueError("census is empty")
    for f in basis:
        if f.m != m:
            raise tn.DegreeError(f"basis tensor of degree {f.m}, expected {m}")
    records = list(census)
    X, sups = _columns(basis, records, quadrature_n)
    resid, noise = 0.0, None
    if gate:
        X2, _ = _columns(basis, records, 2 * quadrature_n)
        noise = X2 - X
        lengths = np.array([r.length for r in records])
        scale = lengths[:, None] * np.maximum(sups[None, :], 1e-300)
        resid = float(np.max(np.abs(noise) / scale))
        if resid > GATE_TOL:
            raise QuadratureNotConverged(f"doubling the quadrature changed entries by {resid:.3e} (relative)")
    if labels is None:
        labels = [f.label or f"f{j}" for j, f in enumerate(basis)]
    return XrayMatrix(records, list(labels), X, quadrature_n, m, resid, noise)


def default_basis(m, size=12, seed=0, radius=1.2):
    """Deterministic tensor bumps of degree ``m`` centred at Liouville samples in the octagon."""
    rng = np.random.default_rng([seed, m, size])
    z, _ = hyp.sample_liouville_arrays(size, rng)
    out = []
    for j, c in enumerate(z):
        t = tn.random_tensor_bump(rng, m, radius=radius, center=complex(c))
        t.label = f"b{m}_{j}"
        out.append(t)
    return out


def _orthonormalizer(samples, w, m):
    """Matrix ``Q`` with the columns ``samples @ Q`` L^2-orthonormal."""
    W = tn.weights(m)[:, None] * w[None, :]
    G = np.einsum("ajn,bjn,jn->ab", samples, samples, W)
    ev, U = np.linalg.eigh(G)
    return U / np.sqrt(np.maximum(ev, 1e-300))[None, :], ev


@dataclass
class InjectivityReport:
    m: int
    sigma_min: float
    sigma_max: float
    potential_sigma_max: float
    kernel_gap: float
    threshold: float
    rows: int
    dim: int
    singular_values: list
    potential_singular_values: list
    denominator: str

    @property
    def passed(self):
        return self.kernel_gap > self.threshold

    def to_json(self, **extra):
        d = dict(self.__dict__)
        d["passed"] = self.passed
        d.update(extra)
        return json.dumps(d, indent=2, sort_keys=True)


def injectivity_test(X, sol_coords, potential=None, threshold=KERNEL_GAP):
    """Singular values of the X-ray matrix on an L^2-orthonormal solenoidal subspace.

    ``X`` holds the columns of the raw basis; ``sol_coords`` (columns in the
    basis coordinates) span the solenoidal subspace and are orthonormal in
    L^2.  ``potential`` is an XrayMatrix of L^2-normalized potential tensors
    ``D h``, or None for functions (degree 0), in which case the quadrature
    noise of ``X`` on the same subspace serves as the denominator.
    """
    A = X.entries @ sol_coords
    if A.shape[0] < A.shape[1]:
        raise RankDeficientCensus(f"{A.shape[0]} geodesics for a {A.shape[1]}-dimensional subspace")
    s = np.linalg.svd(A, compute_uv=False)
    if potential is not None:
        ps = np.linalg.svd(potential.entries, compute_uv=False)
        denom, kind = float(ps.max()), "potential"
    else:
        ps = np.linalg.svd(X.noise @ sol_coords, compute_uv=False)
        denom, kind = float(ps.max()), "quadrature-noise"
    gap = float(s.min() / max(denom, 1e-300))
    return InjectivityReport(
        m=X.m,
        sigma_min=float(s.min()),
        sigma_max=float(s.max()),
        potential_sigma_max=denom,
        kernel_gap=gap,
        threshold=threshold,
        rows=A.shape[0],
        dim=A.shape[1],
        singular_values=[float(x) for x in s],
        potential_singular_values=[float(x) for x in ps],
        denominator=kind,
    )


def run_injectivity(m, census, basis_size=12, seed=0, threshold=KERNEL_GAP, quad=None):
    """Full injectivity experiment for degree ``m``.

    The basis bumps of degree m are projected off ``D`` of degree m-1 bumps;
    since ``I_m`` kills potentials, the X-ray of the projected tensors is the
    same linear combination of raw and potential columns.
    """
    quad = quad if quad is not None else hyp.octagon_quadrature()
    zq, wq = quad
    basis = default_basis(m, basis_size, seed)
    F = np.stack([f(zq) for f in basis])
    X = assemble(basis, census, m)
    if m == 0:
        Q, _ = _orthonormalizer(F, wq, m)
        return injectivity_test(X, Q, None, threshold), X
    pot = [tn.sym_derivative(h) for h in default_basis(m - 1, basis_size, seed + 1)]
    P = np.stack([d(zq) for d in pot])
    C = tn.potential_coefficients(F, P, wq, m)
    Fsol = F - np.einsum("ij,jkn->ikn", C, P)
    Xp = assemble(pot, census, m, labels=[f"D{h.label}" for h in pot])
    # X-ray of the projected tensors; the potential part contributes only quadrature noise
    Xsol = XrayMatrix(X.rows, X.cols, X.entries - Xp.entries @ C.T, X.quadrature_n, m, X.gate_residual, X.noise)
    Q, _ = _orthonormalizer(Fsol, wq, m)
    Qp, _ = _orthonormalizer(P, wq, m)
    Xpn = XrayMatrix(Xp.rows, Xp.cols, Xp.entries @ Qp, Xp.quadrature_n, m)
    return injectivity_test(Xsol, Q, Xpn, threshold), Xsol


def write_singular_values(report, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "index", "value"])
        for i, s in enumerate(report.singular_values):
            w.writerow(["solenoidal", i, f"{s:.17g}"])
        for i, s in enumerate(report.potential_singular_values):
            w.writerow([report.denominator, i, f"{s:.17g}"])
