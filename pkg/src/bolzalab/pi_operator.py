"""Monte-Carlo estimators for resolvents and for the operator Pi.

All estimators share one design.  Independent batches of Liouville-distributed
start points are flowed with the trajectory kernel at step ``dt``; along each
trajectory a window of start times is used, and the cross-correlation
``C(s) = <f o phi_s, psi>`` is formed for all lags at once by FFT.  Damped
time integrals of ``C`` are then cheap for every damping rate.  Batch results
are reduced in batch order with compensated summation, so values depend only
on the seed and the budget, never on the number of threads.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import fiber as fb
from . import hyperbolic as hyp
from . import kernels
from .errors import ExtrapolationUnstable, IllConditioned, VarianceBudget

LADDER = (0.4, 0.2, 0.1, 0.05)
RESIDUE_LADDER = (0.4, 0.2, 0.1)


@dataclass(frozen=True)
class Budget:
    """Sampling budget.

    ``n_samples`` counts trajectory start points (trajectories times window
    positions).  ``t_max`` caps the correlation horizon of Pi pairings;
    resolvent pairings use ``12 / lambda``.
    """

    n_samples: int = 1_000_000
    n_batches: int = 64
    window: int = 1200
    dt: float = 0.05
    t_max: float = 12.0
    threads: int = 1
    variance_fraction: float | None = None

    def __post_init__(self):
        if self.n_batches < 16:
            raise ValueError("at least 16 batches are required for the error estimate")
        if self.n_samples <= 0 or self.window <= 0 or self.dt <= 0 or self.t_max <= 0:
            raise ValueError("budget entries must be positive")

    @property
    def traj_per_batch(self):
        return max(1, math.ceil(self.n_samples / (self.n_batches * self.window)))

    @property
    def actual_samples(self):
        return self.traj_per_batch * self.n_batches * self.window


@dataclass
class PairingEstimate:
    value: complex
    stderr: float
    lam: float
    T: float
    n_samples: int
    seed: int
    details: dict = field(default_factory=dict, repr=False)

    def within(self, target=0.0, k=3.0):
        return abs(self.value - target) <= k * self.stderr

    def significant(self, k=3.0):
        return abs(self.value) > k * self.stderr

    def to_dict(self):
        d = asdict(self)
        d["value"] = [self.value.real, self.value.imag]
        return d


def _fsum_c(x, axis=0):
    """Compensated sum of a complex array along ``axis`` (axis moved to front)."""
    x = np.moveaxis(np.asarray(x, dtype=complex), axis, 0)
    flat = x.reshape(x.shape[0], -1)
    re = np.array([math.fsum(col) for col in flat.real.T])
    im = np.array([math.fsum(col) for col in flat.imag.T])
    return (re + 1j * im).reshape(x.shape[1:])


def batch_stats(per_batch):
    """Mean and standard error over the leading (batch) axis."""
    per_batch = np.asarray(per_batch, dtype=complex)
    B = per_batch.shape[0]
    mean = _fsum_c(per_batch) / B
    dev = np.abs(per_batch - mean) ** 2
    var = np.array([math.fsum(c) for c in dev.reshape(B, -1).T]).reshape(mean.shape) / (B - 1)
    return mean, np.sqrt(var / B)


# ---------------------------------------------------------------------------
# ensemble of trajectories


def _batch_seeds(seed, n):
    return np.random.SeedSequence(seed).spawn(n)


def _run_batches(fn, budget, seed):
    seeds = _batch_seeds(seed, budget.n_batches)
    if budget.threads > 1:
        with ThreadPoolExecutor(max_workers=budget.threads) as ex:
            return list(ex.map(fn, range(budget.n_batches), seeds))
    return [fn(b, s) for b, s in enumerate(seeds)]


def _trajectories(ss, n_traj, nsteps, dt):
    rng = np.random.default_rng(ss)
    z, theta = hyp.sample_liouville_arrays(n_traj, rng)
    a, b = hyp.su_from_phase(z, theta)
    return kernels.geodesic_trajectories(a, b, dt, nsteps)


def _cross_correlations(values, pairs, k_lo, k_hi, W, mean_zero):
    """``C[p, k - k_lo] = mean_{traj, t0} F_p[t0 + k] conj(Psi_p[t0])`` for ``k`` in ``[k_lo, k_hi]``."""
    if mean_zero:
        values = {key: v - _fsum_c(v.ravel()) / v.size for key, v in values.items()}
    n_traj, N = next(iter(values.values())).shape
    L = 1 << int(math.ceil(math.log2(N + W)))
    spec_full = {key: np.fft.fft(v, L, axis=1) for key, v in values.items()}
    spec_win = {}
    out = np.empty((len(pairs), k_hi - k_lo + 1), dtype=complex)
    for p, (i, j) in enumerate(pairs):
        if j not in spec_win:
            win = values[j][:, -k_lo : -k_lo + W]
            spec_win[j] = np.fft.fft(win, L, axis=1)
        r = np.fft.ifft(spec_full[i] * np.conj(spec_win[j]), axis=1)
        # r[:, q] = sum_t F[t + q] conj(Psi[-k_lo + t]); lag k = q + k_lo
        out[p] = r[:, : k_hi - k_lo + 1].sum(axis=0) / (n_traj * W)
    return out


def correlation_table(fields, pairs, budget=Budget(), seed=0, lag_range=None, mean_zero=True):
    """Per-batch correlation functions for ``pairs`` of indices into ``fields``.

    Returns ``(lags, C)`` with ``C`` of shape ``(n_batches, n_pairs, n_lags)``
    and ``lags`` in units of time.
    """
    dt = budget.dt
    if lag_range is None:
        K = int(round(budget.t_max / dt))
        lag_range = (-K, K)
    k_lo, k_hi = lag_range
    k_lo = min(k_lo, 0)
    k_hi = max(k_hi, 0)
    W = budget.window
    nsteps = W + (k_hi - k_lo) - 1
    used = sorted({i for p in pairs for i in p})

    def one(b, ss):
        z, theta = _trajectories(ss, budget.traj_per_batch, nsteps, dt)
        values = {i: np.asarray(fields[i](z, theta), dtype=complex) for i in used}
        return _cross_correlations(values, pairs, k_lo, k_hi, W, mean_zero)

    C = np.stack(_run_batches(one, budget, seed))
    lags = np.arange(k_lo, k_hi + 1) * dt
    return lags, C


def _damped_weights(lags, lam, T, dt, side):
    """Trapezoid weights of ``e^{-lam |s|}`` on ``[-T, T]`` (side 0), ``[0, T]`` (+1) or ``[-T, 0]`` (-1)."""
    s = lags
    if side > 0:
        inside = (s >= -1e-12) & (s <= T + 1e-12)
    elif side < 0:
        inside = (s <= 1e-12) & (s >= -T - 1e-12)
    else:
        inside = np.abs(s) <= T + 1e-12
    w = np.where(inside, dt * np.exp(-lam * np.abs(s)), 0.0)
    idx = np.flatnonzero(inside)
    if idx.size:
        w[idx[0]] *= 0.5
        w[idx[-1]] *= 0.5
    return w


def _check_budget(est, budget):
    f = budget.variance_fraction
    if f is not None and est.stderr > f * abs(est.value):
        raise VarianceBudget(f"stderr {est.stderr:.3e} exceeds {f} of |value| {abs(est.value):.3e}")
    return est


# ---------------------------------------------------------------------------
# resolvents and correlations


def correlation(u, v, t, budget=Budget(), seed=0):
    """Connected correlation ``int u(phi_t y) conj(v(y)) dmu - int u dmu int conj(v) dmu``."""
    n = max(1, budget.n_samples // budget.n_batches)

    def one(b, ss):
        rng = np.random.default_rng(ss)
        z, theta = hyp.sample_liouville_arrays(n, rng)
        a, bb = hyp.su_from_phase(z, theta)
        a, bb = hyp.reduce_frames(*hyp.flow_arrays(a, bb, t))
        zt, tt = hyp.phase_from_su(a, bb)
        U = np.asarray(u(zt, tt), dtype=complex)
        V = np.conj(np.asarray(v(z, theta), dtype=complex))
        return _fsum_c(U * V) / n - (_fsum_c(U) / n) * (_fsum_c(V) / n)

    per = np.array(_run_batches(one, budget, seed))
    mean, se = batch_stats(per)
    return PairingEstimate(complex(mean), float(se), 0.0, float(t), n * budget.n_batches, seed)


def correlation_decay(u, v, ts=(1.0, 2.0, 4.0, 8.0), budget=Budget(), seed=0):
    """Connected correlations at several times with a log-linear decay fit."""
    ests = [correlation(u, v, t, budget, seed) for t in ts]
    mags = np.array([abs(e.value) for e in ests])
    ok = mags > 0
    rate = float("nan")
    if ok.sum() >= 2:
        rate = float(-np.polyfit(np.asarray(ts)[ok], np.log(mags[ok]), 1)[0])
    return {"t": list(ts), "estimates": ests, "decay_rate": rate}


def resolvent_pairing(f, psi, lam, sign=+1, budget=Budget(), seed=0):
    """``<R_+(lam) f, psi>`` (sign +1) or ``<R_-(lam) f, psi>`` (sign -1).

    ``R_+(lam) f = int_0^inf e^{-lam t} f o phi_t dt`` and
    ``R_-(lam) f = -int_0^inf e^{-lam t} f o phi_{-t} dt``; no mean is removed.
    """
    return resolvent_ladder(f, psi, (lam,), sign, budget, seed)[0]


def resolvent_ladder(f, psi, ladder, sign=+1, budget=Budget(), seed=0):
    """Resolvent pairings for several rates from one correlation estimate (horizon ``12 / min(ladder)``)."""
    if min(ladder) <= 0:
        raise ValueError("damping rates must be positive")
    dt = budget.dt
    K = int(math.ceil(12.0 / min(ladder) / dt))
    lag_range = (0, K) if sign > 0 else (-K, 0)
    lags, C = correlation_table([f, psi], [(0, 1)], budget, seed, lag_range, mean_zero=False)
    sup = fb.sup_norm(f) * fb.sup_norm(psi)
    out = []
    for lam in ladder:
        T = 12.0 / lam
        w = _damped_weights(lags, lam, T, dt, 1 if sign > 0 else -1)
        per = (C[:, 0, :] @ w) * (1 if sign > 0 else -1)
        mean, se = batch_stats(per)
        trunc = math.exp(-lam * T) / lam * sup
        est = PairingEstimate(
            complex(mean),
            float(math.hypot(se, trunc)),
            lam,
            T,
            budget.actual_samples,
            seed,
            {"batch_stderr": float(se), "truncation_bound": trunc, "per_batch": per},
        )
        out.append(_check_budget(est, budget))
    return out


def extrapolation_weights(ladder):
    """Lagrange weights evaluating at 0 the polynomial through ``(ladder[i], value_i)``."""
    x = np.asarray(ladder, dtype=float)
    w = np.ones(x.size)
    for i in range(x.size):
        for j in range(x.size):
            if i != j:
                w[i] *= x[j] / (x[j] - x[i])
    return w


def mixing_residue(u, v, ladder=RESIDUE_LADDER, budget=Budget(), seed=0, reference=None):
    """``lam <R_+(lam) u, v>`` along the ladder against ``<u,1><v,1>``.

    The reference means come from the deterministic SM quadrature unless
    given.  The gated value is the polynomial extrapolation to ``lam = 0``
    through all ladder points; the raw ladder values carry a bias of order
    ``lam <R_0 u, v>`` and are reported for the approach check.
    """
    if reference is None:
        one = fb.constant(1.0)
        reference = fb.l2_inner(u, one) * fb.l2_inner(one, v)
    ests = resolvent_ladder(u, v, ladder, +1, budget, seed)
    per = np.stack([e.lam * e.details["per_batch"] for e in ests], axis=1)
    vals, ses = batch_stats(per)
    ext, ext_se = batch_stats(per @ extrapolation_weights(ladder))
    dev = np.abs(vals - reference)
    # approach: deviations shrink along the ladder within error bars
    monotone = all(dev[i + 1] <= dev[i] + 3.0 * math.hypot(ses[i], ses[i + 1]) for i in range(len(dev) - 1))
    trunc = max(e.details["truncation_bound"] * e.lam for e in ests)
    final_sigma = float(math.hypot(ext_se, trunc))
    return {
        "ladder": list(ladder),
        "values": [complex(x) for x in vals],
        "stderr": [float(x) for x in ses],
        "reference": complex(reference),
        "extrapolated": complex(ext),
        "extrapolated_stderr": final_sigma,
        "final_within_3sigma": bool(abs(ext - reference) <= 3.0 * final_sigma),
        "last_point_deviation": float(dev[-1]),
        "last_point_sigmas": float(dev[-1] / ses[-1]),
        "monotone": bool(monotone),
        "n_samples": budget.actual_samples,
        "seed": seed,
    }


# ---------------------------------------------------------------------------
# Pi


def _ladder_values(C, lags, ladder, budget):
    """Per-batch two-sided damped integrals, shape ``(B, n_pairs, n_ladder)``."""
    out = []
    for lam in ladder:
        T = min(budget.t_max, 12.0 / lam)
        out.append(C @ _damped_weights(lags, lam, T, budget.dt, 0))
    return np.stack(out, axis=-1)


def _extrapolate(P, ladder, budget, seed, labels=None):
    """Richardson extrapolation per pair; ``P`` has shape ``(B, n_pairs, n_ladder)``."""
    B, n_pairs, _ = P.shape
    rich_b = 2.0 * P[..., -1] - P[..., -2]
    rich, se = batch_stats(rich_b)
    prev = 2.0 * P[..., -2] - P[..., -3] if len(ladder) >= 3 else P[..., -1]
    spread = np.abs(rich - _fsum_c(prev) / B)
    means, ses = batch_stats(P)
    diffs = np.diff(P, axis=-1)
    dmean, dse = batch_stats(diffs)
    ests = []
    for p in range(n_pairs):
        up = np.any(dmean[p].real > 3 * dse[p]) or np.any(dmean[p].imag > 3 * dse[p])
        down = np.any(dmean[p].real < -3 * dse[p]) or np.any(dmean[p].imag < -3 * dse[p])
        if up and down:
            raise ExtrapolationUnstable(f"ladder values for pair {p} are not monotone: {means[p]}")
        est = PairingEstimate(
            complex(rich[p]),
            float(math.hypot(se[p], spread[p])),
            0.0,
            min(budget.t_max, 12.0 / min(ladder)),
            budget.actual_samples,
            seed,
            {
                "ladder": list(ladder),
                "ladder_values": [complex(x) for x in means[p]],
                "ladder_stderr": [float(x) for x in ses[p]],
                "batch_stderr": float(se[p]),
                "extrapolation_spread": float(spread[p]),
                "per_batch": rich_b[:, p],
            },
        )
        ests.append(_check_budget(est, budget))
    return ests


def pi_pairings(fields, pairs, ladder=LADDER, budget=Budget(), seed=0):
    """``<Pi f_i, f_j>`` for index pairs ``(i, j)``, all from one trajectory ensemble.

    Fields are made mean-zero by subtracting the per-batch Monte-Carlo mean.
    """
    lags, C = correlation_table(fields, pairs, budget, seed, mean_zero=True)
    P = _ladder_values(C, lags, ladder, budget)
    return _extrapolate(P, ladder, budget, seed)


def pi_pairing(f, psi, ladder=LADDER, budget=Budget(), seed=0):
    """``<Pi f, psi>`` as the extrapolated two-sided damped correlation integral."""
    return pi_pairings([f, psi], [(0, 1)], ladder, budget, seed)[0]


def x_invariance_check(f, psi, ladder=LADDER, budget=Budget(), seed=0):
    """Weak form of ``X Pi f = 0``: the estimate of ``<Pi f, X psi>``."""
    return pi_pairing(f, fb.derive(psi, "X"), ladder, budget, seed)


def combine(ests, coeffs, seed=None):
    """Linear combination of pairing estimates computed on the same ensemble."""
    per = sum(c * e.details["per_batch"] for c, e in zip(coeffs, ests))
    mean, se = batch_stats(per)
    spread = math.sqrt(sum((abs(c) * e.details["extrapolation_spread"]) ** 2 for c, e in zip(coeffs, ests)))
    e0 = ests[0]
    return PairingEstimate(
        complex(mean), float(math.hypot(se, spread)), 0.0, e0.T, e0.n_samples, e0.seed if seed is None else seed,
        {"per_batch": per, "extrapolation_spread": spread},
    )


@dataclass
class NormalOperatorMatrix:
    basis: list
    m: int
    entries: list
    values: np.ndarray
    stderr: np.ndarray

    @property
    def symmetrized(self):
        return 0.5 * (self.values + self.values.T.conj())

    def symmetry_violations(self, k=3.0):
        d = np.abs(self.values - self.values.T.conj())
        return int(np.sum(d > k * (self.stderr + self.stderr.T)))

    def noise_floor(self):
        return float(np.max(self.stderr))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.symmetrized).min())

    def positivity_ok(self, k=3.0):
        return self.min_eigenvalue() >= -k * self.noise_floor()

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "value_re", "value_im", "stderr"])
            n = len(self.basis)
            for i in range(n):
                for j in range(n):
                    v = self.values[i, j]
                    w.writerow([i, j, f"{v.real:.17g}", f"{v.imag:.17g}", f"{self.stderr[i, j]:.17g}"])


def normal_matrix(basis, m=0, labels=None, ladder=LADDER, budget=Budget(), seed=0):
    """``G[i, j] = <Pi pi_m^* psi_j, pi_m^* psi_i>`` for tensors ``psi`` of degree ``m``.

    Plain FiberFields are accepted as already pulled back.
    """
    from . import tensors as tn

    fields = [tn.pi_star_up(b) if isinstance(b, tn.SymmetricTensor) else b for b in basis]
    n = len(fields)
    pairs = [(j, i) for i in range(n) for j in range(n)]
    ests = pi_pairings(fields, pairs, ladder, budget, seed)
    vals = np.array([e.value for e in ests]).reshape(n, n)
    errs = np.array([e.stderr for e in ests]).reshape(n, n)
    if labels is None:
        labels = [getattr(b, "label", f"psi{i}") for i, b in enumerate(basis)]
    return NormalOperatorMatrix(list(labels), m, ests, vals, errs)


# ---------------------------------------------------------------------------
# probes


def oscillatory_probe(center, xi, radius=1.2, direction=0.0):
    """``bump * cos(xi . x)`` in geodesic normal coordinates ``x`` at ``center``."""
    e = np.exp(1j * direction)

    def spatial(w):
        r = np.abs(w)
        rho = 2.0 * np.arctanh(np.minimum(r, 1.0 - 1e-16))
        x = np.where(r > 0, w / np.where(r > 0, r, 1.0), 0.0) * rho
        return np.cos(xi * np.real(x * np.conj(e)))

    return fb.FiberBump(center, radius, {0: 1.0}, spatial=spatial, label=f"osc{xi:g}")


def symbol_probe(xi_mags=(4.0, 8.0, 16.0), center=0.0, radius=1.2, directions=(0.0,), ladder=LADDER,
                 budget=Budget(), seed=0):
    """Frequency scaling of ``<Pi_0 u_xi, u_xi>``; returns the log-log slope."""
    fields = [oscillatory_probe(center, xi, radius, d) for xi in xi_mags for d in directions]
    pairs = [(i, i) for i in range(len(fields))]
    ests = pi_pairings(fields, pairs, ladder, budget, seed)
    nd = len(directions)
    vals, errs = [], []
    for q in range(len(xi_mags)):
        group = ests[q * nd : (q + 1) * nd]
        c = combine(group, [1.0 / nd] * nd)
        vals.append(c.value.real)
        errs.append(c.stderr)
    vals = np.array(vals)
    errs = np.array(errs)
    if np.any(vals <= 3.0 * errs):
        raise VarianceBudget(f"probe pairings not resolved above noise: {vals} +- {errs}")
    x = np.log(np.asarray(xi_mags, dtype=float))
    y = np.log(vals)
    wts = vals / errs  # 1 / stderr of log(value)
    A = np.stack([x, np.ones_like(x)], axis=1) * wts[:, None]
    coef, *_ = np.linalg.lstsq(A, y * wts, rcond=None)
    cov = np.linalg.inv(A.T @ A)
    return {
        "xi": list(map(float, xi_mags)),
        "values": vals.tolist(),
        "stderr": errs.tolist(),
        "slope": float(coef[0]),
        "slope_stderr": float(math.sqrt(cov[0, 0])),
        "intercept": float(coef[1]),
        "ratios": (vals[1:] / vals[:-1]).tolist(),
        "n_samples": budget.actual_samples,
        "seed": seed,
    }


def scalar_bumps(centers, radius):
    return [fb.FiberBump(c, radius, {0: 1.0}, label=f"s{i}") for i, c in enumerate(centers)]


def octagon_grid(n_rings=2, per_ring=8, scale=None):
    """Centres on concentric rings inside the octagon (plus the origin)."""
    scale = scale or hyp.DISK_INRADIUS
    pts = [0j]
    for r in range(1, n_rings + 1):
        rad = scale * r / (n_rings + 0.5)
        off = 0.5 * (r % 2) * 2 * np.pi / per_ring
        pts += [rad * np.exp(1j * (off + 2 * np.pi * k / per_ring)) for k in range(per_ring)]
    return np.array(pts)


def _m_inner(f, g, quad=None):
    """Area-normalized L^2(M) pairing of fiber-constant fields."""
    z, w = quad if quad is not None else hyp.octagon_quadrature()
    return complex(np.sum(w * f(z, np.zeros(z.shape)) * np.conj(g(z, np.zeros(z.shape)))) / hyp.AREA)


def prescribed_pushforward(f, basis, heldout, reg=1e-6, ladder=LADDER, budget=Budget(), seed=0, max_cond=1e12):
    """Find ``w = Pi pi_0^* (sum_j c_j psi_j)`` with ``pi_0* w = f`` tested on held-out functions.

    ``f``, ``basis`` and ``heldout`` are fiber-constant FiberFields.  The
    normal system is symmetrized and Tikhonov-regularized with ``reg`` times
    its largest eigenvalue.
    """
    nb, nh = len(basis), len(heldout)
    xh = [fb.derive(h, "X") for h in heldout]
    fields = list(basis) + list(heldout) + xh
    pairs = [(j, i) for i in range(nb) for j in range(nb)]
    pairs += [(j, nb + h) for h in range(nh) for j in range(nb)]
    pairs += [(j, nb + nh + h) for h in range(nh) for j in range(nb)]
    ests = pi_pairings(fields, pairs, ladder, budget, seed)
    G = np.array([e.value for e in ests[: nb * nb]]).reshape(nb, nb)
    Gs = 0.5 * (G + G.conj().T).real
    ev = np.linalg.eigvalsh(Gs)
    cond = abs(ev[-1]) / max(abs(ev[0]), 1e-300)
    rhs = np.array([_m_inner(f, b).real for b in basis])
    lam_max = max(abs(ev[-1]), 1e-300)
    if cond > max_cond and reg == 0:
        raise IllConditioned(f"normal matrix condition {cond:.3e}", cond)
    c = np.linalg.solve(Gs + reg * lam_max * np.eye(nb), rhs)
    held = ests[nb * nb : nb * nb + nb * nh]
    inv = ests[nb * nb + nb * nh :]
    pred = [combine(held[h * nb : (h + 1) * nb], c) for h in range(nh)]
    invariance = [combine(inv[h * nb : (h + 1) * nb], c) for h in range(nh)]
    truth = np.array([_m_inner(f, h).real for h in heldout])
    pv = np.array([p.value.real for p in pred])
    rel = float(np.linalg.norm(pv - truth) / max(np.linalg.norm(truth), 1e-300))
    return {
        "coefficients": c.tolist(),
        "condition_number": float(cond),
        "regularization": reg,
        "heldout_truth": truth.tolist(),
        "heldout_predicted": pv.tolist(),
        "heldout_stderr": [p.stderr for p in pred],
        "relative_error": rel,
        "invariance": [i.value.real for i in invariance],
        "invariance_stderr": [i.stderr for i in invariance],
        "invariance_ok": bool(all(i.within(0.0) for i in invariance)),
        "n_samples": budget.actual_samples,
        "seed": seed,
    }


def livsic_check(f, census, probes, fit_basis, u_true=None, ladder=LADDER, budget=Budget(), seed=0, quad=None):
    """Coboundary diagnostics for ``f``: orbit integrals, Pi pairings and a least-squares ``Xu = f`` fit."""
    from . import xray

    orbit = np.array([abs(xray.orbit_integral(f, r)) for r in census])
    lengths = np.array([r.length for r in census])
    fields = [f] + list(probes)
    pis = pi_pairings(fields, [(0, i + 1) for i in range(len(probes))], ladder, budget, seed)
    z, theta, w = (quad or fb.sm_quadrature())
    F = np.asarray(f(z, theta))
    A = np.stack([np.asarray(fb.derive(v, "X")(z, theta)) for v in fit_basis], axis=1)
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(A * sw[:, None], F * sw, rcond=None)
    fit_resid = float(np.linalg.norm((A @ coef - F) * sw) / max(np.linalg.norm(F * sw), 1e-300))
    out = {
        "orbit_integrals": orbit.tolist(),
        "orbit_relative": (orbit / lengths).tolist(),
        "pi_values": [p.value.real for p in pis],
        "pi_stderr": [p.stderr for p in pis],
        "pi_ok": bool(all(p.within(0.0) for p in pis)),
        "fit_residual": fit_resid,
        "coefficients": [complex(x) for x in coef],
    }
    if u_true is not None:
        U = np.asarray(u_true(z, theta))
        V = np.stack([np.asarray(v(z, theta)) for v in fit_basis], axis=1) @ coef
        # compare modulo constants: remove the weighted means
        du = U - np.sum(w * U) / np.sum(w)
        dv = V - np.sum(w * V) / np.sum(w)
        out["u_relative_error"] = float(np.linalg.norm((dv - du) * sw) / max(np.linalg.norm(du * sw), 1e-300))
    return out


def to_json(obj, path=None):
    def conv(x):
        if isinstance(x, complex):
            return [x.real, x.imag]
        if isinstance(x, np.ndarray):
            return conv(x.tolist())
        if isinstance(x, (list, tuple)):
            return [conv(y) for y in x]
        if isinstance(x, dict):
            return {k: conv(v) for k, v in x.items() if k != "per_batch"}
        if isinstance(x, PairingEstimate):
            return conv({k: v for k, v in x.to_dict().items()})
        if isinstance(x, (np.floating, np.integer)):
            return x.item()
        return x

    s = json.dumps(conv(obj), indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(s)
    return s
