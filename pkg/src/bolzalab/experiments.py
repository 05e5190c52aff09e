"""Experiment drivers shared by the CLI and the acceptance suite.

Each ``run_*`` function takes a :class:`RunConfig`-like object, does one
self-contained experiment and returns an :class:`Outcome` whose ``metrics``
hold the scalar verdict inputs and whose ``tables`` hold the tabular
artifacts (lists of rows, header first).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import census as cen
from . import fiber as fb
from . import hyperbolic as hyp
from . import pi_operator as po
from . import tensors as tn
from . import xray as xr


@dataclass
class Outcome:
    name: str
    passed: bool
    metrics: dict
    checks: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)


def _budget(cfg):
    return po.Budget(n_samples=cfg.n_samples, t_max=cfg.t_max, threads=cfg.threads)


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, complex):
        return f"{x.real:.17g}"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def table(header, rows):
    return [list(header)] + [[_fmt(v) for v in r] for r in rows]


def _verdict(name, checks, metrics, tables=None):
    return Outcome(name, all(bool(v) for v in checks.values()), metrics, {k: bool(v) for k, v in checks.items()},
                   tables or {})


# ---------------------------------------------------------------------------
# geometry and census


def run_geometry(cfg):
    rng = np.random.default_rng(cfg.seed)
    z, th = hyp.sample_liouville_arrays(256, rng)
    a, b = hyp.su_from_phase(z, th)
    t, s = rng.uniform(-3, 3, 256), rng.uniform(-3, 3, 256)
    group = 0.0
    inverse = 0.0
    for which in ("geodesic", "perpendicular", "rotation"):
        a1, b1 = hyp.flow_arrays(*hyp.flow_arrays(a, b, t, which), s, which)
        a2, b2 = hyp.flow_arrays(a, b, t + s, which)
        group = max(group, float(np.max(np.abs(a1 - a2) + np.abs(b1 - b2))))
        a3, b3 = hyp.flow_arrays(*hyp.flow_arrays(a, b, t, which), -t, which)
        inverse = max(inverse, float(np.max(np.abs(a3 - a) + np.abs(b3 - b))))
    relation = hyp.relation_residual()
    zq, wq = hyp.octagon_quadrature()
    area = float(np.sum(wq))
    metrics = {
        "group_law_residual": group,
        "inverse_residual": inverse,
        "relation_residual": relation,
        "area": area,
        "area_polar": hyp.octagon_area_polar(),
        "area_error": abs(area - 4.0 * math.pi),
    }
    checks = {
        "group_law": group < 1e-12,
        "inverse": inverse < 1e-12,
        "relation": relation < 1e-9,
        "area": abs(area - 4.0 * math.pi) < 1e-6,
    }
    return _verdict("geometry", checks, metrics)


def run_census(cfg, census=None):
    census = census if census is not None else cen.enumerate(L=cfg.census_L)
    closure = [r.closure_residual() for r in census]
    systole = min((r.length for r in census), default=float("nan"))
    exact = 2.0 * math.acosh(1.0 + math.sqrt(2.0))
    mult = sum(1 for r in census if abs(r.length - systole) < 1e-9)
    metrics = {
        "L": cfg.census_L,
        "classes": len(census),
        "primitive": sum(r.primitive for r in census),
        "systole": systole,
        "systole_error": abs(systole - exact),
        "systole_multiplicity": mult,
        "max_closure_residual": max(closure, default=0.0),
        "flags": list(census.flags),
    }
    checks = {"systole": abs(systole - exact) < 1e-6, "closure": metrics["max_closure_residual"] < 1e-8,
              "no_flags": not census.flags}
    rows = [(r.word_string, r.trace, r.length, r.primitive, c) for r, c in zip(census, closure)]
    return _verdict("census", checks, metrics,
                    {"census": table(["word", "trace", "length", "primitive", "closure_residual"], rows)})


# ---------------------------------------------------------------------------
# fiber and tensor calculus


def run_fiber(cfg, n_fields=10, n_points=200):
    K = cfg.K
    rng = np.random.default_rng([cfg.seed, 3])
    probe = fb.probe_set()
    comm, struct = [], []
    for _ in range(n_fields):
        u = fb.random_field(rng, K=K)
        z, th = hyp.sample_liouville_arrays(n_points, rng)
        norm = fb.c_norm(u, probe=(z, th))
        # the commutation identity is [X, V] = X_perp; the two others are structure equations
        comm.append(float(np.max(np.abs(fb.commutator_residual(u, z, th, "XV")))) / norm)
        struct.append(max(float(np.max(np.abs(fb.commutator_residual(u, z, th, w)))) for w in ("XperpV", "XXperp")))
    # eta_+ raises modes: a field with modes in [-K, K] maps into [-K+1, K+1]
    u = fb.random_field(rng, K=4)
    zq = probe[0][:200]
    off = 0.0
    for sign in (+1, -1):
        ks, spec = fb.eta_pm(u, sign).full_spectrum(zq, n=64)
        allowed = (ks >= -4 + sign) & (ks <= 4 + sign)
        power = np.abs(spec) ** 2
        off = max(off, float(power[:, ~allowed].sum() / max(power.sum(), 1e-300)))
    metrics = {"commutation_relative": max(comm), "structure_residual": max(struct), "eta_off_support_mass": off}
    checks = {"commutation": max(comm) < 1e-4, "structure": max(struct) < 1e-4, "eta": off < 1e-5}
    return _verdict("fiber", checks, metrics)


def run_tensors(cfg, n_fields=3, n_points=300, n_mc=100_000):
    rng = np.random.default_rng([cfg.seed, 4])
    zq, wq = hyp.octagon_quadrature(32)
    g = tn.metric()
    dg = float(np.max(np.abs(tn.sym_derivative(g)(zq))))
    dsg = float(np.max(np.abs(tn.divergence(g)(zq))))
    split = 0.0
    adj_sig = 0.0
    adj_rows = []
    for m in (1, 2, 3):
        for q in range(n_fields):
            f = tn.random_tensor_bump(rng, m)
            z, th = hyp.sample_liouville_arrays(n_points, rng)
            split = max(split, float(np.max(np.abs(tn.splitting_residual(f, z, th)))))
            # <D h, f> - <h, D^* f> sampled on the same uniform points
            h = tn.random_tensor_bump(rng, m - 1)
            zs, _ = hyp.sample_liouville_arrays(n_mc, rng)
            lhs = np.sum(tn.weights(m)[:, None] * tn.sym_derivative(h)(zs) * f(zs), axis=0)
            rhs = np.sum(tn.weights(m - 1)[:, None] * h(zs) * tn.divergence(f)(zs), axis=0)
            x = hyp.AREA * (lhs - rhs)
            mean, se = float(x.mean()), float(x.std() / math.sqrt(n_mc))
            adj_sig = max(adj_sig, abs(mean) / max(se, 1e-300))
            adj_rows.append((m, q, mean, se))
    metrics = {"D_metric": dg, "Dstar_metric": dsg, "splitting_residual": split, "adjoint_max_sigmas": adj_sig}
    checks = {"D_metric": dg < 1e-6, "Dstar_metric": dsg < 1e-6, "splitting": split < 1e-4, "adjoint": adj_sig <= 3.0}
    return _verdict("tensors", checks, metrics,
                    {"adjointness": table(["m", "field", "difference", "stderr"], adj_rows)})


# ---------------------------------------------------------------------------
# X-ray transform


def run_xray(cfg, census=None, n_fields=5, degrees=(1, 2, 3)):
    census = census if census is not None else cen.enumerate(L=cfg.census_L)
    rng = np.random.default_rng([cfg.seed, 5])
    lengths = np.array([r.length for r in census])
    worst = 0.0
    rows = []
    for m in degrees:
        hs = [tn.random_tensor_bump(rng, m - 1) for _ in range(n_fields)]
        for q, h in enumerate(hs):
            h.label = f"h{m - 1}_{q}"
        X = xr.assemble([tn.sym_derivative(h) for h in hs], census, m, labels=[f"D{h.label}" for h in hs])
        norms = np.array([tn.c1_norm(h) for h in hs])
        rel = np.abs(X.entries) / (lengths[:, None] * norms[None, :])
        worst = max(worst, float(rel.max()))
        for q in range(n_fields):
            rows.append((m, hs[q].label, norms[q], float(np.abs(X.entries[:, q]).max()), float(rel[:, q].max())))
    metrics = {"max_relative": worst, "geodesics": len(census)}
    checks = {"kernel_containment": worst < 1e-6}
    return _verdict("xray", checks, metrics,
                    {"potential_xray": table(["m", "field", "c1_norm", "max_abs", "max_relative"], rows)})


def run_injectivity(cfg, census=None, degrees=None):
    census = census if census is not None else cen.enumerate(L=cfg.census_L)
    degrees = degrees if degrees is not None else (cfg.m,)
    metrics, checks, tables = {}, {}, {}
    for m in degrees:
        rep, X = xr.run_injectivity(m, census, basis_size=cfg.basis_size, seed=cfg.seed)
        metrics[f"m{m}"] = {k: getattr(rep, k) for k in ("sigma_min", "sigma_max", "potential_sigma_max",
                                                          "kernel_gap", "rows", "dim", "denominator")}
        checks[f"m{m}"] = rep.passed
        rows = [("solenoidal", i, s) for i, s in enumerate(rep.singular_values)]
        rows += [(rep.denominator, i, s) for i, s in enumerate(rep.potential_singular_values)]
        tables[f"singular_values_m{m}"] = table(["kind", "index", "value"], rows)
        tables[f"xray_m{m}"] = [["word", "length"] + list(X.cols)] + [
            [r.word_string, _fmt(r.length)] + [_fmt(x) for x in row] for r, row in zip(X.rows, X.entries)
        ]
    return _verdict("injectivity", checks, metrics, tables)




# ---------------------------------------------------------------------------
# correlations and Pi


def run_mixing(cfg, n_pairs=3):
    rng = np.random.default_rng([cfg.seed, 7])
    budget = _budget(cfg)
    ladder = tuple(cfg.lambda_ladder[:3]) if len(cfg.lambda_ladder) >= 3 else po.RESIDUE_LADDER
    rows, checks, metrics = [], {}, {}
    for p in range(n_pairs):
        u = fb.random_bump(rng, 1, radius=(1.2, 1.4))
        v = fb.random_bump(rng, 1, radius=(1.2, 1.4))
        r = po.mixing_residue(u, v, ladder, budget, seed=cfg.seed + p)
        sig = abs(r["extrapolated"] - r["reference"]) / r["extrapolated_stderr"]
        checks[f"pair{p}"] = r["final_within_3sigma"]
        metrics[f"pair{p}"] = {
            "reference": r["reference"].real,
            "extrapolated": r["extrapolated"].real,
            "extrapolated_stderr": r["extrapolated_stderr"],
            "sigmas": sig,
            "monotone": r["monotone"],
        }
        for lam, val, se in zip(r["ladder"], r["values"], r["stderr"]):
            rows.append((p, lam, val.real, se, r["reference"].real))
        rows.append((p, 0.0, r["extrapolated"].real, r["extrapolated_stderr"], r["reference"].real))
    metrics["n_samples"] = budget.actual_samples
    return _verdict("mixing", checks, metrics,
                    {"mixing": table(["pair", "lambda", "lambda_resolvent", "stderr", "reference"], rows)})


def _pi_fields(cfg, n):
    rng = np.random.default_rng([cfg.seed, 8])
    fs = [fb.random_bump(rng, 2) for _ in range(n)]
    ps = [fb.random_bump(rng, 2) for _ in range(n)]
    us = [fb.random_bump(rng, 2) for _ in range(n)]
    return fs, ps, us


def run_pi_check(cfg, n_pairs=20, n_cob=3):
    budget = _budget(cfg)
    ladder = tuple(cfg.lambda_ladder)
    n = n_pairs
    fs, ps, us = _pi_fields(cfg, n)
    tube = fb.GeodesicTube(hyp.GEN_ALPHA[0], hyp.GEN_BETA[0])
    fields = fs + ps + [fb.derive(p, "X") for p in ps] + [fb.derive(u, "X") for u in us] + [tube]
    t = 4 * n
    pairs = [(i, n + i) for i in range(n)]  # <Pi f, psi>
    pairs += [(i, 2 * n + i) for i in range(n)]  # <Pi f, X psi>
    pairs += [(3 * n + i, n + i) for i in range(n)]  # <Pi X u, psi>
    pairs += [(3 * n + i, t) for i in range(n_cob)]  # coboundary against the tube
    pairs += [(t, t)]  # tube detector
    E = po.pi_pairings(fields, pairs, ladder, budget, cfg.seed)
    # the transposed pairings come from an independent ensemble
    E2 = po.pi_pairings(ps + fs, [(i, n + i) for i in range(n)], ladder, budget, cfg.seed + 1)

    sym = [abs(E[i].value - np.conj(E2[i].value)) / math.hypot(E[i].stderr, E2[i].stderr) for i in range(n)]
    xpi = [abs(E[n + i].value) / E[n + i].stderr for i in range(n)]
    pix = [abs(E[2 * n + i].value) / E[2 * n + i].stderr for i in range(n)]
    cob = [abs(E[3 * n + i].value) / E[3 * n + i].stderr for i in range(n_cob)]
    det = E[-1]
    rows = []
    for kind, off, count in (("pi", 0, n), ("x_pi", n, n), ("pi_x", 2 * n, n), ("coboundary_tube", 3 * n, n_cob)):
        for i in range(count):
            e = E[off + i]
            rows.append((kind, i, e.value.real, e.value.imag, e.stderr))
    for i in range(n):
        rows.append(("pi_transposed", i, E2[i].value.real, E2[i].value.imag, E2[i].stderr))
    rows.append(("tube_detector", 0, det.value.real, det.value.imag, det.stderr))
    metrics = {
        "symmetry_max_sigmas": max(sym),
        "x_pi_max_sigmas": max(xpi),
        "pi_x_max_sigmas": max(pix),
        "coboundary_max_sigmas": max(cob),
        "detector_value": det.value.real,
        "detector_stderr": det.stderr,
        "detector_sigmas": abs(det.value) / det.stderr,
        "n_samples": budget.actual_samples,
    }
    checks = {
        "symmetry": max(sym) <= 3.0,
        "x_pi": max(xpi) <= 3.0,
        "pi_x": max(pix) <= 3.0,
        "coboundary": max(cob) <= 3.0,
        "detector": det.significant(3.0),
    }
    return _verdict("pi-check", checks, metrics,
                    {"pairings": table(["kind", "index", "value_re", "value_im", "stderr"], rows)})


def run_symbol(cfg):
    budget = _budget(cfg)
    r = po.symbol_probe(ladder=tuple(cfg.lambda_ladder), budget=budget, seed=cfg.seed)
    metrics = {k: r[k] for k in ("xi", "values", "stderr", "slope", "slope_stderr", "ratios")}
    checks = {"slope": abs(r["slope"] + 1.0) <= 0.15}
    rows = list(zip(r["xi"], r["values"], r["stderr"]))
    return _verdict("symbol", checks, metrics, {"symbol": table(["xi", "pairing", "stderr"], rows)})


def run_pushforward(cfg, n_heldout=8):
    budget = _budget(cfg)
    basis = po.scalar_bumps(po.octagon_grid(2, 8), 0.9)
    rng = np.random.default_rng([cfg.seed, 10])
    hc = np.concatenate([r * np.exp(2j * np.pi * rng.random(n_heldout // 2)) for r in (0.3, 0.55)])
    held = po.scalar_bumps(hc, 0.9)
    f = fb.FiberBump(0.2 + 0.1j, 1.0, {0: 1.0}) - fb.FiberBump(-0.3j, 1.0, {0: 1.0})
    r = po.prescribed_pushforward(f, basis, held, ladder=tuple(cfg.lambda_ladder), budget=budget, seed=cfg.seed)
    inv_sig = [abs(v) / s for v, s in zip(r["invariance"], r["invariance_stderr"])]
    metrics = {
        "relative_error": r["relative_error"],
        "condition_number": r["condition_number"],
        "invariance_max_sigmas": max(inv_sig),
        "n_samples": r["n_samples"],
    }
    checks = {"reconstruction": r["relative_error"] <= 0.15, "invariance": r["invariance_ok"]}
    rows = list(zip(range(n_heldout), r["heldout_truth"], r["heldout_predicted"], r["heldout_stderr"],
                    r["invariance"], r["invariance_stderr"]))
    return _verdict("pushforward", checks, metrics, {
        "heldout": table(["index", "truth", "predicted", "stderr", "invariance", "invariance_stderr"], rows),
        "coefficients": table(["index", "coefficient"], list(enumerate(r["coefficients"]))),
    })


def livsic_basis(radius=1.1):
    return [fb.FiberBump(c, radius, md) for c in po.octagon_grid(1, 8)
            for md in ({0: 1.0}, {1: 1.0, -1: 1.0}, {1: 1j, -1: -1j})]


def run_livsic(cfg, census=None):
    census = census if census is not None else cen.enumerate(L=cfg.census_L)
    budget = _budget(cfg)
    fit = livsic_basis()
    rng = np.random.default_rng([cfg.seed, 11])
    coef = rng.normal(size=len(fit))
    u = fb.FiberField(lambda z, t: sum(c * v(z, t) for c, v in zip(coef, fit)), 1, label="u")
    f = fb.derive(u, "X")
    probes = [fb.GeodesicTube(hyp.GEN_ALPHA[0], hyp.GEN_BETA[0])] + po.scalar_bumps([0.2, -0.3j], 0.9)
    unorm = fb.c_norm(u)
    r = po.livsic_check(f, census, probes, fit, u_true=u, ladder=tuple(cfg.lambda_ladder), budget=budget,
                        seed=cfg.seed)
    lengths = np.array([g.length for g in census])
    orbit_rel = np.array(r["orbit_integrals"]) / (lengths * unorm)
    pi_sig = [abs(v) / s for v, s in zip(r["pi_values"], r["pi_stderr"])]
    metrics = {
        "u_c1_norm": unorm,
        "orbit_max_relative": float(orbit_rel.max()),
        "pi_max_sigmas": max(pi_sig),
        "fit_residual": r["fit_residual"],
        "u_relative_error": r["u_relative_error"],
    }
    checks = {"orbits": orbit_rel.max() < 1e-6, "pi": r["pi_ok"], "recovery": r["u_relative_error"] < 0.05}
    rows = [(g.word_string, g.length, o) for g, o in zip(census, r["orbit_integrals"])]
    return _verdict("livsic", checks, metrics, {"orbits": table(["word", "length", "abs_orbit_integral"], rows)})
