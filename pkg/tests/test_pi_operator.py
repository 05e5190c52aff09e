import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bolzalab import fiber as fb
from bolzalab import pi_operator as po
from bolzalab.errors import ExtrapolationUnstable, VarianceBudget

SMALL = po.Budget(n_samples=40_000, n_batches=16, window=250, t_max=4.0)


@pytest.fixture(scope="module")
def bumps():
    rng = np.random.default_rng(77)
    return [fb.random_bump(rng, 1, radius=(1.2, 1.4)) for _ in range(3)]


def test_budget_validation():
    with pytest.raises(ValueError):
        po.Budget(n_batches=8)
    with pytest.raises(ValueError):
        po.Budget(dt=0.0)
    b = po.Budget(n_samples=10_000, n_batches=16, window=100)
    assert b.actual_samples >= 10_000
    assert b.actual_samples == b.traj_per_batch * 16 * 100


@given(st.lists(st.floats(-1e3, 1e3), min_size=16, max_size=40))
def test_batch_stats_matches_numpy(x):
    x = np.array(x)
    mean, se = po.batch_stats(x)
    assert mean.real == pytest.approx(x.mean(), abs=1e-9)
    assert se == pytest.approx(x.std(ddof=1) / math.sqrt(x.size), abs=1e-9)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_extrapolation_weights_reproduce_quadratics(c):
    ladder = (0.4, 0.2, 0.1)
    w = po.extrapolation_weights(ladder)
    vals = [c[0] + c[1] * x + c[2] * x * x for x in ladder]
    assert np.dot(w, vals) == pytest.approx(c[0], abs=1e-9)


def test_damped_weights_integrate_exponential():
    dt = 0.01
    lags = np.arange(-2000, 2001) * dt
    for lam in (0.3, 1.0):
        w = po._damped_weights(lags, lam, 15.0, dt, 0)
        assert w.sum() == pytest.approx(2 * (1 - math.exp(-15 * lam)) / lam, rel=1e-4)
        w1 = po._damped_weights(lags, lam, 15.0, dt, 1)
        assert np.all(w1[lags < 0] == 0)


def test_cross_correlations_match_direct_sum():
    rng = np.random.default_rng(0)
    F = rng.normal(size=(3, 40)) + 1j * rng.normal(size=(3, 40))
    P = rng.normal(size=(3, 40))
    k_lo, k_hi, W = -5, 7, 28
    C = po._cross_correlations({0: F, 1: P + 0j}, [(0, 1)], k_lo, k_hi, W, False)[0]
    for k in range(k_lo, k_hi + 1):
        direct = np.mean([F[i, -k_lo + t + k] * np.conj(P[i, -k_lo + t]) for i in range(3) for t in range(W)])
        assert C[k - k_lo] == pytest.approx(direct, abs=1e-12)


def test_same_seed_same_numbers_any_thread_count(bumps):
    f, g, _ = bumps
    a = po.pi_pairing(f, g, budget=SMALL, seed=5)
    b = po.pi_pairing(f, g, budget=SMALL, seed=5)
    c = po.pi_pairing(f, g, budget=po.Budget(**{**SMALL.__dict__, "threads": 4}), seed=5)
    assert a.value == b.value == c.value
    assert a.stderr == b.stderr == c.stderr
    assert po.pi_pairing(f, g, budget=SMALL, seed=6).value != a.value


def test_constants_are_invisible_to_pi(bumps):
    f = bumps[0]
    e = po.pi_pairing(fb.constant(1.0), f, budget=SMALL, seed=1)
    assert abs(e.value) < 1e-12


def test_resolvent_of_constant():
    # lam <R_+(lam) 1, 1> = 1 - e^{-lam T}, up to the trapezoid error
    one = fb.constant(1.0)
    e = po.resolvent_pairing(one, one, 0.5, budget=SMALL, seed=0)
    assert (0.5 * e.value).real == pytest.approx(1.0, abs=1e-3)
    assert abs(e.details["batch_stderr"]) < 1e-12
    minus = po.resolvent_pairing(one, one, 0.5, sign=-1, budget=SMALL, seed=0)
    assert minus.value == pytest.approx(-e.value)


def test_correlation_with_constant_vanishes(bumps):
    e = po.correlation(bumps[0], fb.constant(1.0), 1.0, budget=SMALL, seed=2)
    assert abs(e.value) < 1e-12


def test_combine_is_linear(bumps):
    f, g, h = bumps
    ests = po.pi_pairings([f, g, h], [(0, 2), (1, 2)], budget=SMALL, seed=3)
    c = po.combine(ests, [2.0, -1.0])
    direct = po.pi_pairing(2.0 * f - g, h, budget=SMALL, seed=3)
    assert c.value == pytest.approx(direct.value, abs=1e-12)


def test_variance_budget_is_enforced(bumps):
    tight = po.Budget(**{**SMALL.__dict__, "variance_fraction": 1e-6})
    with pytest.raises(VarianceBudget):
        po.pi_pairing(bumps[0], bumps[1], budget=tight, seed=0)


def test_unstable_ladder_is_rejected():
    B = 16
    rng = np.random.default_rng(0)
    # ladder values that go up then down far outside the noise
    base = np.array([0.0, 1.0, 0.0, 1.0])
    P = (base[None, None, :] + 1e-3 * rng.normal(size=(B, 1, 4))).astype(complex)
    with pytest.raises(ExtrapolationUnstable):
        po._extrapolate(P, po.LADDER, SMALL, 0)


def test_mixing_residue_small_budget(bumps):
    u, v, _ = bumps
    r = po.mixing_residue(u, v, budget=SMALL, seed=4)
    assert len(r["values"]) == 3
    ref = fb.l2_inner(u, fb.constant(1.0)) * fb.l2_inner(fb.constant(1.0), v)
    assert r["reference"] == pytest.approx(ref)
    assert abs(r["extrapolated"] - ref) <= 4 * r["extrapolated_stderr"]


def test_normal_matrix_shape_and_csv(bumps, tmp_path):
    G = po.normal_matrix(bumps[:2], budget=SMALL, seed=0)
    assert G.values.shape == (2, 2)
    assert np.allclose(G.symmetrized, G.symmetrized.conj().T)
    assert G.symmetry_violations(k=5.0) == 0
    G.to_csv(tmp_path / "g.csv")
    assert len(open(tmp_path / "g.csv").read().splitlines()) == 5


def test_octagon_grid_inside():
    from bolzalab import hyperbolic as hyp

    g = po.octagon_grid(2, 8)
    assert g.size == 17
    assert np.all(hyp.in_octagon(g))
