import csv

import numpy as np
import pytest

from bolzalab import census as cen
from bolzalab import fiber as fb
from bolzalab import hyperbolic as hyp
from bolzalab import tensors as tn
from bolzalab import xray as xr
from bolzalab.errors import DegreeError, QuadratureNotConverged, RankDeficientCensus


def one():
    return tn.scalar(lambda z: np.ones(z.shape), "1")


def test_constant_and_metric_integrate_to_length(census5):
    for r in census5:
        assert xr.xray(one(), r) == pytest.approx(r.length, rel=1e-13)
        assert xr.xray(tn.metric(), r) == pytest.approx(r.length, rel=1e-13)


def test_xray_matches_periodic_trapezoid(census5):
    f = tn.random_tensor_bump(np.random.default_rng(3), 2)
    u = tn.pi_star_up(f)
    for r in list(census5)[::7]:
        n = 6000
        t = np.arange(n) * r.length / n
        a, b = hyp.reduce_frames(*hyp.flow_arrays(np.full(n, r.frame[0]), np.full(n, r.frame[1]), t))
        z, th = hyp.phase_from_su(a, b)
        trap = np.sum(u(z, th).real) * r.length / n
        assert xr.xray(f, r) == pytest.approx(trap, abs=1e-8 * r.length)


def test_start_point_does_not_matter(census5):
    f = tn.random_tensor_bump(np.random.default_rng(4), 1)
    r = census5[-1]
    assert xr.xray(f, r, shift=0.37) == pytest.approx(xr.xray(f, r), abs=1e-10)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_potentials_are_in_kernel(census5, m):
    h = tn.random_tensor_bump(np.random.default_rng(m), m - 1)
    X = xr.assemble([tn.sym_derivative(h)], census5, m)
    assert np.abs(X.entries).max() < 1e-6 * X.lengths.max() * tn.c1_norm(h)


def test_coboundary_orbit_integrals_vanish(census5):
    u = fb.random_bump(np.random.default_rng(5), 2)
    xu = fb.derive(u, "X")
    for r in census5:
        assert abs(xr.orbit_integral(xu, r)) < 1e-6 * r.length * fb.c_norm(u)


def test_gate_detects_coarse_quadrature(census5):
    # centred on the origin, which lies on the axis of the first systole
    f = tn.random_tensor_bump(np.random.default_rng(6), 1, radius=0.3, center=0.0)
    with pytest.raises(QuadratureNotConverged):
        xr.assemble([f], census5, 1, quadrature_n=16)


def test_degree_mismatch():
    with pytest.raises(DegreeError):
        xr.assemble([tn.metric()], [None], 1)


def test_rank_deficient_census(census5):
    basis = xr.default_basis(0, size=6, seed=1)
    X = xr.assemble(basis, list(census5)[:4], 0)
    with pytest.raises(RankDeficientCensus):
        xr.injectivity_test(X, np.eye(6))


def test_to_csv_full_precision(tmp_path, census5):
    X = xr.assemble(xr.default_basis(0, size=3), census5, 0)
    path = tmp_path / "x.csv"
    X.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0][:2] == ["word", "length"]
    assert np.array_equal(np.array([[float(v) for v in r[2:]] for r in rows[1:]]), X.entries)


def test_functions_are_injective_on_small_basis(census8):
    rep, _ = xr.run_injectivity(0, census8, basis_size=6, seed=3)
    assert rep.passed
    assert rep.denominator == "quadrature-noise"
    assert len(rep.singular_values) == 6
