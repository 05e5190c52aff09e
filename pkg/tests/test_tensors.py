import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bolzalab import hyperbolic as hyp
from bolzalab import tensors as tn
from bolzalab.errors import DegreeError, IllConditioned


@pytest.fixture(scope="module")
def pts():
    return hyp.sample_liouville_arrays(200, np.random.default_rng(21))


def test_metric_is_parallel(pts):
    z, _ = pts
    g = tn.metric()
    assert np.abs(tn.sym_derivative(g)(z)).max() < 1e-6
    assert np.abs(tn.divergence(g)(z)).max() < 1e-6
    assert np.allclose(tn.trace(g)(z), 2.0)
    assert np.abs(tn.trace_free_part(g)(z)).max() < 1e-13


def test_pullback_of_metric_is_one(pts):
    z, t = pts
    assert np.allclose(tn.pi_star_up(tn.metric())(z, t), 1.0)


@pytest.mark.parametrize("m", range(6))
def test_cm_constant_closed_form(m):
    # pi_m^* pi_m_* acts on the top fiber mode by 2 pi 2^{-m} (2 pi for functions)
    assert tn.c_m_constant(m) == pytest.approx(2 * math.pi / 2**m, rel=1e-12)


@given(st.integers(0, 4), st.lists(st.floats(-2, 2), min_size=5, max_size=5), st.floats(0, 2 * math.pi))
@settings(max_examples=40, deadline=None)
def test_mode_matrix_reproduces_pullback(m, comps, theta):
    c = np.array(comps[: m + 1])
    f = tn.constant_tensor(m, c)
    z = np.array([0.1 + 0.2j])
    direct = tn.pi_star_up(f)(z, np.array([theta]))[0]
    modes = tn.mode_matrix(m) @ c
    ks = np.array([m - 2 * r for r in range(m + 1)])
    assert abs(np.sum(modes * np.exp(1j * ks * theta)) - direct) < 1e-12


@pytest.mark.parametrize("m", [1, 2, 3])
def test_from_fiber_roundtrip(m, pts):
    z, _ = pts
    f = tn.random_tensor_bump(np.random.default_rng(m), m)
    back = tn.from_fiber(tn.pi_star_up(f), m)
    assert np.allclose(back(z), f(z), atol=1e-12)


@pytest.mark.parametrize("m", [0, 1, 2])
def test_coordinate_and_fiber_derivatives_agree(m, pts):
    z, _ = pts
    f = tn.random_tensor_bump(np.random.default_rng(10 + m), m)
    a = tn.sym_derivative(f)(z)
    b = tn.sym_derivative_fiber(f)(z)
    assert np.abs(a - b).max() < 1e-6 * max(1.0, np.abs(a).max())
    if m >= 1:
        assert np.abs(tn.divergence(f)(z) - tn.divergence_fiber(f)(z)).max() < 1e-6 * max(1.0, np.abs(a).max())


def test_divergence_is_minus_trace_of_nabla_not_of_d(pts):
    # for m = 1 the two conventions coincide; from m = 2 on, -T(D f) misses the D(T f) term
    z, _ = pts
    f1 = tn.random_tensor_bump(np.random.default_rng(50), 1)
    assert np.abs(tn.divergence(f1)(z) + tn.trace(tn.sym_derivative(f1))(z)).max() < 1e-6
    f2 = tn.random_tensor_bump(np.random.default_rng(51), 2)
    gap = np.abs(tn.divergence(f2)(z) + tn.trace(tn.sym_derivative(f2))(z)).max()
    assert gap > 1e-3 * np.abs(tn.divergence(f2)(z)).max()


@pytest.mark.parametrize("m", [1, 2, 3])
def test_splitting_identity(m, pts):
    z, t = pts
    f = tn.random_tensor_bump(np.random.default_rng(30 + m), m)
    assert np.abs(tn.splitting_residual(f, z[:100], t[:100])).max() < 1e-4


@pytest.mark.parametrize("m", [1, 2])
def test_divergence_is_formal_adjoint(m):
    rng = np.random.default_rng(40 + m)
    h = tn.random_tensor_bump(rng, m - 1)
    f = tn.random_tensor_bump(rng, m)
    quad = hyp.octagon_quadrature(256)
    lhs = tn.l2_inner(tn.sym_derivative(h), f, quad)
    rhs = tn.l2_inner(h, tn.divergence(f), quad)
    assert abs(lhs - rhs) < 1e-7 * max(1.0, abs(lhs))


def test_degree_errors():
    with pytest.raises(DegreeError):
        tn.divergence(tn.scalar(lambda z: np.ones(z.shape)))
    with pytest.raises(DegreeError):
        tn.metric() + tn.coframe(0)
    with pytest.raises(DegreeError):
        tn.trace(tn.coframe(1))


def test_potential_projection_is_orthogonal():
    rng = np.random.default_rng(50)
    z, w = hyp.octagon_quadrature(32)
    F = np.stack([tn.random_tensor_bump(rng, 1)(z) for _ in range(3)])
    P = np.stack([tn.sym_derivative(tn.random_tensor_bump(rng, 0))(z) for _ in range(4)])
    C = tn.potential_coefficients(F, P, w, 1, reg=0.0)
    R = F - np.einsum("ij,jkn->ikn", C, P)
    W = tn.weights(1)[:, None] * w[None, :]
    G = np.einsum("ajn,bjn,jn->ab", R, P, W)
    assert np.abs(G).max() < 1e-9 * np.abs(F).max() ** 2


def test_potential_projection_rejects_dependent_potentials():
    z, w = hyp.octagon_quadrature(16)
    p = tn.sym_derivative(tn.random_tensor_bump(np.random.default_rng(1), 0))(z)
    with pytest.raises(IllConditioned):
        tn.potential_coefficients(p[None], np.stack([p, p]), w, 1)


def test_c1_norm_dominates_sup():
    f = tn.random_tensor_bump(np.random.default_rng(60), 2)
    z = hyp.sample_liouville_arrays(1000, np.random.default_rng(12345))[0]
    assert tn.c1_norm(f) >= np.abs(f(z)).max()
