import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bolzalab import hyperbolic as hyp
from bolzalab.errors import ConstructionError

finite = st.floats(-4.0, 4.0, allow_nan=False)
angle = st.floats(0.0, 2 * math.pi, allow_nan=False)
disk_r = st.floats(0.0, 0.95)


def random_frames(n, seed=0):
    rng = np.random.default_rng(seed)
    z, theta = hyp.sample_liouville_arrays(n, rng)
    return hyp.su_from_phase(z, theta)


def test_generator_constants():
    assert hyp.SYSTOLE == pytest.approx(2 * math.acosh(1 + math.sqrt(2)), abs=1e-15)
    # trace of each side pairing in SL(2,R) is 2 cosh(systole / 2)
    for j in range(8):
        g = hyp.GroupElement.from_su11(hyp.GEN_ALPHA[j], hyp.GEN_BETA[j])
        assert abs(g.det - 1.0) < 1e-13
        assert g.translation_length() == pytest.approx(hyp.SYSTOLE, abs=1e-12)
        inv = hyp.GroupElement.from_su11(hyp.GEN_ALPHA[(j + 4) % 8], hyp.GEN_BETA[(j + 4) % 8])
        assert (g @ inv).equals(hyp.GroupElement.identity(), 1e-12)


def test_relation_and_side_pairings():
    assert hyp.relation_residual() < 1e-9
    assert hyp.side_pairing_residual() < 1e-12
    grp = hyp.build_bolza()
    assert len(grp.generators) == 8


def test_build_rejects_tight_tolerance():
    with pytest.raises(ConstructionError):
        hyp.build_bolza(tol=-1.0)


def test_octagon_area_two_routes():
    z, w = hyp.octagon_quadrature()
    assert np.sum(w) == pytest.approx(4 * math.pi, abs=1e-9)
    assert hyp.octagon_area_polar() == pytest.approx(4 * math.pi, abs=1e-9)


def test_vertices_have_angle_sum_2pi():
    # 8 vertices identified to one point: interior angles pi/4 each
    v = hyp.octagon_vertices()
    r = abs(v[0])
    assert 2 * math.atanh(r) == pytest.approx(hyp.CIRCUMRADIUS, abs=1e-12)
    # cosh R = cot(pi/8) cot(pi/8) for the regular octagon with angles pi/4
    cot = 1.0 / math.tan(math.pi / 8)
    assert math.cosh(hyp.CIRCUMRADIUS) == pytest.approx(cot * cot, rel=1e-12)


@given(t=finite, s=finite, which=st.sampled_from(["geodesic", "perpendicular", "rotation"]))
@settings(max_examples=50, deadline=None)
def test_flow_group_law(t, s, which):
    a, b = random_frames(8)
    a1, b1 = hyp.flow_arrays(*hyp.flow_arrays(a, b, t, which), s, which)
    a2, b2 = hyp.flow_arrays(a, b, t + s, which)
    assert np.max(np.abs(a1 - a2) + np.abs(b1 - b2)) < 1e-12 * max(1.0, math.cosh(abs(t) + abs(s)))


@given(r=disk_r, phi=angle, theta=angle)
def test_phase_roundtrip(r, phi, theta):
    z = r * np.exp(1j * phi)
    a, b = hyp.su_from_phase(z, theta)
    z2, t2 = hyp.phase_from_su(a, b)
    assert abs(z2 - z) < 1e-12
    assert abs((t2 - theta + math.pi) % (2 * math.pi) - math.pi) < 1e-12


def test_geodesic_flow_moves_at_unit_speed():
    a, b = random_frames(50, seed=3)
    z0, _ = hyp.phase_from_su(a, b)
    z1, _ = hyp.phase_from_su(*hyp.flow_arrays(a, b, 0.7))
    assert np.allclose(hyp.hyperbolic_distance(z0, z1), 0.7, atol=1e-12)


def test_perpendicular_flow_orthogonal_to_geodesic():
    # moving along X_perp for small h changes position at right angles to X
    a, b = random_frames(20, seed=4)
    h = 1e-6
    z0, th = hyp.phase_from_su(a, b)
    zx, _ = hyp.phase_from_su(*hyp.flow_arrays(a, b, h, "geodesic"))
    zp, _ = hyp.phase_from_su(*hyp.flow_arrays(a, b, h, "perpendicular"))
    cos = np.real((zx - z0) * np.conj(zp - z0)) / (np.abs(zx - z0) * np.abs(zp - z0))
    assert np.max(np.abs(cos)) < 1e-5


@given(r=st.floats(0.0, 0.99), phi=angle)
@settings(max_examples=60, deadline=None)
def test_reduction_lands_in_octagon_and_preserves_orbit(r, phi):
    z = np.array([r * np.exp(1j * phi)])
    zr, ga, gb = hyp.reduce_arrays(z)
    assert hyp.in_octagon(zr, tol=1e-9)[0]
    assert abs(hyp.su_apply(ga, gb, z)[0] - zr[0]) < 1e-9
    # reducing again is the identity
    zr2, _, _ = hyp.reduce_arrays(zr)
    assert abs(zr2[0] - zr[0]) < 1e-12


def test_reduce_frames_keeps_su11_normalization():
    a, b = random_frames(100, seed=5)
    a, b = hyp.flow_arrays(a, b, 9.0)
    ra, rb = hyp.reduce_frames(a, b)
    assert np.max(np.abs(np.abs(ra) ** 2 - np.abs(rb) ** 2 - 1)) < 1e-12
    assert np.all(hyp.in_octagon(rb / np.conj(ra), tol=1e-9))


def _brute_ball(radius, depth):
    """Keys of group elements within ``radius`` among all words of length <= depth (no pruning)."""
    seen = set()
    inside = set()
    layer = [(1.0 + 0j, 0j)]
    for _ in range(depth + 1):
        nxt = []
        for a, b in layer:
            sgn = -1.0 if a.real < 0 else 1.0
            key = tuple(np.round(np.array([a.real, a.imag, b.real, b.imag]) * sgn * 1e6).astype(int))
            if key in seen:
                continue
            seen.add(key)
            if hyp.hyperbolic_distance_to_origin(-b / a) <= radius + 1e-9:
                inside.add(key)
            for j in range(8):
                nxt.append(hyp.su_mul(a, b, hyp.GEN_ALPHA[j], hyp.GEN_BETA[j]))
        layer = nxt
    return inside


def test_group_ball_against_brute_force():
    radius = 4.5
    ga, gb, words = hyp.group_ball(radius)
    d = hyp.hyperbolic_distance_to_origin(gb / np.conj(ga))
    assert np.all(d <= radius + 1e-9)
    shallow, deep = _brute_ball(radius, 4), _brute_ball(radius, 5)
    assert len(shallow) == len(deep)  # the brute-force count has stabilized
    assert len(ga) == len(deep)


def test_group_ball_words_reproduce_elements():
    ga, gb, words = hyp.group_ball(6.0)
    for i in range(0, len(words), 37):
        a, b = 1.0 + 0j, 0j
        for j in words[i]:
            a, b = hyp.su_mul(a, b, hyp.GEN_ALPHA[j], hyp.GEN_BETA[j])
        assert min(abs(a - ga[i]) + abs(b - gb[i]), abs(a + ga[i]) + abs(b + gb[i])) < 1e-9


def test_liouville_samples_uniform_in_area():
    rng = np.random.default_rng(0)
    z, theta = hyp.sample_liouville_arrays(200_000, rng)
    assert np.all(hyp.in_octagon(z))
    # fraction inside hyperbolic radius 0.5 against the exact area 2 pi (cosh 0.5 - 1) / 4 pi
    frac = np.mean(hyp.hyperbolic_distance_to_origin(z) < 0.5)
    exact = 2 * math.pi * (math.cosh(0.5) - 1) / (4 * math.pi)
    assert abs(frac - exact) < 4 * math.sqrt(exact * (1 - exact) / z.size)
    assert abs(np.mean(np.cos(theta))) < 0.01


def test_phasepoint_distance_mod_accepts_side_translate():
    p = hyp.PhasePoint.from_disk(0.1 + 0.2j, 0.3)
    a, b = p.g.su11
    ia, ib = hyp.su_inv(hyp.GEN_ALPHA[2], hyp.GEN_BETA[2])
    q = hyp.PhasePoint.from_group(hyp.GroupElement.from_su11(*hyp.su_mul(ia, ib, a, b)))
    assert p.distance(q) > 0.1
    assert p.distance_mod(q) < 1e-12
