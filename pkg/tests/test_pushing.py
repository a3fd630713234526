import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from dehnlab.geometry import E2, PLChain, Piece, build_grid_E2, polyline, volume
from dehnlab.pushing import (
    PushConfig, PushError, boundary_mismatch, choose_center, compute_K, in_skeleton,
    normalized_simplex, project_from_center, project_point, push_chain, sample_ball, stage1_length,
    v0_threshold,
)


def k_quadrature(i, k, r):
    """K by direct quadrature, independent of the spherical closed form."""
    R = 3 * r
    if i == 2:
        # integrate dy first in closed form: int_{-s}^{s} dy / |(x, y)| = 2 asinh(s / |x|)
        f = lambda x: 2 * math.asinh(math.sqrt(R * R - x * x) / abs(x))
        inner = 2 * integrate.quad(f, 0, R, limit=200, epsabs=0, epsrel=1e-11)[0]
        ball = integrate.quad(lambda x: 2 * math.sqrt(r * r - x * x), -r, r, epsrel=1e-12)[0]
    else:
        # cylindrical coordinates (rho, z); rho dz drho / |w|^k times 2 pi
        g = lambda z, rho: rho / (rho * rho + z * z) ** (k / 2)
        h = lambda rho: math.sqrt(max(R * R - rho * rho, 0.0))
        inner = 2 * math.pi * integrate.dblquad(g, 0, R, lambda rho: -h(rho), h, epsabs=0, epsrel=1e-11)[0]
        ball = 2 * math.pi * integrate.quad(lambda z: (r * r - z * z) / 2, -r, r)[0]
    return (2 * r) ** k * inner + ball


@pytest.mark.parametrize("i,k,closed", [(2, 1, 13 * math.pi), (3, 2, 148 / 3 * math.pi),
                                        (3, 1, 112 / 3 * math.pi)])
@pytest.mark.parametrize("r", [1.0, 0.3])
def test_compute_K(i, k, closed, r):
    K = compute_K(i, k, r)
    assert K == pytest.approx(closed * r**i, rel=1e-12)
    assert K == pytest.approx(k_quadrature(i, k, r), rel=1e-6)


@pytest.mark.parametrize("i,k,v0", [(2, 1, 14), (3, 2, 38), (3, 1, 29)])
def test_v0_threshold(i, k, v0):
    for r in (1.0, 0.1, 7.0):
        assert v0_threshold(i, k, r) == v0


def test_compute_K_rejects_bad_args():
    with pytest.raises(ValueError):
        compute_K(2, 2, 1.0)
    with pytest.raises(ValueError):
        compute_K(2, 1, 0.0)


def test_radius_policy():
    for i in (2, 3):
        assert 3 * PushConfig().radius(i) <= normalized_simplex(i).inradius


def test_project_point_hand_rays():
    ns = normalized_simplex(2)
    r = PushConfig().radius(2)
    m = 0.5 * (ns.vertices[1] + ns.vertices[2])
    u = 0.1 * r * m / np.linalg.norm(m)
    for t in (0.2, 0.5, 0.9):
        assert np.allclose(project_point(t * m, u, 2, r), m, atol=1e-12)
    # a point already on the boundary is fixed
    b = 0.3 * ns.vertices[1] + 0.7 * ns.vertices[2]
    assert np.allclose(project_point(b, u, 2, r), b, atol=1e-14)


def test_project_point_vertex_ray():
    ns = normalized_simplex(2)
    r = PushConfig().radius(2)
    out = project_point(0.5 * ns.vertices[0], np.zeros(2), 2, r)
    assert np.allclose(out, ns.vertices[0], atol=1e-12)


def test_project_from_center_boundary_chain_unchanged():
    ns = normalized_simplex(2)
    r = PushConfig().radius(2)
    v = ns.vertices
    Q = PLChain(1, [Piece(np.array([v[0], 0.5 * (v[0] + v[1]), v[1], v[2]]), 1, True)])
    out = project_from_center(Q, np.array([0.01, -0.02]), 2, r)
    # extra break points may appear, but the image is the same closed polyline
    pts = out.pieces[0].coords
    assert volume(out, E2) == pytest.approx(volume(Q, E2), rel=1e-12)
    assert (ns.bary(pts).min(axis=1) > -1e-12).all()
    assert (np.abs(ns.bary(pts).min(axis=1)) < 1e-12).all()


def test_choose_center_empty_and_diameter():
    cfg = PushConfig()
    rng = np.random.default_rng(0)
    c = choose_center([], 2, 1, 14, cfg, rng)
    assert c.blowup == 0 and c.tried == 1 and not c.rejected
    r = cfg.radius(2)
    Q = [np.array([[-r, 0.0], [r, 0.0]])]
    c = choose_center(Q, 2, 1, 14, cfg, rng)
    assert 0 < c.blowup <= 14
    assert np.linalg.norm(c.u) <= r


def test_sample_ball_inside():
    rng = np.random.default_rng(1)
    for i in (2, 3):
        pts = np.array([sample_ball(rng, i, 0.5) for _ in range(500)])
        assert (np.linalg.norm(pts, axis=1) <= 0.5).all()


def test_stage1_length_circle_arc():
    # a segment through the centre, inside the sphere, maps to a half circle
    r = 0.05
    Q = [np.array([[-r, 0.0], [r, 0.0]])]
    assert stage1_length(Q, np.array([0.0, 1e-9]), 2 * r) == pytest.approx(math.pi * 2 * r, rel=1e-6)
    far = [np.array([[0.0, 1.0], [1.0, 1.0]])]
    assert stage1_length(far, np.zeros(2), 0.1) == pytest.approx(1.0)


def _check_push(T, patch, seed):
    R, S, rep = push_chain(T, patch, PushConfig(seed=seed))
    assert in_skeleton(R, patch, 1)
    assert rep.vol_R <= rep.v0_effective * rep.vol_T * (1 + 1e-9)
    assert rep.vol_S <= rep.s_bound * (1 + 1e-9) + 1e-12
    assert boundary_mismatch(S, T, R) <= 1e-9 * max(1.0, rep.vol_T + rep.vol_R)
    return R, S, rep


def test_push_circle():
    patch = build_grid_E2(3)
    th = np.linspace(0, 2 * math.pi, 40, endpoint=False)
    T = polyline(np.c_[0.3 + 1.1 * np.cos(th), -0.2 + 1.1 * np.sin(th)])
    R, _, rep = _check_push(T, patch, 0)
    assert rep.empirical_C >= 1
    assert volume(R, E2) == pytest.approx(rep.vol_R)


def test_push_edge_loop_is_identity():
    patch = build_grid_E2(2)
    T = polyline(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    R, S, rep = push_chain(T, patch, PushConfig())
    assert rep.vol_R == pytest.approx(rep.vol_T)
    assert rep.empirical_C == pytest.approx(1.0)
    assert volume(S, E2) == pytest.approx(0.0, abs=1e-12)


def test_push_is_deterministic():
    patch = build_grid_E2(2)
    T = polyline(np.array([[0.1, 0.2], [1.3, -0.4], [0.7, 1.1]]))
    a = push_chain(T, patch, PushConfig(seed=5))[2].to_json()
    b = push_chain(T, patch, PushConfig(seed=5))[2].to_json()
    assert a == b


def test_push_rejects_off_patch():
    patch = build_grid_E2(1)
    with pytest.raises(Exception):
        push_chain(polyline(np.array([[0.0, 0.0], [5.0, 0.0], [5.0, 5.0]])), patch)


@settings(max_examples=25)
@given(st.integers(0, 10**6))
def test_push_random_loops(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.8, 1.8, (int(rng.integers(3, 6)), 2))
    _check_push(polyline(pts), build_grid_E2(2), seed)


@pytest.mark.slow
def test_push_sphere_e3(sphere_chain):
    from dehnlab.geometry import build_grid_E3
    patch = build_grid_E3(1)
    R, _, rep = push_chain(sphere_chain, patch, PushConfig(seed=3))
    assert in_skeleton(R, patch, 2)
    assert rep.vol_R <= rep.empirical_C * rep.vol_T
