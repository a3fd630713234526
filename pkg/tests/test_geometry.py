import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dehnlab import hyperbolic as hyp
from dehnlab.chains import winding_filling
from dehnlab.geometry import (
    E2, E3, H2, GeometryError, PLChain, Piece, SkeletonLoop, TriangulatedPatch, build_grid_E2,
    build_grid_E3, build_H2_tiling, combinatorialize_loop, polyline, refine_chain, volume,
)

from conftest import grid_vid, square_path


@pytest.mark.parametrize("n", [1, 2, 3])
def test_grid_E2_counts(n):
    p = build_grid_E2(n)
    assert len(p.simplices[2]) == 8 * n * n
    assert len(p.vertices) == (2 * n + 1) ** 2
    assert all(p.simplex_volume(2, s) == pytest.approx(0.5) for s in range(p.cell_count))


def test_grid_E2_valid_and_deck_invariant():
    p = build_grid_E2(2)
    assert p.check_valid()
    checked, bad = p.check_deck_invariance()
    assert checked > 0 and bad == 0


def test_grid_E3_kuhn():
    p = build_grid_E3(1)
    assert len(p.simplices[3]) == 48
    assert all(p.simplex_volume(3, s) == pytest.approx(1 / 6) for s in range(len(p.simplices[3])))
    assert p.check_valid()
    checked, bad = p.check_deck_invariance()
    assert checked > 0 and bad == 0


@pytest.mark.parametrize("radius,count", [(1, 8), (2, 72), (3, 520)])
def test_H2_tiling_counts_and_areas(radius, count):
    p = build_H2_tiling(radius)
    assert len(p.simplices[2]) == count
    areas = [p.simplex_volume(2, s) for s in range(p.cell_count)]
    assert np.allclose(areas, math.pi / 2, rtol=1e-9)
    assert np.allclose(-p.vertices[:, 2] ** 2 + p.vertices[:, 0] ** 2 + p.vertices[:, 1] ** 2, -1, atol=1e-9)


def test_H2_tiling_valid_and_deck_invariant():
    p = build_H2_tiling(2)
    assert p.check_valid()
    checked, bad = p.check_deck_invariance()
    assert checked > 0 and bad == 0


def test_H2_radius_guard():
    with pytest.raises(GeometryError):
        build_H2_tiling(5)


def test_octagon_corner_angle_sum():
    oct_ = hyp.octagon_group()
    v = oct_.vertices
    interior = hyp.angle_at(v[1], v[0], v[2])
    assert 8 * interior == pytest.approx(2 * math.pi, abs=1e-9)


def test_volume_examples():
    assert volume(polyline([[0, 0], [1, 0], [1, 1], [0, 1]]), E2) == pytest.approx(4)
    t = 0.7
    seg = PLChain(1, [Piece(np.array([[0, 0, 1], [math.sinh(t), 0, math.cosh(t)]]), 1, False)])
    assert volume(seg, H2) == pytest.approx(t)
    assert volume(PLChain(1, []), E2) == 0


@given(st.integers(-3, 3), st.integers(1, 4))
def test_volume_homogeneous_in_multiplicity(m, k):
    c = PLChain(1, [Piece(np.array([[0.0, 0.0], [2.0, 1.0]]), m * k, False)])
    assert volume(c, E2) == pytest.approx(abs(m * k) * math.sqrt(5))


def test_locate_faces(grid4):
    tri = grid4.simplices[2][10]
    bar = grid4.vertices[list(tri)].mean(axis=0)
    loc = grid4.locate(bar)
    assert loc.dim == 2 and loc.simplex == 10
    assert np.allclose(loc.bary, 1 / 3)
    loc = grid4.locate(np.array([0.5, 0.0]))
    assert loc.dim == 1
    assert grid4.locate(np.array([1.0, 1.0])).dim == 0
    with pytest.raises(GeometryError):
        grid4.locate(np.array([9.0, 0.0]))


def test_refine_chain_examples():
    c = PLChain(1, [Piece(np.array([[0.0, 0.0], [1.0, 0.0]]), 1, False)])
    r = refine_chain(c, 0.25)
    assert len(r.pieces[0].coords) == 5
    assert volume(r, E2) == pytest.approx(1.0, abs=1e-12)
    assert np.array_equal(refine_chain(r, 0.25).pieces[0].coords, r.pieces[0].coords)


@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=3, max_size=6),
       st.floats(0.05, 1.0))
def test_refine_chain_preserves_length(pts, h):
    c = polyline(np.array(pts))
    r = refine_chain(c, h)
    assert volume(r, E2) == pytest.approx(volume(c, E2), rel=1e-12, abs=1e-12)
    segs = np.linalg.norm(np.diff(np.vstack([r.pieces[0].coords, r.pieces[0].coords[:1]]), axis=0), axis=1)
    assert segs.max() <= h * (1 + 1e-9)


def test_refine_H2_triangle_preserves_area():
    p = build_H2_tiling(1)
    tri = PLChain(2, [Piece(p.vertices[list(p.simplices[2][0])], 1)])
    r = refine_chain(tri, 0.5, H2)
    assert volume(r, H2) == pytest.approx(volume(tri, H2), rel=1e-9)


def test_patch_json_roundtrip(grid4):
    q = TriangulatedPatch.from_json(grid4.to_json())
    assert np.array_equal(q.vertices, grid4.vertices)
    assert q.simplices == grid4.simplices
    assert grid4.to_json() == q.to_json()
    e3 = build_grid_E3(1)
    assert TriangulatedPatch.from_json(e3.to_json()).simplices == e3.simplices


def test_chain_json_roundtrip():
    c = PLChain(2, [Piece(np.array([[0.1, 0.2], [1 / 3, 0.5], [0.7, 0.9]]), -2, tag=4)])
    d = PLChain.from_json(c.to_json())
    assert np.array_equal(d.pieces[0].coords, c.pieces[0].coords)
    assert d.pieces[0].multiplicity == -2 and d.pieces[0].tag == 4


def test_combinatorialize_edge_loop_unchanged(grid4):
    vid = grid_vid(4)
    pts = square_path(0, 0, 2, 1)
    loop, area = combinatorialize_loop(polyline(np.array(pts, float)), grid4)
    assert area == 0
    assert loop.vertices == [vid(*p) for p in pts]


def test_combinatorialize_spur_removed(grid4):
    vid = grid_vid(4)
    pts = [(0, 0), (1, 0), (1, 1), (1, 1.5), (1, 1), (0, 1)]
    loop, area = combinatorialize_loop(polyline(np.array(pts, float)), grid4)
    assert area == 0
    assert loop.vertices == [vid(0, 0), vid(1, 0), vid(1, 1), vid(0, 1)]


def test_combinatorialize_rejects_off_skeleton(grid4):
    with pytest.raises(GeometryError):
        combinatorialize_loop(polyline(np.array([[0.1, 0.2], [0.8, 0.3], [0.5, 0.9]])), grid4)


@given(st.integers(1, 3), st.integers(1, 3), st.lists(st.floats(0.05, 0.95), min_size=1, max_size=4),
       st.integers(0, 100))
def test_combinatorialize_fractional_points(grid4, p, q, fracs, start):
    """Fractional pass-through points and mid-edge spurs: the loop snaps back to
    the edge loop with the same winding everywhere and area <= length."""
    verts = square_path(-1, -1, p, q)
    n = len(verts)
    pts = []
    for j in range(n):
        a, b = np.array(verts[j], float), np.array(verts[(j + 1) % n], float)
        pts.append(a)
        f = fracs[j % len(fracs)]
        if j % 2:
            pts.append(a + f * (b - a))  # pass-through point
        else:
            pts.extend([a + f * (b - a), a])  # spur out and back
    pts = pts[start % len(pts):] + pts[: start % len(pts)]
    eta = polyline(np.array(pts))
    loop, area = combinatorialize_loop(eta, grid4)
    loop.check(grid4)
    assert area <= volume(eta, E2) + 1e-12
    vid = grid_vid(4)
    ref = SkeletonLoop([vid(*v) for v in verts])
    assert winding_filling(loop, grid4) == winding_filling(ref, grid4)


def test_combinatorialize_snaps_loose_fractional_start(grid4):
    # a loop starting and ending mid-edge: the start point is snapped
    pts = np.array([[0.4, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]])
    loop, area = combinatorialize_loop(polyline(pts), grid4)
    loop.check(grid4)
    assert 0 <= area <= volume(polyline(pts), E2)
    assert len(loop.vertices) == 4
