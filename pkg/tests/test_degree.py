import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dehnlab.chains import CellularTwoChain, boundary_2, winding_filling
from dehnlab.degree import (
    DegreeError, PushedTwoChain, boundary_cycle, combinatorial_area_from_geometric, degree_at,
    degree_json, extract_cellular, generic_point, tag_pieces,
)
from dehnlab.geometry import PLChain, Piece, SkeletonLoop, build_grid_E2

from conftest import grid_vid, pushed_disc, square_path


@pytest.fixture(scope="module")
def g2():
    return build_grid_E2(2)


def _simplex_piece(patch, sid, mult=1, reverse=False):
    pts = patch.vertices[list(patch.simplices[2][sid])]
    if reverse:
        pts = pts[::-1]
    return Piece(pts.copy(), mult, tag=sid)


def _cone(center, pts, mult=1):
    pts = np.asarray(pts, float)
    return PLChain(2, [Piece(np.array([center, pts[j], pts[(j + 1) % len(pts)]]), mult)
                       for j in range(len(pts))])


def _sign(patch, sid):
    a, b, c = patch.chart[list(patch.simplices[2][sid])]
    return 1 if (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]) > 0 else -1


@pytest.mark.parametrize("mults,reverse,expected", [
    ([1], [False], 1), ([1], [True], -1), ([1, 1], [False, False], 2), ([1, 1], [False, True], 0),
    ([3], [False], 3), ([-2], [True], 2),
])
def test_degree_single_simplex(g2, mults, reverse, expected):
    sid = 5
    ch = PushedTwoChain([_simplex_piece(g2, sid, m, r) for m, r in zip(mults, reverse)])
    cell, rep = extract_cellular(ch, g2)
    # pieces are given in sorted vertex order, which is the reference orientation
    assert cell.coefficients.get(sid, 0) == expected
    assert rep.boundary_ok and rep.area_ok


def test_degree_empty_chain(g2):
    cell, rep = extract_cellular(PushedTwoChain([]), g2)
    assert cell.norm() == 0 and rep.boundary_ok
    assert rep.area_lower == 0 and rep.chain_area == 0


def test_degree_half_cover(g2):
    # a piece covering half a simplex has degree 1 on one side, 0 on the other
    sid = 3
    v = g2.vertices[list(g2.simplices[2][sid])]
    half = Piece(np.array([v[0], v[1], 0.5 * (v[1] + v[2])]), 1, tag=sid)
    ch = PushedTwoChain([half])
    rng = np.random.default_rng(0)
    seen = {degree_at(generic_point(sid, ch, g2, rng), ch, g2) for _ in range(40)}
    assert seen == {0, 1}
    with pytest.raises(DegreeError):
        extract_cellular(ch, g2, samples=25)


def test_generic_point_clearance(g2):
    sid = 7
    v = g2.vertices[list(g2.simplices[2][sid])]
    ch = PushedTwoChain([Piece(np.array([v[0], v[1], v.mean(axis=0)]), 1, tag=sid)])
    rng = np.random.default_rng(3)
    for _ in range(100):
        q = generic_point(sid, ch, g2, rng, clearance=0.05)
        lam = np.array([1 - q.coords.sum(), *q.coords])
        assert lam.min() >= 0.05


def test_tag_pieces_rejects_misplaced_tag(g2):
    p = _simplex_piece(g2, 0)
    p.tag = 1
    with pytest.raises(DegreeError):
        tag_pieces(PLChain(2, [p]), g2)


@pytest.mark.parametrize("side,area", [(1, 2), (2, 8), (3, 18)])
def test_square_fillings(side, area):
    patch = build_grid_E2(4)
    vid = grid_vid(4)
    pts = square_path(0, 0, side, side)
    loop = SkeletonLoop([vid(*p) for p in pts])
    c = np.mean(pts, axis=0) + np.array([0.013, 0.007])
    cert = combinatorial_area_from_geometric(loop, _cone(c, pts), patch)
    assert cert.area == area
    assert cert.cellular == winding_filling(loop, patch)
    assert cert.area <= cert.bound


def test_boundary_cycle_matches_loop():
    patch = build_grid_E2(4)
    vid = grid_vid(4)
    pts = square_path(-1, 0, 3, 2)
    loop = SkeletonLoop([vid(*p) for p in pts])
    ch = tag_pieces(_cone(np.array([0.31, 0.77]), pts), patch)
    want = {e: v for e, v in loop.cycle(patch).items() if v}
    assert boundary_cycle(ch, patch) == want
    cell, rep = extract_cellular(ch, patch)
    assert rep.boundary_ok
    assert boundary_2(cell.coefficients, patch) == want


def test_orientation_antisymmetry():
    patch = build_grid_E2(4)
    pts = square_path(0, -1, 2, 3)
    a, _ = extract_cellular(tag_pieces(_cone(np.array([0.4, 0.3]), pts), patch), patch)
    b, _ = extract_cellular(tag_pieces(_cone(np.array([0.4, 0.3]), pts, -1), patch), patch)
    c, _ = extract_cellular(tag_pieces(_cone(np.array([1.7, 0.2]), pts[::-1]), patch), patch)
    assert b == -a and c == -a


def test_degree_independent_of_cone_point():
    patch = build_grid_E2(4)
    pts = square_path(-2, -1, 3, 2)
    cells = [extract_cellular(tag_pieces(_cone(np.array(c), pts), patch), patch)[0]
             for c in ([0.1, 0.2], [-3.3, 2.7], [3.9, -3.1])]
    assert cells[0] == cells[1] == cells[2]


def test_degree_json(g2):
    cell, rep = extract_cellular(PushedTwoChain([_simplex_piece(g2, 2)]), g2)
    text = degree_json(cell, rep)
    assert '"2": 1' in text and '"boundary_ok": true' in text


@settings(max_examples=12)
@given(st.integers(0, 10**6))
def test_pushed_discs_match_winding(seed):
    patch = build_grid_E2(3)
    loop, disc = pushed_disc(patch, seed)
    ch = tag_pieces(disc, patch)
    ch.boundary = loop
    cell, rep = extract_cellular(ch, patch, seed=seed)
    assert cell == winding_filling(loop, patch)
    assert rep.boundary_ok and rep.area_ok
    assert cell.norm() * 0.5 <= rep.chain_area * (1 + 1e-9)


@pytest.mark.slow
def test_pushed_sphere_has_cellular_cycle(sphere_chain):
    from dehnlab.geometry import build_grid_E3
    from dehnlab.pushing import PushConfig, push_chain
    patch = build_grid_E3(1)
    R, _, rep = push_chain(sphere_chain, patch, PushConfig(seed=3))
    ch = tag_pieces(R, patch)
    assert boundary_cycle(ch, patch) == {}
    cell, drep = extract_cellular(ch, patch)
    assert drep.boundary_ok and drep.area_ok
    assert boundary_2(cell.coefficients, patch) == {}
    assert cell.norm() > 0
