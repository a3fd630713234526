"""Acceptance criteria, one test each.  Every test prints a PASS or FAIL line.

Run just these with ``pytest tests/test_acceptance.py -s`` (the lines are also
printed without ``-s``, straight to the terminal).
"""

import math
import time

import numpy as np
import pytest

from dehnlab.chains import boundary_2, filling_norm, winding_filling
from dehnlab.degree import boundary_cycle, extract_cellular, tag_pieces
from dehnlab.filling import dehn_function, vk_area
from dehnlab.geometry import build_grid_E2, build_grid_E3, polyline
from dehnlab.groups import FreeAbelianModel, cayley_ball, lattice_winding_area
from dehnlab.lab import equivalence_report
from dehnlab.pushing import (
    PushConfig, PushError, boundary_mismatch, compute_K, in_skeleton, push_chain,
    sample_ball, stage1_length, v0_threshold,
)
from dehnlab.words import commutator, power

from conftest import pushed_disc
from test_pushing import k_quadrature


@pytest.fixture
def verdict(capsys, request):
    def emit(num: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {num}: {detail}")
        assert ok, detail
    return emit


def test_criterion_01_z2_exact_areas(verdict):
    details, ok = [], True
    for n in (1, 2, 3):
        t = time.perf_counter()
        res = vk_area(commutator(power((1,), n), power((2,), n)), FreeAbelianModel(2))
        dt = time.perf_counter() - t
        ok &= res.found and res.area == n * n and isinstance(res.area, int) and dt < 60
        details.append(f"vk n={n}: {res.area} ({dt:.2f}s)")
    t = time.perf_counter()
    ball = cayley_ball(FreeAbelianModel(2), 12)
    for n in range(1, 7):
        w = commutator(power((1,), n), power((2,), n))
        fn = filling_norm(ball.cycle(w), ball)
        ok &= fn.certified and fn.integral and fn.value == lattice_winding_area(w) == n * n
    dt = time.perf_counter() - t
    ok &= dt < 60
    details.append(f"filling_norm n<=6 exact ({dt:.2f}s)")
    verdict(1, ok, "; ".join(details))


def test_criterion_02_dehn_table(verdict):
    t = time.perf_counter()
    table = dehn_function(FreeAbelianModel(2), 8)
    dt = time.perf_counter() - t
    vals = [r.value for r in table.rows]
    ok = table.value(4) == 1 and table.value(8) == 4 and vals == sorted(vals) and dt < 600
    verdict(2, ok, f"delta(4)={table.value(4)} delta(8)={table.value(8)} monotone={vals == sorted(vals)} ({dt:.1f}s)")


def test_criterion_03_constants(verdict):
    ok, parts = True, []
    for (i, k), v0 in {(2, 1): 14, (3, 1): 29, (3, 2): 38}.items():
        for r in (1.0, 0.25):
            K, Q = compute_K(i, k, r), k_quadrature(i, k, r)
            ok &= abs(K - Q) <= 1e-6 * abs(Q)
            ok &= v0_threshold(i, k, r) == v0
        parts.append(f"(i,k)=({i},{k}) v0={v0_threshold(i, k)}")
    verdict(3, ok, ", ".join(parts))


def test_criterion_04_pushing_bounds(verdict):
    patch = build_grid_E2(3)
    failures, worst = [], 0.0
    for s in range(100):
        rng = np.random.default_rng(1000 + s)
        T = polyline(rng.uniform(-2.5, 2.5, (int(rng.integers(3, 8)), 2)))
        try:
            R, S, rep = push_chain(T, patch, PushConfig(seed=s))
        except PushError as e:
            failures.append((s, str(e)))
            continue
        mis = boundary_mismatch(S, T, R)
        worst = max(worst, mis)
        good = (rep.vol_R <= rep.v0_effective * rep.vol_T * (1 + 1e-12)
                and mis <= 1e-9 * max(1.0, rep.vol_T + rep.vol_R)
                and rep.vol_S <= rep.s_bound * (1 + 1e-12)
                and in_skeleton(R, patch, 1))
        if not good:
            failures.append((s, rep.vol_R, rep.v0_effective * rep.vol_T, mis, rep.vol_S, rep.s_bound))
    verdict(4, not failures, f"100 loops, failures={failures}, worst boundary mismatch {worst:.2e}")


def test_criterion_05_rejection_law(verdict):
    cfg = PushConfig()
    r = cfg.radius(2)
    Q = [np.array([[-r, 0.0], [r, 0.0]])]  # a diameter of the centre ball
    rng = np.random.default_rng(0)
    N = 10_000
    blow = np.array([stage1_length(Q, sample_ball(rng, 2, r), 2 * r) / (2 * r) for _ in range(N)])
    K_ratio = compute_K(2, 1, r) / (math.pi * r * r)
    ok, parts = abs(K_ratio - 13) < 1e-12, []
    for v in (2, 4, 8, 14):
        frac = float((blow > v).mean())
        bound = K_ratio / v
        p = min(bound, 1.0)
        sigma_rel = math.sqrt(p * (1 - p) / N) / p if p < 1 else 0.0
        ok &= frac <= bound * (1 + 3 * sigma_rel)
        parts.append(f"v={v}: {frac:.4f} <= {bound:.4f}")
    verdict(5, ok, "; ".join(parts) + f"; max blowup {blow.max():.3f}")


def test_criterion_06_sphere_push(verdict, sphere_chain):
    patch = build_grid_E3(1)
    t = time.perf_counter()
    R, _, rep = push_chain(sphere_chain, patch, PushConfig(seed=3))
    cyc = boundary_cycle(tag_pieces(R, patch), patch)
    cell, drep = extract_cellular(tag_pieces(R, patch), patch)
    dt = time.perf_counter() - t
    ok = (in_skeleton(R, patch, 2) and rep.vol_R <= rep.empirical_C * rep.vol_T
          and cyc == {} and drep.boundary_ok and boundary_2(cell.coefficients, patch) == {} and dt < 300)
    verdict(6, ok, f"area(T)={rep.vol_T:.4f} area(R)={rep.vol_R:.4f} C={rep.empirical_C:.3f} "
                   f"boundary cells={len(cyc)} ({dt:.1f}s)")


def test_criterion_07_degree_oracle(verdict):
    patch = build_grid_E2(3)
    min_area = min(patch.simplex_volume(2, s) for s in range(patch.cell_count))
    bad = []
    for s in range(50):
        loop, disc = pushed_disc(patch, 2000 + s)
        ch = tag_pieces(disc, patch)
        ch.boundary = loop
        cell, rep = extract_cellular(ch, patch, seed=s)
        want = {e: v for e, v in loop.cycle(patch).items() if v}
        if not (cell == winding_filling(loop, patch) and rep.boundary_ok
                and boundary_2(cell.coefficients, patch) == want
                and cell.norm() * min_area <= rep.chain_area * (1 + 1e-9)):
            bad.append(s)
    verdict(7, not bad, f"50 pushed discs, mismatches={bad}")


def test_criterion_08_flat_report(verdict, tmp_path):
    rep = equivalence_report("flat", 24, seed=0, out_dir=str(tmp_path))
    ex = rep["exponents"]
    ok = rep["equivalent"] and all(e is not None and 1.9 <= e <= 2.1 for e in ex.values())
    ranges = {k: v.get("n_range") for k, v in rep["precedes"].items()}
    verdict(8, ok, f"certified={rep['certified']} exponents={ex} ranges={ranges}")


def test_criterion_09_hyperbolic_report(verdict, tmp_path):
    rep = equivalence_report("hyperbolic", 16, seed=0, out_dir=str(tmp_path))
    lin = rep["dehn_linear"]
    rows = {k: p["rows"] for k, p in rep["profiles"].items()}
    # linear envelopes: value <= slope * n on every row, with a small slope
    slopes = {k: max(r["value"] / r["n"] for r in rs) for k, rs in rows.items()}
    linear = all(v <= 2 for v in slopes.values())
    ok = rep["equivalent"] and lin["holds"] and lin["words"] > 0 and linear
    verdict(9, ok, f"certified={rep['certified']} dehn area<=|w| over {lin['words']} words, "
                   f"envelope slopes={slopes}")


def test_criterion_10_determinism(verdict, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    equivalence_report("flat", 16, seed=7, out_dir=str(a))
    equivalence_report("flat", 16, seed=7, out_dir=str(b))
    names = ["report.json", "combinatorial.csv", "geometric.csv", "profiles.svg"]
    same = all((a / n).read_bytes() == (b / n).read_bytes() for n in names)
    patch = build_grid_E2(2)
    T = polyline(np.array([[0.13, -1.2], [1.7, 0.4], [-0.6, 1.5], [-1.4, -0.3]]))
    pushes = [push_chain(T, patch, PushConfig(seed=11)) for _ in range(2)]
    same_push = (pushes[0][2].to_json() == pushes[1][2].to_json()
                 and pushes[0][0].to_json() == pushes[1][0].to_json())
    verdict(10, same and same_push, f"report files identical={same}, push outputs identical={same_push}")
