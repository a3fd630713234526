"""Degree fields of 2-chains lying in the 2-skeleton, and the cellular fillings they give.

A PL 2-chain whose pieces each lie in one 2-simplex ``sigma`` covers
``sigma`` with a signed multiplicity that is constant away from the piece
edges.  Sampling that multiplicity at a few generic points yields one
integer per 2-simplex; the resulting cellular chain has the same boundary
as the geometric one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .chains import CellularTwoChain, boundary_2
from .geometry import PLChain, Piece, SkeletonLoop, TriangulatedPatch, volume
from .pushing import PushConfig, push_chain


class DegreeError(RuntimeError):
    pass


@dataclass
class PushedTwoChain:
    """Triangle pieces, each tagged with the 2-simplex that contains it."""

    pieces: list[Piece]
    boundary: SkeletonLoop | None = None

    def as_chain(self) -> PLChain:
        return PLChain(2, self.pieces)


@dataclass
class GenericPoint:
    simplex: int
    coords: np.ndarray  # affine coordinates (lambda_1, lambda_2) in the simplex
    preimages: list[int] = field(default_factory=list)


class _Face:
    """Affine coordinates on a 2-simplex (in the patch chart)."""

    def __init__(self, patch: TriangulatedPatch, sid: int):
        verts = patch.simplices[2][sid]
        pts = patch.chart[list(verts)]
        self.origin = pts[0]
        self.edges = (pts[1:] - pts[0]).T
        self._pinv = np.linalg.pinv(self.edges)
        self.normal_dist_tol = 1e-9

    def coords(self, chart_pts) -> np.ndarray:
        return (np.atleast_2d(chart_pts) - self.origin) @ self._pinv.T

    def off_plane(self, chart_pts) -> float:
        mu = self.coords(chart_pts)
        back = self.origin + mu @ self.edges.T
        return float(np.max(np.linalg.norm(back - np.atleast_2d(chart_pts), axis=1)))


def _orient(t) -> float:
    (x0, y0), (x1, y1), (x2, y2) = t
    return (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)


def _edge_distance(q, t) -> float:
    best = math.inf
    for j in range(3):
        a, b = t[j], t[(j + 1) % 3]
        ab = b - a
        L = ab @ ab
        s = 0.0 if L == 0 else min(1.0, max(0.0, (q - a) @ ab / L))
        best = min(best, float(np.linalg.norm(a + s * ab - q)))
    return best


def _contains(q, t) -> bool:
    d = _orient(t)
    if d == 0:
        return False
    s = [_orient([q, t[1], t[2]]), _orient([t[0], q, t[2]]), _orient([t[0], t[1], q])]
    return all(x * d > 0 for x in s)


def tag_pieces(chain: PLChain, patch: TriangulatedPatch, tol: float = 1e-9) -> PushedTwoChain:
    """Clip a 2-chain of a 2-dimensional patch into per-simplex pieces.

    Chains that already carry tags (output of pushing in E3) are checked
    rather than clipped.
    """
    if chain.dim != 2:
        raise ValueError("expected a 2-chain")
    model = patch.model
    out: list[Piece] = []
    if all(p.tag is not None for p in chain.pieces):
        for p in chain.pieces:
            face = _Face(patch, p.tag)
            ch = model.to_chart(p.coords)
            mu = face.coords(ch)
            if face.off_plane(ch) > tol or np.any(mu < -tol) or np.any(mu.sum(axis=1) > 1 + tol):
                raise DegreeError(f"piece tagged {p.tag} leaves its simplex")
            out.append(p)
        return PushedTwoChain(out)
    if patch.top_dim != 2:
        raise ValueError("untagged chains can only be clipped in 2-dimensional patches")
    for p in chain.pieces:
        ch = model.to_chart(p.coords)
        ids = patch.candidates(ch.mean(axis=0), tol=float(np.ptp(ch, axis=0).max()) + tol)
        for sid in ids:
            face = _Face(patch, int(sid))
            mu = face.coords(ch)
            lam = np.hstack([1 - mu.sum(axis=1, keepdims=True), mu])
            poly = [(lam[j], ch[j]) for j in range(3)]
            for comp in range(3):
                if not poly:
                    break
                nxt = []
                for j in range(len(poly)):
                    a, b = poly[j], poly[(j + 1) % len(poly)]
                    ga, gb = a[0][comp], b[0][comp]
                    if ga >= 0:
                        nxt.append(a)
                    if (ga < 0 < gb) or (gb < 0 < ga):
                        s = ga / (ga - gb)
                        nxt.append((a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])))
                poly = nxt
            if len(poly) < 3:
                continue
            for j in range(1, len(poly) - 1):
                tri = np.array([poly[0][1], poly[j][1], poly[j + 1][1]])
                if abs(_orient(tri)) <= 1e-18:
                    continue
                out.append(Piece(model.from_chart(tri), p.multiplicity, tag=int(sid)))
    return PushedTwoChain(out)


def _pieces_by_simplex(chain: PushedTwoChain, patch: TriangulatedPatch):
    groups: dict[int, list[tuple[int, np.ndarray, int]]] = {}
    faces: dict[int, _Face] = {}
    for idx, p in enumerate(chain.pieces):
        face = faces.setdefault(p.tag, _Face(patch, p.tag))
        mu = face.coords(patch.model.to_chart(p.coords))
        groups.setdefault(p.tag, []).append((idx, mu, p.multiplicity))
    return groups


def generic_point(sigma: int, chain: PushedTwoChain, patch: TriangulatedPatch, rng,
                  clearance: float = 1e-9, max_tries: int = 1000, _groups=None) -> GenericPoint:
    """Uniform point of ``sigma`` at least ``clearance`` from every piece edge."""
    groups = _groups if _groups is not None else _pieces_by_simplex(chain, patch)
    pieces = groups.get(sigma, [])
    for _ in range(max_tries):
        a, b = rng.random(2)
        if a + b > 1:
            a, b = 1 - a, 1 - b
        q = np.array([a, b])
        if min(q[0], q[1], 1 - q.sum()) < clearance:
            continue
        if any(_edge_distance(q, mu) < clearance for _, mu, _ in pieces):
            continue
        pre = [idx for idx, mu, _ in pieces if _contains(q, mu)]
        return GenericPoint(sigma, q, pre)
    raise DegreeError(f"no generic point in simplex {sigma} after {max_tries} tries")


def degree_at(q: GenericPoint, chain: PushedTwoChain, patch: TriangulatedPatch, _groups=None) -> int:
    """Sum of multiplicity times orientation sign over pieces containing ``q``."""
    groups = _groups if _groups is not None else _pieces_by_simplex(chain, patch)
    total = 0
    for _, mu, mult in groups.get(q.simplex, []):
        if _edge_distance(q.coords, mu) == 0:
            raise DegreeError("point lies on a piece edge")
        if _contains(q.coords, mu):
            total += mult * (1 if _orient(mu) > 0 else -1)
    return total


def boundary_cycle(chain: PushedTwoChain, patch: TriangulatedPatch, tol: float = 1e-6) -> dict[int, int]:
    """Cellular 1-cycle carried by the piece edges that run along patch edges.

    Each such piece edge contributes its multiplicity times the fraction of
    the patch edge it covers; piece edges inside a simplex cancel in a chain
    whose boundary lies in the 1-skeleton, and are ignored.
    """
    acc: dict[int, float] = {}
    groups = _pieces_by_simplex(chain, patch)
    for sid, items in groups.items():
        p0, p1, p2 = patch.simplices[2][sid]
        # (edge vertices, on-edge test, parameter from the lower to the higher vertex)
        sides = (((p0, p1), lambda m: m[1], lambda m: m[0]),
                 ((p0, p2), lambda m: m[0], lambda m: m[1]),
                 ((p1, p2), lambda m: 1 - m[0] - m[1], lambda m: m[1]))
        for _, mu, mult in items:
            for j in range(3):
                a, b = mu[j], mu[(j + 1) % 3]
                for verts, off, param in sides:
                    if abs(off(a)) <= 1e-9 and abs(off(b)) <= 1e-9:
                        e = patch.simplex_id(1, verts)
                        acc[e] = acc.get(e, 0.0) + mult * (param(b) - param(a))
                        break
    out = {}
    for e, v in acc.items():
        r = round(v)
        if abs(v - r) > tol:
            raise DegreeError(f"boundary covers edge {e} a fractional {v} times")
        if r:
            out[e] = int(r)
    return out


@dataclass
class DegreeReport:
    boundary_ok: bool
    boundary_mismatch: dict[int, int]
    area_ok: bool
    area_lower: float
    chain_area: float
    samples: int

    @property
    def area_slack(self) -> float:
        return self.chain_area - self.area_lower


def extract_cellular(chain: PushedTwoChain, patch: TriangulatedPatch, samples: int = 5,
                     seed: int = 0, clearance: float = 1e-9) -> tuple[CellularTwoChain, DegreeReport]:
    """Per-simplex degree (median of ``samples`` generic points, all required to agree).

    The boundary check compares against the chain's loop when one is attached,
    otherwise against :func:`boundary_cycle` of the pieces.
    """
    rng = np.random.default_rng(seed)
    groups = _pieces_by_simplex(chain, patch)
    coeffs = {}
    for sid in sorted(groups):
        vals = [degree_at(generic_point(sid, chain, patch, rng, clearance, _groups=groups), chain, patch, groups)
                for _ in range(samples)]
        if len(set(vals)) != 1:
            raise DegreeError(f"degree samples disagree on simplex {sid}: {vals}")
        d = int(np.median(vals))
        if d:
            coeffs[sid] = d
    result = CellularTwoChain(coeffs)
    got = boundary_2(result.coefficients, patch)
    want = chain.boundary.cycle(patch) if chain.boundary is not None else boundary_cycle(chain, patch)
    mismatch = {e: got.get(e, 0) - want.get(e, 0) for e in set(got) | set(want)}
    mismatch = {e: v for e, v in mismatch.items() if v}
    lower = float(sum(abs(d) * patch.simplex_volume(2, s) for s, d in coeffs.items()))
    area = float(volume(chain.as_chain(), patch.model))
    ok = bool(lower <= area * (1 + 1e-9) + 1e-12)
    return result, DegreeReport(not mismatch, mismatch, ok, lower, area, samples)


def degree_json(cell: CellularTwoChain, rep: DegreeReport) -> str:
    return json.dumps({
        "degrees": {str(k): v for k, v in sorted(cell.coefficients.items())},
        "boundary_ok": rep.boundary_ok,
        "boundary_mismatch": {str(k): v for k, v in sorted(rep.boundary_mismatch.items())},
        "area_bound_ok": rep.area_ok,
        "area_lower": rep.area_lower,
        "chain_area": rep.chain_area,
        "area_slack": rep.area_slack,
    }, indent=1, sort_keys=True) + "\n"


@dataclass
class AreaCertificate:
    area: int
    bound: float
    empirical_C: float
    min_area: float
    cellular: CellularTwoChain
    report: DegreeReport


def combinatorial_area_from_geometric(loop: SkeletonLoop, filling: PLChain, patch: TriangulatedPatch,
                                      config: PushConfig | None = None, seed: int = 0) -> AreaCertificate:
    """Push a filling into the 2-skeleton, read off its degrees and count cells.

    Certifies ``sum |d| <= C * area(filling) / minArea`` where ``C`` is the
    pushing constant measured on this run (1 when nothing is pushed).
    """
    config = config or PushConfig(seed=seed)
    C = 1.0
    if filling.dim < patch.top_dim:
        R, _, rep = push_chain(filling, patch, config)
        C = rep.empirical_C
        pushed = tag_pieces(R, patch)
    else:
        pushed = tag_pieces(filling, patch)
    pushed.boundary = loop
    cell, drep = extract_cellular(pushed, patch, seed=seed)
    if not drep.boundary_ok:
        raise DegreeError(f"cellular boundary differs from the loop on edges {sorted(drep.boundary_mismatch)}")
    if not drep.area_ok:
        raise DegreeError("area sandwich violated")
    min_area = min(patch.simplex_volume(2, s) for s in range(patch.cell_count))
    total = cell.norm()
    bound = C * volume(filling, patch.model) / min_area
    if total > bound * (1 + 1e-9):
        raise DegreeError(f"cell count {total} exceeds the certified bound {bound}")
    return AreaCertificate(total, bound, C, min_area, cell, drep)
