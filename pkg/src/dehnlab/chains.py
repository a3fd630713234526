"""Cellular 2-chains, boundary operators and the L1 filling norm.

A 2-complex here is anything with ``edge_count``, ``cell_count`` and
``boundary_columns()`` (one ``{edge id: coefficient}`` dict per 2-cell);
both :class:`~dehnlab.groups.CayleyBall` and
:class:`~dehnlab.geometry.TriangulatedPatch` qualify.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import optimize, sparse


class Infeasible(ValueError):
    """The cycle does not bound inside the given finite complex."""


@dataclass
class CellularTwoChain:
    coefficients: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.coefficients = {int(c): int(v) for c, v in self.coefficients.items() if v}

    def norm(self) -> int:
        return sum(abs(v) for v in self.coefficients.values())

    def __neg__(self) -> "CellularTwoChain":
        return CellularTwoChain({c: -v for c, v in self.coefficients.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, CellularTwoChain):
            return NotImplemented
        return self.coefficients == other.coefficients

    def boundary(self, complex_) -> dict[int, int]:
        return boundary_2(self.coefficients, complex_)

    def to_json(self) -> str:
        return json.dumps({str(c): v for c, v in sorted(self.coefficients.items())}, indent=1)


def boundary_2(coefficients: dict, complex_) -> dict:
    """Boundary of a 2-chain as an ``{edge id: coefficient}`` dict."""
    cols = complex_.boundary_columns()
    out: dict = {}
    for c, v in coefficients.items():
        for e, s in cols[c].items():
            out[e] = out.get(e, 0) + s * v
    return {e: v for e, v in out.items() if v}


def boundary_matrix(complex_) -> sparse.csc_matrix:
    rows, cols, vals = [], [], []
    for c, col in enumerate(complex_.boundary_columns()):
        for e, s in col.items():
            rows.append(e)
            cols.append(c)
            vals.append(s)
    return sparse.csc_matrix(
        (vals, (rows, cols)), shape=(complex_.edge_count, complex_.cell_count), dtype=float
    )


@dataclass
class FillingNorm:
    """Exact optimum of ``min |x|_1`` subject to ``d2 x = y``.

    ``chain`` is an optimal rational 2-chain and ``dual`` a rational edge
    cochain with ``|d2^T dual| <= 1`` and ``<y, dual> = value``, which
    proves optimality.  ``certified`` is False only if no rational
    certificate could be recovered from the floating-point solve.
    """

    value: Fraction
    chain: dict[int, Fraction]
    dual: dict[int, Fraction]
    certified: bool

    @property
    def integral(self) -> bool:
        return all(v.denominator == 1 for v in self.chain.values()) and self.value.denominator == 1

    def as_cellular(self) -> CellularTwoChain:
        if not self.integral:
            raise ValueError("optimal filling is not integral")
        return CellularTwoChain({c: int(v) for c, v in self.chain.items()})


def _rationalize(values, limit: int) -> list[Fraction]:
    return [Fraction(float(v)).limit_denominator(limit) for v in values]


def _check_certificate(cols, y, x, lam) -> Fraction | None:
    """Exact feasibility and duality-gap check; returns the value or ``None``."""
    bx: dict[int, Fraction] = {}
    for c, xc in enumerate(x):
        if xc:
            for e, s in cols[c].items():
                bx[e] = bx.get(e, 0) + s * xc
    keys = set(bx) | set(y)
    if any(bx.get(e, 0) != y.get(e, 0) for e in keys):
        return None
    for col in cols:
        if abs(sum(s * lam[e] for e, s in col.items())) > 1:
            return None
    primal = sum(abs(v) for v in x)
    dual = sum(v * lam[e] for e, v in y.items())
    return primal if primal == dual else None


def filling_norm(y: dict[int, int], complex_) -> FillingNorm:
    """Minimal L1 mass of a real 2-chain with boundary ``y``, as an exact rational.

    The LP is solved in floating point by HiGHS; the primal and dual
    solutions are then rounded to nearby rationals and checked exactly.
    """
    y = {int(e): int(v) for e, v in y.items() if v}
    cols = complex_.boundary_columns()
    n_cells, n_edges = complex_.cell_count, complex_.edge_count
    # the cycle condition is necessary for any filling
    if not y:
        return FillingNorm(Fraction(0), {}, {}, True)
    if any(e < 0 or e >= n_edges for e in y):
        raise ValueError("cycle uses edges outside the complex")
    if n_cells == 0:
        raise Infeasible("complex has no 2-cells")
    d = boundary_matrix(complex_)
    b = np.zeros(n_edges)
    for e, v in y.items():
        b[e] = v
    a_eq = sparse.hstack([d, -d]).tocsc()
    res = optimize.linprog(
        np.ones(2 * n_cells), A_eq=a_eq, b_eq=b, bounds=(0, None), method="highs"
    )
    if res.status == 2:
        raise Infeasible("cycle does not bound in this complex; enlarge the patch")
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    xf = res.x[:n_cells] - res.x[n_cells:]
    lamf = res.eqlin.marginals
    for limit in (1, 1000, 10**6, 10**9):
        x = _rationalize(xf, limit)
        lam = _rationalize(lamf, limit)
        value = _check_certificate(cols, y, x, lam)
        if value is not None:
            chain = {c: v for c, v in enumerate(x) if v}
            dual = {e: v for e, v in enumerate(lam) if v}
            return FillingNorm(value, chain, dual, True)
    x = _rationalize(xf, 10**9)
    return FillingNorm(
        sum((abs(v) for v in x), Fraction(0)),
        {c: v for c, v in enumerate(x) if v},
        {},
        False,
    )


def winding_number(point, polygon) -> int:
    """Signed number of turns of the closed polygon around ``point`` (crossing rule)."""
    px, py = float(point[0]), float(point[1])
    pts = np.asarray(polygon, dtype=float)
    wn = 0
    for (x0, y0), (x1, y1) in zip(pts, np.roll(pts, -1, axis=0)):
        if y0 <= py < y1 or y1 <= py < y0:
            cross = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)
            if cross == 0:
                raise ValueError("point lies on the polygon")
            if y1 > y0 and cross > 0:
                wn += 1
            elif y1 < y0 and cross < 0:
                wn -= 1
        elif y0 == y1 == py and min(x0, x1) <= px <= max(x0, x1):
            raise ValueError("point lies on the polygon")
    return wn


def _on_polygon(point, polygon, tol: float) -> bool:
    pts = np.asarray(polygon, dtype=float)
    a, b = pts, np.roll(pts, -1, axis=0)
    ab = b - a
    L = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("ij,ij->i", np.asarray(point) - a, ab) / np.where(L > 0, L, 1), 0, 1)
    d = np.linalg.norm(a + t[:, None] * ab - point, axis=1)
    return bool(np.any(d <= tol))


def winding_filling(loop, patch, tol: float = 1e-9) -> CellularTwoChain:
    """Coefficient of each triangle = winding number of ``loop`` about its barycentre.

    Triangles are oriented by their sorted vertex order, so the winding
    number is negated on triangles whose sorted order is clockwise.

    ``loop`` is a closed vertex sequence (or anything with ``.vertices``);
    ``patch`` must be planar in its chart (E^2, or H^2 via the Klein disc).
    """
    verts = list(getattr(loop, "vertices", loop))
    if len(verts) > 1 and verts[0] == verts[-1]:
        verts = verts[:-1]
    chart = patch.chart_vertices()
    if chart.shape[1] != 2:
        raise ValueError("winding filling needs a planar patch")
    poly = chart[verts]
    tris = patch.simplices[2]
    coeffs = {}
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    rng = np.random.default_rng(0)
    for t, tri in enumerate(tris):
        p = chart[list(tri)].mean(axis=0)
        if np.any(p < lo - tol) or np.any(p > hi + tol):
            continue
        if _on_polygon(p, poly, tol):
            # perturb once inside the triangle
            w = rng.dirichlet(np.ones(3))
            p = w @ chart[list(tri)]
            if _on_polygon(p, poly, tol):
                raise ValueError(f"barycentre of triangle {t} lies on the loop")
        wn = winding_number(p, poly)
        if wn:
            a, b, c = chart[list(tri)]
            orient = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
            coeffs[t] = wn if orient > 0 else -wn
    return CellularTwoChain(coeffs)
