"""Model geometries, triangulated patches, PL chains and skeleton loops.

Three model spaces are built in: the Euclidean plane and space (``E2``,
``E3``) and the hyperbolic plane (``H2``) in hyperboloid coordinates.  Every
simplex is straight in a *chart*: the identity for Euclidean models and the
Klein disc for ``H2``, where geodesics are chords.  Incidence tests, clipping
and barycentric coordinates all happen in the chart; lengths and areas use
the model metric.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import optimize
from scipy.spatial import cKDTree

from . import hyperbolic as hyp
from .groups import SurfaceGroupModel, cayley_ball

SKELETON_TOL = 1e-9


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ModelGeometry:
    kind: str  # "E2", "E3" or "H2"

    def __post_init__(self):
        if self.kind not in ("E2", "E3", "H2"):
            raise GeometryError(f"unknown model {self.kind!r}")

    @property
    def dim(self) -> int:
        return 3 if self.kind == "E3" else 2

    @property
    def coord_dim(self) -> int:
        return 2 if self.kind == "E2" else 3

    def check(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.shape[-1] != self.coord_dim or not np.all(np.isfinite(pts)):
            raise GeometryError(f"coordinates do not fit model {self.kind}")
        if self.kind == "H2":
            q = pts[..., 2] ** 2 - pts[..., 0] ** 2 - pts[..., 1] ** 2
            if np.any(pts[..., 2] <= 0) or np.any(np.abs(q - 1) > 1e-9 * np.maximum(1, pts[..., 2] ** 2)):
                raise GeometryError("point off the hyperboloid")
        return pts

    def to_chart(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return hyp.to_klein(pts) if self.kind == "H2" else pts

    def from_chart(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return hyp.from_klein(pts) if self.kind == "H2" else pts

    def distance(self, p, q) -> float:
        if self.kind == "H2":
            return hyp.distance(p, q)
        return float(np.linalg.norm(np.asarray(q, float) - np.asarray(p, float)))

    def segment_lengths(self, a, b) -> np.ndarray:
        a, b = np.atleast_2d(a), np.atleast_2d(b)
        if self.kind == "H2":
            c = a[:, 2] * b[:, 2] - a[:, 0] * b[:, 0] - a[:, 1] * b[:, 1]
            return np.arccosh(np.maximum(c, 1.0))
        return np.linalg.norm(b - a, axis=1)

    def triangle_area(self, a, b, c) -> float:
        if self.kind == "H2":
            return hyp.triangle_area(a, b, c)
        u = np.asarray(b, float) - np.asarray(a, float)
        v = np.asarray(c, float) - np.asarray(a, float)
        if self.kind == "E2":
            return 0.5 * abs(u[0] * v[1] - u[1] * v[0])
        return 0.5 * float(np.linalg.norm(np.cross(u, v)))

    def simplex_volume(self, pts) -> float:
        pts = np.asarray(pts, dtype=float)
        k = len(pts) - 1
        if k == 0:
            return 0.0
        if k == 1:
            return self.distance(pts[0], pts[1])
        if k == 2:
            return self.triangle_area(*pts)
        if self.kind == "H2":
            raise GeometryError("H2 has no 3-simplices")
        m = pts[1:] - pts[0]
        return abs(float(np.linalg.det(m))) / 6.0

    def point_on_segment(self, p, q, t: float) -> np.ndarray:
        """Point at arc-length fraction ``t`` from ``p`` towards ``q``."""
        p, q = np.asarray(p, float), np.asarray(q, float)
        if self.kind != "H2":
            return p + t * (q - p)
        d = hyp.distance(p, q)
        if d == 0:
            return p.copy()
        return hyp.normalize((math.sinh((1 - t) * d) * p + math.sinh(t * d) * q) / math.sinh(d))


E2 = ModelGeometry("E2")
E3 = ModelGeometry("E3")
H2 = ModelGeometry("H2")


def _faces(simplex: tuple[int, ...], dim: int):
    return itertools.combinations(simplex, dim + 1)


@dataclass
class Location:
    dim: int
    simplex: int
    bary: np.ndarray


@dataclass
class TriangulatedPatch:
    """A finite simplicial complex with model coordinates.

    ``simplices[d]`` lists the ``d``-simplices as sorted vertex tuples for
    ``d = 1 .. top``.  Edges are oriented from lower to higher vertex id and
    a triangle ``(i, j, k)`` has boundary ``[j,k] - [i,k] + [i,j]``.
    ``deck`` holds matrices acting on coordinates (homogeneous for the
    Euclidean models, Lorentz matrices for ``H2``).
    """

    model: ModelGeometry
    vertices: np.ndarray
    simplices: dict[int, list[tuple[int, ...]]]
    deck: list[np.ndarray] = field(default_factory=list)
    name: str = ""

    @classmethod
    def from_top(cls, model, vertices, top: list[tuple[int, ...]], deck=(), name=""):
        top = sorted(tuple(sorted(s)) for s in top)
        dim = len(top[0]) - 1
        simplices = {dim: top}
        for d in range(1, dim):
            simplices[d] = sorted({f for s in top for f in _faces(s, d)})
        return cls(model, np.asarray(vertices, dtype=float), simplices, list(deck), name)

    @property
    def top_dim(self) -> int:
        return max(self.simplices)

    @cached_property
    def _indices(self) -> dict[int, dict[tuple[int, ...], int]]:
        return {d: {s: i for i, s in enumerate(ss)} for d, ss in self.simplices.items()}

    def simplex_id(self, dim: int, verts) -> int:
        return self._indices[dim][tuple(sorted(verts))]

    def has_simplex(self, dim: int, verts) -> bool:
        return tuple(sorted(verts)) in self._indices.get(dim, {})

    @cached_property
    def chart(self) -> np.ndarray:
        return self.model.to_chart(self.vertices)

    def chart_vertices(self) -> np.ndarray:
        return self.chart

    # cellular structure used by the filling-norm LP and degree checks
    @property
    def edge_count(self) -> int:
        return len(self.simplices[1])

    @property
    def cell_count(self) -> int:
        return len(self.simplices.get(2, []))

    def boundary_columns(self, dim: int = 2) -> list[dict[int, int]]:
        idx = self._indices[dim - 1]
        cols = []
        for s in self.simplices[dim]:
            col = {}
            for j in range(len(s)):
                face = s[:j] + s[j + 1 :]
                col[idx[face]] = (-1) ** j
            cols.append(col)
        return cols

    def edge_path_chain(self, verts) -> dict[int, int]:
        """Cellular 1-chain of the closed vertex path ``verts``."""
        chain: dict[int, int] = {}
        n = len(verts)
        if n < 2:
            return chain
        for a, b in zip(verts, list(verts[1:]) + [verts[0]]):
            if a == b:
                continue
            e = self._indices[1].get((min(a, b), max(a, b)))
            if e is None:
                raise GeometryError(f"vertices {a} and {b} are not adjacent")
            chain[e] = chain.get(e, 0) + (1 if a < b else -1)
        return {e: c for e, c in chain.items() if c}

    def simplex_coords(self, dim: int, sid: int) -> np.ndarray:
        return self.vertices[list(self.simplices[dim][sid])]

    def simplex_volume(self, dim: int, sid: int) -> float:
        return self.model.simplex_volume(self.simplex_coords(dim, sid))

    @cached_property
    def _top_affine(self):
        """Per top simplex: (origin, inverse edge matrix) in chart coordinates."""
        top = self.top_dim
        pts = self.chart[np.array(self.simplices[top])]
        origin = pts[:, 0]
        edges = pts[:, 1:] - origin[:, None, :]
        return origin, np.linalg.inv(np.transpose(edges, (0, 2, 1)))

    @cached_property
    def _top_boxes(self):
        top = self.top_dim
        pts = self.chart[np.array(self.simplices[top])]
        return pts.min(axis=1), pts.max(axis=1)

    def barycentric(self, chart_point, top_ids=None) -> tuple[np.ndarray, np.ndarray]:
        origin, inv = self._top_affine
        if top_ids is None:
            top_ids = np.arange(len(origin))
        rel = np.asarray(chart_point, float) - origin[top_ids]
        mu = np.einsum("nij,nj->ni", inv[top_ids], rel)
        lam = np.concatenate([1 - mu.sum(axis=1, keepdims=True), mu], axis=1)
        return top_ids, lam

    def candidates(self, chart_point, tol: float = 1e-9) -> np.ndarray:
        lo, hi = self._top_boxes
        p = np.asarray(chart_point, float)
        return np.nonzero(np.all(lo - tol <= p, axis=1) & np.all(p <= hi + tol, axis=1))[0]

    def locate(self, point, tol: float = 1e-12) -> Location:
        """Lowest-dimensional simplex containing ``point`` (model coordinates)."""
        c = self.model.to_chart(self.model.check(point))
        ids = self.candidates(c, 1e-9)
        if len(ids) == 0:
            raise GeometryError("point outside the patch")
        ids, lam = self.barycentric(c, ids)
        ok = np.all(lam >= -tol, axis=1)
        if not np.any(ok):
            raise GeometryError("point outside the patch")
        j = int(np.nonzero(ok)[0][0])
        lam = np.where(np.abs(lam[j]) <= tol, 0.0, lam[j])
        simplex = self.simplices[self.top_dim][ids[j]]
        keep = [i for i in range(len(simplex)) if lam[i] > 0]
        face = tuple(simplex[i] for i in keep)
        bary = lam[keep] / lam[keep].sum()
        dim = len(face) - 1
        if dim == 0:
            return Location(0, face[0], np.array([1.0]))
        return Location(dim, self.simplex_id(dim, face), bary)

    def check_valid(self, tol: float = 1e-9) -> bool:
        """Exhaustive pairwise test that top simplices meet in common faces."""
        top = self.top_dim
        sims = self.simplices[top]
        pts = self.chart[np.array(sims)]
        for s in range(len(sims)):
            if self.model.simplex_volume(self.vertices[list(sims[s])]) <= tol:
                return False
        lo, hi = self._top_boxes
        for s, t in itertools.combinations(range(len(sims)), 2):
            if np.any(lo[s] > hi[t] + tol) or np.any(lo[t] > hi[s] + tol):
                continue
            if not _meet_in_face(sims[s], sims[t], pts[s], pts[t], tol):
                return False
        # codimension-one faces have at most two cofaces
        count: dict = {}
        for s in sims:
            for f in _faces(s, top - 1):
                count[f] = count.get(f, 0) + 1
        return max(count.values()) <= 2

    def deck_image(self, g: np.ndarray, pts: np.ndarray) -> np.ndarray:
        if self.model.kind == "H2":
            return pts @ g.T
        homog = np.concatenate([pts, np.ones((len(pts), 1))], axis=1)
        return (homog @ g.T)[:, :-1]

    def check_deck_invariance(self, tol: float = 1e-9) -> tuple[int, int]:
        """Map every top simplex by every deck generator; count images inside the patch.

        Returns ``(checked, mismatched)``; an image whose vertices all lie in
        the patch must itself be a simplex of the patch.
        """
        tree = cKDTree(self.vertices)
        top = self.top_dim
        checked = bad = 0
        for g in self.deck:
            for ginv in (g, np.linalg.inv(g)):
                img = self.deck_image(ginv, self.vertices)
                dist, idx = tree.query(img)
                scale = np.maximum(1.0, np.abs(img).max(axis=1))
                inside = dist <= tol * scale
                for s in self.simplices[top]:
                    if all(inside[list(s)]):
                        checked += 1
                        if not self.has_simplex(top, [idx[v] for v in s]):
                            bad += 1
        return checked, bad

    def to_json(self) -> str:
        data = {
            "model": self.model.kind,
            "name": self.name,
            "vertices": self.vertices.tolist(),
            "simplices": {f"d{d}": [list(s) for s in ss] for d, ss in sorted(self.simplices.items())},
            "deck": [g.tolist() for g in self.deck],
        }
        return dumps(data)

    @classmethod
    def from_json(cls, text: str) -> "TriangulatedPatch":
        data = json.loads(text)
        simplices = {int(k[1:]): [tuple(s) for s in v] for k, v in data["simplices"].items()}
        top = max(simplices)
        model = ModelGeometry(data["model"])
        patch = cls.from_top(model, data["vertices"], simplices[top],
                             [np.array(g, dtype=float) for g in data.get("deck", [])],
                             data.get("name", ""))
        model.check(patch.vertices)
        return patch


def _meet_in_face(s, t, ps, pt, tol) -> bool:
    """True when the two simplices intersect only within their common face."""
    shared = set(s) & set(t)
    own_s = [i for i, v in enumerate(s) if v not in shared]
    own_t = [i for i, v in enumerate(t) if v not in shared]
    if not own_s and not own_t:
        return True
    n, m = len(s), len(t)
    # variables alpha (n), beta (m); sum alpha = sum beta = 1; alpha.ps = beta.pt
    a_eq = np.zeros((2 + ps.shape[1], n + m))
    a_eq[0, :n] = 1
    a_eq[1, n:] = 1
    a_eq[2:, :n] = ps.T
    a_eq[2:, n:] = -pt.T
    b_eq = np.zeros(2 + ps.shape[1])
    b_eq[:2] = 1
    c = np.zeros(n + m)
    c[own_s] = -1
    c[[n + j for j in own_t]] = -1
    res = optimize.linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return res.status == 2 or (res.status == 0 and -res.fun <= tol)


def build_grid_E2(extent: int) -> TriangulatedPatch:
    """Unit squares on ``[-extent, extent]^2``, each cut by its SW-NE diagonal."""
    if extent < 1:
        raise GeometryError("extent must be at least 1")
    n = extent
    side = 2 * n + 1
    coords = [(x, y) for x in range(-n, n + 1) for y in range(-n, n + 1)]

    def vid(x, y):
        return (x + n) * side + (y + n)

    tris = []
    for x in range(-n, n):
        for y in range(-n, n):
            sw, se, ne, nw = vid(x, y), vid(x + 1, y), vid(x + 1, y + 1), vid(x, y + 1)
            tris.append((sw, se, ne))
            tris.append((sw, ne, nw))
    deck = [np.array([[1.0, 0, 1], [0, 1, 0], [0, 0, 1]]), np.array([[1.0, 0, 0], [0, 1, 1], [0, 0, 1]])]
    return TriangulatedPatch.from_top(E2, coords, tris, deck, f"grid_E2_{n}")


def build_grid_E3(extent: int) -> TriangulatedPatch:
    """Unit cubes on ``[-extent, extent]^3``, each cut into six Kuhn tetrahedra."""
    if extent < 1:
        raise GeometryError("extent must be at least 1")
    n = extent
    side = 2 * n + 1
    coords = [(x, y, z) for x in range(-n, n + 1) for y in range(-n, n + 1) for z in range(-n, n + 1)]

    def vid(p):
        return ((p[0] + n) * side + (p[1] + n)) * side + (p[2] + n)

    tets = []
    for corner in itertools.product(range(-n, n), repeat=3):
        for perm in itertools.permutations(range(3)):
            p = list(corner)
            tet = [vid(p)]
            for axis in perm:
                p[axis] += 1
                tet.append(vid(p))
            tets.append(tuple(tet))
    deck = []
    for axis in range(3):
        g = np.eye(4)
        g[axis, 3] = 1.0
        deck.append(g)
    return TriangulatedPatch.from_top(E3, coords, tets, deck, f"grid_E3_{n}")


MAX_H2_RADIUS = 4


def build_H2_tiling(radius: int) -> TriangulatedPatch:
    """Octagon tiles of the genus-2 group within word distance ``radius - 1``,
    each coned from its centre into eight triangles."""
    if radius < 1:
        raise GeometryError("radius must be at least 1")
    if radius > MAX_H2_RADIUS:
        raise GeometryError(f"radius {radius} exceeds the growth guard {MAX_H2_RADIUS}")
    model = SurfaceGroupModel()
    ball = cayley_ball(model, radius - 1)
    oct_ = model.octagons
    points: list[np.ndarray] = []
    tris = []
    for w in ball.elements:
        m = oct_.matrix(w)
        corners = [hyp.normalize(m @ v) for v in oct_.vertices]
        centre = hyp.normalize(m @ hyp.ORIGIN)
        base = len(points)
        points.append(centre)
        points.extend(corners)
        for j in range(8):
            tris.append((base, base + 1 + j, base + 1 + (j + 1) % 8))
    pts = np.array(points)
    # merge coincident tile corners; distinct vertices are >= 2 apart
    tree = cKDTree(pts)
    rep = np.arange(len(pts))
    for i, j in sorted(tree.query_pairs(0.5)):
        rep[j] = min(rep[j], rep[i])
    for i in range(len(rep)):
        while rep[rep[i]] != rep[i]:
            rep[i] = rep[rep[i]]
    keep = sorted(set(rep.tolist()))
    new_id = {old: k for k, old in enumerate(keep)}
    verts = pts[keep]
    tris = [tuple(new_id[rep[v]] for v in t) for t in tris]
    deck = [oct_.matrices[x] for x in (1, 2, 3, 4)]
    return TriangulatedPatch.from_top(H2, verts, tris, deck, f"h2_tiling_{radius}")


# ---------------------------------------------------------------- PL chains


@dataclass
class Piece:
    coords: np.ndarray
    multiplicity: int = 1
    closed: bool = False
    tag: int | None = None

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)


@dataclass
class PLChain:
    """Dimension 1: polylines (``closed`` adds the wrap-around segment).
    Dimension 2: triangles.  Dimension 3: tetrahedra (homotopies of 2-chains)."""

    dim: int
    pieces: list[Piece] = field(default_factory=list)

    def segments(self):
        """Yield ``(a, b, multiplicity)`` for every segment of a 1-chain."""
        for p in self.pieces:
            c = p.coords
            for j in range(len(c) - 1):
                yield c[j], c[j + 1], p.multiplicity
            if p.closed and len(c) > 1:
                yield c[-1], c[0], p.multiplicity

    def reversed(self) -> "PLChain":
        out = []
        for p in self.pieces:
            if self.dim == 1:
                out.append(Piece(p.coords[::-1].copy(), p.multiplicity, p.closed, p.tag))
            else:
                out.append(Piece(p.coords, -p.multiplicity, p.closed, p.tag))
        return PLChain(self.dim, out)

    def to_json(self) -> str:
        return dumps({
            "dim": self.dim,
            "pieces": [
                {"coords": p.coords.tolist(), "multiplicity": p.multiplicity, "closed": p.closed,
                 **({"tag": p.tag} if p.tag is not None else {})}
                for p in self.pieces
            ],
        })

    @classmethod
    def from_json(cls, text: str) -> "PLChain":
        data = json.loads(text)
        return cls(int(data["dim"]), [
            Piece(p["coords"], int(p.get("multiplicity", 1)), bool(p.get("closed", False)), p.get("tag"))
            for p in data["pieces"]
        ])


def polyline(points, closed: bool = True, multiplicity: int = 1) -> PLChain:
    return PLChain(1, [Piece(np.asarray(points, float), multiplicity, closed)])


def volume(chain: PLChain, model: ModelGeometry) -> float:
    """Total length / area / volume, multiplicities weighted by absolute value."""
    total = 0.0
    if chain.dim == 1:
        for p in chain.pieces:
            c = model.check(p.coords)
            if len(c) < 2:
                continue
            a, b = c, np.roll(c, -1, axis=0)
            if not p.closed:
                a, b = c[:-1], c[1:]
            total += abs(p.multiplicity) * float(model.segment_lengths(a, b).sum())
        return total
    for p in chain.pieces:
        total += abs(p.multiplicity) * model.simplex_volume(model.check(p.coords))
    return total


def _subdivide_simplex(coords: np.ndarray, m: int) -> list[np.ndarray]:
    """Uniform subdivision of a triangle (chart coordinates) into m^2 triangles."""
    a, b, c = coords

    def pt(i, j):
        k = m - i - j
        return (i * a + j * b + k * c) / m

    out = []
    for i in range(m):
        for j in range(m - i):
            out.append(np.array([pt(i + 1, j), pt(i, j + 1), pt(i, j)]))
            if i + j < m - 1:
                out.append(np.array([pt(i + 1, j), pt(i + 1, j + 1), pt(i, j + 1)]))
    return out


def refine_chain(chain: PLChain, max_edge: float, model: ModelGeometry = E2) -> PLChain:
    """Subdivide until every segment / triangle edge is at most ``max_edge`` long."""
    if max_edge <= 0:
        raise GeometryError("max_edge must be positive")
    out = []
    if chain.dim == 1:
        for p in chain.pieces:
            c = p.coords
            n = len(c)
            pts = []
            last = n if p.closed else n - 1
            for j in range(last):
                a, b = c[j], c[(j + 1) % n]
                m = max(1, math.ceil(model.distance(a, b) / max_edge - 1e-12))
                pts.append(a)
                for s in range(1, m):
                    pts.append(model.point_on_segment(a, b, s / m))
            if not p.closed:
                pts.append(c[-1])
            out.append(Piece(np.array(pts), p.multiplicity, p.closed, p.tag))
        return PLChain(1, out)
    if chain.dim != 2:
        raise GeometryError("refinement is implemented for 1- and 2-chains")
    for p in chain.pieces:
        k = model.to_chart(p.coords)
        m = 1
        while True:
            subs = _subdivide_simplex(k, m)
            longest = max(
                model.distance(*model.from_chart(np.array([s[i], s[(i + 1) % 3]])))
                for s in subs for i in range(3)
            )
            if longest <= max_edge * (1 + 1e-12):
                break
            m *= 2
        for s in (subs if m > 1 else [k]):
            out.append(Piece(model.from_chart(s) if m > 1 else p.coords, p.multiplicity, False, p.tag))
    return PLChain(2, out)


# ----------------------------------------------------------- skeleton loops


@dataclass
class SkeletonLoop:
    """Closed edge path given by its vertex sequence (the return edge is implicit)."""

    vertices: list[int]

    def edges(self, patch: TriangulatedPatch) -> list[tuple[int, int]]:
        """Oriented edges as ``(edge id, +1 | -1)``."""
        vs = self.vertices
        if len(vs) < 2:
            return []
        out = []
        for a, b in zip(vs, vs[1:] + vs[:1]):
            out.append((patch.simplex_id(1, (a, b)), 1 if a < b else -1))
        return out

    def check(self, patch: TriangulatedPatch) -> None:
        vs = self.vertices
        if len(vs) == 2:
            raise GeometryError("two-vertex loop is an unreduced backtrack")
        for a, b in zip(vs, vs[1:] + vs[:1]):
            if len(vs) > 1 and not patch.has_simplex(1, (a, b)):
                raise GeometryError(f"loop jumps between non-adjacent vertices {a}, {b}")

    def cycle(self, patch: TriangulatedPatch) -> dict[int, int]:
        return patch.edge_path_chain(self.vertices)

    def length(self, patch: TriangulatedPatch) -> float:
        vs = self.vertices
        if len(vs) < 2:
            return 0.0
        a = patch.vertices[vs]
        b = patch.vertices[vs[1:] + vs[:1]]
        return float(patch.model.segment_lengths(a, b).sum())

    def polyline(self, patch: TriangulatedPatch) -> PLChain:
        return polyline(patch.vertices[self.vertices], closed=True)


def _nearest_on_edges(patch: TriangulatedPatch, c: np.ndarray):
    """Distance from chart point ``c`` to every edge, plus the edge parameter."""
    e = np.array(patch.simplices[1])
    a = patch.chart[e[:, 0]]
    b = patch.chart[e[:, 1]]
    ab = b - a
    t = np.clip(np.einsum("ij,ij->i", c - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
    d = np.linalg.norm(a + t[:, None] * ab - c, axis=1)
    return d, t


def _position(patch, c, tol):
    """Graph position of a chart point: ``("v", vid)`` or ``("e", eid, t)``."""
    dv = np.linalg.norm(patch.chart - c, axis=1)
    v = int(np.argmin(dv))
    if dv[v] <= tol:
        return ("v", v)
    d, t = _nearest_on_edges(patch, c)
    e = int(np.argmin(d))
    if d[e] > tol:
        raise GeometryError(f"point {c} is {d[e]:.3g} away from the 1-skeleton")
    return ("e", e, float(t[e]))


def _closure(patch, pos) -> set:
    if pos[0] == "v":
        return {("v", pos[1])}
    a, b = patch.simplices[1][pos[1]]
    return {("e", pos[1]), ("v", a), ("v", b)}


def _edge_of(patch, p, q):
    """Edge id whose closure holds both positions, or None."""
    for pos in (p, q):
        if pos[0] == "e":
            a, b = patch.simplices[1][pos[1]]
            other = q if pos is p else p
            if other[0] == "e" and other[1] != pos[1]:
                return None
            if other[0] == "v" and other[1] not in (a, b):
                return None
            return pos[1]
    if p[1] == q[1]:
        return -1  # same vertex
    e = patch._indices[1].get((min(p[1], q[1]), max(p[1], q[1])))
    return e


def _param(patch, pos, e) -> float:
    """Parameter of a position along edge ``e`` (0 at the lower vertex)."""
    if pos[0] == "e":
        return pos[2]
    return 0.0 if patch.simplices[1][e][0] == pos[1] else 1.0


def _is_backtrack(patch, p1, p2, q) -> bool:
    if p1 == q:
        return True
    e = _edge_of(patch, p1, p2)
    if e is None or e < 0 or _edge_of(patch, p2, q) != e:
        return False
    s1, s2, s3 = _param(patch, p1, e), _param(patch, p2, e), _param(patch, q, e)
    return (s2 - s1) * (s3 - s2) < 0


def combinatorialize_loop(eta: PLChain, patch: TriangulatedPatch, tol: float = SKELETON_TOL):
    """Replace a loop lying in the 1-skeleton by a closed edge path.

    Partial-edge backtracks are collapsed first (a homotopy inside the graph,
    so it sweeps no area); the remaining off-vertex points are snapped to
    their nearest edge endpoint.  Returns ``(SkeletonLoop, homotopy_area)``
    where the area is the summed length of the snap segments.
    """
    if eta.dim != 1 or len(eta.pieces) != 1 or not eta.pieces[0].closed:
        raise GeometryError("expected a single closed polyline")
    model = patch.model
    coords = eta.pieces[0].coords
    chart = model.to_chart(model.check(coords))
    n = len(chart)
    # split segments at patch vertices they pass through
    pts = []
    for j in range(n):
        a, b = chart[j], chart[(j + 1) % n]
        pts.append(a)
        ab = b - a
        L2 = float(ab @ ab)
        if L2 == 0:
            continue
        t = (patch.chart - a) @ ab / L2
        d = np.linalg.norm(a + t[:, None] * ab - patch.chart, axis=1)
        hits = np.nonzero((d <= tol) & (t > 1e-12) & (t < 1 - 1e-12))[0]
        for v in sorted(hits, key=lambda v: t[v]):
            pts.append(patch.chart[v])
    positions = [_position(patch, c, tol) for c in pts]
    m = len(positions)
    for j in range(m):
        p, q = positions[j], positions[(j + 1) % m]
        if _edge_of(patch, p, q) is None:
            raise GeometryError("loop segment leaves the 1-skeleton")
    # collapse duplicates and partial-edge backtracks (cyclically)
    stack: list = []
    for pos in positions:
        if stack and stack[-1] == pos:
            continue
        while len(stack) >= 2 and _is_backtrack(patch, stack[-2], stack[-1], pos):
            stack.pop()
            if stack[-1] == pos:
                break
        if stack and stack[-1] == pos:
            continue
        stack.append(pos)
    changed = True
    while changed and len(stack) >= 3:
        changed = False
        if stack[-1] == stack[0]:
            stack.pop()
            changed = True
        elif _is_backtrack(patch, stack[-2], stack[-1], stack[0]):
            stack.pop()
            changed = True
        elif _is_backtrack(patch, stack[-1], stack[0], stack[1]):
            stack.pop(0)
            changed = True
    if len(stack) == 2 and _edge_of(patch, stack[0], stack[1]) is not None:
        stack = stack[:1]
    # snap
    area = 0.0
    verts = []
    for pos in stack:
        if pos[0] == "v":
            verts.append(pos[1])
            continue
        a, b = patch.simplices[1][pos[1]]
        p = model.from_chart((1 - pos[2]) * patch.chart[a] + pos[2] * patch.chart[b])
        da = model.distance(p, patch.vertices[a])
        db = model.distance(p, patch.vertices[b])
        v = a if da <= db else b
        area += min(da, db)
        verts.append(v)
    verts = _reduce_vertex_loop(verts)
    loop = SkeletonLoop(verts)
    loop.check(patch)
    return loop, area


def _reduce_vertex_loop(verts: list[int]) -> list[int]:
    """Cyclically remove repeats and backtracks ``u v u`` from a vertex loop."""
    out: list[int] = []
    for v in verts:
        if out and out[-1] == v:
            continue
        if len(out) >= 2 and out[-2] == v:
            out.pop()
            continue
        out.append(v)
    while len(out) >= 2:
        if out[0] == out[-1]:
            out.pop()
        elif len(out) >= 3 and out[1] == out[-1]:
            out = out[1:-1]
        else:
            break
    if len(out) == 2:
        out = out[:1]
    return out


# --------------------------------------------------------------- JSON output


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            raise ValueError("non-finite float in output")
        s = f"{x:.17g}"
        return s if any(ch in s for ch in ".en") else s + ".0"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    raise TypeError(f"cannot serialise {type(x).__name__}")


def dumps(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    return _fmt(obj) + "\n"
