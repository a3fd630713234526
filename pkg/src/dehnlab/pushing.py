"""Pushing PL chains into the k-skeleton by radial projections.

Inside each i-simplex the chain is moved in two stages.  Stage one is the
radial projection from a centre ``u`` near the barycentre ``O`` onto the
sphere of radius ``2r`` about ``u``; stage two projects everything
centrally from ``O`` onto the boundary of the simplex.  Both stages fix the
simplex boundary, so boundaries of chains are preserved.

All projection work happens in *normalized* coordinates, where the simplex
is the regular simplex of edge length one centred at the origin.  The affine
map to model coordinates has a condition number that is folded into the
reported constants.

Only Euclidean patches (E2, E3) are pushed; chains already in the target
skeleton pass through any patch unchanged.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import PLChain, Piece, TriangulatedPatch, dumps, volume

FIX_TOL = 1e-12


class PushError(RuntimeError):
    pass


# ----------------------------------------------------------------- constants


def sphere_measure(n: int) -> float:
    """Surface measure of the unit ``n``-sphere in R^(n+1)."""
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def ball_volume(i: int, r: float) -> float:
    return math.pi ** (i / 2) / math.gamma(i / 2 + 1) * r**i


def compute_K(i: int, k: int, r: float) -> float:
    """``(2r)^k * integral over B(0,3r) of |w|^-k dw + vol_i(B(0,r))``.

    The integral is ``omega_{i-1} * (3r)^(i-k) / (i-k)`` in spherical coordinates.
    """
    if not i > k >= 1:
        raise ValueError("need i > k >= 1")
    if r <= 0:
        raise ValueError("r must be positive")
    return (2 * r) ** k * sphere_measure(i - 1) * (3 * r) ** (i - k) / (i - k) + ball_volume(i, r)


def v0_threshold(i: int, k: int, r: float = 1.0, margin: float = 1.0) -> float:
    """Smallest integer ``v0`` with ``K / v0 < vol_i(B(O, r))``, times ``margin``."""
    ratio = compute_K(i, k, r) / ball_volume(i, r)
    nearest = round(ratio)
    if abs(ratio - nearest) < 1e-9 * max(1.0, ratio):
        ratio = float(nearest)
    return margin * (math.floor(ratio) + 1)


# ---------------------------------------------------------- normalized frame


class NormalizedSimplex:
    """Regular ``i``-simplex of edge one, barycentre at the origin."""

    def __init__(self, i: int):
        self.i = i
        e = (np.eye(i + 1) - 1.0 / (i + 1)) / math.sqrt(2.0)
        # orthonormal basis of the sum-zero hyperplane
        q, _ = np.linalg.qr((np.eye(i + 1) - 1.0 / (i + 1))[:, :i])
        self.vertices = e @ q  # (i+1, i)
        self.inradius = 1.0 / math.sqrt(2.0 * i * (i + 1))
        self.circumradius = i * self.inradius
        self._inv = np.linalg.inv(np.vstack([self.vertices.T, np.ones(i + 1)]))

    def bary(self, y) -> np.ndarray:
        y = np.atleast_2d(y)
        rhs = np.hstack([y, np.ones((len(y), 1))])
        return rhs @ self._inv.T

    def point(self, lam) -> np.ndarray:
        return np.asarray(lam) @ self.vertices


_FRAMES: dict[int, NormalizedSimplex] = {}


def normalized_simplex(i: int) -> NormalizedSimplex:
    if i not in _FRAMES:
        _FRAMES[i] = NormalizedSimplex(i)
    return _FRAMES[i]


class SimplexFrame:
    """Affine correspondence between a patch simplex and the normalized simplex."""

    def __init__(self, coords: np.ndarray):
        self.coords = np.asarray(coords, dtype=float)
        self.i = len(coords) - 1
        self.ns = normalized_simplex(self.i)
        ev = (self.coords[1:] - self.coords[0]).T  # d x i
        en = (self.ns.vertices[1:] - self.ns.vertices[0]).T  # i x i
        self.linear = ev @ np.linalg.inv(en)
        s = np.linalg.svd(self.linear, compute_uv=False)
        self.s_max, self.s_min = float(s[0]), float(s[-1])
        self._pinv = np.linalg.pinv(ev)

    @property
    def distortion(self) -> float:
        return self.s_max / self.s_min

    def bary(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        mu = (x - self.coords[0]) @ self._pinv.T
        return np.hstack([1 - mu.sum(axis=1, keepdims=True), mu])

    def to_norm(self, x) -> np.ndarray:
        return self.ns.point(self.bary(x))

    def from_bary(self, lam) -> np.ndarray:
        return np.asarray(lam) @ self.coords


# --------------------------------------------------------------- configuration


@dataclass
class PushConfig:
    r_fraction: float = 1.0 / 3.0
    r_slack: float = 0.99
    v0_margin: float = 1.0
    max_retries: int = 64
    refine_tol: float = 1e-6
    refine_tol_surface: float = 1e-3  # 2-chains: inscribed areas converge only quadratically
    clearance_eps: float = 1e-9
    seed: int = 0
    max_refine_level: int = 12
    base_angle: float = math.pi / 16  # initial chord angle on the projection sphere

    def radius(self, i: int) -> float:
        r = self.r_slack * self.r_fraction * normalized_simplex(i).inradius
        if 3 * r > normalized_simplex(i).inradius:
            raise ValueError("r policy violates 3r <= inradius")
        return r


@dataclass
class SimplexReport:
    dim: int
    simplex: int
    vol_before: float
    vol_after: float
    blowup: float
    ratio: float
    centers_tried: int
    rejected: list[float]
    distortion: float
    v0_effective: float
    s_volume: float
    s_bound: float | None
    level: int
    center: list[float]


@dataclass
class PushReport:
    k: int
    per_simplex: list[SimplexReport] = field(default_factory=list)
    vol_T: float = 0.0
    vol_R: float = 0.0
    vol_S: float = 0.0
    s_bound: float | None = 0.0
    empirical_C: float = 1.0
    v0: dict[int, float] = field(default_factory=dict)
    v0_effective: float = 1.0
    config: dict = field(default_factory=dict)

    def check(self) -> None:
        for e in self.per_simplex:
            if e.vol_after > e.v0_effective * e.vol_before * (1 + 1e-9) + 1e-12:
                raise PushError(f"simplex {e.simplex}: blowup certificate violated")

    def to_json(self) -> str:
        return dumps({
            "k": self.k,
            "seed": self.config.get("seed"),
            "config": self.config,
            "totals": {
                "vol_T": self.vol_T,
                "vol_R": self.vol_R,
                "vol_S": self.vol_S,
                "s_bound": self.s_bound,
                "empirical_C": self.empirical_C,
                "v0": {str(i): v for i, v in sorted(self.v0.items())},
                "v0_effective": self.v0_effective,
            },
            "per_simplex": [asdict(e) for e in self.per_simplex],
        })


# ------------------------------------------------------------ stage one (k=1)


def _sphere_params(a, b, u, rad):
    """Parameters in (0, 1) where segment ``a b`` meets the sphere ``|x-u| = rad``."""
    d = b - a
    f = a - u
    A = d @ d
    B = 2 * f @ d
    C = f @ f - rad * rad
    disc = B * B - 4 * A * C
    if A == 0 or disc <= 0:
        return []
    sq = math.sqrt(disc)
    return sorted(t for t in ((-B - sq) / (2 * A), (-B + sq) / (2 * A)) if 0 < t < 1)


def _angle(p, q) -> float:
    c = p @ q / (np.linalg.norm(p) * np.linalg.norm(q))
    return math.acos(min(1.0, max(-1.0, c)))


def _arc_params(p0, p1, n):
    """Segment parameters whose directions from the origin split the angle p0..p1 evenly."""
    r0 = np.linalg.norm(p0)
    e1 = p0 / r0
    w = p1 - (p1 @ e1) * e1
    e2 = w / np.linalg.norm(w)
    px, py = p1 @ e1, p1 @ e2
    theta = math.atan2(py, px)
    out = []
    for j in range(1, n):
        phi = theta * j / n
        s = r0 * math.sin(phi) / (py * math.cos(phi) - (px - r0) * math.sin(phi))
        out.append(s)
    return out


def stage1_length(Q: list[np.ndarray], u, rad) -> float:
    """Exact length of the stage-one image of polylines ``Q`` (normalized coordinates)."""
    total = 0.0
    for pts in Q:
        for a, b in zip(pts[:-1], pts[1:]):
            ts = [0.0] + _sphere_params(a, b, u, rad) + [1.0]
            for t0, t1 in zip(ts[:-1], ts[1:]):
                p, q = a + t0 * (b - a), a + t1 * (b - a)
                mid = 0.5 * (p + q)
                if np.linalg.norm(mid - u) < rad:
                    total += rad * _angle(p - u, q - u)
                else:
                    total += float(np.linalg.norm(q - p))
    return total


def _stage1_samples(a, b, u, rad, n_per_angle):
    """T-side points and their stage-one images along segment ``a b`` (excluding ``b``)."""
    xs, ys = [], []
    ts = [0.0] + _sphere_params(a, b, u, rad) + [1.0]
    for t0, t1 in zip(ts[:-1], ts[1:]):
        p, q = a + t0 * (b - a), a + t1 * (b - a)
        mid = 0.5 * (p + q)
        inside = np.linalg.norm(mid - u) < rad
        pts = [p]
        if inside:
            n = max(1, math.ceil(_angle(p - u, q - u) * n_per_angle))
            for s in _arc_params(p - u, q - u, n):
                pts.append(p + s * (q - p))
        for x in pts:
            xs.append(x)
            d = x - u
            nd = np.linalg.norm(d)
            ys.append(u + rad * d / nd if nd < rad else x)
    return xs, ys


def _point_segment_distance(p, a, b) -> float:
    ab = b - a
    L = ab @ ab
    t = 0.0 if L == 0 else min(1.0, max(0.0, (p - a) @ ab / L))
    return float(np.linalg.norm(a + t * ab - p))


def _point_triangle_distance(p, a, b, c) -> float:
    n = np.cross(b - a, c - a) if len(p) == 3 else None
    if n is not None and n @ n > 0:
        n = n / np.linalg.norm(n)
        h = (p - a) @ n
        f = p - h * n
        # barycentric test of the foot point
        v0, v1, v2 = b - a, c - a, f - a
        d00, d01, d11 = v0 @ v0, v0 @ v1, v1 @ v1
        d20, d21 = v2 @ v0, v2 @ v1
        den = d00 * d11 - d01 * d01
        beta = (d11 * d20 - d01 * d21) / den
        gamma = (d00 * d21 - d01 * d20) / den
        if beta >= 0 and gamma >= 0 and beta + gamma <= 1:
            return abs(float(h))
    return min(_point_segment_distance(p, a, b), _point_segment_distance(p, b, c),
               _point_segment_distance(p, c, a))


def _distance_to_pieces(p, Q, k) -> float:
    if not Q:
        return math.inf
    if k == 1:
        return min(_point_segment_distance(p, a, b) for pts in Q for a, b in zip(pts[:-1], pts[1:]))
    return min(_point_triangle_distance(p, *tri) for tri in Q)


# ------------------------------------------------------------ stage one (k=2)


def _solid_angle(a, b, c) -> float:
    """Solid angle of triangle ``a b c`` seen from the origin (Van Oosterom-Strackee)."""
    la, lb, lc = np.linalg.norm(a), np.linalg.norm(b), np.linalg.norm(c)
    num = abs(float(a @ np.cross(b, c)))
    den = la * lb * lc + (a @ b) * lc + (a @ c) * lb + (b @ c) * la
    return 2.0 * math.atan2(num, den)


def _tri_area(a, b, c) -> float:
    u, v = b - a, c - a
    if len(a) == 2:
        return 0.5 * abs(u[0] * v[1] - u[1] * v[0])
    return 0.5 * float(np.linalg.norm(np.cross(u, v)))


def _subdivide(tri, m):
    a, b, c = tri
    if m == 1:
        return [np.array(tri)]

    def pt(i, j):
        return (i * a + j * b + (m - i - j) * c) / m

    out = []
    for i in range(m):
        for j in range(m - i):
            out.append(np.array([pt(i + 1, j), pt(i, j + 1), pt(i, j)]))
            if i + j < m - 1:
                out.append(np.array([pt(i + 1, j), pt(i + 1, j + 1), pt(i, j + 1)]))
    return out


def _touches_ball(tri, u, rad) -> bool:
    return _point_triangle_distance(u, *tri) < rad


def _base_subdivision(tri, rad, base_angle) -> int:
    longest = max(np.linalg.norm(tri[1] - tri[0]), np.linalg.norm(tri[2] - tri[1]),
                  np.linalg.norm(tri[0] - tri[2]))
    return max(1, 2 ** math.ceil(math.log2(max(1.0, longest / (rad * base_angle)))))


def stage1_area(Q: list[np.ndarray], u, rad, level: int, base_angle: float) -> float:
    """Stage-one image area of triangles ``Q``: spherical excess for sub-triangles
    inside the ball, flat area outside, inscribed area for the straddlers."""
    total = 0.0
    for tri in Q:
        if not _touches_ball(tri, u, rad):
            total += _tri_area(*tri)
            continue
        m = _base_subdivision(tri, rad, base_angle) * 2**level
        for sub in _subdivide(tri, m):
            d = np.linalg.norm(sub - u, axis=1)
            if np.all(d <= rad):
                total += rad * rad * _solid_angle(*(sub - u))
            elif np.all(d >= rad) and not _touches_ball(sub, u, rad):
                total += _tri_area(*sub)
            else:
                y = [u + rad * (x - u) / nd if nd < rad else x for x, nd in zip(sub, d)]
                total += _tri_area(*y)
    return total


def stage1_volume(Q, u, rad, k, level=0, base_angle=math.pi / 16) -> float:
    return stage1_length(Q, u, rad) if k == 1 else stage1_area(Q, u, rad, level, base_angle)


def piece_volume(Q, k) -> float:
    if k == 1:
        return float(sum(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum() for pts in Q))
    return float(sum(_tri_area(*t) for t in Q))


# ------------------------------------------------------------- centre choice


@dataclass
class CenterChoice:
    u: np.ndarray
    blowup: float
    tried: int
    rejected: list[float]


def sample_ball(rng, i: int, r: float) -> np.ndarray:
    d = rng.standard_normal(i)
    d /= np.linalg.norm(d)
    return d * r * rng.random() ** (1.0 / i)


def choose_center(Q, i: int, k: int, v0: float, config: PushConfig, rng) -> CenterChoice:
    """Rejection-sample ``u`` in ``B(O, r)`` until clearance holds and the
    stage-one volume is at most ``v0 * vol(Q)``."""
    r = config.radius(i)
    vq = piece_volume(Q, k)
    rejected: list[float] = []
    for tried in range(1, config.max_retries + 1):
        u = sample_ball(rng, i, r)
        if vq == 0:
            return CenterChoice(u, 0.0, tried, rejected)
        if _distance_to_pieces(u, Q, k) < config.clearance_eps:
            rejected.append(math.inf)
            continue
        blow = stage1_volume(Q, u, 2 * r, k, 0, config.base_angle) / vq
        if blow <= v0:
            return CenterChoice(u, blow, tried, rejected)
        rejected.append(blow)
    raise PushError(f"no acceptable centre in {config.max_retries} tries; rejected blowups {rejected}")


# -------------------------------------------------------------- stage two


def _cone_split_params(lam_a, lam_b):
    """Parameters in (0, 1) where the least barycentric coordinate changes index."""
    ts = []
    n = len(lam_a)
    for j in range(n):
        for l in range(j + 1, n):
            ga = lam_a[j] - lam_a[l]
            gb = lam_b[j] - lam_b[l]
            if (ga < 0 < gb) or (gb < 0 < ga):
                ts.append(ga / (ga - gb))
    return sorted(t for t in ts if 1e-13 < t < 1 - 1e-13)


def central_projection(lam: np.ndarray) -> tuple[np.ndarray, int]:
    """Project from the barycentre onto the boundary; returns (barycentric, face index)."""
    n = len(lam)
    c = 1.0 / n
    m = int(np.argmin(lam))
    if lam[m] >= c - 1e-15:
        raise PushError("cannot project the barycentre")
    s = c / (c - lam[m])
    out = c + s * (lam - c)
    out[m] = 0.0
    out = np.maximum(out, 0.0)
    return out / out.sum(), m


def project_point(y, u, i: int, r: float) -> np.ndarray:
    """Both projection stages for a single point in normalized coordinates."""
    ns = normalized_simplex(i)
    y = np.asarray(y, float)
    d = y - u
    nd = np.linalg.norm(d)
    if nd == 0:
        raise PushError("point coincides with the centre")
    if nd < 2 * r:
        y = u + 2 * r * d / nd
    lam = ns.bary(y)[0]
    if lam.min() <= FIX_TOL:
        return y
    z, _ = central_projection(lam)
    return ns.point(z)


def project_from_center(Q: PLChain, u, i: int, r: float, level: int = 0,
                        base_angle: float = math.pi / 16) -> PLChain:
    """Two-stage projection of a chain given in normalized coordinates."""
    ns = normalized_simplex(i)
    u = np.asarray(u, float)
    if Q.dim == 1:
        out = []
        for p in Q.pieces:
            pts = p.coords
            if len(pts) == 1:
                out.append(Piece(project_point(pts[0], u, i, r)[None, :], p.multiplicity, p.closed))
                continue
            if p.closed:
                pts = np.vstack([pts, pts[:1]])
            xs, ys = _polyline_stage1(pts, u, 2 * r, level, base_angle)
            _, zs, _ = _stage2_polyline(xs, ys, ns, None, None)
            zs = np.array(zs)
            if p.closed:
                zs = zs[:-1]
            out.append(Piece(zs, p.multiplicity, p.closed))
        return PLChain(1, out)
    tris = [p.coords for p in Q.pieces]
    res = _project_triangles(tris, [p.multiplicity for p in Q.pieces], u, 2 * r, ns, None, level, base_angle)
    return PLChain(2, [Piece(z, m) for _, z, m, _ in res])


def _polyline_stage1(pts, u, rad, level, base_angle):
    n_per_angle = 2**level / base_angle
    xs, ys = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        x, y = _stage1_samples(a, b, u, rad, n_per_angle)
        xs.extend(x)
        ys.extend(y)
    xs.append(pts[-1])
    d = np.linalg.norm(pts[-1] - u)
    ys.append(u + rad * (pts[-1] - u) / d if d < rad else pts[-1])
    return xs, ys


def _stage2_polyline(xs, ys, ns, frame, fixed):
    """Central projection of a stage-one polyline; returns T-side and image points.

    With a ``frame`` the output is in model coordinates; ``fixed`` maps
    sample indices to model points that must be kept verbatim.
    """
    out_x, out_z, faces = [], [], []
    lam = ns.bary(np.array(ys))
    for j in range(len(ys)):
        ts = [0.0]
        if j + 1 < len(ys):
            ts += _cone_split_params(lam[j], lam[j + 1])
        for t in ts:
            if t == 0.0:
                x, y, ly = xs[j], ys[j], lam[j]
            else:
                x = xs[j] + t * (xs[j + 1] - xs[j])
                y = ys[j] + t * (ys[j + 1] - ys[j])
                ly = lam[j] + t * (lam[j + 1] - lam[j])
            if fixed is not None and t == 0.0 and j in fixed:
                out_x.append(fixed[j])
                out_z.append(fixed[j])
                faces.append(int(np.argmin(ly)))
                continue
            if ly.min() <= FIX_TOL:
                z, m = np.maximum(ly, 0.0) / np.maximum(ly, 0.0).sum(), int(np.argmin(ly))
            else:
                z, m = central_projection(ly)
            if frame is None:
                out_x.append(x)
                out_z.append(ns.point(z))
            else:
                out_x.append(frame.from_bary(ns.bary(x)[0]))
                out_z.append(frame.from_bary(z))
            faces.append(m)
    return out_x, out_z, faces


def _clip_convex(poly, values_list):
    """Clip a polygon (list of (x, y, lam) tuples) by half-spaces ``g <= 0``.

    ``values_list`` holds functions of barycentric coordinates.
    """
    for g in values_list:
        if not poly:
            break
        out = []
        n = len(poly)
        for j in range(n):
            p, q = poly[j], poly[(j + 1) % n]
            gp, gq = g(p[2]), g(q[2])
            if gp <= 0:
                out.append(p)
            if (gp < 0 < gq) or (gq < 0 < gp):
                # symmetric in (p, q) so both neighbours compute the same point
                out.append(tuple((gq * pa - gp * qa) / (gq - gp) for pa, qa in zip(p, q)))
        poly = out
    return poly


def _project_triangles(tris, mults, u, rad, ns, frame, level, base_angle):
    """Stage one then stage two on triangles (normalized coords).

    Returns a list of ``(x_triangle, z_triangle, multiplicity, face)``; with a
    frame the triangles are in model coordinates.
    """
    n = ns.i + 1
    res = []
    for idx, (tri, mult) in enumerate(zip(tris, mults)):
        m = _base_subdivision(tri, rad, base_angle) * 2**level if _touches_ball(tri, u, rad) else 1
        for sub in _subdivide(tri, m):
            ys = []
            for x in sub:
                d = np.linalg.norm(x - u)
                ys.append(u + rad * (x - u) / d if d < rad else x)
            lam = ns.bary(np.array(ys))
            poly0 = [(sub[j], ys[j], lam[j]) for j in range(3)]
            for face in range(n):
                gs = [(lambda L, f=face, l=l: L[f] - L[l]) for l in range(n) if l != face]
                poly = _clip_convex(poly0, gs)
                if len(poly) < 3:
                    continue
                pts = []
                for x, y, ly in poly:
                    if ly.min() <= FIX_TOL:
                        z = np.maximum(ly, 0.0)
                        z = z / z.sum()
                    else:
                        z, _ = central_projection(ly)
                    if frame is None:
                        pts.append((x, ns.point(z)))
                    else:
                        pts.append((frame.from_bary(ns.bary(x)[0]), frame.from_bary(z)))
                for j in range(1, len(pts) - 1):
                    xt = np.array([pts[0][0], pts[j][0], pts[j + 1][0]])
                    zt = np.array([pts[0][1], pts[j][1], pts[j + 1][1]])
                    res.append((xt, zt, mult, face))
    return res


# ---------------------------------------------------------- chain splitting


def _segment_breaks(patch: TriangulatedPatch, a, b) -> list[float]:
    """Parameters where segment ``a b`` crosses boundaries of top simplices."""
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    blo, bhi = patch._top_boxes
    ids = np.nonzero(np.all(blo <= hi + 1e-9, axis=1) & np.all(bhi >= lo - 1e-9, axis=1))[0]
    if len(ids) == 0:
        raise PushError("chain leaves the patch")
    _, la = patch.barycentric(a, ids)
    _, lb = patch.barycentric(b, ids)
    ts = set()
    for j in range(la.shape[1]):
        ga, gb = la[:, j], lb[:, j]
        mask = (ga < 0) != (gb < 0)
        for t in (ga[mask] / (ga[mask] - gb[mask])):
            if 1e-12 < t < 1 - 1e-12:
                ts.add(float(t))
    ts = sorted(ts)
    out: list[float] = []
    for t in ts:
        if not out or t - out[-1] > 1e-12:
            out.append(t)
    return out


def _cell(patch: TriangulatedPatch, x):
    loc = patch.locate(x, tol=FIX_TOL)
    return loc.dim, loc.simplex


@dataclass
class _Run:
    poly: int
    start: int
    pts: list  # model coordinates
    closed: bool


def _split_polyline(patch, pts, closed, i):
    """Insert crossing points and cut the polyline into maximal runs per i-simplex.

    Returns a list of chunks ``(cell, points)`` whose concatenation (sharing
    end points) is the refined polyline.
    """
    pts = [np.asarray(p, float) for p in pts]
    if closed:
        pts = pts + [pts[0]]
    fine = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        if i == patch.top_dim:
            for t in _segment_breaks(patch, a, b):
                fine.append(a + t * (b - a))
        fine.append(b)
    cells = []
    for a, b in zip(fine[:-1], fine[1:]):
        dim, sid = _cell(patch, 0.5 * (a + b))
        cells.append((sid if dim == i else None))
    chunks = []
    start = 0
    for j in range(1, len(cells) + 1):
        if j == len(cells) or cells[j] != cells[start]:
            chunks.append((cells[start], fine[start : j + 1]))
            start = j
    if closed and len(chunks) > 1 and chunks[0][0] == chunks[-1][0]:
        cell, first = chunks.pop(0)
        last = chunks.pop()
        chunks.append((cell, last[1] + first[1:]))
    return chunks, fine


def _simplify_collinear(pts: list, closed: bool, tol: float = 1e-12) -> list:
    """Drop interior points on straight, monotone stretches (chain unchanged)."""
    out: list = []
    for p in pts:
        if out and np.array_equal(out[-1], p):
            continue
        while len(out) >= 2:
            a, b = out[-2], out[-1]
            u, v = b - a, p - b
            nu, nv = np.linalg.norm(u), np.linalg.norm(v)
            if nu == 0 or nv == 0:
                break
            cross = np.linalg.norm(np.cross(u, v)) if len(u) == 3 else abs(u[0] * v[1] - u[1] * v[0])
            if cross <= tol * nu * nv and u @ v > 0:
                out.pop()
            else:
                break
        out.append(p)
    return out


# ---------------------------------------------------------------- pushing


def _quad_triangles(x0, x1, z1, z0, mult):
    out = []
    for tri in ((x0, x1, z1), (x0, z1, z0)):
        if _tri_area(*tri) > 0:
            out.append(Piece(np.array(tri), mult))
    return out


def _prism_tets(xt, zt, mult):
    out = []
    for tet in ((xt[0], xt[1], xt[2], zt[2]), (xt[0], xt[1], zt[1], zt[2]), (xt[0], zt[0], zt[1], zt[2])):
        tet = np.array(tet)
        if abs(np.linalg.det(tet[1:] - tet[0])) > 0:
            out.append(Piece(tet, mult))
    return out


def push_chain(T: PLChain, patch: TriangulatedPatch, config: PushConfig | None = None):
    """Push a 1- or 2-chain into the k-skeleton of a Euclidean patch.

    Returns ``(R, S, report)`` with ``R`` in the k-skeleton, ``S`` the
    homotopy (k+1)-chain with ``boundary(S) = T - R`` and a :class:`PushReport`.
    """
    config = config or PushConfig()
    k = T.dim
    top = patch.top_dim
    if k >= top:
        raise ValueError("chain dimension must be below the patch dimension")
    if k not in (1, 2):
        raise ValueError("only 1- and 2-chains can be pushed")
    rng = np.random.default_rng(config.seed)
    report = PushReport(k, config=asdict(config))
    report.vol_T = volume(T, patch.model)
    if patch.model.kind == "H2":
        if not in_skeleton(T, patch, k):
            raise PushError("H2 chains are only accepted when they already lie in the skeleton")
        report.vol_R = report.vol_T
        return PLChain(k, [Piece(p.coords.copy(), p.multiplicity, p.closed, p.tag) for p in T.pieces]), \
            PLChain(k + 1), report
    s_pieces: list[Piece] = []
    if k == 1:
        current = [(p.coords.copy(), p.closed, p.multiplicity) for p in T.pieces]
    else:
        current = [(p.coords.copy(), p.multiplicity) for p in T.pieces]
    r_tags: list[int | None] = []
    for i in range(top, k, -1):
        v0 = v0_threshold(i, k, 1.0, config.v0_margin)
        report.v0[i] = v0
        if k == 1:
            current, entries, s_new = _push_stage_k1(current, patch, i, v0, config, rng)
        else:
            if patch.model.kind == "H2" or i != top:
                raise ValueError("2-chains are pushed only from the top dimension of E3")
            current, r_tags, entries, s_new = _push_stage_k2(current, patch, i, v0, config, rng)
        s_pieces.extend(s_new)
        report.per_simplex.extend(entries)
        stage_c = max([1.0] + [e.ratio for e in entries])
        report.empirical_C *= stage_c
    if k == 1:
        R = PLChain(1, [Piece(np.array(p), m, c) for p, c, m in current])
        S = PLChain(2, s_pieces)
    else:
        R = PLChain(2, [Piece(t, m, tag=tag) for (t, m), tag in zip(current, r_tags or [None] * len(current))])
        S = PLChain(3, s_pieces)
    report.vol_R = volume(R, patch.model)
    report.vol_S = volume(S, patch.model) if S.pieces else 0.0
    if k == 1:
        report.s_bound = float(sum(e.s_bound for e in report.per_simplex))
    else:
        report.s_bound = None
    report.v0_effective = max([1.0] + [e.v0_effective for e in report.per_simplex])
    report.check()
    return R, S, report


def in_skeleton(T: PLChain, patch: TriangulatedPatch, k: int) -> bool:
    """True when every piece of ``T`` lies in the k-skeleton (checked at piece centres)."""
    model = patch.model
    if T.dim == 1:
        for a, b, _ in T.segments():
            ca, cb = model.to_chart(np.array([a, b]))
            for t in (0.25, 0.5, 0.75):
                if patch.locate(model.from_chart(ca + t * (cb - ca)), tol=1e-9).dim > k:
                    return False
        return True
    for p in T.pieces:
        c = model.to_chart(p.coords).mean(axis=0)
        if patch.locate(model.from_chart(c), tol=1e-9).dim > k:
            return False
    return True


def _v0_effective(v0, i, k, r_min, frame: SimplexFrame) -> float:
    ns = normalized_simplex(i)
    stretch = (ns.circumradius / r_min) * (1 + ns.circumradius / ns.inradius)
    return v0 * stretch**k * frame.distortion**k


def _push_stage_k1(polys, patch, i, v0, config, rng):
    plans = []
    runs_by_simplex: dict[int, list] = defaultdict(list)
    for pi, (pts, closed, mult) in enumerate(polys):
        chunks, _ = _split_polyline(patch, pts, closed, i)
        whole = closed and len(chunks) == 1 and chunks[0][0] is not None
        plans.append((chunks, closed, mult, whole))
        for ci, (cell, cpts) in enumerate(chunks):
            if cell is not None:
                runs_by_simplex[cell].append((pi, ci))
    images: dict[tuple[int, int], list] = {}
    entries = []
    s_pieces: list[Piece] = []
    r = config.radius(i)
    ns = normalized_simplex(i)
    for sid in sorted(runs_by_simplex):
        frame = SimplexFrame(patch.simplex_coords(i, sid))
        keys = runs_by_simplex[sid]
        runs = []
        for pi, ci in keys:
            cpts = plans[pi][0][ci][1]
            whole = plans[pi][3]
            model_pts = list(cpts)
            norm = frame.to_norm(np.array(model_pts))
            fixed = {}
            if not whole:
                fixed = {0: model_pts[0], len(model_pts) - 1: model_pts[-1]}
            runs.append((pi, ci, model_pts, norm, fixed, plans[pi][2]))
        Q = [run[3] for run in runs]
        choice = choose_center(Q, i, 1, v0, config, rng)
        u = choice.u
        prev = None
        for level in range(config.max_refine_level + 1):
            outs = []
            total = 0.0
            for pi, ci, model_pts, norm, fixed, mult in runs:
                xs, ys = _polyline_stage1(norm, u, 2 * r, level, config.base_angle)
                # map fixed indices (run end points) onto the sample list
                fx = {}
                if fixed:
                    fx = {0: fixed[0], len(xs) - 1: fixed[len(model_pts) - 1]}
                out_x, out_z, _ = _stage2_polyline(xs, ys, ns, frame, fx)
                total += abs(mult) * float(np.linalg.norm(np.diff(np.array(out_z), axis=0), axis=1).sum())
                outs.append((out_x, out_z))
            if prev is not None and abs(total - prev) <= config.refine_tol * max(total, 1e-300):
                break
            prev = total
        else:
            raise PushError(f"simplex {sid}: refinement did not converge to {config.refine_tol}")
        vol_before = 0.0
        disp = 0.0
        r_min = math.inf
        s_vol = 0.0
        for (pi, ci, model_pts, norm, fixed, mult), (out_x, out_z) in zip(runs, outs):
            vol_before += abs(mult) * float(np.linalg.norm(np.diff(np.array(model_pts), axis=0), axis=1).sum())
            for x, z in zip(out_x, out_z):
                disp = max(disp, float(np.linalg.norm(np.asarray(z) - np.asarray(x))))
            for j in range(len(out_x) - 1):
                tris = _quad_triangles(out_x[j], out_x[j + 1], out_z[j + 1], out_z[j], mult)
                s_pieces.extend(tris)
                s_vol += sum(_tri_area(*t.coords) for t in tris)
            images[(pi, ci)] = out_z
        # distance of the stage-one polylines from O bounds the stage-two stretch
        for pi, ci, model_pts, norm, fixed, mult in runs:
            xs, ys = _polyline_stage1(norm, u, 2 * r, level, config.base_angle)
            for a, b in zip(ys[:-1], ys[1:]):
                r_min = min(r_min, _point_segment_distance(np.zeros(i), np.asarray(a), np.asarray(b)))
        vol_after = total
        ratio = vol_after / vol_before if vol_before > 0 else 1.0
        entries.append(SimplexReport(
            i, int(sid), vol_before, vol_after, choice.blowup, ratio, choice.tried, choice.rejected,
            frame.distortion, _v0_effective(v0, i, 1, r_min, frame), s_vol,
            0.5 * disp * (vol_before + vol_after), level, [float(c) for c in u],
        ))
    new_polys = []
    for pi, (chunks, closed, mult, whole) in enumerate(plans):
        pts: list = []
        for ci, (cell, cpts) in enumerate(chunks):
            seg = images.get((pi, ci), cpts) if cell is not None else cpts
            seg = list(seg)
            if pts:
                seg = seg[1:]
            pts.extend(seg)
        if closed:
            pts = pts[:-1] if len(pts) > 1 else pts
        pts = _simplify_collinear(pts, closed)
        if closed:
            pts = _drop_wrap_point(pts)
        new_polys.append((np.array(pts), closed, mult))
    return new_polys, entries, s_pieces


def _drop_wrap_point(pts: list) -> list:
    """For a closed polyline, drop end points that sit on a straight stretch across the wrap."""
    def redundant(a, b, c):
        return len(_simplify_collinear([a, b, c], False)) == 2

    while len(pts) >= 3 and redundant(pts[-1], pts[0], pts[1]):
        pts = pts[1:]
    while len(pts) >= 3 and redundant(pts[-2], pts[-1], pts[0]):
        pts = pts[:-1]
    return pts


def _face_planes(patch, sid):
    """Canonical affine functionals ``n.x - c`` of the faces of a top simplex,
    signed positive on the simplex interior."""
    simplex = patch.simplices[patch.top_dim][sid]
    coords = patch.vertices
    out = []
    for j in range(len(simplex)):
        face = simplex[:j] + simplex[j + 1 :]
        a, b, c = coords[face[0]], coords[face[1]], coords[face[2]]
        n = np.cross(b - a, c - a)
        off = float(n @ a)
        if n @ coords[simplex[j]] - off < 0:
            n, off = -n, -off
        out.append((n, off))
    return out


def _clip_to_simplices(tris, mults, patch):
    """Split model-space triangles among the top simplices of an E3 patch.

    Returns ``(by_simplex, skeleton)``: pieces strictly inside tetrahedra keyed
    by tetrahedron id, and pieces lying in the 2-skeleton.
    """
    by_simplex: dict[int, list] = defaultdict(list)
    skeleton: list = []
    seen_faces: set = set()
    blo, bhi = patch._top_boxes
    for tri, mult in zip(tris, mults):
        lo, hi = tri.min(axis=0), tri.max(axis=0)
        ids = np.nonzero(np.all(blo <= hi + 1e-9, axis=1) & np.all(bhi >= lo - 1e-9, axis=1))[0]
        for sid in ids:
            planes = _face_planes(patch, sid)
            poly = [tuple(p) for p in tri]
            for n, off in planes:
                if not poly:
                    break
                out = []
                for j in range(len(poly)):
                    p, q = np.array(poly[j]), np.array(poly[(j + 1) % len(poly)])
                    gp, gq = -(n @ p - off), -(n @ q - off)
                    if gp <= 0:
                        out.append(tuple(p))
                    if (gp < 0 < gq) or (gq < 0 < gp):
                        out.append(tuple((gq * p - gp * q) / (gq - gp)))
                poly = out
            if len(poly) < 3:
                continue
            pts = np.array(poly)
            on_face = None
            for j, (n, off) in enumerate(planes):
                if np.all(np.abs(pts @ n - off) <= 1e-12 * max(1.0, np.linalg.norm(n))):
                    on_face = j
            pieces = [np.array([pts[0], pts[j], pts[j + 1]]) for j in range(1, len(pts) - 1)]
            pieces = [p for p in pieces if _tri_area(*p) > 1e-18]
            if on_face is not None:
                simplex = patch.simplices[patch.top_dim][sid]
                face = tuple(v for jj, v in enumerate(simplex) if jj != on_face)
                key = (patch.simplex_id(2, face), tri.tobytes())
                if key not in seen_faces:
                    seen_faces.add(key)
                    skeleton.extend((p, mult, key[0]) for p in pieces)
                continue
            by_simplex[int(sid)].extend((p, mult) for p in pieces)
    return by_simplex, skeleton


def _push_stage_k2(tris, patch, i, v0, config, rng):
    by_simplex, skeleton = _clip_to_simplices([t for t, _ in tris], [m for _, m in tris], patch)
    ns = normalized_simplex(i)
    r = config.radius(i)
    out: list = [(p, m) for p, m, _ in skeleton]
    tags: list = [f for _, _, f in skeleton]
    entries = []
    s_pieces: list[Piece] = []
    for sid in sorted(by_simplex):
        frame = SimplexFrame(patch.simplex_coords(i, sid))
        simplex = patch.simplices[i][sid]
        pieces = by_simplex[sid]
        Q = [frame.to_norm(p) for p, _ in pieces]
        mults = [m for _, m in pieces]
        choice = choose_center(Q, i, 2, v0, config, rng)
        u = choice.u
        prev = None
        for level in range(config.max_refine_level + 1):
            res = _project_triangles(Q, mults, u, 2 * r, ns, frame, level, config.base_angle)
            total = sum(abs(m) * _tri_area(*z) for _, z, m, _ in res)
            if prev is not None and abs(total - prev) <= config.refine_tol_surface * max(total, 1e-300):
                break
            prev = total
        else:
            raise PushError(f"simplex {sid}: refinement did not converge to {config.refine_tol_surface}")
        vol_before = sum(abs(m) * _tri_area(*p) for p, m in pieces)
        s_vol = 0.0
        for xt, zt, m, face in res:
            if _tri_area(*zt) > 0:
                fverts = tuple(v for jj, v in enumerate(simplex) if jj != face)
                out.append((zt, m))
                tags.append(patch.simplex_id(2, fverts))
            tets = _prism_tets(xt, zt, m)
            s_pieces.extend(tets)
            s_vol += sum(abs(np.linalg.det(t.coords[1:] - t.coords[0])) / 6 for t in tets)
        r_min = _stage1_min_distance(Q, u, 2 * r, level, config.base_angle)
        ratio = total / vol_before if vol_before > 0 else 1.0
        entries.append(SimplexReport(
            i, int(sid), vol_before, total, choice.blowup, ratio, choice.tried, choice.rejected,
            frame.distortion, _v0_effective(v0, i, 2, r_min, frame), s_vol, None, level,
            [float(c) for c in u],
        ))
    return out, tags, entries, s_pieces


def _stage1_min_distance(Q, u, rad, level, base_angle) -> float:
    """Least distance from the barycentre to the stage-one PL image."""
    best = math.inf
    origin = np.zeros(len(u))
    for tri in Q:
        m = _base_subdivision(tri, rad, base_angle) * 2**level if _touches_ball(tri, u, rad) else 1
        for sub in _subdivide(tri, m):
            y = []
            for x in sub:
                d = np.linalg.norm(x - u)
                y.append(u + rad * (x - u) / d if d < rad else x)
            best = min(best, _point_triangle_distance(origin, *y))
    return best


# ------------------------------------------------------ boundary of S (k=1)


def _segment_chain(pieces_iter):
    """Collect oriented segments ``(a, b, weight)`` grouped by supporting line."""
    lines: dict = defaultdict(list)
    for a, b, w in pieces_iter:
        a, b = np.asarray(a, float), np.asarray(b, float)
        d = b - a
        L = np.linalg.norm(d)
        if L == 0 or w == 0:
            continue
        d = d / L
        nz = np.nonzero(np.abs(d) > 1e-12)[0][0]
        if d[nz] < 0:
            d, a, b, w = -d, b, a, -w
        off = a - (a @ d) * d
        key = tuple(np.round(np.concatenate([d, off]), 7))
        lines[key].append((float(a @ d), float(b @ d), w))
    return lines


def boundary_mismatch(S: PLChain, T: PLChain, R: PLChain) -> float:
    """Length of ``boundary(S) - (T - R)`` after grouping collinear pieces."""
    def segs():
        for p in S.pieces:
            a, b, c = p.coords
            yield a, b, p.multiplicity
            yield b, c, p.multiplicity
            yield c, a, p.multiplicity
        for a, b, m in T.segments():
            yield a, b, -m
        for a, b, m in R.segments():
            yield a, b, m

    total = 0.0
    for items in _segment_chain(segs()).values():
        events: dict[float, float] = defaultdict(float)
        for s0, s1, w in items:
            events[s0] += w
            events[s1] -= w
        level = 0.0
        xs = sorted(events)
        for x0, x1 in zip(xs[:-1], xs[1:]):
            level += events[x0]
            if abs(level) > 1e-9:
                total += abs(level) * (x1 - x0)
    return total
