"""Profiles, the precedes relation on finite tables, and equivalence reports.

A profile is a nondecreasing table ``n -> value``: the largest filling area
found among loops of length at most ``n``.  Combinatorial profiles come from
word enumeration, geometric profiles from fixed loop families in a
triangulated patch, so geometric tables are sampled lower bounds of the true
maximum.  ``f`` precedes ``g`` when ``f(n) <= A g(Bn+C) + Dn + E``; on finite
tables this is only ever certified on the sampled range.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import os
from dataclasses import asdict, dataclass

import numpy as np

from . import hyperbolic as hyp
from .chains import boundary_2, winding_filling
from .filling import dehn_function
from .geometry import (
    SkeletonLoop,
    TriangulatedPatch,
    build_grid_E2,
    build_H2_tiling,
    combinatorialize_loop,
    dumps,
    polyline,
)
from .groups import GroupModel, builtin_model, lattice_winding_area
from .pushing import PushConfig, push_chain
from .words import commutator, format_word, power

log = logging.getLogger(__name__)

DEFAULT_GRID = {
    "A": (1, 2, 4, 8, 16),
    "B": (1, 2, 4, 8, 16),
    "C": (0, 1, 2, 4, 8, 16, 32),
    "D": (0, 1, 2, 4, 8, 16, 32),
    "E": (0, 1, 2, 4, 8, 16, 32),
}

# exhaustive Z^2 enumeration grows ~8x per two letters; beyond this length
# rows come from the commutator family [a^p, b^q]
FLAT_EXHAUSTIVE_MAX = 14


class RangeShortfall(ValueError):
    """No sample of ``f`` can be compared: every ``Bn+C`` lies beyond ``g``'s table."""


# ---------------------------------------------------------------- tables


@dataclass
class ProfileRow:
    n: int
    value: float
    witness: str = ""
    exact: bool = True
    words: int = 0  # null words enumerated at this length (combinatorial rows)


@dataclass
class ProfileTable:
    rows: list[ProfileRow]
    kind: str  # "combinatorial" | "geometric"
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("combinatorial", "geometric"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        ns = [r.n for r in self.rows]
        if ns != sorted(set(ns)):
            raise ValueError("profile rows must have increasing n")
        vals = [r.value for r in self.rows]
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ValueError("profile values must be nondecreasing")

    @property
    def ns(self) -> list[int]:
        return [r.n for r in self.rows]

    @property
    def values(self) -> list[float]:
        return [r.value for r in self.rows]

    def at_least(self, m: float) -> float | None:
        """Value at the smallest tabulated ``n >= m`` (None past the table)."""
        for r in self.rows:
            if r.n >= m:
                return r.value
        return None

    def scaled(self, c: float) -> "ProfileTable":
        return ProfileTable([ProfileRow(r.n, c * r.value, r.witness, r.exact) for r in self.rows],
                            self.kind, self.name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "value", "kind", "witness"])
        for r in self.rows:
            wr.writerow([r.n, _num(r.value), self.kind, r.witness])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, name: str = "") -> "ProfileTable":
        rd = csv.DictReader(io.StringIO(text))
        if rd.fieldnames != ["n", "value", "kind", "witness"]:
            raise ValueError(f"expected header n,value,kind,witness, got {rd.fieldnames}")
        rows, kinds = [], set()
        for rec in rd:
            rows.append(ProfileRow(int(rec["n"]), float(rec["value"]), rec["witness"]))
            kinds.add(rec["kind"])
        if len(kinds) > 1:
            raise ValueError("mixed kinds in one table")
        return cls(rows, kinds.pop() if kinds else "combinatorial", name)

    def to_json(self) -> dict:
        return {"name": self.name, "kind": self.kind,
                "rows": [{"n": r.n, "value": r.value, "witness": r.witness, "exact": r.exact}
                         for r in self.rows]}


def _num(x: float):
    return int(x) if float(x).is_integer() else float("%.17g" % x)


def _running_max(best: dict[int, tuple[float, str, bool]], n_lo: int, n_max: int) -> list[ProfileRow]:
    rows, cur = [], (0.0, "", True)
    for n in range(1, n_max + 1):
        if n in best and best[n][0] > cur[0]:
            cur = best[n]
        elif n in best and not best[n][2]:
            cur = (cur[0], cur[1], False)
        if n >= n_lo:
            rows.append(ProfileRow(n, cur[0], cur[1], cur[2]))
    return rows


# ---------------------------------------------------------------- combinatorial


def combinatorial_profile(model: GroupModel | str, n_max: int, budget: int = 64,
                          method: str | None = None, exhaustive_max: int | None = None) -> ProfileTable:
    """Dehn-function table for ``n = 1 .. n_max``.

    The genus-2 group defaults to Dehn-algorithm step counts (an upper bound
    on area that is exact for the linear envelope); other groups use exact
    areas.  For Z^2 rows beyond ``exhaustive_max`` are the best rectangle
    commutator ``[a^p, b^q]`` with ``2(p+q) <= n`` and are flagged inexact.
    """
    if isinstance(model, str):
        model = builtin_model(model)
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    if n_max == 0:
        return ProfileTable([], "combinatorial", model.name)
    if method is None:
        method = "dehn" if model.rotation_seeds() is not None else "exact"
    flat = model.name == "z2"
    if exhaustive_max is None:
        exhaustive_max = FLAT_EXHAUSTIVE_MAX if flat else n_max
    top = min(n_max, exhaustive_max)
    table = dehn_function(model, top, budget=budget, method=method)
    rows = [ProfileRow(r.n, r.value, format_word(r.witness), not r.exceeded, r.words) for r in table.rows[1:]]
    if top < n_max:
        if not flat:
            raise ValueError("sampled rows are only available for Z^2")
        cur_v, cur_w = rows[-1].value, rows[-1].witness
        for n in range(top + 1, n_max + 1):
            for p in range(1, n // 2):
                q = n // 2 - p
                if q < 1:
                    continue
                w = commutator(power((1,), p), power((2,), q))
                a = lattice_winding_area(w)
                if a > cur_v:
                    cur_v, cur_w = a, format_word(w)
            rows.append(ProfileRow(n, cur_v, cur_w, False))
    return ProfileTable(rows, "combinatorial", model.name)


# ---------------------------------------------------------------- geometric


@dataclass
class LoopSample:
    length: float
    loop: SkeletonLoop
    label: str


def _cycle_to_loop(cycle: dict[int, int], patch: TriangulatedPatch) -> SkeletonLoop | None:
    """Vertex loop of a simple cellular 1-cycle (None if it is not one simple loop)."""
    edges = patch.simplices[1]
    succ: dict[int, int] = {}
    for e, c in cycle.items():
        if abs(c) != 1:
            return None
        a, b = edges[e]
        if c < 0:
            a, b = b, a
        if a in succ:
            return None
        succ[a] = b
    if not succ:
        return None
    start = min(succ)
    verts = [start]
    while True:
        nxt = succ[verts[-1]]
        if nxt == start:
            break
        if nxt in verts:
            return None
        verts.append(nxt)
    if len(verts) != len(succ):
        return None
    return SkeletonLoop(verts)


def grid_rectangle_loops(patch: TriangulatedPatch, n_max: int, seed: int = 0,
                         offsets: int = 1, push_config: PushConfig | None = None) -> list[LoopSample]:
    """Lattice rectangles ``p x q`` with perimeter ``<= n_max``, plus rectangles
    shifted off the lattice by seeded offsets, which are pushed into the
    1-skeleton before being measured.  Lengths are those of the original loops."""
    rng = np.random.default_rng(seed)
    ext = int(round(patch.chart_vertices()[:, 0].max()))
    out = []
    for p in range(1, n_max // 2):
        for q in range(1, n_max // 2 - p + 1):
            x0, y0 = -(p // 2), -(q // 2)
            corners = np.array([(x0, y0), (x0 + p, y0), (x0 + p, y0 + q), (x0, y0 + q)], float)
            if x0 < -ext or y0 < -ext or x0 + p > ext or y0 + q > ext:
                log.warning("rectangle %dx%d does not fit the patch; dropped", p, q)
                continue
            pts = _rect_points(corners)
            loop, _ = combinatorialize_loop(polyline(pts), patch)
            out.append(LoopSample(2.0 * (p + q), loop, f"rect {p}x{q}"))
            for k in range(offsets):
                shift = rng.uniform(0.05, 0.95, 2)
                shifted = corners + shift
                if np.any(shifted - 1 < -ext) or np.any(shifted + 1 > ext):
                    continue
                cfg = push_config or PushConfig(seed=seed)
                cfg = PushConfig(**{**asdict(cfg), "seed": int(rng.integers(2**31))})
                R, _, _ = push_chain(polyline(shifted), patch, cfg)
                loop, _ = combinatorialize_loop(R, patch)
                if len(loop.vertices) < 3:
                    continue
                out.append(LoopSample(2.0 * (p + q), loop,
                                      f"rect {p}x{q} shifted ({shift[0]:.4f},{shift[1]:.4f})"))
    return out


def _rect_points(corners: np.ndarray) -> np.ndarray:
    pts = []
    for j in range(4):
        a, b = corners[j], corners[(j + 1) % 4]
        m = int(round(np.abs(b - a).max()))
        pts.extend(a + (b - a) * t / m for t in range(m))
    return np.array(pts)


def _chart_orientation(patch: TriangulatedPatch, t: int) -> int:
    a, b, c = patch.chart[list(patch.simplices[2][t])]
    return 1 if (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]) > 0 else -1


def h2_strip_loops(patch: TriangulatedPatch, n_max: int, max_word: int = 2) -> list[LoopSample]:
    """Boundaries of the tile strips ``{1, x1, x1x2, ...}`` over reduced words.

    Lengths are counted in octagon sides, so one tile has length 8.
    """
    oct_ = hyp.octagon_group()
    side = oct_.side_length()
    verts = patch.vertices
    tri_by_vertex: dict[int, list[int]] = {}
    for t, tri in enumerate(patch.simplices[2]):
        for v in tri:
            tri_by_vertex.setdefault(v, []).append(t)

    def tile_cells(w):
        c = oct_.center(w)
        d = np.arccosh(np.maximum(1.0, verts[:, 2] * c[2] - verts[:, 0] * c[0] - verts[:, 1] * c[1]))
        v = int(np.argmin(d))
        if d[v] > 1e-6 or len(tri_by_vertex.get(v, ())) != 8:
            return None
        return tri_by_vertex[v]

    letters = [1, -1, 2, -2, 3, -3, 4, -4]
    out, seen = [], set()
    for m in range(max_word + 1):
        for w in itertools.product(letters, repeat=m):
            if any(a == -b for a, b in zip(w, w[1:])):
                continue
            cells = []
            for j in range(m + 1):
                tc = tile_cells(w[:j])
                if tc is None:
                    cells = None
                    break
                cells.extend(tc)
            if cells is None or len(set(cells)) != len(cells):
                continue
            key = tuple(sorted(cells))
            if key in seen:
                continue
            seen.add(key)
            cyc = boundary_2({c: _chart_orientation(patch, c) for c in cells}, patch)
            cyc = {e: v for e, v in cyc.items() if v}
            loop = _cycle_to_loop(cyc, patch)
            if loop is None:
                log.debug("strip %s is not a disc; dropped", format_word(w))
                continue
            length = loop.length(patch) / side
            if length > n_max + 1e-9:
                continue
            out.append(LoopSample(float(round(length)) if abs(length - round(length)) < 1e-6 else length,
                                  loop, f"strip {format_word(w) or '1'}"))
    return out


def geometric_profile(patch: TriangulatedPatch, loops: list[LoopSample], n_max: int) -> ProfileTable:
    """Row ``n`` = largest normalized filling area over loops of length ``<= n``.

    The filling is the winding-number chain of each combinatorial loop, and
    its value is ``sum |c| * area(cell) / max cell area``, which counts cells
    when they are congruent.  Rows start at the shortest loop length.
    """
    areas = np.array([patch.simplex_volume(2, s) for s in range(patch.cell_count)])
    amax = float(areas.max())
    best: dict[int, tuple[float, str, bool]] = {}
    for s in loops:
        n = math.ceil(s.length - 1e-9)
        if n > n_max:
            continue
        fill = winding_filling(s.loop, patch)
        if boundary_2(fill.coefficients, patch) != {e: v for e, v in s.loop.cycle(patch).items() if v}:
            log.warning("%s: winding filling misses the loop; dropped", s.label)
            continue
        value = sum(abs(c) * areas[t] for t, c in fill.coefficients.items()) / amax
        # congruent cells give integers up to the rounding of angle sums
        value = float(round(value)) if abs(value - round(value)) < 1e-6 * max(1.0, value) else float(value)
        if n not in best or value > best[n][0]:
            best[n] = (value, s.label, True)
    if not best:
        return ProfileTable([], "geometric", patch.name)
    return ProfileTable(_running_max(best, min(best), n_max), "geometric", patch.name)


# ---------------------------------------------------------------- precedes


@dataclass
class PrecedesCertificate:
    A: float
    B: float
    C: float
    D: float
    E: float
    n_range: tuple[int, int] | None
    samples: int
    skipped: int
    slack: float

    def to_json(self) -> dict:
        d = asdict(self)
        d["n_range"] = list(self.n_range) if self.n_range else None
        d["note"] = "valid on the sampled range only"
        return d


@dataclass
class PrecedesFailure:
    n: int
    violation: float
    A: float
    B: float
    C: float
    D: float
    E: float

    def to_json(self) -> dict:
        return {"failed": True, **asdict(self)}


def _evaluate(f: ProfileTable, g: ProfileTable, A, B, C, D, E):
    """Slack ``A g(Bn+C) + Dn + E - f(n)`` at each comparable sample."""
    out = []
    for r in f.rows:
        gv = g.at_least(B * r.n + C)
        if gv is None:
            continue
        out.append((r.n, A * gv + D * r.n + E - r.value))
    return out


def certificate_holds(f: ProfileTable, g: ProfileTable, cert: PrecedesCertificate) -> bool:
    ev = _evaluate(f, g, cert.A, cert.B, cert.C, cert.D, cert.E)
    return bool(ev) and all(s >= -1e-9 for _, s in ev)


def check_precedes(f: ProfileTable, g: ProfileTable, grid: dict | None = None):
    """Search ``grid`` for constants with ``f(n) <= A g(Bn+C) + Dn + E`` on every
    comparable sample.

    Certificates that compare more samples win first, so a certificate is
    never obtained by pushing ``Bn+C`` past the end of ``g``; among those the
    one minimizing A, then D, then E (then B, C) is returned.  Without a
    certificate the result is a :class:`PrecedesFailure` naming the sample
    with the largest violation under the constants that came closest.
    """
    grid = grid or DEFAULT_GRID
    if any(len(grid[k]) == 0 for k in "ABCDE"):
        raise ValueError("search grid is empty")
    if not f.rows or not g.rows:
        raise ValueError("both tables must be nonempty")
    best_fail = None
    best = None
    for A, D, E, B, C in itertools.product(sorted(grid["A"]), sorted(grid["D"]), sorted(grid["E"]),
                                           sorted(grid["B"]), sorted(grid["C"])):
        ev = _evaluate(f, g, A, B, C, D, E)
        if not ev:
            continue
        worst_n, worst = min(ev, key=lambda t: (t[1], -t[0]))
        if worst >= 0:
            if best is None or len(ev) > best.samples:
                ns = [n for n, _ in ev]
                best = PrecedesCertificate(A, B, C, D, E, (min(ns), max(ns)), len(ev),
                                           len(f.rows) - len(ev), worst)
        elif best_fail is None or worst > -best_fail.violation:
            best_fail = PrecedesFailure(worst_n, -worst, A, B, C, D, E)
    if best is not None:
        return best
    if best_fail is None:
        raise RangeShortfall("no sample n has B n + C inside the range of g")
    return best_fail


def fit_exponent(table: ProfileTable, n_min: int = 1) -> float | None:
    """Least-squares slope of log(value) against log(n).

    Only rows where the value first rises are used: the plateau rows in
    between repeat an earlier maximum and would bias the slope upward.
    """
    pts, prev = [], 0.0
    for r in table.rows:
        if r.value > prev and r.n >= n_min:
            pts.append((r.n, r.value))
        prev = max(prev, r.value)
    if len(pts) < 2:
        return None
    x, y = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------- reports


def flat_pair(n_max: int, seed: int = 0, budget: int = 64):
    comb = combinatorial_profile("z2", n_max, budget=budget)
    ext = max(1, n_max // 4 + 2)
    patch = build_grid_E2(ext)
    loops = grid_rectangle_loops(patch, n_max, seed=seed)
    geom = geometric_profile(patch, loops, n_max)
    return comb, geom, patch


def hyperbolic_pair(n_max: int, seed: int = 0, budget: int = 64):
    comb = combinatorial_profile("genus2", n_max, budget=budget)
    patch = build_H2_tiling(3)
    geom = geometric_profile(patch, h2_strip_loops(patch, n_max), n_max)
    return comb, geom, patch


def dehn_linear_check(table: ProfileTable) -> dict:
    """Dehn-algorithm area <= |w| for every enumerated null word.

    Row ``n`` holds the largest step count over words of length ``<= n``, so
    the per-word bound is equivalent to ``value <= n`` on every row.
    """
    bad = [r for r in table.rows if r.value > r.n]
    return {"holds": not bad, "words": sum(r.words for r in table.rows),
            "counterexample": bad[0].witness if bad else ""}


def _trivial_certificate() -> PrecedesCertificate:
    return PrecedesCertificate(1, 1, 0, 0, 0, None, 0, 0, 0.0)


def equivalence_report(pair: str, n_max: int, seed: int = 0, out_dir: str | None = None,
                       grid: dict | None = None) -> dict:
    """Profiles of a built-in pair, precedes checks both ways, exponent fits.

    Writes ``report.json``, ``combinatorial.csv``, ``geometric.csv`` and
    ``profiles.svg`` into ``out_dir`` when given.
    """
    if pair == "flat":
        comb, geom, patch = flat_pair(n_max, seed)
    elif pair == "hyperbolic":
        comb, geom, patch = hyperbolic_pair(n_max, seed)
    else:
        raise ValueError(f"unknown pair {pair!r}")
    directions = {}
    for name, (f, g) in (("combinatorial<geometric", (comb, geom)), ("geometric<combinatorial", (geom, comb))):
        if not f.rows or not g.rows:
            res = _trivial_certificate()
        else:
            res = check_precedes(f, g, grid)
        directions[name] = res
    certified = {k: isinstance(v, PrecedesCertificate) for k, v in directions.items()}
    report = {
        "pair": pair,
        "n_max": n_max,
        "seed": seed,
        "patch": {"name": patch.name, "triangles": patch.cell_count,
                  "max_cell_area": max(patch.simplex_volume(2, s) for s in range(patch.cell_count))},
        "profiles": {"combinatorial": comb.to_json(), "geometric": geom.to_json()},
        "exponents": {"combinatorial": fit_exponent(comb, 4), "geometric": fit_exponent(geom, 4)},
        "precedes": {k: v.to_json() for k, v in directions.items()},
        "certified": certified,
        "equivalent": all(certified.values()),
    }
    if pair == "hyperbolic":
        report["dehn_linear"] = dehn_linear_check(comb)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            fh.write(dumps(report))
        with open(os.path.join(out_dir, "combinatorial.csv"), "w") as fh:
            fh.write(comb.to_csv())
        with open(os.path.join(out_dir, "geometric.csv"), "w") as fh:
            fh.write(geom.to_csv())
        with open(os.path.join(out_dir, "profiles.svg"), "w") as fh:
            fh.write(profile_svg([comb, geom], directions, f"{pair} pair, n <= {n_max}"))
    return report


def profile_svg(tables: list[ProfileTable], directions: dict | None = None, title: str = "",
                width: int = 640, height: int = 420) -> str:
    """Static step plot of several profiles on shared axes."""
    pad_l, pad_r, pad_t, pad_b = 60, 20, 40, 50
    ns = [r.n for t in tables for r in t.rows] or [1]
    vs = [r.value for t in tables for r in t.rows] or [1]
    x_hi, y_hi = max(ns), max(max(vs), 1)

    def X(n):
        return pad_l + (width - pad_l - pad_r) * n / x_hi

    def Y(v):
        return height - pad_b - (height - pad_t - pad_b) * v / y_hi

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{_esc(title)}</text>',
             f'<line x1="{pad_l}" y1="{Y(0):.2f}" x2="{width - pad_r}" y2="{Y(0):.2f}" stroke="black"/>',
             f'<line x1="{pad_l}" y1="{Y(0):.2f}" x2="{pad_l}" y2="{pad_t}" stroke="black"/>',
             f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">n</text>',
             f'<text x="{pad_l - 8}" y="{Y(y_hi):.2f}" text-anchor="end" font-size="11">{_num(y_hi)}</text>',
             f'<text x="{X(x_hi):.2f}" y="{Y(0) + 16:.2f}" text-anchor="middle" font-size="11">{x_hi}</text>']
    for j, t in enumerate(tables):
        if not t.rows:
            continue
        c = colors[j % len(colors)]
        pts = " ".join(f"{X(r.n):.2f},{Y(r.value):.2f}" for r in t.rows)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="2"/>')
        parts.append(f'<text x="{pad_l + 10}" y="{pad_t + 16 * (j + 1)}" font-size="12" fill="{c}">'
                     f'{_esc(t.kind)} ({_esc(t.name)})</text>')
    for j, (name, res) in enumerate((directions or {}).items()):
        if isinstance(res, PrecedesCertificate):
            txt = f"{name}: A={_num(res.A)} B={_num(res.B)} C={_num(res.C)} D={_num(res.D)} E={_num(res.E)}"
        else:
            txt = f"{name}: not certified (n={res.n})"
        parts.append(f'<text x="{width - pad_r}" y="{pad_t + 16 * (j + 1)}" text-anchor="end" '
                     f'font-size="11">{_esc(txt)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def report_json(report: dict) -> str:
    return dumps(report)

