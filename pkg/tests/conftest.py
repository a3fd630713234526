import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dehnlab.geometry import PLChain, Piece

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def icosphere(level: int):
    """Unit icosphere: vertices and outward-oriented faces."""
    t = (1 + 5**0.5) / 2
    v = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
         (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    f = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
         (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
         (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    v = [np.array(x, float) / np.linalg.norm(x) for x in v]
    for _ in range(level):
        cache, nf = {}, []

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = v[a] + v[b]
                v.append(m / np.linalg.norm(m))
                cache[key] = len(v) - 1
            return cache[key]

        for a, b, c in f:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            nf += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        f = nf
    return np.array(v), f


def grid_vid(extent: int):
    side = 2 * extent + 1
    return lambda x, y: (x + extent) * side + (y + extent)


def square_path(x0: int, y0: int, p: int, q: int):
    """Counter-clockwise lattice points around the p x q rectangle at (x0, y0)."""
    pts = [(x0 + i, y0) for i in range(p)] + [(x0 + p, y0 + j) for j in range(q)]
    pts += [(x0 + p - i, y0 + q) for i in range(p)] + [(x0, y0 + q - j) for j in range(q)]
    return pts


@pytest.fixture(scope="session")
def grid4():
    from dehnlab.geometry import build_grid_E2
    return build_grid_E2(4)


@pytest.fixture(scope="session")
def h2_patch():
    from dehnlab.geometry import build_H2_tiling
    return build_H2_tiling(3)


@pytest.fixture(scope="session")
def sphere_chain():
    """Icosphere of radius 0.4 about (0.5, 0.5, 0.5), level 2, outward oriented."""
    v, faces = icosphere(2)
    c = np.array([0.5, 0.5, 0.5])
    return PLChain(2, [Piece(c + 0.4 * v[list(t)]) for t in faces])


def pushed_disc(patch, seed: int):
    """Random polygon pushed into the 1-skeleton, then coned off from a random point.

    Returns the combinatorial loop and the cone 2-chain, whose boundary is the pushed loop.
    """
    from dehnlab.geometry import combinatorialize_loop, polyline
    from dehnlab.pushing import PushConfig, push_chain

    rng = np.random.default_rng(seed)
    T = polyline(rng.uniform(-2.5, 2.5, (int(rng.integers(3, 8)), 2)))
    R, _, _ = push_chain(T, patch, PushConfig(seed=seed))
    loop, _ = combinatorialize_loop(R, patch)
    c = rng.uniform(-2.5, 2.5, 2)
    pieces = []
    for p in R.pieces:
        for a, b in zip(p.coords, np.roll(p.coords, -1, axis=0)):
            if np.linalg.norm(a - b) > 0:
                pieces.append(Piece(np.array([c, a, b]), p.multiplicity))
    return loop, PLChain(2, pieces)
