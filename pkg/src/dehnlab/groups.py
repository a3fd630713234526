"""Exact group models, Dehn's algorithm and Cayley 2-complex balls."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import hyperbolic as hyp
from .words import (
    Presentation,
    Word,
    WordError,
    commutator,
    format_word,
    free_reduce,
    inverse,
    rotations,
)


class SmallCancellationError(ValueError):
    """Dehn's algorithm was asked to run on an unflagged presentation."""


class BallBudgetExceeded(RuntimeError):
    def __init__(self, radius_reached: int, elements: int):
        super().__init__(
            f"element budget exceeded after completing radius {radius_reached} ({elements} elements)"
        )
        self.radius_reached = radius_reached
        self.elements = elements


def _dehn_table(p: Presentation) -> tuple[dict[Word, Word], list[int]]:
    """Map each long prefix of a cyclic relator to its inverted complement."""
    table: dict[Word, Word] = {}
    for _, r in p.cyclic_relators():
        n = len(r)
        for length in range(n // 2 + 1, n + 1):
            table.setdefault(r[:length], inverse(r[length:]))
    lengths = sorted({len(k) for k in table}, reverse=True)
    return table, lengths


_TABLES: dict[Presentation, tuple[dict[Word, Word], list[int]]] = {}


def dehn_steps(w: Iterable[int], p: Presentation) -> tuple[Word, int]:
    """Run Dehn's algorithm; return the final word and the number of replacements.

    Each step replaces the leftmost, then longest, subword that is more than
    half of a cyclic relator by the inverse of the complement.
    """
    if not p.small_cancellation:
        raise SmallCancellationError("presentation is not flagged small-cancellation")
    if p not in _TABLES:
        _TABLES[p] = _dehn_table(p)
    table, lengths = _TABLES[p]
    w = free_reduce(w, p.generator_count)
    steps = 0
    start = 0
    while True:
        hit = None
        for i in range(start, len(w)):
            for length in lengths:
                if i + length <= len(w):
                    repl = table.get(w[i : i + length])
                    if repl is not None:
                        hit = (i, length, repl)
                        break
            if hit:
                break
        if hit is None:
            return w, steps
        i, length, repl = hit
        new = free_reduce(w[:i] + repl + w[i + length :])
        assert len(new) < len(w)
        w = new
        steps += 1
        start = max(0, i - max(lengths))


def dehn_reduce(w: Iterable[int], p: Presentation) -> Word:
    return dehn_steps(w, p)[0]


class GroupModel:
    """Exact evaluator for the word problem of a built-in group.

    Subclasses supply ``normal_form`` plus a walking state used by the
    enumerators: ``act(state, letter)`` and ``distance_lower_bound(state)``
    (a lower bound on the word length of the element the state represents).
    """

    name = "group"

    def __init__(self, presentation: Presentation):
        self.presentation = presentation

    @property
    def generator_count(self) -> int:
        return self.presentation.generator_count

    def letters(self) -> list[int]:
        k = self.generator_count
        return [x for i in range(1, k + 1) for x in (i, -i)]

    def normal_form(self, w: Word):
        raise NotImplementedError

    def is_identity(self, w: Word) -> bool:
        raise NotImplementedError

    def identity_state(self):
        raise NotImplementedError

    def act(self, state, letter: int):
        raise NotImplementedError

    def distance_lower_bound(self, state) -> float:
        raise NotImplementedError

    def area_lower_bound(self, w: Word) -> int:
        """Admissible lower bound on van Kampen area, used to steer searches.

        Each relator insertion shortens a word by at most the relator length.
        """
        m = self.presentation.max_relator_length
        return -(-len(w) // m) if m else 0

    def index(self) -> "_DictIndex":
        return _DictIndex(self)

    def rotation_seeds(self) -> list[Word] | None:
        """Prefixes such that every nontrivial cyclically reduced null word has
        a rotation starting with one of them, or ``None`` for no such list."""
        return None


class _DictIndex:
    """Element lookup keyed by an exact hashable normal form."""

    def __init__(self, model: GroupModel):
        self.model = model
        self._ids: dict = {}

    def get(self, w: Word) -> int | None:
        return self._ids.get(self.model.normal_form(w))

    def add(self, w: Word, ident: int) -> None:
        self._ids[self.model.normal_form(w)] = ident


class FreeAbelianModel(GroupModel):
    """Z^k with commutator relators; elements are integer vectors."""

    def __init__(self, rank: int = 2):
        rels = tuple(commutator((i,), (j,)) for i, j in itertools.combinations(range(1, rank + 1), 2))
        super().__init__(Presentation(rank, rels))
        self.rank = rank
        self.name = f"z{rank}"

    def normal_form(self, w: Word) -> tuple[int, ...]:
        v = [0] * self.rank
        for x in w:
            if x == 0 or abs(x) > self.rank:
                raise WordError(f"invalid letter {x}")
            v[abs(x) - 1] += 1 if x > 0 else -1
        return tuple(v)

    def is_identity(self, w: Word) -> bool:
        return not any(self.normal_form(w))

    def identity_state(self):
        return (0,) * self.rank

    def act(self, state, letter):
        v = list(state)
        v[abs(letter) - 1] += 1 if letter > 0 else -1
        return tuple(v)

    def distance_lower_bound(self, state) -> float:
        return sum(abs(c) for c in state)

    def area_lower_bound(self, w: Word) -> int:
        if self.rank != 2:
            return super().area_lower_bound(w)
        return lattice_winding_area(w)


def lattice_winding(w: Word) -> dict[tuple[int, int], int]:
    """Winding number of a closed Z^2 lattice path around each unit square.

    Square ``(i, j)`` is ``[i, i+1] x [j, j+1]``; only nonzero entries are kept.
    The loop is assumed closed.
    """
    x = y = 0
    horizontal = []
    ys = [0]
    for letter in w:
        if abs(letter) == 1:
            step = 1 if letter > 0 else -1
            horizontal.append((min(x, x + step), y, step))
            x += step
        else:
            y += 1 if letter > 0 else -1
            ys.append(y)
    lo = min(ys)
    wind: dict[tuple[int, int], int] = {}
    # a rightward edge above a square's centre winds it clockwise (-1)
    for col, height, step in horizontal:
        for j in range(lo, height):
            wind[(col, j)] = wind.get((col, j), 0) - step
    return {k: v for k, v in wind.items() if v}


def lattice_winding_area(w: Word) -> int:
    return sum(abs(v) for v in lattice_winding(w).values())


class FreeGroupModel(GroupModel):
    def __init__(self, rank: int = 2):
        super().__init__(Presentation(rank, ()))
        self.name = f"f{rank}"

    def normal_form(self, w: Word) -> Word:
        return free_reduce(w, self.generator_count)

    def is_identity(self, w: Word) -> bool:
        return not self.normal_form(w)

    def identity_state(self):
        return ()

    def act(self, state, letter):
        if state and state[-1] == -letter:
            return state[:-1]
        return state + (letter,)

    def distance_lower_bound(self, state) -> float:
        return len(state)

    def area_lower_bound(self, w: Word) -> int:
        return 0


@dataclass(frozen=True, eq=False)
class SurfaceElement:
    """Genus-2 element; equality is decided exactly by Dehn's algorithm."""

    word: Word
    presentation: Presentation = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, SurfaceElement):
            return NotImplemented
        return not dehn_reduce(self.word + inverse(other.word), self.presentation)

    __hash__ = None

    def is_identity(self) -> bool:
        return not self.word


class SurfaceGroupModel(GroupModel):
    """Fundamental group of the closed genus-2 surface, ``<a,b,c,d | [a,b][c,d]>``.

    The word problem is decided by Dehn's algorithm.  The octagon side
    pairings give a faithful action on H^2 that is used only for pruning
    and bucketing; every equality is confirmed exactly.
    """

    name = "genus2"

    def __init__(self):
        super().__init__(Presentation(4, (hyp.GENUS2_RELATOR,), small_cancellation=True))
        self.octagons = hyp.octagon_group()

    def normal_form(self, w: Word) -> SurfaceElement:
        return SurfaceElement(dehn_reduce(w, self.presentation), self.presentation)

    def is_identity(self, w: Word) -> bool:
        return not dehn_reduce(w, self.presentation)

    def identity_state(self):
        return np.eye(3)

    def act(self, state, letter):
        return state @ self.octagons.matrices[letter]

    def distance_lower_bound(self, state) -> float:
        # every generator moves the base point by exactly `step`
        d = hyp.distance(hyp.ORIGIN, state @ hyp.ORIGIN)
        # acosh near 1 turns 1e-12 rounding into ~1e-6; nonidentity elements score >= 1
        return d / self.octagons.step - 1e-3

    def area_lower_bound(self, w: Word) -> int:
        return -(-len(w) // 8)

    def index(self) -> "_PointIndex":
        return _PointIndex(self)

    def rotation_seeds(self) -> list[Word]:
        # Greendlinger: a null cyclic word contains more than half of a relator
        n = len(hyp.GENUS2_RELATOR) // 2 + 1
        return sorted({r[:n] for _, r in self.presentation.cyclic_relators()})


class _PointIndex:
    """Spatial buckets on tile centres; candidates are confirmed with Dehn's algorithm."""

    cell = 0.5

    def __init__(self, model: SurfaceGroupModel):
        self.model = model
        self._cells: dict[tuple[int, int, int], list[tuple[Word, int]]] = {}

    def _key(self, w: Word) -> tuple[int, int, int]:
        c = self.model.octagons.center(w)
        return tuple(int(math.floor(v / self.cell)) for v in c)

    def get(self, w: Word) -> int | None:
        kx, ky, kz = self._key(w)
        p = self.model.presentation
        for dx, dy, dz in itertools.product((-1, 0, 1), repeat=3):
            for other, ident in self._cells.get((kx + dx, ky + dy, kz + dz), ()):
                if not dehn_reduce(w + inverse(other), p):
                    return ident
        return None

    def add(self, w: Word, ident: int) -> None:
        self._cells.setdefault(self._key(w), []).append((w, ident))


def is_null(w: Word, model: GroupModel) -> bool:
    return model.is_identity(model.presentation.check_word(w))


def builtin_model(name: str) -> GroupModel:
    name = name.lower()
    if name in ("z2", "grid"):
        return FreeAbelianModel(2)
    if name == "z3":
        return FreeAbelianModel(3)
    if name == "f2":
        return FreeGroupModel(2)
    if name in ("genus2", "h2"):
        return SurfaceGroupModel()
    raise ValueError(f"unknown built-in group {name!r}")


@dataclass
class CayleyBall:
    """Finite piece of the universal cover of the presentation complex.

    ``elements[i]`` is a geodesic spelling of element ``i`` and
    ``distance[i]`` its word length.  ``edges`` holds ``(i, g, j)`` with
    ``j = i * g`` for positive generators ``g``; ``two_cells`` holds
    ``(base, relator_index)``.
    """

    radius: int
    elements: list[Word]
    distance: list[int]
    edges: list[tuple[int, int, int]]
    two_cells: list[tuple[int, int]]
    presentation: Presentation
    step: dict[tuple[int, int], int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        self._edge_ids = {(i, g): n for n, (i, g, _) in enumerate(self.edges)}

    def edge_id(self, start: int, generator: int) -> int:
        return self._edge_ids[(start, generator)]

    def walk(self, w: Word, start: int = 0) -> list[int]:
        """Vertex ids visited by the path spelling ``w``; KeyError when it leaves the ball."""
        path = [start]
        v = start
        for x in w:
            v = self.step[(v, x)]
            path.append(v)
        return path

    def path_chain(self, w: Word, start: int = 0) -> dict[int, int]:
        """Cellular 1-chain (edge id -> coefficient) of the path spelling ``w``."""
        chain: dict[int, int] = {}
        v = start
        for x in w:
            u = self.step[(v, x)]
            if x > 0:
                e, s = self.edge_id(v, x), 1
            else:
                e, s = self.edge_id(u, -x), -1
            chain[e] = chain.get(e, 0) + s
            v = u
        return {e: c for e, c in chain.items() if c}

    def cell_boundary(self, cell: int) -> dict[int, int]:
        base, rel = self.two_cells[cell]
        return self.path_chain(self.presentation.relators[rel], base)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def cell_count(self) -> int:
        return len(self.two_cells)

    def boundary_columns(self) -> list[dict[int, int]]:
        return [self.cell_boundary(c) for c in range(len(self.two_cells))]

    def cycle(self, w: Word, start: int = 0) -> dict[int, int]:
        """Cellular 1-cycle of a closed path; ValueError if ``w`` does not close up."""
        path = self.walk(w, start)
        if path[-1] != path[0]:
            raise ValueError(f"{format_word(w)} does not close up in the ball")
        return self.path_chain(w, start)


def cayley_ball(model: GroupModel, radius: int, max_elements: int = 200_000) -> CayleyBall:
    """Breadth-first ball of the given word-metric radius."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    letters = model.letters()
    index = model.index()
    elements: list[Word] = [()]
    dist = [0]
    index.add((), 0)
    step: dict[tuple[int, int], int] = {}
    frontier = [0]
    for r in range(1, radius + 1):
        nxt = []
        for v in frontier:
            for x in letters:
                if (v, x) in step:
                    continue
                w = free_reduce(elements[v] + (x,))
                u = index.get(w)
                if u is None:
                    if len(elements) >= max_elements:
                        raise BallBudgetExceeded(r - 1, len(elements))
                    u = len(elements)
                    elements.append(w)
                    dist.append(r)
                    index.add(w, u)
                    nxt.append(u)
                step[(v, x)] = u
                step[(u, -x)] = v
        frontier = nxt
    # close up: links between elements on the outer sphere
    for v in frontier:
        for x in letters:
            if (v, x) not in step:
                u = index.get(free_reduce(elements[v] + (x,)))
                if u is not None:
                    step[(v, x)] = u
                    step[(u, -x)] = v
    edges = sorted(
        (v, x, u) for (v, x), u in step.items() if x > 0
    )
    cells = []
    seen = set()
    pres = model.presentation
    for ri, rel in enumerate(pres.relators):
        periods = [k for k in range(len(rel)) if rotations(rel)[k] == rel]
        for v in range(len(elements)):
            try:
                path = _walk(step, rel, v)
            except KeyError:
                continue
            key = (ri, min(path[k] for k in periods))
            if key not in seen:
                seen.add(key)
                cells.append((key[1], ri))
    cells.sort()
    return CayleyBall(radius, elements, dist, edges, cells, pres, step)


def _walk(step, w, v):
    path = [v]
    for x in w:
        v = step[(v, x)]
        path.append(v)
    return path
