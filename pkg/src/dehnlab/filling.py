"""Exact van Kampen areas and finite Dehn-function tables.

Area search runs over cyclic words: a van Kampen diagram for ``w`` is one
for every cyclic conjugate, so states are keyed by the least rotation of
the cyclically reduced core.  A move inserts a rotation of a relator (or
its inverse) into the current word at a spot where its last letter cancels
the next letter.  Removing a boundary 2-cell of a minimal diagram is such a
move, so restricting to cancelling insertions loses no diagrams; the
unrestricted search in the tests confirms this on small words.
"""

from __future__ import annotations

import csv
import heapq
import io
import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterator

from .groups import GroupModel, dehn_steps
from .words import (
    Presentation,
    Word,
    cyclic_split,
    format_word,
    free_reduce,
    inverse,
    min_rotation,
    parse_word,
)


class NotFillable(ValueError):
    """The search exhausted its state space without reaching the empty word."""


@dataclass(frozen=True)
class Insertion:
    position: int
    relator: Word
    tag: int  # +(i+1) for rotations of relator i, -(i+1) for its inverse

    def apply(self, w: Word) -> Word:
        return free_reduce(w[: self.position] + self.relator + w[self.position :])


@dataclass
class FillingResult:
    """Outcome of an area search.

    ``area`` is ``None`` when the search stopped early; ``exceeded`` then
    names the limit that was hit (``"budget"`` or ``"states"``).
    """

    word: Word
    area: int | None
    witness: list[Insertion] = field(default_factory=list)
    exceeded: str | None = None
    budget: int | None = None
    length_cap: int | None = None
    states: int = 0

    @property
    def found(self) -> bool:
        return self.area is not None

    def replay(self) -> Word:
        w = self.word
        for ins in self.witness:
            w = ins.apply(w)
        return w

    def to_json(self) -> dict:
        return {
            "word": format_word(self.word),
            "area": self.area,
            "exceeded": self.exceeded,
            "budget": self.budget,
            "length_cap": self.length_cap,
            "witness": [
                {"position": i.position, "relator": format_word(i.relator), "tag": i.tag}
                for i in self.witness
            ],
        }


def _key(w: Word) -> Word:
    return min_rotation(cyclic_split(w)[1])


def vk_area(
    w: Word,
    group: Presentation | GroupModel,
    budget: int = 64,
    length_cap: int | None = None,
    heuristic: Callable[[Word], int] | None = None,
    max_states: int = 2_000_000,
) -> FillingResult:
    """Minimal number of relator cells in a van Kampen diagram for ``w``.

    ``w`` must be null in the group.  With a :class:`GroupModel` the model's
    admissible ``area_lower_bound`` steers an A* search; the result is still
    the exact minimum.  Pass ``heuristic=lambda w: 0`` for plain breadth-first
    order.
    """
    if isinstance(group, GroupModel):
        pres = group.presentation
        if heuristic is None:
            heuristic = group.area_lower_bound
    else:
        pres = group
    if heuristic is None:
        m = pres.max_relator_length
        heuristic = (lambda u: -(-len(u) // m)) if m else (lambda u: 0)
    w = pres.check_word(w)
    if length_cap is None:
        length_cap = 3 * len(w) + pres.max_relator_length
    result = FillingResult(w, None, budget=budget, length_cap=length_cap)

    by_last: dict[int, list[tuple[int, Word]]] = {}
    for tag, r in pres.cyclic_relators():
        by_last.setdefault(r[-1], []).append((tag, r))

    start = _key(w)
    if not start:
        result.area = 0
        return result
    if not pres.relators:
        raise NotFillable(f"{format_word(w)} is not null in a free group")

    # parent links: key -> (parent key, insertion)
    parents: dict[Word, tuple[Word | None, Insertion | None]] = {start: (None, None)}
    linear: dict[Word, Word] = {start: w}
    best_g = {start: 0}
    counter = itertools.count()
    heap = [(heuristic(start), 0, next(counter), start)]  # (f, -g, order, key)
    while heap:
        f, neg_g, _, key = heapq.heappop(heap)
        g = -neg_g
        if g > best_g[key]:
            continue
        if f > budget:
            result.exceeded = "budget"
            return result
        result.states += 1
        if result.states > max_states:
            result.exceeded = "states"
            return result
        cur = linear[key]
        offset, core = cyclic_split(cur)
        for i, letter in enumerate(core):
            for tag, r in by_last.get(-letter, ()):
                ins = Insertion(offset + i, r, tag)
                nxt = ins.apply(cur)
                nkey = _key(nxt)
                if len(nkey) > length_cap:
                    continue
                ng = g + 1
                if nkey in best_g and best_g[nkey] <= ng:
                    continue
                best_g[nkey] = ng
                parents[nkey] = (key, ins)
                linear[nkey] = nxt
                if not nkey:
                    result.area = ng
                    result.witness = _unwind(parents, nkey)
                    return result
                heapq.heappush(heap, (ng + heuristic(nkey), -ng, next(counter), nkey))
    raise NotFillable(
        f"no filling of {format_word(w)} within word-length cap {length_cap}"
    )


def _unwind(parents, key) -> list[Insertion]:
    steps = []
    while True:
        parent, ins = parents[key]
        if parent is None:
            break
        steps.append(ins)
        key = parent
    return steps[::-1]


def dehn_area(w: Word, group: GroupModel) -> FillingResult:
    """Area upper bound from Dehn's algorithm: the number of replacement steps."""
    final, steps = dehn_steps(w, group.presentation)
    if final:
        raise NotFillable(f"{format_word(w)} is not null")
    return FillingResult(tuple(w), steps)


@dataclass
class DehnRow:
    n: int
    value: int
    witness: Word
    exceeded: bool = False
    words: int = 0


@dataclass
class DehnTable:
    """Rows ``(n, max area over null words of length <= n, witness)``."""

    rows: list[DehnRow]
    group: str = ""
    method: str = "exact"

    def value(self, n: int) -> int:
        for row in self.rows:
            if row.n == n:
                return row.value
        raise KeyError(n)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "area", "witness"])
        for row in self.rows:
            wr.writerow([row.n, "Exceeded" if row.exceeded and row.value < 0 else row.value,
                         format_word(row.witness)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "group": self.group,
                "method": self.method,
                "rows": [
                    {"n": r.n, "value": r.value, "witness": format_word(r.witness),
                     "exceeded": r.exceeded, "words": r.words}
                    for r in self.rows
                ],
            },
            sort_keys=True,
            indent=1,
        )


def _letter_rank(x: int) -> int:
    return 2 * abs(x) - (1 if x > 0 else 0)


def null_words(model: GroupModel, length: int) -> Iterator[Word]:
    """Cyclically reduced null words of exactly ``length`` letters.

    Every rotation class appears at least once.  By default only rotations
    starting with their least letter (order a < A < b < B ...) are produced;
    models with ``rotation_seeds`` restrict first letters to those prefixes
    instead.  Prefixes are pruned when their element lies farther from the
    identity than the letters left to spend.
    """
    if length == 0:
        return
    letters = sorted(model.letters(), key=_letter_rank)
    seeds = model.rotation_seeds()
    word: list[int] = []

    def extend(state, floor):
        depth = len(word)
        if depth == length:
            if word[-1] != -word[0] and model.is_identity(tuple(word)):
                yield tuple(word)
            return
        remaining = length - depth
        for x in letters:
            if _letter_rank(x) < floor:
                continue
            if word and word[-1] == -x:
                continue
            nstate = model.act(state, x)
            if model.distance_lower_bound(nstate) > remaining - 1:
                continue
            word.append(x)
            yield from extend(nstate, floor)
            word.pop()

    if seeds is None:
        starts = [((x,), _letter_rank(x)) for x in letters]
    else:
        starts = [(s, 0) for s in seeds if len(s) <= length]
    for prefix, floor in starts:
        state = model.identity_state()
        for x in prefix:
            state = model.act(state, x)
        if model.distance_lower_bound(state) > length - len(prefix):
            continue
        word[:] = prefix
        yield from extend(state, floor)
    word.clear()


def _class_key(w: Word) -> Word:
    return min(min_rotation(w), min_rotation(inverse(w)))


def dehn_function(
    model: GroupModel,
    n_max: int,
    budget: int = 64,
    method: str = "exact",
    max_states: int = 2_000_000,
) -> DehnTable:
    """Exhaustive Dehn-function table for ``n = 0 .. n_max``.

    ``method="exact"`` uses :func:`vk_area`; ``method="dehn"`` counts Dehn's
    algorithm steps (an upper bound on area, exact on the identity).  A row is
    marked ``exceeded`` if any search at or below its length hit a limit.
    """
    if n_max < 0 or budget < 0:
        raise ValueError("n_max and budget must be nonnegative")
    rows = [DehnRow(0, 0, ())]
    best, best_w, exceeded = 0, (), False
    cache: dict[Word, int | None] = {}
    for n in range(1, n_max + 1):
        count = 0
        for w in null_words(model, n):
            count += 1
            if method == "dehn":
                # step counts depend on the rotation, so every word is run
                area = dehn_area(w, model).area
            else:
                key = _class_key(w)
                if key not in cache:
                    cache[key] = vk_area(w, model, budget=budget, max_states=max_states).area
                area = cache[key]
            if area is None:
                exceeded = True
                continue
            if area > best:
                best, best_w = area, w
        rows.append(DehnRow(n, best, best_w, exceeded, count))
    return DehnTable(rows, model.name, method)


def parse_area_word(text: str, pres: Presentation) -> Word:
    return parse_word(text, pres.generator_count)
