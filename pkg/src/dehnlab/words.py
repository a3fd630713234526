"""Free-group words and finite presentations.

A word is a tuple of nonzero ints: ``k`` is the k-th generator and ``-k`` its
inverse.  Text uses lowercase letters for generators and uppercase for their
inverses, so ``"abAB"`` is the commutator ``(1, 2, -1, -2)``.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Iterable, Sequence

Word = tuple[int, ...]

_LOWER = string.ascii_lowercase


class WordError(ValueError):
    """Raised for malformed letters or words outside a presentation."""


def free_reduce(letters: Iterable[int], generator_count: int | None = None) -> Word:
    """Cancel adjacent inverse pairs until none remain.

    >>> free_reduce((1, 2, -2, -1))
    ()
    """
    out: list[int] = []
    for x in letters:
        if not isinstance(x, int) or x == 0:
            raise WordError(f"invalid letter {x!r}")
        if generator_count is not None and abs(x) > generator_count:
            raise WordError(f"letter {x} beyond {generator_count} generators")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def cyclic_reduce(w: Word) -> Word:
    """Strip a conjugating prefix/suffix pair from a freely reduced word."""
    i, j = 0, len(w)
    while j - i >= 2 and w[i] == -w[j - 1]:
        i += 1
        j -= 1
    return tuple(w[i:j])


def cyclic_split(w: Word) -> tuple[int, Word]:
    """Return ``(k, core)`` with ``w = w[:k] + core + inverse(w[:k])``."""
    core = cyclic_reduce(w)
    return (len(w) - len(core)) // 2, core


def inverse(w: Word) -> Word:
    return tuple(-x for x in reversed(w))


def multiply(*words: Word) -> Word:
    out: list[int] = []
    for w in words:
        out.extend(w)
    return free_reduce(out)


def power(w: Word, n: int) -> Word:
    if n < 0:
        return power(inverse(w), -n)
    return free_reduce(w * n)


def commutator(u: Word, v: Word) -> Word:
    """``[u, v] = u v u^-1 v^-1``."""
    return multiply(u, v, inverse(u), inverse(v))


def rotations(w: Word) -> list[Word]:
    return [w[i:] + w[:i] for i in range(len(w))] if w else [()]


def min_rotation(w: Word) -> Word:
    """Canonical representative of the cyclic word (lexicographically least)."""
    return min(rotations(w)) if w else ()


def parse_word(text: str, generator_count: int | None = None) -> Word:
    """Parse ``"abAB"`` style text.  ``"1"`` and ``""`` are the empty word."""
    text = text.strip()
    if text in ("", "1", "e"):
        return ()
    letters = []
    for ch in text:
        if ch.isspace() or ch == "*":
            continue
        if ch.lower() not in _LOWER:
            raise WordError(f"invalid letter {ch!r}")
        idx = _LOWER.index(ch.lower()) + 1
        letters.append(idx if ch.islower() else -idx)
    return free_reduce(letters, generator_count)


def format_word(w: Sequence[int]) -> str:
    return "".join(_LOWER[x - 1] if x > 0 else _LOWER[-x - 1].upper() for x in w)


@dataclass(frozen=True)
class Presentation:
    """A finite presentation; relators are stored cyclically reduced.

    ``small_cancellation`` marks presentations on which Dehn's algorithm
    decides the word problem.
    """

    generator_count: int
    relators: tuple[Word, ...]
    small_cancellation: bool = False
    names: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.generator_count < 1:
            raise WordError("need at least one generator")
        rels = []
        for r in self.relators:
            r = cyclic_reduce(free_reduce(r, self.generator_count))
            if not r:
                raise WordError("relators must be nonempty after cyclic reduction")
            rels.append(r)
        object.__setattr__(self, "relators", tuple(rels))

    @property
    def max_relator_length(self) -> int:
        return max((len(r) for r in self.relators), default=0)

    def cyclic_relators(self) -> list[tuple[int, Word]]:
        """All rotations of relators and their inverses, tagged by relator index.

        The tag is ``+(i+1)`` for rotations of relator ``i`` and ``-(i+1)`` for
        rotations of its inverse.  Duplicates (periodic relators) are dropped.
        """
        seen = set()
        out = []
        for i, r in enumerate(self.relators):
            for tag, base in ((i + 1, r), (-(i + 1), inverse(r))):
                for rot in rotations(base):
                    if rot not in seen:
                        seen.add(rot)
                        out.append((tag, rot))
        return out

    def check_word(self, w: Iterable[int]) -> Word:
        return free_reduce(w, self.generator_count)

    def to_text(self) -> str:
        gens = " ".join(_LOWER[i] for i in range(self.generator_count))
        rels = " ".join(format_word(r) for r in self.relators)
        return f"gens: {gens}\nrels: {rels}\n"


def parse_presentation(text: str, small_cancellation: bool = False) -> Presentation:
    """Parse ``gens: a b`` / ``rels: abAB`` text.

    Generators must be the first letters of the alphabet in order; relator
    letters beyond the declared generators are rejected.
    """
    gens: list[str] | None = None
    rel_tokens: list[str] = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(":")
        key = key.strip().lower()
        if key == "gens":
            gens = rest.split()
        elif key == "rels":
            rel_tokens.extend(rest.split())
        elif key == "flags":
            small_cancellation = small_cancellation or "small_cancellation" in rest.split()
        else:
            raise WordError(f"unknown presentation field {key!r}")
    if not gens:
        raise WordError("presentation declares no generators")
    expected = list(_LOWER[: len(gens)])
    if gens != expected:
        raise WordError(f"generators must be {' '.join(expected)}")
    rels = tuple(parse_word(tok, len(gens)) for tok in rel_tokens)
    return Presentation(len(gens), rels, small_cancellation)
