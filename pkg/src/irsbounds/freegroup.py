"""Reduced words, balls and Stallings foldings in a finitely generated free group.

Words are plain tuples of nonzero ints: ``g`` is the g-th generator (1-based)
and ``-g`` its inverse.  The empty tuple is the identity.  Textually, ``a..z``
are generators 1..26 and uppercase letters their inverses; ranks above 26
use ``(g27)`` / ``(g27^-1)``.
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

Word = tuple  # tuple[int, ...]

IDENTITY: Word = ()

_TOKEN = re.compile(r"\(g(\d+)(\^-1)?\)|([a-zA-Z])")


def letter_key(x: int) -> tuple[int, int]:
    """Shortlex letter order: generator index, then + before -."""
    return (abs(x), 0 if x > 0 else 1)


def shortlex_key(w: Word) -> tuple:
    return (len(w), tuple(letter_key(x) for x in w))


def reduce(raw: Iterable[int]) -> Word:
    out: list[int] = []
    for x in raw:
        if x == 0:
            raise ValueError("letter 0 is not a generator")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def mul(u: Word, v: Word) -> Word:
    # both inputs reduced: only the seam can cancel
    i = 0
    n = min(len(u), len(v))
    while i < n and u[len(u) - 1 - i] == -v[i]:
        i += 1
    return u[: len(u) - i] + v[i:]


def inv(u: Word) -> Word:
    return tuple(-x for x in reversed(u))


def conj(u: Word, s: Word) -> Word:
    """Return s u s^-1."""
    return mul(mul(s, u), inv(s))


def parse_word(text: str) -> Word:
    text = text.strip()
    if text in ("", "1", "e", "Id"):
        return IDENTITY
    letters = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ValueError(f"cannot parse word {text!r} at column {pos + 1}")
        if m.group(1) is not None:
            g = int(m.group(1))
            if g < 1:
                raise ValueError(f"generator index must be >= 1 in {text!r}")
            letters.append(-g if m.group(2) else g)
        else:
            ch = m.group(3)
            g = ord(ch.lower()) - ord("a") + 1
            letters.append(g if ch.islower() else -g)
        pos = m.end()
    return reduce(letters)


def format_word(w: Word, identity: str = "") -> str:
    if not w:
        return identity
    parts = []
    for x in w:
        g = abs(x)
        if g <= 26:
            ch = chr(ord("a") + g - 1)
            parts.append(ch if x > 0 else ch.upper())
        else:
            parts.append(f"(g{g})" if x > 0 else f"(g{g}^-1)")
    return "".join(parts)


@dataclass(frozen=True)
class FreeGroup:
    """A free basis of the given rank; the `Basis` of the library."""

    rank: int

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")

    def check(self, w: Sequence[int]) -> None:
        for x in w:
            if x == 0 or abs(x) > self.rank:
                raise ValueError(
                    f"letter {x} out of range for rank {self.rank}")

    def letters(self) -> list[int]:
        """All letters of S and S^-1 in shortlex order."""
        return [s for g in range(1, self.rank + 1) for s in (g, -g)]

    def reduce(self, raw: Sequence[int]) -> Word:
        self.check(raw)
        return reduce(raw)

    def word(self, text: str) -> Word:
        w = parse_word(text)
        self.check(w)
        return w

    def mul(self, u: Word, v: Word) -> Word:
        self.check(u)
        self.check(v)
        return mul(u, v)

    def inv(self, u: Word) -> Word:
        self.check(u)
        return inv(u)

    def conj(self, u: Word, s: Word) -> Word:
        self.check(u)
        self.check(s)
        return conj(u, s)

    def ball(self, r: int) -> "Ball":
        return ball(self.rank, r)


@dataclass(frozen=True)
class Ball:
    """A finite identity-containing, inverse-closed set of reduced words.

    Elements are kept in shortlex order; ``index`` maps a word to its
    position, which is also its bit in subset bitmasks.
    """

    rank: int
    elements: tuple
    radius: int | None = None
    index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        elems = tuple(sorted(set(self.elements), key=shortlex_key))
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "index", {w: i for i, w in enumerate(elems)})
        if IDENTITY not in self.index:
            raise ValueError("a ball must contain the identity")
        for w in elems:
            FreeGroup(self.rank).check(w)
            if inv(w) not in self.index:
                raise ValueError(f"ball not closed under inversion: {format_word(w)}")

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, w) -> bool:
        return w in self.index

    def __iter__(self):
        return iter(self.elements)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.elements)) - 1

    def mask(self, words: Iterable[Word]) -> int:
        m = 0
        for w in words:
            try:
                m |= 1 << self.index[w]
            except KeyError:
                raise ValueError(f"{format_word(w, '1')} is not in the ball") from None
        return m

    def words(self, mask: int) -> list:
        return [w for i, w in enumerate(self.elements) if mask >> i & 1]

    def fingerprint(self) -> str:
        """Stable hash of (rank, elements), used for cache keys."""
        import hashlib

        text = f"{self.rank}:" + ",".join(format_word(w, "1") for w in self.elements)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def issubset(self, other: "Ball") -> bool:
        return self.rank == other.rank and all(w in other.index for w in self.elements)


def ball(rank: int, r: int) -> Ball:
    if r < 0:
        raise ValueError("radius must be >= 0")
    letters = FreeGroup(rank).letters()
    layer = [IDENTITY]
    words = [IDENTITY]
    for _ in range(r):
        nxt = []
        for w in layer:
            for x in letters:
                if w and w[-1] == -x:
                    continue
                nxt.append(w + (x,))
        words.extend(nxt)
        layer = nxt
    return Ball(rank, tuple(words), radius=r)


def ball_size(rank: int, r: int) -> int:
    if rank == 1:
        return 2 * r + 1
    return 1 + 2 * rank * ((2 * rank - 1) ** r - 1) // (2 * rank - 2)


def _slot(x: int) -> int:
    return 2 * (abs(x) - 1) + (0 if x > 0 else 1)


@dataclass(frozen=True)
class SubgroupGraph:
    """Folded Stallings graph with base vertex 0.

    ``succ[v][slot]`` is the endpoint of the edge read from ``v`` along the
    letter with that slot (``2*(g-1)`` for g, ``2*(g-1)+1`` for g^-1), or -1.
    Vertices are numbered by breadth-first search from the base in shortlex
    letter order, so equal subgroups give equal graphs.
    """

    rank: int
    succ: tuple

    @property
    def n_vertices(self) -> int:
        return len(self.succ)

    def edges(self) -> list[tuple[int, int, int]]:
        return [(u, g, row[2 * (g - 1)])
                for u, row in enumerate(self.succ)
                for g in range(1, self.rank + 1) if row[2 * (g - 1)] >= 0]

    def read(self, w: Word, start: int = 0) -> int:
        """Endpoint of the path reading w from start, or -1 if it falls off."""
        v = start
        for x in w:
            v = self.succ[v][_slot(x)]
            if v < 0:
                return -1
        return v


class _Folder:
    """Union-find folding; pending edges are processed FIFO in insertion order."""

    def __init__(self, rank: int):
        self.rank = rank
        self.parent = [0]
        self.out: list[dict] = [{}]
        self.inn: list[dict] = [{}]
        self.queue: deque = deque()

    def new_vertex(self) -> int:
        self.parent.append(len(self.parent))
        self.out.append({})
        self.inn.append({})
        return len(self.parent) - 1

    def find(self, v: int) -> int:
        root = v
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            self.parent[v], v = root, self.parent[v]
        return root

    def add_path(self, w: Word) -> None:
        u = 0
        for i, x in enumerate(w):
            v = 0 if i == len(w) - 1 else self.new_vertex()
            if x > 0:
                self.queue.append((u, x, v))
            else:
                self.queue.append((v, -x, u))
            u = v

    def merge(self, a: int, b: int) -> None:
        a, b = self.find(a), self.find(b)
        if a == b:
            return
        keep, drop = min(a, b), max(a, b)
        self.parent[drop] = keep
        for g, t in list(self.out[drop].items()):
            del self.inn[t][g]
            self.queue.append((keep, g, keep if t == drop else t))
        for g, s in list(self.inn[drop].items()):
            if s == drop:
                continue  # self-loop, already requeued above
            del self.out[s][g]
            self.queue.append((s, g, keep))
        self.out[drop] = {}
        self.inn[drop] = {}

    def run(self) -> None:
        while self.queue:
            u, g, v = self.queue.popleft()
            u, v = self.find(u), self.find(v)
            w = self.out[u].get(g)
            if w is not None:
                if w != v:
                    self.merge(v, w)
                continue
            x = self.inn[v].get(g)
            if x is not None:
                if x != u:
                    self.merge(u, x)
                continue
            self.out[u][g] = v
            self.inn[v][g] = u

    def graph(self) -> SubgroupGraph:
        root = self.find(0)
        number = {root: 0}
        order = [root]
        i = 0
        while i < len(order):
            v = order[i]
            i += 1
            for g in range(1, self.rank + 1):
                for t in (self.out[v].get(g), self.inn[v].get(g)):
                    if t is not None and t not in number:
                        number[t] = len(order)
                        order.append(t)
        succ = []
        for v in order:
            row = [-1] * (2 * self.rank)
            for g, t in self.out[v].items():
                row[2 * (g - 1)] = number[t]
            for g, s in self.inn[v].items():
                row[2 * (g - 1) + 1] = number[s]
            succ.append(tuple(row))
        return SubgroupGraph(self.rank, tuple(succ))


def stallings(rank: int, generators: Iterable[Word]) -> SubgroupGraph:
    """Folded graph of the subgroup generated by `generators`.

    Generators are folded in shortlex order; identity entries are ignored.
    """
    gens = sorted({reduce(w) for w in generators}, key=shortlex_key)
    folder = _Folder(rank)
    for w in gens:
        FreeGroup(rank).check(w)
        if w:
            folder.add_path(w)
    folder.run()
    return folder.graph()


def member(w: Word, g: SubgroupGraph) -> bool:
    return g.read(w) == 0
