"""Pseudo subgroups of a ball, local coset classes and restriction maps.

A subset A of a ball B is a pseudo subgroup when A = K ∩ B for some subgroup
K.  This holds exactly when <A> ∩ B = A:

* if A = K ∩ B then <A> ≤ K, so <A> ∩ B ⊆ K ∩ B = A, and A ⊆ <A> ∩ B always;
* conversely, take K = <A>.

So the existential condition is decided by one Stallings folding.  Subsets are
bitmasks over the ball's shortlex order (bit i is ``ball.elements[i]``).
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .freegroup import (Ball, SubgroupGraph, format_word, inv, member, mul,
                        stallings)

log = logging.getLogger(__name__)

CACHE_VERSION = 1


@dataclass(frozen=True)
class PseudoSubgroup:
    ball: Ball = field(repr=False)
    mask: int
    witness: SubgroupGraph = field(repr=False, compare=False)

    @property
    def members(self) -> list:
        return self.ball.words(self.mask)

    def __contains__(self, w) -> bool:
        i = self.ball.index.get(w)
        return i is not None and bool(self.mask >> i & 1)

    def label(self) -> str:
        return "{" + ",".join(format_word(w, "1") for w in self.members) + "}"


def closure(ball: Ball, mask: int) -> tuple[int, SubgroupGraph]:
    """Return the mask of <A> ∩ B and the folded graph of <A>."""
    graph = stallings(ball.rank, ball.words(mask))
    out = 0
    for i, w in enumerate(ball.elements):
        if member(w, graph):
            out |= 1 << i
    return out, graph


def _check_subset(ball: Ball, mask: int) -> None:
    if mask < 0 or mask >> len(ball):
        raise ValueError("subset is not contained in the ball")


def is_pseudo(ball: Ball, subset) -> bool:
    """Decide whether `subset` (a mask or an iterable of words) is K ∩ B."""
    mask = subset if isinstance(subset, int) else ball.mask(subset)
    _check_subset(ball, mask)
    return closure(ball, mask)[0] == mask


def pseudo_subgroup(ball: Ball, subset) -> PseudoSubgroup:
    mask = subset if isinstance(subset, int) else ball.mask(subset)
    _check_subset(ball, mask)
    closed, graph = closure(ball, mask)
    if closed != mask:
        raise ValueError("subset is not a pseudo subgroup of the ball")
    return PseudoSubgroup(ball, mask, graph)


def _search(ball: Ball) -> dict[int, SubgroupGraph]:
    # Every pseudo subgroup is reached from {Id} by repeatedly adding one of
    # its own elements and closing, since each intermediate closure stays
    # inside it.
    start, graph = closure(ball, 1)
    found = {start: graph}
    stack = [start]
    n = len(ball)
    while stack:
        mask = stack.pop()
        for i in range(n):
            if mask >> i & 1:
                continue
            nxt, g = closure(ball, mask | 1 << i)
            if nxt not in found:
                found[nxt] = g
                stack.append(nxt)
    return found


def _cache_path(cache_dir, ball: Ball) -> Path:
    return Path(cache_dir) / f"psub-k{ball.rank}-{ball.fingerprint()}.json"


def _load_cache(path: Path, ball: Ball):
    try:
        data = json.loads(path.read_text())
    except (OSError, ValueError):
        return None
    if (data.get("version") != CACHE_VERSION or data.get("rank") != ball.rank
            or data.get("fingerprint") != ball.fingerprint()
            or data.get("radius") != ball.radius):
        log.info("discarding stale pseudo-subgroup cache %s", path)
        return None
    return [PseudoSubgroup(ball, int(h, 16),
                           SubgroupGraph(ball.rank, tuple(tuple(r) for r in succ)))
            for h, succ in zip(data["masks"], data["witnesses"])]


def _store_cache(path: Path, ball: Ball, psubs: list[PseudoSubgroup]) -> None:
    data = {
        "version": CACHE_VERSION,
        "rank": ball.rank,
        "radius": ball.radius,
        "fingerprint": ball.fingerprint(),
        "elements": [format_word(w, "1") for w in ball.elements],
        "masks": [format(p.mask, "x") for p in psubs],
        "witnesses": [[list(r) for r in p.witness.succ] for p in psubs],
    }
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(data))
    os.replace(tmp, path)


def enumerate_pseudo(ball: Ball, cache_dir=None) -> list[PseudoSubgroup]:
    """All pseudo subgroups of `ball`, ordered by bitmask value."""
    if cache_dir is not None:
        from filelock import FileLock

        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        path = _cache_path(cache_dir, ball)
        with FileLock(str(path) + ".lock"):
            cached = _load_cache(path, ball)
            if cached is not None:
                return cached
            psubs = enumerate_pseudo(ball)
            _store_cache(path, ball, psubs)
            return psubs
    found = _search(ball)
    return [PseudoSubgroup(ball, m, found[m]) for m in sorted(found)]


@dataclass(frozen=True)
class CosetPartition:
    """Local cosets: the finest partition of the ball with x ~ y when xy^-1 ∈ A.

    ``classes`` are tuples of element indices, sorted by their least
    (shortlex-first) element; ``class_of[i]`` is the class of element i.
    """

    ball: Ball = field(repr=False)
    classes: tuple
    class_of: tuple

    def __len__(self) -> int:
        return len(self.classes)

    def representatives(self) -> list:
        return [self.ball.elements[c[0]] for c in self.classes]

    def lift(self, coloring: Sequence) -> tuple:
        """Coloring of the ball induced by a coloring of the classes."""
        return tuple(coloring[k] for k in self.class_of)


def coset_classes(ball: Ball, mask: int) -> CosetPartition:
    elems = ball.elements
    n = len(elems)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(i + 1, n):
            k = ball.index.get(mul(elems[i], inv(elems[j])))
            if k is not None and mask >> k & 1:
                a, b = find(i), find(j)
                if a != b:
                    parent[max(a, b)] = min(a, b)
    roots = sorted({find(i) for i in range(n)})
    number = {r: k for k, r in enumerate(roots)}
    class_of = tuple(number[find(i)] for i in range(n))
    classes = [[] for _ in roots]
    for i in range(n):
        classes[class_of[i]].append(i)
    return CosetPartition(ball, tuple(tuple(c) for c in classes), class_of)


def restriction_map(big: Ball, small: Ball) -> list[int]:
    """For each element of `small`, its bit position in `big`."""
    if not small.issubset(big):
        raise ValueError("restriction needs the smaller ball inside the larger one")
    return [big.index[w] for w in small.elements]


def restrict_subset(mask: int, big: Ball, small: Ball, positions=None) -> int:
    """A ∩ B as a mask over `small`."""
    if positions is None:
        positions = restriction_map(big, small)
    out = 0
    for j, i in enumerate(positions):
        if mask >> i & 1:
            out |= 1 << j
    return out


@dataclass(frozen=True)
class PseudoIRS:
    """A rational probability vector on pseudo subgroups, keyed by mask.

    Only the simplex conditions are checked here; conjugation invariance is
    a matter for the polytope constraints.
    """

    ball: Ball = field(repr=False)
    weights: Mapping[int, Fraction]

    def __post_init__(self):
        w = {int(m): Fraction(p) for m, p in self.weights.items() if p != 0}
        if any(p < 0 for p in w.values()):
            raise ValueError("negative weight")
        if sum(w.values()) != 1:
            raise ValueError("weights must sum to exactly 1")
        for m in w:
            _check_subset(self.ball, m)
        object.__setattr__(self, "weights", dict(sorted(w.items())))

    def check_support(self) -> None:
        for m in self.weights:
            if not is_pseudo(self.ball, m):
                raise ValueError(f"support element {m:x} is not a pseudo subgroup")

    def __getitem__(self, mask: int) -> Fraction:
        return self.weights.get(mask, Fraction(0))

    def vector(self, psubs: Iterable[PseudoSubgroup]) -> list[Fraction]:
        return [self[p.mask] for p in psubs]

    @classmethod
    def point_mass(cls, ball: Ball, mask: int) -> "PseudoIRS":
        return cls(ball, {mask: Fraction(1)})

    @classmethod
    def uniform(cls, ball: Ball, masks: Iterable[int]) -> "PseudoIRS":
        masks = list(masks)
        return cls(ball, {m: Fraction(1, len(masks)) for m in masks})


def pushforward(pi: PseudoIRS, small: Ball) -> PseudoIRS:
    positions = restriction_map(pi.ball, small)
    out: dict[int, Fraction] = {}
    for m, p in pi.weights.items():
        r = restrict_subset(m, pi.ball, small, positions)
        out[r] = out.get(r, Fraction(0)) + p
    return PseudoIRS(small, out)
