"""Cellular automata on the coset space of a finite action.

A rule with words γ_1..γ_m and table φ recolors a point x by
c'(x) = φ(c(x·γ_1), ..., c(x·γ_m)), where x·γ applies the letters of γ left
to right.  Recoloring never moves points, so the stabilizer of each point
(the underlying random subgroup) is untouched.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .hierarchy import FiniteAction

DEFAULT_CAP = 1 << 20


class CapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class LocalRule:
    words: tuple
    sigma_size: int
    table: tuple    # indexed by the base-|Σ| number of the m read colors

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(tuple(w) for w in self.words))
        object.__setattr__(self, "table", tuple(self.table))
        if len(self.table) != self.sigma_size ** len(self.words):
            raise ValueError("rule table must cover every tuple of read colors")
        if any(not 0 <= v < self.sigma_size for v in self.table):
            raise ValueError("rule output outside Σ")

    def __call__(self, colors: Sequence[int]) -> int:
        k = 0
        for c in colors:
            k = k * self.sigma_size + c
        return self.table[k]

    @classmethod
    def identity(cls, sigma_size: int) -> "LocalRule":
        return cls(((),), sigma_size, tuple(range(sigma_size)))

    @classmethod
    def constant(cls, sigma_size: int, value: int = 0) -> "LocalRule":
        return cls((), sigma_size, (value,))


@dataclass(frozen=True)
class ShiftSpace:
    action: FiniteAction
    sigma_size: int
    orbits: tuple = field(init=False, compare=False)

    def __post_init__(self):
        if self.sigma_size < 1:
            raise ValueError("alphabet must be nonempty")
        object.__setattr__(self, "orbits", tuple(tuple(o) for o in self.action.orbits()))

    def colorings(self):
        return itertools.product(range(self.sigma_size), repeat=self.action.n)


def apply(rule: LocalRule, space: ShiftSpace, c: Sequence[int]) -> tuple:
    if rule.sigma_size != space.sigma_size:
        raise ValueError("rule and space use different alphabets")
    act = space.action
    if len(c) != act.n:
        raise ValueError("coloring must color every point")
    return tuple(rule([c[act.act(x, g)] for g in rule.words]) for x in range(act.n))


@dataclass(frozen=True)
class Classification:
    kind: str   # bijective | non-bijective
    injective: bool
    surjective: bool
    collision: tuple | None = None   # two colorings with the same image
    missed: tuple | None = None      # a coloring outside the image


def classify(rule: LocalRule, space: ShiftSpace, cap: int = DEFAULT_CAP) -> Classification:
    """Exhaustive injectivity and surjectivity on the finite coloring space."""
    size = space.sigma_size ** space.action.n
    if size > cap:
        raise CapExceeded(f"{size} colorings exceed the cap {cap}")
    preimage: dict = {}
    collision = None
    for c in space.colorings():
        img = apply(rule, space, c)
        if img in preimage:
            if collision is None:
                collision = (preimage[img], c)
        else:
            preimage[img] = c
    injective = collision is None
    surjective = len(preimage) == size
    missed = None
    if not surjective:
        missed = next(c for c in space.colorings() if c not in preimage)
    if injective != surjective:
        raise AssertionError("a self-map of a finite set is injective iff surjective")
    return Classification("bijective" if injective else "non-bijective",
                          injective, surjective, collision, missed)
