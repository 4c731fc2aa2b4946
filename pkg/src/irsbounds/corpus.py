"""Bundled subgroup tests used for regression and soundness runs.

The JSON files under ``data/tests`` are generated by `build_corpus`; the
generator is kept so the files can be re-derived and checked.
"""
from __future__ import annotations

import random
from fractions import Fraction
from importlib import resources
from itertools import combinations

from .freegroup import IDENTITY, ball, format_word
from .hierarchy import Challenge, SubgroupTest

RANK = 2


def _name(w) -> str:
    """File-safe word name: an inverse letter x^-1 is written "x-"."""
    return "".join(c.lower() + "-" if c.isupper() else c for c in format_word(w))


def membership_words(rank: int = RANK, max_len: int = 2) -> list:
    return [w for w in ball(rank, max_len).elements if w != IDENTITY]


def random_test(seed: int, rank: int = RANK, radius: int = 2) -> SubgroupTest:
    """1 to 3 challenges on small random domains with random tables and weights."""
    rng = random.Random(seed)
    words = membership_words(rank, radius)
    k = rng.randint(1, 3)
    chs = []
    for _ in range(k):
        delta = tuple(rng.sample(words, rng.randint(1, 3)))
        table = {}
        for size in range(len(delta) + 1):
            for sub in combinations(delta, size):
                table[frozenset(sub)] = rng.randint(0, 1)
        chs.append(Challenge(delta, table))
    raw = [rng.randint(1, 6) for _ in range(k)]
    mu = tuple(Fraction(x, sum(raw)) for x in raw)
    return SubgroupTest(rank, tuple(chs), mu)


def build_corpus() -> dict:
    """Name -> test: constants, membership for every |w| <= 2, five random tests."""
    out = {"const1": SubgroupTest.single(RANK, Challenge.constant(1)),
           "const0": SubgroupTest.single(RANK, Challenge.constant(0))}
    for w in membership_words():
        out[f"member_{_name(w)}"] = SubgroupTest.single(RANK, Challenge.membership(w))
    for seed in range(5):
        out[f"random_{seed}"] = random_test(seed)
    return out


def corpus_files() -> list:
    d = resources.files("irsbounds") / "data" / "tests"
    return sorted((p for p in d.iterdir() if p.name.endswith(".json")), key=lambda p: p.name)


def load_corpus() -> dict:
    from .formats import loads, test_from_json
    return {p.name[:-5]: test_from_json(loads(p.read_text(), p.name), p.name)
            for p in corpus_files()}


def write_corpus(directory) -> None:
    from pathlib import Path

    from .formats import save_test
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name, T in build_corpus().items():
        save_test(T, d / f"{name}.json")
