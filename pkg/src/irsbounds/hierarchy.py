"""Subgroup tests and the two-sided bounds on their value.

Lower bounds come from finite actions (each gives a finitely described IRS);
upper bounds from linear programs over PRBS(B_r, n) for growing radius r.
"""
from __future__ import annotations

import itertools
import logging
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .freegroup import IDENTITY, Ball, ball, format_word, shortlex_key
from .localstruct import PseudoIRS, enumerate_pseudo
from .observables import ObservableBudget
from .polytope import RBSRows, lp_max, prbs_polytope

log = logging.getLogger(__name__)


def subset_key(words: Iterable) -> str:
    """Table key of a set of words: shortlex-sorted, comma-joined, Id as "1"."""
    return ",".join(format_word(w, "1") for w in sorted(set(words), key=shortlex_key))


@dataclass(frozen=True)
class Challenge:
    """A {0,1}-valued challenge D(K) = table[K ∩ delta]."""

    delta: tuple
    table: dict       # frozenset of words -> 0/1
    default: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "delta", tuple(sorted(set(self.delta), key=shortlex_key)))
        table = {frozenset(k): int(v) for k, v in self.table.items()}
        for k, v in table.items():
            if v not in (0, 1):
                raise ValueError("challenge values must be 0 or 1")
            if not k <= set(self.delta):
                raise ValueError("challenge table key outside its domain")
        object.__setattr__(self, "table", table)
        if self.default not in (None, 0, 1):
            raise ValueError("default must be 0 or 1")

    def __call__(self, hits: frozenset) -> int:
        v = self.table.get(hits)
        if v is None:
            if self.default is None:
                raise KeyError(f"challenge has no entry for {{{subset_key(hits)}}}")
            return self.default
        return v

    def on_subgroup(self, contains) -> int:
        """Evaluate given a membership predicate for the subgroup."""
        return self(frozenset(w for w in self.delta if contains(w)))

    @classmethod
    def constant(cls, value: int) -> "Challenge":
        return cls((), {frozenset(): value})

    @classmethod
    def membership(cls, w, inside: bool = True) -> "Challenge":
        """D(K) = 1 iff w ∈ K (or iff w ∉ K when inside is False)."""
        v = 1 if inside else 0
        return cls((w,), {frozenset([w]): v, frozenset(): 1 - v})


@dataclass(frozen=True)
class SubgroupTest:
    rank: int
    challenges: tuple
    mu: tuple

    def __post_init__(self):
        object.__setattr__(self, "challenges", tuple(self.challenges))
        object.__setattr__(self, "mu", tuple(Fraction(m) for m in self.mu))
        if len(self.challenges) != len(self.mu) or not self.mu:
            raise ValueError("need one weight per challenge")
        if any(m <= 0 for m in self.mu):
            raise ValueError("challenge weights must be positive")
        if sum(self.mu) != 1:
            raise ValueError("challenge weights must sum to exactly 1")
        for ch in self.challenges:
            for w in ch.delta:
                if any(abs(x) > self.rank for x in w):
                    raise ValueError("challenge word outside the basis")

    @classmethod
    def single(cls, rank: int, challenge: Challenge) -> "SubgroupTest":
        return cls(rank, (challenge,), (Fraction(1),))

    def value_on(self, contains) -> Fraction:
        return sum((m * ch.on_subgroup(contains) for ch, m in zip(self.challenges, self.mu)),
                   Fraction(0))


def mutual_domain(T: SubgroupTest) -> tuple[tuple, int]:
    """Union of the challenge domains and the length of its longest word."""
    words = sorted({w for ch in T.challenges for w in ch.delta}, key=shortlex_key)
    return tuple(words), max((len(w) for w in words), default=0)


def objective(T: SubgroupTest, B: Ball, masks: Sequence[int]) -> list[Fraction]:
    """Linear form π ↦ val(T, π) on the pseudo subgroups with the given masks."""
    delta, _ = mutual_domain(T)
    for w in delta:
        if w not in B:
            raise ValueError(f"domain word {format_word(w, '1')} is not in the ball")
    idx = B.index
    return [T.value_on(lambda w, m=m: bool(m >> idx[w] & 1)) for m in masks]


def value_pseudo(T: SubgroupTest, pi: PseudoIRS) -> Fraction:
    masks = list(pi.weights)
    coeffs = objective(T, pi.ball, masks)
    return sum((c * pi.weights[m] for c, m in zip(coeffs, masks)), Fraction(0))


@dataclass(frozen=True)
class FiniteAction:
    """Right action of the free group on {0..n-1}; perms[g-1] is generator g."""

    n: int
    perms: tuple
    _inv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        perms = tuple(tuple(p) for p in self.perms)
        for p in perms:
            if sorted(p) != list(range(self.n)):
                raise ValueError("each generator must act by a permutation")
        object.__setattr__(self, "perms", perms)
        object.__setattr__(self, "_inv", self.inverses())

    @property
    def rank(self) -> int:
        return len(self.perms)

    def inverses(self) -> tuple:
        out = []
        for p in self.perms:
            q = [0] * self.n
            for i, j in enumerate(p):
                q[j] = i
            out.append(tuple(q))
        return tuple(out)

    def act(self, x: int, w) -> int:
        """x·w, reading the letters of w left to right."""
        inv = self._inv
        for s in w:
            x = self.perms[s - 1][x] if s > 0 else inv[-s - 1][x]
        return x

    def stabilizes(self, x: int, w) -> bool:
        return self.act(x, w) == x

    def restricted(self, B: Ball) -> PseudoIRS:
        """π ∩ B for the IRS of a uniformly random point's stabilizer."""
        weights: dict = {}
        for x in range(self.n):
            m = 0
            for i, w in enumerate(B.elements):
                if self.act(x, w) == x:
                    m |= 1 << i
            weights[m] = weights.get(m, Fraction(0)) + Fraction(1, self.n)
        return PseudoIRS(B, weights)

    def relabel(self, sigma: Sequence[int]) -> "FiniteAction":
        """Conjugate by the point bijection x ↦ sigma[x]."""
        perms = []
        for p in self.perms:
            q = [0] * self.n
            for x in range(self.n):
                q[sigma[x]] = sigma[p[x]]
            perms.append(tuple(q))
        return FiniteAction(self.n, tuple(perms))

    def canonical(self) -> "FiniteAction":
        return min((self.relabel(s) for s in itertools.permutations(range(self.n))),
                   key=lambda a: a.perms)

    def orbits(self) -> list[list[int]]:
        seen = [False] * self.n
        out = []
        for x in range(self.n):
            if seen[x]:
                continue
            orb, stack = [], [x]
            seen[x] = True
            while stack:
                y = stack.pop()
                orb.append(y)
                for p in self.perms + self._inv:
                    z = p[y]
                    if not seen[z]:
                        seen[z] = True
                        stack.append(z)
            out.append(sorted(orb))
        return out

    def to_json(self) -> dict:
        return {"n": self.n, "perms": [list(p) for p in self.perms]}


def value_action(T: SubgroupTest, act: FiniteAction) -> Fraction:
    total = Fraction(0)
    for x in range(act.n):
        total += T.value_on(lambda w, x=x: act.stabilizes(x, w))
    return total / act.n


def all_actions(rank: int, n: int) -> Iterator[FiniteAction]:
    """Every action on n points, one per relabeling class."""
    seen = set()
    for perms in itertools.product(itertools.permutations(range(n)), repeat=rank):
        a = FiniteAction(n, perms).canonical()
        if a.perms not in seen:
            seen.add(a.perms)
            yield a


def random_action(rank: int, n: int, rng: random.Random) -> FiniteAction:
    perms = []
    for _ in range(rank):
        p = list(range(n))
        rng.shuffle(p)
        perms.append(tuple(p))
    return FiniteAction(n, tuple(perms))


@dataclass
class OuterRecord:
    radius: int
    digits: int
    budget: str
    bound: Fraction | None
    running_min: Fraction | None
    witness: dict
    n_psub: int
    n_constraints: int
    n_solved: int
    skipped: list = field(default_factory=list)
    status: str = "optimal"
    seconds: float = 0.0


@dataclass
class InnerRecord:
    n: int
    bound: Fraction | None
    running_max: Fraction | None
    action: FiniteAction | None
    actions_checked: int
    seconds: float = 0.0


@dataclass
class BoundReport:
    outer: list = field(default_factory=list)
    inner: list = field(default_factory=list)

    @property
    def best_outer(self) -> Fraction | None:
        vals = [r.bound for r in self.outer if r.bound is not None]
        return min(vals) if vals else None

    @property
    def best_inner(self) -> Fraction | None:
        vals = [r.running_max for r in self.inner if r.running_max is not None]
        return max(vals) if vals else None

    def best_outer_record(self):
        best = self.best_outer
        return next((r for r in self.outer if r.bound == best), None)

    def best_inner_record(self):
        best = self.best_inner
        return next((r for r in self.inner if r.bound == best), None)


class SoundnessError(AssertionError):
    pass


def inner_scan(T: SubgroupTest, n_max: int, mode: str = "exhaustive",
               count: int = 0, seed: int = 0, on_record=None) -> BoundReport:
    """Running maximum of value_action over finite actions with n <= n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    report = BoundReport()
    best = Fraction(-1)
    best_act = None
    if mode == "exhaustive":
        batches = ((n, all_actions(T.rank, n)) for n in range(1, n_max + 1))
    elif mode == "random":
        rng = random.Random(seed)
        sizes = [rng.randint(1, n_max) for _ in range(count)]
        drawn = [random_action(T.rank, n, rng) for n in sizes]
        batches = ((n, [a for a in drawn if a.n == n]) for n in range(1, n_max + 1))
    else:
        raise ValueError(f"unknown scan mode {mode!r}")
    for n, acts in batches:
        t0 = time.perf_counter()
        level_best = None
        checked = 0
        for act in acts:
            checked += 1
            v = value_action(T, act)
            if level_best is None or v > level_best:
                level_best = v
            if v > best:
                best, best_act = v, act
        rec = InnerRecord(n, level_best, best if best_act is not None else None,
                          best_act, checked, time.perf_counter() - t0)
        report.inner.append(rec)
        if on_record:
            on_record(rec)
    return report


def default_digits(B: Ball) -> int:
    return len(B)


_POLYTOPES: dict = {}
_ENGINES: dict = {}


def level_polytope(B: Ball, budget: ObservableBudget | None, n: int, psubs=None,
                   max_colorings: int | None = None, deadline: float | None = None):
    """PRBS(B, n) memoized per process; the polytope depends only on its key.

    Polytopes cut short by `deadline` are returned but never memoized.
    """
    if psubs is None:
        psubs = enumerate_pseudo(B)
    key = (B.fingerprint(), None if budget is None else (budget.spec(), budget.seed), n,
           max_colorings)
    poly = _POLYTOPES.get(key)
    if poly is None:
        engine = _ENGINES.get(key[::3])
        if engine is None:
            kwargs = {} if max_colorings is None else {"max_colorings": max_colorings}
            engine = _ENGINES[key[::3]] = RBSRows(B, psubs, **kwargs)
        poly = prbs_polytope(B, budget, n, psubs=psubs, engine=engine, deadline=deadline)
        if not poly.truncated:
            _POLYTOPES[key] = poly
    return poly


def outer_hierarchy(T: SubgroupTest, radii: Iterable[int], budget: ObservableBudget | None,
                    digits: int | str = "auto", max_psub: int | None = None,
                    max_colorings: int | None = None, cache_dir=None,
                    on_record=None, max_seconds: float | None = None) -> BoundReport:
    """Upper bounds max{val(T, π) : π ∈ PRBS(B_r, n)} for each radius.

    With digits "auto" the number of decimals is |B_r|.  Each level is a valid
    upper bound on its own; `running_min` is what gives a monotone sequence
    when the observable family is budgeted.  `max_seconds` caps RBS row
    generation per level; a level that hits it keeps the rows built so far.
    """
    _, r0 = mutual_domain(T)
    report = BoundReport()
    running = None
    for r in radii:
        if r < r0:
            raise ValueError(f"radius {r} is below the domain radius {r0}")
        t0 = time.perf_counter()
        B = ball(T.rank, r)
        n = default_digits(B) if digits == "auto" else int(digits)
        psubs = enumerate_pseudo(B, cache_dir=cache_dir)
        spec = budget.spec() if budget is not None else "none"
        if max_psub is not None and len(psubs) > max_psub:
            rec = OuterRecord(r, n, spec, None, running, {}, len(psubs), 0, 0,
                              status="skipped: pseudo-subgroup cap exceeded",
                              seconds=time.perf_counter() - t0)
            report.outer.append(rec)
            if on_record:
                on_record(rec)
            continue
        deadline = None if max_seconds is None else time.monotonic() + max_seconds
        poly = level_polytope(B, budget, n, psubs, max_colorings, deadline)
        obj = objective(T, B, poly.masks)
        res = lp_max(obj, poly)
        if res.status != "optimal":
            raise SoundnessError(f"LP at radius {r} is {res.status}; "
                                 "restrictions of genuine IRSs are always feasible")
        running = res.optimum if running is None else min(running, res.optimum)
        witness = {m: v for m, v in zip(poly.masks, res.witness) if v}
        status = "optimal, truncated by wall-time cap" if poly.truncated else "optimal"
        rec = OuterRecord(r, n, spec, res.optimum, running, witness, len(psubs),
                          len(poly.constraints), len(poly.reduced()), poly.skipped,
                          status=status, seconds=time.perf_counter() - t0)
        report.outer.append(rec)
        if on_record:
            on_record(rec)
    return report


def sandwich(T: SubgroupTest, n_max: int, radii: Iterable[int],
             budget: ObservableBudget | None, digits: int | str = "auto",
             mode: str = "exhaustive", count: int = 0, seed: int = 0,
             on_record=None, **outer_kwargs) -> BoundReport:
    """Certified interval [best inner, best outer] for val(T)."""
    inner = inner_scan(T, n_max, mode, count, seed, on_record=on_record)
    outer = outer_hierarchy(T, radii, budget, digits, on_record=on_record, **outer_kwargs)
    report = BoundReport(outer.outer, inner.inner)
    lo, hi = report.best_inner, report.best_outer
    if lo is not None and hi is not None and lo > hi:
        raise SoundnessError(
            f"inner bound {lo} exceeds outer bound {hi}: "
            f"action {report.best_inner_record().action} vs level "
            f"r={report.best_outer_record().radius}")
    return report
