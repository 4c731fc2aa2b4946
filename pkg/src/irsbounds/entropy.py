"""Certified Shannon entropy in bits.

Irrational values are carried as rational enclosures (`CertifiedReal`).  The
base-2 logarithm of an integer is enclosed with the atanh series

    ln m = 2 * atanh((m - 1) / (m + 1)),   1 <= m < 2,

evaluated in fixed point with directed rounding and a geometric tail bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Callable, Hashable, Iterable, Mapping, Sequence

DEFAULT_WIDTH = Fraction(1, 2**64)
# refinement stops once enclosures are this tight
MAX_REFINE_BITS = 1024

Rational = Fraction


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


@lru_cache(maxsize=None)
def _atanh_fixed(num: int, den: int, q: int) -> tuple[int, int]:
    """Enclose atanh(num/den) in [lo, hi] / 2**q, for 0 <= num/den <= 1/3."""
    n2, d2 = num * num, den * den
    pn, pd = num, den
    lo = hi = 0
    k = 0
    one = 1 << q
    while True:
        step = (pn << q) // (pd * (2 * k + 1))
        if step == 0 and pn * one < pd:
            break
        lo += step
        hi += step + 1
        pn *= n2
        pd *= d2
        k += 1
    # tail: sum_{j>=k} t^(2j+1)/(2j+1) <= t^(2k+1) / ((2k+1)(1 - t^2))
    hi += _ceil_div((pn << q) * d2, pd * (2 * k + 1) * (d2 - n2)) if num else 0
    return lo, hi


@lru_cache(maxsize=None)
def log2_int(n: int, bits: int) -> tuple[Fraction, Fraction]:
    """Enclosure of log2(n) for a positive integer n, width about 2**-bits."""
    if n < 1:
        raise ValueError("log2 needs a positive integer")
    e = n.bit_length() - 1
    base = 1 << e
    if n == base:
        return Fraction(e), Fraction(e)
    q = bits + 8
    m_lo, m_hi = _atanh_fixed(n - base, n + base, q)
    l2_lo, l2_hi = _atanh_fixed(1, 3, q)
    # log2 m = atanh(t) / atanh(1/3); all quantities positive
    lo = (m_lo << bits) // l2_hi
    hi = _ceil_div(m_hi << bits, l2_lo)
    scale = 1 << bits
    return Fraction(e * scale + lo, scale), Fraction(e * scale + hi, scale)


def _bits_for(width: Fraction) -> int:
    if width <= 0:
        raise ValueError("interval width must be positive")
    # ceil(log2(1/width)) without a float: smallest k with 2^k >= ceil(1/width)
    k = (math.ceil(1 / width) - 1).bit_length()
    return max(1, k + 1)


@dataclass(frozen=True)
class CertifiedReal:
    """A real number known to lie in [lower, upper].

    `refiner`, when present, recomputes the value at a requested width.
    """

    lower: Fraction
    upper: Fraction
    refiner: Callable[[Fraction], "CertifiedReal"] | None = field(
        default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "lower", Fraction(self.lower))
        object.__setattr__(self, "upper", Fraction(self.upper))
        if self.lower > self.upper:
            raise ValueError("empty enclosure")

    @classmethod
    def exact(cls, value) -> "CertifiedReal":
        v = Fraction(value)
        return cls(v, v)

    @property
    def is_exact(self) -> bool:
        return self.lower == self.upper

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    @property
    def value(self) -> Fraction:
        if not self.is_exact:
            raise ValueError("value is only known up to an interval")
        return self.lower

    def midpoint(self) -> Fraction:
        return (self.lower + self.upper) / 2

    def refine(self, width: Fraction) -> "CertifiedReal":
        if self.is_exact or self.width <= width or self.refiner is None:
            return self
        return self.refiner(width)

    def __float__(self):
        return float(self.midpoint())

    def __add__(self, other):
        if not isinstance(other, CertifiedReal):
            other = CertifiedReal.exact(other)
        a, b = self, other
        ref = None
        if a.refiner is not None or b.refiner is not None:
            def ref(w):
                return a.refine(w / 2) + b.refine(w / 2)
        return CertifiedReal(a.lower + b.lower, a.upper + b.upper, ref)

    __radd__ = __add__

    def __neg__(self):
        a = self
        ref = None if a.refiner is None else (lambda w: -a.refine(w))
        return CertifiedReal(-a.upper, -a.lower, ref)

    def __sub__(self, other):
        if not isinstance(other, CertifiedReal):
            other = CertifiedReal.exact(other)
        return self + (-other)

    def __rsub__(self, other):
        return CertifiedReal.exact(other) - self

    def scale(self, c) -> "CertifiedReal":
        """Multiply by a rational constant."""
        c = Fraction(c)
        a = self
        ref = None
        if a.refiner is not None and c != 0:
            def ref(w):
                return a.refine(w / abs(c)).scale(c)
        lo, hi = a.lower * c, a.upper * c
        if c < 0:
            lo, hi = hi, lo
        return CertifiedReal(lo, hi, ref)

    def certainly_le(self, other) -> bool:
        other = other if isinstance(other, CertifiedReal) else CertifiedReal.exact(other)
        return self.upper <= other.lower

    def overlaps(self, other, slack=Fraction(0)) -> bool:
        return (self.lower <= other.upper + slack
                and other.lower <= self.upper + slack)

    def __str__(self):
        if self.is_exact:
            return str(self.lower)
        return f"[{float(self.lower):.17g}, {float(self.upper):.17g}]"


def log2(x, width: Fraction = DEFAULT_WIDTH) -> CertifiedReal:
    """Certified log2 of a positive rational."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("log2 needs a positive argument")
    bits = _bits_for(width) + 2

    def compute(w):
        b = _bits_for(w) + 2
        n_lo, n_hi = log2_int(x.numerator, b)
        d_lo, d_hi = log2_int(x.denominator, b)
        return CertifiedReal(n_lo - d_hi, n_hi - d_lo, compute)

    r = compute(Fraction(1, 2**bits) * 4)
    return r if r.is_exact else r.refine(width)


def _plogp_terms(probs: Sequence[Fraction], bits: int) -> tuple[Fraction, Fraction]:
    lo = hi = Fraction(0)
    for p in probs:
        if p == 0 or p == 1:
            continue
        n_lo, n_hi = log2_int(p.numerator, bits)
        d_lo, d_hi = log2_int(p.denominator, bits)
        # -p log2 p = p (log2 den - log2 num)
        lo += p * (d_lo - n_hi)
        hi += p * (d_hi - n_lo)
    return lo, hi


def entropy_of_probs(probs: Iterable, width: Fraction = DEFAULT_WIDTH) -> CertifiedReal:
    ps = [Fraction(p) for p in probs]
    if any(p < 0 for p in ps):
        raise ValueError("negative probability")
    if sum(ps) != 1:
        raise ValueError("probabilities must sum to exactly 1")
    ps = tuple(sorted(p for p in ps if p))
    return _entropy_sorted(ps, width)


def _entropy_sorted(ps: tuple, width: Fraction) -> CertifiedReal:
    if width <= 0:
        raise ValueError("interval width must be positive")
    extra = max(1, len(ps)).bit_length() + 3

    def compute(w):
        bits = _bits_for(w) + extra
        while True:
            lo, hi = _plogp_terms(ps, bits)
            if hi - lo <= w:
                return CertifiedReal(lo, hi, compute)
            bits *= 2

    return compute(width)


def entropy_of_counts(counts: Iterable[int], width: Fraction = DEFAULT_WIDTH) -> CertifiedReal:
    """Entropy of the empirical distribution with the given positive counts."""
    cs = [c for c in counts if c]
    total = sum(cs)
    return _entropy_sorted(tuple(sorted(Fraction(c, total) for c in cs)), width)


@dataclass(frozen=True)
class FiniteDist:
    atoms: Mapping[Hashable, Fraction]

    def __post_init__(self):
        atoms = {k: Fraction(v) for k, v in self.atoms.items()}
        if any(v < 0 for v in atoms.values()):
            raise ValueError("negative probability")
        if sum(atoms.values()) != 1:
            raise ValueError("probabilities must sum to exactly 1")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def uniform(cls, labels: Iterable) -> "FiniteDist":
        labels = list(labels)
        return cls({x: Fraction(1, len(labels)) for x in labels})

    def marginal(self, f: Callable) -> "FiniteDist":
        out: dict = {}
        for k, p in self.atoms.items():
            key = f(k)
            out[key] = out.get(key, Fraction(0)) + p
        return FiniteDist(out)


@dataclass(frozen=True)
class JointTable:
    """Rectangular joint law of (X, Y): ``probs[x][y]``."""

    probs: tuple

    def __post_init__(self):
        rows = tuple(tuple(Fraction(p) for p in row) for row in self.probs)
        if not rows or len({len(r) for r in rows}) != 1:
            raise ValueError("joint table must be rectangular and nonempty")
        if any(p < 0 for r in rows for p in r):
            raise ValueError("negative probability")
        if sum(p for r in rows for p in r) != 1:
            raise ValueError("joint table must sum to exactly 1")
        object.__setattr__(self, "probs", rows)

    def x_marginal(self) -> list[Fraction]:
        return [sum(r) for r in self.probs]

    def y_marginal(self) -> list[Fraction]:
        return [sum(col) for col in zip(*self.probs)]

    def transpose(self) -> "JointTable":
        return JointTable(tuple(zip(*self.probs)))

    def flat(self) -> list[Fraction]:
        return [p for r in self.probs for p in r]


def shannon(d: FiniteDist, width: Fraction = DEFAULT_WIDTH) -> CertifiedReal:
    return entropy_of_probs(d.atoms.values(), width)


def conditional(j: JointTable, width: Fraction = DEFAULT_WIDTH) -> CertifiedReal:
    """H(X | Y) as the p(y)-weighted mean of the column entropies.

    Each column is enclosed to `width`; the weights sum to 1, so the total
    width is at most `width`, and dyadic columns give exact results.
    """
    total = CertifiedReal.exact(0)
    for col, py in zip(zip(*j.probs), j.y_marginal()):
        if py:
            total = total + entropy_of_probs([p / py for p in col], width).scale(py)
    return total


def conditional_of_counts(joint: Mapping[tuple, int],
                          width: Fraction = DEFAULT_WIDTH) -> CertifiedReal:
    """H(X | Y) from counts keyed by (x, y)."""
    cols: dict = {}
    for (_, y), c in joint.items():
        if c:
            cols.setdefault(y, []).append(c)
    n = sum(sum(c) for c in cols.values())
    total = CertifiedReal.exact(0)
    for y in sorted(cols, key=repr):
        c = cols[y]
        total = total + entropy_of_counts(c, width).scale(Fraction(sum(c), n))
    return total


def rokhlin_distance(j: JointTable, width: Fraction = DEFAULT_WIDTH) -> CertifiedReal:
    return conditional(j, width / 2) + conditional(j.transpose(), width / 2)


def tv_distance(d1: FiniteDist, d2: FiniteDist) -> Fraction:
    if set(d1.atoms) != set(d2.atoms):
        raise ValueError("total variation needs distributions over the same labels")
    return sum((abs(d1.atoms[k] - d2.atoms[k]) for k in d1.atoms), Fraction(0)) / 2


def disagreement(j: JointTable) -> Fraction:
    """P(X != Y) for two observables with a common alphabet (square table)."""
    if len(j.probs) != len(j.probs[0]):
        raise ValueError("common alphabet needs a square joint table")
    return 1 - sum(j.probs[i][i] for i in range(len(j.probs)))


def distance_report(j: JointTable) -> dict:
    """Both sides of the Rokhlin-vs-total-variation comparison, unasserted."""
    d_rok = rokhlin_distance(j)
    tv = disagreement(j)
    return {
        "d_rok": d_rok,
        "d_tv": tv,
        "twice_tv": 2 * tv,
        "rok_le_twice_tv": d_rok.upper <= 2 * tv,
        "rok_gt_twice_tv": d_rok.lower > 2 * tv,
    }


@dataclass(frozen=True)
class Rounded:
    value: Fraction
    over_rounded: bool


def rho_with_flag(a, n: int) -> Rounded:
    """Upper n-digit decimal rounding ceil(10^n a) / 10^n of a certified real.

    Refines the enclosure until the ceiling is determined; if it never is,
    rounds the upper endpoint and sets the flag (still an upper bound).
    """
    if n < 1:
        raise ValueError("digits must be >= 1")
    scale = 10 ** n
    if not isinstance(a, CertifiedReal):
        a = CertifiedReal.exact(a)
    bits = 64
    while True:
        m_lo = math.ceil(a.lower * scale)
        m_hi = math.ceil(a.upper * scale)
        if m_lo == m_hi:
            return Rounded(Fraction(m_hi, scale), False)
        if a.refiner is None or bits >= MAX_REFINE_BITS:
            return Rounded(Fraction(m_hi, scale), True)
        bits *= 2
        a = a.refine(Fraction(1, 2**bits))


def rho(a, n: int) -> Fraction:
    return rho_with_flag(a, n).value


def percolation_finite(d: int, mu: FiniteDist, root: int = 0,
                       width: Fraction = DEFAULT_WIDTH) -> CertifiedReal:
    """Percolation entropy of the root color over d cosets.

    `mu` is a law on colorings, given as length-d tuples.  A uniformly random
    ranking of the cosets decides which colors are already revealed; the set
    of earlier cosets S has probability |S|! (d-1-|S|)! / d!.
    """
    if d < 1:
        raise ValueError("need at least one coset")
    if not 0 <= root < d:
        raise ValueError("root coset out of range")
    for label in mu.atoms:
        if len(label) != d:
            raise ValueError("coloring labels must have length d")
    others = [i for i in range(d) if i != root]
    total = CertifiedReal.exact(0)
    n_terms = 2 ** len(others)
    for size in range(len(others) + 1):
        weight = Fraction(math.factorial(size) * math.factorial(d - 1 - size),
                          math.factorial(d))
        for past in combinations(others, size):
            joint = mu.marginal(lambda c, past=past: (c[root], tuple(c[i] for i in past)))
            cond = mu.marginal(lambda c, past=past: tuple(c[i] for i in past))
            w = width / (2 * n_terms)
            h = shannon(joint, w) - shannon(cond, w)
            total = total + h.scale(weight)
    return total
