"""Local observables on (pseudo subgroup, coloring) pairs.

An observable is (W, W')-continuous: its value depends only on which elements
of the window W lie in the subgroup and on the colors seen on W'.  It is
stored as an explicit table indexed by

    pattern * |Σ|**|W'| + colors

where bit j of ``pattern`` says ``W[j]`` is in the subgroup and ``colors``
is the base-|Σ| number of the colors on W' (first element most significant).
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

from .freegroup import IDENTITY, Ball, conj, format_word, inv, mul, shortlex_key
from .localstruct import CosetPartition, coset_classes, enumerate_pseudo

PADDING_COLOR = 0


class PaddingCounter:
    """Counts reads of the padding color in the direct shift evaluation."""

    reads = 0

    @classmethod
    def reset(cls):
        cls.reads = 0


def _sorted_words(words) -> tuple:
    return tuple(sorted(set(words), key=shortlex_key))


def _digits(value: int, base: int, length: int) -> tuple:
    out = []
    for _ in range(length):
        value, r = divmod(value, base)
        out.append(r)
    return tuple(reversed(out))


def _number(digits: Sequence[int], base: int) -> int:
    v = 0
    for d in digits:
        v = v * base + d
    return v


@dataclass(frozen=True)
class LocalObservable:
    ball: Ball = field(repr=False)
    W: tuple
    Wp: tuple
    sigma_size: int
    omega_size: int
    table: tuple

    def __post_init__(self):
        for w in self.W + self.Wp:
            if w not in self.ball:
                raise ValueError(f"window element {format_word(w, '1')} not in ball")
        if list(self.W) != sorted(set(self.W), key=shortlex_key) or \
                list(self.Wp) != sorted(set(self.Wp), key=shortlex_key):
            raise ValueError("windows must be shortlex-sorted without repeats")
        if len(self.table) != self.domain_size:
            raise ValueError("table is not total on its index set")
        if any(not 0 <= v < self.omega_size for v in self.table):
            raise ValueError("table value outside the output alphabet")

    @property
    def domain_size(self) -> int:
        return (1 << len(self.W)) * self.sigma_size ** len(self.Wp)

    def lookup(self, pattern: int, colors: Sequence[int]) -> int:
        return self.table[pattern * self.sigma_size ** len(self.Wp)
                          + _number(colors, self.sigma_size)]

    def view(self, mask: int, ball_coloring: Sequence[int]) -> tuple[int, tuple]:
        """The (K ∩ W, c|W') local view of a subset mask and a coloring of B."""
        idx = self.ball.index
        pattern = 0
        for j, w in enumerate(self.W):
            if mask >> idx[w] & 1:
                pattern |= 1 << j
        return pattern, tuple(ball_coloring[idx[x]] for x in self.Wp)

    def __call__(self, mask: int, ball_coloring: Sequence[int]) -> int:
        return self.lookup(*self.view(mask, ball_coloring))


def _as_mask(A) -> int:
    return A if isinstance(A, int) else A.mask


def evaluate(psi: LocalObservable, A, class_coloring: Sequence[int],
             partition: CosetPartition | None = None) -> int:
    """Evaluate on a pseudo subgroup and a coloring of its coset classes."""
    mask = _as_mask(A)
    if partition is None:
        partition = coset_classes(psi.ball, mask)
    if len(class_coloring) != len(partition):
        raise ValueError("coloring must assign a color to every coset class")
    if any(not 0 <= c < psi.sigma_size for c in class_coloring):
        raise ValueError("color outside Σ")
    return psi(mask, partition.lift(class_coloring))


def canonical(sigma_size: int, ball: Ball) -> LocalObservable:
    """The observable reading the color of the identity coset."""
    return LocalObservable(ball, (), (IDENTITY,), sigma_size, sigma_size,
                           tuple(range(sigma_size)))


def constant(ball: Ball, sigma_size: int, value: int = 0, omega_size: int = 1) -> LocalObservable:
    return LocalObservable(ball, (), (), sigma_size, omega_size, (value,))


def shift_windows(psi: LocalObservable, gamma) -> tuple[tuple, tuple]:
    """γWγ^-1 and γW', failing when either leaves the ball."""
    W = [conj(w, gamma) for w in psi.W]
    Wp = [mul(gamma, x) for x in psi.Wp]
    for w in W + Wp:
        if w not in psi.ball:
            raise ValueError(
                f"shift by {format_word(gamma, '1')} moves the window outside the ball")
    return tuple(W), tuple(Wp)


def can_shift(psi: LocalObservable, gamma) -> bool:
    return all(conj(w, gamma) in psi.ball for w in psi.W) and \
        all(mul(gamma, x) in psi.ball for x in psi.Wp)


def shift(psi: LocalObservable, gamma) -> LocalObservable:
    """ψ^γ(K, c) = ψ(γ^-1 K γ ∩ B, γ^-1.c), as a (γWγ^-1, γW')-continuous table."""
    W_img, Wp_img = shift_windows(psi, gamma)
    newW, newWp = _sorted_words(W_img), _sorted_words(Wp_img)
    # position in the new windows of the image of each old window element
    w_pos = [newW.index(w) for w in W_img]
    wp_pos = [newWp.index(x) for x in Wp_img]
    s = psi.sigma_size
    table = []
    for pattern in range(1 << len(newW)):
        old_pattern = sum(1 << j for j, p in enumerate(w_pos) if pattern >> p & 1)
        for code in range(s ** len(newWp)):
            colors = _digits(code, s, len(newWp))
            table.append(psi.lookup(old_pattern, [colors[p] for p in wp_pos]))
    return LocalObservable(psi.ball, newW, newWp, s, psi.omega_size, tuple(table))


def evaluate_shift_direct(psi: LocalObservable, gamma, mask: int,
                          ball_coloring: Sequence[int]) -> int:
    """ψ^γ computed from its defining formula, with the padding branch.

    γ^-1 K γ ∩ W is read off through membership of γwγ^-1, and
    (γ^-1.c)(x) = c(γx) when γx ∈ B and the padding color otherwise.
    Every padding read is recorded in `PaddingCounter`.
    """
    idx = psi.ball.index
    pattern = 0
    for j, w in enumerate(psi.W):
        k = idx.get(conj(w, gamma))
        if k is None:
            PaddingCounter.reads += 1
        elif mask >> k & 1:
            pattern |= 1 << j
    colors = []
    for x in psi.Wp:
        k = idx.get(mul(gamma, x))
        if k is None:
            PaddingCounter.reads += 1
            colors.append(PADDING_COLOR)
        else:
            colors.append(ball_coloring[k])
    return psi.lookup(pattern, colors)


def power(psi: LocalObservable, A: Sequence) -> LocalObservable:
    """ψ^A = join of ψ^γ over γ in A (A in shortlex order).

    Output labels encode the tuple (ψ^γ)_γ in base |Ω|, first γ most
    significant; see `decode_power_label`.
    """
    A = _sorted_words(A)
    shifted = [shift(psi, g) for g in A]
    W = _sorted_words(w for p in shifted for w in p.W)
    Wp = _sorted_words(x for p in shifted for x in p.Wp)
    s, o = psi.sigma_size, psi.omega_size
    table = []
    for pattern in range(1 << len(W)):
        for code in range(s ** len(Wp)):
            colors = _digits(code, s, len(Wp))
            outs = []
            for p in shifted:
                pp = sum(1 << j for j, w in enumerate(p.W) if pattern >> W.index(w) & 1)
                outs.append(p.lookup(pp, [colors[Wp.index(x)] for x in p.Wp]))
            table.append(_number(outs, o))
    return LocalObservable(psi.ball, W, Wp, s, o ** len(A), tuple(table))


def decode_power_label(label: int, omega_size: int, length: int) -> tuple:
    return _digits(label, omega_size, length)


@dataclass(frozen=True)
class ObservableBudget:
    """Caps on the constraint family: window sizes, |A|, alphabets, tables.

    ``max_tables`` is the exhaustive cutoff per window pair; above it that
    many tables are drawn with ``seed``.
    """

    max_w: int = 2
    max_wp: int = 1
    max_a: int = 2
    max_sigma: int = 2
    max_omega: int = 2
    max_tables: int = 512
    seed: int = 0

    def __post_init__(self):
        for name in ("max_w", "max_wp", "max_a", "max_tables"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.max_sigma < 1 or self.max_omega < 1:
            raise ValueError("alphabet caps must be positive")

    @property
    def is_zero(self) -> bool:
        return self.max_a == 0 or self.max_tables == 0 or self.max_sigma < 2

    def spec(self) -> str:
        return (f"W={self.max_w},Wp={self.max_wp},A={self.max_a},"
                f"Sigma={self.max_sigma},Omega={self.max_omega},maxpsi={self.max_tables}")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "ObservableBudget":
        if text.strip().lower() in ("none", "zero", "0"):
            return ZERO_BUDGET
        keys = {"W": "max_w", "Wp": "max_wp", "A": "max_a", "Sigma": "max_sigma",
                "Omega": "max_omega", "maxpsi": "max_tables"}
        kwargs = {}
        for part in text.split(","):
            if not part.strip():
                continue
            k, sep, v = part.partition("=")
            if not sep or k.strip() not in keys:
                raise ValueError(f"bad budget entry {part!r}; "
                                 "expected W=w,Wp=wp,A=a,Sigma=s,Omega=o,maxpsi=m")
            kwargs[keys[k.strip()]] = int(v)
        return cls(seed=seed, **kwargs)


ZERO_BUDGET = ObservableBudget(0, 0, 0, 1, 1, 0, 0)


@dataclass(frozen=True)
class ObservableTuple:
    W: tuple
    Wp: tuple
    A: tuple
    sigma_size: int
    omega_size: int
    psi: LocalObservable = field(repr=False)

    def key(self) -> tuple:
        return (self.sigma_size, self.omega_size, self.W, self.Wp, self.A, self.psi.table)

    def describe(self) -> str:
        def ws(ws_):
            return "{" + ",".join(format_word(w, "1") for w in ws_) + "}"
        return (f"W={ws(self.W)} W'={ws(self.Wp)} A={ws(self.A)} "
                f"|Σ|={self.sigma_size} |Ω|={self.omega_size} "
                f"ψ={''.join(map(str, self.psi.table))}")


@lru_cache(maxsize=64)
def _pseudo_masks(ball: Ball) -> tuple:
    return tuple(p.mask for p in enumerate_pseudo(ball))


def realizable_patterns(ball: Ball, W: tuple) -> list[int]:
    """Patterns K ∩ W over pseudo subgroups K of the ball, as masks over W."""
    idx = [ball.index[w] for w in W]
    pats = {sum(1 << j for j, i in enumerate(idx) if m >> i & 1) for m in _pseudo_masks(ball)}
    return sorted(pats)


def window_pairs(ball: Ball, budget: ObservableBudget) -> Iterator[tuple[tuple, tuple]]:
    """(W, W') with |W|, |W'| in budget and W'W'^-1 ⊆ W, in a fixed order."""
    elems = ball.elements
    for kp in range(budget.max_wp + 1):
        for Wp in itertools.combinations(elems, kp):
            required = _sorted_words(mul(x, inv(y)) for x in Wp for y in Wp)
            if any(r not in ball for r in required):
                continue
            rest = [w for w in elems if w not in set(required)]
            for extra in range(budget.max_w - len(required) + 1):
                for more in itertools.combinations(rest, extra):
                    yield _sorted_words(required + more), tuple(Wp)


def shift_domain(ball: Ball, W: tuple, Wp: tuple) -> list:
    """All γ in the ball with γWγ^-1 ⊆ B and γW' ⊆ B."""
    return [g for g in ball.elements
            if all(conj(w, g) in ball for w in W) and all(mul(g, x) in ball for x in Wp)]


def _restricted_growth(length: int, max_blocks: int) -> Iterator[tuple]:
    """Labelings up to relabeling: first occurrences appear in order 0, 1, 2, ..."""
    def rec(prefix, used):
        if len(prefix) == length:
            yield tuple(prefix)
            return
        for v in range(min(used + 1, max_blocks)):
            prefix.append(v)
            yield from rec(prefix, max(used, v + 1))
            prefix.pop()
    if length == 0:
        yield ()
        return
    yield from rec([], 0)


def _canonical_labels(values: Sequence[int]) -> tuple:
    seen: dict = {}
    return tuple(seen.setdefault(v, len(seen)) for v in values)


def _count_growth(length: int, max_blocks: int) -> int:
    # sum of Stirling numbers of the second kind S(length, j), j <= max_blocks
    row = [1]  # S(0, 0)
    for n in range(1, length + 1):
        new = [0] * (n + 1)
        for j in range(1, n + 1):
            new[j] = (row[j - 1] if j - 1 < len(row) else 0) + \
                j * (row[j] if j < len(row) else 0)
        row = new
    return sum(row[: max_blocks + 1]) if length else 1


def table_family(ball: Ball, W: tuple, Wp: tuple, sigma: int, omega: int,
                 budget: ObservableBudget) -> list[tuple]:
    """Tables on (W, W') distinct on the realizable part, up to relabeling Ω.

    Entries at patterns K ∩ W that no pseudo subgroup realizes are never read
    and are fixed to 0, as is the labeling of Ω; both choices leave every
    generated constraint unchanged.
    """
    pats = realizable_patterns(ball, W)
    ncol = sigma ** len(Wp)
    full = (1 << len(W)) * ncol
    slots = [p * ncol + c for p in pats for c in range(ncol)]

    def expand(labels):
        t = [0] * full
        for s, v in zip(slots, labels):
            t[s] = v
        return tuple(t)

    if _count_growth(len(slots), omega) <= budget.max_tables:
        return [expand(lab) for lab in _restricted_growth(len(slots), omega)]
    rng = random.Random(f"{budget.seed}|{sigma}|{omega}|{_key(W)}|{_key(Wp)}")
    out: dict = {}
    attempts = 0
    while len(out) < budget.max_tables and attempts < 64 * budget.max_tables:
        attempts += 1
        lab = _canonical_labels([rng.randrange(omega) for _ in slots])
        out.setdefault(lab, None)
    return sorted(expand(lab) for lab in out)


def _key(words) -> str:
    return ",".join(format_word(w, "1") for w in words)


def enumerate_observables(ball: Ball, budget: ObservableBudget,
                          start: int = 0) -> Iterator[ObservableTuple]:
    """Deterministic stream of constraint-generating tuples (W, W', A, Σ, Ω, ψ).

    Honors γWγ^-1, γW' ⊆ B for γ in A, W'W'^-1 ⊆ W, and |Σ|, |Ω| ≤ |B|
    (alphabet caps above |B| are clipped).  `start` skips that many tuples,
    so a stream can be resumed from a cursor.
    """
    if IDENTITY not in ball:
        raise ValueError("ball must contain the identity")
    if budget.is_zero:
        return
    stream = _stream(ball, budget)
    yield from itertools.islice(stream, start, None)


def _stream(ball: Ball, budget: ObservableBudget) -> Iterator[ObservableTuple]:
    top_sigma = min(budget.max_sigma, len(ball))
    omega = min(budget.max_omega, len(ball))
    pairs = list(window_pairs(ball, budget))
    for sigma in range(2, top_sigma + 1):
        for W, Wp in pairs:
            dom = shift_domain(ball, W, Wp)
            subsets = [A for a in range(1, budget.max_a + 1)
                       for A in itertools.combinations(dom, a)]
            if not subsets:
                continue
            for table in table_family(ball, W, Wp, sigma, omega, budget):
                psi = LocalObservable(ball, W, Wp, sigma, omega, table)
                for A in subsets:
                    yield ObservableTuple(W, Wp, tuple(A), sigma, omega, psi)


def count_observables(ball: Ball, budget: ObservableBudget) -> int:
    return sum(1 for _ in enumerate_observables(ball, budget))
