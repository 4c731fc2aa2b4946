"""Linear constraints cutting out PIRS(B) and its RBS refinements PRBS(B, n).

Variables are the weights π(K) of the pseudo subgroups of B, in the order of
`enumerate_pseudo`.  A constraint reads ``Σ coeffs[i]·π_i + constant (= or >=) 0``.

Conjugation invariance is imposed per letter s: with D_s = {b ∈ B : sbs^-1 ∈ B},
the mass of {K : K ∩ D_s = Y} must equal the mass of {K : K ∩ sD_s s^-1 = sYs^-1}
for every Y ⊆ D_s.  Summing these over the Y compatible with a pair (Y, N)
gives the equality for the cylinder C(Y, N), so the two families cut out the
same set.

An RBS row for a tuple (W, W', A, Σ, Ω, ψ) has coefficient

    a_K = H_{ν_K}(ψ) + H_{ν_K}(φ_Σ | ψ^A)

where ν_K is uniform on K-invariant colorings, and constant -log2|Σ|; both are
rounded up to n decimals, which keeps every nonnegative solution of the
unrounded row feasible.
"""
from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import lp
from .entropy import (CertifiedReal, conditional_of_counts, entropy_of_counts,
                      log2, rho_with_flag)
from .freegroup import IDENTITY, Ball, conj, format_word, mul
from .localstruct import PseudoIRS, PseudoSubgroup, coset_classes, enumerate_pseudo
from .observables import ObservableBudget, ObservableTuple, enumerate_observables

log = logging.getLogger(__name__)

EQ, GEQ = lp.EQ, lp.GEQ

DEFAULT_MAX_COLORINGS = 1 << 16


@dataclass(frozen=True)
class LinearConstraint:
    coeffs: dict
    constant: Fraction
    relation: str
    provenance: str
    # certified unrounded coefficients and constant, for RBS rows
    certified: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.relation not in (EQ, GEQ):
            raise ValueError(f"unknown relation {self.relation!r}")
        if not self.provenance:
            raise ValueError("constraint needs a provenance tag")
        object.__setattr__(self, "coeffs", {int(i): Fraction(v)
                                            for i, v in sorted(self.coeffs.items()) if v})
        object.__setattr__(self, "constant", Fraction(self.constant))

    def lhs(self, x: Sequence) -> Fraction:
        return sum((c * Fraction(x[i]) for i, c in self.coeffs.items()), Fraction(0)) \
            + self.constant

    def satisfied(self, x: Sequence) -> bool:
        v = self.lhs(x)
        return v == 0 if self.relation == EQ else v >= 0

    def dense(self, n: int) -> list:
        row = [Fraction(0)] * n
        for i, c in self.coeffs.items():
            row[i] = c
        return row

    def signature(self) -> tuple:
        return (self.relation, tuple(self.coeffs.items()), self.constant)


@dataclass
class Polytope:
    ball: Ball
    masks: tuple          # variable i is the pseudo subgroup with masks[i]
    constraints: list
    skipped: list = field(default_factory=list)
    truncated: bool = False   # row generation stopped at a deadline; still an outer bound
    _reduced: tuple | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def n_vars(self) -> int:
        return len(self.masks)

    def contains(self, x: Sequence) -> bool:
        return all(v >= 0 for v in x) and all(c.satisfied(x) for c in self.constraints)

    def violations(self, x: Sequence) -> list:
        return [c for c in self.constraints if not c.satisfied(x)]

    def point(self, pi: PseudoIRS) -> list:
        pos = {m: i for i, m in enumerate(self.masks)}
        x = [Fraction(0)] * self.n_vars
        for m, p in pi.weights.items():
            if m not in pos:
                raise ValueError(f"{m:x} is not a variable of this polytope")
            x[pos[m]] = p
        return x

    def reduced(self) -> list:
        """An equivalent, smaller constraint list for solving.

        Duplicate rows are dropped.  Given Σπ = 1 and π >= 0, a GEQ row is
        the statement Σ (a_K + b) π_K >= 0, so it is implied when every
        a_K + b >= 0 and by any row whose a_K + b are pointwise smaller.
        """
        if self._reduced is not None and self._reduced[0] == len(self.constraints):
            return list(self._reduced[1])
        out = self._reduce()
        self._reduced = (len(self.constraints), tuple(out))
        return out

    def _reduce(self) -> list:
        eqs = []
        seen = set()
        for c in self.constraints:
            if c.relation == EQ:
                sig = c.signature()
                neg = (EQ, tuple((i, -v) for i, v in c.coeffs.items()), -c.constant)
                if sig not in seen and neg not in seen:
                    seen.add(sig)
                    eqs.append(c)
        has_simplex = any(c.provenance == "simplex" for c in eqs)
        geqs = {}
        for c in self.constraints:
            if c.relation != GEQ:
                continue
            if not has_simplex:
                geqs.setdefault(c.signature(), c)
                continue
            v = tuple(c.coeffs.get(i, Fraction(0)) + c.constant for i in range(self.n_vars))
            if min(v, default=0) >= 0:
                continue
            geqs.setdefault(v, c)
        if not has_simplex:
            return eqs + list(geqs.values())
        vecs = sorted(geqs)
        keep = []
        for v in vecs:
            if not any(all(a <= b for a, b in zip(u, v)) for u in keep):
                keep = [u for u in keep if not all(a <= b for a, b in zip(v, u))]
                keep.append(v)
        keep_set = set(keep)
        return eqs + [geqs[v] for v in vecs if v in keep_set]


def simplex_constraint(n: int) -> LinearConstraint:
    return LinearConstraint({i: 1 for i in range(n)}, -1, EQ, "simplex")


def pirs_constraints(ball: Ball, psubs: Sequence[PseudoSubgroup] | None = None) -> list:
    """Total mass one plus the conjugation-invariance equalities."""
    if psubs is None:
        psubs = enumerate_pseudo(ball)
    masks = [p.mask for p in psubs]
    out = [simplex_constraint(len(masks))]
    seen = set()
    for s in [(x,) for x in _letters(ball.rank)]:
        dom = [b for b in ball.elements if conj(b, s) in ball]
        here = [ball.index[b] for b in dom]
        there = [ball.index[conj(b, s)] for b in dom]
        groups: dict = {}
        for i, m in enumerate(masks):
            y_here = sum(1 << j for j, k in enumerate(here) if m >> k & 1)
            y_there = sum(1 << j for j, k in enumerate(there) if m >> k & 1)
            groups.setdefault(y_here, {}).setdefault(i, 0)
            groups[y_here][i] += 1
            groups.setdefault(y_there, {}).setdefault(i, 0)
            groups[y_there][i] -= 1
        for y in sorted(groups):
            coeffs = {i: v for i, v in groups[y].items() if v}
            if not coeffs:
                continue
            key = tuple(sorted(coeffs.items()))
            neg = tuple((i, -v) for i, v in key)
            if key in seen or neg in seen:
                continue
            seen.add(key)
            ys = [format_word(dom[j], "1") for j in range(len(dom)) if y >> j & 1]
            out.append(LinearConstraint(
                coeffs, 0, EQ,
                f"conjugation(s={format_word(s)}, Y={{{','.join(ys)}}})"))
    return out


def _letters(rank: int) -> list:
    return [x for g in range(1, rank + 1) for x in (g, -g)]


class RBSRows:
    """Coefficient engine for RBS rows over the pseudo subgroups of one ball."""

    def __init__(self, ball: Ball, psubs: Sequence[PseudoSubgroup] | None = None,
                 max_colorings: int = DEFAULT_MAX_COLORINGS):
        self.ball = ball
        self.psubs = list(enumerate_pseudo(ball) if psubs is None else psubs)
        self.parts = [coset_classes(ball, p.mask) for p in self.psubs]
        self.max_colorings = max_colorings
        self._entropy_memo: dict = {}
        self._round_memo: dict = {}
        self._key_memo: dict = {}
        self._interned: dict = {}

    def _pattern(self, mask: int, W: tuple, gamma) -> int:
        idx = self.ball.index
        pat = 0
        for j, w in enumerate(W):
            if mask >> idx[conj(w, gamma)] & 1:
                pat |= 1 << j
        return pat

    def signature(self, k: int, tup: ObservableTuple):
        """Count profile determining the coefficient for pseudo subgroup k, or None if too big."""
        ball, psi = self.ball, tup.psi
        mask = self.psubs[k].mask
        part = self.parts[k]
        idx = ball.index
        sigma = tup.sigma_size
        reads = [[part.class_of[idx[x]] for x in psi.Wp]]
        pats = [self._pattern(mask, psi.W, IDENTITY)]
        for g in tup.A:
            reads.append([part.class_of[idx[mul(g, x)]] for x in psi.Wp])
            pats.append(self._pattern(mask, psi.W, g))
        root = part.class_of[idx[IDENTITY]]
        relevant = sorted({root, *(c for r in reads for c in r)})
        if sigma ** len(relevant) > self.max_colorings:
            return None
        pos = {c: i for i, c in enumerate(relevant)}
        reads = [[pos[c] for c in r] for r in reads]
        root = pos[root]
        own: dict = {}
        joint: dict = {}
        for colors in itertools.product(range(sigma), repeat=len(relevant)):
            vals = [psi.lookup(p, [colors[i] for i in r]) for p, r in zip(pats, reads)]
            own[vals[0]] = own.get(vals[0], 0) + 1
            key = (colors[root], tuple(vals[1:]))
            joint[key] = joint.get(key, 0) + 1
        marg: dict = {}
        for (_, y), c in joint.items():
            marg[y] = marg.get(y, 0) + c
        return (tuple(sorted(own.values())), tuple(sorted(joint.values())),
                tuple(sorted(marg.values())), joint)

    def coefficient(self, sig) -> CertifiedReal:
        """Certified a_K for a signature (or for an already-seen signature key)."""
        key = sig[:3] if len(sig) == 4 else sig
        val = self._entropy_memo.get(key)
        if val is None:
            val = entropy_of_counts(sig[0]) + conditional_of_counts(sig[3])
            self._entropy_memo[key] = val
        return val

    def rounded(self, sig, n: int):
        key = (sig[:3] if len(sig) == 4 else sig, n)
        r = self._round_memo.get(key)
        if r is None:
            r = rho_with_flag(self.coefficient(sig), n)
            self._round_memo[key] = r
        return r

    def keys(self, tup: ObservableTuple):
        """Signature keys of every pseudo subgroup for one tuple, or None if skipped.

        Memoized per tuple so the same rows at another digit count reuse the
        coloring enumeration.
        """
        tk = tup.key()
        if tk in self._key_memo:
            return self._key_memo[tk]
        out = []
        for k in range(len(self.psubs)):
            sig = self.signature(k, tup)
            if sig is None:
                out = None
                break
            self.coefficient(sig)
            key = sig[:3]
            out.append(self._interned.setdefault(key, key))
        self._key_memo[tk] = out if out is None else tuple(out)
        return self._key_memo[tk]

    def row(self, tup: ObservableTuple, n: int) -> LinearConstraint | None:
        keys = self.keys(tup)
        if keys is None:
            log.warning("skipping RBS row (coloring cap %d exceeded): %s",
                        self.max_colorings, tup.describe())
            return None
        coeffs = {}
        certified = {}
        over = False
        for k, key in enumerate(keys):
            r = self.rounded(key, n)
            coeffs[k] = r.value
            certified[k] = self._entropy_memo[key]
            over |= r.over_rounded
        const_exact = -log2(tup.sigma_size)
        c = rho_with_flag(const_exact, n)
        over |= c.over_rounded
        tag = f"rbs({tup.describe()}, n={n}{', over-rounded' if over else ''})"
        return LinearConstraint(coeffs, c.value, GEQ, tag, (certified, const_exact))


def rbs_constraint(ball: Ball, tup: ObservableTuple, n: int,
                   engine: RBSRows | None = None) -> LinearConstraint | None:
    """One rounded RBS row; None when the coloring cap forces a skip."""
    if n < 1:
        raise ValueError("digits must be >= 1")
    if IDENTITY not in ball:
        raise ValueError("ball must contain the identity")
    engine = engine or RBSRows(ball)
    return engine.row(tup, n)


def prbs_polytope(ball: Ball, budget: ObservableBudget | None, n: int,
                  psubs: Sequence[PseudoSubgroup] | None = None,
                  max_colorings: int = DEFAULT_MAX_COLORINGS,
                  engine: RBSRows | None = None, deadline: float | None = None) -> Polytope:
    """PIRS rows plus one rounded RBS row per observable tuple of the budget.

    `deadline` is a time.monotonic() instant; past it, generation stops and the
    polytope is marked truncated.  Fewer rows only enlarge it, so optima over
    a truncated polytope remain upper bounds.
    """
    if psubs is None:
        psubs = engine.psubs if engine is not None else enumerate_pseudo(ball)
    constraints = pirs_constraints(ball, psubs)
    skipped = []
    truncated = False
    if budget is not None and not budget.is_zero:
        engine = engine or RBSRows(ball, psubs, max_colorings)
        for k, tup in enumerate(enumerate_observables(ball, budget)):
            if deadline is not None and k % 64 == 0 and time.monotonic() > deadline:
                truncated = True
                break
            row = engine.row(tup, n)
            if row is None:
                skipped.append(tup.describe())
            else:
                constraints.append(row)
    return Polytope(ball, tuple(p.mask for p in psubs), constraints, skipped, truncated)


def lp_max(objective: Sequence, p: Polytope, rule: str = "bland",
           reduce: bool = True) -> lp.LPResult:
    """Exact maximum of objective·π over the polytope."""
    if len(objective) != p.n_vars:
        raise ValueError("objective length must equal the variable count")
    cons = p.reduced() if reduce else p.constraints
    rows = [(c.dense(p.n_vars), c.constant, c.relation) for c in cons]
    res = lp.solve(objective, rows, p.n_vars, rule=rule)
    if res.status == "optimal" and not p.contains(res.witness):
        raise AssertionError("LP witness violates the full constraint list")
    return res


# -- LP text export/import ---------------------------------------------------

def _lcm(a: int, b: int) -> int:
    from math import gcd
    return a * b // gcd(a, b)


def _scaled(coeffs: dict, constant: Fraction) -> tuple[dict, int, int]:
    den = 1
    for v in list(coeffs.values()) + [constant]:
        den = _lcm(den, Fraction(v).denominator)
    return ({i: int(Fraction(v) * den) for i, v in coeffs.items()},
            int(Fraction(constant) * den), den)


def var_name(mask: int) -> str:
    return f"p_{mask:x}"


def _terms(coeffs: dict, masks) -> str:
    parts = []
    for i, v in sorted(coeffs.items()):
        if v == 0:
            continue
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {abs(v)} {var_name(masks[i])}")
    if not parts:
        return "0 " + var_name(masks[0])
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def to_lp_text(p: Polytope, objective: Sequence | None = None) -> str:
    """CPLEX-LP text; each row is scaled to integer coefficients."""
    lines = [f"\\ pseudo-subgroup polytope, rank {p.ball.rank}, |B| = {len(p.ball)}"]
    lines.append("Maximize")
    if objective is None:
        objective = [0] * p.n_vars
    oc, _, oden = _scaled({i: v for i, v in enumerate(objective)}, Fraction(0))
    lines.append(f"\\ objective scaled by {oden}")
    lines.append(" obj: " + _terms(oc, p.masks))
    lines.append("Subject To")
    for k, c in enumerate(p.constraints):
        co, const, _ = _scaled(c.coeffs, c.constant)
        op = "=" if c.relation == EQ else ">="
        lines.append(f"\\ {c.provenance}")
        lines.append(f" c{k}: {_terms(co, p.masks)} {op} {-const}")
    lines.append("Bounds")
    for m in p.masks:
        lines.append(f" {var_name(m)} >= 0")
    lines.append("End")
    return "\n".join(lines) + "\n"


def from_lp_text(text: str) -> tuple[list, list, list]:
    """Parse text written by `to_lp_text`.

    Returns (variable masks, objective as written, constraints) where the
    constraints are LinearConstraint objects over those variables.
    """
    import re

    section = None
    names: list = []
    objective: dict = {}
    rows = []
    term = re.compile(r"([+-]?)\s*(\d+)\s+p_([0-9a-f]+)")
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in ("maximize", "subject to", "bounds", "end"):
            section = low
            continue
        if section == "bounds":
            m = re.fullmatch(r"p_([0-9a-f]+)\s*>=\s*0", line)
            if m and int(m.group(1), 16) not in names:
                names.append(int(m.group(1), 16))
            continue
        label, _, body = line.partition(":")
        if section == "maximize":
            for sgn, val, var in term.findall(body):
                objective[int(var, 16)] = -int(val) if sgn == "-" else int(val)
        elif section == "subject to":
            m = re.fullmatch(r"(.*?)\s*(>=|=)\s*(-?\d+)", body.strip())
            if m is None:
                raise ValueError(f"cannot parse LP row {line!r}")
            coeffs = {}
            for sgn, val, var in term.findall(m.group(1)):
                coeffs[int(var, 16)] = -int(val) if sgn == "-" else int(val)
            rows.append((coeffs, -int(m.group(3)), EQ if m.group(2) == "=" else GEQ,
                         label.strip()))
    pos = {m: i for i, m in enumerate(names)}
    cons = [LinearConstraint({pos[v]: c for v, c in coeffs.items()}, const, rel, tag)
            for coeffs, const, rel, tag in rows]
    obj = [Fraction(objective.get(m, 0)) for m in names]
    return names, obj, cons
