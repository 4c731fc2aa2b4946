"""Exact rational simplex (two-phase tableau).

Variables are nonnegative.  Rows are ``a·x + b = 0`` or ``a·x + b >= 0``.
Pivoting uses Bland's rule by default; Dantzig's rule is available for
comparison and is guarded by basis-repetition detection.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

EQ = "EQ"
GEQ = "GEQ"

ZERO = Fraction(0)


class CyclingError(RuntimeError):
    pass


@dataclass(frozen=True)
class LPResult:
    status: str  # optimal | infeasible | unbounded
    optimum: Fraction | None = None
    witness: tuple | None = None
    pivots: int = 0


class _Tableau:
    def __init__(self, rows, rhs, basis, rule, max_pivots):
        self.rows = rows          # list[list[Fraction]]
        self.rhs = rhs            # list[Fraction], kept >= 0
        self.basis = basis        # basic column per row
        self.rule = rule
        self.max_pivots = max_pivots
        self.pivots = 0
        self.seen: set = set()

    def pivot(self, r: int, c: int, obj: list, obj_val: list) -> None:
        row = self.rows[r]
        p = row[c]
        if p != 1:
            inv_p = 1 / p
            self.rows[r] = row = [v * inv_p if v else ZERO for v in row]
            self.rhs[r] *= inv_p
        nz = [(j, v) for j, v in enumerate(row) if v]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[c]
            if f:
                for j, v in nz:
                    other[j] -= f * v
                self.rhs[i] -= f * self.rhs[r]
        f = obj[c]
        if f:
            for j, v in nz:
                obj[j] -= f * v
            obj_val[0] += f * self.rhs[r]
        self.basis[r] = c
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise CyclingError("pivot limit exceeded")

    def run(self, obj: list, obj_val: list, allowed: int) -> str:
        """Maximize; ``obj`` holds reduced costs (positive means improving)."""
        while True:
            if self.rule == "dantzig":
                key = tuple(sorted(self.basis))
                if key in self.seen:
                    raise CyclingError("basis repeated: the simplex is cycling")
                self.seen.add(key)
                best = ZERO
                c = -1
                for j in range(allowed):
                    if obj[j] > best:
                        best, c = obj[j], j
            else:
                c = next((j for j in range(allowed) if obj[j] > 0), -1)
            if c < 0:
                return "optimal"
            r = -1
            best_ratio = None
            for i, row in enumerate(self.rows):
                a = row[c]
                if a > 0:
                    ratio = self.rhs[i] / a
                    if best_ratio is None or ratio < best_ratio or (
                            ratio == best_ratio and self.rule == "bland"
                            and self.basis[i] < self.basis[r]):
                        best_ratio, r = ratio, i
            if r < 0:
                return "unbounded"
            self.pivot(r, c, obj, obj_val)


def solve(objective: Sequence, rows: Sequence[tuple[Sequence, Fraction, str]],
          n_vars: int, rule: str = "bland", max_pivots: int = 100000) -> LPResult:
    """Maximize objective·x over x >= 0 subject to rows (coeffs, constant, relation)."""
    if rule not in ("bland", "dantzig"):
        raise ValueError(f"unknown pivot rule {rule!r}")
    objective = [Fraction(c) for c in objective]
    if len(objective) != n_vars:
        raise ValueError("objective length must equal the variable count")
    n_slack = sum(1 for _, _, rel in rows if rel == GEQ)
    width = n_vars + n_slack
    A: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    slack_col: list[int | None] = []
    k = n_vars
    for coeffs, const, rel in rows:
        row = [Fraction(v) for v in coeffs] + [ZERO] * n_slack
        b = -Fraction(const)
        s = None
        if rel == GEQ:
            row[k] = Fraction(-1)
            s = k
            k += 1
        elif rel != EQ:
            raise ValueError(f"unknown relation {rel!r}")
        if b < 0:
            row = [-v for v in row]
            b = -b
        A.append(row)
        rhs.append(b)
        slack_col.append(s if s is not None and row[s] == 1 else None)

    # phase 1: artificials only where no slack can start basic
    basis = []
    n_art = 0
    for i in range(len(A)):
        if slack_col[i] is not None:
            basis.append(slack_col[i])
        else:
            basis.append(width + n_art)
            n_art += 1
    total = width + n_art
    art = width
    for i, row in enumerate(A):
        row.extend([ZERO] * n_art)
        if basis[i] >= width:
            row[basis[i]] = Fraction(1)
    tab = _Tableau(A, rhs, basis, rule, max_pivots)
    # maximize -sum(artificials): reduced costs = sum of artificial rows
    obj = [ZERO] * total
    val = [ZERO]
    for i, row in enumerate(A):
        if basis[i] >= width:
            for j in range(width):
                obj[j] += row[j]
            val[0] -= rhs[i]
    if n_art:
        tab.run(obj, val, width)
        if val[0] != 0:
            return LPResult("infeasible", pivots=tab.pivots)
        # drive remaining artificials out of the basis
        i = 0
        while i < len(tab.rows):
            if tab.basis[i] >= art:
                c = next((j for j in range(width) if tab.rows[i][j]), -1)
                if c < 0:
                    del tab.rows[i], tab.rhs[i], tab.basis[i]
                    continue
                tab.pivot(i, c, [ZERO] * total, [ZERO])
            i += 1
    # phase 2
    obj = objective + [ZERO] * (total - n_vars)
    val = [ZERO]
    for i, b in enumerate(tab.basis):
        f = obj[b]
        if f:
            row = tab.rows[i]
            for j in range(total):
                if row[j]:
                    obj[j] -= f * row[j]
            val[0] += f * tab.rhs[i]
    tab.seen.clear()
    status = tab.run(obj, val, width)
    if status == "unbounded":
        return LPResult("unbounded", pivots=tab.pivots)
    x = [ZERO] * n_vars
    for i, b in enumerate(tab.basis):
        if b < n_vars:
            x[b] = tab.rhs[i]
    opt = sum((c * v for c, v in zip(objective, x)), ZERO)
    for coeffs, const, rel in rows:
        lhs = sum((Fraction(a) * v for a, v in zip(coeffs, x)), ZERO) + Fraction(const)
        if (rel == EQ and lhs != 0) or (rel == GEQ and lhs < 0):
            raise AssertionError("simplex witness violates a constraint")
    return LPResult("optimal", opt, tuple(x), tab.pivots)
