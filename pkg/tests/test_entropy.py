import random
from fractions import Fraction

import mpmath
import pytest

from irsbounds.entropy import (CertifiedReal, FiniteDist, JointTable, conditional,
                               distance_report, entropy_of_counts, entropy_of_probs, log2,
                               log2_int, percolation_finite, rho, rho_with_flag,
                               rokhlin_distance, shannon, tv_distance)

mpmath.mp.prec = 300
TOL = Fraction(1, 2**38)


def mp_fraction(x):
    return mpmath.mpf(x.numerator) / x.denominator


def encloses(iv: CertifiedReal, value) -> bool:
    return mp_fraction(iv.lower) <= value <= mp_fraction(iv.upper)


def random_joint(rng, rows, cols, den=30):
    raw = [[rng.randint(0, den) for _ in range(cols)] for _ in range(rows)]
    raw[rng.randrange(rows)][rng.randrange(cols)] += 1
    total = sum(map(sum, raw))
    return JointTable(tuple(tuple(Fraction(v, total) for v in r) for r in raw))


def test_log2_int_against_mpmath():
    for m in list(range(1, 70)) + [10**9 + 7, 2**61 - 1, 3**40]:
        lo, hi = log2_int(m, 80)
        assert lo <= hi and hi - lo <= Fraction(1, 2**70)
        assert mp_fraction(lo) <= mpmath.log(m, 2) <= mp_fraction(hi)


def test_log2_rationals_and_powers_of_two():
    rng = random.Random(3)
    for _ in range(50):
        x = Fraction(rng.randint(1, 10**6), rng.randint(1, 10**6))
        iv = log2(x)
        assert iv.width <= Fraction(1, 2**64)
        assert encloses(iv, mpmath.log(mp_fraction(x), 2))
    for j in range(-5, 20):
        assert log2(Fraction(2) ** j).is_exact
        assert log2(Fraction(2) ** j).value == j
    with pytest.raises(ValueError):
        log2(0)


def test_refinement_tightens():
    iv = log2(3, Fraction(1, 2**20))
    fine = iv.refine(Fraction(1, 2**200))
    assert fine.width <= Fraction(1, 2**200)
    assert iv.lower <= fine.lower and fine.upper <= iv.upper


def test_shannon_examples():
    assert shannon(FiniteDist.uniform("ab")).value == 1
    assert shannon(FiniteDist({"x": 1})).value == 0
    iv = shannon(FiniteDist({0: Fraction(1, 3), 1: Fraction(2, 3)}))
    assert iv.width <= Fraction(1, 2**64)
    assert encloses(iv, mpmath.log(3, 2) - mpmath.mpf(2) / 3)


def test_conditional_examples():
    indep = JointTable(tuple(tuple(Fraction(1, 8) for _ in range(2)) for _ in range(4)))
    assert conditional(indep).value == 2
    copy = JointTable(((Fraction(1, 3), 0, 0), (0, Fraction(1, 3), 0), (0, 0, Fraction(1, 3))))
    assert conditional(copy).value == 0
    # rows are x, columns y; mass on (0,0), (1,0), (1,1)
    t = Fraction(1, 3)
    j = JointTable(((t, 0), (t, t)))
    assert conditional(j).value == Fraction(2, 3)


def test_conditional_of_three_point_joint_by_definition():
    rng = random.Random(11)
    for _ in range(30):
        j = random_joint(rng, 3, 3)
        # E_y H(X | Y = y) computed directly with mpmath
        direct = mpmath.mpf(0)
        for y, py in enumerate(j.y_marginal()):
            if py == 0:
                continue
            for row in j.probs:
                p = row[y] / py
                if p:
                    direct -= mp_fraction(py) * mp_fraction(p) * mpmath.log(mp_fraction(p), 2)
        assert encloses(conditional(j), direct)


def test_chain_rule_sample():
    rng = random.Random(5)
    for _ in range(100):
        j = random_joint(rng, rng.randint(1, 5), rng.randint(1, 5))
        w = Fraction(1, 2**40)
        lhs = entropy_of_probs(j.flat(), w)
        rhs = entropy_of_probs(j.y_marginal(), w) + conditional(j, w)
        assert lhs.overlaps(rhs, TOL)


def test_more_information_less_entropy():
    rng = random.Random(9)
    for _ in range(60):
        # X in 3 values, (Y, Z) in 3 x 2 values as columns y * 2 + z
        j = random_joint(rng, 3, 6)
        h_xyz = conditional(j)
        jy = JointTable(tuple(tuple(r[2 * y] + r[2 * y + 1] for y in range(3)) for r in j.probs))
        assert h_xyz.upper <= conditional(jy).upper + TOL


def test_rokhlin_distance_properties():
    t = Fraction(1, 3)
    same = JointTable(((t, 0, 0), (0, t, 0), (0, 0, t)))
    assert rokhlin_distance(same).value == 0
    rng = random.Random(2)
    for _ in range(60):
        j = random_joint(rng, 3, 3)
        hx = entropy_of_probs(j.x_marginal())
        hy = entropy_of_probs(j.y_marginal())
        d = rokhlin_distance(j)
        assert abs(hx.lower - hy.lower) <= d.upper + TOL


def test_tv_examples():
    assert tv_distance(FiniteDist.uniform([0, 1]), FiniteDist({0: 1, 1: 0})) == Fraction(1, 2)
    with pytest.raises(ValueError):
        tv_distance(FiniteDist.uniform([0, 1]), FiniteDist.uniform([0, 2]))


def test_distance_report_is_unasserted():
    h = Fraction(1, 2)
    rep = distance_report(JointTable(((h, 0), (0, h))))
    assert rep["d_rok"].value == 0 and rep["d_tv"] == 0
    # a pair where d_Rok exceeds 2 d_TV: the report flags it and does not raise
    e = Fraction(1, 100)
    rep = distance_report(JointTable(((Fraction(1, 2) - e, e), (0, Fraction(1, 2)))))
    assert rep["rok_gt_twice_tv"]


def test_exactness_detection():
    for j in range(7):
        iv = entropy_of_probs([Fraction(1, 2**j)] * 2**j)
        assert iv.is_exact and iv.value == j
    assert entropy_of_probs([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)]).is_exact
    assert not entropy_of_probs([Fraction(1, 3)] * 3).is_exact
    assert entropy_of_counts([1, 1, 2]).value == Fraction(3, 2)


def test_rho_examples():
    assert rho(1, 3) == 1
    assert rho(log2(3), 2) == Fraction(159, 100)
    assert rho(Fraction(-1, 1000), 1) == 0
    assert rho(Fraction(-11, 100), 1) == Fraction(-1, 10)


def test_rho_refines_ambiguous_enclosures():
    coarse = log2(3, Fraction(1, 4))
    assert coarse.width > Fraction(1, 10**2)
    r = rho_with_flag(coarse, 2)
    assert r.value == Fraction(159, 100) and not r.over_rounded


def test_rho_flags_unrefinable_interval():
    a = CertifiedReal(Fraction(1, 10) - Fraction(1, 10**6), Fraction(1, 10) + Fraction(1, 10**6))
    r = rho_with_flag(a, 1)
    assert r.over_rounded and r.value == Fraction(2, 10)
    assert r.value - a.lower <= 2 * Fraction(1, 10)


def test_percolation_examples():
    for d in (1, 2, 3):
        for sigma in (2, 4):
            labels = [tuple((i // sigma**k) % sigma for k in range(d)) for i in range(sigma**d)]
            assert percolation_finite(d, FiniteDist.uniform(labels)).value == log2(sigma).value
    corr = FiniteDist({(0, 0): Fraction(1, 2), (1, 1): Fraction(1, 2)})
    assert percolation_finite(2, corr).value == Fraction(1, 2)
    assert percolation_finite(3, FiniteDist({(0, 1, 1): 1})).value == 0


def test_percolation_validation():
    with pytest.raises(ValueError):
        percolation_finite(2, FiniteDist({(0,): 1}))
    with pytest.raises(ValueError):
        percolation_finite(2, FiniteDist({(0, 0): 1}), root=2)
