import random
from fractions import Fraction

import pytest

from irsbounds.lp import EQ, GEQ, CyclingError, solve

from oracles import beale, lp_vertex_oracle, random_lp


def test_simple_examples():
    one = Fraction(1)
    res = solve([one, one], [([one, one], -one, EQ)], 2)
    assert res.status == "optimal" and res.optimum == 1
    res = solve([one, 0], [([one, one], -one, EQ)], 2)
    assert res.optimum == 1 and res.witness == (1, 0)


def test_infeasible_and_unbounded():
    one = Fraction(1)
    assert solve([one], [([one], one, EQ)], 1).status == "infeasible"
    assert solve([one], [([one], -one, GEQ)], 1).status == "unbounded"


def test_matches_vertex_oracle():
    rng = random.Random(12)
    for _ in range(60):
        obj, rows, n = random_lp(rng)
        res = solve(obj, rows, n)
        best = lp_vertex_oracle(obj, rows, n)
        if best is None:
            assert res.status == "infeasible"
        else:
            assert res.status == "optimal" and res.optimum == best


def test_beale_cycles_under_dantzig_and_bland_terminates():
    obj, rows, n = beale()
    with pytest.raises(CyclingError):
        solve(obj, rows, n, rule="dantzig")
    res = solve(obj, rows, n, rule="bland")
    assert res.status == "optimal" and res.optimum == Fraction(1, 20)
    assert res.optimum == lp_vertex_oracle(obj, rows, n)


def test_redundant_equalities():
    one = Fraction(1)
    rows = [([one, one], -one, EQ), ([2 * one, 2 * one], -2 * one, EQ)]
    res = solve([one, 2 * one], rows, 2)
    assert res.optimum == 2


def test_bad_arguments():
    with pytest.raises(ValueError):
        solve([1], [], 1, rule="steepest")
    with pytest.raises(ValueError):
        solve([1, 2], [], 1)
