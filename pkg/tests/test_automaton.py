import itertools

import pytest

from irsbounds.automaton import CapExceeded, LocalRule, ShiftSpace, apply, classify
from irsbounds.freegroup import IDENTITY, parse_word
from irsbounds.hierarchy import FiniteAction, all_actions

from oracles import small_rules

P = parse_word
CYCLE3 = FiniteAction(3, ((1, 2, 0),))


def test_identity_is_bijective():
    for act in all_actions(2, 3):
        cl = classify(LocalRule.identity(2), ShiftSpace(act, 2))
        assert cl.kind == "bijective" and cl.collision is None and cl.missed is None


def test_constant_is_neither():
    cl = classify(LocalRule.constant(2, 1), ShiftSpace(CYCLE3, 2))
    assert cl.kind == "non-bijective"
    assert not cl.injective and not cl.surjective
    assert cl.missed is not None and cl.collision is not None


def test_xor_with_neighbor_collides_on_constants():
    rule = LocalRule((IDENTITY, P("a")), 2, (0, 1, 1, 0))
    space = ShiftSpace(CYCLE3, 2)
    assert apply(rule, space, (0, 0, 0)) == apply(rule, space, (1, 1, 1)) == (0, 0, 0)
    cl = classify(rule, space)
    assert not cl.injective
    a, b = cl.collision
    assert apply(rule, space, a) == apply(rule, space, b) and a != b


def test_rotation_is_bijective():
    rule = LocalRule((P("a"),), 2, (0, 1))
    space = ShiftSpace(CYCLE3, 2)
    assert apply(rule, space, (1, 0, 0)) == (0, 0, 1)
    assert classify(rule, space).kind == "bijective"


def test_injective_iff_surjective_exhaustive():
    rules = list(small_rules(2))
    assert len(rules) == 2 + 5 * 4 + 25 * 16
    for n in (1, 2, 3):
        for act in all_actions(2, n):
            space = ShiftSpace(act, 2)
            for rule in rules:
                cl = classify(rule, space)
                images = {apply(rule, space, c) for c in space.colorings()}
                assert cl.injective == cl.surjective == (len(images) == 2 ** n)


def test_equivariant_under_relabeling():
    rule = LocalRule((P("a"), P("B")), 2, (0, 1, 1, 1))
    for act in all_actions(2, 3):
        for sigma in itertools.permutations(range(3)):
            other = act.relabel(sigma)
            s1, s2 = ShiftSpace(act, 2), ShiftSpace(other, 2)
            for c in s1.colorings():
                moved = [0] * 3
                for x in range(3):
                    moved[sigma[x]] = c[x]
                img = apply(rule, s1, c)
                img2 = apply(rule, s2, moved)
                assert all(img2[sigma[x]] == img[x] for x in range(3))
            assert classify(rule, s1).kind == classify(rule, s2).kind


def test_cap_and_validation():
    big = FiniteAction(12, (tuple((i + 1) % 12 for i in range(12)),))
    with pytest.raises(CapExceeded):
        classify(LocalRule.identity(2), ShiftSpace(big, 2), cap=1000)
    with pytest.raises(ValueError):
        LocalRule((IDENTITY,), 2, (0,))
    with pytest.raises(ValueError):
        LocalRule((IDENTITY,), 2, (0, 2))
    with pytest.raises(ValueError):
        apply(LocalRule.identity(3), ShiftSpace(CYCLE3, 2), (0, 0, 0))
