import json
from fractions import Fraction

import pytest

from irsbounds.freegroup import IDENTITY, ball, parse_word
from irsbounds.hierarchy import all_actions
from irsbounds.localstruct import (PseudoIRS, coset_classes, enumerate_pseudo, is_pseudo,
                                   pseudo_subgroup, pushforward, restrict_subset)

from oracles import brute_pseudo

P = parse_word


def words(*names):
    return [P(x) for x in names]


def test_is_pseudo_examples():
    B1 = ball(1, 1)
    assert is_pseudo(B1, words("1"))
    assert not is_pseudo(B1, words("1", "a"))
    assert is_pseudo(ball(2, 1), words("1", "a", "A"))


def test_is_pseudo_rejects_words_outside_ball():
    with pytest.raises(ValueError):
        is_pseudo(ball(2, 1), words("1", "ab"))


def test_enumerate_examples():
    labels = [p.label() for p in enumerate_pseudo(ball(1, 1))]
    assert labels == ["{1}", "{1,a,A}"]
    labels = [p.label() for p in enumerate_pseudo(ball(2, 1))]
    assert labels == ["{1}", "{1,a,A}", "{1,b,B}", "{1,a,A,b,B}"]
    B = ball(1, 2)
    assert B.mask(words("1", "aa", "AA")) in {p.mask for p in enumerate_pseudo(B)}


@pytest.mark.parametrize("k,r", [(1, 1), (1, 2), (1, 3), (1, 4), (2, 1), (3, 1)])
def test_enumeration_matches_brute_force(k, r):
    B = ball(k, r)
    assert len(B) <= 9
    masks = [p.mask for p in enumerate_pseudo(B)]
    assert masks == brute_pseudo(B)


def test_enumeration_is_sound_and_ordered():
    B = ball(2, 2)
    ps = enumerate_pseudo(B)
    assert all(is_pseudo(B, p.mask) for p in ps)
    assert [p.mask for p in ps] == sorted(p.mask for p in ps)


def test_cache_round_trip(tmp_path):
    B = ball(2, 2)
    first = enumerate_pseudo(B, cache_dir=tmp_path)
    files = list(tmp_path.glob("psub-*.json"))
    assert len(files) == 1
    again = enumerate_pseudo(B, cache_dir=tmp_path)
    assert [p.mask for p in again] == [p.mask for p in first]
    # stale caches (other ball, other version) carry bogus contents and must be ignored
    data = json.loads(files[0].read_text())
    for field, value in (("fingerprint", "0" * 16), ("version", 999), ("radius", 3)):
        bad = dict(data, masks=["1"], witnesses=data["witnesses"][:1], **{field: value})
        files[0].write_text(json.dumps(bad))
        assert [p.mask for p in enumerate_pseudo(B, cache_dir=tmp_path)] == [
            p.mask for p in first]


def test_coset_class_examples():
    B = ball(2, 1)
    part = coset_classes(B, B.mask(words("1", "a", "A")))
    assert len(part) == 3
    assert sorted(sorted(B.elements[i] for i in c) for c in part.classes) == sorted(
        [sorted(words("1", "a", "A")), words("b"), words("B")])
    assert len(coset_classes(B, B.mask([IDENTITY]))) == 5
    assert len(coset_classes(B, B.full_mask)) == 1


def test_coset_classes_monotone():
    B = ball(2, 2)
    ps = enumerate_pseudo(B)
    parts = {p.mask: coset_classes(B, p.mask) for p in ps}
    for p in ps:
        for q in ps:
            if p.mask & ~q.mask == 0:
                fine, coarse = parts[p.mask], parts[q.mask]
                for c in fine.classes:
                    assert len({coarse.class_of[i] for i in c}) == 1


def test_restrict_examples():
    big, small = ball(2, 2), ball(2, 1)
    assert restrict_subset(big.full_mask, big, small) == small.full_mask
    b1, b2 = ball(1, 2), ball(1, 1)
    assert restrict_subset(b1.mask(words("1", "aa", "AA")), b1, b2) == b2.mask([IDENTITY])


def test_restriction_preserves_pseudo():
    big, small = ball(2, 2), ball(2, 1)
    for p in enumerate_pseudo(big):
        assert is_pseudo(small, restrict_subset(p.mask, big, small))


def test_pushforward_examples():
    big, small = ball(2, 2), ball(2, 1)
    pi = pushforward(PseudoIRS.point_mass(big, big.full_mask), small)
    assert pi.weights == {small.full_mask: 1}
    b1 = ball(1, 2)
    ps = enumerate_pseudo(b1)
    pi = pushforward(PseudoIRS.uniform(b1, [p.mask for p in ps]), ball(1, 1))
    assert sum(pi.weights.values()) == 1
    assert len(pi.weights) == 2
    # {1,a,A} survives only from the full ball of radius 2
    full = [p for p in ps if p.mask == b1.full_mask]
    assert pi.weights[ball(1, 1).full_mask] == Fraction(len(full), len(ps))


def test_pushforward_functorial():
    b3, b2, b1 = ball(2, 3), ball(2, 2), ball(2, 1)
    ps = enumerate_pseudo(b2)
    pi = PseudoIRS(b2, {p.mask: Fraction(i + 1, sum(range(1, len(ps) + 1)))
                        for i, p in enumerate(ps)})
    assert pushforward(pushforward(pi, ball(2, 1)), ball(2, 0)) == pushforward(pi, ball(2, 0))
    act = next(a for a in all_actions(2, 3) if a.n == 3 and len(a.orbits()) == 1)
    pi3 = act.restricted(b3)
    assert pushforward(pushforward(pi3, b2), b1) == pushforward(pi3, b1)
    assert sum(pushforward(pi3, b1).weights.values()) == 1


def test_finite_index_stabilizers_are_pseudo():
    for r in (1, 2):
        B = ball(2, r)
        for n in (1, 2, 3):
            for act in all_actions(2, n):
                for m in act.restricted(B).weights:
                    assert is_pseudo(B, m)


def test_pseudo_irs_validation():
    B = ball(2, 1)
    with pytest.raises(ValueError):
        PseudoIRS(B, {1: Fraction(1, 2)})
    with pytest.raises(ValueError):
        PseudoIRS(B, {1: Fraction(3, 2), 3: Fraction(-1, 2)})
    bad = PseudoIRS(B, {B.mask(words("1", "a")): 1})
    with pytest.raises(ValueError):
        bad.check_support()
    with pytest.raises(ValueError):
        pseudo_subgroup(B, words("1", "a"))
