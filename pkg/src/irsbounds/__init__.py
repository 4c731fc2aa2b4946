"""Exact upper and lower bounds on the value of subgroup tests over invariant random
subgroups of free groups, with the supporting local combinatorics."""

from .freegroup import Ball, FreeGroup, ball, format_word, parse_word
from .hierarchy import (Challenge, FiniteAction, SoundnessError, SubgroupTest, inner_scan,
                        outer_hierarchy, sandwich)
from .localstruct import PseudoIRS, enumerate_pseudo, is_pseudo

__version__ = "0.1.0"

__all__ = ["Ball", "FreeGroup", "ball", "format_word", "parse_word", "Challenge",
           "FiniteAction", "SoundnessError", "SubgroupTest", "inner_scan",
           "outer_hierarchy", "sandwich", "PseudoIRS", "enumerate_pseudo", "is_pseudo"]
