"""Double-pass parametric down-conversion source.

One pump pass emits a polarization singlet into (a1, b1); the reflected
pass emits into (a2, b2).  Conditioning on two pairs total leaves three
cases: both pairs from the first pass, both from the second, or one from
each.  The emission is their coherent superposition with configurable
case weights; same-pass components pick up bosonic double-occupation
structure and are renormalized, so the weights mean exactly what they say.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .states import H, V, PureState, ket

UPPER_ARM = ("a1", "b1")
LOWER_ARM = ("a2", "b2")

# classical uniform choice over (pass i, pass j): (1,1), (2,2), {(1,2),(2,1)}
DEFAULT_WEIGHTS = (0.25, 0.25, 0.5)


@dataclass(frozen=True)
class CaseWeights:
    """Probability weights of the three two-pair emission cases."""

    upper_upper: float = DEFAULT_WEIGHTS[0]
    lower_lower: float = DEFAULT_WEIGHTS[1]
    mixed: float = DEFAULT_WEIGHTS[2]

    def __post_init__(self):
        w = self.as_tuple()
        if any(x < 0 for x in w):
            raise ValueError(f"negative case weight in {w}")
        if abs(sum(w) - 1.0) > 1e-9:
            raise ValueError(f"case weights must sum to 1, got {sum(w)!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.upper_upper, self.lower_lower, self.mixed)


def pdc_pair(a: str, b: str) -> PureState:
    """Polarization singlet (|H>_a |V>_b - |V>_a |H>_b) / sqrt(2)."""
    if a == b:
        raise ValueError("pair modes must be distinct")
    s = ket((a, H), (b, V)) - ket((a, V), (b, H))
    return s.normalized()


def two_pair_product(i: int, j: int) -> PureState:
    """Two pairs, one from pass ``i`` and one from pass ``j``, normalized.

    For i == j the bosonic product develops double occupations with
    sqrt(2) enhancements; the state is renormalized afterwards so every
    case enters the superposition with unit norm.
    """
    arms = {1: UPPER_ARM, 2: LOWER_ARM}
    if i not in arms or j not in arms:
        raise ValueError(f"pass index must be 1 or 2, got ({i}, {j})")
    first = pdc_pair(*arms[i])
    second = pdc_pair(*arms[j])
    return first.product(second).normalized()


def dual_pass_emission(weights: CaseWeights | None = None) -> PureState:
    """Coherent three-case superposition with amplitudes sqrt(w_k)."""
    weights = weights or CaseWeights()
    w1, w2, w3 = weights.as_tuple()
    out = PureState()
    if w1:
        out = out + math.sqrt(w1) * two_pair_product(1, 1)
    if w2:
        out = out + math.sqrt(w2) * two_pair_product(2, 2)
    if w3:
        out = out + math.sqrt(w3) * two_pair_product(1, 2)
    return out
