"""Depolarization noise on the channel photons and family classification.

The channel carries three photons, photon k living in a superposition of
the spatial pair (d_k, D_k).  Depolarization acts on polarization only:
per photon a bit flip (X), a phase flip (Z), or both (Y, composed as Z
after X; the global phase is irrelevant everywhere downstream).

The noiseless channel state is

    psi+ = 1/2 [ |HHV>(d1 d2 D3 + D1 D2 d3) + |VVH>(d1 D2 d3 + D1 d2 D3) ]

and every per-photon Pauli combination maps it to a state of the same
shape: one polarization word on the first spatial quadruple, its
complement on the second, a relative sign, and possibly the two words
exchanged between the quadruples ("mirrored").  That gives 4 word pairs
x 2 signs x 2 pairings = 16 reachable states; classification recognizes
all of them.  The mirrored=False half is the classic eight-family set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .states import H, V, FockKet, PureState, Rail, fidelity, ket

FAMILY_TAGS = ("psi", "psi0", "psi1", "psi2")

# (word on the first spatial group, complementary word on the second)
FAMILY_WORDS = {
    "psi": ("HHV", "VVH"),
    "psi0": ("HHH", "VVV"),
    "psi1": ("VHH", "HVV"),
    "psi2": ("HVH", "VHV"),
}

# channel spatial pairs (lower, upper) per photon, builtin naming
DEFAULT_SLOT_MODES = (("d1", "D1"), ("d2", "D2"), ("d3", "D3"))

CLASSIFY_TOL = 1e-9


@dataclass(frozen=True)
class PauliError:
    """One polarization error on one channel photon."""

    photon: int
    kind: str

    def __post_init__(self):
        if self.photon not in (1, 2, 3):
            raise ValueError(f"photon index must be 1..3, got {self.photon}")
        if self.kind not in ("X", "Z", "Y"):
            raise ValueError(f"error kind must be X, Z or Y, got {self.kind!r}")


@dataclass(frozen=True)
class NoiseFamily:
    """Which reachable channel state: word pair, relative sign, pairing."""

    tag: str
    sign: int
    mirrored: bool = False

    def __post_init__(self):
        if self.tag not in FAMILY_TAGS:
            raise ValueError(f"unknown family tag {self.tag!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def label(self) -> str:
        base = self.tag + ("+" if self.sign > 0 else "-")
        return base + ("'" if self.mirrored else "")


PSI_PLUS = NoiseFamily(tag="psi", sign=1)


def _spatial_quadruples(
    slot_modes: Sequence[tuple[str, str]]
) -> tuple[tuple, tuple]:
    (l1, u1), (l2, u2), (l3, u3) = slot_modes
    first = ((l1, l2, u3), (u1, u2, l3))
    second = ((l1, u2, l3), (u1, l2, u3))
    return first, second


def _word_ket(word: str, modes: Sequence[str]) -> PureState:
    return ket(*zip(modes, word))


def family_state(
    family: NoiseFamily,
    slot_modes: Sequence[tuple[str, str]] = DEFAULT_SLOT_MODES,
) -> PureState:
    """The literal four-ket channel state of a family."""
    w1, w2 = FAMILY_WORDS[family.tag]
    if family.mirrored:
        w1, w2 = w2, w1
    first, second = _spatial_quadruples(slot_modes)
    out = PureState()
    for modes in first:
        out = out + 0.5 * _word_ket(w1, modes)
    for modes in second:
        out = out + (0.5 * family.sign) * _word_ket(w2, modes)
    return out


def all_families() -> tuple[NoiseFamily, ...]:
    return tuple(
        NoiseFamily(tag=tag, sign=sign, mirrored=mirrored)
        for tag in FAMILY_TAGS
        for mirrored in (False, True)
        for sign in (1, -1)
    )


def classify_family(
    state: PureState,
    slot_modes: Sequence[tuple[str, str]] = DEFAULT_SLOT_MODES,
) -> NoiseFamily:
    """Identify the channel state among the reachable families.

    Comparison is by fidelity, so global phase is irrelevant.  A state
    outside the set (e.g. one with a spatial-mode error, which the model
    excludes) is rejected.
    """
    for fam in all_families():
        if fidelity(state, family_state(fam, slot_modes)) > 1.0 - CLASSIFY_TOL:
            return fam
    raise ValueError("state does not match any depolarization family")


def apply_pauli(
    state: PureState,
    err: PauliError,
    slot_modes: Sequence[tuple[str, str]] = DEFAULT_SLOT_MODES,
) -> PureState:
    """Apply one per-photon polarization error.

    Acts on both possible spatial modes of the photon; spatial labels are
    untouched.  Y is the composition Z(X(state)) (phase after flip).
    """
    modes = set(slot_modes[err.photon - 1])
    flip = err.kind in ("X", "Y")
    phase_v = err.kind in ("Z", "Y")
    acc: dict[FockKet, complex] = {}
    for k, amp in state.terms.items():
        entries = []
        phase = 1.0
        for r, n in k:
            if r.mode in modes:
                pol = r.pol
                if flip:
                    pol = V if pol == H else H
                if phase_v and pol == V:
                    phase *= (-1.0) ** n
                entries.append((Rail(r.mode, pol), n))
            else:
                entries.append((r, n))
        new_k = FockKet(entries)
        acc[new_k] = acc.get(new_k, 0j) + amp * phase
    return PureState(acc)


def apply_errors(
    state: PureState,
    errors: Iterable[PauliError],
    slot_modes: Sequence[tuple[str, str]] = DEFAULT_SLOT_MODES,
) -> PureState:
    for err in errors:
        state = apply_pauli(state, err, slot_modes)
    return state


def depolarizing_mixture(p: float) -> list[tuple[float, tuple[PauliError, ...]]]:
    """Independent per-photon error distribution.

    Each photon is untouched with probability 1-p and suffers X, Z or Y
    with probability p/3 each.  Returns the nonzero-weight combinations in
    a fixed photon-major order; weights sum to 1.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"error probability must be in [0, 1], got {p}")
    single = ((None, 1.0 - p), ("X", p / 3.0), ("Z", p / 3.0), ("Y", p / 3.0))
    out = []
    for combo in itertools.product(single, repeat=3):
        weight = 1.0
        errors = []
        for photon, (kind, w) in enumerate(combo, start=1):
            weight *= w
            if kind is not None:
                errors.append(PauliError(photon=photon, kind=kind))
        if weight > 0.0:
            out.append((weight, tuple(errors)))
    return out


def parse_noise_spec(text: str) -> tuple[PauliError, ...]:
    """Parse a comma-separated error list like ``X@1,Z@3``."""
    errors = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        kind, sep, photon = chunk.partition("@")
        if not sep:
            raise ValueError(f"bad error term {chunk!r}, expected KIND@PHOTON")
        try:
            idx = int(photon)
        except ValueError:
            raise ValueError(f"bad photon index {photon!r} in {chunk!r}") from None
        errors.append(PauliError(photon=idx, kind=kind.strip().upper()))
    return tuple(errors)


def format_noise_spec(errors: Iterable[PauliError]) -> str:
    return ",".join(f"{e.kind}@{e.photon}" for e in errors)
