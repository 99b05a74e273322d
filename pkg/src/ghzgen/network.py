"""Circuit network container and structural analysis.

A ``CircuitNetwork`` is what both the programmatic builders and the DSL
elaborator produce: an ordered element chain plus the source, the Kerr
couplings, and the detector groups.  ``analyze`` inspects the wiring to
recover the protocol structure the runner needs: which detector pair
belongs to which photon, where the channel (the noise insertion point)
sits, and whether the network ends in polarization-resolving merges
("generator" style, like the full GHZ generator) or exposes the raw
fan-out arms ("source" style).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .elements import make_pbs
from .qnd import DEFAULT_ALPHA, DEFAULT_THETA, KerrCoupling
from .source import CaseWeights
from .states import ModeTransform

TRIGGER_GROUP = "T"


@dataclass(frozen=True)
class SourceSpec:
    kind: str
    weights: CaseWeights

    def __post_init__(self):
        if self.kind != "pdc2":
            raise ValueError(f"unknown source kind {self.kind!r}")


@dataclass(frozen=True)
class DetectorGroup:
    name: str
    modes: tuple[str, ...]


@dataclass(frozen=True)
class NetworkSettings:
    theta: float = DEFAULT_THETA
    alpha: float = DEFAULT_ALPHA
    noise: str | None = None


@dataclass(frozen=True)
class CircuitNetwork:
    name: str
    elements: tuple[ModeTransform, ...]
    couplings: tuple[KerrCoupling, ...] = ()
    detectors: tuple[DetectorGroup, ...] = ()
    source: SourceSpec | None = None
    settings: NetworkSettings = field(default_factory=NetworkSettings)

    def detector(self, name: str) -> DetectorGroup | None:
        for group in self.detectors:
            if group.name == name:
                return group
        return None

    @property
    def trigger(self) -> DetectorGroup | None:
        return self.detector(TRIGGER_GROUP)

    @property
    def photon_groups(self) -> tuple[DetectorGroup, ...]:
        return tuple(g for g in self.detectors if g.name != TRIGGER_GROUP)

    def with_settings(self, **kwargs) -> "CircuitNetwork":
        return replace(self, settings=replace(self.settings, **kwargs))


@dataclass(frozen=True)
class ChannelSlot:
    """One photon's channel pair and its resolving merge.

    ``lower`` feeds the resolving PBS's first port (polarization kept, H
    exits at ``out_t``); ``upper`` feeds the second port after an upstream
    half-wave flip (so its original H exits at ``out_t`` flipped to V).
    """

    lower: str
    upper: str
    out_t: str
    out_r: str

    @property
    def pair(self) -> tuple[str, str]:
        return (self.lower, self.upper)


@dataclass(frozen=True)
class NetworkStructure:
    style: str  # "generator" or "source"
    slots: tuple[ChannelSlot, ...]
    boundary: int  # elements[:boundary] = fan-out, elements[boundary:] = fan-in


def _as_resolving_pbs(element: ModeTransform, group_modes: set[str]) -> ChannelSlot | None:
    in_modes = []
    for rail in element.in_rails:
        if rail.mode not in in_modes:
            in_modes.append(rail.mode)
    out_modes = []
    for rail in element.out_rails:
        if rail.mode not in out_modes:
            out_modes.append(rail.mode)
    if len(in_modes) != 2 or set(out_modes) != group_modes:
        return None
    reference = make_pbs(in_modes[0], in_modes[1], out_modes[0], out_modes[1])
    if element.in_rails != reference.in_rails or element.out_rails != reference.out_rails:
        return None
    if not np.array_equal(element.matrix, reference.matrix):
        return None
    return ChannelSlot(
        lower=in_modes[0], upper=in_modes[1], out_t=out_modes[0], out_r=out_modes[1]
    )


def analyze(network: CircuitNetwork) -> NetworkStructure:
    """Classify the network and locate its channel stage.

    Generator style requires every photon group's two modes to be the two
    outputs of a single polarization-resolving PBS; the channel modes are
    that element's inputs and the fan-in boundary is the first element
    consuming any of them.
    """
    if network.trigger is None:
        raise ValueError(f"network has no detector group named {TRIGGER_GROUP!r}")
    groups = network.photon_groups
    if len(groups) != 3:
        raise ValueError(f"expected 3 photon detector groups, found {len(groups)}")
    for group in groups:
        if len(set(group.modes)) != 2:
            raise ValueError(f"detector group {group.name} must pair two modes")

    slots = []
    for group in groups:
        slot = None
        for element in network.elements:
            slot = _as_resolving_pbs(element, set(group.modes))
            if slot is not None:
                break
        if slot is None:
            return NetworkStructure(style="source", slots=(), boundary=len(network.elements))
        slots.append(slot)

    channel_modes = {m for slot in slots for m in slot.pair}
    boundary = len(network.elements)
    for i, element in enumerate(network.elements):
        if any(rail.mode in channel_modes for rail in element.in_rails):
            boundary = i
            break
    return NetworkStructure(style="generator", slots=tuple(slots), boundary=boundary)


def coincidence_groups(
    network: CircuitNetwork, structure: NetworkStructure | None = None
) -> list[tuple[Iterable[str], int]]:
    """Occupancy requirement for fourfold coincidence: one photon at the
    trigger and one in each photon pair."""
    groups: list[tuple[Iterable[str], int]] = [(network.trigger.modes, 1)]
    if structure is not None and structure.style == "generator":
        groups.extend((slot.pair, 1) for slot in structure.slots)
    else:
        groups.extend((g.modes, 1) for g in network.photon_groups)
    return groups
