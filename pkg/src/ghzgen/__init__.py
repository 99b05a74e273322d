"""Exact desk-scale simulator for a heralded three-photon GHZ generator.

The package models a two-pass photon-pair source, a passive fan-out
network that herds the four photons onto a trigger and three channel
pairs, a nondemolition branch probe, and the pattern-conditioned
corrections that recover the GHZ target on every detector outcome.
States are sparse Fock-basis vectors and every probability is exact.
"""

from .states import (
    Bipartition,
    DensityOperator,
    FockKet,
    ModeTransform,
    PureState,
    Rail,
    VACUUM,
    apply_mode_transform,
    factor_out_mode,
    fidelity,
    inner_product,
    joint_density,
    ket,
    merge_spatial_modes,
    partial_trace,
    phase_fixed,
    project_occupancy,
    reduced_density,
    schmidt_coefficients,
    schmidt_rank,
    states_close,
    vacuum_state,
)
from .elements import make_bs, make_hwp45, make_hwp90, make_pbs, make_route
from .source import (
    CaseWeights,
    DEFAULT_WEIGHTS,
    dual_pass_emission,
    pdc_pair,
    two_pair_product,
)
from .qnd import (
    DEFAULT_ALPHA,
    DEFAULT_THETA,
    KerrCoupling,
    QndOutcome,
    TaggedState,
    default_couplings,
    feed_forward,
    homodyne_discriminate,
    probe_distinguishability,
    tag_phases,
)
from .noise import (
    NoiseFamily,
    PSI_PLUS,
    PauliError,
    all_families,
    apply_errors,
    apply_pauli,
    classify_family,
    depolarizing_mixture,
    family_state,
    format_noise_spec,
    parse_noise_spec,
)
from .network import (
    ChannelSlot,
    CircuitNetwork,
    DetectorGroup,
    NetworkSettings,
    NetworkStructure,
    SourceSpec,
    analyze,
    coincidence_groups,
)
from .pipeline import (
    BranchState,
    CoincidencePattern,
    CorrectionRule,
    GHZ_WORDS,
    PHI_PLUS,
    RunEntry,
    RunReport,
    apply_corrections,
    branch_a_literal,
    branch_b_literal,
    branch_states,
    build_fig3,
    build_ghzps,
    entanglement_report,
    evolved_family_literal,
    ghz_target,
    lookup_correction,
    postselect_coincidence,
    run_full,
    run_ghzps,
    verify_correction_table,
    verify_reference_states,
)
from .dsl import DslDocument, ParseError, elaborate, parse, parse_file, pretty_print

__version__ = "0.1.0"

__all__ = [
    "Bipartition",
    "BranchState",
    "CaseWeights",
    "ChannelSlot",
    "CircuitNetwork",
    "CoincidencePattern",
    "CorrectionRule",
    "DEFAULT_ALPHA",
    "DEFAULT_THETA",
    "DEFAULT_WEIGHTS",
    "DensityOperator",
    "DetectorGroup",
    "DslDocument",
    "FockKet",
    "GHZ_WORDS",
    "KerrCoupling",
    "ModeTransform",
    "NetworkSettings",
    "NetworkStructure",
    "NoiseFamily",
    "PHI_PLUS",
    "PSI_PLUS",
    "ParseError",
    "PauliError",
    "PureState",
    "QndOutcome",
    "Rail",
    "RunEntry",
    "RunReport",
    "SourceSpec",
    "TaggedState",
    "VACUUM",
    "all_families",
    "analyze",
    "apply_corrections",
    "apply_errors",
    "apply_mode_transform",
    "apply_pauli",
    "branch_a_literal",
    "branch_b_literal",
    "branch_states",
    "build_fig3",
    "build_ghzps",
    "classify_family",
    "coincidence_groups",
    "default_couplings",
    "depolarizing_mixture",
    "dual_pass_emission",
    "elaborate",
    "entanglement_report",
    "evolved_family_literal",
    "factor_out_mode",
    "family_state",
    "feed_forward",
    "fidelity",
    "format_noise_spec",
    "ghz_target",
    "homodyne_discriminate",
    "inner_product",
    "joint_density",
    "ket",
    "lookup_correction",
    "make_bs",
    "make_hwp45",
    "make_hwp90",
    "make_pbs",
    "make_route",
    "merge_spatial_modes",
    "parse",
    "parse_file",
    "parse_noise_spec",
    "partial_trace",
    "pdc_pair",
    "phase_fixed",
    "postselect_coincidence",
    "pretty_print",
    "probe_distinguishability",
    "project_occupancy",
    "reduced_density",
    "run_full",
    "run_ghzps",
    "schmidt_coefficients",
    "schmidt_rank",
    "states_close",
    "tag_phases",
    "two_pair_product",
    "vacuum_state",
    "verify_correction_table",
    "verify_reference_states",
]
