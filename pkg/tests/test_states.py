"""Sparse Fock-state engine: containers, algebra, evolution, reductions."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ghzgen import (
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
from ghzgen.states import compose, to_json_terms

import oracles


INV_SQRT2 = 2 ** -0.5


def test_fock_ket_canonical_order():
    a = FockKet({Rail("b", "V"): 1, Rail("a", "H"): 2})
    b = FockKet([(("a", "H"), 2), (("b", "V"), 1)])
    assert a == b
    assert hash(a) == hash(b)
    assert a.rails() == (Rail("a", "H"), Rail("b", "V"))


def test_fock_ket_drops_zero_occupancy():
    k = FockKet({Rail("a", "H"): 0, Rail("b", "V"): 1})
    assert k.rails() == (Rail("b", "V"),)
    assert k.total() == 1


def test_fock_ket_rejects_negative_occupancy():
    with pytest.raises(ValueError):
        FockKet({Rail("a", "H"): -1})


def test_fock_ket_queries():
    k = FockKet({Rail("a", "H"): 2, Rail("a", "V"): 1, Rail("b", "H"): 1})
    assert k.occupancy(Rail("a", "H")) == 2
    assert k.occupancy(("c", "V")) == 0
    assert k.total() == 4
    assert k.modes() == {"a", "b"}
    assert k.count_in_modes(["a"]) == 3
    assert k.restrict(["b"]) == FockKet({Rail("b", "H"): 1})
    assert k.drop_modes(["a"]) == FockKet({Rail("b", "H"): 1})
    merged = k.merge(FockKet({Rail("b", "H"): 1}))
    assert merged.occupancy(Rail("b", "H")) == 2


def test_vacuum():
    assert VACUUM.total() == 0
    assert vacuum_state().amplitude(VACUUM) == 1.0


def test_pure_state_algebra_and_pruning():
    s = ket(("a", "H")) + ket(("a", "V"), amp=2.0)
    assert s.amplitude(FockKet({Rail("a", "V"): 1})) == 2.0
    cancelled = s - s
    assert cancelled.is_zero()
    assert (s * 0.5).norm() == pytest.approx(s.norm() / 2)
    assert (-s).amplitude(FockKet({Rail("a", "H"): 1})) == -1.0


def test_pure_state_prunes_tiny_amplitudes():
    s = ket(("a", "H")) + ket(("a", "V"), amp=1e-13)
    assert s.num_terms() == 1


def test_ket_with_counts():
    s = ket(("a", "H", 2), ("b", "V"))
    (k, amp), = s.sorted_terms()
    assert amp == 1.0
    assert k.occupancy(Rail("a", "H")) == 2
    assert k.occupancy(Rail("b", "V")) == 1


def test_product_is_tensor_on_disjoint_modes():
    left = ket(("a", "H")) + ket(("a", "V"))
    right = ket(("b", "H"))
    prod = left.product(right)
    assert prod.num_terms() == 2
    assert prod.amplitude(FockKet({Rail("a", "H"): 1, Rail("b", "H"): 1})) == 1.0


def test_product_bosonic_enhancement_on_shared_rail():
    # two photons placed on the same rail acquire the sqrt(2!) factor
    prod = ket(("a", "H")).product(ket(("a", "H")))
    (k, amp), = prod.sorted_terms()
    assert k.occupancy(Rail("a", "H")) == 2
    assert amp == pytest.approx(math.sqrt(2.0))


def test_inner_product_and_fidelity():
    a = ket(("m", "H")) + ket(("m", "V"), amp=1j)
    b = ket(("m", "H"))
    assert inner_product(b, a) == pytest.approx(1.0)
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)))
    # fidelity normalizes both sides
    assert fidelity(a, b) == pytest.approx(0.5)
    assert fidelity(a * 3.0, b * -2j) == pytest.approx(0.5)


def test_phase_fixed_removes_global_phase():
    s = ket(("a", "H")) + ket(("a", "V"), amp=1j)
    rotated = s * np.exp(1j * 0.7)
    assert states_close(phase_fixed(s), phase_fixed(rotated), tol=1e-12)


def test_states_close_tolerance():
    a = ket(("a", "H"))
    b = ket(("a", "H"), amp=1.0 + 5e-11)
    assert states_close(a, b, tol=1e-9)
    assert not states_close(a, ket(("a", "V")))


def _hadamard(mode):
    rails = (Rail(mode, "H"), Rail(mode, "V"))
    m = np.array([[1, 1], [1, -1]], dtype=complex) * INV_SQRT2
    return ModeTransform("had", rails, rails, m)


def test_transform_rejects_non_isometry():
    rails = (Rail("a", "H"), Rail("a", "V"))
    with pytest.raises(ValueError):
        ModeTransform("bad", rails, rails, np.array([[1, 1], [0, 1]], dtype=complex))


def test_transform_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        ModeTransform(
            "bad", (Rail("a", "H"),), (Rail("b", "H"),), np.eye(2, dtype=complex)
        )


def test_transform_rejects_duplicate_rails():
    r = Rail("a", "H")
    with pytest.raises(ValueError):
        ModeTransform("bad", (r, r), (Rail("b", "H"), Rail("c", "H")), np.eye(2))


def test_apply_hadamard_twice_is_identity():
    h = _hadamard("a")
    s = ket(("a", "H"), amp=0.8) + ket(("a", "V"), amp=0.6)
    assert states_close(h.apply(h.apply(s)), s, tol=1e-12)


def test_apply_multiphoton_interference():
    # |1,1> into a balanced splitter bunches: (|2,0> - |0,2|>)/sqrt(2),
    # destructive on the split outcome
    rails_in = (Rail("p", "H"), Rail("q", "H"))
    rails_out = (Rail("u", "H"), Rail("v", "H"))
    m = np.array([[1, -1], [1, 1]], dtype=complex) * INV_SQRT2
    bs = ModeTransform("bs", rails_in, rails_out, m)
    out = bs.apply(ket(("p", "H"), ("q", "H")))
    both = FockKet({Rail("u", "H"): 1, Rail("v", "H"): 1})
    assert abs(out.amplitude(both)) < 1e-12
    two_u = FockKet({Rail("u", "H"): 2})
    two_v = FockKet({Rail("v", "H"): 2})
    assert abs(out.amplitude(two_u)) == pytest.approx(INV_SQRT2)
    assert abs(out.amplitude(two_v)) == pytest.approx(INV_SQRT2)
    assert out.norm() == pytest.approx(1.0)


def test_apply_passthrough_rails_untouched():
    h = _hadamard("a")
    s = ket(("a", "H"), ("spect", "V"))
    out = h.apply(s)
    for k, _ in out.sorted_terms():
        assert k.occupancy(Rail("spect", "V")) == 1


def test_apply_rejects_passthrough_collision():
    # a passthrough rail that collides with an output rail is a wiring bug
    rails_in = (Rail("a", "H"),)
    rails_out = (Rail("b", "H"),)
    t = ModeTransform("relabel", rails_in, rails_out, np.eye(1, dtype=complex))
    with pytest.raises(ValueError):
        t.apply(ket(("a", "H"), ("b", "H")))


def test_apply_mode_transform_free_function():
    h = _hadamard("a")
    s = ket(("a", "H"))
    assert apply_mode_transform(s, h) == h.apply(s)


def test_compose_matches_single_matrix():
    h = _hadamard("a")
    s = ket(("a", "H"), amp=1j) + ket(("a", "V"), amp=2.0)
    assert states_close(compose([h, h], s), s, tol=1e-12)


def test_project_occupancy_probabilities():
    s = ket(("a", "H")) + ket(("b", "H")) + ket(("b", "V"))
    cond, p = project_occupancy(s, [(["b"], 1)])
    assert p == pytest.approx(2.0 / 3.0)
    assert cond.norm() == pytest.approx(1.0)
    _, p_zero = project_occupancy(s, [(["a"], 2)])
    assert p_zero == 0.0


def test_project_occupancy_empty_input():
    cond, p = project_occupancy(PureState(), [(["a"], 1)])
    assert p == 0.0
    assert cond.is_zero()


def test_merge_rejects_ket_identification():
    # both kets collapse onto |H@t>, which must be rejected, not summed
    s = ket(("t1", "H")) + ket(("t2", "H"))
    with pytest.raises(ValueError):
        merge_spatial_modes(s, {"t1": "t", "t2": "t"})


def test_merge_rejects_in_ket_collision():
    s = ket(("t1", "H"), ("t2", "H"))
    with pytest.raises(ValueError):
        merge_spatial_modes(s, {"t1": "t", "t2": "t"})


def test_merge_valid_disjoint_support():
    s = ket(("t1", "H"), ("x", "V")) + ket(("t2", "H"), ("y", "V"))
    merged = merge_spatial_modes(s, {"t1": "t", "t2": "t"})
    assert merged.num_terms() == 2
    for k, _ in merged.sorted_terms():
        assert k.count_in_modes(["t"]) == 1


def test_factor_out_mode_product():
    s = (ket(("t", "H"))).product(ket(("a", "H")) + ket(("a", "V")))
    content, rest = factor_out_mode(s, "t")
    assert content == FockKet({Rail("t", "H"): 1})
    assert rest.num_terms() == 2
    assert rest.norm() == pytest.approx(s.norm())


def test_factor_out_mode_rejects_entangled():
    s = ket(("t", "H"), ("a", "H")) + ket(("t", "V"), ("a", "V"))
    with pytest.raises(ValueError):
        factor_out_mode(s, "t")


def _bell(m1, m2):
    return (ket((m1, "H"), (m2, "H")) + ket((m1, "V"), (m2, "V"))).normalized()


def test_schmidt_bell_state():
    part = Bipartition.mode_split(["p"], ["q"])
    rank, coeffs = schmidt_rank(_bell("p", "q"), part)
    assert rank == 2
    assert coeffs == pytest.approx((INV_SQRT2, INV_SQRT2))


def test_schmidt_product_state():
    part = Bipartition.mode_split(["p"], ["q"])
    s = ket(("p", "H"), ("q", "V"))
    rank, coeffs = schmidt_rank(s, part)
    assert rank == 1
    assert coeffs == pytest.approx((1.0,))


def test_schmidt_coefficients_sorted_descending():
    part = Bipartition.mode_split(["p"], ["q"])
    s = ket(("p", "H"), ("q", "H")) * 2.0 + ket(("p", "V"), ("q", "V"))
    coeffs = schmidt_coefficients(s, part)
    assert coeffs[0] >= coeffs[1]
    assert sum(c * c for c in coeffs) == pytest.approx(1.0)


def test_pol_vs_spatial_split():
    # one photon delocalized over (u, l) per position: pol word vs path word
    s = ket(("u1", "H"), ("u2", "V")) + ket(("l1", "H"), ("l2", "V"))
    part = Bipartition.pol_vs_spatial([("u1", "l1"), ("u2", "l2")])
    rank, _ = schmidt_rank(s, part)
    assert rank == 1  # same pol word on both paths factorizes


def test_pol_vs_spatial_rejects_stray_photon():
    part = Bipartition.pol_vs_spatial([("u1", "l1")])
    with pytest.raises(ValueError):
        part.splitter(FockKet({Rail("other", "H"): 1}))


def test_density_operator_from_pure():
    rho = DensityOperator.from_pure(_bell("p", "q"))
    assert rho.trace() == pytest.approx(1.0)
    assert rho.purity() == pytest.approx(1.0)


def test_reduced_density_of_bell_is_mixed():
    part = Bipartition.mode_split(["p"], ["q"])
    rho = reduced_density(_bell("p", "q"), part, keep="left")
    assert rho.purity() == pytest.approx(0.5)
    assert np.allclose(rho.matrix, np.eye(2) / 2.0)


def test_partial_trace_matches_reduced_density():
    part = Bipartition.mode_split(["p"], ["q"])
    state = _bell("p", "q")
    rho = DensityOperator.from_pure(state)
    red = partial_trace(rho, part, keep="left")
    direct = reduced_density(state, part, keep="left")
    assert np.allclose(red.matrix, direct.matrix)
    assert red.trace() == pytest.approx(1.0)


def test_partial_trace_keep_names():
    part = Bipartition.pol_vs_spatial([("u", "l")])
    state = (ket(("u", "H")) + ket(("l", "H"))).normalized()
    rho = DensityOperator.from_pure(state)
    pol = partial_trace(rho, part, keep="polarization")
    assert pol.matrix.shape == (1, 1)
    with pytest.raises(ValueError):
        partial_trace(rho, part, keep="sideways")


def test_joint_density_product_state_factorizes():
    part = Bipartition.mode_split(["p"], ["q"])
    s = ket(("p", "H"), ("q", "V"))
    joint = joint_density(s, part)
    left = reduced_density(s, part, keep="left")
    right = reduced_density(s, part, keep="right")
    assert np.allclose(joint.matrix, np.kron(left.matrix, right.matrix))


def test_to_json_terms_shape():
    s = ket(("a", "H", 2), ("b", "V")) * (0.5 + 0.25j)
    (term,) = to_json_terms(s)
    assert term["ket"] == [["a", "H", 2], ["b", "V", 1]]
    assert term["re"] == 0.5
    assert term["im"] == 0.25


# --- property tests ---------------------------------------------------------

_MODES = ("m0", "m1", "m2")
_POLS = ("H", "V")


def _rail_st():
    return st.tuples(st.sampled_from(_MODES), st.sampled_from(_POLS))


def _state_st(max_terms=4, max_photons=3):
    def build(entries):
        s = PureState()
        for rails, re, im in entries:
            occ = {}
            for r in rails:
                occ[Rail(*r)] = occ.get(Rail(*r), 0) + 1
            s = s + PureState({FockKet(occ): complex(re, im)})
        return s

    entry = st.tuples(
        st.lists(_rail_st(), min_size=1, max_size=max_photons),
        st.floats(-1, 1, allow_nan=False),
        st.floats(-1, 1, allow_nan=False),
    )
    return st.builds(build, st.lists(entry, min_size=1, max_size=max_terms)).filter(
        lambda s: s.norm() > 1e-6
    )


@given(_state_st())
def test_property_canonical_terms_unique(state):
    kets = [k for k, _ in state.sorted_terms()]
    assert len(kets) == len(set(kets))
    assert kets == sorted(kets)


@given(_state_st(), st.integers(0, 2**32 - 1))
def test_property_random_unitary_preserves_norm(state, seed):
    rails = tuple(sorted({r for k, _ in state for r, _ in k}))
    rng = np.random.default_rng(seed)
    dim = len(rails)
    q, _ = np.linalg.qr(
        rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    )
    t = ModeTransform("rand", rails, rails, q)
    assert t.apply(state).norm() == pytest.approx(state.norm(), abs=1e-9)


@given(_state_st(max_terms=3, max_photons=3), st.integers(0, 2**32 - 1))
def test_property_engine_matches_polynomial_oracle(state, seed):
    rails = tuple(sorted({r for k, _ in state for r, _ in k}))
    rng = np.random.default_rng(seed)
    dim = len(rails)
    q, _ = np.linalg.qr(
        rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    )
    t = ModeTransform("rand", rails, rails, q)
    engine = t.apply(state)

    dense_in = {}
    for k, amp in state:
        occ = [0] * dim
        for r, n in k:
            occ[rails.index(r)] = n
        dense_in[tuple(occ)] = dense_in.get(tuple(occ), 0.0) + amp
    expected = oracles.polynomial_evolve(dense_in, q)

    for occ, amp in expected.items():
        k = FockKet({rails[i]: n for i, n in enumerate(occ) if n})
        assert engine.amplitude(k) == pytest.approx(amp, abs=1e-9)
    # and nothing extra survives in the engine state
    total = math.sqrt(sum(abs(a) ** 2 for a in expected.values()))
    assert engine.norm() == pytest.approx(total, abs=1e-9)


@given(_state_st())
def test_property_projection_is_complete(state):
    # probabilities over an exhaustive occupancy split of one mode sum to 1
    max_photons = max(k.count_in_modes(["m0"]) for k, _ in state)
    probs = [
        project_occupancy(state, [(["m0"], n)])[1] for n in range(max_photons + 1)
    ]
    assert sum(probs) == pytest.approx(1.0, abs=1e-9)


@given(_state_st(), _state_st())
def test_property_inner_product_conjugate_symmetric(a, b):
    ab = inner_product(a, b)
    ba = inner_product(b, a)
    assert ab == pytest.approx(np.conj(ba), abs=1e-9)
    assert abs(ab) <= a.norm() * b.norm() + 1e-9
