"""Sparse multi-photon state algebra over polarization rails.

A *rail* is one bosonic mode: a spatial label plus a polarization ('H' or
'V').  States are sparse complex superpositions of Fock kets over rails,
stored as dictionaries keyed by a canonical occupation tuple.  Everything
downstream (sources, optical elements, projections, entanglement
diagnostics) is built on the handful of primitives in this module.

Conventions:
  * kets are normalized occupation-number states, |n> = (a†)^n / sqrt(n!) |0>
  * amplitudes with magnitude below ``PRUNE_TOL`` are dropped after every
    arithmetic operation, so zero really means zero
  * nothing is renormalized implicitly; callers decide when a state is a
    conditional state (``project_occupancy`` returns the probability
    separately for exactly this reason)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

H = "H"
V = "V"
POLARIZATIONS = (H, V)

PRUNE_TOL = 1e-12
ISOMETRY_TOL = 1e-9
SCHMIDT_TOL = 1e-10


class Rail(NamedTuple):
    """One bosonic mode: spatial label plus polarization."""

    mode: str
    pol: str


def _as_rail(value) -> Rail:
    rail = Rail(*value)
    if rail.pol not in POLARIZATIONS:
        raise ValueError(f"polarization must be H or V, got {rail.pol!r}")
    return rail


class FockKet:
    """Occupation-number ket over rails, canonically ordered and hashable.

    Stored as a tuple of (rail, count) pairs sorted by (mode, pol) with all
    counts positive; the empty tuple is the vacuum.
    """

    __slots__ = ("_occ",)

    def __init__(self, occupations: Mapping[Rail, int] | Iterable[tuple] = ()):
        if isinstance(occupations, Mapping):
            items = occupations.items()
        else:
            items = occupations
        merged: dict[Rail, int] = {}
        for rail, count in items:
            rail = _as_rail(rail)
            count = int(count)
            if count < 0:
                raise ValueError(f"negative occupation {count} on {rail}")
            if count:
                merged[rail] = merged.get(rail, 0) + count
        self._occ = tuple(sorted(merged.items()))

    @property
    def occupations(self) -> tuple[tuple[Rail, int], ...]:
        return self._occ

    def occupancy(self, rail) -> int:
        rail = _as_rail(rail)
        for r, n in self._occ:
            if r == rail:
                return n
        return 0

    def rails(self) -> tuple[Rail, ...]:
        return tuple(r for r, _ in self._occ)

    def modes(self) -> set[str]:
        return {r.mode for r, _ in self._occ}

    def total(self) -> int:
        return sum(n for _, n in self._occ)

    def count_in_modes(self, modes: Iterable[str]) -> int:
        mode_set = set(modes)
        return sum(n for r, n in self._occ if r.mode in mode_set)

    def restrict(self, modes: Iterable[str]) -> "FockKet":
        mode_set = set(modes)
        return FockKet((r, n) for r, n in self._occ if r.mode in mode_set)

    def drop_modes(self, modes: Iterable[str]) -> "FockKet":
        mode_set = set(modes)
        return FockKet((r, n) for r, n in self._occ if r.mode not in mode_set)

    def merge(self, other: "FockKet") -> "FockKet":
        combined = dict(self._occ)
        for r, n in other._occ:
            combined[r] = combined.get(r, 0) + n
        return FockKet(combined)

    def __iter__(self) -> Iterator[tuple[Rail, int]]:
        return iter(self._occ)

    def __eq__(self, other) -> bool:
        return isinstance(other, FockKet) and self._occ == other._occ

    def __hash__(self) -> int:
        return hash(self._occ)

    def __lt__(self, other: "FockKet") -> bool:
        return self._occ < other._occ

    def __repr__(self) -> str:
        if not self._occ:
            return "|vac>"
        parts = []
        for rail, n in self._occ:
            label = f"{rail.pol}@{rail.mode}"
            parts.append(label if n == 1 else f"{n}x{label}")
        return "|" + " ".join(parts) + ">"


VACUUM = FockKet()


class PureState:
    """Sparse complex superposition of Fock kets.

    Supports linear arithmetic (+, -, scalar *), the bosonic tensor product,
    and deterministic iteration.  Not implicitly normalized.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[FockKet, complex] | Iterable[tuple] = ()):
        if isinstance(terms, Mapping):
            items = terms.items()
        else:
            items = terms
        acc: dict[FockKet, complex] = {}
        for k, amp in items:
            if not isinstance(k, FockKet):
                k = FockKet(k)
            amp = complex(amp)
            acc[k] = acc.get(k, 0j) + amp
        self._terms = {k: a for k, a in acc.items() if abs(a) > PRUNE_TOL}

    @property
    def terms(self) -> dict[FockKet, complex]:
        return dict(self._terms)

    def sorted_terms(self) -> list[tuple[FockKet, complex]]:
        return sorted(self._terms.items(), key=lambda item: item[0].occupations)

    def amplitude(self, k: FockKet) -> complex:
        if not isinstance(k, FockKet):
            k = FockKet(k)
        return self._terms.get(k, 0j)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self._terms.values()))

    def normalized(self) -> "PureState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero state")
        return self * (1.0 / n)

    def is_zero(self) -> bool:
        return not self._terms

    def num_terms(self) -> int:
        return len(self._terms)

    def __add__(self, other: "PureState") -> "PureState":
        acc = dict(self._terms)
        for k, a in other._terms.items():
            acc[k] = acc.get(k, 0j) + a
        return PureState(acc)

    def __sub__(self, other: "PureState") -> "PureState":
        return self + (other * -1.0)

    def __mul__(self, scalar: complex) -> "PureState":
        scalar = complex(scalar)
        return PureState({k: a * scalar for k, a in self._terms.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "PureState":
        return self * -1.0

    def product(self, other: "PureState") -> "PureState":
        """Bosonic product: creation operators of both factors on the shared
        vacuum.  Overlapping rails pick up sqrt(binomial) enhancement factors
        because |m> x a†^n hits sqrt((m+n)!/(m! n!)) |m+n>."""
        acc: dict[FockKet, complex] = {}
        for ka, aa in self._terms.items():
            occ_a = dict(ka.occupations)
            for kb, ab in other._terms.items():
                factor = 1.0
                merged = dict(occ_a)
                for rail, n in kb.occupations:
                    m = merged.get(rail, 0)
                    if m:
                        factor *= math.sqrt(math.comb(m + n, n))
                    merged[rail] = m + n
                k = FockKet(merged)
                acc[k] = acc.get(k, 0j) + aa * ab * factor
        return PureState(acc)

    def map_modes(self, rename: Callable[[str], str]) -> "PureState":
        """Relabel spatial modes through ``rename``; see
        ``merge_spatial_modes`` for the collision-checked variant."""
        out: dict[FockKet, complex] = {}
        for k, a in self._terms.items():
            new = FockKet(((Rail(rename(r.mode), r.pol), n) for r, n in k))
            out[new] = out.get(new, 0j) + a
        return PureState(out)

    def __iter__(self) -> Iterator[tuple[FockKet, complex]]:
        return iter(self.sorted_terms())

    def __eq__(self, other) -> bool:
        return isinstance(other, PureState) and self._terms == other._terms

    def __repr__(self) -> str:
        if not self._terms:
            return "PureState(0)"
        parts = []
        for k, a in self.sorted_terms()[:6]:
            parts.append(f"{a:.4g} {k}")
        suffix = " + ..." if len(self._terms) > 6 else ""
        return "PureState(" + " + ".join(parts) + suffix + ")"


def ket(*rails, amp: complex = 1.0) -> PureState:
    """Single-ket state from rail entries.

    Each entry is (mode, pol) for one photon or (mode, pol, count) for a
    multiply occupied rail.
    """
    occ: dict[Rail, int] = {}
    for entry in rails:
        if len(entry) == 2:
            rail, count = _as_rail(entry), 1
        elif len(entry) == 3:
            rail, count = _as_rail(entry[:2]), int(entry[2])
        else:
            raise ValueError(f"rail entry must have 2 or 3 fields, got {entry!r}")
        occ[rail] = occ.get(rail, 0) + count
    return PureState({FockKet(occ): amp})


def vacuum_state() -> PureState:
    return PureState({VACUUM: 1.0})


def inner_product(a: PureState, b: PureState) -> complex:
    """<a|b> over the shared sparse support."""
    if a.num_terms() > b.num_terms():
        return inner_product(b, a).conjugate()
    total = 0j
    for k, amp in a._terms.items():
        other = b._terms.get(k)
        if other is not None:
            total += amp.conjugate() * other
    return total


def fidelity(a: PureState, b: PureState) -> float:
    """|<a|b>|^2 for the normalized versions of both states."""
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    return abs(inner_product(a, b)) ** 2 / (na * nb) ** 2


def states_close(a: PureState, b: PureState, tol: float = 1e-10) -> bool:
    """Amplitude-wise comparison, phase sensitive."""
    keys = set(a._terms) | set(b._terms)
    return all(abs(a.amplitude(k) - b.amplitude(k)) <= tol for k in keys)


def phase_fixed(state: PureState) -> PureState:
    """Rotate the global phase so the first canonical amplitude is positive
    real.  Handy for displaying states defined up to phase."""
    terms = state.sorted_terms()
    if not terms:
        return state
    _, lead = terms[0]
    return state * (abs(lead) / lead)


# --- optical-element transforms ----------------------------------------


@dataclass(frozen=True)
class ModeTransform:
    """Linear-optical element acting on a fixed tuple of input rails.

    ``matrix[i, j]`` is the single-photon amplitude from ``in_rails[j]`` to
    ``out_rails[i]``: a†(in_j) -> sum_i matrix[i, j] a†(out_i).  The matrix
    must be an isometry (orthonormal columns); square elements are unitary,
    rectangular ones model elements with an unused vacuum port.
    """

    name: str
    in_rails: tuple[Rail, ...]
    out_rails: tuple[Rail, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        in_rails = tuple(_as_rail(r) for r in self.in_rails)
        out_rails = tuple(_as_rail(r) for r in self.out_rails)
        object.__setattr__(self, "in_rails", in_rails)
        object.__setattr__(self, "out_rails", out_rails)
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (len(out_rails), len(in_rails)):
            raise ValueError(
                f"{self.name}: matrix shape {m.shape} does not match "
                f"{len(out_rails)} outputs x {len(in_rails)} inputs"
            )
        if len(set(in_rails)) != len(in_rails):
            raise ValueError(f"{self.name}: duplicate input rail")
        if len(set(out_rails)) != len(out_rails):
            raise ValueError(f"{self.name}: duplicate output rail")
        gram = m.conj().T @ m
        if not np.allclose(gram, np.eye(len(in_rails)), atol=ISOMETRY_TOL):
            raise ValueError(f"{self.name}: columns are not orthonormal")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModeTransform):
            return NotImplemented
        return (
            self.name == other.name
            and self.in_rails == other.in_rails
            and self.out_rails == other.out_rails
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self) -> int:
        return hash((self.name, self.in_rails, self.out_rails, self.matrix.tobytes()))

    def apply(self, state: PureState) -> PureState:
        """Rewrite every creation operator on an input rail through the
        matrix.  Rails outside ``in_rails`` pass through untouched but must
        not collide with ``out_rails``."""
        in_index = {r: j for j, r in enumerate(self.in_rails)}
        out_set = set(self.out_rails)
        n_out = len(self.out_rails)
        acc: dict[FockKet, complex] = {}
        for k, amp in state.terms.items():
            counts = [0] * len(self.in_rails)
            passthrough: list[tuple[Rail, int]] = []
            for rail, n in k:
                j = in_index.get(rail)
                if j is None:
                    if rail in out_set:
                        raise ValueError(
                            f"{self.name}: rail {rail} is already occupied "
                            "on an output of this element"
                        )
                    passthrough.append((rail, n))
                else:
                    counts[j] = n
            # normalized-ket bookkeeping: divide out the input sqrt(n!) up
            # front, then each a† application contributes sqrt(m+1)
            norm_div = 1.0
            for n in counts:
                norm_div *= math.factorial(n)
            partial: dict[tuple[int, ...], complex] = {
                (0,) * n_out: amp / math.sqrt(norm_div)
            }
            for j, n in enumerate(counts):
                column = self.matrix[:, j]
                for _ in range(n):
                    nxt: dict[tuple[int, ...], complex] = {}
                    for occ, c in partial.items():
                        for i in range(n_out):
                            u = column[i]
                            if u == 0:
                                continue
                            grown = list(occ)
                            grown[i] += 1
                            key = tuple(grown)
                            nxt[key] = nxt.get(key, 0j) + c * u * math.sqrt(occ[i] + 1)
                    partial = nxt
            for occ, c in partial.items():
                entries = list(passthrough)
                entries.extend(
                    (self.out_rails[i], m) for i, m in enumerate(occ) if m
                )
                out_ket = FockKet(entries)
                acc[out_ket] = acc.get(out_ket, 0j) + c
        return PureState(acc)


def apply_mode_transform(state: PureState, transform: ModeTransform) -> PureState:
    return transform.apply(state)


def compose(transforms: Sequence[ModeTransform], state: PureState) -> PureState:
    for t in transforms:
        state = t.apply(state)
    return state


# --- projections and mode surgery ---------------------------------------


def project_occupancy(
    state: PureState, groups: Sequence[tuple[Iterable[str], int]]
) -> tuple[PureState, float]:
    """Project onto kets holding exactly ``count`` photons in each group of
    spatial modes.  Returns (normalized conditional state, probability);
    probability is relative to the squared norm of the input."""
    resolved = [(frozenset(modes), int(count)) for modes, count in groups]
    kept: dict[FockKet, complex] = {}
    for k, amp in state.terms.items():
        if all(k.count_in_modes(modes) == count for modes, count in resolved):
            kept[k] = amp
    total = state.norm() ** 2
    if total == 0.0:
        return PureState(), 0.0
    projected = PureState(kept)
    prob = projected.norm() ** 2 / total
    if projected.is_zero():
        return projected, 0.0
    return projected.normalized(), prob


def merge_spatial_modes(state: PureState, mapping: Mapping[str, str]) -> PureState:
    """Identify spatial modes (e.g. the two trigger paths) by relabeling.

    Raises if the identification is not an isometry on this particular
    state: either two rails inside one ket land on the same rail, or two
    distinct kets become equal.  Amplitudes are never rescaled.
    """
    out: dict[FockKet, complex] = {}
    for k, amp in state.terms.items():
        seen: dict[Rail, int] = {}
        for rail, n in k:
            new_rail = Rail(mapping.get(rail.mode, rail.mode), rail.pol)
            if new_rail in seen:
                raise ValueError(
                    f"mode merge collides inside {k}: two rails map to {new_rail}"
                )
            seen[new_rail] = n
        new_ket = FockKet(seen)
        if new_ket in out:
            raise ValueError(f"mode merge identifies distinct kets at {new_ket}")
        out[new_ket] = amp
    return PureState(out)


def factor_out_mode(state: PureState, mode: str) -> tuple[FockKet, PureState]:
    """Split off a spatial mode that is in a product with the rest.

    Returns (content of the mode as a sub-ket, remaining state).  Raises if
    the mode's content differs between kets, i.e. the state does not
    factorize over this cut.
    """
    content: FockKet | None = None
    rest: dict[FockKet, complex] = {}
    for k, amp in state.terms.items():
        local = k.restrict((mode,))
        if content is None:
            content = local
        elif local != content:
            raise ValueError(f"mode {mode!r} is entangled with the rest")
        rest[k.drop_modes((mode,))] = amp
    if content is None:
        raise ValueError("cannot factor a mode out of the zero state")
    return content, PureState(rest)


# --- bipartitions, Schmidt structure, density operators ------------------


@dataclass(frozen=True)
class Bipartition:
    """A rule splitting each ket into (left, right) factor labels.

    Two constructors cover the protocol's needs: polarization versus path
    for single-photon positions, and a left/right split of spatial modes.
    """

    name: str
    splitter: Callable[[FockKet], tuple]

    @classmethod
    def pol_vs_spatial(cls, positions: Sequence[Iterable[str]]) -> "Bipartition":
        """Each position is a group of spatial modes holding exactly one
        photon; left label = polarization word, right label = mode word."""
        groups = [tuple(p) for p in positions]

        all_modes = {m for g in groups for m in g}

        def split(k: FockKet) -> tuple:
            pols, modes = [], []
            for group in groups:
                found = [(r, n) for r, n in k if r.mode in group]
                if len(found) != 1 or found[0][1] != 1:
                    raise ValueError(
                        f"{k} does not hold exactly one photon in {group}"
                    )
                rail = found[0][0]
                pols.append(rail.pol)
                modes.append(rail.mode)
            if any(r.mode not in all_modes for r, _ in k):
                raise ValueError(f"{k} has photons outside the positions")
            return tuple(pols), tuple(modes)

        return cls(name="pol|spatial", splitter=split)

    @classmethod
    def mode_split(
        cls, left_modes: Iterable[str], right_modes: Iterable[str]
    ) -> "Bipartition":
        left = frozenset(left_modes)
        right = frozenset(right_modes)
        if left & right:
            raise ValueError("left and right mode sets overlap")

        def split(k: FockKet) -> tuple:
            for r, _ in k:
                if r.mode not in left and r.mode not in right:
                    raise ValueError(f"mode {r.mode!r} is in neither side")
            return k.restrict(left), k.restrict(right)

        return cls(name="mode-split", splitter=split)

    def coefficient_matrix(
        self, state: PureState
    ) -> tuple[list, list, np.ndarray]:
        """Amplitudes arranged as M[left, right] over the state's support."""
        left_labels: list = []
        right_labels: list = []
        entries: list[tuple[int, int, complex]] = []
        lindex: dict = {}
        rindex: dict = {}
        for k, amp in state.sorted_terms():
            l, r = self.splitter(k)
            if l not in lindex:
                lindex[l] = len(left_labels)
                left_labels.append(l)
            if r not in rindex:
                rindex[r] = len(right_labels)
                right_labels.append(r)
            entries.append((lindex[l], rindex[r], amp))
        m = np.zeros((len(left_labels), len(right_labels)), dtype=complex)
        for i, j, amp in entries:
            m[i, j] += amp
        return left_labels, right_labels, m


def schmidt_coefficients(
    state: PureState, part: Bipartition, tol: float = SCHMIDT_TOL
) -> tuple[float, ...]:
    """Singular values of the normalized state across ``part``, pruned."""
    _, _, m = part.coefficient_matrix(state.normalized())
    svals = np.linalg.svd(m, compute_uv=False)
    return tuple(float(s) for s in svals if s > tol)


def schmidt_rank(
    state: PureState, part: Bipartition
) -> tuple[int, tuple[float, ...]]:
    coeffs = schmidt_coefficients(state, part)
    return len(coeffs), coeffs


@dataclass(frozen=True)
class DensityOperator:
    """Density matrix over an explicit ordered basis of hashable labels."""

    labels: tuple
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (len(self.labels), len(self.labels)):
            raise ValueError("matrix shape does not match label count")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", tuple(self.labels))

    @classmethod
    def from_pure(cls, state: PureState) -> "DensityOperator":
        terms = state.normalized().sorted_terms()
        labels = tuple(k for k, _ in terms)
        v = np.array([a for _, a in terms], dtype=complex)
        return cls(labels=labels, matrix=np.outer(v, v.conj()))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))


def reduced_density(
    state: PureState, part: Bipartition, keep: str
) -> DensityOperator:
    """Trace out one side of ``part`` from a pure state.

    ``keep`` is "left" or "right" (for pol_vs_spatial: left is the
    polarization word, right the spatial word).
    """
    left_labels, right_labels, m = part.coefficient_matrix(state.normalized())
    if keep == "left":
        rho = m @ m.conj().T
        labels = tuple(left_labels)
    elif keep == "right":
        rho = m.T @ m.conj()
        labels = tuple(right_labels)
    else:
        raise ValueError("keep must be 'left' or 'right'")
    return DensityOperator(labels=labels, matrix=rho)


def partial_trace(
    rho: DensityOperator, part: Bipartition, keep: str
) -> DensityOperator:
    """Reduce a density operator over Fock kets across ``part``.

    ``keep`` is "polarization" or "spatial" for a pol_vs_spatial split
    ("left"/"right" work for any split).  Trace is preserved.
    """
    side = {"polarization": 0, "left": 0, "spatial": 1, "right": 1}.get(keep)
    if side is None:
        raise ValueError(f"keep must name a side of the split, got {keep!r}")
    pairs = []
    for k in rho.labels:
        if not isinstance(k, FockKet):
            raise ValueError("partial_trace expects a FockKet-labeled operator")
        pairs.append(part.splitter(k))
    kept_labels: list = []
    kept_index: dict = {}
    for pair in pairs:
        label = pair[side]
        if label not in kept_index:
            kept_index[label] = len(kept_labels)
            kept_labels.append(label)
    reduced = np.zeros((len(kept_labels), len(kept_labels)), dtype=complex)
    for i, pi in enumerate(pairs):
        for j, pj in enumerate(pairs):
            if pi[1 - side] == pj[1 - side]:
                reduced[kept_index[pi[side]], kept_index[pj[side]]] += rho.matrix[i, j]
    return DensityOperator(labels=tuple(kept_labels), matrix=reduced)


def joint_density(state: PureState, part: Bipartition) -> DensityOperator:
    """Pure-state density matrix in the product basis induced by ``part``,
    with labels (left, right).  Basis order is left-major, matching
    ``np.kron(reduced_left, reduced_right)``."""
    left_labels, right_labels, m = part.coefficient_matrix(state.normalized())
    v = m.reshape(-1)
    labels = tuple((l, r) for l in left_labels for r in right_labels)
    return DensityOperator(labels=labels, matrix=np.outer(v, v.conj()))


# --- serialization -------------------------------------------------------


def to_json_terms(state: PureState) -> list[dict]:
    """Canonical JSON-friendly term list: occupation triples plus re/im."""
    out = []
    for k, amp in state.sorted_terms():
        out.append(
            {
                "ket": [[r.mode, r.pol, n] for r, n in k],
                "re": float(amp.real),
                "im": float(amp.imag),
            }
        )
    return out
