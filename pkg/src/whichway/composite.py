"""Joint quanton/detector states stored as labeled branches.

A state is a short list of ``(label, amplitude, packet)`` triples,

    |Psi> = sum_a  c_a |psi_a> |cavity_a> |atom_a>,

with the discrete labels orthonormal and the packets overlapping only through
:func:`whichway.wavepacket.packet_overlap`. Two discrete bases are in use: the
two-cavity basis ``("1+,0-", "0+,1-")`` of the which-way detector and the
single-mode basis ``("0+", "1+")`` of the wave/particle protocol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from whichway.wavepacket import (
    PacketParams,
    QuadratureGrid,
    check_grid,
    default_grid,
    evaluate,
    log_evaluate,
    packet_overlap,
)

__all__ = [
    "TWO_CAVITY_BASIS",
    "SINGLE_MODE_BASIS",
    "ATOM_LABELS",
    "BranchLabel",
    "Branch",
    "BranchState",
    "DetectorDensity",
    "DiscreteState",
    "make_tagged_state",
    "reduce_to_detector",
    "reduce_to_detector_quadrature",
    "project_position",
    "posterior_density",
]

TWO_CAVITY_BASIS = ("1+,0-", "0+,1-")
SINGLE_MODE_BASIS = ("0+", "1+")
ATOM_LABELS = ("g", "e")

LAMBDA_TOL = 1e-12
NORM_TOL = 1e-9


@dataclass(frozen=True)
class BranchLabel:
    cavity: str
    atom: str = "g"


@dataclass(frozen=True)
class Branch:
    label: BranchLabel
    amplitude: complex
    packet: PacketParams


class DetectorDensity:
    """2x2 density matrix over the two interferometric alternatives.

    Construction validates Hermiticity, unit trace and positivity to ``atol``.
    Index 0 is the first label of ``basis``.
    """

    def __init__(self, matrix, basis=TWO_CAVITY_BASIS, atol: float = 1e-12):
        m = np.array(matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"detector density must be 2x2, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("detector density has non-finite entries")
        if np.max(np.abs(m - m.conj().T)) > atol:
            raise ValueError("detector density is not Hermitian")
        if abs(np.trace(m) - 1.0) > atol:
            raise ValueError(f"detector density trace {np.trace(m).real!r} != 1")
        if np.min(np.linalg.eigvalsh(m)) < -atol:
            raise ValueError("detector density is not positive semidefinite")
        m.setflags(write=False)
        self.matrix = m
        self.basis = tuple(basis)

    @classmethod
    def from_vector(cls, vec, basis=TWO_CAVITY_BASIS) -> "DetectorDensity":
        v = np.asarray(vec, dtype=complex)
        n2 = float(np.vdot(v, v).real)
        if n2 == 0.0:
            raise ValueError("cannot build a density from the zero vector")
        v = v / math.sqrt(n2)
        return cls(np.outer(v, v.conj()), basis)

    @property
    def populations(self) -> tuple[float, float]:
        return float(self.matrix[0, 0].real), float(self.matrix[1, 1].real)

    @property
    def coherence(self) -> complex:
        """Element ``rho[0, 1]``."""
        return complex(self.matrix[0, 1])

    @property
    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def fidelity(self, vec) -> float:
        """``<v|rho|v>`` for a normalized copy of ``vec``."""
        v = np.asarray(vec, dtype=complex)
        v = v / np.linalg.norm(v)
        return float(np.vdot(v, self.matrix @ v).real)

    def __repr__(self):
        return f"DetectorDensity({self.matrix.tolist()!r}, basis={self.basis!r})"


def _merge(branches: Iterable[Branch]) -> tuple[Branch, ...]:
    """Sum amplitudes of branches that share both label and packet."""
    acc: dict[tuple[BranchLabel, PacketParams], complex] = {}
    for br in branches:
        key = (br.label, br.packet)
        acc[key] = acc.get(key, 0j) + complex(br.amplitude)
    return tuple(Branch(lab, amp, pk) for (lab, pk), amp in acc.items() if amp != 0)


@dataclass(frozen=True)
class BranchState:
    """Pure joint state of packet, cavity modes and atomic level.

    ``normalized=False`` marks states built from non-unitary bookkeeping
    (e.g. the bare, unnormalized Ramsey maps); the path amplitudes and
    total norm are then not checked.
    """

    branches: tuple[Branch, ...]
    basis: tuple[str, str] = TWO_CAVITY_BASIS
    lambda_plus: float = 1.0
    lambda_minus: float = 0.0
    phi: float = 0.0
    normalized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "branches", _merge(self.branches))
        object.__setattr__(self, "basis", tuple(self.basis))
        if len(self.basis) != 2:
            raise ValueError(f"basis must have two labels, got {self.basis!r}")
        for br in self.branches:
            if br.label.cavity not in self.basis:
                raise ValueError(f"cavity label {br.label.cavity!r} not in basis {self.basis!r}")
            if br.label.atom not in ATOM_LABELS:
                raise ValueError(f"atom label {br.label.atom!r} not in {ATOM_LABELS!r}")
        if not self.branches:
            raise ValueError("state has no branches")
        if self.normalized:
            lam2 = self.lambda_plus**2 + self.lambda_minus**2
            if abs(lam2 - 1.0) > LAMBDA_TOL:
                raise ValueError(f"lambda_plus^2 + lambda_minus^2 = {lam2!r}, expected 1")
            n2 = self.norm2()
            if abs(n2 - 1.0) > NORM_TOL:
                raise ValueError(f"state flagged normalized has norm^2 {n2!r}")

    @property
    def packets(self) -> tuple[PacketParams, ...]:
        return tuple(dict.fromkeys(br.packet for br in self.branches))

    def norm2(self) -> float:
        """``<Psi|Psi>`` including packet overlaps."""
        total = 0j
        for a in self.branches:
            for b in self.branches:
                if a.label == b.label:
                    total += np.conj(a.amplitude) * b.amplitude * packet_overlap(a.packet, b.packet)
        return float(total.real)

    def select(self, pred) -> "BranchState":
        """Unnormalized sub-state of the branches satisfying ``pred(branch)``."""
        kept = tuple(br for br in self.branches if pred(br))
        return BranchState(
            kept, self.basis, self.lambda_plus, self.lambda_minus, self.phi, normalized=False
        )

    def with_branches(self, branches, normalized: bool | None = None) -> "BranchState":
        return BranchState(
            tuple(branches),
            self.basis,
            self.lambda_plus,
            self.lambda_minus,
            self.phi,
            self.normalized if normalized is None else normalized,
        )


def make_tagged_state(
    lambda_plus: float,
    lambda_minus: float,
    phi: float = 0.0,
    d: float = 4.0,
    k: float = 0.0,
    s: float = 0.0,
    b: float = 1.0,
) -> BranchState:
    """Two-cavity state after the slits, atom left in ``g`` by the pi pulse.

    ``lambda_plus |psi+>|1+,0-> + lambda_minus e^{i phi} |psi->|0+,1->``.
    Branches with zero amplitude are dropped.
    """
    lam2 = lambda_plus**2 + lambda_minus**2
    if abs(lam2 - 1.0) > LAMBDA_TOL:
        raise ValueError(f"lambda_plus^2 + lambda_minus^2 = {lam2!r}, expected 1")
    plus = PacketParams(d, k, s, +1, b)
    branches = (
        Branch(BranchLabel(TWO_CAVITY_BASIS[0], "g"), complex(lambda_plus), plus),
        Branch(
            BranchLabel(TWO_CAVITY_BASIS[1], "g"),
            lambda_minus * complex(math.cos(phi), math.sin(phi)),
            plus.partner(),
        ),
    )
    return BranchState(branches, TWO_CAVITY_BASIS, lambda_plus, lambda_minus, phi)


def reduce_to_detector(state: BranchState) -> DetectorDensity:
    """Trace out the packet (and atomic level) analytically.

    ``rho[i, j] = sum c_a conj(c_b) <psi_b|psi_a>`` over branch pairs with
    cavity labels ``i, j`` and equal atom labels. Unnormalized states are
    rescaled to unit trace.
    """
    if len(state.basis) != 2:
        raise ValueError("reduction needs a two-label cavity basis")
    idx = {lab: i for i, lab in enumerate(state.basis)}
    rho = np.zeros((2, 2), dtype=complex)
    for a in state.branches:
        for b in state.branches:
            if a.label.atom != b.label.atom:
                continue
            rho[idx[a.label.cavity], idx[b.label.cavity]] += (
                a.amplitude * np.conj(b.amplitude) * packet_overlap(b.packet, a.packet)
            )
    tr = np.trace(rho).real
    if not state.normalized:
        rho = rho / tr
    return DetectorDensity(rho, state.basis)


def _label_fields(state: BranchState, x) -> dict[BranchLabel, np.ndarray]:
    """Position-space amplitude attached to each discrete label."""
    fields: dict[BranchLabel, np.ndarray] = {}
    for br in state.branches:
        fields[br.label] = fields.get(br.label, 0j) + br.amplitude * evaluate(br.packet, x)
    return fields


def reduce_to_detector_quadrature(
    state: BranchState, grid: QuadratureGrid | None = None
) -> DetectorDensity:
    """Brute-force partial trace ``rho_ij = int f_i(x) conj(f_j(x)) dx``.

    No renormalization is applied, so truncation or normalization errors show
    up as a trace defect (checked to ``1e-9``).
    """
    if grid is None:
        grid = default_grid(*state.packets)
    check_grid(grid, *state.packets)
    b = state.packets[0].b
    fields = _label_fields(state, grid.points)
    idx = {lab: i for i, lab in enumerate(state.basis)}
    rho = np.zeros((2, 2), dtype=complex)
    for la, fa in fields.items():
        for lb, fb in fields.items():
            if la.atom == lb.atom:
                rho[idx[la.cavity], idx[lb.cavity]] += grid.integrate(fa * np.conj(fb), b)
    if not state.normalized:
        rho = rho / np.trace(rho).real
    return DetectorDensity(rho, state.basis, atol=1e-9)


@dataclass(frozen=True)
class DiscreteState:
    """Cavity/atom state left after a position measurement (unnormalized)."""

    basis: tuple[str, str]
    amplitudes: dict[BranchLabel, complex] = field(default_factory=dict)

    @property
    def norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def cavity_vector(self, atom: str) -> np.ndarray:
        v = np.zeros(2, dtype=complex)
        for lab, amp in self.amplitudes.items():
            if lab.atom == atom:
                v[self.basis.index(lab.cavity)] += amp
        return v

    def cavity_density(self) -> DetectorDensity:
        """Normalized cavity density with the atomic level traced out."""
        rho = np.zeros((2, 2), dtype=complex)
        for atom in ATOM_LABELS:
            v = self.cavity_vector(atom)
            rho += np.outer(v, v.conj())
        tr = np.trace(rho).real
        if tr == 0.0:
            raise ValueError("zero-norm posterior; outcome has vanishing density")
        return DetectorDensity(rho / tr, self.basis)


def project_position(state: BranchState, x: float) -> tuple[DiscreteState, float]:
    """Project on the position eigenvalue ``x`` (units of ``b``).

    Returns the unnormalized discrete state with amplitudes ``c_a psi_a(x)``
    and its squared norm, which is the screen density at ``x`` (1/b units).
    """
    amps: dict[BranchLabel, complex] = {}
    for lab, val in _label_fields(state, float(x)).items():
        amps[lab] = complex(val)
    post = DiscreteState(state.basis, amps)
    return post, post.norm2


def posterior_density(state: BranchState, x: float) -> DetectorDensity:
    """Normalized cavity state after detecting the quanton at ``x``.

    Amplitudes are rescaled in log space first, so outcomes deep in both
    packets' tails still give a well-defined posterior.
    """
    logs = [(br, complex(log_evaluate(br.packet, float(x)))) for br in state.branches]
    ref = max(lg.real for _, lg in logs)
    amps: dict[BranchLabel, complex] = {}
    for br, lg in logs:
        amps[br.label] = amps.get(br.label, 0j) + br.amplitude * np.exp(lg - ref)
    return DiscreteState(state.basis, amps).cavity_density()
