"""Single-cavity protocol that tags one slit with a wave-like mode state.

Only the ``+`` slit carries a cavity (mode ``M+``, initially empty) followed
by a Ramsey zone; the ``-`` path meets no field. The stages are

1. pi/2 pulse:  |0+>|e>  ->  (|0+>|e> + |1+>|g>) / sqrt(2)
2. Ramsey zone: |g> -> |g> - |e>,  |e> -> |g> + |e>
3. keep only atoms found in ``e``
4. detect the atom on the screen.

Two amplitude conventions are supported. ``"bare"`` uses the Ramsey map
exactly as written (no 1/sqrt(2)) and unit path amplitudes; its states are
unnormalized but carry the textbook coefficients term by term. ``"unitary"``
uses a proper rotation and the path amplitudes ``lambda_+-``, so norms and
probabilities are physical. After post-selection the wave and particle
branches carry relative weight ``1/sqrt(2) : 1`` in the first convention and
``1/2 : 1`` in the second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from whichway.composite import (
    SINGLE_MODE_BASIS,
    Branch,
    BranchLabel,
    BranchState,
    DetectorDensity,
    project_position,
)
from whichway.wavepacket import PacketParams, evaluate

__all__ = [
    "INV_SQRT2",
    "WAVE",
    "PARTICLE",
    "CONVENTIONS",
    "DetectorRegions",
    "ProtocolConfig",
    "ProtocolRun",
    "ModeState",
    "initial_state",
    "pi_half_map",
    "apply_pi_half",
    "apply_ramsey",
    "postselect_excited",
    "path_norm2",
    "run_protocol",
    "click_state",
    "region_state",
    "click_probabilities",
    "classify_click",
    "mode_field",
]

INV_SQRT2 = math.sqrt(0.5)
WAVE = np.array([INV_SQRT2, -INV_SQRT2], dtype=complex)
PARTICLE = np.array([1.0, 0.0], dtype=complex)
CONVENTIONS = ("bare", "unitary")
DEGENERATE_DENSITY = 1e-300

ZERO = SINGLE_MODE_BASIS[0]
ONE = SINGLE_MODE_BASIS[1]


@dataclass(frozen=True)
class DetectorRegions:
    """Three half-open screen intervals ``[lo, hi)`` in units of ``b``.

    ``D1`` sits on the side of the ``+`` packet, ``D3`` on the ``-`` side
    and ``D2`` around the screen center.
    """

    D1: tuple[float, float] = (1.0, 5.0)
    D2: tuple[float, float] = (-1.0, 1.0)
    D3: tuple[float, float] = (-5.0, -1.0)

    def __post_init__(self):
        ivs = self.items()
        for name, (lo, hi) in ivs:
            if not lo < hi:
                raise ValueError(f"{name} interval [{lo}, {hi}) is empty")
        for i, (na, (la, ha)) in enumerate(ivs):
            for nb, (lb, hb) in ivs[i + 1:]:
                if la < hb and lb < ha:
                    raise ValueError(f"detector regions {na} and {nb} overlap")

    def items(self) -> list[tuple[str, tuple[float, float]]]:
        return [("D1", tuple(self.D1)), ("D2", tuple(self.D2)), ("D3", tuple(self.D3))]

    def center(self, name: str) -> float:
        lo, hi = getattr(self, name)
        return 0.5 * (lo + hi)


def classify_click(x: float, regions: DetectorRegions | None = None) -> str | None:
    """Name of the region containing ``x``, or ``None``."""
    regions = regions or DetectorRegions()
    for name, (lo, hi) in regions.items():
        if lo <= x < hi:
            return name
    return None


@dataclass(frozen=True)
class ProtocolConfig:
    lambda_plus: float = INV_SQRT2
    lambda_minus: float = INV_SQRT2
    phi: float = 0.0
    d: float = 4.0
    k: float = 0.0
    s: float = 1.0
    convention: str = "bare"
    regions: DetectorRegions = field(default_factory=DetectorRegions)

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}, got {self.convention!r}")
        lam2 = self.lambda_plus**2 + self.lambda_minus**2
        if abs(lam2 - 1.0) > 1e-12:
            raise ValueError(f"lambda_plus^2 + lambda_minus^2 = {lam2!r}, expected 1")

    @property
    def plus_packet(self) -> PacketParams:
        return PacketParams(self.d, self.k, self.s, +1)


def initial_state(cfg: ProtocolConfig) -> BranchState:
    """Both packets with the mode empty and the atom excited.

    Stage norms are tracked in the slit-path basis (see
    :meth:`ProtocolRun.path_norms`), so the state is flagged unnormalized:
    its overlap-inclusive norm differs from one by the packet overlap term.
    """
    plus = cfg.plus_packet
    label = BranchLabel(ZERO, "e")
    if cfg.convention == "bare":
        branches = (Branch(label, 1.0 + 0j, plus), Branch(label, 1.0 + 0j, plus.partner()))
        return BranchState(branches, SINGLE_MODE_BASIS, 1.0, 1.0, 0.0, normalized=False)
    c_minus = cfg.lambda_minus * complex(math.cos(cfg.phi), math.sin(cfg.phi))
    return BranchState(
        (Branch(label, complex(cfg.lambda_plus), plus), Branch(label, c_minus, plus.partner())),
        SINGLE_MODE_BASIS, cfg.lambda_plus, cfg.lambda_minus, cfg.phi, normalized=False,
    )


def pi_half_map(branch: Branch) -> list[Branch]:
    """pi/2 atom-cavity pulse on one ``+`` slit branch in ``|0+>|e>``."""
    if branch.packet.sign != 1:
        raise ValueError("the pi/2 pulse acts only on the + slit branch")
    if branch.label != BranchLabel(ZERO, "e"):
        raise ValueError(f"pi/2 pulse expects |0+>|e>, got {branch.label}")
    a = branch.amplitude * INV_SQRT2
    return [
        Branch(BranchLabel(ZERO, "e"), a, branch.packet),
        Branch(BranchLabel(ONE, "g"), a, branch.packet),
    ]


def apply_pi_half(state: BranchState) -> BranchState:
    out: list[Branch] = []
    for br in state.branches:
        out.extend(pi_half_map(br) if br.packet.sign == 1 else [br])
    return state.with_branches(out)


def apply_ramsey(state: BranchState, convention: str = "bare") -> BranchState:
    """Ramsey rotation of the atomic level on ``+`` slit branches.

    ``"bare"`` applies ``g -> g - e``, ``e -> g + e`` verbatim and flags
    the result unnormalized; ``"unitary"`` includes the ``1/sqrt(2)``.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    f = INV_SQRT2 if convention == "unitary" else 1.0
    out: list[Branch] = []
    for br in state.branches:
        if br.packet.sign != 1:
            out.append(br)
            continue
        a, cav = br.amplitude * f, br.label.cavity
        out.append(Branch(BranchLabel(cav, "g"), a, br.packet))
        out.append(Branch(BranchLabel(cav, "e"), a if br.label.atom == "e" else -a, br.packet))
    return state.with_branches(out, normalized=state.normalized and convention == "unitary")


def path_norm2(state: BranchState) -> float:
    """Sum of squared branch amplitudes (packets from different slits orthogonal)."""
    return float(sum(abs(br.amplitude) ** 2 for br in state.branches))


def postselect_excited(state: BranchState) -> tuple[BranchState, float]:
    """Keep the ``e`` branches; return them with their relative weight.

    The weight is the ratio of screen-level norms, i.e. the fraction of
    detected atoms that are found excited.
    """
    kept = state.select(lambda br: br.label.atom == "e")
    return kept, kept.norm2() / state.norm2()


@dataclass(frozen=True)
class ProtocolRun:
    config: ProtocolConfig
    initial: BranchState
    after_pi_half: BranchState
    after_ramsey: BranchState
    postselected: BranchState
    postselection_probability: float

    @property
    def stages(self) -> dict[str, BranchState]:
        return {
            "initial": self.initial,
            "after_pi_half": self.after_pi_half,
            "after_ramsey": self.after_ramsey,
        }

    def path_norms(self) -> dict[str, float]:
        """Stage norms with the two slit paths treated as orthogonal.

        The cavity and Ramsey maps act while the paths are spatially
        separated, so this is the norm a unitary stage must conserve.
        """
        return {name: path_norm2(st) for name, st in self.stages.items()}

    def screen_norms(self) -> dict[str, float]:
        """Stage norms including the overlap of the two packets."""
        return {name: st.norm2() for name, st in self.stages.items()}


def run_protocol(cfg: ProtocolConfig | None = None) -> ProtocolRun:
    cfg = cfg or ProtocolConfig()
    s0 = initial_state(cfg)
    s1 = apply_pi_half(s0)
    s2 = apply_ramsey(s1, cfg.convention)
    s3, prob = postselect_excited(s2)
    return ProtocolRun(cfg, s0, s1, s2, s3, prob)


@dataclass(frozen=True)
class ModeState:
    """Vector over ``(|0+>, |1+>)``."""

    vector: np.ndarray
    normalized: bool = True

    def fidelity(self, target) -> float:
        t = np.asarray(target, dtype=complex)
        t = t / np.linalg.norm(t)
        v = self.vector / np.linalg.norm(self.vector)
        return float(abs(np.vdot(t, v)) ** 2)

    def canonical(self) -> "ModeState":
        """Same ray with the global phase fixed so the leading nonzero entry is real positive."""
        v = self.vector
        lead = v[np.flatnonzero(np.abs(v) > 0)[0]]
        return ModeState(v * (abs(lead) / lead), self.normalized)

    @property
    def visibility(self) -> float:
        v = self.vector
        return float(2 * abs(v[0] * np.conj(v[1])) / np.vdot(v, v).real)


def click_state(post: BranchState, x: float) -> tuple[ModeState, float]:
    """Mode state prepared by an atom detected at ``x``, plus the density there.

    Below a density of 1e-300 the vector is returned unnormalized and
    flagged so.
    """
    disc, n2 = project_position(post, x)
    v = disc.cavity_vector("e")
    if n2 < DEGENERATE_DENSITY:
        return ModeState(v, normalized=False), n2
    return ModeState(v / math.sqrt(n2), normalized=True), n2


def mode_field(post: BranchState, x: np.ndarray) -> np.ndarray:
    """``(2, len(x))`` array of e-level mode amplitudes along the screen."""
    out = np.zeros((2, x.size), dtype=complex)
    for br in post.branches:
        if br.label.atom == "e":
            out[SINGLE_MODE_BASIS.index(br.label.cavity)] += br.amplitude * evaluate(br.packet, x)
    return out


def region_state(
    post: BranchState, interval: tuple[float, float], n: int = 4097
) -> tuple[DetectorDensity, float]:
    """Mode density averaged over clicks in ``interval`` and the region's weight.

    The weight is ``int |v(x)|^2 dx`` over the interval, in the same
    (possibly unnormalized) scale as ``post``.
    """
    x = np.linspace(*interval, n)
    v = mode_field(post, x)
    rho = simpson(v[:, None, :] * np.conj(v[None, :, :]), x=x, axis=-1)
    mass = float(np.trace(rho).real)
    return DetectorDensity(rho / mass, SINGLE_MODE_BASIS), mass


def click_probabilities(post: BranchState, regions: DetectorRegions, n: int = 4097) -> dict[str, float]:
    """Probability that a post-selected atom fires each detector."""
    total = post.norm2()
    return {name: region_state(post, iv, n)[1] / total for name, iv in regions.items()}
