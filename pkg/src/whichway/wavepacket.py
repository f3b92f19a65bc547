"""Free Gaussian wave packets for the transverse center-of-mass coordinate.

Every quantity is handled in dimensionless form::

    X = x / b,   D = d / b,   K = k b,   s = t / tau   (tau = m b^2 / hbar)

so the packet leaving slit ``sign`` reads

    psi(X, s) = (b sqrt(pi (1 + s^2)))^(-1/2)
                * exp[-(X - sign D/2 - K s)^2 (1 - i s) / (2 (1 + s^2))
                      - i K^2 s / 2 + i K X]

which is the usual spreading Gaussian with width B(t) = b sqrt(1 + s^2) and
center drifting by b^2 k t / tau. The x-independent phase of the textbook
propagator is omitted; the -i K^2 s / 2 phase is kept.

Amplitudes carry units of b^(-1/2), densities units of 1/b. Integrals over X
are multiplied by ``b`` to restore the physical measure dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.special import erfc

__all__ = [
    "PacketParams",
    "QuadratureGrid",
    "GridTooNarrowError",
    "evaluate",
    "log_evaluate",
    "density",
    "overlap_analytic",
    "overlap_quadrature",
    "packet_overlap",
    "default_grid",
    "tail_mass",
]

#: Minimum number of quadrature nodes accepted by the numerical oracles.
MIN_GRID_POINTS = 2**12
#: Largest probability mass allowed outside a quadrature window.
MAX_TAIL_MASS = 1e-10


class GridTooNarrowError(ValueError):
    """Raised when a quadrature grid truncates a packet's probability mass."""


@dataclass(frozen=True)
class PacketParams:
    """Parameters of one transverse packet.

    Parameters
    ----------
    d : float
        Slit separation in units of ``b``.
    k : float
        Transverse wave number in units of ``1/b``.
    s : float
        Dimensionless propagation time ``t / tau``.
    sign : int
        ``+1`` for the packet centered at ``+d/2``, ``-1`` for ``-d/2``.
    b : float
        Initial packet width, only used to scale amplitudes and measures.
    """

    d: float
    k: float = 0.0
    s: float = 0.0
    sign: int = 1
    b: float = 1.0

    def __post_init__(self):
        for name in ("d", "k", "s", "b"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)!r}")
        if self.b <= 0:
            raise ValueError(f"b must be positive, got {self.b}")
        if self.d < 0:
            raise ValueError(f"d must be non-negative, got {self.d}")
        if self.s < 0:
            raise ValueError(f"s must be non-negative, got {self.s}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign!r}")

    @property
    def width(self) -> float:
        """Width ``B(t)/b = sqrt(1 + s^2)``."""
        return math.sqrt(1.0 + self.s * self.s)

    @property
    def center(self) -> float:
        """Center of ``|psi|^2`` in units of ``b``."""
        return self.sign * self.d / 2 + self.k * self.s

    def partner(self) -> "PacketParams":
        """Packet from the other slit with otherwise identical parameters."""
        return PacketParams(self.d, self.k, self.s, -self.sign, self.b)


def _check_positions(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("positions must be finite")
    return x


def log_evaluate(p: PacketParams, x):
    """Complex logarithm of :func:`evaluate`, stable far in the tails."""
    x = _check_positions(x)
    w2 = 1.0 + p.s * p.s
    u = x - p.sign * p.d / 2 - p.k * p.s
    log_norm = -0.5 * math.log(p.b * math.sqrt(math.pi * w2))
    return (
        log_norm
        - u * u * (1.0 - 1j * p.s) / (2.0 * w2)
        - 0.5j * p.k * p.k * p.s
        + 1j * p.k * x
    )


def evaluate(p: PacketParams, x):
    """Packet amplitude at position ``x`` (units of ``b``).

    Accepts scalars or arrays; returns ``complex`` or a complex array.
    Non-finite positions raise ``ValueError``.
    """
    out = np.exp(log_evaluate(p, x))
    return complex(out) if out.ndim == 0 else out


def density(p: PacketParams, x):
    """``|psi(x)|^2`` in units of ``1/b``; never negative."""
    x = _check_positions(x)
    w2 = 1.0 + p.s * p.s
    u = x - p.center
    out = np.exp(-u * u / w2) / (p.b * math.sqrt(math.pi * w2))
    return float(out) if out.ndim == 0 else out


def overlap_analytic(d: float) -> float:
    """``<psi+|psi-> = exp(-d^2 / 4b^2)`` with ``d`` in units of ``b``."""
    if d < 0:
        raise ValueError(f"d must be non-negative, got {d}")
    return math.exp(-d * d / 4.0)


def packet_overlap(p1: PacketParams, p2: PacketParams) -> complex:
    """``<p1|p2>``, analytic whenever both packets share ``(d, k, s, b)``.

    Any other pair falls back to :func:`overlap_quadrature`.
    """
    if p1 == p2:
        return 1.0 + 0j
    if p1.partner() == p2:
        return complex(overlap_analytic(p1.d))
    return overlap_quadrature(p1, p2)


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform Simpson grid ``[lo, hi]`` in units of ``b``."""

    lo: float
    hi: float
    n: int = MIN_GRID_POINTS

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.hi <= self.lo:
            raise ValueError(f"invalid grid bounds [{self.lo}, {self.hi}]")
        if self.n < MIN_GRID_POINTS:
            raise ValueError(f"grid needs at least {MIN_GRID_POINTS} points, got {self.n}")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    def integrate(self, values, b: float = 1.0):
        """Simpson integral over the grid along the last axis, in physical units."""
        return b * simpson(values, x=self.points, axis=-1)


def default_grid(*packets: PacketParams, n: int = MIN_GRID_POINTS) -> QuadratureGrid:
    """Window ``+-(D/2 + |K| s + 8 sqrt(1 + s^2))`` enclosing every packet."""
    half = max(p.d / 2 + abs(p.k) * p.s + 8.0 * p.width for p in packets)
    return QuadratureGrid(-half, half, n)


def tail_mass(p: PacketParams, grid: QuadratureGrid) -> float:
    """Probability of ``|psi|^2`` lying outside the grid window."""
    w = p.width
    return 0.5 * float(erfc((grid.hi - p.center) / w) + erfc((p.center - grid.lo) / w))


def check_grid(grid: QuadratureGrid, *packets: PacketParams) -> None:
    for p in packets:
        lost = tail_mass(p, grid)
        if lost > MAX_TAIL_MASS:
            raise GridTooNarrowError(
                f"grid [{grid.lo:g}, {grid.hi:g}] loses tail mass {lost:.3e} of packet "
                f"centered at {p.center:g} with width {p.width:g}; need <= {MAX_TAIL_MASS:g}"
            )


def overlap_quadrature(
    p1: PacketParams, p2: PacketParams, grid: QuadratureGrid | None = None
) -> complex:
    """Numerical ``<p1|p2> = int conj(psi1) psi2 dx`` by Simpson's rule.

    Serves as the brute-force oracle for :func:`overlap_analytic`.
    """
    if p1.b != p2.b:
        raise ValueError("packets must share the width b")
    if grid is None:
        grid = default_grid(p1, p2)
    check_grid(grid, p1, p2)
    x = grid.points
    integrand = np.conj(evaluate(p1, x)) * evaluate(p2, x)
    return complex(grid.integrate(integrand, p1.b))
