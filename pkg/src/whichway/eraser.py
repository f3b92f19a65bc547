"""Conditioned visibility and which-way knowledge after a screen detection.

Detecting the atom at ``X = x/b`` leaves the cavities in

    lambda_+ psi_+(x) |1+,0-> + lambda_- e^{i phi} psi_-(x) |0+,1->.

Its visibility ``V_x`` and which-way knowledge ``K_x = |p(+|x) - p(-|x)|``
depend on position and time only through

    delta = D (K s - X) / (1 + s^2),

and satisfy ``V_x^2 + K_x^2 = 1``. With balanced paths ``V_x = sech(delta)``,
so erasure is complete on the line ``X = K s``.

Everything here is vectorized over NumPy broadcasting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from whichway import wavepacket as wp
from whichway.composite import DetectorDensity, make_tagged_state, posterior_density

__all__ = [
    "ConditionedResult",
    "FigureParams",
    "FigureTable",
    "delta",
    "delta_physical",
    "conditioned_pair",
    "conditioned_pair_ratio",
    "conditioned_visibility_balanced",
    "conditioned_result",
    "eraser_locus",
    "eraser_locus_numeric",
    "screen_density",
    "figure_scan",
]

BALANCED = float(np.sqrt(0.5))


def delta(d, k, s, x):
    """Exponent ``D (K s - X) / (1 + s^2)`` in dimensionless units."""
    d, k, s, x = (np.asarray(v, dtype=float) for v in (d, k, s, x))
    return d * (k * s - x) / (1.0 + s * s)


def delta_physical(d, k, t, x, b=1.0, tau=1.0):
    """Same exponent in physical units, ``d tau (b^2 k t - x tau) / (b^2 (t^2 + tau^2))``."""
    return d * tau * (b * b * k * t - x * tau) / (b * b * (t * t + tau * tau))


def _posterior_entries(lambda_plus, lambda_minus, phi, d, k, s, x):
    """Normalized posterior ``(rho_11, rho_22, rho_12)`` arrays by direct projection."""
    shape = np.broadcast(lambda_plus, lambda_minus, phi, d, k, s, x).shape
    lp, lm, ph, d, k, s, x = (
        np.broadcast_to(np.asarray(v, dtype=float), shape) for v in
        (lambda_plus, lambda_minus, phi, d, k, s, x)
    )
    w2 = 1.0 + s * s
    # log psi_+- without the common normalization; same K so the i K X phases cancel too
    def log_amp(sign):
        u = x - sign * d / 2 - k * s
        return -u * u * (1.0 - 1j * s) / (2.0 * w2)

    log_p, log_m = log_amp(+1), log_amp(-1)
    ref = np.maximum(log_p.real, log_m.real)
    a_p = lp * np.exp(log_p - ref)
    a_m = lm * np.exp(1j * ph) * np.exp(log_m - ref)
    n2 = np.abs(a_p) ** 2 + np.abs(a_m) ** 2
    return np.abs(a_p) ** 2 / n2, np.abs(a_m) ** 2 / n2, a_p * np.conj(a_m) / n2


def conditioned_pair(lambda_plus, lambda_minus, d, k, s, x, phi=0.0):
    """``(V_x, K_x)`` from the projected and renormalized cavity state.

    ``V_x = 2 |rho_12|`` and ``K_x = |rho_11 - rho_22|`` of the posterior.
    """
    r11, r22, r12 = _posterior_entries(lambda_plus, lambda_minus, phi, d, k, s, x)
    V = 2.0 * np.abs(r12)
    K = np.abs(r11 - r22)
    if V.ndim == 0:
        return float(V), float(K)
    return V, K


def conditioned_pair_ratio(lambda_plus, lambda_minus, d, k, s, x):
    """Closed ratio forms for ``(V_x, K_x)`` in ``cosh delta +- sinh delta``; cross-check only.

    ``cosh +- sinh`` is evaluated as ``exp(+-delta)``: subtracting the two
    hyperbolic functions directly cancels catastrophically for large
    ``|delta|``.
    """
    dl = delta(d, k, s, x)
    up, down = np.exp(dl), np.exp(-dl)  # cosh + sinh, cosh - sinh
    lp2, lm2 = np.square(lambda_plus), np.square(lambda_minus)
    den = np.abs(lm2 * up + lp2 * down)
    V = 2.0 * np.abs(lambda_plus) * np.abs(lambda_minus) / den
    K = np.abs(lm2 * up - lp2 * down) / den
    return V, K


def conditioned_visibility_balanced(d, k, s, x):
    """``sech(delta)`` for ``lambda_+ = lambda_- = 1/sqrt(2)``."""
    return 1.0 / np.cosh(delta(d, k, s, x))


def eraser_locus(d, k, s):
    """Screen position ``X* = K s`` of complete erasure (``x = b^2 k t / tau``).

    ``d`` is accepted for signature symmetry; the locus does not depend on it.
    """
    return np.asarray(k, dtype=float) * np.asarray(s, dtype=float)


def eraser_locus_numeric(d, k, s, x_grid) -> float:
    """Grid point maximizing the balanced ``V_x``."""
    x_grid = np.asarray(x_grid, dtype=float)
    V, _ = conditioned_pair(BALANCED, BALANCED, d, k, s, x_grid)
    return float(x_grid[np.argmax(V)])


def screen_density(lambda_plus, lambda_minus, d, k, s, x, b=1.0):
    """Which-way screen density ``lambda_+^2 |psi_+|^2 + lambda_-^2 |psi_-|^2``.

    The cavity labels are orthogonal, so no interference term survives.
    Vectorized over ``x`` only.
    """
    plus = wp.PacketParams(d, k, s, +1, b)
    return lambda_plus**2 * wp.density(plus, x) + lambda_minus**2 * wp.density(plus.partner(), x)


@dataclass(frozen=True)
class ConditionedResult:
    x: float
    s: float
    delta: float
    V_x: float
    K_x: float
    posterior: DetectorDensity
    density: float


def conditioned_result(
    lambda_plus: float,
    lambda_minus: float,
    d: float,
    k: float,
    s: float,
    x: float,
    phi: float = 0.0,
) -> ConditionedResult:
    """Full record of one position outcome, posterior built by projection."""
    state = make_tagged_state(lambda_plus, lambda_minus, phi, d, k, s)
    post = posterior_density(state, x)
    p0, p1 = post.populations
    return ConditionedResult(
        x=float(x),
        s=float(s),
        delta=float(delta(d, k, s, x)),
        V_x=2.0 * abs(post.coherence),
        K_x=abs(p0 - p1),
        posterior=post,
        density=float(screen_density(lambda_plus, lambda_minus, d, k, s, x)),
    )


@dataclass(frozen=True)
class FigureParams:
    """Physical parameters and scan grids; defaults follow the figure captions."""

    lambda_plus: float = BALANCED
    lambda_minus: float = BALANCED
    phi: float = 0.0
    d: float = 4.0
    k: float = 0.0
    s: float = 1.0
    x: float = 1.0
    points: int = 601
    x_range: tuple[float, float] = (-6.0, 6.0)
    s_range: tuple[float, float] = (0.0, 5.0)
    k_range: tuple[float, float] = (-2.0, 2.0)


@dataclass(frozen=True)
class FigureTable:
    """Column-oriented scan output, rows ordered by grid index.

    For ``fig3`` the row index runs over ``k`` in the outer loop and ``x``
    in the inner loop.
    """

    mode: str
    x_over_b: np.ndarray
    t_over_tau: np.ndarray
    k_b: np.ndarray
    V_x: np.ndarray
    K_x: np.ndarray
    delta: np.ndarray
    density: np.ndarray
    params: FigureParams = field(default_factory=FigureParams)

    def __len__(self):
        return len(self.V_x)

    @property
    def columns(self) -> tuple[str, ...]:
        return {
            "fig1": ("x_over_b", "V_x", "K_x", "delta", "density"),
            "fig2": ("t_over_tau", "V_x", "K_x", "delta", "density"),
            "fig3": ("x_over_b", "k_b", "V_x", "K_x", "delta", "density"),
        }[self.mode]

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def max_identity_residual(self) -> float:
        return float(np.max(np.abs(self.V_x**2 + self.K_x**2 - 1.0)))

    def result(self, i: int) -> ConditionedResult:
        p = self.params
        return conditioned_result(
            p.lambda_plus, p.lambda_minus, p.d,
            float(self.k_b[i]), float(self.t_over_tau[i]), float(self.x_over_b[i]), p.phi,
        )


def figure_scan(mode: str, params: FigureParams | None = None) -> FigureTable:
    """Tabulate ``V_x, K_x, delta`` and the screen density for one figure.

    ``fig1`` scans position at fixed time, ``fig2`` scans time at fixed
    position, ``fig3`` scans position against transverse wave number.
    """
    p = params or FigureParams()
    if p.points < 1:
        raise ValueError("figure grid must have at least one point")
    n = p.points
    if mode == "fig1":
        x = np.linspace(*p.x_range, n)
        s = np.full(n, p.s)
        k = np.full(n, p.k)
    elif mode == "fig2":
        s = np.linspace(*p.s_range, n)
        if s[0] < 0:
            raise ValueError("time grid must be non-negative")
        x = np.full(n, p.x)
        k = np.full(n, p.k)
    elif mode == "fig3":
        kk, xx = np.meshgrid(np.linspace(*p.k_range, n), np.linspace(*p.x_range, n), indexing="ij")
        x, k = xx.ravel(), kk.ravel()
        s = np.full(x.size, p.s)
    else:
        raise ValueError(f"unknown figure mode {mode!r}")
    V, K = conditioned_pair(p.lambda_plus, p.lambda_minus, p.d, k, s, x, p.phi)
    dens = _which_way_density(p, x, k, s)
    return FigureTable(mode, x, s, k, V, K, delta(p.d, k, s, x), dens, p)


def _which_way_density(p: FigureParams, x, k, s):
    w2 = 1.0 + s * s
    out = np.zeros_like(x)
    for sign, lam in ((+1, p.lambda_plus), (-1, p.lambda_minus)):
        u = x - sign * p.d / 2 - k * s
        out += lam**2 * np.exp(-u * u / w2) / np.sqrt(np.pi * w2)
    return out
