"""Monte Carlo screen detections.

Positions are drawn by inverting a tabulated CDF (4096 nodes, linear
interpolation) with NumPy's counter-based ``Philox`` generator. Work can be
split into shards; shard ``i`` is seeded with ``seed ^ i`` and shards are
concatenated in order, so threaded and serial runs agree bit for bit.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import cumulative_trapezoid

from whichway import waveparticle as wpart
from whichway.wavepacket import PacketParams, QuadratureGrid, default_grid, evaluate, log_evaluate

__all__ = [
    "SCENARIOS",
    "RNG_ALGORITHM",
    "ScreenDensity",
    "SampleRun",
    "VisibilityEstimate",
    "density_at",
    "sample",
    "empirical_conditioned_visibility",
    "count_local_maxima",
    "click_frequencies",
    "posterior_vectors",
]

log = logging.getLogger(__name__)

SCENARIOS = ("which-way", "no-detector", "postselected")
RNG_ALGORITHM = "numpy.random.Philox (4x64, 10 rounds), shard seed = seed ^ shard"
TABLE_POINTS = 4096


@dataclass(frozen=True)
class ScreenDensity:
    """Screen statistics for one scenario.

    ``which-way``: cavities tag the path, densities add.
    ``no-detector``: no tagging, the two amplitudes interfere.
    ``postselected``: single-cavity protocol, atoms found in ``e``; its raw
    density integrates to the post-selection probability.
    """

    scenario: str = "which-way"
    lambda_plus: float = wpart.INV_SQRT2
    lambda_minus: float = wpart.INV_SQRT2
    phi: float = 0.0
    d: float = 4.0
    k: float = 0.0
    s: float = 1.0
    convention: str = "unitary"
    regions: wpart.DetectorRegions = field(default_factory=wpart.DetectorRegions)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        lam2 = self.lambda_plus**2 + self.lambda_minus**2
        if abs(lam2 - 1.0) > 1e-12:
            raise ValueError(f"lambda_plus^2 + lambda_minus^2 = {lam2!r}, expected 1")
        PacketParams(self.d, self.k, self.s)

    @property
    def plus(self) -> PacketParams:
        return PacketParams(self.d, self.k, self.s, +1)

    @cached_property
    def protocol(self) -> wpart.ProtocolRun:
        return wpart.run_protocol(
            wpart.ProtocolConfig(
                self.lambda_plus, self.lambda_minus, self.phi, self.d, self.k, self.s,
                self.convention, self.regions,
            )
        )

    @cached_property
    def grid(self) -> QuadratureGrid:
        return default_grid(self.plus, self.plus.partner(), n=TABLE_POINTS)

    def amplitudes(self, x) -> np.ndarray:
        """Detector-side amplitude vectors ``(2, len(x))`` for each outcome.

        For ``no-detector`` the single interfering amplitude sits in row 0.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        c_minus = self.lambda_minus * np.exp(1j * self.phi)
        p, m = evaluate(self.plus, x), evaluate(self.plus.partner(), x)
        if self.scenario == "which-way":
            return np.stack([self.lambda_plus * p, c_minus * m])
        if self.scenario == "no-detector":
            return np.stack([self.lambda_plus * p + c_minus * m, np.zeros_like(p)])
        return wpart.mode_field(self.protocol.postselected, x)

    def raw(self, x) -> np.ndarray:
        v = self.amplitudes(x)
        out = np.sum(np.abs(v) ** 2, axis=0)
        if self.scenario == "postselected":
            out = out / self.protocol.after_ramsey.norm2()
        return out

    @cached_property
    def normalization(self) -> float:
        """``int raw(x) dx`` over the sampling window."""
        return float(self.grid.integrate(self.raw(self.grid.points)))

    def pdf(self, x) -> np.ndarray:
        return self.raw(x) / self.normalization

    @cached_property
    def cdf_table(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.grid.points
        c = cumulative_trapezoid(self.raw(x), x, initial=0.0)
        return x, c / c[-1]


def density_at(sd: ScreenDensity, x):
    """Unnormalized screen density at ``x`` (units of ``1/b``)."""
    out = sd.raw(x)
    return float(out[0]) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class SampleRun:
    seed: int
    n: int
    samples: np.ndarray
    edges: np.ndarray
    counts: np.ndarray
    density: ScreenDensity
    shards: int = 1
    algorithm: str = RNG_ALGORITHM

    @property
    def statistics(self) -> dict[str, float]:
        x = self.samples
        return {
            "mean": float(np.mean(x)),
            "std": float(np.std(x)),
            "fraction_negative": float(np.mean(x < 0)),
        }


def _draw(sd: ScreenDensity, n: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed))
    xs, cdf = sd.cdf_table
    return np.interp(rng.random(n), cdf, xs)


def sample(
    sd: ScreenDensity,
    n: int,
    seed: int,
    *,
    shards: int = 1,
    workers: int = 1,
    bins: int = 200,
) -> SampleRun:
    """Draw ``n`` i.i.d. screen positions.

    ``workers > 1`` runs shards on a thread pool; the output does not
    depend on it.
    """
    if n < 1:
        raise ValueError(f"sample count must be positive, got {n}")
    if shards < 1:
        raise ValueError("need at least one shard")
    seed = int(seed) & (2**64 - 1)
    sizes = [n // shards + (1 if i < n % shards else 0) for i in range(shards)]
    jobs = [(size, seed ^ i) for i, size in enumerate(sizes) if size]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: _draw(sd, *job), jobs))
    else:
        parts = [_draw(sd, *job) for job in jobs]
    xs = np.concatenate(parts)
    edges = np.linspace(sd.grid.lo, sd.grid.hi, bins + 1)
    counts, _ = np.histogram(xs, edges)
    return SampleRun(seed, n, xs, edges, counts, sd, shards)


@dataclass(frozen=True)
class VisibilityEstimate:
    lo: float
    hi: float
    count: int
    value: float | None

    @property
    def empty(self) -> bool:
        return self.count == 0


def posterior_vectors(sd: ScreenDensity, x: np.ndarray) -> np.ndarray:
    """Unit-norm detector vectors ``(2, len(x))`` for outcomes at ``x``."""
    if sd.scenario == "no-detector":
        raise ValueError("no detector state to condition in the no-detector scenario")
    if sd.scenario == "which-way":
        branches = [
            (0, sd.lambda_plus, sd.plus),
            (1, sd.lambda_minus * np.exp(1j * sd.phi), sd.plus.partner()),
        ]
    else:
        post = sd.protocol.postselected
        branches = [(wpart.SINGLE_MODE_BASIS.index(br.label.cavity), br.amplitude, br.packet)
                    for br in post.branches]
    logs = np.array([log_evaluate(pk, x) for _, _, pk in branches])
    ref = np.max(logs.real, axis=0)
    v = np.zeros((2, x.size), dtype=complex)
    for (row, amp, _), lg in zip(branches, logs):
        v[row] += amp * np.exp(lg - ref)
    return v / np.linalg.norm(v, axis=0)


def empirical_conditioned_visibility(
    run: SampleRun, bin: tuple[float, float], phase_scan_points: int | None = None
) -> VisibilityEstimate:
    """Visibility of the detector state for atoms landing in ``[lo, hi)``.

    By default this averages the per-outcome ``2|rho_12|``. With
    ``phase_scan_points`` the bin-averaged state is instead probed with
    projectors on ``(|a> + e^{i theta}|b>)/sqrt(2)`` at evenly spaced
    ``theta``, and the fringe contrast ``(max - min) / (max + min)`` is
    reported.
    """
    lo, hi = bin
    if not (run.edges[0] <= lo < hi <= run.edges[-1]):
        raise ValueError(f"bin [{lo}, {hi}) outside the sampling window")
    x = run.samples[(run.samples >= lo) & (run.samples < hi)]
    if x.size == 0:
        log.warning("no samples in bin [%g, %g); no visibility estimate", lo, hi)
        return VisibilityEstimate(lo, hi, 0, None)
    v = posterior_vectors(run.density, x)
    rho12 = v[0] * np.conj(v[1])
    if not phase_scan_points:
        return VisibilityEstimate(lo, hi, int(x.size), float(np.mean(2 * np.abs(rho12))))
    theta = np.linspace(0.0, 2 * np.pi, phase_scan_points, endpoint=False)
    p = 0.5 + np.real(np.mean(rho12) * np.exp(-1j * theta))
    return VisibilityEstimate(lo, hi, int(x.size), float((p.max() - p.min()) / (p.max() + p.min())))


def count_local_maxima(values) -> int:
    """Strict interior local maxima of a sampled curve."""
    v = np.asarray(values)
    return int(np.sum((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])))


def click_frequencies(run: SampleRun, regions: wpart.DetectorRegions) -> dict[str, float]:
    """Fraction of draws landing in each detector region."""
    out = {}
    for name, (lo, hi) in regions.items():
        out[name] = float(np.mean((run.samples >= lo) & (run.samples < hi)))
    return out


def binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n)
