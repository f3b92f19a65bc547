"""Predictability, visibility, linear entropy and distinguishability.

For the two-cavity detector after the slits these obey

    P^2 + V^2 + 2 S = 1,        D = sqrt(P^2 + 2 S) = sqrt(1 - V^2),

where the linear entropy ``S = 1 - Tr rho^2`` measures how strongly the cavity
modes are entangled with the transverse packet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from whichway.composite import DetectorDensity, make_tagged_state, reduce_to_detector

__all__ = [
    "ComplementaritySet",
    "predictability",
    "visibility",
    "linear_entropy",
    "linear_entropy_from_density",
    "distinguishability",
    "full_set",
]

CONSISTENCY_TOL = 1e-12


@dataclass(frozen=True)
class ComplementaritySet:
    P: float
    V: float
    S: float
    D: float

    @property
    def residual_identity(self) -> float:
        """``|P^2 + V^2 + 2S - 1|``."""
        return abs(self.P**2 + self.V**2 + 2 * self.S - 1.0)


def predictability(rho: DetectorDensity) -> float:
    """``|rho_11 - rho_22|``."""
    p0, p1 = rho.populations
    return abs(p0 - p1)


def visibility(rho: DetectorDensity) -> float:
    """``2 |rho_12|``."""
    return 2.0 * abs(rho.coherence)


def linear_entropy(lambda_plus: float, lambda_minus: float, d: float) -> float:
    """``2 lambda_+^2 lambda_-^2 (1 - exp(-d^2 / 2b^2))``, ``d`` in units of ``b``."""
    return 2.0 * lambda_plus**2 * lambda_minus**2 * -math.expm1(-d * d / 2.0)


def linear_entropy_from_density(rho: DetectorDensity) -> float:
    """``1 - Tr rho^2``; equals :func:`linear_entropy` for the reduced detector state."""
    return 1.0 - rho.purity


def distinguishability(P: float, S: float) -> float:
    """``sqrt(P^2 + 2S)``.

    Raises ``ValueError`` if ``P^2 + 2S`` exceeds 1, which no physical pair
    of predictability and entropy can do.
    """
    val = P * P + 2.0 * S
    if val > 1.0 + CONSISTENCY_TOL:
        raise ValueError(f"P^2 + 2S = {val!r} > 1: inconsistent inputs")
    return math.sqrt(max(val, 0.0))


def full_set(
    lambda_plus: float, lambda_minus: float, phi: float = 0.0, d: float = 4.0
) -> ComplementaritySet:
    """All four measures for the detector left by the two-slit passage.

    ``P`` and ``V`` are read off the reduced density, ``S`` comes from the
    closed form in ``lambda`` and ``d``.
    """
    rho = reduce_to_detector(make_tagged_state(lambda_plus, lambda_minus, phi, d))
    P = predictability(rho)
    V = visibility(rho)
    S = linear_entropy(lambda_plus, lambda_minus, d)
    return ComplementaritySet(P, V, S, distinguishability(P, S))


def identity_residuals(cs: ComplementaritySet) -> tuple[float, float]:
    """Residuals of ``P^2+V^2+2S = 1`` and ``D^2+V^2 = 1``."""
    return cs.residual_identity, float(np.abs(cs.D**2 + cs.V**2 - 1.0))
