"""Randomized invariant suite behind ``whichway verify``.

Each check draws random parameters, compares a closed form against its
identity or numerical oracle and keeps the worst residual together with the
parameters that produced it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from whichway import complementarity as cm
from whichway import composite, eraser
from whichway.wavepacket import PacketParams, overlap_analytic, overlap_quadrature

# draw counts are the minimum the suite guarantees; callers may raise them
DEFAULT_DRAWS = {
    "identity": 1000,
    "reduction": 200,
    "conditioned": 500,
    "locus": 50,
}
FAULTS = ("identity-sign", "eraser-sign")


@dataclass
class CheckResult:
    name: str
    tolerance: float
    draws: int = 0
    max_residual: float = 0.0
    worst: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def record(self, residual: float, **params):
        self.draws += 1
        if not residual <= self.max_residual:
            self.max_residual = float(residual)
            self.worst = {k: float(v) for k, v in params.items()}


def _lambdas(rng):
    theta = rng.uniform(0.0, math.pi / 2)
    return math.cos(theta), math.sin(theta)


def run_suite(seed: int = 0, fault: str | None = None, scale: int = 1) -> list[CheckResult]:
    """Run every check; ``fault`` deliberately breaks one to test the harness."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULTS}")
    rng = np.random.default_rng(seed)
    sign = -1.0 if fault == "identity-sign" else 1.0
    results = []

    ident = CheckResult("P^2+V^2+2S=1", 1e-12)
    dist = CheckResult("D^2+V^2=1", 1e-12)
    purity = CheckResult("S closed form = 1-Tr(rho^2)", 1e-12)
    for _ in range(DEFAULT_DRAWS["identity"] * scale):
        lp, lm = _lambdas(rng)
        phi, d = rng.uniform(0, 2 * math.pi), rng.uniform(0, 8)
        cs = cm.full_set(lp, lm, phi, d)
        p = dict(lambda_plus=lp, lambda_minus=lm, phi=phi, d=d)
        ident.record(abs(cs.P**2 + sign * cs.V**2 + 2 * cs.S - 1), **p)
        dist.record(abs(cs.D**2 + cs.V**2 - 1), **p)
        rho = composite.reduce_to_detector(composite.make_tagged_state(lp, lm, phi, d))
        purity.record(abs(cm.linear_entropy_from_density(rho) - cs.S), **p)
    results += [ident, dist, purity]

    cond = CheckResult("V_x^2+K_x^2=1", 1e-12)
    bal = CheckResult("balanced (V_x,K_x)=(sech,|tanh|)", 1e-12)
    for _ in range(DEFAULT_DRAWS["identity"] * scale):
        lp, lm = _lambdas(rng)
        d, k, s, x = rng.uniform(0, 8), rng.uniform(-2, 2), rng.uniform(0, 3), rng.uniform(-6, 6)
        V, K = eraser.conditioned_pair(lp, lm, d, k, s, x)
        if fault == "eraser-sign":
            K = -K + 2 * V
        cond.record(abs(V * V + K * K - 1), lambda_plus=lp, d=d, k=k, s=s, x=x)
        Vb, Kb = eraser.conditioned_pair(eraser.BALANCED, eraser.BALANCED, d, k, s, x)
        dl = float(eraser.delta(d, k, s, x))
        bal.record(max(abs(Vb - 1 / math.cosh(dl)), abs(Kb - abs(math.tanh(dl)))), d=d, k=k, s=s, x=x)
    results += [cond, bal]

    red = CheckResult("reduced density analytic vs quadrature", 1e-8)
    for _ in range(DEFAULT_DRAWS["reduction"] * scale):
        lp, lm = _lambdas(rng)
        phi, d = rng.uniform(0, 2 * math.pi), rng.uniform(0, 8)
        s, k = rng.uniform(0, 3), rng.uniform(-2, 2)
        st = composite.make_tagged_state(lp, lm, phi, d, k, s)
        diff = composite.reduce_to_detector(st).matrix - composite.reduce_to_detector_quadrature(st).matrix
        red.record(float(np.max(np.abs(diff))), lambda_plus=lp, phi=phi, d=d, k=k, s=s)
    results.append(red)

    ratio = CheckResult("conditioned pair projection vs closed ratio", 1e-9)
    scalar = CheckResult("conditioned pair vs scalar posterior", 1e-9)
    for _ in range(DEFAULT_DRAWS["conditioned"] * scale):
        lp, lm = _lambdas(rng)
        phi = rng.uniform(0, 2 * math.pi)
        d, k, s, x = rng.uniform(0, 8), rng.uniform(-2, 2), rng.uniform(0, 3), rng.uniform(-6, 6)
        V, K = eraser.conditioned_pair(lp, lm, d, k, s, x, phi)
        Vp, Kp = eraser.conditioned_pair_ratio(lp, lm, d, k, s, x)
        p = dict(lambda_plus=lp, phi=phi, d=d, k=k, s=s, x=x)
        ratio.record(max(abs(V - Vp), abs(K - Kp)), **p)
        post = composite.posterior_density(composite.make_tagged_state(lp, lm, phi, d, k, s), x)
        p0, p1 = post.populations
        scalar.record(max(abs(V - 2 * abs(post.coherence)), abs(K - abs(p0 - p1))), **p)
    results += [ratio, scalar]

    ov = CheckResult("|quadrature overlap| = exp(-d^2/4)", 1e-9)
    for s in (0.0, 0.5, 1.0, 2.0, 5.0):
        for _ in range(4 * scale):
            d, k = rng.uniform(0, 8), rng.uniform(-2, 2)
            pk = PacketParams(d, k, s, +1)
            ov.record(abs(abs(overlap_quadrature(pk, pk.partner())) - overlap_analytic(d)), d=d, k=k, s=s)
    results.append(ov)

    locus = CheckResult("eraser locus = argmax V_x (grid steps)", 1.0)
    grid = np.linspace(-10, 10, 2001)
    step = grid[1] - grid[0]
    for _ in range(DEFAULT_DRAWS["locus"] * scale):
        d, k, s = rng.uniform(0.5, 8), rng.uniform(-2, 2), rng.uniform(0, 3)
        found = eraser.eraser_locus_numeric(d, k, s, grid)
        locus.record(abs(found - float(eraser.eraser_locus(d, k, s))) / step, d=d, k=k, s=s)
    results.append(locus)
    return results


def format_report(results: list[CheckResult]) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        line = f"{status}  {r.name:<48} draws={r.draws:<5d} max_residual={r.max_residual:.3e} tol={r.tolerance:g}"
        if not r.passed:
            line += "  worst=" + ", ".join(f"{k}={v:.17g}" for k, v in r.worst.items())
        lines.append(line)
    return "\n".join(lines)
