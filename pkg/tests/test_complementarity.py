import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whichway import complementarity as cm
from whichway import composite as cp

R = math.sqrt(0.5)


def rho_of(lp, lm, phi=0.0, d=4.0):
    return cp.reduce_to_detector(cp.make_tagged_state(lp, lm, phi, d))


class TestMeasures:
    def test_predictability(self):
        assert cm.predictability(rho_of(1.0, 0.0)) == 1.0
        assert cm.predictability(rho_of(R, R)) == pytest.approx(0.0, abs=1e-16)
        assert cm.predictability(rho_of(math.sqrt(0.7), math.sqrt(0.3))) == pytest.approx(0.4, abs=1e-15)

    def test_visibility(self):
        assert cm.visibility(rho_of(1.0, 0.0)) == 0.0
        assert cm.visibility(rho_of(R, R, d=4.0)) == pytest.approx(math.exp(-4), rel=1e-14)
        assert cm.visibility(rho_of(R, R, d=0.0)) == pytest.approx(1.0, rel=1e-15)

    def test_linear_entropy(self):
        assert cm.linear_entropy(1.0, 0.0, 4.0) == 0.0
        assert cm.linear_entropy(R, R, 4.0) == pytest.approx((1 - math.exp(-8)) / 2, rel=1e-15)
        assert cm.linear_entropy(R, R, 4.0) == pytest.approx(0.499832, abs=1e-6)
        assert cm.linear_entropy(R, R, 0.0) == 0.0

    def test_entropy_from_density_matches(self):
        for lp, lm, d in [(R, R, 4.0), (math.sqrt(0.7), math.sqrt(0.3), 1.3), (1.0, 0.0, 2.0)]:
            assert cm.linear_entropy_from_density(rho_of(lp, lm, 0.3, d)) == pytest.approx(
                cm.linear_entropy(lp, lm, d), abs=1e-14
            )

    def test_distinguishability(self):
        assert cm.distinguishability(1.0, 0.0) == 1.0
        S = cm.linear_entropy(R, R, 4.0)
        D = cm.distinguishability(0.0, S)
        assert D == pytest.approx(math.sqrt(1 - math.exp(-8)), rel=1e-14)
        assert D == pytest.approx(0.999832, abs=1e-6)
        assert cm.distinguishability(0.0, cm.linear_entropy(R, R, 0.0)) == 0.0

    def test_distinguishability_rejects_inconsistent(self):
        with pytest.raises(ValueError, match="inconsistent"):
            cm.distinguishability(0.9, 0.2)


class TestFullSet:
    def test_unbalanced(self):
        cs = cm.full_set(math.sqrt(0.7), math.sqrt(0.3), 0.0, 4.0)
        assert cs.P == pytest.approx(0.4, abs=1e-15)
        assert cs.V == pytest.approx(2 * math.sqrt(0.21) * math.exp(-4), rel=1e-14)
        assert cs.V == pytest.approx(0.016787, abs=1e-6)
        assert cs.S == pytest.approx(0.419859, abs=1e-6)
        assert cs.residual_identity < 1e-12

    def test_balanced(self):
        cs = cm.full_set(R, R, 0.0, 4.0)
        assert cs.P == pytest.approx(0.0, abs=1e-16)
        assert cs.V == pytest.approx(math.exp(-4), rel=1e-14)
        assert 2 * cs.S == pytest.approx(1 - math.exp(-8), rel=1e-15)
        assert cs.residual_identity < 1e-15

    def test_pure_path(self):
        cs = cm.full_set(1.0, 0.0, 0.0, 4.0)
        assert (cs.P, cs.V, cs.S, cs.D) == (1.0, 0.0, 0.0, 1.0)
        assert cs.residual_identity == 0.0

    @settings(max_examples=300, deadline=None)
    @given(st.floats(0, math.pi / 2), st.floats(0, 2 * math.pi), st.floats(0, 8))
    def test_identities(self, th, phi, d):
        cs = cm.full_set(math.cos(th), math.sin(th), phi, d)
        assert cs.residual_identity < 1e-12
        assert abs(cs.D**2 + cs.V**2 - 1) < 1e-12
        assert 0 <= cs.P <= 1 and 0 <= cs.V <= 1 and 0 <= cs.S <= 0.5 and 0 <= cs.D <= 1

    def test_monotone_in_separation(self):
        d = np.linspace(0, 8, 200)
        sets = [cm.full_set(R, R, 0.0, x) for x in d]
        V = np.array([c.V for c in sets])
        S = np.array([c.S for c in sets])
        assert np.all(np.diff(V) < 0)
        assert np.all(np.diff(S) > 0)

    def test_extremes(self):
        for lp in (1.0, 0.0):
            cs = cm.full_set(lp, math.sqrt(1 - lp * lp), 0.0, 3.0)
            assert cs.S == 0 and cs.D == pytest.approx(cs.P)
        assert cm.full_set(R, R, 0.0, 40.0).S == pytest.approx(0.5, abs=1e-15)
