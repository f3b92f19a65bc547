import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whichway import composite as cp
from whichway import wavepacket as wp

R = math.sqrt(0.5)

angles = st.floats(0, math.pi / 2)
states = st.builds(
    lambda th, phi, d, k, s: cp.make_tagged_state(math.cos(th), math.sin(th), phi, d, k, s),
    angles,
    st.floats(0, 2 * math.pi),
    st.floats(0, 8),
    st.floats(-2, 2),
    st.floats(0, 3),
)


def assert_valid_density(rho):
    m = rho.matrix
    assert np.max(np.abs(m - m.conj().T)) <= 1e-12
    assert abs(np.trace(m) - 1) <= 1e-12
    assert np.min(np.linalg.eigvalsh(m)) >= -1e-12


class TestState:
    def test_single_branch(self):
        st_ = cp.make_tagged_state(1.0, 0.0)
        assert len(st_.branches) == 1
        assert st_.norm2() == 1.0

    def test_balanced_two_branches(self):
        st_ = cp.make_tagged_state(R, R, 0.0, 4.0)
        assert len(st_.branches) == 2
        assert st_.norm2() == pytest.approx(1.0, abs=1e-15)

    def test_unnormalized_lambda_rejected(self):
        with pytest.raises(ValueError):
            cp.make_tagged_state(0.8, 0.8)

    def test_labels_checked(self):
        br = cp.Branch(cp.BranchLabel("2+", "g"), 1.0, wp.PacketParams(1.0))
        with pytest.raises(ValueError, match="not in basis"):
            cp.BranchState((br,))
        br = cp.Branch(cp.BranchLabel("1+,0-", "x"), 1.0, wp.PacketParams(1.0))
        with pytest.raises(ValueError, match="atom label"):
            cp.BranchState((br,))

    @settings(max_examples=30, deadline=None)
    @given(states)
    def test_norm_by_quadrature(self, state):
        grid = wp.default_grid(*state.packets)
        fields = cp._label_fields(state, grid.points)
        total = sum(grid.integrate(np.abs(f) ** 2) for f in fields.values())
        assert abs(total - 1) < 1e-9


class TestReduction:
    def test_pure_path(self):
        rho = cp.reduce_to_detector(cp.make_tagged_state(1.0, 0.0, d=4.0))
        assert np.array_equal(rho.matrix, np.diag([1.0, 0.0]).astype(complex))

    def test_balanced_coherence(self):
        rho = cp.reduce_to_detector(cp.make_tagged_state(R, R, 0.0, 4.0))
        assert rho.matrix[1, 0] == pytest.approx(math.exp(-4) / 2, rel=1e-14)
        assert rho.matrix[1, 0] == pytest.approx(0.009157819444367, rel=1e-12)

    def test_phase_on_lower_off_diagonal(self):
        phi = 0.9
        rho = cp.reduce_to_detector(cp.make_tagged_state(R, R, phi, 2.0))
        assert rho.matrix[1, 0] == pytest.approx(0.5 * np.exp(1j * phi - 1.0), rel=1e-14)

    @pytest.mark.parametrize(
        "args",
        [(1.0, 0.0, 0.0, 4.0, 0.0, 0.0), (R, R, 0.0, 4.0, 0.0, 1.0), (math.sqrt(0.7), math.sqrt(0.3), 1.1, 2.0, 1.5, 2.5)],
    )
    def test_matches_quadrature(self, args):
        st_ = cp.make_tagged_state(*args)
        diff = cp.reduce_to_detector(st_).matrix - cp.reduce_to_detector_quadrature(st_).matrix
        assert np.max(np.abs(diff)) < 1e-8

    @settings(max_examples=60, deadline=None)
    @given(states)
    def test_quadrature_oracle_random(self, state):
        a = cp.reduce_to_detector(state)
        b = cp.reduce_to_detector_quadrature(state)
        assert np.max(np.abs(a.matrix - b.matrix)) < 1e-8
        assert_valid_density(a)

    def test_density_validation(self):
        with pytest.raises(ValueError, match="Hermitian"):
            cp.DetectorDensity([[0.5, 0.1], [0.2, 0.5]])
        with pytest.raises(ValueError, match="trace"):
            cp.DetectorDensity([[0.5, 0], [0, 0.6]])
        with pytest.raises(ValueError, match="positive"):
            cp.DetectorDensity([[0.5, 0.9], [0.9, 0.5]])
        with pytest.raises(ValueError, match="2x2"):
            cp.DetectorDensity(np.eye(3) / 3)


class TestProjection:
    def test_pure_path_posterior(self):
        st_ = cp.make_tagged_state(1.0, 0.0, d=4.0, s=1.0)
        for x in (-3.0, 0.0, 2.5):
            post = cp.posterior_density(st_, x)
            assert post.populations == (1.0, 0.0)

    def test_symmetric_point(self):
        st_ = cp.make_tagged_state(R, R, 0.0, 4.0, 0.0, 0.0)
        disc, n2 = cp.project_position(st_, 0.0)
        a, b = disc.amplitudes.values()
        assert abs(a) == pytest.approx(abs(b), rel=1e-15)
        assert 2 * abs(disc.cavity_density().coherence) == pytest.approx(1.0, rel=1e-14)

    def test_amplitudes_are_packet_values(self):
        phi = 0.4
        st_ = cp.make_tagged_state(R, R, phi, 4.0, 0.5, 1.0)
        disc, n2 = cp.project_position(st_, 0.7)
        plus = wp.PacketParams(4.0, 0.5, 1.0, +1)
        got = disc.cavity_vector("g")
        assert got[0] == pytest.approx(R * wp.evaluate(plus, 0.7), abs=1e-16)
        assert got[1] == pytest.approx(R * np.exp(1j * phi) * wp.evaluate(plus.partner(), 0.7), abs=1e-16)
        assert n2 == pytest.approx(np.sum(np.abs(got) ** 2), rel=1e-15)

    def test_off_diagonal_at_x1(self):
        # brute force: evaluate both packets, normalize the 2-vector by hand
        st_ = cp.make_tagged_state(R, R, 0.0, 4.0, 0.0, 1.0)
        plus = wp.PacketParams(4.0, 0.0, 1.0)
        v = np.array([R * wp.evaluate(plus, 1.0), R * wp.evaluate(plus.partner(), 1.0)])
        v /= np.linalg.norm(v)
        brute = abs(v[0] * np.conj(v[1]))
        assert brute == pytest.approx(0.1329011144170398, rel=1e-12)
        assert brute == pytest.approx(1 / math.cosh(2) / 2, rel=1e-12)
        disc, _ = cp.project_position(st_, 1.0)
        assert abs(disc.cavity_density().coherence) == pytest.approx(brute, rel=1e-12)

    def test_total_detection_probability(self):
        st_ = cp.make_tagged_state(math.sqrt(0.3), math.sqrt(0.7), 2.0, 3.0, -1.0, 2.0)
        grid = wp.default_grid(*st_.packets)
        dens = np.array([cp.project_position(st_, x)[1] for x in grid.points])
        assert abs(grid.integrate(dens) - 1) < 1e-8

    def test_posterior_stable_in_far_tail(self):
        st_ = cp.make_tagged_state(R, R, 0.0, 4.0, 0.0, 0.0)
        _, n2 = cp.project_position(st_, 60.0)
        assert n2 == 0.0
        post = cp.posterior_density(st_, 60.0)
        assert post.populations[0] == pytest.approx(1.0)

    @settings(max_examples=40, deadline=None)
    @given(states, st.floats(-8, 8))
    def test_posteriors_are_valid(self, state, x):
        assert_valid_density(cp.posterior_density(state, x))
