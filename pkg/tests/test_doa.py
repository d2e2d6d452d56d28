import itertools

import numpy as np
import pytest

from sst_track.doa import (
    DEFAULT_TRAJECTORIES,
    AngleDomainWarning,
    SteeringConfig,
    Trajectory,
    esprit_angles,
    generate_doa_sample,
    match_tracks,
    steering_matrix,
)
from sst_track.numerics import qr_orthonormalize
from sst_track.streams import NoiseSpec
from sst_track.tracker import TrackerParams, init_tracker, tracker_step


class TestSteering:
    def test_broadside(self):
        np.testing.assert_array_equal(steering_matrix([0.0], 5), np.ones((5, 1)))

    def test_thirty_degrees(self):
        col = steering_matrix([30.0], 3)[:, 0]
        np.testing.assert_allclose(col, [1, 1j, -1], atol=1e-15)

    def test_unit_modulus_and_first_row(self):
        A = steering_matrix([-71.0, -3.5, 12.0, 89.0], 16)
        np.testing.assert_allclose(np.abs(A), 1.0, atol=1e-15)
        np.testing.assert_array_equal(A[0], np.ones(4))

    def test_domain(self):
        with pytest.raises(ValueError):
            steering_matrix([90.0], 4)


class TestTrajectories:
    def test_defaults(self):
        lin, saw, sin = DEFAULT_TRAJECTORIES
        assert lin(0) == -40.0 and lin(100) == -35.0
        assert saw(0) == -20.0 and saw(200) == 0.0 and saw(400) == -20.0
        assert sin(0) == 30.0 and abs(sin(125) - 40.0) < 1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            Trajectory("zigzag", 0, 1)
        with pytest.raises(ValueError):
            Trajectory("sawtooth", 0, 1)
        cfg = SteeringConfig(trajectories=(Trajectory("linear", 80.0, 1.0),))
        with pytest.raises(ValueError):
            cfg.validate(T=20)
        with pytest.raises(ValueError):
            SteeringConfig(n=3, trajectories=DEFAULT_TRAJECTORIES).validate(T=10)


class TestSamples:
    def test_noiseless_single_source(self):
        cfg = SteeringConfig(n=8, trajectories=(Trajectory("linear", 17.0, 0.0),), noiseless=True)
        a = steering_matrix([17.0], 8)[:, 0]
        rng = np.random.default_rng(0)
        for t in range(10):
            x, _ = generate_doa_sample(cfg, t, rng)
            coef = np.vdot(a, x) / np.vdot(a, a)
            assert np.linalg.norm(x - coef * a) < 1e-10

    def test_signal_power(self):
        # with unit steering modulus, E|x_0|^2 = E||s||^2 = K
        cfg = SteeringConfig(n=2, noiseless=True)
        rng = np.random.default_rng(1)
        p = np.mean([abs(generate_doa_sample(cfg, 0, rng)[0][0]) ** 2 for _ in range(100_000)])
        assert abs(p / 3.0 - 1.0) < 0.02

    def test_deterministic(self):
        cfg = SteeringConfig()
        a = [generate_doa_sample(cfg, t, np.random.default_rng(5))[0] for t in range(3)]
        b = [generate_doa_sample(cfg, t, np.random.default_rng(5))[0] for t in range(3)]
        for u, v in zip(a, b):
            assert np.array_equal(u, v)

    def test_noise_on_both_components(self):
        cfg = SteeringConfig(n=4000, noise=NoiseSpec("gaussian_only", sigma_n=0.5))
        x, _ = generate_doa_sample(cfg, 0, np.random.default_rng(2))
        clean = SteeringConfig(n=4000, noiseless=True)
        y, _ = generate_doa_sample(clean, 0, np.random.default_rng(2))
        nu = x - y
        assert abs(nu.real.std() / 0.5 - 1) < 0.05
        assert abs(nu.imag.std() / 0.5 - 1) < 0.05


class TestEsprit:
    def test_single_source(self):
        U, _ = qr_orthonormalize(steering_matrix([10.0], 20))
        assert abs(esprit_angles(U)[0] - 10.0) < 1e-6

    def test_two_sources(self):
        U, _ = qr_orthonormalize(steering_matrix([-20.0, 35.0], 20))
        np.testing.assert_allclose(esprit_angles(U), [-20.0, 35.0], atol=1e-6)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(3)
        U, _ = qr_orthonormalize(steering_matrix([-50.0, 5.0, 41.0], 12))
        Q, _ = qr_orthonormalize(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        np.testing.assert_allclose(esprit_angles(U @ Q), esprit_angles(U), atol=1e-8)

    def test_roundtrip_many(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            angles = np.sort(rng.uniform(-70, 70, size=3))
            if np.diff(angles).min() < 2:
                continue
            U, _ = qr_orthonormalize(steering_matrix(angles, 15))
            np.testing.assert_allclose(esprit_angles(U), angles, atol=1e-6)

    def test_needs_extra_sensor(self):
        with pytest.raises(ValueError):
            esprit_angles(np.eye(2, dtype=complex))

    def test_clipping_flagged(self):
        # a rotation with |eigenvalue phase| > pi cannot occur, but a basis from
        # real data with a negative real eigenvalue sits right at pi
        U, _ = qr_orthonormalize(np.array([[1.0], [-1.0], [1.0], [-1.0]]))
        theta, clipped = esprit_angles(U, return_clipped=True)
        assert abs(abs(theta[0]) - 90.0) < 1e-6
        assert not clipped

    def test_clip_warning(self, monkeypatch):
        import sst_track.doa as doa

        monkeypatch.setattr(doa, "small_eigenvalues", lambda P: np.array([np.exp(1j * 3.2)]))
        monkeypatch.setattr(np, "angle", lambda z: np.array([3.3]))
        with pytest.warns(AngleDomainWarning):
            theta, clipped = esprit_angles(np.ones((3, 1), dtype=complex), return_clipped=True)
        assert clipped and theta[0] == 90.0


class TestMatchTracks:
    def test_nearest(self):
        np.testing.assert_array_equal(match_tracks([10.0, 50.0], [49.0, 11.0]), [11.0, 49.0])

    def test_identity(self):
        np.testing.assert_array_equal(match_tracks([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])

    def test_crossing(self):
        prev = np.array([29.0, 31.0])
        cur = np.array([30.5, 29.5])
        costs = {p: np.abs(prev - cur[list(p)]).sum() for p in itertools.permutations(range(2))}
        best = min(costs, key=costs.get)
        np.testing.assert_array_equal(cur[list(best)], [29.5, 30.5])
        np.testing.assert_array_equal(match_tracks(prev, cur), [29.5, 30.5])

    def test_greedy_for_many_tracks(self):
        prev = np.arange(10.0) * 10
        cur = prev[::-1] + 0.5
        np.testing.assert_array_equal(match_tracks(prev, cur), prev + 0.5)

    def test_count_mismatch(self):
        with pytest.raises(ValueError):
            match_tracks([1.0], [1.0, 2.0])


def test_static_noiseless_tracking():
    angles = [-25.0, 10.0, 42.0]
    cfg = SteeringConfig(
        n=20, trajectories=tuple(Trajectory("linear", a, 0.0) for a in angles), noiseless=True
    )
    params = TrackerParams(r=3, lam=0.2, alpha=0.9, k=20, robust=True)
    st = init_tracker(20, params, seed=0, dtype=complex)
    rng = np.random.default_rng(1)
    for t in range(100):
        tracker_step(st, generate_doa_sample(cfg, t, rng)[0], params)
    np.testing.assert_allclose(esprit_angles(st.U), angles, atol=0.1)
