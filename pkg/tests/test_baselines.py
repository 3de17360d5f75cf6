import numpy as np
import pytest

from orientbench import baselines, quat
from orientbench.baselines import ParticleSet, UkfState
from orientbench.bingham import BinghamDistribution, orientation_from_mode, random_sample
from orientbench.errors import CholeskyFailure
from orientbench.harness import zero_mean_orientation
from oracles import random_bingham


def test_sigma_points_reproduce_moments():
    rng = np.random.default_rng(70)
    mean = quat.random_uniform(rng)
    A = rng.standard_normal((4, 4))
    cov = A @ A.T + 0.1 * np.eye(4)
    pts, w = baselines._sigma_points(mean, cov, baselines.UKF_KAPPA)
    assert pts.shape == (9, 4) and w.shape == (9,)
    np.testing.assert_allclose(w, 1.0 / 9.0, atol=1e-15)  # kappa = 0.5, n = 4
    np.testing.assert_allclose(pts.T @ w, mean, atol=1e-12)
    dev = pts - mean
    np.testing.assert_allclose((dev.T * w) @ dev, cov, atol=1e-10)


def test_sigma_points_need_positive_definite_cov():
    with pytest.raises(CholeskyFailure):
        baselines._sigma_points(quat.identity(), -np.eye(4), 0.5)


def test_ukf_tracks_tight_measurement():
    rng = np.random.default_rng(71)
    state = UkfState(mean=quat.identity(), cov=0.5 * np.eye(4))
    z_hat = quat.random_uniform(rng)
    out = baselines.ukf_step(
        state, lambda x: x, 1e-6 * np.eye(4), z_hat, 1e-9 * np.eye(4)
    )
    assert quat.angular_distance(out.mean, z_hat) < 1e-3
    assert np.all(np.linalg.eigvalsh(out.cov) > -1e-12)


def test_ukf_zero_noise_fixed_point():
    rng = np.random.default_rng(72)
    mean = quat.random_uniform(rng)
    state = UkfState(mean=mean, cov=1e-8 * np.eye(4))
    out = baselines.ukf_step(
        state, lambda x: x, 1e-12 * np.eye(4), mean, 1e-12 * np.eye(4)
    )
    assert quat.angular_distance(out.mean, mean) < 1e-5


def test_ukf_antipodal_measurement_sensitivity():
    """Flipping the measurement sign changes the flat-vector posterior.

    The two inputs encode the same rotation, so this documents the
    baseline's known weakness; with alignment enabled it disappears.
    """
    rng = np.random.default_rng(73)
    mean = quat.random_uniform(rng)
    state = UkfState(mean=mean, cov=0.3 * np.eye(4))
    q = 1e-4 * np.eye(4)
    r = 0.2 * np.eye(4)
    plus = baselines.ukf_step(state, lambda x: x, q, mean, r)
    minus = baselines.ukf_step(state, lambda x: x, q, -mean, r)
    assert quat.angular_distance(plus.mean, minus.mean) > 0.1

    aligned = baselines.ukf_step(
        state, lambda x: x, q, -mean, r, align_measurement=True
    )
    np.testing.assert_allclose(aligned.mean, plus.mean, atol=1e-12)


def test_folded_noise_covariance():
    noise = BinghamDistribution(
        zero_mean_orientation(), np.array([-300.0, -300.0, -300.0])
    )
    c1 = baselines.folded_noise_covariance(noise, np.random.default_rng(74))
    c2 = baselines.folded_noise_covariance(noise, np.random.default_rng(74))
    np.testing.assert_array_equal(c1, c2)
    np.testing.assert_allclose(c1, c1.T, atol=1e-18)
    assert np.all(np.linalg.eigvalsh(c1) > 0.0)
    # tight rotational noise: every direction stays small after folding
    assert np.max(np.diag(c1)) < 0.01


def test_pf_init_covers_sphere():
    ps = baselines.pf_init(np.random.default_rng(75), 40000)
    emp = (ps.particles.T * ps.weights) @ ps.particles
    assert np.max(np.abs(emp - np.eye(4) / 4.0)) < 0.01


def test_pf_step_concentrates_on_measurement():
    rng = np.random.default_rng(76)
    meas = BinghamDistribution(zero_mean_orientation(), np.array([-50.0, -50.0, -50.0]))
    process = BinghamDistribution(
        zero_mean_orientation(), np.array([-400.0, -400.0, -400.0])
    )
    z_hat = quat.random_uniform(rng)
    ps = baselines.pf_init(rng, 20000)
    ps, info = baselines.pf_step(ps, lambda x: x, process, z_hat, meas, rng)
    est = baselines.pf_estimate(ps)
    assert quat.angular_distance(est, z_hat) < 0.15
    assert not info["degenerate"]


def test_pf_degenerate_weights_reinitialize():
    rng = np.random.default_rng(77)
    near_identity = BinghamDistribution(
        zero_mean_orientation(), np.array([-500.0, -500.0, -500.0])
    )
    particles = random_sample(near_identity, rng, 200)
    ps = ParticleSet(particles, np.full(200, 1.0 / 200))
    # likelihood support is a quarter turn away from every particle
    far = quat.from_axis_angle([1.0, 0.0, 0.0], np.pi / 2)
    sharp = BinghamDistribution(
        zero_mean_orientation(), np.array([-1e7, -1e7, -1e7])
    )
    out, info = baselines.pf_step(ps, lambda x: x, near_identity, far, sharp, rng)
    assert info["degenerate"]
    np.testing.assert_allclose(out.weights, 1.0 / 200, atol=1e-15)


def test_pf_resampling_triggers_on_sharp_likelihood():
    rng = np.random.default_rng(78)
    meas = BinghamDistribution(zero_mean_orientation(), np.array([-80.0, -80.0, -80.0]))
    ps = baselines.pf_init(rng, 5000)
    ps, info = baselines.pf_step(
        ps, lambda x: x, meas, quat.random_uniform(rng), meas, rng
    )
    assert info["resampled"]
    np.testing.assert_allclose(ps.weights, 1.0 / 5000, atol=1e-15)


def test_pf_deterministic_given_seed():
    meas = BinghamDistribution(zero_mean_orientation(), np.array([-30.0, -30.0, -30.0]))
    z_hat = quat.from_axis_angle([0.0, 1.0, 0.0], 0.4)
    outs = []
    for _ in range(2):
        rng = np.random.default_rng(79)
        ps = baselines.pf_init(rng, 1000)
        ps, _ = baselines.pf_step(ps, lambda x: x, meas, z_hat, meas, rng)
        outs.append(ps)
    np.testing.assert_array_equal(outs[0].particles, outs[1].particles)
    np.testing.assert_array_equal(outs[0].weights, outs[1].weights)


def test_pf_estimate_matches_concentrated_cloud():
    rng = np.random.default_rng(80)
    b = random_bingham(rng, zlo=-200.0, zhi=-100.0)
    particles = random_sample(b, rng, 5000)
    ps = ParticleSet(particles, np.full(5000, 1.0 / 5000))
    est = baselines.pf_estimate(ps)
    assert quat.angular_distance(est, b.mode()) < 0.05
    assert abs(np.linalg.norm(est) - 1.0) < 1e-12


def test_pf_estimate_antipodal_mixture():
    # half the cloud on q, half on -q: the scatter estimate must not average
    # across the sign like a vector mean would
    rng = np.random.default_rng(81)
    q = quat.random_uniform(rng)
    mix = np.concatenate([np.tile(q, (500, 1)), np.tile(-q, (500, 1))])
    ps = ParticleSet(mix, np.full(1000, 1e-3))
    est = baselines.pf_estimate(ps)
    assert quat.angular_distance(est, q) < 1e-9
