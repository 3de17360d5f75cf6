"""Reference filters for the benchmark: quaternion UKF and particle filter.

The UKF treats the quaternion as a flat 4-vector and pushes estimates back
onto the sphere by renormalization; it deliberately has no antipodal
handling, which is the weakness the benchmark probes. The particle filter
works natively on S3 and doubles as an asymptotic oracle for the exact
update.
"""

from dataclasses import dataclass

import numpy as np

from . import quat
from .bingham import BinghamDistribution, canonical_eigh, random_sample
from .errors import CholeskyFailure

UKF_KAPPA = 0.5  # keeps the central weight positive for n = 4


@dataclass(frozen=True)
class UkfState:
    mean: np.ndarray  # unit 4-vector
    cov: np.ndarray  # 4x4 symmetric positive definite


def _sigma_points(mean, cov, kappa):
    n = len(mean)
    try:
        root = np.linalg.cholesky((n + kappa) * cov)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure(f"covariance not positive definite: {exc}") from exc
    pts = [mean]
    for i in range(n):
        pts.append(mean + root[:, i])
        pts.append(mean - root[:, i])
    w = np.full(2 * n + 1, 1.0 / (2.0 * (n + kappa)))
    w[0] = kappa / (n + kappa)
    return np.array(pts), w


def ukf_step(
    state: UkfState,
    g,
    process_cov: np.ndarray,
    z_hat: np.ndarray,
    meas_cov: np.ndarray,
    kappa: float = UKF_KAPPA,
    align_measurement: bool = False,
) -> UkfState:
    """One unscented predict + update in flat R^4.

    Sigma points are renormalized to the sphere after propagation and the
    posterior mean is renormalized at the end. With align_measurement the
    incoming z_hat is flipped into the hemisphere of the predicted mean
    first; off by default to match the plain flat-vector baseline.
    """
    sig, w = _sigma_points(state.mean, state.cov, kappa)
    prop = np.array([quat.normalize(np.asarray(g(s / np.linalg.norm(s)))) for s in sig])
    mean_p = prop.T @ w
    dev = prop - mean_p
    cov_p = (dev.T * w) @ dev + process_cov
    cov_p = 0.5 * (cov_p + cov_p.T)

    # identity measurement function: reuse the propagated sigma set
    if align_measurement and float(z_hat @ mean_p) < 0.0:
        z_hat = -z_hat
    s_yy = cov_p + meas_cov
    p_xy = cov_p
    gain = np.linalg.solve(s_yy.T, p_xy.T).T
    mean_u = mean_p + gain @ (z_hat - mean_p)
    cov_u = cov_p - gain @ s_yy @ gain.T
    cov_u = 0.5 * (cov_u + cov_u.T)
    return UkfState(mean=quat.normalize(mean_u), cov=cov_u)


def folded_noise_covariance(noise: BinghamDistribution, rng, n: int = 20000):
    """Additive-noise covariance surrogate for the UKF.

    Draws from the Bingham noise, folds each draw into the hemisphere of the
    mode (the antipodal ambiguity has to be resolved somehow to speak of an
    additive perturbation), and returns the sample covariance about the
    folded mean. Deterministic given the rng.
    """
    s = random_sample(noise, rng, n)
    m = noise.mode()
    s = s * np.sign(s @ m + 1e-300)[:, None]
    mu = s.mean(axis=0)
    d = s - mu
    c = d.T @ d / n
    return 0.5 * (c + c.T) + 1e-12 * np.eye(4)


@dataclass(frozen=True)
class ParticleSet:
    particles: np.ndarray  # (n, 4) unit quaternions
    weights: np.ndarray  # (n,) nonnegative, sums to 1


def pf_init(rng, n: int) -> ParticleSet:
    return ParticleSet(quat.random_uniform(rng, n), np.full(n, 1.0 / n))


def _systematic_resample(ps: ParticleSet, rng) -> ParticleSet:
    n = len(ps.weights)
    positions = (np.arange(n) + rng.random()) / n
    idx = np.searchsorted(np.cumsum(ps.weights), positions)
    idx = np.minimum(idx, n - 1)
    return ParticleSet(ps.particles[idx].copy(), np.full(n, 1.0 / n))


def pf_step(
    ps: ParticleSet,
    g,
    process_noise: BinghamDistribution,
    z_hat,
    meas_noise: BinghamDistribution,
    rng,
):
    """Bootstrap step: propagate, weight by likelihood, resample if needed.

    g must accept a batch of quaternions (shape (n, 4)). Returns the new
    particle set and an info dict with resampled/degenerate flags.
    """
    n = len(ps.weights)
    w_draw = random_sample(process_noise, rng, n)
    prop = quat.compose(np.asarray(g(ps.particles), dtype=float), w_draw)

    lik = meas_noise.pdf(quat.compose(quat.conjugate(prop), z_hat))
    weights = ps.weights * lik
    info = {"resampled": False, "degenerate": False}
    total = weights.sum()
    if total <= 0.0 or not np.isfinite(total):
        # all weights underflowed; restart from an uninformative weighting
        weights = np.full(n, 1.0 / n)
        info["degenerate"] = True
    else:
        weights = weights / total
    out = ParticleSet(prop, weights)
    ess = 1.0 / np.sum(out.weights**2)
    if ess < 0.5 * n:
        out = _systematic_resample(out, rng)
        info["resampled"] = True
    return out, info


def pf_estimate(ps: ParticleSet) -> np.ndarray:
    """Principal eigenvector of the weighted scatter (antipodally safe mean)."""
    scatter = (ps.particles.T * ps.weights) @ ps.particles
    _, V = canonical_eigh(scatter)
    return V[:, 3]
