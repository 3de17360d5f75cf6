"""Recursive orientation filter: sample-based prediction, exact update.

The state estimate is a Bingham distribution over the unit quaternion. The
prediction step pushes the deterministic sample set through the system
function and moment-matches; the measurement update is the exact pointwise
product of prior and likelihood, which stays in the Bingham family.
"""

from dataclasses import dataclass

import numpy as np

from . import quat
from .bingham import (
    BinghamDistribution,
    compose_covariances,
    fit_from_covariance,
    multiply,
)
from .detsample import deterministic_samples
from .errors import AntipodalViolation

_CONJ = np.diag([1.0, -1.0, -1.0, -1.0])


@dataclass(frozen=True)
class FilterState:
    estimate: BinghamDistribution
    t: int = 0


def _propagate_checked(g, samples):
    """Apply g to each sample; verify g(-x) = -g(x) as rotations.

    The propagated density is only well defined when g maps antipodal pairs
    to antipodal pairs; a violation poisons the scatter silently, so it is
    checked here on every call (tolerance 1e-9).
    """
    ys = []
    for s in samples:
        y = quat.normalize(np.asarray(g(s), dtype=float))
        y_neg = quat.normalize(np.asarray(g(-s), dtype=float))
        if not quat.same_rotation(y, y_neg, tol=1e-9):
            raise AntipodalViolation(
                f"system function failed g(-x) = -g(x) at sample {s}"
            )
        ys.append(y)
    return np.array(ys)


def predict(state: FilterState, g, noise: BinghamDistribution) -> FilterState:
    """Time update for dynamics x_next = g(x) (+) w, w ~ noise.

    Samples the estimate deterministically, propagates through g, composes
    the propagated scatter with the noise covariance, and fits the result.
    """
    ss = deterministic_samples(state.estimate)
    ys = _propagate_checked(g, ss.samples)
    scatter = (ys.T * ss.weights) @ ys
    composed = compose_covariances(scatter, noise.covariance())
    return FilterState(fit_from_covariance(composed), state.t + 1)


def predict_joint(state: FilterState, g2, noise: BinghamDistribution) -> FilterState:
    """Time update for general dynamics x_next = g2(x, w).

    Deterministically samples state and noise (7 x 7 weighted pairs) and
    fits the propagated joint scatter; use when the noise does not enter by
    right-composition.
    """
    ss = deterministic_samples(state.estimate)
    ns = deterministic_samples(noise)
    ys = []
    wts = []
    for s, ws in zip(ss.samples, ss.weights):
        for v, wv in zip(ns.samples, ns.weights):
            y = quat.normalize(np.asarray(g2(s, v), dtype=float))
            y_neg = quat.normalize(np.asarray(g2(-s, v), dtype=float))
            if not quat.same_rotation(y, y_neg, tol=1e-9):
                raise AntipodalViolation(
                    f"joint system function failed g(-x, w) = -g(x, w) at {s}"
                )
            ys.append(y)
            wts.append(ws * wv)
    ys = np.array(ys)
    wts = np.array(wts)
    scatter = (ys.T * wts) @ ys
    return FilterState(fit_from_covariance(scatter), state.t + 1)


def update(
    state: FilterState, z_hat, noise: BinghamDistribution
) -> FilterState:
    """Exact Bayes update for the measurement model z = x (+) v, v ~ noise.

    The likelihood in x is the noise density evaluated at conj(x) (+) z_hat,
    which is itself Bingham with orientation L(z_hat) @ conj @ M_v; the
    posterior is then the pointwise product of two Binghams. No
    approximation beyond floating point.
    """
    z_hat = quat.normalize(z_hat)
    N = quat.left_matrix(z_hat) @ _CONJ @ noise.M
    likelihood = BinghamDistribution(N, noise.z)
    return FilterState(multiply(state.estimate, likelihood), state.t)
