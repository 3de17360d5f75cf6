"""Deterministic weighted sampling that reproduces a Bingham covariance.

Seven samples: the mode plus a symmetric pair on each of the three minor
axes. Weights and angles are chosen so the weighted second moment equals the
covariance exactly (to rounding), which is what the prediction step needs.
"""

from dataclasses import dataclass

import numpy as np

from .bingham import BinghamDistribution
from .errors import InfeasibleSpread


@dataclass(frozen=True)
class WeightedSampleSet:
    samples: np.ndarray  # (7, 4) unit quaternions, mode sample first
    weights: np.ndarray  # (7,) nonnegative, sums to 1

    def scatter(self) -> np.ndarray:
        return (self.samples.T * self.weights) @ self.samples


def _weights(omega3):
    """Per-axis weights w_i with w_i >= omega_i / 2 and sum <= 1/2.

    The simple rule w_i = max(1/7, omega_i/2) can push the weight sum past
    1/2 (two large minor eigenvalues suffice, e.g. omega = (.01,.01,.48,.5)),
    which would make the mode weight negative. In that regime the slack
    1/2 - sum(omega_i/2) >= 0 is redistributed proportionally to how much
    each axis wants to rise above its floor omega_i/2; feasibility is
    preserved because w_i never drops below omega_i/2.
    """
    w = np.maximum(1.0 / 7.0, 0.5 * omega3)
    if w.sum() > 0.5:
        beta = np.maximum(1.0 / 7.0 - 0.5 * omega3, 0.0)
        slack = 0.5 - 0.5 * omega3.sum()
        w = 0.5 * omega3 + (slack / beta.sum()) * beta if beta.sum() > 0 else 0.5 * omega3
    return w


def deterministic_samples(b: BinghamDistribution) -> WeightedSampleSet:
    """Seven weighted unit samples whose scatter equals covariance(b).

    Exact moment matching: max-entry deviation is at rounding level (the
    acceptance bar is 1e-12 per entry).
    """
    omega = b.grad / b.F
    w3 = _weights(omega[:3])
    ratio = omega[:3] / (2.0 * w3)
    if np.any(ratio > 1.0 + 1e-12):
        raise InfeasibleSpread(f"sin^2(alpha) = {ratio} exceeds 1")
    alpha = np.arcsin(np.sqrt(np.minimum(ratio, 1.0)))

    cols = np.zeros((7, 4))
    cols[0, 3] = 1.0
    for i in range(3):
        s, c = np.sin(alpha[i]), np.cos(alpha[i])
        cols[1 + 2 * i, i] = s
        cols[1 + 2 * i, 3] = c
        cols[2 + 2 * i, i] = -s
        cols[2 + 2 * i, 3] = c
    weights = np.concatenate([[1.0 - 2.0 * w3.sum()], np.repeat(w3, 2)])
    weights = np.maximum(weights, 0.0)  # clip -0.0 from exact fallback
    return WeightedSampleSet(samples=cols @ b.M.T, weights=weights)
