"""Unit quaternion algebra on S3.

Quaternions are stored scalar-first as length-4 arrays (x1 scalar, x2..x4
vector part). A rotation corresponds to the antipodal pair {q, -q}; every
comparison that cares about rotations rather than points must go through
same_rotation or angular_distance.
"""

import numpy as np

NORM_TOL = 1e-12


def normalize(q):
    """Project onto the unit sphere; raises on (near-)zero input."""
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n < 1e-300):
        raise ValueError("cannot normalize a zero quaternion")
    return q / n


def identity():
    return np.array([1.0, 0.0, 0.0, 0.0])


def compose(a, b):
    """Hamilton product a + b, renormalized to unit length.

    Accepts broadcasting batches in the leading dimensions.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x1, x2, x3, x4 = np.moveaxis(a, -1, 0)
    y1, y2, y3, y4 = np.moveaxis(b, -1, 0)
    out = np.stack(
        [
            x1 * y1 - x2 * y2 - x3 * y3 - x4 * y4,
            x1 * y2 + x2 * y1 + x3 * y4 - x4 * y3,
            x1 * y3 - x2 * y4 + x3 * y1 + x4 * y2,
            x1 * y4 + x2 * y3 - x3 * y2 + x4 * y1,
        ],
        axis=-1,
    )
    return normalize(out)


def conjugate(q):
    """Inverse rotation: scalar part kept, vector part negated."""
    q = np.asarray(q, dtype=float)
    out = q.copy()
    out[..., 1:] = -out[..., 1:]
    return out


def left_matrix(q: np.ndarray) -> np.ndarray:
    """Orthogonal matrix L with L @ y == compose(q, y)."""
    a, b, c, d = np.asarray(q, dtype=float)
    return np.array(
        [
            [a, -b, -c, -d],
            [b, a, -d, c],
            [c, d, a, -b],
            [d, -c, b, a],
        ]
    )


def right_matrix(q: np.ndarray) -> np.ndarray:
    """Orthogonal matrix R with R @ x == compose(x, q)."""
    a, b, c, d = np.asarray(q, dtype=float)
    return np.array(
        [
            [a, -b, -c, -d],
            [b, a, d, -c],
            [c, -d, a, b],
            [d, c, -b, a],
        ]
    )


def angular_distance(a, b):
    """Rotation angle between the rotations of a and b, in [0, pi].

    Antipodally invariant: flipping the sign of either argument changes
    nothing.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = np.abs(np.sum(a * b, axis=-1))
    return 2.0 * np.arccos(np.minimum(1.0, dot))


def same_rotation(a, b, tol: float = 1e-9) -> bool:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return min(np.linalg.norm(a - b), np.linalg.norm(a + b)) < tol


def from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < 1e-300:
        raise ValueError("rotation axis must be nonzero")
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis / n])


def from_rotation_vector(r) -> np.ndarray:
    """Exponential map: rotation vector (axis * angle) to unit quaternion."""
    r = np.asarray(r, dtype=float)
    angle = np.linalg.norm(r)
    if angle < 1e-300:
        return identity()
    return from_axis_angle(r, angle)


def random_uniform(rng, n=None):
    """Uniform draw(s) on S3 (normalized Gaussians)."""
    shape = (4,) if n is None else (n, 4)
    return normalize(rng.standard_normal(shape))
