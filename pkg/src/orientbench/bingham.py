"""The Bingham distribution on S3 and its filter algebra.

Parameters follow the canonical form (M, Z): M is 4x4 orthogonal with the
mode in its last column, Z = diag(z1, z2, z3, 0) with z1 <= z2 <= z3 <= 0.
Concentrations are handled as length-3 arrays (the trailing zero is implied).

Everything that needs F or its gradient goes through the exact 1D evaluator
in normconst; the quadrature path and the lookup table are cross-checks and
serving layers, not the source of truth inside fitting loops.
"""

import numpy as np
from scipy import optimize

from . import quat
from .errors import (
    DegenerateCovariance,
    FitNotConverged,
    RejectionBudgetExceeded,
)
from .normconst import (
    Z_FLOOR_DEFAULT,
    norm_const_fast,
    validate_concentration,
)

# z range accepted by the exact evaluator; fits of near-degenerate
# covariances (omega ~ 1e-8) land far below the quadrature floor
FIT_Z_FLOOR = -1e9

EIG_CLAMP_LO = 1e-8
EIG_CLAMP_HI = 1.0 - 3e-8

_LAM = np.stack([quat.left_matrix(np.eye(4)[i]) for i in range(4)])
# E[L(a) Sb L(a)^T] expanded over monomials a_i a_j: coefficient tensor
# contracted once at import, reused by every compose_covariances call
_COMPOSE_TENSOR = np.einsum("ipm,jqn->ijmnpq", _LAM, _LAM)


class BinghamDistribution:
    """Immutable (M, Z) pair with cached normalization constant and gradient."""

    def __init__(self, M, z, floor: float = FIT_Z_FLOOR):
        M = np.asarray(M, dtype=float)
        if M.shape != (4, 4):
            raise ValueError(f"orientation matrix must be 4x4, got {M.shape}")
        if np.max(np.abs(M.T @ M - np.eye(4))) > 1e-10:
            raise ValueError("orientation matrix is not orthogonal within 1e-10")
        self._M = M.copy()
        self._M.flags.writeable = False
        self._z = validate_concentration(z, floor)
        self._z.flags.writeable = False
        self._F, self._grad = norm_const_fast(self._z, floor)

    @property
    def M(self) -> np.ndarray:
        return self._M

    @property
    def z(self) -> np.ndarray:
        """Concentration diagonal (z1, z2, z3); the fourth entry is 0."""
        return self._z

    @property
    def F(self) -> float:
        return self._F

    @property
    def grad(self) -> np.ndarray:
        """dF/dz_i for i = 1..4."""
        return self._grad

    @property
    def mode_unique(self) -> bool:
        return bool(self._z[2] < 0.0)

    def exponent_matrix(self) -> np.ndarray:
        Z4 = np.diag(np.append(self._z, 0.0))
        return self._M @ Z4 @ self._M.T

    def pdf(self, x):
        """Density at unit quaternion(s) x; pdf(x) == pdf(-x) exactly."""
        x = np.asarray(x, dtype=float)
        y = x @ self._M
        expo = y[..., :3] ** 2 @ self._z
        return np.exp(expo) / self._F

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        y = x @ self._M
        return y[..., :3] ** 2 @ self._z - np.log(self._F)

    def covariance(self) -> np.ndarray:
        """Second moment E[x x^T] = M diag(g_i / F) M^T; unit trace."""
        omega = self._grad / self._F
        return self._M @ np.diag(omega) @ self._M.T

    def mode(self) -> np.ndarray:
        """Last column of M, sign-fixed; one of the antipodal pair.

        When z3 == 0 the mode axis is not unique (check mode_unique); the
        returned column is still a maximizer.
        """
        q = self._M[:, 3]
        return q if q[np.argmax(np.abs(q))] > 0 else -q

    def __repr__(self):
        return f"BinghamDistribution(z={np.array2string(self._z, precision=4)})"


def uniform() -> BinghamDistribution:
    return BinghamDistribution(np.eye(4), np.zeros(3))


def orientation_from_mode(q) -> np.ndarray:
    """Orthogonal M whose last column is q (deterministic completion).

    With near-point-mass Z this places the distribution's mode at q; with
    q = (1,0,0,0) it is the zero-mean noise orientation, the scalar-first
    counterpart of "identity matrix as the first parameter".
    """
    q = quat.normalize(q)
    cols = [q]
    basis = np.eye(4)
    # drop the basis vector most parallel to q, orthonormalize the rest
    skip = int(np.argmax(np.abs(q)))
    for i in range(4):
        if i == skip:
            continue
        v = basis[i]
        for c in cols:
            v = v - (v @ c) * c
        cols.append(v / np.linalg.norm(v))
    M = np.column_stack(cols[1:] + [q])
    return M


def canonical_eigh(A):
    """Symmetric eigendecomposition with deterministic ordering and signs.

    Ascending eigenvalues; exact ties broken by the index of each vector's
    largest-magnitude component; that component's sign made positive.
    """
    w, V = np.linalg.eigh(A)
    amax = np.argmax(np.abs(V), axis=0)
    order = np.lexsort((amax, w))
    w = w[order]
    V = V[:, order]
    for c in range(4):
        if V[amax[order[c]], c] < 0:
            V[:, c] = -V[:, c]
    return w, V


def validate_covariance(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.shape != (4, 4):
        raise ValueError(f"covariance must be 4x4, got {S.shape}")
    if np.max(np.abs(S - S.T)) > 1e-12:
        raise ValueError("covariance not symmetric within 1e-12")
    if abs(np.trace(S) - 1.0) > 1e-9:
        raise ValueError(f"covariance trace {np.trace(S)} not 1 within 1e-9")
    return S


def multiply(b1: BinghamDistribution, b2: BinghamDistribution) -> BinghamDistribution:
    """Renormalized pointwise product; exact, the Bayes-update workhorse."""
    C = b1.exponent_matrix() + b2.exponent_matrix()
    w, V = canonical_eigh(C)
    z = np.minimum(w[:3] - w[3], 0.0)  # shift so z4 = 0
    return BinghamDistribution(V, z)


def fit_from_covariance(S, *, residual_tol: float = 1e-10, max_iter: int = 200):
    """Bingham distribution whose covariance reproduces S (moment match).

    M comes from the eigendecomposition of S; the concentrations solve
    g_i(Z)/F(Z) = omega_i by damped Newton with a finite-difference
    Jacobian. Eigenvalues are clamped into [1e-8, 1-3e-8] and renormalized
    before solving, so numerically singular propagated covariances fit.
    """
    S = validate_covariance(S)
    w, V = canonical_eigh(S)
    if np.any(w < -1e-6) or np.any(w > 1.0 + 1e-6):
        raise DegenerateCovariance(f"eigenvalues {w} outside [0, 1]")
    omega = np.clip(w, EIG_CLAMP_LO, EIG_CLAMP_HI)
    omega = omega / omega.sum()
    z = _solve_concentration(omega, residual_tol, max_iter)
    return BinghamDistribution(V, z)


def _omega_of(z):
    # finite-difference probes may disturb the ascending order; the constant
    # is symmetric in its arguments, so sort, evaluate, and unsort the moments
    z = np.asarray(z, dtype=float)
    order = np.argsort(z, kind="stable")
    F, g = norm_const_fast(z[order], FIT_Z_FLOOR)
    out = np.empty(4)
    out[:3][order] = g[:3]
    out[3] = g[3]
    return out / F


def _project(z):
    return np.sort(np.clip(z, FIT_Z_FLOOR * 0.999, 0.0))


def _solve_concentration(omega, tol, max_iter):
    # concentrated-limit initial guess: omega_i ~ 1/(-2 z_i) up to a shift
    z = _project(1.0 / (2.0 * omega[3]) - 1.0 / (2.0 * omega[:3]))
    r = _omega_of(z)[:3] - omega[:3]
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            return z
        J = np.empty((3, 3))
        h = 1e-5 * np.maximum(1.0, np.abs(z))
        for j in range(3):
            zp = z.copy()
            zp[j] = min(z[j] + h[j], 0.0)  # probes must stay in the domain
            zm = z.copy()
            zm[j] = z[j] - h[j]
            J[:, j] = (_omega_of(zp)[:3] - _omega_of(zm)[:3]) / (zp[j] - zm[j])
        try:
            dz = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            dz = np.linalg.lstsq(J, -r, rcond=None)[0]
        rn = np.linalg.norm(r)
        t = 1.0
        accepted = False
        while t > 2.0**-40:
            z_try = _project(z + t * dz)
            r_try = _omega_of(z_try)[:3] - omega[:3]
            if np.linalg.norm(r_try) < rn:
                z, r = z_try, r_try
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
    if np.max(np.abs(r)) < tol:
        return z
    raise FitNotConverged(
        f"residual {np.max(np.abs(r)):.3e} after {max_iter} iterations "
        f"(target {tol:.1e}, omega={omega})"
    )


def compose_covariances(Sa, Sb) -> np.ndarray:
    """Covariance of a (+) b for independent antipodally symmetric a, b.

    Bilinearity of the Hamilton product turns E[(a+b)(a+b)^T] into a double
    contraction of Sa and Sb against a fixed coefficient tensor.
    """
    Sa = validate_covariance(Sa)
    Sb = validate_covariance(Sb)
    out = np.einsum("ij,mn,ijmnpq->pq", Sa, Sb, _COMPOSE_TENSOR)
    return 0.5 * (out + out.T)


def compose(b1: BinghamDistribution, b2: BinghamDistribution) -> BinghamDistribution:
    """Moment-matched distribution of the composed rotation (approximate)."""
    S = compose_covariances(b1.covariance(), b2.covariance())
    return fit_from_covariance(S)


def random_sample(b: BinghamDistribution, rng, n: int) -> np.ndarray:
    """n draws via rejection from an angular-central-Gaussian envelope.

    The proposal covariance and the envelope constant come from the standard
    bound: pick s with sum(1/(s - 2 z_i)) = 1, Omega = I - (2/s) Z. Exact
    sampler (no approximation); acceptance stays above ~25% for all valid Z.
    """
    if n < 1:
        raise ValueError("need n >= 1 samples")
    z4 = np.append(b.z, 0.0)

    def slack(s):
        return np.sum(1.0 / (s - 2.0 * z4)) - 1.0

    s = optimize.brentq(slack, 1e-12, 4.0)
    omega_diag = 1.0 - 2.0 * z4 / s
    log_env = -(4.0 - s) / 2.0 + 2.0 * np.log(4.0 / s)

    out = np.empty((n, 4))
    have = 0
    proposed = 0
    budget = 1000 * n + 10**6
    while have < n:
        m = max(1024, 2 * (n - have))
        proposed += m
        if proposed > budget:
            raise RejectionBudgetExceeded(
                f"acceptance rate {have / proposed:.2e} with z={b.z}"
            )
        y = rng.standard_normal((m, 4)) / np.sqrt(omega_diag)
        x = y / np.linalg.norm(y, axis=1, keepdims=True)
        t = x**2 @ z4
        q = x**2 @ omega_diag
        keep = np.log(rng.random(m)) < t + 2.0 * np.log(q) - log_env
        got = x[keep][: n - have]
        out[have : have + len(got)] = got
        have += len(got)
    return out @ b.M.T
