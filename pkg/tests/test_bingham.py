import numpy as np
import pytest

from orientbench import quat
from orientbench.bingham import (
    BinghamDistribution,
    canonical_eigh,
    compose,
    compose_covariances,
    fit_from_covariance,
    multiply,
    orientation_from_mode,
    random_sample,
    uniform,
    validate_covariance,
)
from orientbench.errors import DegenerateCovariance
from orientbench.normconst import UNIFORM_DENSITY
from oracles import random_bingham, surface_integral


def test_uniform_pdf_constant():
    rng = np.random.default_rng(20)
    xs = quat.random_uniform(rng, 100)
    np.testing.assert_allclose(uniform().pdf(xs), UNIFORM_DENSITY, rtol=1e-12)


def test_pdf_antipodal_symmetry():
    rng = np.random.default_rng(21)
    b = random_bingham(rng)
    xs = quat.random_uniform(rng, 50)
    np.testing.assert_array_equal(b.pdf(xs), b.pdf(-xs))


def test_pdf_at_mode_is_inverse_norm():
    rng = np.random.default_rng(22)
    b = random_bingham(rng)
    assert b.pdf(b.mode()) == pytest.approx(1.0 / b.F, rel=1e-12)


def test_pdf_integrates_to_one():
    b = BinghamDistribution(np.eye(4), np.array([-20.0, -5.0, -1.0]))
    total = surface_integral(b.pdf, order=64)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_pdf_integrates_to_one_rotated_frame():
    rng = np.random.default_rng(23)
    b = random_bingham(rng, zlo=-30.0)
    assert surface_integral(b.pdf, order=96) == pytest.approx(1.0, abs=1e-3)


def test_covariance_structure():
    rng = np.random.default_rng(24)
    b = random_bingham(rng)
    S = b.covariance()
    assert np.trace(S) == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(S, S.T, atol=1e-15)
    # the frame diagonalizes the covariance with eigenvalues g_i / F
    d = b.M.T @ S @ b.M
    np.testing.assert_allclose(d, np.diag(b.grad / b.F), atol=1e-12)
    assert np.all(np.diff(np.diag(d)) >= -1e-12)  # ascending with z


def test_covariance_uniform_is_isotropic():
    np.testing.assert_allclose(uniform().covariance(), np.eye(4) / 4.0, atol=1e-12)


def test_covariance_concentrated():
    rng = np.random.default_rng(25)
    b = random_bingham(rng)
    b = BinghamDistribution(b.M, np.array([-100.0, -100.0, -100.0]))
    w, V = np.linalg.eigh(b.covariance())
    assert w[3] > 0.97
    assert abs(V[:, 3] @ b.M[:, 3]) > 1.0 - 1e-9


def test_mode_maximizes_pdf():
    rng = np.random.default_rng(26)
    b = random_bingham(rng)
    xs = quat.random_uniform(rng, 2000)
    assert b.pdf(b.mode()) >= np.max(b.pdf(xs))


def test_mode_unique_flag():
    rng = np.random.default_rng(27)
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    assert BinghamDistribution(Q, np.array([-3.0, -2.0, -1.0])).mode_unique
    assert not BinghamDistribution(Q, np.array([-3.0, -2.0, 0.0])).mode_unique
    assert not uniform().mode_unique


def test_orientation_from_mode():
    rng = np.random.default_rng(28)
    candidates = [quat.random_uniform(rng) for _ in range(20)]
    candidates += [row for row in np.eye(4)] + [-row for row in np.eye(4)]
    for q in candidates:
        M = orientation_from_mode(q)
        np.testing.assert_allclose(M.T @ M, np.eye(4), atol=1e-12)
        np.testing.assert_allclose(M[:, 3], quat.normalize(q), atol=1e-12)


def test_canonical_eigh_deterministic():
    rng = np.random.default_rng(29)
    A = rng.standard_normal((4, 4))
    A = A + A.T
    w1, V1 = canonical_eigh(A)
    # feeding back a reconstruction built from permuted, sign-flipped
    # eigenvectors must land on the same canonical output
    P = V1[:, [2, 0, 3, 1]] * np.array([1, -1, -1, 1])
    wp = w1[[2, 0, 3, 1]]
    w2, V2 = canonical_eigh(P @ np.diag(wp) @ P.T)
    np.testing.assert_allclose(w1, w2, atol=1e-10)
    np.testing.assert_allclose(V1, V2, atol=1e-7)
    assert np.all(np.diff(w1) >= 0.0)


def test_multiply_with_uniform_is_identity():
    rng = np.random.default_rng(30)
    b = random_bingham(rng)
    prod = multiply(b, uniform())
    xs = quat.random_uniform(rng, 100)
    np.testing.assert_allclose(prod.pdf(xs), b.pdf(xs), rtol=1e-10)


def test_multiply_commutative_pdf():
    rng = np.random.default_rng(31)
    b1, b2 = random_bingham(rng), random_bingham(rng)
    xs = quat.random_uniform(rng, 100)
    np.testing.assert_allclose(
        multiply(b1, b2).pdf(xs), multiply(b2, b1).pdf(xs), rtol=1e-10
    )


def test_multiply_is_pointwise_product():
    rng = np.random.default_rng(32)
    for _ in range(5):
        b1, b2 = random_bingham(rng), random_bingham(rng)
        prod = multiply(b1, b2)
        xs = quat.random_uniform(rng, 100)
        resid = b1.log_pdf(xs) + b2.log_pdf(xs) - prod.log_pdf(xs)
        # pointwise equal up to one normalization constant
        assert resid.std() < 1e-9


def test_multiply_same_frame_adds_concentrations():
    rng = np.random.default_rng(33)
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    b1 = BinghamDistribution(Q, np.array([-9.0, -4.0, -2.0]))
    b2 = BinghamDistribution(Q, np.array([-7.0, -3.0, -1.0]))
    prod = multiply(b1, b2)
    np.testing.assert_allclose(prod.z, b1.z + b2.z, atol=1e-9)


def test_fit_roundtrip():
    rng = np.random.default_rng(34)
    for _ in range(10):
        omega = np.sort(rng.dirichlet(np.ones(4)))
        Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        S = Q @ np.diag(omega) @ Q.T
        S = 0.5 * (S + S.T)
        S = S / np.trace(S)
        b = fit_from_covariance(S)
        np.testing.assert_allclose(b.covariance(), S, atol=1e-8)


def test_fit_handles_tiny_eigenvalue():
    omega = np.array([1e-6, 1e-3, 0.3, 1.0 - 1e-6 - 1e-3 - 0.3])
    S = np.diag(omega)
    b = fit_from_covariance(S)
    np.testing.assert_allclose(b.covariance(), S, atol=1e-8)
    assert b.z[0] < -1e5  # tiny spread needs a huge concentration


def test_fit_rejects_bad_covariance():
    with pytest.raises(ValueError):
        fit_from_covariance(np.eye(4))  # trace 4
    A = np.diag([0.4, 0.3, 0.2, 0.1])
    A[0, 1] = 1e-3
    with pytest.raises(ValueError):
        fit_from_covariance(A)  # not symmetric
    with pytest.raises(DegenerateCovariance):
        fit_from_covariance(np.diag([1.2, -0.2, 0.0, 0.0]))


def test_validate_covariance_shape():
    with pytest.raises(ValueError):
        validate_covariance(np.eye(3) / 3.0)


def test_compose_covariances_with_identity_mass():
    # composing with the point mass at the identity rotation changes nothing
    rng = np.random.default_rng(35)
    Sa = random_bingham(rng).covariance()
    e1 = np.zeros((4, 4))
    e1[0, 0] = 1.0
    np.testing.assert_allclose(compose_covariances(Sa, e1), Sa, atol=1e-12)


def test_compose_covariances_with_fixed_rotation():
    # b concentrated at q: result must be the conjugated covariance R Sa R^T
    rng = np.random.default_rng(36)
    Sa = random_bingham(rng).covariance()
    q = quat.random_uniform(rng)
    Sb = np.outer(q, q)
    R = quat.right_matrix(q)
    np.testing.assert_allclose(compose_covariances(Sa, Sb), R @ Sa @ R.T, atol=1e-12)


def test_compose_covariances_monte_carlo():
    rng = np.random.default_rng(37)
    b1 = random_bingham(rng, zlo=-25.0)
    b2 = random_bingham(rng, zlo=-25.0)
    pred = compose_covariances(b1.covariance(), b2.covariance())
    n = 200000
    xc = quat.compose(random_sample(b1, rng, n), random_sample(b2, rng, n))
    emp = xc.T @ xc / n
    assert np.max(np.abs(emp - pred)) < 5.0 / np.sqrt(n)


def test_compose_covariances_matches_quadrature():
    # the composed second moment is E_a[L(a) Cb L(a)^T], linear in Ca, so a
    # direct numerical integral over a pins the formula with no sampling noise
    rng = np.random.default_rng(53)
    b1 = random_bingham(rng, zlo=-40.0)
    Cb = random_bingham(rng, zlo=-40.0).covariance()
    pred = compose_covariances(b1.covariance(), Cb)

    def entry(i, j):
        def fn(x):
            L = np.stack([quat.left_matrix(q) for q in x])
            return np.einsum("mk,kl,ml->m", L[:, i, :], Cb, L[:, j, :]) * b1.pdf(x)

        return fn

    Q = np.empty((4, 4))
    for i in range(4):
        for j in range(i, 4):
            Q[i, j] = Q[j, i] = surface_integral(entry(i, j), order=64)
    np.testing.assert_allclose(pred, Q, atol=1e-9)


def test_compose_distribution_matches_covariance_algebra():
    rng = np.random.default_rng(38)
    b1 = random_bingham(rng, zlo=-40.0)
    b2 = random_bingham(rng, zlo=-40.0)
    S = compose_covariances(b1.covariance(), b2.covariance())
    np.testing.assert_allclose(compose(b1, b2).covariance(), S, atol=1e-8)


def test_random_sample_unit_norm_and_moments():
    rng = np.random.default_rng(39)
    b = random_bingham(rng, zlo=-50.0)
    xs = random_sample(b, rng, 100000)
    np.testing.assert_allclose(np.linalg.norm(xs, axis=1), 1.0, atol=1e-12)
    emp = xs.T @ xs / len(xs)
    assert np.max(np.abs(emp - b.covariance())) < 5.0 / np.sqrt(len(xs))


def test_random_sample_deterministic():
    b = BinghamDistribution(np.eye(4), np.array([-10.0, -5.0, -1.0]))
    a = random_sample(b, np.random.default_rng(40), 500)
    c = random_sample(b, np.random.default_rng(40), 500)
    np.testing.assert_array_equal(a, c)


def test_random_sample_rejects_nonpositive_count():
    with pytest.raises(ValueError):
        random_sample(uniform(), np.random.default_rng(0), 0)


def test_distribution_validates_inputs():
    with pytest.raises(ValueError):
        BinghamDistribution(np.eye(4) * 2.0, np.zeros(3))  # not orthogonal
    with pytest.raises(ValueError):
        BinghamDistribution(np.eye(4), np.array([-1.0, -2.0, 0.0]))  # order
    with pytest.raises(ValueError):
        BinghamDistribution(np.eye(3), np.zeros(3))


def test_distribution_is_immutable():
    b = uniform()
    with pytest.raises(ValueError):
        b.M[0, 0] = 2.0
    with pytest.raises(ValueError):
        b.z[0] = -1.0
