"""Quick self-contained oracle checks, exposed as `orient-bench selftest`.

Each check is a trimmed version of the corresponding test-suite oracle:
small sample counts, generous-but-meaningful tolerances, a few seconds
total. Meant as a smoke test for an installed copy, not a substitute for
the test suite.
"""

import numpy as np

from . import baselines, filtering, quat
from .bingham import (
    BinghamDistribution,
    compose_covariances,
    fit_from_covariance,
    random_sample,
    uniform,
)
from .detsample import deterministic_samples
from .normconst import (
    SPHERE_SURFACE,
    build_table,
    norm_const,
    norm_const_fast,
    norm_const_grad,
)


def _random_bingham(rng, zlo=-60.0):
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    z = np.sort(rng.uniform(zlo, 0.0, 3))
    return BinghamDistribution(Q, z)


def check_quat(rng):
    worst = 0.0
    for _ in range(200):
        a, b, c = quat.random_uniform(rng, 3)
        worst = max(worst, np.max(np.abs(quat.left_matrix(a) @ b - quat.compose(a, b))))
        worst = max(worst, np.max(np.abs(quat.right_matrix(b) @ a - quat.compose(a, b))))
        assoc = quat.compose(quat.compose(a, b), c) - quat.compose(a, quat.compose(b, c))
        worst = max(worst, np.max(np.abs(assoc)))
    return worst < 1e-12, f"max deviation {worst:.2e}"


def check_normconst(rng):
    worst = 0.0
    for _ in range(5):
        z = np.sort(rng.uniform(-50.0, 0.0, 3))
        Fq = norm_const(z)
        gq = norm_const_grad(z)
        Ff, gf = norm_const_fast(z)
        worst = max(worst, abs(Fq - Ff) / Ff, float(np.max(np.abs(gq - gf) / gf)))
        worst = max(worst, abs(gf.sum() - Ff) / Ff)
    worst = max(worst, abs(norm_const(np.zeros(3)) - SPHERE_SURFACE) / SPHERE_SURFACE)
    return worst < 2e-6, f"max relative deviation {worst:.2e}"


def check_fit(rng):
    worst = 0.0
    for i in range(20):
        omega = np.sort(rng.dirichlet(np.ones(4)))
        if i == 0:
            omega = np.array([1e-6, 1e-4, 0.3, 0.699899])
            omega = omega / omega.sum()
        Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        S = Q @ np.diag(omega) @ Q.T
        S = 0.5 * (S + S.T)
        b = fit_from_covariance(S / np.trace(S))
        worst = max(worst, float(np.max(np.abs(b.covariance() - S / np.trace(S)))))
    return worst < 1e-7, f"max round-trip error {worst:.2e}"


def check_detsample(rng):
    worst = 0.0
    for i in range(200):
        b = _random_bingham(rng)
        ss = deterministic_samples(b)
        worst = max(worst, float(np.max(np.abs(ss.scatter() - b.covariance()))))
        worst = max(worst, abs(ss.weights.sum() - 1.0))
        if ss.weights.min() < 0:
            return False, "negative weight"
    return worst < 1e-12, f"max scatter deviation {worst:.2e}"


def check_update(rng):
    worst = 0.0
    for _ in range(3):
        prior = _random_bingham(rng)
        noise = _random_bingham(rng)
        z_hat = quat.random_uniform(rng)
        post = filtering.update(
            filtering.FilterState(prior, 0), z_hat, noise
        ).estimate
        xs = quat.random_uniform(rng, 50)
        target = prior.pdf(xs) * noise.pdf(quat.compose(quat.conjugate(xs), z_hat))
        ratio = target / post.pdf(xs)
        worst = max(worst, float(ratio.std() / ratio.mean()))
    return worst < 1e-6, f"max pointwise ratio spread {worst:.2e}"


def check_sampler(rng):
    b = _random_bingham(rng, zlo=-20.0)
    xs = random_sample(b, rng, 100000)
    emp = xs.T @ xs / len(xs)
    dev = np.max(np.abs(emp - b.covariance()))
    return dev < 5.0 / np.sqrt(len(xs)), f"max scatter deviation {dev:.2e}"


def check_compose(rng):
    b1 = _random_bingham(rng, zlo=-20.0)
    b2 = _random_bingham(rng, zlo=-20.0)
    pred = compose_covariances(b1.covariance(), b2.covariance())
    n = 100000
    xc = quat.compose(random_sample(b1, rng, n), random_sample(b2, rng, n))
    emp = xc.T @ xc / n
    dev = np.max(np.abs(emp - pred))
    return dev < 5.0 / np.sqrt(n), f"max deviation {dev:.2e}"


def check_table(tmpdir=None):
    table = build_table(axis=[-10.0, -6.0, -3.0, -1.0, 0.0])
    z = np.array([-10.0, -3.0, 0.0])
    got = table.lookup(z)
    Ff, _ = norm_const_fast(z)
    node_err = abs(got.F - Ff) / Ff
    mid = table.lookup(np.array([-5.0, -2.0, -0.5]))
    # a five point axis interpolates to a few percent; 0.15 leaves headroom
    mid_err = abs(mid.F - norm_const_fast(np.array([-5.0, -2.0, -0.5]))[0]) / mid.F
    ok = got.from_table and node_err < 1e-6 and mid_err < 0.15
    return ok, f"node {node_err:.2e}, coarse midpoint {mid_err:.2e}"


def check_pf_oracle(rng):
    prior = _random_bingham(rng, zlo=-30.0)
    noise = BinghamDistribution(np.eye(4), np.array([-40.0, -35.0, -30.0]))
    z_hat = quat.random_uniform(rng)
    post = filtering.update(filtering.FilterState(prior, 0), z_hat, noise).estimate
    xs = random_sample(prior, rng, 50000)
    w = noise.pdf(quat.compose(quat.conjugate(xs), z_hat))
    w = w / w.sum()
    emp = (xs.T * w) @ xs
    ref = post.covariance()
    dev = float(np.max(np.abs(emp - ref) / np.maximum(np.abs(ref), 0.01)))
    return dev < 0.15, f"max relative deviation {dev:.2e}"


CHECKS = (
    ("quaternion algebra", check_quat),
    ("normalization constant", check_normconst),
    ("covariance fit round trip", check_fit),
    ("deterministic sampling", check_detsample),
    ("exact measurement update", check_update),
    ("rejection sampler moments", check_sampler),
    ("composition covariance", check_compose),
    ("importance-weighted update oracle", check_pf_oracle),
    ("lookup table", lambda rng: check_table()),
)


def run_selftest() -> int:
    failures = 0
    for name, fn in CHECKS:
        rng = np.random.default_rng(12345)
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
        failures += 0 if ok else 1
    return 0 if failures == 0 else 1
