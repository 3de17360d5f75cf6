"""Benchmark harness: scenario configuration, simulation, metrics, CSVs.

A scenario pits the Bingham filter against the UKF and the particle filter
on identical measurement sequences. Reproducibility contract: every random
stream is derived from (seed, purpose, run), so outputs are byte-identical
across invocations and run counts only extend, never reshuffle, earlier
rows. Wall-clock columns are the one exception and can be frozen with
record_timing = false.
"""

import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import baselines, filtering, quat
from .bingham import BinghamDistribution, orientation_from_mode, random_sample, uniform
from .errors import ConfigError, IoError, OrientBenchError
from .normconst import NormConstTable, build_table

FILTER_ORDER = ("bingham", "ukf", "pf")
SYSTEM_CHOICES = ("identity", "fixed-rotation", "nonlinear-twist")


@dataclass(frozen=True)
class ScenarioConfig:
    system: str = "identity"
    rotation_axis: tuple = (0.0, 0.0, 1.0)
    rotation_angle: float = 0.2
    twist_gain: float = 0.5
    process_z: tuple = (-200.0, -200.0, -200.0)
    process_m: tuple | str = "identity"
    meas_z: tuple = (-200.0, -200.0, -200.0)
    steps: int = 50
    runs: int = 100
    seed: int = 0
    particles: int = 10000
    table_path: str = ""
    out_dir: str = "bench_out"
    record_timing: bool = True
    figures: bool = True
    jobs: int = 1
    ukf_align: bool = False


def _parse_bool(s):
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_floats(s, count):
    vals = tuple(float(v) for v in s.split())
    if len(vals) != count:
        raise ValueError(f"expected {count} numbers, got {len(vals)}")
    return vals


def _parse_orientation(s):
    if s.strip().lower() == "identity":
        return "identity"
    vals = _parse_floats(s, 16)
    return vals


_PARSERS = {
    "system": lambda s: s.strip(),
    "rotation_axis": lambda s: _parse_floats(s, 3),
    "rotation_angle": float,
    "twist_gain": float,
    "process_z": lambda s: _parse_floats(s, 3),
    "process_m": _parse_orientation,
    "meas_z": lambda s: _parse_floats(s, 3),
    "steps": int,
    "runs": int,
    "seed": int,
    "particles": int,
    "table_path": lambda s: s.strip(),
    "out_dir": lambda s: s.strip(),
    "record_timing": _parse_bool,
    "figures": _parse_bool,
    "jobs": int,
    "ukf_align": _parse_bool,
}
assert set(_PARSERS) == {f.name for f in fields(ScenarioConfig)}


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    if cfg.system not in SYSTEM_CHOICES:
        raise ConfigError(f"system must be one of {SYSTEM_CHOICES}, got {cfg.system!r}")
    for name in ("process_z", "meas_z"):
        z = getattr(cfg, name)
        if any(v > 0 for v in z) or list(z) != sorted(z):
            raise ConfigError(f"{name} must be ascending and <= 0, got {z}")
    if cfg.steps < 1 or cfg.runs < 1:
        raise ConfigError("steps and runs must be >= 1")
    if cfg.particles < 1:
        raise ConfigError("particles must be >= 1")
    if cfg.seed < 0:
        raise ConfigError("seed must be >= 0")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be >= 1")
    if cfg.system == "fixed-rotation" and not any(cfg.rotation_axis):
        raise ConfigError("rotation_axis must be nonzero")
    if cfg.process_m != "identity":
        M = np.array(cfg.process_m).reshape(4, 4)
        if np.max(np.abs(M.T @ M - np.eye(4))) > 1e-8:
            raise ConfigError("process_m must be orthogonal (16 values, row-major)")
    return cfg


def parse_config(path) -> ScenarioConfig:
    """Read a `key = value` file; # starts a comment; unknown keys are errors."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected `key = value`, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](val.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return validate_config(ScenarioConfig(**values))


# ---------------------------------------------------------------------------
# scenario assembly


def zero_mean_orientation() -> np.ndarray:
    """Orientation matrix whose mode is the identity rotation.

    This is what "identity as the noise orientation" means once the mode
    lives in the last column: the columns are a permutation of the identity
    matrix, not the identity matrix itself (whose mode would be a half-turn).
    """
    return orientation_from_mode(quat.identity())


def make_system_function(cfg: ScenarioConfig):
    """Batched system function for the configured dynamics.

    All three choices satisfy g(-x) = -g(x) exactly. The twist perturbs each
    quaternion by a rotation whose axis is its own vector part and whose
    angle is gain * x1 * |vec(x)|; the x1 factor makes the perturbation even
    under sign flips, hence the composed map odd.
    """
    if cfg.system == "identity":
        return lambda x: x
    if cfg.system == "fixed-rotation":
        q_s = quat.from_axis_angle(cfg.rotation_axis, cfg.rotation_angle)
        return lambda x: quat.compose(q_s, x)

    gain = cfg.twist_gain

    def twist(x):
        x = np.asarray(x, dtype=float)
        rv = gain * x[..., :1] * x[..., 1:]
        angle = np.linalg.norm(rv, axis=-1, keepdims=True)
        q = np.concatenate(
            [np.cos(0.5 * angle), 0.5 * np.sinc(angle / (2.0 * np.pi)) * rv],
            axis=-1,
        )
        return quat.compose(x, q)

    return twist


def build_noises(cfg: ScenarioConfig):
    if cfg.process_m == "identity":
        Mw = zero_mean_orientation()
    else:
        Mw = np.array(cfg.process_m).reshape(4, 4)
    process = BinghamDistribution(Mw, np.array(cfg.process_z))
    meas = BinghamDistribution(zero_mean_orientation(), np.array(cfg.meas_z))
    return process, meas


def simulate_trajectory(cfg: ScenarioConfig, rng):
    """Truth and measurement sequences for one run.

    x0 uniform on S3; x_{t+1} = g(x_t) (+) w_t; z_t = x_t (+) v_t.
    Returns (truth with steps+1 rows, measurements with steps rows).
    """
    g = make_system_function(cfg)
    process, meas = build_noises(cfg)
    w = random_sample(process, rng, cfg.steps)
    v = random_sample(meas, rng, cfg.steps)
    x = quat.random_uniform(rng)
    truth = [x]
    zs = []
    for t in range(cfg.steps):
        x = quat.compose(g(x), w[t])
        truth.append(x)
        zs.append(quat.compose(x, v[t]))
    return np.array(truth), np.array(zs)


# ---------------------------------------------------------------------------
# per-run execution


def _ukf_noise_covs(cfg: ScenarioConfig):
    process, meas = build_noises(cfg)
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 1)))
    q = baselines.folded_noise_covariance(process, rng)
    r = baselines.folded_noise_covariance(meas, rng)
    return q, r


def run_single(cfg: ScenarioConfig, r: int, ukf_cov=None):
    """One Monte Carlo run; returns rows (step, filter, err, ms) and failures.

    Streams: (seed, 0, r, 0) drives the trajectory, (seed, 0, r, 1) the
    particle filter, so results do not depend on how runs are scheduled.
    """
    g = make_system_function(cfg)
    process, meas = build_noises(cfg)
    truth, zs = simulate_trajectory(
        cfg, np.random.default_rng(np.random.SeedSequence((cfg.seed, 0, r, 0)))
    )
    pf_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0, r, 1)))
    q_cov, r_cov = ukf_cov if ukf_cov is not None else _ukf_noise_covs(cfg)

    bingham_state = filtering.FilterState(uniform(), 0)
    ukf_state = baselines.UkfState(mean=quat.identity(), cov=0.5 * np.eye(4))
    pf_state = baselines.pf_init(pf_rng, cfg.particles)

    rows = []
    failures = []
    dead = set()

    def step_filter(name, fn):
        if name in dead:
            return np.nan, np.nan
        t0 = time.perf_counter()
        try:
            err = fn()
        except (OrientBenchError, np.linalg.LinAlgError) as exc:
            dead.add(name)
            failures.append({"run": r, "filter": name, "step": t, "error": str(exc)})
            return np.nan, np.nan
        ms = (time.perf_counter() - t0) * 1e3
        return err, ms if cfg.record_timing else 0.0

    for t in range(cfg.steps):
        x_true = truth[t + 1]
        z = zs[t]

        def bingham_step():
            nonlocal bingham_state
            bingham_state = filtering.predict(bingham_state, g, process)
            bingham_state = filtering.update(bingham_state, z, meas)
            return float(quat.angular_distance(bingham_state.estimate.mode(), x_true))

        def ukf_step():
            nonlocal ukf_state
            ukf_state = baselines.ukf_step(
                ukf_state, g, q_cov, z, r_cov, align_measurement=cfg.ukf_align
            )
            return float(quat.angular_distance(ukf_state.mean, x_true))

        def pf_step():
            nonlocal pf_state
            pf_state, _ = baselines.pf_step(pf_state, g, process, z, meas, pf_rng)
            return float(quat.angular_distance(baselines.pf_estimate(pf_state), x_true))

        for name, fn in (("bingham", bingham_step), ("ukf", ukf_step), ("pf", pf_step)):
            err, ms = step_filter(name, fn)
            rows.append((t + 1, name, err, ms))
    return rows, failures


def _run_single_star(args):
    return run_single(*args)


# ---------------------------------------------------------------------------
# experiment driver and CSV output


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_csv(path, header, rows):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(",".join(row) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def ensure_table(cfg: ScenarioConfig):
    """Load the lookup table at table_path, building it on first use."""
    if not cfg.table_path:
        return None
    if os.path.exists(cfg.table_path):
        return NormConstTable.load(cfg.table_path)
    return build_table(path=cfg.table_path)


def run_experiment(cfg: ScenarioConfig):
    """Run the full comparison and write metrics.csv / summary.csv.

    Returns a dict with summary statistics, failure records, and paths.
    """
    cfg = validate_config(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    table = ensure_table(cfg)
    ukf_cov = _ukf_noise_covs(cfg)

    results = []
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(
                pool.map(_run_single_star, [(cfg, r, ukf_cov) for r in range(cfg.runs)])
            )
    else:
        for r in range(cfg.runs):
            results.append(run_single(cfg, r, ukf_cov))

    metric_rows = []
    failures = []
    errs = {name: [] for name in FILTER_ORDER}
    mss = {name: [] for name in FILTER_ORDER}
    per_step = {name: np.zeros(cfg.steps) for name in FILTER_ORDER}
    per_step_n = {name: np.zeros(cfg.steps) for name in FILTER_ORDER}
    for r, (rows, fails) in enumerate(results):
        failures.extend(fails)
        for step, name, err, ms in rows:
            metric_rows.append((str(r), str(step), name, _fmt(err), _fmt(ms)))
            errs[name].append(err)
            mss[name].append(ms)
            if np.isfinite(err):
                per_step[name][step - 1] += err
                per_step_n[name][step - 1] += 1

    metrics_path = os.path.join(cfg.out_dir, "metrics.csv")
    _write_csv(
        metrics_path, "run,step,filter,angular_error_rad,ms_per_step", metric_rows
    )

    summary = {}
    summary_rows = []
    for name in FILTER_ORDER:
        e = np.array(errs[name])
        m = np.array(mss[name])
        stats = {
            "mean_err": float(np.nanmean(e)) if np.any(np.isfinite(e)) else float("nan"),
            "median_err": float(np.nanmedian(e)) if np.any(np.isfinite(e)) else float("nan"),
            "p90_err": float(np.nanpercentile(e, 90)) if np.any(np.isfinite(e)) else float("nan"),
            "mean_ms": float(np.nanmean(m)) if np.any(np.isfinite(m)) else float("nan"),
        }
        summary[name] = stats
        summary_rows.append(
            (
                name,
                _fmt(stats["mean_err"]),
                _fmt(stats["median_err"]),
                _fmt(stats["p90_err"]),
                _fmt(stats["mean_ms"]),
            )
        )
    summary_path = os.path.join(cfg.out_dir, "summary.csv")
    _write_csv(summary_path, "filter,mean_err,median_err,p90_err,mean_ms", summary_rows)

    figure_paths = []
    if cfg.figures:
        from .report import render_figures

        curves = {
            name: per_step[name] / np.maximum(per_step_n[name], 1)
            for name in FILTER_ORDER
        }
        figure_paths = render_figures(cfg.out_dir, curves, summary)

    for f in failures:
        print(
            f"warning: run {f['run']} filter {f['filter']} failed at step "
            f"{f['step']}: {f['error']}",
            file=sys.stderr,
        )
    return {
        "summary": summary,
        "failures": failures,
        "metrics_path": metrics_path,
        "summary_path": summary_path,
        "figure_paths": figure_paths,
        "table_loaded": table is not None,
    }
