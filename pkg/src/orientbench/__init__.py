"""Orientation estimation on S3 with the Bingham distribution.

Library layers, bottom up: quaternion algebra (quat), normalization
constant machinery (normconst), the distribution and its filter algebra
(bingham), deterministic sampling (detsample), the recursive filter
(filtering), reference filters (baselines), and the benchmark harness
(harness) behind the orient-bench CLI.
"""

from . import baselines, detsample, filtering, harness, normconst, quat
from .bingham import (
    BinghamDistribution,
    compose,
    compose_covariances,
    fit_from_covariance,
    multiply,
    orientation_from_mode,
    random_sample,
    uniform,
)
from .detsample import WeightedSampleSet, deterministic_samples
from .filtering import FilterState, predict, predict_joint, update
from .normconst import (
    NormConstTable,
    build_table,
    norm_const,
    norm_const_fast,
    norm_const_grad,
)

__version__ = "0.1.0"

__all__ = [
    "BinghamDistribution",
    "FilterState",
    "NormConstTable",
    "WeightedSampleSet",
    "baselines",
    "build_table",
    "compose",
    "compose_covariances",
    "deterministic_samples",
    "detsample",
    "filtering",
    "fit_from_covariance",
    "harness",
    "multiply",
    "norm_const",
    "norm_const_fast",
    "norm_const_grad",
    "normconst",
    "orientation_from_mode",
    "predict",
    "predict_joint",
    "quat",
    "random_sample",
    "uniform",
    "update",
]
