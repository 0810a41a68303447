"""Shared fixtures: one registry of the expensive Monte Carlo runs.

Several tests assert different things about the same seeded experiment, and
the thread-determinism check repeats every run under forced thread counts.
A session-scoped cache keyed by (run name, threads) keeps each variant to a
single execution.
"""
from __future__ import annotations

import pytest

from hidim_t2 import (
    EntryDistribution,
    SimConfig,
    estimate_process_covariance,
    run_bilinear_experiment,
    run_mean_norm_experiment,
    run_t2_experiment,
)

GAUSSIAN = EntryDistribution(kind="gaussian")
RADEMACHER = EntryDistribution(kind="rademacher")
SHIFTED_EXP = EntryDistribution(kind="shifted_exponential")
STUDENT_T8 = EntryDistribution(kind="student_t", df=8)

COV_GRID = (1 + 1j, 2 + 1j)

# every entry: name -> (runner label, config, extra)
RUNS = {
    "t2-gaussian-p100": ("t2", SimConfig(n=400, p=100, replicates=2000,
                                         dist=GAUSSIAN, seed=1), None),
    "t2-gaussian-p200": ("t2", SimConfig(n=400, p=200, replicates=2000,
                                         dist=GAUSSIAN, seed=2), None),
    "t2-rademacher-p100": ("t2", SimConfig(n=400, p=100, replicates=2000,
                                           dist=RADEMACHER, seed=3), None),
    "t2-rademacher-p200": ("t2", SimConfig(n=400, p=200, replicates=2000,
                                           dist=RADEMACHER, seed=4), None),
    "t2-shifted-exp-p100": ("t2", SimConfig(n=400, p=100, replicates=2000,
                                            dist=SHIFTED_EXP, seed=505), None),
    "t2-shifted-exp-p200": ("t2", SimConfig(n=400, p=200, replicates=2000,
                                            dist=SHIFTED_EXP, seed=506), None),
    "t2-student-p100": ("t2", SimConfig(n=400, p=100, replicates=2000,
                                        dist=STUDENT_T8, seed=507), None),
    "t2-student-p200": ("t2", SimConfig(n=400, p=200, replicates=2000,
                                        dist=STUDENT_T8, seed=508), None),
    "bilinear-identity": ("bilinear", SimConfig(n=400, p=200, replicates=2000,
                                                dist=GAUSSIAN, seed=601),
                          lambda x: x),
    "bilinear-reciprocal": ("bilinear", SimConfig(n=400, p=100, replicates=2000,
                                                  dist=GAUSSIAN, seed=602),
                            lambda x: 1.0 / x),
    "mean-norm": ("mean-norm", SimConfig(n=400, p=200, replicates=2000,
                                         dist=GAUSSIAN, seed=701), None),
    "process-cov": ("process-cov", SimConfig(n=400, p=200, replicates=2000,
                                             dist=GAUSSIAN, seed=801), COV_GRID),
    "t2-trunc-baseline": ("t2", SimConfig(n=400, p=100, replicates=200,
                                          dist=STUDENT_T8, seed=901), None),
    "t2-trunc-clipped": ("t2", SimConfig(n=400, p=100, replicates=200,
                                         dist=STUDENT_T8, seed=901,
                                         truncation_exponent=0.125), None),
}


def execute_run(name: str, threads: int | None):
    label, config, extra = RUNS[name]
    if label == "t2":
        return run_t2_experiment(config, threads=threads)
    if label == "bilinear":
        return run_bilinear_experiment(config, extra, threads=threads)
    if label == "mean-norm":
        return run_mean_norm_experiment(config, threads=threads)
    return estimate_process_covariance(config, list(extra), threads=threads)


@pytest.fixture(scope="session")
def run_experiment():
    cache: dict = {}

    def run(name: str, threads: int | None = None):
        key = (name, threads)
        if key not in cache:
            cache[key] = execute_run(name, threads)
        return cache[key]

    return run
