"""Acceptance gate: ten end-to-end checks, one test per criterion.

Numerical thresholds are stated inline next to each assertion.  The Monte
Carlo runs are shared through the session cache in conftest, and the
determinism criterion repeats every one of them under forced thread counts.
"""
from __future__ import annotations

import itertools
import os

import numpy as np
import pytest

from hidim_t2 import (
    MpModel,
    SimConfig,
    bilinear_variance,
    covariance_identity_residual,
    fixed_point_residual,
    generate_data,
    integral_f,
    inverse_map_residual,
    inverse_moments,
    resolvent_identity_check,
    stieltjes_m,
)
from conftest import RUNS, STUDENT_T8

C_GRID = [round(0.05 * k, 2) for k in range(1, 41)]
Z_GRID = [complex(u, v)
          for u in np.linspace(-3.0, 6.0, 20)
          for v in (0.05, 0.3, 1.0, 2.5, 5.0)]


def _quadrature_stieltjes(model: MpModel, z: complex) -> complex:
    u, v = z.real, z.imag

    def re_part(x: float) -> float:
        return (x - u) / ((x - u) ** 2 + v ** 2)

    def im_part(x: float) -> float:
        return v / ((x - u) ** 2 + v ** 2)

    return complex(integral_f(model, re_part), integral_f(model, im_part))


def test_criterion_01_limit_law_self_consistency():
    assert len(Z_GRID) == 100
    for c in C_GRID:
        model = MpModel(c)
        norm = integral_f(model, lambda x: 1.0)
        assert abs(norm - 1.0) < 1e-9, f"normalization off at c={c}: {norm}"
        for z in Z_GRID:
            assert fixed_point_residual(model, z) < 1e-12, (c, z)
            assert inverse_map_residual(model, z) < 1e-10, (c, z)
            gap = abs(stieltjes_m(model, z) - _quadrature_stieltjes(model, z))
            assert gap < 1e-7, f"quadrature vs root at c={c}, z={z}: {gap}"


def test_criterion_02_inverse_moment_closed_forms():
    for k in range(1, 10):
        c = round(0.1 * k, 1)
        m1, m2 = inverse_moments(MpModel(c))
        assert abs(m1 - 1.0 / (1.0 - c)) < 1e-8, f"first inverse moment at c={c}"
        assert abs(m2 - 1.0 / (1.0 - c) ** 3) < 1e-8, f"second inverse moment at c={c}"


def test_criterion_03_resolvent_rank_one_identity():
    sizes = [5, 20, 50]
    zpoints = [1 + 1j, 1 - 1j, 3 + 2j, 3 - 2j]
    for k in range(20):
        p = sizes[k % 3]
        config = SimConfig(n=4 * p, p=p, replicates=20,
                           dist=STUDENT_T8, seed=300)
        data = generate_data(config, k)
        for z in zpoints:
            resid = resolvent_identity_check(data, z)
            assert resid < 1e-9, f"instance {k} (p={p}), z={z}: {resid}"


def test_criterion_04_covariance_kernel_identity():
    base = [1 + 1j, 1 - 1j, 2 + 1j, 0.5 + 2j, -1 + 1j]
    pairs = list(itertools.product(base, base))
    assert len(pairs) == 25
    for c in (0.2, 0.5, 0.8):
        for z1, z2 in pairs:
            resid = covariance_identity_residual(c, z1, z2)
            assert resid < 1e-9, f"c={c}, z1={z1}, z2={z2}: {resid}"


def test_criterion_05_t2_clt_calibration(run_experiment):
    for name in ("t2-gaussian-p100", "t2-gaussian-p200",
                 "t2-rademacher-p100", "t2-rademacher-p200"):
        report = run_experiment(name)
        assert report.failures == 0, name
        assert report.ks_statistic < 0.05, (name, report.ks_statistic)
        assert 0.8 <= report.sample_var_of_z <= 1.25, (name, report.sample_var_of_z)


def test_criterion_06_quadratic_form_variance(run_experiment):
    linear = run_experiment("bilinear-identity")
    assert abs(linear.sample_var_of_z - 2.0) / 2.0 < 0.15, linear.sample_var_of_z

    recip = run_experiment("bilinear-reciprocal")
    target = bilinear_variance(0.25, lambda x: 1.0 / x)
    assert target == recip.theory_variance
    assert abs(recip.sample_var_of_z - target) / target < 0.15, (
        recip.sample_var_of_z, target)


def test_criterion_07_mean_norm_clt(run_experiment):
    report = run_experiment("mean-norm")
    c_n = report.config_echo.ratio
    raw_variance = report.sample_var_of_z * 2.0 * c_n
    assert abs(raw_variance - 2.0 * c_n) / (2.0 * c_n) < 0.15, raw_variance
    assert report.ks_statistic < 0.05, report.ks_statistic


def test_criterion_08_process_covariance_grid(run_experiment):
    estimate = run_experiment("process-cov")
    rel = np.abs(estimate.empirical - estimate.theory) / np.abs(estimate.theory)
    assert rel.max() < 0.2, f"worst relative error {rel.max()}"


def test_criterion_09_truncation_equivalence(run_experiment):
    plain = run_experiment("t2-trunc-baseline")
    clipped = run_experiment("t2-trunc-clipped")
    assert plain.failures == 0 and clipped.failures == 0
    perturbation = np.abs(plain.zscores - clipped.zscores).mean()
    assert perturbation < 0.05, perturbation


def test_criterion_10_thread_count_determinism(run_experiment):
    max_threads = os.cpu_count() or 1

    def payload_bytes(report) -> bytes:
        if hasattr(report, "empirical"):
            return report.empirical.tobytes()
        return report.zscores.tobytes()

    for name in RUNS:
        baseline = payload_bytes(run_experiment(name))
        for threads in (1, 2, max_threads):
            redo = payload_bytes(run_experiment(name, threads))
            assert redo == baseline, (name, threads)
