"""Asymptotic formulas: standardization, p-values, variance and covariance kernels.

The two closed-form covariance kernels act as each other's oracle; the
transform-level identities give residuals that should sit at rounding level
wherever the formulas are well conditioned.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hidim_t2 import (
    DomainError,
    MpModel,
    SingularKernelError,
    bilinear_variance,
    companion_link_residual,
    companion_slope_residual,
    covariance_grid,
    covariance_identity_residual,
    inverse_moments,
    mean_norm_variance,
    p_value,
    process_covariance,
    process_covariance_compact,
    standardize_t2,
)

OFF_AXIS = [1 + 1j, 1 - 1j, 2 + 1j, 0.5 + 2j, -1 + 1j, 3 - 2j]


class TestStandardize:
    def test_zero_at_centering(self):
        n, p = 400, 100
        m1, _ = inverse_moments(MpModel(0.25))
        t2 = n * 0.25 * m1
        report = standardize_t2(t2, n, p)
        assert abs(report.zscore) < 1e-10
        assert abs(report.p_value - 1.0) < 1e-9

    def test_centering_and_scaling_values(self):
        report = standardize_t2(50.0, 400, 100)
        m1, m2 = inverse_moments(MpModel(0.25))
        assert abs(report.centering - 0.25 * m1) < 1e-12
        assert abs(report.scaling - math.sqrt(2 * 0.25 * m2)) < 1e-12
        assert report.c_n == 0.25

    def test_affine_in_t2(self):
        n, p = 200, 50
        base = standardize_t2(60.0, n, p)
        center = n * base.centering
        doubled = standardize_t2(center + 2 * (60.0 - center), n, p)
        assert abs(doubled.zscore - 2 * base.zscore) < 1e-10

    def test_monotone_in_t2(self):
        zs = [standardize_t2(t, 100, 30).zscore for t in (10.0, 20.0, 40.0, 80.0)]
        assert all(lo < hi for lo, hi in zip(zs, zs[1:]))

    def test_shape_validation(self):
        with pytest.raises(DomainError):
            standardize_t2(1.0, 100, 100)
        with pytest.raises(DomainError):
            standardize_t2(1.0, 100, 0)
        with pytest.raises(DomainError):
            standardize_t2(-1.0, 100, 10)
        with pytest.raises(DomainError):
            standardize_t2(float("nan"), 100, 10)


class TestPValue:
    def test_zero_two_sided(self):
        assert p_value(0.0, "two_sided") == 1.0

    def test_quantile_value(self):
        assert abs(p_value(1.959964, "two_sided") - 0.05) < 1e-6

    def test_greater_far_right(self):
        assert p_value(40.0, "greater") < 1e-300

    def test_alternatives_partition(self):
        z = 0.7
        assert abs(p_value(z, "greater") + p_value(z, "less") - 1.0) < 1e-12

    def test_unknown_alternative(self):
        with pytest.raises(DomainError):
            p_value(1.0, "both")


class TestVarianceFormulas:
    def test_constant_function_zero(self):
        assert bilinear_variance(0.5, lambda x: 3.0) < 1e-10

    def test_identity_function(self):
        assert abs(bilinear_variance(0.5, lambda x: x) - 2.0) < 1e-8

    def test_reciprocal_function(self):
        m1, m2 = inverse_moments(MpModel(0.25))
        expected = (2.0 / 0.25) * (m2 - m1 * m1)
        assert abs(bilinear_variance(0.25, lambda x: 1.0 / x) - expected) < 1e-8

    def test_mean_norm_values(self):
        assert mean_norm_variance(0.5, 0.0) == 0.0
        assert abs(mean_norm_variance(0.5, 1.0) - 1.0) < 1e-15
        assert abs(mean_norm_variance(0.5, 3.0) - 9.0 * mean_norm_variance(0.5, 1.0)) < 1e-12


class TestProcessCovariance:
    def test_conjugate_pair_is_real_positive(self):
        for z in (1 + 1j, 2 + 1j, -1 + 2j):
            value = process_covariance(0.5, z, z.conjugate())
            assert abs(value.imag) < 1e-12
            assert value.real > 0.0

    def test_swap_symmetry(self):
        v12 = process_covariance_compact(0.5, 1 + 1j, 2 + 1j)
        v21 = process_covariance_compact(0.5, 2 + 1j, 1 + 1j)
        assert abs(v12 - v21) < 1e-12

    def test_conjugation_covariance(self):
        v = process_covariance_compact(0.5, 1 + 1j, 2 + 1j)
        vbar = process_covariance_compact(0.5, 1 - 1j, 2 - 1j)
        assert abs(vbar - v.conjugate()) < 1e-12

    def test_decay_at_infinity(self):
        value = process_covariance(0.5, 1e4 + 1e4j, -1e4 + 1e4j)
        assert abs(value) < 1e-6

    def test_identity_residual_on_grid(self):
        for c in (0.2, 0.5, 0.8):
            for z1, z2 in itertools.product(OFF_AXIS, OFF_AXIS):
                assert covariance_identity_residual(c, z1, z2) < 1e-9, (c, z1, z2)

    def test_identity_residual_near_diagonal(self):
        z = 1.3 + 0.9j
        assert covariance_identity_residual(0.5, z, z + 1e-4) < 1e-6

    def test_diagonal_limit_continuous(self):
        z = 1.1 + 0.8j
        at_diag = process_covariance_compact(0.5, z, z)
        near = process_covariance_compact(0.5, z, z + 1e-5)
        assert abs(at_diag - near) < 1e-4
        direct = process_covariance(0.5, z, z)
        assert abs(at_diag - direct) < 1e-9

    def test_grid_bundles_both_kernels(self):
        grid = covariance_grid(0.5, OFF_AXIS[:3])
        assert grid.direct.shape == (3, 3)
        gap = np.max(np.abs(grid.direct - grid.compact))
        assert gap < 1e-9

    def test_real_axis_point_rejected(self):
        with pytest.raises(DomainError):
            process_covariance(0.5, 1.0 + 0j, 2 + 1j)


class TestTransformIdentities:
    @pytest.mark.parametrize("c", [0.2, 0.5, 0.8, 1.5])
    def test_companion_link(self, c):
        for z in OFF_AXIS:
            assert companion_link_residual(c, z) < 1e-10, (c, z)

    @pytest.mark.parametrize("c", [0.2, 0.5, 0.8])
    def test_companion_slope(self, c):
        for z1, z2 in itertools.combinations(OFF_AXIS, 2):
            assert companion_slope_residual(c, z1, z2) < 1e-10, (c, z1, z2)

    def test_slope_needs_distinct_points(self):
        with pytest.raises(DomainError):
            companion_slope_residual(0.5, 1 + 1j, 1 + 1j)

    @given(st.floats(min_value=0.1, max_value=1.9, allow_nan=False),
           st.complex_numbers(min_magnitude=0.3, max_magnitude=20.0,
                              allow_nan=False, allow_infinity=False))
    @settings(max_examples=100, deadline=None)
    def test_companion_link_random(self, c, z):
        if abs(z.imag) < 0.05:
            z = complex(z.real, 0.5)
        assert companion_link_residual(c, z) < 1e-9


class TestTestReportValidation:
    def test_alternatives_accepted(self):
        for alt in ("two_sided", "greater", "less"):
            report = standardize_t2(30.0, 100, 20, alternative=alt)
            assert report.alternative == alt
            assert 0.0 <= report.p_value <= 1.0

    def test_report_is_frozen(self):
        report = standardize_t2(30.0, 100, 20)
        with pytest.raises(Exception):
            report.zscore = 0.0
