"""Asymptotic standardization and covariance kernels for the corrected test.

Centering and scaling always plug in the finite-sample ratio c_n = p/n, never
a limiting c supplied from outside; that keeps the standardized statistic free
of an avoidable O(c - c_n) bias and matches how the limit is stated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, SingularKernelError
from .mp_law import (
    DEFAULT_QUADRATURE,
    MpModel,
    QuadratureSpec,
    companion_m,
    integral_f,
    inverse_moments,
    stieltjes_m,
)

__all__ = [
    "ALTERNATIVES",
    "TestReport",
    "CovarianceGrid",
    "standardize_t2",
    "p_value",
    "bilinear_variance",
    "mean_norm_variance",
    "process_covariance",
    "process_covariance_compact",
    "covariance_identity_residual",
    "covariance_grid",
    "companion_link_residual",
    "companion_slope_residual",
]

ALTERNATIVES = ("two_sided", "greater", "less")

# below this separation the divided-difference kernel switches to its
# confluent limit to avoid catastrophic cancellation
_DIAGONAL_TOL = 1e-6

_KERNEL_FLOOR = 1e-13


@dataclass(frozen=True)
class TestReport:
    """Corrected one-sample location test: statistic, standardization, verdict."""

    t2: float
    n: int
    p: int
    c_n: float
    centering: float
    scaling: float
    zscore: float
    p_value: float
    alternative: str

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise DomainError(f"p-value must lie in [0, 1], got {self.p_value!r}")
        if not self.scaling > 0.0:
            raise DomainError(f"scaling must be positive, got {self.scaling!r}")
        if not 0.0 < self.c_n < 1.0:
            raise DomainError(f"aspect ratio must lie in (0, 1), got {self.c_n!r}")


def p_value(zscore: float, alternative: str = "two_sided") -> float:
    """Tail probability of the standard normal for the given alternative."""
    if alternative not in ALTERNATIVES:
        raise DomainError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")
    z = float(zscore)
    if not math.isfinite(z):
        raise DomainError(f"zscore must be finite, got {zscore!r}")
    if alternative == "two_sided":
        return float(2.0 * ndtr(-abs(z)))
    if alternative == "greater":
        return float(ndtr(-z))
    return float(ndtr(z))


def standardize_t2(t2: float, n: int, p: int, alternative: str = "two_sided",
                   spec: QuadratureSpec = DEFAULT_QUADRATURE) -> TestReport:
    """Standardize a raw statistic against its dimension-corrected limit.

    zscore = sqrt(n) (t2/n - c_n m1(c_n)) / sqrt(2 c_n m2(c_n)) with m1, m2
    the first two inverse moments of the limit law at the plug-in ratio
    c_n = p/n.  The reference distribution of the zscore is standard normal.
    """
    if not (isinstance(n, int) and isinstance(p, int)):
        raise DomainError(f"n and p must be integers, got n = {n!r}, p = {p!r}")
    if not 1 <= p < n:
        raise DomainError(f"need 1 <= p < n, got p = {p}, n = {n}")
    if not (math.isfinite(t2) and t2 >= 0.0):
        raise DomainError(f"t2 must be a finite nonnegative number, got {t2!r}")
    c_n = p / n
    m1, m2 = inverse_moments(MpModel(c_n), spec)
    centering = c_n * m1
    scaling = math.sqrt(2.0 * c_n * m2)
    zscore = math.sqrt(n) * (t2 / n - centering) / scaling
    return TestReport(t2=float(t2), n=n, p=p, c_n=c_n, centering=centering,
                      scaling=scaling, zscore=zscore,
                      p_value=p_value(zscore, alternative), alternative=alternative)


def bilinear_variance(c: float, f: Callable[[float], float],
                      spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Limit variance of the sqrt(n)-centered normalized quadratic form.

    Equals (2/c) (integral of f^2 minus the squared integral of f) against
    the limit law; zero exactly when f is constant on the support.
    """
    model = MpModel(c)
    mean = integral_f(model, f, spec)
    second = integral_f(model, lambda x: f(x) ** 2, spec)
    return max(0.0, (2.0 / c) * (second - mean * mean))


def mean_norm_variance(c: float, g_prime_at_c: float) -> float:
    """Limit variance 2 c g'(c)^2 of a smooth function of the mean norm."""
    if not (math.isfinite(c) and c > 0):
        raise DomainError(f"aspect ratio must be positive, got {c!r}")
    g = float(g_prime_at_c)
    if not math.isfinite(g):
        raise DomainError(f"g_prime_at_c must be finite, got {g_prime_at_c!r}")
    return 2.0 * c * g * g


def _transform_pair(model: MpModel, z) -> tuple[complex, complex]:
    zz = complex(z)
    return stieltjes_m(model, zz), companion_m(model, zz)


def process_covariance(c: float, z1, z2) -> complex:
    """Covariance kernel of the limiting resolvent-projection process.

    Direct form: 2 / (c z1 z2 [(1+d1)(1+d2) - c d1 d2]) - 2 m1 m2 / c with
    m the Stieltjes transform and d its companion at each point.
    """
    model = MpModel(c)
    w1, w2 = complex(z1), complex(z2)
    m1, d1 = _transform_pair(model, w1)
    m2, d2 = _transform_pair(model, w2)
    bracket = (1.0 + d1) * (1.0 + d2) - c * d1 * d2
    if abs(bracket) < _KERNEL_FLOOR:
        raise SingularKernelError(
            f"covariance kernel denominator vanished at ({z1!r}, {z2!r})")
    return 2.0 / (c * w1 * w2 * bracket) - 2.0 * m1 * m2 / c


def _compact_diagonal(model: MpModel, z: complex) -> complex:
    # confluent limit: with w(z) = z d(z), the kernel tends to
    # 2 w'(z)^2 / (c^2 z^2 d'(z)); d'(z) comes from differentiating the
    # inverse map z = -1/d + c/(1+d) implicitly
    c = model.c
    d = companion_m(model, z)
    slope = 1.0 / (1.0 / (d * d) - c / ((1.0 + d) ** 2))
    wprime = d + z * slope
    return 2.0 * wprime * wprime / (c * c * z * z * slope)


def process_covariance_compact(c: float, z1, z2) -> complex:
    """Same kernel through divided differences of z * mdot(z).

    Independent algebraic route used to cross-check ``process_covariance``:
    2 (z2 d2 - z1 d1)^2 / (c^2 z1 z2 (z1 - z2)(d1 - d2)).  Lets z1 == z2
    through by switching to the confluent limit below a small separation.
    """
    model = MpModel(c)
    w1, w2 = complex(z1), complex(z2)
    if abs(w1 - w2) < _DIAGONAL_TOL:
        return _compact_diagonal(model, 0.5 * (w1 + w2))
    d1 = companion_m(model, w1)
    d2 = companion_m(model, w2)
    num = 2.0 * (w2 * d2 - w1 * d1) ** 2
    den = c * c * w1 * w2 * (w1 - w2) * (d1 - d2)
    return num / den


def covariance_identity_residual(c: float, z1, z2) -> float:
    """Distance between the two independent closed forms of the kernel.

    The direct kernel splits into a bracket term minus a transform product
    2 m1 m2 / c, and the algebra behind the compact kernel shows the bracket
    term equals the compact kernel plus that same product.  Both statements
    collapse to |direct - compact|, which is what is returned; it is
    algebraically zero, so anything above rounding noise flags a defect in
    one of the routes.
    """
    direct = process_covariance(c, z1, z2)
    compact = process_covariance_compact(c, z1, z2)
    return abs(direct - compact)


@dataclass(frozen=True, eq=False)
class CovarianceGrid:
    """Both kernel routes tabulated over a grid of evaluation points.

    ``direct[i, j]`` and ``compact[i, j]`` hold the two routes at
    (zpoints[i], zpoints[j]).
    """

    zpoints: tuple[complex, ...]
    direct: np.ndarray
    compact: np.ndarray


def covariance_grid(c: float, zpoints: Sequence[complex]) -> CovarianceGrid:
    """Evaluate both kernel routes on the full grid zpoints x zpoints."""
    pts = tuple(complex(z) for z in zpoints)
    if not pts:
        raise DomainError("zpoints must be nonempty")
    k = len(pts)
    direct = np.empty((k, k), dtype=complex)
    compact = np.empty((k, k), dtype=complex)
    for i, zi in enumerate(pts):
        for j, zj in enumerate(pts):
            direct[i, j] = process_covariance(c, zi, zj)
            compact[i, j] = process_covariance_compact(c, zi, zj)
    direct.setflags(write=False)
    compact.setflags(write=False)
    return CovarianceGrid(zpoints=pts, direct=direct, compact=compact)


def companion_link_residual(c: float, z) -> float:
    """Residual of 1/(1 + c m(z)) = -z mdot(z), linking the two transforms."""
    model = MpModel(c)
    zz = complex(z)
    m = stieltjes_m(model, zz)
    d = companion_m(model, zz)
    return abs(1.0 / (1.0 + c * m) + zz * d)


def companion_slope_residual(c: float, z1, z2) -> float:
    """Residual of the divided-difference identity for the companion transform.

    (d1 - d2)/(z1 - z2) = d1 d2 (1+d1)(1+d2) / [(1+d1)(1+d2) - c d1 d2]
    for distinct points; this is the algebra the compact kernel rests on.
    """
    model = MpModel(c)
    w1, w2 = complex(z1), complex(z2)
    if w1 == w2:
        raise DomainError("the divided-difference identity needs two distinct points")
    d1 = companion_m(model, w1)
    d2 = companion_m(model, w2)
    bracket = (1.0 + d1) * (1.0 + d2) - c * d1 * d2
    if abs(bracket) < _KERNEL_FLOOR:
        raise SingularKernelError(f"identity denominator vanished at ({z1!r}, {z2!r})")
    lhs = (d1 - d2) / (w1 - w2)
    rhs = d1 * d2 * (1.0 + d1) * (1.0 + d2) / bracket
    return abs(lhs - rhs)
