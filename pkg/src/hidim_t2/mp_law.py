"""Marchenko-Pastur limit law: density, CDF, moments, Stieltjes transforms.

Everything is parameterized by the aspect ratio ``c`` (dimension over sample
size, or its limit).  The continuous part of the law has density

    p_c(x) = sqrt((b - x)(x - a)) / (2 pi c x)    on [a, b],

with edges a = (1 - sqrt(c))^2 and b = (1 + sqrt(c))^2, plus a point mass of
1 - 1/c at the origin when c > 1.

Integrals against the law use the substitution x = a + (b - a) sin^2(theta),
which absorbs the inverse-square-root behaviour at both edges into a smooth
integrand.  The Stieltjes transform is evaluated from its defining quadratic
in closed form with an explicit branch choice, never by numerical search.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import ConvergenceError, DomainError, EvaluationError, SingularBranchError

__all__ = [
    "MpModel",
    "QuadratureSpec",
    "DEFAULT_QUADRATURE",
    "support_edges",
    "density",
    "cdf",
    "integral_f",
    "stieltjes_m",
    "companion_m",
    "companion_inverse",
    "inverse_moments",
    "fixed_point_residual",
    "inverse_map_residual",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Error budget handed to the adaptive integrator."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1")


DEFAULT_QUADRATURE = QuadratureSpec()


def support_edges(c: float) -> tuple[float, float]:
    """Support edges (a, b) of the continuous part for aspect ratio c.

    a = (1 - sqrt(c))^2 and b = (1 + sqrt(c))^2; the two collide with the
    origin only in the degenerate direction c -> 0 or, for a, at c = 1.
    """
    if not (isinstance(c, (int, float)) and math.isfinite(c) and c > 0):
        raise DomainError(f"aspect ratio must be a finite positive number, got {c!r}")
    r = math.sqrt(c)
    return (1.0 - r) ** 2, (1.0 + r) ** 2


@dataclass(frozen=True)
class MpModel:
    """Marchenko-Pastur law with aspect ratio ``c``.

    Carries the derived support edges ``a`` and ``b``.  For c > 1 the law has
    an extra point mass of 1 - 1/c at the origin, exposed as ``atom_mass``;
    ``density`` describes the continuous part only.
    """

    c: float
    a: float = field(init=False)
    b: float = field(init=False)

    def __post_init__(self):
        a, b = support_edges(self.c)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def atom_mass(self) -> float:
        """Mass of the point at the origin (zero when c <= 1)."""
        return max(0.0, 1.0 - 1.0 / self.c)


def density(model: MpModel, x):
    """Density of the continuous part, vectorized over ``x``.

    Zero outside the open interval (a, b), including at the edges and at the
    origin; the c > 1 point mass is reported by ``model.atom_mass``, not here.
    """
    arr = np.asarray(x, dtype=float)
    out = np.zeros_like(arr)
    inside = (arr > model.a) & (arr < model.b)
    xi = arr[inside]
    out[inside] = np.sqrt((model.b - xi) * (xi - model.a)) / (2.0 * math.pi * model.c * xi)
    if arr.ndim == 0:
        return float(out)
    return out


def _continuous_integral(model: MpModel, f: Callable[[float], float],
                         theta_max: float, spec: QuadratureSpec) -> float:
    """Integral of f against the continuous part, up to the angle theta_max.

    After x = a + (b - a) sin^2(theta), the edge weight sqrt((b-x)(x-a))
    becomes (b - a) sin(theta) cos(theta) and the change of variables
    contributes another (b - a) sin(2 theta) d(theta), leaving

        ((b - a)^2 / (pi c)) * f(x(theta)) * sin^2(theta) cos^2(theta) / x(theta)

    which is smooth at both ends whenever f is, so plain adaptive quadrature
    applies.  theta_max = pi/2 covers the whole support.

    One wrinkle remains when c is very close to 1: the lower edge a is then
    tiny and the 1/x factor carves a dip of width sqrt(a / (b - a)) next to
    theta = 0, far below the initial panel resolution.  Explicit breakpoints
    across that layer force the integrator to look inside it.
    """
    a, width, c = model.a, model.b - model.a, model.c
    prefactor = width * width / (math.pi * c)

    def integrand(theta: float) -> float:
        s = math.sin(theta)
        x = a + width * s * s
        if x <= 0.0:
            return 0.0
        value = f(x)
        if not math.isfinite(value):
            raise EvaluationError(f"integrand is not finite at x = {x!r}")
        return prefactor * value * (s * math.cos(theta)) ** 2 / x

    breakpoints = None
    if a > 0.0:
        layer = math.sqrt(a / width)
        if layer < 0.05 * theta_max:
            # the dip decays like theta^-2, so ladder the panels geometrically
            # until ordinary subdivision can take over
            breakpoints, t = [], layer
            while t < 0.5 * theta_max:
                breakpoints.append(t)
                t *= 10.0
            breakpoints = breakpoints or None
    out = quad(integrand, 0.0, theta_max, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
               limit=spec.max_subdivisions, full_output=1, points=breakpoints)
    if len(out) > 3:
        raise ConvergenceError(f"quadrature did not converge: {out[3]}",
                               best_estimate=float(out[0]))
    return float(out[0])


def integral_f(model: MpModel, f: Callable[[float], float],
               spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Integral of f against the full law, point mass included.

    For c > 1 the point mass contributes (1 - 1/c) * f(0), so f(0) must be
    finite there.  Accuracy follows the tolerances in ``spec``.
    """
    total = _continuous_integral(model, f, 0.5 * math.pi, spec)
    mass = model.atom_mass
    if mass > 0.0:
        try:
            f0 = float(f(0.0))
        except (ArithmeticError, ValueError) as exc:
            raise EvaluationError(
                f"f(0) must be finite when c > 1 (point mass at the origin): {exc}") from exc
        if not math.isfinite(f0):
            raise EvaluationError(
                f"f(0) must be finite when c > 1 (point mass at the origin), got {f0!r}")
        total += mass * f0
    return total


def cdf(model: MpModel, x: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Distribution function at x, point mass included.

    Inside the support the continuous mass up to x is integrated with the
    same edge-free substitution, stopping at theta(x) = asin(sqrt((x-a)/(b-a))).
    """
    xx = float(x)
    if xx < 0.0:
        return 0.0
    mass = model.atom_mass
    if xx <= model.a:
        return mass
    if xx >= model.b:
        return 1.0
    ratio = (xx - model.a) / (model.b - model.a)
    theta_max = math.asin(min(1.0, math.sqrt(ratio)))
    return mass + _continuous_integral(model, lambda _: 1.0, theta_max, spec)


def stieltjes_m(model: MpModel, z) -> complex:
    """Stieltjes transform m(z) of the law, solved in closed form.

    m satisfies c z m^2 + (z + c - 1) m + 1 = 0.  For Im z != 0 the transform
    is the root with Im(m) Im(z) > 0 (the Herglotz property).  On the real
    axis outside the support the correct branch is the one continuous with
    the -1/z decay at infinity; tracking the two real roots from there shows
    it is the algebraically larger root to the right of b and for z < 0, and
    the smaller root in the gap between 0 and a.
    """
    zz = complex(z)
    if not (math.isfinite(zz.real) and math.isfinite(zz.imag)):
        raise DomainError(f"z must be finite, got {z!r}")
    c = model.c
    if zz.imag == 0.0:
        x = zz.real
        if model.a <= x <= model.b:
            raise DomainError(
                f"z = {x!r} lies in the support [{model.a!r}, {model.b!r}] "
                "where the transform has no boundary value")
        if x == 0.0 and c > 1.0:
            raise DomainError("z = 0 sits on the point mass when c > 1")

    a_coef = c * zz
    b_coef = zz + c - 1.0
    if a_coef == 0:
        # z == 0, reachable only for c < 1: the quadratic degenerates to linear
        return complex(1.0 / (1.0 - c))
    root = cmath.sqrt(b_coef * b_coef - 4.0 * a_coef)
    if (b_coef.conjugate() * root).real < 0.0:
        root = -root
    q = -0.5 * (b_coef + root)
    r1 = q / a_coef
    r2 = 1.0 / q

    if zz.imag != 0.0:
        return r1 if r1.imag * zz.imag > 0.0 else r2
    v1, v2 = r1.real, r2.real
    if 0.0 < zz.real < model.a:
        return complex(min(v1, v2))
    return complex(max(v1, v2))


def companion_m(model: MpModel, z) -> complex:
    """Companion transform: the Stieltjes transform of the flipped-shape spectrum.

    Computed through mdot(z) = -(1 - c)/z + c m(z); ``companion_inverse``
    undoes it, and ``inverse_map_residual`` measures how well.
    """
    zz = complex(z)
    if zz == 0:
        raise DomainError("companion transform is undefined at z = 0")
    md = -(1.0 - model.c) / zz + model.c * stieltjes_m(model, zz)
    if md == 0 or md == -1.0:
        raise SingularBranchError(f"companion transform hit the pole value {md!r}")
    return md


def companion_inverse(model: MpModel, mdot) -> complex:
    """Inverse map z(mdot) = -1/mdot + c/(1 + mdot) of the companion transform."""
    md = complex(mdot)
    if md == 0 or md == -1.0:
        raise SingularBranchError(f"inverse map has a pole at mdot = {md!r}")
    return -1.0 / md + model.c / (1.0 + md)


def fixed_point_residual(model: MpModel, z) -> float:
    """|m - 1/(1 - c - c z m - z)| at the computed transform value."""
    zz = complex(z)
    m = stieltjes_m(model, zz)
    return abs(m - 1.0 / (1.0 - model.c - model.c * zz * m - zz))


def inverse_map_residual(model: MpModel, z) -> float:
    """|z - z(mdot(z))|, the round-trip error of the companion transform."""
    zz = complex(z)
    return abs(zz - companion_inverse(model, companion_m(model, zz)))


@lru_cache(maxsize=256)
def _inverse_moments_cached(c: float, spec: QuadratureSpec) -> tuple[float, float]:
    model = MpModel(c)
    m1 = integral_f(model, lambda x: 1.0 / x, spec)
    m2 = integral_f(model, lambda x: 1.0 / (x * x), spec)
    return m1, m2


def inverse_moments(model: MpModel,
                    spec: QuadratureSpec = DEFAULT_QUADRATURE) -> tuple[float, float]:
    """First two inverse moments of the law; defined only for c < 1.

    Returns (integral of 1/x, integral of 1/x^2), both by quadrature.  For
    c >= 1 the support touches the origin and both integrals diverge.
    Results are cached per (c, spec) since the test pipeline evaluates the
    same ratio thousands of times.
    """
    if model.c >= 1.0:
        raise DomainError(
            f"inverse moments diverge for c >= 1 (support reaches the origin), got c = {model.c!r}")
    return _inverse_moments_cached(model.c, spec)
