"""Seeded Monte Carlo harness for the asymptotic claims.

Streams are keyed by (seed, replicate index) through SeedSequence spawn keys
on a counter-based generator, so a replicate's draws depend only on the
config and its index, never on scheduling.  Replicates may run on a thread
pool; BLAS is pinned to one thread inside the pool so per-replicate
arithmetic is identical under any thread count, and results are assembled by
replicate index.  Reports are therefore bit-identical across reruns.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import ndtr
from threadpoolctl import threadpool_limits

from .errors import (
    DegenerateDataError,
    DomainError,
    EvaluationError,
    ExperimentError,
    HidimT2Error,
)
from .inference import bilinear_variance, process_covariance, standardize_t2
from .mp_law import DEFAULT_QUADRATURE, MpModel, integral_f, stieltjes_m
from .spectral import (
    DataMatrix,
    centered_cov,
    hotelling_t2,
    resolvent_bilinear,
    sample_mean,
    spectral_decomp,
)

__all__ = [
    "THREADS_ENV",
    "EntryDistribution",
    "SimConfig",
    "SimReport",
    "CovarianceEstimate",
    "ks_statistic",
    "generate_data",
    "truncate_centralize",
    "run_t2_experiment",
    "run_bilinear_experiment",
    "run_mean_norm_experiment",
    "estimate_process_covariance",
]

THREADS_ENV = "HIDIM_T2_THREADS"

_KINDS = ("gaussian", "rademacher", "shifted_exponential", "student_t")

# replicate failures beyond this share abort the experiment
_FAILURE_SHARE = 0.01


@dataclass(frozen=True)
class EntryDistribution:
    """Entry law for the data panel, standardized to mean 0 and variance 1.

    student_t requires df > 4 so the fourth moment is finite; its draws are
    scaled by the analytic sqrt((df - 2)/df).  shifted_exponential is a unit
    exponential minus one.  Standardization constants are never estimated.
    """

    kind: str
    df: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.kind == "student_t":
            if not isinstance(self.df, int) or self.df <= 4:
                raise DomainError(
                    f"student_t needs an integer df > 4 for a finite fourth moment, got {self.df!r}")
        elif self.df is not None:
            raise DomainError(f"df applies only to student_t, got df = {self.df!r} for {self.kind}")

    def truncated_moments(self, threshold: float) -> tuple[float, float]:
        """Population mean and sd of the entry law clamped to zero beyond threshold.

        These are the deterministic centering and scaling constants for the
        truncation preprocessing; closed forms where the law allows, adaptive
        quadrature for student_t.  sd is of the clamped variable after
        subtracting its mean.
        """
        if not (math.isfinite(threshold) and threshold > 0.0):
            raise DomainError(f"threshold must be positive, got {threshold!r}")
        return _truncated_moments_cached(self.kind, self.df, float(threshold))


@lru_cache(maxsize=256)
def _truncated_moments_cached(kind: str, df: int | None, t: float) -> tuple[float, float]:
    if kind == "gaussian":
        # E[X^2 1(|X|<=t)] = 1 - 2 t phi(t) - 2 (1 - Phi(t)) by parts
        phi_t = math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
        tail = float(ndtr(-t))
        second = 1.0 - 2.0 * t * phi_t - 2.0 * tail
        return 0.0, math.sqrt(max(second, 0.0))
    if kind == "rademacher":
        if t < 1.0:
            return 0.0, 0.0
        return 0.0, 1.0
    if kind == "shifted_exponential":
        # X = E - 1 with E ~ Exp(1); the window |x| <= t maps to E in [lo, hi]
        lo, hi = max(0.0, 1.0 - t), 1.0 + t
        mean = lo * math.exp(-lo) - hi * math.exp(-hi)
        second = (lo * lo + 1.0) * math.exp(-lo) - (hi * hi + 1.0) * math.exp(-hi)
        return mean, math.sqrt(max(second - mean * mean, 0.0))
    scale = math.sqrt((df - 2) / df)
    halfnu = 0.5 * df
    lognorm = (math.lgamma(halfnu + 0.5) - math.lgamma(halfnu)
               - 0.5 * math.log(df * math.pi))

    def second_integrand(x: float) -> float:
        logpdf = lognorm - (halfnu + 0.5) * math.log1p(x * x / df)
        return x * x * math.exp(logpdf)

    raw, _ = integrate.quad(second_integrand, 0.0, t / scale,
                            epsabs=1e-13, epsrel=1e-13)
    return 0.0, scale * math.sqrt(max(2.0 * raw, 0.0))


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo experiment: shape, entry law, location, seed.

    mean_shift is the true location (scalar broadcast or length-p vector);
    experiments under the null use it as the hypothesized location too.
    truncation_exponent e, when set, preprocesses each panel with
    ``truncate_centralize`` at threshold n**(-e); that transform assumes
    centered entries, so it is only accepted with a zero mean_shift.
    """

    n: int
    p: int
    replicates: int
    dist: EntryDistribution
    seed: int
    mean_shift: float | tuple[float, ...] = 0.0
    truncation_exponent: float | None = None

    def __post_init__(self):
        if not (isinstance(self.n, int) and self.n >= 2):
            raise DomainError(f"n must be an integer >= 2, got {self.n!r}")
        if not (isinstance(self.p, int) and self.p >= 1):
            raise DomainError(f"p must be an integer >= 1, got {self.p!r}")
        if not (isinstance(self.replicates, int) and self.replicates >= 1):
            raise DomainError(f"replicates must be an integer >= 1, got {self.replicates!r}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2 ** 64):
            raise DomainError(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        shift = self.mean_shift
        if np.isscalar(shift):
            shift = float(shift)
            if not math.isfinite(shift):
                raise DomainError(f"mean_shift must be finite, got {self.mean_shift!r}")
        else:
            shift = tuple(float(v) for v in shift)
            if len(shift) != self.p:
                raise DomainError(
                    f"mean_shift vector has length {len(shift)}, expected p = {self.p}")
            if not all(math.isfinite(v) for v in shift):
                raise DomainError("mean_shift contains non-finite entries")
        object.__setattr__(self, "mean_shift", shift)
        if self.truncation_exponent is not None:
            exp = float(self.truncation_exponent)
            if not (math.isfinite(exp) and exp > 0.0):
                raise DomainError(
                    f"truncation_exponent must be positive, got {self.truncation_exponent!r}")
            object.__setattr__(self, "truncation_exponent", exp)
            if self._shift_vector().any():
                raise DomainError("truncation preprocessing assumes centered entries; "
                                  "it cannot be combined with a nonzero mean_shift")

    def _shift_vector(self) -> np.ndarray:
        if np.isscalar(self.mean_shift):
            return np.full(self.p, float(self.mean_shift))
        return np.asarray(self.mean_shift, dtype=float)

    @property
    def ratio(self) -> float:
        """Finite-sample aspect ratio p/n."""
        return self.p / self.n


@dataclass(frozen=True, eq=False)
class SimReport:
    """Deterministic result bundle of one experiment.

    zscores are ordered by replicate index with failed replicates removed
    (their indices are listed).  theory_variance is the limit variance of the
    values stored in zscores; ks_statistic compares the zscores standardized
    by that variance against the standard normal.
    """

    zscores: np.ndarray
    ks_statistic: float
    sample_mean_of_z: float
    sample_var_of_z: float
    theory_variance: float
    failures: int
    failed_indices: tuple[int, ...]
    runtime_seconds: float
    config_echo: SimConfig


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    """Empirical covariance of the resolvent process on a grid, with its limit.

    empirical[i, j] is the non-conjugated covariance of the centered
    per-replicate values at (zpoints[i], zpoints[j]); theory holds the closed
    form at the same pairs, both evaluated at the plug-in ratio.
    """

    zpoints: tuple[complex, ...]
    empirical: np.ndarray
    theory: np.ndarray
    replicates: int
    failures: int
    failed_indices: tuple[int, ...]
    runtime_seconds: float
    config_echo: SimConfig


def ks_statistic(sample: Sequence[float]) -> float:
    """Exact sup distance between the sample's empirical CDF and the standard normal.

    The supremum over the real line is attained just left or right of an
    order statistic, so it is the maximum over 2 * len(sample) candidates.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    r = x.size
    if r == 0:
        raise DomainError("ks_statistic needs a nonempty sample")
    ref = ndtr(x)
    upper = np.arange(1, r + 1) / r - ref
    lower = ref - np.arange(0, r) / r
    return float(max(upper.max(), lower.max(), 0.0))


def generate_data(config: SimConfig, replicate_index: int) -> DataMatrix:
    """Draw the p-by-n panel for one replicate.

    The stream is Philox seeded by SeedSequence(seed, spawn_key=(index,)),
    so the same (seed, index) always yields the same panel and distinct
    indices are independent regardless of generation order.
    """
    if not (isinstance(replicate_index, int) and replicate_index >= 0):
        raise DomainError(f"replicate_index must be a nonnegative integer, got {replicate_index!r}")
    seq = np.random.SeedSequence(entropy=config.seed, spawn_key=(replicate_index,))
    rng = np.random.Generator(np.random.Philox(seq))
    shape = (config.p, config.n)
    kind = config.dist.kind
    if kind == "gaussian":
        draws = rng.standard_normal(shape)
    elif kind == "rademacher":
        draws = rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
    elif kind == "shifted_exponential":
        draws = rng.standard_exponential(shape) - 1.0
    else:
        df = config.dist.df
        draws = rng.standard_t(df, size=shape) * math.sqrt((df - 2) / df)
    return DataMatrix(draws + config._shift_vector()[:, None])


def truncate_centralize(data: DataMatrix, epsilon: float,
                        center: float | None = None,
                        scale: float | None = None) -> DataMatrix:
    """Clamp entries beyond epsilon * sqrt(n) to zero, then restandardize.

    Controls fourth-moment tails without changing limit behaviour.  By
    default the mean and standard deviation are restored with whole-panel
    empirical plug-ins, the only option when the entry law is unknown; the
    output then has exact zero mean and unit variance with divisor p*n.

    When the law is known, pass its clamped-variable population moments as
    center and scale instead.  Deterministic constants leave the statistic
    far less disturbed: the empirical grand mean is correlated with the
    sample mean it later feeds, and subtracting it perturbs every replicate
    at order 1/sqrt(n) even when nothing was clamped.
    """
    if not (math.isfinite(epsilon) and epsilon > 0.0):
        raise DomainError(f"epsilon must be positive, got {epsilon!r}")
    if (center is None) != (scale is None):
        raise DomainError("center and scale must be given together or not at all")
    v = data.values
    cut = epsilon * math.sqrt(data.n)
    clipped = np.where(np.abs(v) <= cut, v, 0.0)
    if center is None:
        center = float(clipped.mean())
        centered = clipped - center
        scale = math.sqrt(float((centered * centered).mean()))
    else:
        if not (math.isfinite(center) and math.isfinite(scale) and scale >= 0.0):
            raise DomainError(f"bad truncation constants center={center!r} scale={scale!r}")
        centered = clipped - center
    if scale == 0.0:
        raise DegenerateDataError("every entry was truncated away; nothing left to standardize")
    return DataMatrix(centered / scale)


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise DomainError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        else:
            threads = os.cpu_count() or 1
    if not (isinstance(threads, int) and threads >= 1):
        raise DomainError(f"thread count must be a positive integer, got {threads!r}")
    return threads


def _run_replicates(config: SimConfig, worker: Callable[[int], object],
                    threads: int | None):
    """Run worker over every replicate index; deterministic by construction.

    Results land in a per-index slot, semantic errors are recorded per
    replicate, and more than a 1% failure share aborts the experiment.
    """
    nthreads = _resolve_threads(threads)
    slots: list = [None] * config.replicates

    def run_one(i: int) -> None:
        try:
            slots[i] = (True, worker(i))
        except HidimT2Error as exc:
            slots[i] = (False, exc)

    # single BLAS thread per solve keeps floating-point schedules fixed;
    # parallelism comes from the replicate pool instead
    with threadpool_limits(limits=1):
        if nthreads == 1:
            for i in range(config.replicates):
                run_one(i)
        else:
            with ThreadPoolExecutor(max_workers=nthreads) as pool:
                list(pool.map(run_one, range(config.replicates)))

    failed = tuple(i for i, (ok, _) in enumerate(slots) if not ok)
    if len(failed) > _FAILURE_SHARE * config.replicates:
        first = slots[failed[0]][1]
        raise ExperimentError(
            f"{len(failed)} of {config.replicates} replicates failed "
            f"(more than {_FAILURE_SHARE:.0%}); first failure: {first}")
    values = [value for ok, value in slots if ok]
    return values, failed


def _moments(values: np.ndarray) -> tuple[float, float]:
    mean = float(values.mean())
    var = float(values.var(ddof=1)) if values.size >= 2 else 0.0
    return mean, var


def _standardized_ks(values: np.ndarray, theory_variance: float) -> float:
    if theory_variance > 0.0:
        return ks_statistic(values / math.sqrt(theory_variance))
    return ks_statistic(values)


def run_t2_experiment(config: SimConfig, threads: int | None = None) -> SimReport:
    """Full pipeline per replicate: panel, statistic, standardized zscore.

    The hypothesized location equals the generating mean_shift, so the null
    holds by construction and the zscores should look standard normal.  With
    truncation_exponent set, each panel passes through truncate_centralize
    at threshold n**(-e) first.
    """
    if config.p >= config.n:
        raise DomainError(f"the statistic needs p < n, got p = {config.p}, n = {config.n}")
    eps = center = scale = None
    if config.truncation_exponent is not None:
        eps = config.n ** (-config.truncation_exponent)
        # the entry law is known here, so use its deterministic constants
        center, scale = config.dist.truncated_moments(eps * math.sqrt(config.n))
    mu = config._shift_vector()

    def worker(i: int) -> float:
        data = generate_data(config, i)
        if eps is not None:
            data = truncate_centralize(data, eps, center=center, scale=scale)
        t2 = hotelling_t2(data, mu)
        return standardize_t2(t2, config.n, config.p).zscore

    start = time.perf_counter()
    values, failed = _run_replicates(config, worker, threads)
    z = np.asarray(values, dtype=float)
    z.setflags(write=False)
    mean, var = _moments(z)
    return SimReport(zscores=z, ks_statistic=_standardized_ks(z, 1.0),
                     sample_mean_of_z=mean, sample_var_of_z=var,
                     theory_variance=1.0, failures=len(failed), failed_indices=failed,
                     runtime_seconds=time.perf_counter() - start, config_echo=config)


def _require_centered(config: SimConfig, what: str) -> None:
    if config._shift_vector().any():
        raise DomainError(f"{what} assumes centered entries; set mean_shift to zero")


def run_bilinear_experiment(config: SimConfig, f: Callable[[float], float],
                            threads: int | None = None) -> SimReport:
    """Per replicate: sqrt(n) * (normalized quadratic form of f minus its limit).

    zscores hold the raw sqrt(n)-centered values; theory_variance carries
    their limit variance so sample_var_of_z / theory_variance is the quantity
    expected to approach one.
    """
    _require_centered(config, "the quadratic-form limit")
    c_n = config.ratio
    center = integral_f(MpModel(c_n), f, DEFAULT_QUADRATURE)
    theory = bilinear_variance(c_n, f, DEFAULT_QUADRATURE)
    sqrt_n = math.sqrt(config.n)

    def worker(i: int) -> float:
        data = generate_data(config, i)
        sbar = sample_mean(data)
        norm2 = float(sbar @ sbar)
        if norm2 == 0.0:
            raise DomainError("mean vector is zero")
        decomp = spectral_decomp(centered_cov(data))
        t = decomp.eigenvectors.T @ sbar
        fvals = np.array([f(float(ev)) for ev in decomp.eigenvalues])
        if not np.all(np.isfinite(fvals)):
            raise EvaluationError("f is not finite on the sample spectrum")
        value = float(t @ (fvals * t)) / norm2
        return sqrt_n * (value - center)

    start = time.perf_counter()
    values, failed = _run_replicates(config, worker, threads)
    z = np.asarray(values, dtype=float)
    z.setflags(write=False)
    mean, var = _moments(z)
    return SimReport(zscores=z, ks_statistic=_standardized_ks(z, theory),
                     sample_mean_of_z=mean, sample_var_of_z=var,
                     theory_variance=theory, failures=len(failed), failed_indices=failed,
                     runtime_seconds=time.perf_counter() - start, config_echo=config)


def run_mean_norm_experiment(config: SimConfig, threads: int | None = None) -> SimReport:
    """Per replicate: sqrt(n) (||sbar||^2 - c_n) / sqrt(2 c_n), limit standard normal."""
    _require_centered(config, "the mean-norm limit")
    c_n = config.ratio
    sqrt_n = math.sqrt(config.n)
    scale = math.sqrt(2.0 * c_n)

    def worker(i: int) -> float:
        sbar = sample_mean(generate_data(config, i))
        return sqrt_n * (float(sbar @ sbar) - c_n) / scale

    start = time.perf_counter()
    values, failed = _run_replicates(config, worker, threads)
    z = np.asarray(values, dtype=float)
    z.setflags(write=False)
    mean, var = _moments(z)
    return SimReport(zscores=z, ks_statistic=_standardized_ks(z, 1.0),
                     sample_mean_of_z=mean, sample_var_of_z=var,
                     theory_variance=1.0, failures=len(failed), failed_indices=failed,
                     runtime_seconds=time.perf_counter() - start, config_echo=config)


def estimate_process_covariance(config: SimConfig, zpoints: Sequence[complex],
                                threads: int | None = None) -> CovarianceEstimate:
    """Empirical covariance of the centered resolvent process over the grid.

    Per replicate and grid point: sqrt(n) (sbar'(C - zI)^{-1} sbar / ||sbar||^2
    minus the plug-in transform m(z) at c_n), all points served by one
    eigendecomposition.  The estimate is the non-conjugated covariance of the
    centered values, so conjugate grid points produce conjugate rows.
    """
    _require_centered(config, "the resolvent process limit")
    pts = tuple(complex(z) for z in zpoints)
    if not pts:
        raise DomainError("zpoints must be nonempty")
    for z in pts:
        if abs(z.imag) < 0.5:
            raise DomainError(
                f"grid point {z!r} is too close to the real axis; need |Im z| >= 0.5")
    c_n = config.ratio
    model = MpModel(c_n)
    centers = np.array([stieltjes_m(model, z) for z in pts])
    sqrt_n = math.sqrt(config.n)

    def worker(i: int) -> np.ndarray:
        data = generate_data(config, i)
        sbar = sample_mean(data)
        decomp = spectral_decomp(centered_cov(data))
        row = np.array([resolvent_bilinear(decomp, sbar, z) for z in pts])
        return sqrt_n * (row - centers)

    start = time.perf_counter()
    values, failed = _run_replicates(config, worker, threads)
    x = np.asarray(values, dtype=complex)
    centered = x - x.mean(axis=0)
    empirical = centered.T @ centered / x.shape[0]
    k = len(pts)
    theory = np.empty((k, k), dtype=complex)
    for i, zi in enumerate(pts):
        for j, zj in enumerate(pts):
            theory[i, j] = process_covariance(c_n, zi, zj)
    empirical.setflags(write=False)
    theory.setflags(write=False)
    return CovarianceEstimate(zpoints=pts, empirical=empirical, theory=theory,
                              replicates=config.replicates, failures=len(failed),
                              failed_indices=failed,
                              runtime_seconds=time.perf_counter() - start,
                              config_echo=config)
