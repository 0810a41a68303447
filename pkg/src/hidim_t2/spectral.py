"""Finite-sample spectral operations behind the corrected location test.

Data panels store one observation per column.  The two covariance forms are
kept apart on purpose: ``gram_cov`` is the uncentered n^{-1} X X' and
``centered_cov`` subtracts the sample mean.  Both use divisor n, not n - 1;
the asymptotic formulas in this package are stated for that normalization,
so the n - 1 convention of most statistics libraries does not apply here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    DomainError,
    EvaluationError,
    RankDeficiencyError,
    SingularMatrixError,
)

__all__ = [
    "CONDITION_LIMIT",
    "DataMatrix",
    "SpectralDecomp",
    "WeightedEsd",
    "sample_mean",
    "gram_cov",
    "centered_cov",
    "spectral_decomp",
    "matrix_function",
    "hotelling_t2",
    "broadcast_mu",
    "weighted_esd",
    "bilinear_form",
    "resolvent_bilinear",
    "resolvent_identity_check",
]

# condition number ceiling for linear solves against the sample covariance
CONDITION_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """p-by-n panel of n observation vectors in dimension p (column = draw)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, order="C", copy=True)
        if arr.ndim != 2:
            raise DomainError(f"data must be two-dimensional, got shape {arr.shape}")
        p, n = arr.shape
        if p < 1 or n < 1:
            raise DomainError(f"data must be nonempty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("data contains non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def ratio(self) -> float:
        """The finite-sample aspect ratio p/n."""
        return self.values.shape[0] / self.values.shape[1]


@dataclass(frozen=True, eq=False)
class SpectralDecomp:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    Column i of ``eigenvectors`` pairs with ``eigenvalues[i]``, so the source
    matrix is U diag(lambda) U'.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sample_mean(data: DataMatrix) -> np.ndarray:
    """Column-wise mean vector of the panel."""
    return data.values.mean(axis=1)


def gram_cov(data: DataMatrix) -> np.ndarray:
    """Uncentered covariance n^{-1} X X'."""
    v = data.values
    s = v @ v.T / data.n
    return 0.5 * (s + s.T)


def centered_cov(data: DataMatrix) -> np.ndarray:
    """Mean-centered covariance with divisor n (not n - 1)."""
    if data.n < 2:
        raise DomainError(f"centered covariance needs at least two observations, got n = {data.n}")
    xc = data.values - sample_mean(data)[:, None]
    s = xc @ xc.T / data.n
    return 0.5 * (s + s.T)


def spectral_decomp(matrix: np.ndarray) -> SpectralDecomp:
    """Eigendecomposition of a symmetric matrix, ascending eigenvalue order."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix contains non-finite entries")
    scale = np.max(np.abs(m)) or 1.0
    if np.max(np.abs(m - m.T)) > 1e-10 * scale:
        raise DomainError("matrix is not symmetric")
    lam, vec = np.linalg.eigh(m)
    lam.setflags(write=False)
    vec.setflags(write=False)
    return SpectralDecomp(eigenvalues=lam, eigenvectors=vec)


def matrix_function(decomp: SpectralDecomp, f: Callable[[float], float]) -> np.ndarray:
    """Apply f on the spectrum: U diag(f(lambda)) U'."""
    lam = decomp.eigenvalues
    fvals = np.empty_like(lam)
    for i, ev in enumerate(lam):
        val = f(float(ev))
        if not math.isfinite(val):
            raise EvaluationError(f"f is not finite at eigenvalue {ev!r}")
        fvals[i] = val
    u = decomp.eigenvectors
    m = (u * fvals) @ u.T
    return 0.5 * (m + m.T)


def broadcast_mu(mu0, p: int) -> np.ndarray:
    """Expand a scalar location to length p; vectors must match p exactly."""
    if np.isscalar(mu0):
        mu = np.full(p, float(mu0))
    else:
        mu = np.asarray(mu0, dtype=float)
        if mu.shape != (p,):
            raise DomainError(
                f"mu0 has shape {mu.shape}, expected a scalar or a vector of length {p}")
    if not np.all(np.isfinite(mu)):
        raise DomainError("mu0 contains non-finite entries")
    return mu


def hotelling_t2(data: DataMatrix, mu0) -> float:
    """Location statistic n (sbar - mu0)' C^{-1} (sbar - mu0).

    C is the centered covariance.  The inverse is never formed: after an
    eigenvalue-based conditioning check the quadratic form comes from a
    Cholesky solve.
    """
    p, n = data.p, data.n
    if p >= n:
        raise RankDeficiencyError(
            f"need p < n for an invertible covariance, got p = {p}, n = {n}")
    mu = broadcast_mu(mu0, p)
    diff = sample_mean(data) - mu
    cov = centered_cov(data)
    lam = np.linalg.eigvalsh(cov)
    smallest, largest = float(lam[0]), float(lam[-1])
    if smallest <= 0.0 or largest / smallest > CONDITION_LIMIT:
        raise SingularMatrixError(
            f"sample covariance is numerically singular: smallest eigenvalue "
            f"{smallest:.6e} against largest {largest:.6e}", eigenvalue=smallest)
    w = cho_solve(cho_factor(cov, lower=True), diff)
    return max(float(n * (diff @ w)), 0.0)


@dataclass(frozen=True, eq=False)
class WeightedEsd:
    """Spectral distribution reweighted by the squared mean-direction loadings.

    ``atoms`` holds (eigenvalue, weight) pairs in ascending eigenvalue order;
    the weights are the squared coordinates of sbar/||sbar|| in the eigenbasis
    and sum to one.
    """

    atoms: tuple[tuple[float, float], ...]

    def integrate(self, f: Callable[[float], float]) -> float:
        """Integral of f against this discrete distribution."""
        return float(sum(w * f(lam) for lam, w in self.atoms))

    def cdf(self, x: float) -> float:
        """Total weight of atoms at or below x."""
        return float(sum(w for lam, w in self.atoms if lam <= x))


def weighted_esd(decomp: SpectralDecomp, sbar: Sequence[float]) -> WeightedEsd:
    """Weighted spectral distribution along the direction of the mean vector."""
    vec = np.asarray(sbar, dtype=float)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise DomainError("mean vector is zero; the weighted distribution is undefined")
    t = decomp.eigenvectors.T @ (vec / norm)
    weights = t * t
    return WeightedEsd(atoms=tuple(
        (float(lam), float(w)) for lam, w in zip(decomp.eigenvalues, weights)))


def bilinear_form(data: DataMatrix, f: Callable[[float], float]) -> float:
    """Normalized quadratic form sbar' f(C) sbar / ||sbar||^2.

    Evaluated through the full matrix function so that ``weighted_esd``'s
    integrate() is an independent second route to the same number.
    """
    sbar = sample_mean(data)
    norm2 = float(sbar @ sbar)
    if norm2 == 0.0:
        raise DomainError("mean vector is zero; the normalized form is undefined")
    decomp = spectral_decomp(centered_cov(data))
    m = matrix_function(decomp, f)
    return float(sbar @ m @ sbar) / norm2


def resolvent_bilinear(decomp: SpectralDecomp, sbar: Sequence[float], z) -> complex:
    """Normalized resolvent form sbar' (C - z I)^{-1} sbar / ||sbar||^2.

    One eigendecomposition serves every z: the form is sum t_i^2/(lambda_i - z)
    over the eigenbasis coordinates t of the normalized mean.
    """
    vec = np.asarray(sbar, dtype=float)
    norm2 = float(vec @ vec)
    if norm2 == 0.0:
        raise DomainError("mean vector is zero; the resolvent form is undefined")
    zz = complex(z)
    t = decomp.eigenvectors.T @ vec
    denom = decomp.eigenvalues - zz
    if np.any(np.abs(denom) == 0.0):
        raise SingularMatrixError(f"z = {z!r} is an eigenvalue; resolvent is singular")
    return complex(np.sum(t * t / denom) / norm2)


def resolvent_identity_check(data: DataMatrix, z) -> float:
    """Residual of the rank-one link between the two covariance resolvents.

    With q(z) = sbar' (S - z I)^{-1} sbar for the uncentered covariance S, the
    centered covariance C = S - sbar sbar' satisfies

        q(z) / (1 - q(z)) = sbar' (C - z I)^{-1} sbar.

    The left side uses a direct complex solve, the right side goes through the
    eigendecomposition of C, so agreement is evidence both routes are sound.
    """
    zz = complex(z)
    if not (math.isfinite(zz.real) and math.isfinite(zz.imag)):
        raise DomainError(f"z must be finite, got {z!r}")
    sbar = sample_mean(data)
    s = gram_cov(data)
    try:
        solved = np.linalg.solve(s - zz * np.eye(data.p), sbar.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"resolvent of the uncentered covariance is singular at z = {z!r}") from exc
    q = complex(sbar @ solved)
    if abs(1.0 - q) < 1e-14:
        raise SingularMatrixError(f"rank-one denominator 1 - q vanished at z = {z!r}")
    lhs = q / (1.0 - q)
    decomp = spectral_decomp(centered_cov(data))
    norm2 = float(sbar @ sbar)
    rhs = resolvent_bilinear(decomp, sbar, zz) * norm2
    return abs(lhs - rhs)
