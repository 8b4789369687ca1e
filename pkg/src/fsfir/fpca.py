"""Sample mean, covariance operator, truncated eigensystem and FPC scores."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import eigh

from .errors import InsufficientSamplesError, InvalidArgumentError, RankDeficientError
from .funcspace import BasisFamily, Curve, CurveSet, Grid, check_same_grid

RANK_TOL = 1e-12
SIGN_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class CovarianceOperator:
    """Integral operator with kernel ``K(t_i, t_j)`` on ``grid``."""

    grid: Grid
    kernel: np.ndarray

    def trace(self) -> float:
        return float(np.dot(self.grid.weights, np.diag(self.kernel)))


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Leading eigenpairs of a covariance operator, eigenvalues descending.

    ``eigenfunctions`` is a :class:`CurveSet` whose rows are orthonormal under
    the grid quadrature.
    """

    eigenvalues: np.ndarray
    eigenfunctions: CurveSet

    @property
    def m(self) -> int:
        return len(self.eigenvalues)

    def truncate(self, m: int) -> EigenSystem:
        if not 1 <= m <= self.m:
            raise InvalidArgumentError(f"cannot truncate {self.m} eigenpairs to {m}")
        return EigenSystem(self.eigenvalues[:m], self.eigenfunctions.take(slice(0, m)))

    def as_basis(self) -> BasisFamily:
        return BasisFamily.empirical(self.eigenfunctions)


def center(samples: CurveSet) -> Tuple[CurveSet, Curve]:
    """Subtract the pointwise sample mean."""
    if len(samples) < 1:
        raise InvalidArgumentError("cannot center an empty sample")
    mean = samples.values.mean(axis=0)
    return CurveSet(samples.grid, samples.values - mean), Curve(samples.grid, mean)


def sample_covariance(centered: CurveSet) -> CovarianceOperator:
    """Kernel ``(1/n) sum_k Z_k(t_i) Z_k(t_j)`` of already-centered curves."""
    n = len(centered)
    if n < 2:
        raise InsufficientSamplesError(f"covariance needs n >= 2, got {n}")
    z = centered.values
    k = (z.T @ z) / n
    return CovarianceOperator(centered.grid, (k + k.T) / 2)


def fix_signs(vectors: np.ndarray, tol: float = SIGN_TOL) -> np.ndarray:
    """Flip rows so that the first entry with ``|v| > tol`` is positive."""
    out = np.array(vectors, dtype=float)
    for row in out:
        big = np.flatnonzero(np.abs(row) > tol)
        if big.size and row[big[0]] < 0:
            row *= -1
    return out


def full_eigensystem(cov: CovarianceOperator) -> Tuple[np.ndarray, np.ndarray]:
    """All eigenpairs of the quadrature-weighted kernel, descending.

    Solves ``W^{1/2} K W^{1/2} u = lambda u`` and maps back with
    ``phi = W^{-1/2} u``. Returns ``(eigenvalues, eigenfunction values)``
    with eigenfunctions row-wise and sign-fixed.
    """
    sw = cov.grid.sqrt_weights
    a = sw[:, None] * cov.kernel * sw[None, :]
    vals, vecs = eigh((a + a.T) / 2)
    vals = np.clip(vals[::-1], 0.0, None)
    phi = vecs[:, ::-1].T / sw[None, :]
    return vals, fix_signs(phi)


def numerical_rank(eigenvalues: np.ndarray, tol: float = RANK_TOL) -> int:
    if eigenvalues.size == 0 or eigenvalues[0] <= 0:
        return 0
    return int(np.sum(eigenvalues >= tol * eigenvalues[0]))


def top_eigensystem(cov: CovarianceOperator, m: int) -> EigenSystem:
    """Top ``m`` eigenpairs; refuses ``m`` beyond the numerical rank."""
    if m < 1 or m > cov.grid.n_points:
        raise InvalidArgumentError(f"m must be in 1..{cov.grid.n_points}, got {m}")
    vals, phi = full_eigensystem(cov)
    if not vals[0] > 0 or vals[m - 1] < RANK_TOL * vals[0]:
        raise RankDeficientError(
            f"lambda_{m} = {vals[m - 1]:.3e} is below {RANK_TOL:g} * lambda_1; "
            f"numerical rank is {numerical_rank(vals)}"
        )
    return EigenSystem(vals[:m].copy(), CurveSet(cov.grid, phi[:m]))


def scores(centered: CurveSet, eig: EigenSystem) -> np.ndarray:
    """``(n, m)`` matrix of inner products ``<Z_i, phi_j>``."""
    check_same_grid(centered.grid, eig.eigenfunctions.grid)
    w = centered.grid.weights
    return (centered.values * w) @ eig.eigenfunctions.values.T
