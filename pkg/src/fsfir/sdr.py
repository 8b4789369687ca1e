"""Functional sufficient dimension reduction estimators.

Three estimators of the central subspace for a curve-valued predictor:

* ``fsfir``: slicing-free inverse regression. Centers the curves, truncates
  to the leading ``m`` sample FPC directions, forms the MDDO estimate in
  score coordinates, takes its top ``d`` eigenvectors and applies the
  pseudo-inverse of the truncated covariance. In sample eigenfunction
  coordinates the truncated covariance is ``diag(lambda_1..lambda_m)`` so the
  pseudo-inverse is a componentwise division.
* ``tfsir``: truncated functional SIR with ``H`` response slices.
* ``rfsir``: ridge-regularized functional SIR, whitening with
  ``(Gamma + rho I)^{-1/2}`` instead of truncating.

The solver classes prepare the expensive parts (FPCA, MDDO, slice means) once
at the largest requested truncation so that sweeps over ``m`` or ``rho`` are
cheap; the ``*_fit`` functions are one-shot wrappers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import eigh

from . import fpca
from .errors import (
    DegenerateSpectrumWarning,
    InvalidArgumentError,
    ShapeError,
    TooManySlicesError,
    UnsupportedResponseError,
)
from .funcspace import BasisFamily, Curve, CurveSet, check_same_grid
from .mdd import DEFAULT_BLOCK, canonical_order, mddo_hat

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SdrModel:
    """Fitted reduction: unit-norm directions plus the data used to fit them.

    ``coords`` holds the unit-norm directions in the coordinates of ``eig``,
    ``hyper`` the tuning values (``m``, ``rho``, ``H``,
    ``basis_size``) relevant to ``method``.
    """

    method: str
    d: int
    directions: CurveSet
    mean: Curve
    eig: fpca.EigenSystem
    hyper: dict
    coords: np.ndarray
    target_eigenvalues: np.ndarray
    warnings: Tuple[str, ...] = field(default=())

    @property
    def grid(self):
        return self.mean.grid


def _response_matrix(Y, n: int) -> np.ndarray:
    y = np.asarray(Y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.shape[0] != n:
        raise ShapeError(f"Y must have {n} rows, got shape {y.shape}")
    if y.shape[1] < 1:
        raise ShapeError("Y needs at least one column")
    if not np.all(np.isfinite(y)):
        raise InvalidArgumentError("Y contains non-finite values")
    return y


def _top_eigvecs(a: np.ndarray, d: int) -> Tuple[np.ndarray, np.ndarray]:
    vals, vecs = eigh((a + a.T) / 2)
    return vals[::-1], vecs[:, ::-1][:, :d]


def _check_degenerate(vals: np.ndarray, d: int, label: str) -> Tuple[str, ...]:
    if vals[d - 1] <= DEGENERATE_TOL * max(vals[0], 0.0):
        msg = (
            f"{label}: eigenvalue {d} ({vals[d - 1]:.3e}) is degenerate relative to "
            f"the leading eigenvalue ({vals[0]:.3e})"
        )
        warnings.warn(msg, DegenerateSpectrumWarning, stacklevel=3)
        return (msg,)
    return ()


def _directions(coords: np.ndarray, eig: fpca.EigenSystem) -> Tuple[np.ndarray, CurveSet]:
    """Map ``(m, d)`` coordinates to unit-norm, sign-fixed curves."""
    phi = eig.eigenfunctions
    coords = np.array(coords, dtype=float)
    for k in range(coords.shape[1]):
        c = coords[:, k]
        # phi is quadrature-orthonormal, so the curve norm is the coefficient norm
        norm = np.linalg.norm(c)
        if norm > 0:
            c /= norm
        if c[np.argmax(np.abs(c))] < 0:
            c *= -1
    values = coords.T @ phi.values[: coords.shape[0]]
    w = phi.grid.weights
    norms = np.sqrt(np.sum(values * values * w, axis=1))
    values = values / np.where(norms > 0, norms, 1.0)[:, None]
    return coords, CurveSet(phi.grid, values)


def _prepare_fpca(X: CurveSet, m: int):
    centered, mean = fpca.center(X)
    cov = fpca.sample_covariance(centered)
    vals, phi = fpca.full_eigensystem(cov)
    if m > min(X.grid.n_points, len(X)):
        raise InvalidArgumentError(
            f"m = {m} exceeds min(grid points, n) = {min(X.grid.n_points, len(X))}"
        )
    return centered, mean, vals, phi


def _eigsys(vals, phi, grid, m: int) -> fpca.EigenSystem:
    if not vals[0] > 0 or vals[m - 1] < fpca.RANK_TOL * vals[0]:
        raise fpca.RankDeficientError(
            f"lambda_{m} = {vals[m - 1]:.3e} is below {fpca.RANK_TOL:g} * lambda_1; "
            f"numerical rank is {fpca.numerical_rank(vals)}"
        )
    return fpca.EigenSystem(vals[:m].copy(), CurveSet(grid, phi[:m]))


class FsfirSolver:
    """FSFIR prepared up to truncation ``m_max``.

    Sample rows are put in a canonical order first, so the fit is
    bit-identical under any permutation of the input samples. With
    ``basis`` given, truncation uses that fixed orthonormal family instead of
    the sample eigenfunctions and the covariance pseudo-inverse is formed
    explicitly.
    """

    def __init__(
        self,
        X: CurveSet,
        Y,
        m_max: int,
        block: int = DEFAULT_BLOCK,
        basis: Optional[BasisFamily] = None,
    ):
        n = len(X)
        y = _response_matrix(Y, n)
        if m_max < 1 or n <= m_max:
            raise InvalidArgumentError(f"need n > m >= 1, got n={n}, m={m_max}")
        order = canonical_order(y, X.values)
        X = X.take(order)
        y = y[order]
        self.grid = X.grid
        self.n = n
        self.m_max = m_max
        self.basis = basis
        if basis is None:
            self.centered, self.mean, self._vals, self._phi = _prepare_fpca(X, m_max)
            eig = fpca.EigenSystem(self._vals[:m_max], CurveSet(self.grid, self._phi[:m_max]))
        else:
            self.centered, self.mean = fpca.center(X)
            eig = fpca.EigenSystem(
                np.ones(m_max), CurveSet(self.grid, basis.matrix(self.grid, m_max))
            )
        self.scores = fpca.scores(self.centered, eig)
        if basis is not None:
            self.scores = self.scores - self.scores.mean(axis=0)
        self.mddo = mddo_hat(self.scores, y, block=block)
        self._basis_eig = eig

    def fit(self, m: int, d: int) -> SdrModel:
        if not 1 <= d <= m <= self.m_max:
            raise InvalidArgumentError(f"need 1 <= d <= m <= {self.m_max}, got d={d}, m={m}")
        mddo = self.mddo[:m, :m]
        mu, gamma = _top_eigvecs(mddo, d)
        gamma = fpca.fix_signs(gamma.T).T
        notes = _check_degenerate(mu, d, "fsfir MDDO spectrum")
        if self.basis is None:
            eig = _eigsys(self._vals, self._phi, self.grid, m)
            coords = gamma / eig.eigenvalues[:, None]
        else:
            eig = self._basis_eig.truncate(m)
            s = self.scores[:, :m]
            gamma_m = (s.T @ s) / self.n
            coords = np.linalg.pinv(gamma_m, hermitian=True) @ gamma
        coords, dirs = _directions(coords, eig)
        return SdrModel(
            method="fsfir",
            d=d,
            directions=dirs,
            mean=self.mean,
            eig=eig,
            hyper={"m": m},
            coords=coords,
            target_eigenvalues=mu,
            warnings=notes,
        )


def fsfir_fit(
    X: CurveSet,
    Y,
    m: int,
    d: int,
    block: int = DEFAULT_BLOCK,
    basis: Optional[BasisFamily] = None,
) -> SdrModel:
    """Slicing-free functional inverse regression with truncation ``m``."""
    if d < 1 or d > m:
        raise InvalidArgumentError(f"need 1 <= d <= m, got d={d}, m={m}")
    return FsfirSolver(X, Y, m, block=block, basis=basis).fit(m, d)


def slice_labels(y: np.ndarray, H: int) -> np.ndarray:
    """Slice index per sample: sort by ``y`` (stable), ``n // H`` per slice,
    the remainder going to the last slice."""
    n = len(y)
    order = np.argsort(y, kind="stable")
    size = n // H
    labels = np.empty(n, dtype=int)
    ranks = np.minimum(np.arange(n) // size, H - 1)
    labels[order] = ranks
    return labels


class _SlicedSolver:
    """Shared preparation for the slice-based estimators."""

    def __init__(self, X: CurveSet, Y, H: int, m_max: int, cap_to_rank: bool = False):
        n = len(X)
        y = _response_matrix(Y, n)
        if y.shape[1] != 1:
            raise UnsupportedResponseError(
                f"slice-based estimators need a univariate response, got q={y.shape[1]}"
            )
        if H < 2:
            raise InvalidArgumentError(f"need H >= 2 slices, got {H}")
        if H > n / 2:
            raise TooManySlicesError(f"H = {H} exceeds n/2 = {n / 2}")
        self.grid = X.grid
        self.n = n
        self.H = H
        if cap_to_rank:
            m_max = min(m_max, X.grid.n_points, n - 1)
        self.centered, self.mean, self._vals, self._phi = _prepare_fpca(X, m_max)
        if cap_to_rank:
            m_max = max(1, min(m_max, fpca.numerical_rank(self._vals)))
        self.m_max = m_max
        eig = fpca.EigenSystem(self._vals[:m_max], CurveSet(self.grid, self._phi[:m_max]))
        s = fpca.scores(self.centered, eig)
        y = y[:, 0]
        if np.all(y == y[0]):
            # no response variation: every slice mean is the global mean
            self.slice_cov = np.zeros((m_max, m_max))
        else:
            labels = slice_labels(y, H)
            means = np.stack([s[labels == h].mean(axis=0) for h in range(H)])
            self.slice_cov = (means.T @ means) / H
        self.labels = None if np.all(y == y[0]) else labels

    def _finish(self, method, d, whiten, m, hyper, label) -> SdrModel:
        eig = _eigsys(self._vals, self._phi, self.grid, m)
        lam = self.slice_cov[:m, :m]
        k = whiten[:, None] * lam * whiten[None, :]
        mu, u = _top_eigvecs(k, d)
        u = fpca.fix_signs(u.T).T
        notes = _check_degenerate(mu, d, label)
        coords, dirs = _directions(whiten[:, None] * u, eig)
        return SdrModel(
            method=method,
            d=d,
            directions=dirs,
            mean=self.mean,
            eig=eig,
            hyper=hyper,
            coords=coords,
            target_eigenvalues=mu,
            warnings=notes,
        )


class TfsirSolver(_SlicedSolver):
    def fit(self, m: int, d: int) -> SdrModel:
        if not 1 <= d <= m <= self.m_max:
            raise InvalidArgumentError(f"need 1 <= d <= m <= {self.m_max}, got d={d}, m={m}")
        eig = _eigsys(self._vals, self._phi, self.grid, m)
        whiten = 1.0 / np.sqrt(eig.eigenvalues)
        return self._finish("tfsir", d, whiten, m, {"m": m, "H": self.H}, "tfsir slice spectrum")


class RfsirSolver(_SlicedSolver):
    def __init__(self, X: CurveSet, Y, H: int, basis_size: int = 100):
        if basis_size < 1:
            raise InvalidArgumentError("basis_size must be positive")
        super().__init__(X, Y, H, basis_size, cap_to_rank=True)
        self.basis_size = self.m_max

    def fit(self, rho: float, d: int) -> SdrModel:
        if not rho > 0:
            raise InvalidArgumentError(f"rho must be positive, got {rho}")
        if not 1 <= d <= self.basis_size:
            raise InvalidArgumentError(f"need 1 <= d <= {self.basis_size}, got {d}")
        m = self.basis_size
        whiten = 1.0 / np.sqrt(self._vals[:m] + rho)
        hyper = {"rho": rho, "H": self.H, "basis_size": m}
        return self._finish("rfsir", d, whiten, m, hyper, "rfsir slice spectrum")


def tfsir_fit(X: CurveSet, Y, m: int, H: int, d: int) -> SdrModel:
    """Truncated functional SIR."""
    if d < 1 or d > m:
        raise InvalidArgumentError(f"need 1 <= d <= m, got d={d}, m={m}")
    return TfsirSolver(X, Y, H, m).fit(m, d)


def rfsir_fit(X: CurveSet, Y, rho: float, H: int, d: int, basis_size: int = 100) -> SdrModel:
    """Ridge-regularized functional SIR."""
    return RfsirSolver(X, Y, H, basis_size).fit(rho, d)


def reduce(model: SdrModel, X):
    """Reduced coordinates ``<X - mean, beta_k>``.

    Returns a ``d``-vector for a :class:`Curve` and an ``(n, d)`` matrix for a
    :class:`CurveSet`.
    """
    check_same_grid(model.grid, X.grid)
    w = X.grid.weights
    b = model.directions.values
    if isinstance(X, CurveSet):
        return ((X.values - model.mean.values) * w) @ b.T
    return b @ (w * (X.values - model.mean.values))
