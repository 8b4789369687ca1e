"""Discretized L2[0, 1]: grids, trapezoidal quadrature, curves and basis families.

Every curve lives on a uniform grid over [0, 1]. Inner products are the
trapezoidal quadrature sum ``sum_i w_i f(t_i) g(t_i)``. Two grids are
compatible iff they have the same number of points, since a uniform grid on
[0, 1] is determined by its size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .errors import IncompatibleGridsError, InvalidArgumentError, ShapeError

BasisKind = Literal["fourier_cosine", "brownian_kl", "empirical"]

DEFAULT_GRID_POINTS = 256


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform grid on [0, 1] with trapezoidal weights summing to one."""

    n_points: int
    points: np.ndarray
    weights: np.ndarray

    def __eq__(self, other):
        return isinstance(other, Grid) and self.n_points == other.n_points

    def __hash__(self):
        return hash(("Grid", self.n_points))

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)


def make_grid(n_points: int = DEFAULT_GRID_POINTS) -> Grid:
    """Uniform grid with ``n_points`` abscissae and trapezoidal weights."""
    if int(n_points) != n_points or n_points < 2:
        raise InvalidArgumentError(f"n_points must be an integer >= 2, got {n_points}")
    n_points = int(n_points)
    h = 1.0 / (n_points - 1)
    points = np.linspace(0.0, 1.0, n_points)
    weights = np.full(n_points, h)
    weights[0] = weights[-1] = h / 2
    return Grid(n_points, _frozen(points), _frozen(weights))


def check_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise IncompatibleGridsError(
            f"curves live on different grids ({a.n_points} vs {b.n_points} points)"
        )


@dataclass(frozen=True, eq=False)
class Curve:
    """A single function sampled on ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != (self.grid.n_points,):
            raise ShapeError(
                f"curve has {values.shape} values, grid has {self.grid.n_points} points"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("curve values must be finite")
        object.__setattr__(self, "values", values)

    def __add__(self, other: Curve) -> Curve:
        check_same_grid(self.grid, other.grid)
        return Curve(self.grid, self.values + other.values)

    def __sub__(self, other: Curve) -> Curve:
        check_same_grid(self.grid, other.grid)
        return Curve(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> Curve:
        return Curve(self.grid, c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> Curve:
        return Curve(self.grid, -self.values)

    def norm(self) -> float:
        return float(np.sqrt(inner_product(self, self)))


@dataclass(frozen=True, eq=False)
class CurveSet:
    """``n`` curves on a shared grid, stored row-wise as an ``(n, N)`` array."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2 or values.shape[1] != self.grid.n_points:
            raise ShapeError(
                f"expected an (n, {self.grid.n_points}) array, got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("curve values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_curves(cls, curves) -> CurveSet:
        curves = list(curves)
        if not curves:
            raise InvalidArgumentError("need at least one curve")
        grid = curves[0].grid
        for c in curves[1:]:
            check_same_grid(grid, c.grid)
        return cls(grid, np.stack([c.values for c in curves]))

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, i: int) -> Curve:
        return Curve(self.grid, self.values[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def take(self, idx) -> CurveSet:
        if not isinstance(idx, slice):
            idx = np.asarray(idx)
        return CurveSet(self.grid, self.values[idx])


def inner_product(f: Curve, g: Curve) -> float:
    """Quadrature inner product ``sum_i w_i f(t_i) g(t_i)``.

    The pointwise product is formed first so the result is exactly symmetric.
    """
    check_same_grid(f.grid, g.grid)
    return float(np.dot(f.grid.weights, f.values * g.values))


def gram(a: CurveSet, b: CurveSet) -> np.ndarray:
    """Matrix of pairwise quadrature inner products between two curve sets."""
    check_same_grid(a.grid, b.grid)
    return (a.values * a.grid.weights) @ b.values.T


@dataclass(frozen=True, eq=False)
class BasisFamily:
    """An orthonormal family of functions on [0, 1].

    Analytic kinds are evaluated from closed forms on any grid; the
    ``empirical`` kind carries its functions as a :class:`CurveSet`.
    """

    kind: BasisKind
    count: int
    functions: Optional[CurveSet] = None

    def __post_init__(self):
        if self.kind not in ("fourier_cosine", "brownian_kl", "empirical"):
            raise InvalidArgumentError(f"unknown basis kind {self.kind!r}")
        if self.count < 1:
            raise InvalidArgumentError("basis count must be positive")
        if self.kind == "empirical":
            if self.functions is None or len(self.functions) < self.count:
                raise InvalidArgumentError("empirical basis needs `count` functions")

    @classmethod
    def empirical(cls, functions: CurveSet) -> BasisFamily:
        return cls("empirical", len(functions), functions)

    def matrix(self, grid: Grid, m: Optional[int] = None) -> np.ndarray:
        """Values of the first ``m`` functions on ``grid`` as an ``(m, N)`` array."""
        m = self.count if m is None else m
        if not 1 <= m <= self.count:
            raise IndexError(f"basis has {self.count} functions, asked for {m}")
        t = grid.points
        if self.kind == "fourier_cosine":
            j = np.arange(m)[:, None]
            out = np.sqrt(2.0) * np.cos(j * np.pi * t[None, :])
            out[0] = 1.0
            return out
        if self.kind == "brownian_kl":
            k = np.arange(1, m + 1)[:, None]
            return np.sqrt(2.0) * np.sin((k - 0.5) * np.pi * t[None, :])
        check_same_grid(self.functions.grid, grid)
        return np.array(self.functions.values[:m])


def brownian_kl_eigenvalues(m: int) -> np.ndarray:
    """Eigenvalues ``((k - 1/2) pi)^-2`` of the standard Brownian covariance."""
    k = np.arange(1, m + 1)
    return 1.0 / ((k - 0.5) * np.pi) ** 2


def eval_basis(family: BasisFamily, j: int, grid: Grid) -> Curve:
    """The ``j``-th (1-based) function of ``family`` on ``grid``."""
    if not 1 <= j <= family.count:
        raise IndexError(f"basis index {j} out of range 1..{family.count}")
    return Curve(grid, family.matrix(grid, j)[j - 1])


def project_coeffs(f, family: BasisFamily, m: int) -> np.ndarray:
    """Quadrature coefficients ``<f, phi_j>``, j = 1..m.

    ``f`` may be a :class:`Curve` (returns shape ``(m,)``) or a
    :class:`CurveSet` (returns shape ``(n, m)``).
    """
    if family.kind == "empirical":
        check_same_grid(f.grid, family.functions.grid)
    basis = family.matrix(f.grid, m)
    if isinstance(f, CurveSet):
        return (f.values * f.grid.weights) @ basis.T
    return basis @ (f.grid.weights * f.values)


def synthesize(coeffs: np.ndarray, family: BasisFamily, grid: Grid):
    """Inverse of :func:`project_coeffs`: ``sum_j c_j phi_j`` on ``grid``."""
    coeffs = np.asarray(coeffs, dtype=float)
    basis = family.matrix(grid, coeffs.shape[-1])
    if coeffs.ndim == 1:
        return Curve(grid, coeffs @ basis)
    return CurveSet(grid, coeffs @ basis)
