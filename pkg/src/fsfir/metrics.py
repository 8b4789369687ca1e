"""Projection matrices and the subspace estimation error.

Spans are compared in a fixed orthonormal coordinate system (an analytic
basis family): each direction is projected onto the basis, the coefficient
vectors are orthonormalized by SVD and the projector is ``Q Q^T``. The error
between two spans is the operator norm of the difference of projectors,
which equals the sine of the largest principal angle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError, ShapeError
from .funcspace import BasisFamily, Curve, CurveSet, project_coeffs

RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ProjectionMatrix:
    entries: np.ndarray
    rank: int

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _coefficients(directions, coordinate_basis: Optional[BasisFamily]) -> np.ndarray:
    """Direction coordinates as a ``(k, r)`` array, one row per direction."""
    if isinstance(directions, Curve):
        directions = CurveSet(directions.grid, directions.values[None, :])
    if isinstance(directions, CurveSet):
        if coordinate_basis is None:
            raise InvalidArgumentError("curves need a coordinate basis")
        return project_coeffs(directions, coordinate_basis, coordinate_basis.count)
    if isinstance(directions, (list, tuple)) and directions and isinstance(directions[0], Curve):
        return _coefficients(CurveSet.from_curves(directions), coordinate_basis)
    c = np.atleast_2d(np.asarray(directions, dtype=float))
    if c.ndim != 2:
        raise ShapeError(f"coefficient directions must be 2-D, got {c.shape}")
    return c


def orthonormalize_projection(directions, coordinate_basis: Optional[BasisFamily] = None):
    """Orthogonal projector onto the span of ``directions``.

    ``directions`` is a :class:`CurveSet`, a list of curves, or a ``(k, r)``
    array of coefficient vectors (then ``coordinate_basis`` is not needed).
    """
    c = _coefficients(directions, coordinate_basis)
    if c.shape[0] == 0:
        raise InvalidArgumentError("need at least one direction")
    if np.any(np.all(c == 0, axis=1)):
        raise InvalidArgumentError("directions must be nonzero")
    u, s, _ = np.linalg.svd(c.T, full_matrices=False)
    keep = s > RANK_TOL * s[0]
    q = u[:, keep]
    p = q @ q.T
    return ProjectionMatrix((p + p.T) / 2, int(keep.sum()))


def subspace_distance(B, B_hat, coordinate_basis: Optional[BasisFamily] = None) -> float:
    """``||P_B - P_Bhat||`` in operator norm, a value in [0, 1]."""
    p = orthonormalize_projection(B, coordinate_basis)
    q = orthonormalize_projection(B_hat, coordinate_basis)
    if p.dim != q.dim:
        raise ShapeError(f"coordinate dimensions differ: {p.dim} vs {q.dim}")
    # both orders so the value is exactly symmetric in its arguments
    val = max(np.linalg.norm(p.entries - q.entries, 2), np.linalg.norm(q.entries - p.entries, 2))
    return float(min(max(val, 0.0), 1.0))
