"""Sample martingale difference divergence matrix (MDDM) and operator.

For paired rows ``(V_h, U_h)`` the estimator is

    MDDM_n(V | U) = -(1/n^2) sum_{h,l} (V_h - Vbar)(V_l - Vbar)^T ||U_h - U_l||,

evaluated as ``-(1/n^2) Vc^T D Vc`` with ``D`` the Euclidean distance matrix
of the rows of ``U``. ``D`` is never materialized: it is built one row-block
at a time, so memory is ``O(block * n)``.
"""

from __future__ import annotations

import numpy as np

from .errors import InsufficientSamplesError, InvalidArgumentError, ShapeError

DEFAULT_BLOCK = 1024
CENTER_TOL = 1e-8


def _as_2d(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ShapeError(f"{name} must be a vector or a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return a


def canonical_order(*arrays: np.ndarray) -> np.ndarray:
    """Row order that depends only on the multiset of rows.

    Rows are sorted lexicographically by the columns of ``arrays[0]``, then
    ``arrays[1]`` and so on; any permutation of the input rows yields the same
    sorted sequence, which makes downstream floating-point sums bit-identical.
    """
    first = arrays[0]
    keys = [first[:, j] for j in range(first.shape[1] - 1, -1, -1)]
    order = np.lexsort(keys)
    s = first[order]
    tied = np.any(np.all(s[1:] == s[:-1], axis=1))
    if not tied:
        return order
    cols = np.hstack(arrays)
    keys = [cols[:, j] for j in range(cols.shape[1] - 1, -1, -1)]
    return np.lexsort(keys)


def _pairwise_block(u_block: np.ndarray, u: np.ndarray) -> np.ndarray:
    if u.shape[1] == 1:
        return np.abs(u_block[:, :1] - u[:, 0][None, :])
    diff = u_block[:, None, :] - u[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _blocked_quadratic(vc: np.ndarray, u: np.ndarray, block: int) -> np.ndarray:
    """``Vc^T D Vc`` accumulated over row-blocks of ``D`` in index order."""
    n, p = vc.shape
    acc = np.zeros((p, p))
    # rows per block shrink for q > 1 to bound the (block, n, q) difference tensor
    if u.shape[1] > 1:
        block = max(1, min(block, (1 << 24) // max(1, n * u.shape[1])))
    for start in range(0, n, block):
        stop = min(start + block, n)
        d = _pairwise_block(u[start:stop], u)
        acc += vc[start:stop].T @ (d @ vc)
    return acc


def mddm_n(V, U, block: int = DEFAULT_BLOCK) -> np.ndarray:
    """Sample MDDM of ``V`` (n x p) given ``U`` (n x q); returns a p x p matrix.

    The result is exactly symmetric and does not depend on the order of the
    sample rows (rows are put into a canonical order first).
    """
    v = _as_2d(V, "V")
    u = _as_2d(U, "U")
    n = v.shape[0]
    if u.shape[0] != n:
        raise ShapeError(f"V has {n} rows but U has {u.shape[0]}")
    if n < 2:
        raise InsufficientSamplesError(f"MDDM needs n >= 2, got {n}")
    if int(block) != block or block <= 0:
        raise InvalidArgumentError(f"block must be a positive integer, got {block}")
    order = canonical_order(u, v)
    v, u = v[order], u[order]
    vc = v - v.mean(axis=0)
    acc = _blocked_quadratic(vc, u, int(block))
    out = -(acc + acc.T) / (2.0 * n * n)
    return out


def mddo_hat(scores, Y, block: int = DEFAULT_BLOCK) -> np.ndarray:
    """MDDO estimate in score coordinates from centered FPC scores.

    ``scores`` must already be column-centered (as produced by
    :func:`fsfir.fpca.scores` on centered curves).
    """
    s = _as_2d(scores, "scores")
    if int(block) != block or block <= 0:
        raise InvalidArgumentError(f"block must be a positive integer, got {block}")
    scale = max(1.0, float(np.max(np.abs(s)))) if s.size else 1.0
    if s.shape[0] and np.max(np.abs(s.mean(axis=0))) > CENTER_TOL * scale:
        raise InvalidArgumentError("scores must be column-centered")
    return mddm_n(s, Y, block=block)


def mddm_naive(V, U) -> np.ndarray:
    """Direct double sum over all sample pairs; O(n^2 p^2). Test oracle only."""
    v = _as_2d(V, "V")
    u = _as_2d(U, "U")
    n, p = v.shape
    vc = v - v.mean(axis=0)
    out = np.zeros((p, p))
    for h in range(n):
        for l in range(n):
            dist = np.sqrt(np.sum((u[h] - u[l]) ** 2))
            out -= np.outer(vc[h], vc[l]) * dist
    return out / (n * n)
