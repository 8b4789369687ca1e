"""Exact Gaussian-process regression with an RBF kernel.

Hyperparameters are chosen by maximizing the log marginal likelihood over a
finite grid; only posterior means are produced.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.spatial.distance import cdist, pdist

from .errors import IllConditionedKernelError, InvalidArgumentError, ShapeError

JITTER_FLOOR = 1e-10
JITTER_STEPS = 3
LENGTHSCALE_FACTORS = tuple(np.geomspace(0.25, 4.0, 9))
SIGNAL_FACTORS = (0.5, 1.0, 2.0)
NOISE_FACTORS = (0.01, 0.05, 0.1, 0.5)


class GprParams(NamedTuple):
    signal_var: float
    lengthscale: float
    noise_var: float


@dataclass(frozen=True, eq=False)
class GprModel:
    inputs: np.ndarray
    targets: np.ndarray
    params: GprParams
    cho: tuple
    alpha: np.ndarray
    log_marginal_likelihood: float


def rbf_kernel(a: np.ndarray, b: np.ndarray, signal_var: float, lengthscale: float) -> np.ndarray:
    sq = cdist(a, b, "sqeuclidean")
    return signal_var * np.exp(-sq / (2.0 * lengthscale**2))


def _inputs(X, name="X") -> np.ndarray:
    x = np.asarray(X, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return x


def _factor(x: np.ndarray, params: GprParams):
    """Cholesky of ``K + noise I``, escalating the noise on failure."""
    noise = max(params.noise_var, JITTER_FLOOR)
    k = rbf_kernel(x, x, params.signal_var, params.lengthscale)
    for _ in range(JITTER_STEPS + 1):
        try:
            cho = cho_factor(k + noise * np.eye(len(x)), lower=True)
            return cho, GprParams(params.signal_var, params.lengthscale, noise)
        except LinAlgError:
            noise *= 10.0
    raise IllConditionedKernelError(f"kernel factorization failed for {params}")


def _lml(cho, y: np.ndarray) -> tuple:
    alpha = cho_solve(cho, y)
    logdet = 2.0 * np.sum(np.log(np.diag(cho[0])))
    lml = -0.5 * float(y @ alpha) - 0.5 * logdet - 0.5 * len(y) * np.log(2 * np.pi)
    return lml, alpha


def log_marginal_likelihood(X, y, params: GprParams) -> float:
    x = _inputs(X)
    cho, _ = _factor(x, params)
    return _lml(cho, np.asarray(y, dtype=float))[0]


def default_param_grid(X, y) -> list:
    """Grid around the median pairwise distance and the target variance."""
    x = _inputs(X)
    dist = pdist(x) if len(x) > 1 else np.zeros(0)
    med = float(np.median(dist)) if dist.size else 0.0
    if not med > 0:
        med = 1.0
    scale = float(np.var(y))
    if not scale > 0:
        scale = 1.0
    return [
        GprParams(s * scale, ell * med, nv * scale)
        for ell, s, nv in itertools.product(LENGTHSCALE_FACTORS, SIGNAL_FACTORS, NOISE_FACTORS)
    ]


def gpr_fit(
    X,
    y,
    param_grid: Optional[Iterable[GprParams]] = None,
    params: Optional[GprParams] = None,
) -> GprModel:
    """Fit a zero-mean GP; with ``params`` given the grid search is skipped.

    Grid ties in the log marginal likelihood go to the larger lengthscale,
    then the larger noise variance.
    """
    x = _inputs(X)
    y = np.asarray(y, dtype=float).ravel()
    if len(y) != len(x):
        raise ShapeError(f"X has {len(x)} rows but y has {len(y)} entries")
    if not np.all(np.isfinite(y)):
        raise InvalidArgumentError("y contains non-finite values")
    if params is not None:
        candidates = [GprParams(*params)]
    else:
        if len(x) < 2:
            raise InvalidArgumentError("hyperparameter search needs n >= 2")
        candidates = list(param_grid) if param_grid is not None else default_param_grid(x, y)
    for p in candidates:
        if not (p.signal_var > 0 and p.lengthscale > 0 and p.noise_var >= 0):
            raise InvalidArgumentError(f"invalid kernel parameters {p}")
    best = None
    for p in candidates:
        cho, used = _factor(x, p)
        lml, alpha = _lml(cho, y)
        key = (lml, used.lengthscale, used.noise_var)
        if best is None or key > best[0]:
            best = (key, used, cho, alpha, lml)
    _, used, cho, alpha, lml = best
    return GprModel(x, y, used, cho, alpha, lml)


def gpr_predict(model: GprModel, X_new) -> np.ndarray:
    """Posterior mean ``k_*^T (K + noise I)^{-1} y`` for each query row."""
    x = _inputs(X_new, "X_new")
    if x.shape[1] != model.inputs.shape[1]:
        raise ShapeError(f"expected {model.inputs.shape[1]} columns, got {x.shape[1]}")
    k = rbf_kernel(x, model.inputs, model.params.signal_var, model.params.lengthscale)
    return k @ model.alpha
