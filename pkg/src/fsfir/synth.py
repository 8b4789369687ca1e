"""Seeded generators for the three synthetic single/multi-index models.

M1: ``X = sum_{j<=100} j^{-0.55} X_j phi_j`` in the cosine basis,
    ``Y = <X, beta> + eps`` with ``beta`` a normalized alternating series.
M2: ``X`` standard Brownian motion (100-term KL expansion),
    ``Y = <beta_1, X> + 100 <beta_2, X>^3 + eps``.
M3: ``X`` standard Brownian motion, ``Y = exp(<beta, X>) + eps``.

``noise_var`` is the variance of ``eps``. Each replicate draws from its own
PCG64 stream derived from ``SeedSequence(seed, spawn_key=(rep, ...))``, so
replicates are reproducible independently of one another.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .errors import InvalidArgumentError
from .funcspace import (
    BasisFamily,
    CurveSet,
    Grid,
    brownian_kl_eigenvalues,
    gram,
    make_grid,
)

N_TERMS = 100
MODEL_IDS = ("M1", "M2", "M3")
STRUCTURAL_DIM = {"M1": 1, "M2": 2, "M3": 1}

StreamKey = Union[int, Tuple[int, ...]]


def replicate_rng(seed: int, key: StreamKey = ()) -> np.random.Generator:
    """Independent generator for ``(seed, key)``; ``key`` is hashed by SeedSequence."""
    if isinstance(key, int):
        key = (key,)
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def coordinate_basis(model_id: str, count: int = N_TERMS) -> BasisFamily:
    """Analytic basis in which the model's true directions are exact."""
    _check_model(model_id)
    kind = "fourier_cosine" if model_id == "M1" else "brownian_kl"
    return BasisFamily(kind, count)


@dataclass(frozen=True, eq=False)
class SynthDataset:
    X: CurveSet
    Y: np.ndarray
    truth: CurveSet
    model_id: str
    seed: int
    noise_var: float
    rep: StreamKey = ()

    @property
    def d(self) -> int:
        return len(self.truth)

    @property
    def n(self) -> int:
        return len(self.X)

    def coordinate_basis(self, count: int = N_TERMS) -> BasisFamily:
        return coordinate_basis(self.model_id, count)


def _check_model(model_id: str) -> None:
    if model_id not in MODEL_IDS:
        raise InvalidArgumentError(f"unknown model {model_id!r}; expected one of {MODEL_IDS}")


def _check_args(n: int, noise_var: float) -> None:
    if n < 1:
        raise InvalidArgumentError(f"n must be positive, got {n}")
    if noise_var < 0:
        raise InvalidArgumentError(f"noise_var must be nonnegative, got {noise_var}")


def m1_beta_coeffs(n_terms: int = N_TERMS) -> np.ndarray:
    """Cosine-basis coefficients of the M1 direction, normalized over ``n_terms``."""
    j = np.arange(1, n_terms + 1)
    raw = 4.0 * (-1.0) ** j / j**2
    raw[0] = 0.3
    return raw / np.linalg.norm(raw)


def brownian_kl(n: int, n_terms: int, grid: Grid, rng: np.random.Generator) -> CurveSet:
    """``n`` Brownian paths from the ``n_terms``-term Karhunen-Loeve expansion."""
    return _brownian_kl(n, n_terms, grid, rng)[0]


def _brownian_kl(n, n_terms, grid, rng):
    if n < 1 or n_terms < 1:
        raise InvalidArgumentError("n and n_terms must be positive")
    xi = rng.standard_normal((n, n_terms))
    a = xi * np.sqrt(brownian_kl_eigenvalues(n_terms))
    phi = BasisFamily("brownian_kl", n_terms).matrix(grid)
    return CurveSet(grid, a @ phi), a


def _noise(rng, n, noise_var):
    return np.sqrt(noise_var) * rng.standard_normal(n)


def gen_m1(
    n: int, seed: int, noise_var: float = 0.25, grid: Optional[Grid] = None, rep: StreamKey = ()
) -> SynthDataset:
    _check_args(n, noise_var)
    grid = grid or make_grid()
    rng = replicate_rng(seed, rep)
    basis = BasisFamily("fourier_cosine", N_TERMS)
    phi = basis.matrix(grid)
    j = np.arange(1, N_TERMS + 1)
    c = rng.standard_normal((n, N_TERMS)) * j**-0.55
    beta = m1_beta_coeffs()
    y = c @ beta + _noise(rng, n, noise_var)
    truth = CurveSet(grid, (beta @ phi)[None, :])
    return SynthDataset(CurveSet(grid, c @ phi), y[:, None], truth, "M1", seed, noise_var, rep)


def _kl_truth(grid: Grid, ks) -> CurveSet:
    phi = BasisFamily("brownian_kl", max(ks)).matrix(grid)
    return CurveSet(grid, phi[[k - 1 for k in ks]])


def gen_m2(
    n: int, seed: int, noise_var: float = 0.25, grid: Optional[Grid] = None, rep: StreamKey = ()
) -> SynthDataset:
    _check_args(n, noise_var)
    grid = grid or make_grid()
    rng = replicate_rng(seed, rep)
    X, a = _brownian_kl(n, N_TERMS, grid, rng)
    # beta_1, beta_2 are the 2nd and 3rd KL eigenfunctions
    y = a[:, 1] + 100.0 * a[:, 2] ** 3 + _noise(rng, n, noise_var)
    return SynthDataset(X, y[:, None], _kl_truth(grid, (2, 3)), "M2", seed, noise_var, rep)


def gen_m3(
    n: int, seed: int, noise_var: float = 0.25, grid: Optional[Grid] = None, rep: StreamKey = ()
) -> SynthDataset:
    _check_args(n, noise_var)
    grid = grid or make_grid()
    rng = replicate_rng(seed, rep)
    X, a = _brownian_kl(n, N_TERMS, grid, rng)
    y = np.exp(a[:, 1]) + _noise(rng, n, noise_var)
    return SynthDataset(X, y[:, None], _kl_truth(grid, (2,)), "M3", seed, noise_var, rep)


GENERATORS = {"M1": gen_m1, "M2": gen_m2, "M3": gen_m3}


def generate(
    model_id: str,
    n: int,
    seed: int,
    noise_var: float = 0.25,
    grid: Optional[Grid] = None,
    rep: StreamKey = (),
) -> SynthDataset:
    _check_model(model_id)
    return GENERATORS[model_id](n, seed, noise_var=noise_var, grid=grid, rep=rep)


def true_directions(model_id: str, grid: Optional[Grid] = None) -> CurveSet:
    _check_model(model_id)
    grid = grid or make_grid()
    if model_id == "M1":
        phi = BasisFamily("fourier_cosine", N_TERMS).matrix(grid)
        return CurveSet(grid, (m1_beta_coeffs() @ phi)[None, :])
    return _kl_truth(grid, (2, 3) if model_id == "M2" else (2,))


def model_response(model_id: str, X: CurveSet, noise: Optional[np.ndarray] = None) -> np.ndarray:
    """Noise-free link applied to quadrature inner products ``<beta_k, X>``."""
    t = gram(X, true_directions(model_id, X.grid))
    if model_id == "M1":
        y = t[:, 0]
    elif model_id == "M2":
        y = t[:, 0] + 100.0 * t[:, 1] ** 3
    else:
        y = np.exp(t[:, 0])
    if noise is not None:
        y = y + noise
    return y[:, None]


def write_dataset_csv(ds: SynthDataset, path) -> None:
    """One row per sample: curve values on the grid, then the response."""
    pts = ds.X.grid.points
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x({float(t)!r})" for t in pts] + ["y"])
        for row, y in zip(ds.X.values, ds.Y[:, 0]):
            w.writerow([repr(float(v)) for v in row] + [repr(float(y))])
