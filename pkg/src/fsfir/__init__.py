"""Functional slicing-free inverse regression (FSFIR) and slice-based baselines."""

from .errors import (
    DegenerateSpectrumWarning,
    EmptyDatasetError,
    FsfirError,
    IllConditionedKernelError,
    IncompatibleGridsError,
    InsufficientSamplesError,
    InvalidArgumentError,
    RankDeficientError,
    SchemaError,
    ShapeError,
    TooManySlicesError,
    UnsupportedResponseError,
)
from .fpca import CovarianceOperator, EigenSystem, center, sample_covariance, scores, top_eigensystem
from .funcspace import (
    BasisFamily,
    Curve,
    CurveSet,
    Grid,
    eval_basis,
    inner_product,
    make_grid,
    project_coeffs,
)
from .mdd import mddm_n, mddo_hat
from .metrics import ProjectionMatrix, orthonormalize_projection, subspace_distance
from .regress import GprModel, GprParams, gpr_fit, gpr_predict
from .sdr import SdrModel, fsfir_fit, reduce, rfsir_fit, tfsir_fit
from .synth import SynthDataset, brownian_kl, gen_m1, gen_m2, gen_m3

__version__ = "0.1.0"
