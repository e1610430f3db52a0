"""Estimators: task-only least squares, the two-stage brain-regularized
fits (exact low-rank encoding stage, then soft or hard subspace-penalized
task stage), and exact population risk of a fitted predictor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import RankError, SingularDesignError
from .linmodel import BrainDataset, ModelParams, TaskDataset, TestSpec

COND_LIMIT = 1e12
HARD = float("inf")


@dataclass(frozen=True)
class EncodingModel:
    """First-stage fit: learned latent basis, readout, and subspace projector.

    basis has orthonormal columns spanning the learned latent subspace;
    basis @ readout equals the rank-constrained least-squares minimizer.
    """

    basis: np.ndarray     # (dim_x, k), orthonormal columns
    readout: np.ndarray   # (k, dim_rec)
    projector: np.ndarray  # (dim_x, dim_x)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class TaskPredictor:
    """Linear predictor with the penalty strength used to fit it.

    penalty is 0 for plain least squares, a positive float for the soft
    fit, and math.inf for the hard subspace constraint.
    """

    coef: np.ndarray
    penalty: float
    provenance: str = ""

    def __post_init__(self):
        if not np.all(np.isfinite(self.coef)):
            raise ValueError("predictor coefficients must be finite")
        if self.penalty < 0:
            raise ValueError("penalty must be >= 0")

    def predict(self, x: np.ndarray) -> np.ndarray:
        return x @ self.coef


def _solve_spd(mat: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    """Cholesky solve with a relative condition guard at 1e12."""
    w = np.linalg.eigvalsh(mat)
    if w[0] <= 0 or w[-1] / w[0] > COND_LIMIT:
        raise SingularDesignError(f"{what}: matrix numerically singular (cond > {COND_LIMIT:.0e})")
    try:
        factor = cho_factor(mat, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded above
        raise SingularDesignError(f"{what}: Cholesky failed") from exc
    return cho_solve(factor, rhs)


def fit_tos(data: TaskDataset, provenance: str = "") -> TaskPredictor:
    """Ordinary least squares on task pairs alone."""
    n, d = data.x.shape
    if n <= d:
        raise SingularDesignError(f"need n > dim_x for least squares, got n={n}, dim_x={d}")
    gram = data.x.T @ data.x
    coef = _solve_spd(gram, data.x.T @ data.y, "task-only fit")
    return TaskPredictor(coef=coef, penalty=0.0, provenance=provenance)


def fit_encoding(data: BrainDataset, k: int) -> EncodingModel:
    """Rank-k encoding fit minimizing the recording reconstruction error.

    The global minimizer whitens the inputs, truncates the SVD of the
    whitened coefficient matrix, and unwhitens; the learned basis is
    re-orthonormalized (the projector is basis-invariant) with the readout
    adjusted so basis @ readout is exactly the minimizer.
    """
    n, d = data.x.shape
    if n <= d:
        raise SingularDesignError(f"need n > dim_x for the encoding fit, got n={n}, dim_x={d}")
    if k < 1 or k > min(d, data.r.shape[1]):
        raise RankError(f"rank k={k} outside [1, min(dim_x, dim_rec)]")
    gram = data.x.T @ data.x
    q_ols = _solve_spd(gram, data.x.T @ data.r, "encoding fit")
    w, v = np.linalg.eigh(gram / n)
    if w[0] <= 0 or w[-1] / w[0] > COND_LIMIT:
        raise SingularDesignError("encoding fit: input covariance numerically singular")
    root = (v * np.sqrt(w)) @ v.T
    inv_root = (v / np.sqrt(w)) @ v.T
    u, sv, vt = np.linalg.svd(root @ q_ols, full_matrices=False)
    basis_raw = inv_root @ u[:, :k]
    basis, tri = np.linalg.qr(basis_raw)
    sign = np.sign(np.diag(tri))
    sign[sign == 0] = 1.0
    basis = basis * sign
    readout = (tri * sign[:, None]) @ (sv[:k, None] * vt[:k])
    return EncodingModel(basis=basis, readout=readout, projector=basis @ basis.T)


def encoding_objective(data: BrainDataset, coef: np.ndarray) -> float:
    """Mean squared recording reconstruction error of a (dim_x, dim_rec) map."""
    resid = data.r - data.x @ coef
    return float(np.sum(resid**2)) / data.n


def fit_befs_soft(data: TaskDataset, enc: EncodingModel, lam: float, provenance: str = "") -> TaskPredictor:
    """Least squares with a quadratic penalty on mass outside the learned
    subspace; lam = 0 recovers the task-only fit when it is defined."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    n, d = data.x.shape
    mat = data.x.T @ data.x / n + lam * (np.eye(d) - enc.projector)
    coef = _solve_spd(mat, data.x.T @ data.y / n, "soft fit")
    return TaskPredictor(coef=coef, penalty=lam, provenance=provenance)


def fit_befs_hard(data: TaskDataset, enc: EncodingModel, provenance: str = "") -> TaskPredictor:
    """Least squares constrained to the learned subspace."""
    n = data.n
    k = enc.rank
    if n <= k:
        raise SingularDesignError(f"need n > rank for the constrained fit, got n={n}, rank={k}")
    z = data.x @ enc.basis
    gram = z.T @ z
    w = _solve_spd(gram, z.T @ data.y, "hard fit")
    return TaskPredictor(coef=enc.basis @ w, penalty=HARD, provenance=provenance)


def exact_risk(pred: TaskPredictor, params: ModelParams, test: TestSpec) -> float:
    """Population test risk of a fitted predictor, in closed form."""
    if pred.coef.shape != params.task_vector.shape:
        raise ValueError("predictor and model dimensions disagree")
    diff = pred.coef - params.task_vector
    return test.quad(params, diff) + test.test_noise_var
