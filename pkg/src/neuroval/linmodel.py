"""Ground-truth generative system and dataset samplers.

The model: inputs x ~ N(0, I) drive a low-dimensional latent response
l = A'x + noise, recordings pool latents through a measurement map
r = H'l + noise, and task labels follow y = b'x + noise. The latent map A
has orthonormal columns (canonical coordinates; only its column space is
identifiable), and the task vector b has unit norm with a controlled
misalignment: the norm of its component outside col(A).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, MisalignmentError
from .rng import BRAIN_STREAM, MODEL_STREAM, TASK_STREAM, stream

ORTHO_TOL = 1e-10

# fMRI-style preset: 64x64 pixel inputs, 410 measured latents, 10k
# stimulus-sensitive voxels, 1800 samples recorded per hour. Per-voxel
# variance is calibrated to 40% stimulus / 20% neural / 40% measurement,
# which fixes the pooling weight and pins the channel SNR at 2/3.
FMRI_DIM_X = 4096
FMRI_DIM_LATENT = 410
FMRI_DIM_REC = 10_000
FMRI_POOL_WIDTH = 4
FMRI_LATENT_VAR = 0.5
FMRI_REC_NOISE = 0.4
FMRI_SAMPLES_PER_HOUR = 1800
FMRI_SNR_BRAIN = 2.0 / 3.0


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the generative system.

    latent_map : (dim_x, dim_latent) orthonormal columns
    readout    : (dim_latent, dim_rec), full row rank
    task_vector: (dim_x,)
    latent_cov : (dim_latent, dim_latent) symmetric PSD
    rec_noise_var, label_noise_var : scalars >= 0
    """

    dim_x: int
    dim_latent: int
    dim_rec: int
    latent_map: np.ndarray
    readout: np.ndarray
    task_vector: np.ndarray
    latent_cov: np.ndarray
    rec_noise_var: float
    label_noise_var: float

    def __post_init__(self):
        if not (0 < self.dim_latent < self.dim_x):
            raise DimensionError(f"need 0 < dim_latent < dim_x, got {self.dim_latent}, {self.dim_x}")
        if self.dim_latent > self.dim_rec:
            raise DimensionError(f"need dim_latent <= dim_rec, got {self.dim_latent}, {self.dim_rec}")
        if self.latent_map.shape != (self.dim_x, self.dim_latent):
            raise DimensionError("latent_map shape mismatch")
        if self.readout.shape != (self.dim_latent, self.dim_rec):
            raise DimensionError("readout shape mismatch")
        if self.task_vector.shape != (self.dim_x,):
            raise DimensionError("task_vector shape mismatch")
        if self.latent_cov.shape != (self.dim_latent, self.dim_latent):
            raise DimensionError("latent_cov shape mismatch")
        if self.rec_noise_var < 0 or self.label_noise_var < 0:
            raise ValueError("noise variances must be >= 0")
        gram = self.latent_map.T @ self.latent_map
        if np.abs(gram - np.eye(self.dim_latent)).max() > ORTHO_TOL:
            raise DimensionError("latent_map columns are not orthonormal")
        sv = np.linalg.svd(self.readout, compute_uv=False)
        if sv[-1] <= 1e-10 * sv[0]:
            raise DimensionError("readout is rank deficient")
        if np.abs(self.latent_cov - self.latent_cov.T).max() > 1e-12:
            raise ValueError("latent_cov must be symmetric")
        if np.linalg.eigvalsh(self.latent_cov).min() < -1e-12:
            raise ValueError("latent_cov must be PSD")

    @property
    def projector(self) -> np.ndarray:
        """Orthogonal projector onto col(latent_map)."""
        return self.latent_map @ self.latent_map.T


@dataclass(frozen=True)
class BrainDataset:
    """Paired inputs and recordings: x is (n, dim_x), r is (n, dim_rec)."""

    x: np.ndarray
    r: np.ndarray
    n: int

    def __post_init__(self):
        if self.n < 1 or self.x.shape[0] != self.n or self.r.shape[0] != self.n:
            raise DimensionError("brain dataset row counts inconsistent")


@dataclass(frozen=True)
class TaskDataset:
    """Paired inputs and labels: x is (n, dim_x), y is (n,)."""

    x: np.ndarray
    y: np.ndarray
    n: int

    def __post_init__(self):
        if self.n < 1 or self.x.shape[0] != self.n or self.y.shape[0] != self.n:
            raise DimensionError("task dataset row counts inconsistent")


@dataclass(frozen=True)
class TestSpec:
    """Block test-input covariance plus test label noise.

    The covariance places weight `on_weight` on the brain-sensitive subspace
    col(A) and `off_weight` on its orthogonal complement:
    Sigma = on_weight * P + off_weight * (I - P). Isotropic is 1, 1.
    """

    on_weight: float
    off_weight: float
    test_noise_var: float

    def __post_init__(self):
        if self.on_weight < 0 or self.off_weight < 0:
            raise ValueError("covariance weights must be >= 0")
        if self.on_weight == 0 and self.off_weight == 0:
            raise ValueError("test covariance must have positive trace")
        if self.test_noise_var < 0:
            raise ValueError("test label noise must be >= 0")

    @classmethod
    def isotropic(cls, test_noise_var: float) -> "TestSpec":
        return cls(1.0, 1.0, test_noise_var)

    @classmethod
    def shifted(cls, tau: float, test_noise_var: float) -> "TestSpec":
        """Covariance (1-tau) on the brain-sensitive subspace, tau off it."""
        if not 0.0 <= tau <= 1.0:
            raise ValueError("tau must be in [0, 1]")
        return cls(1.0 - tau, tau, test_noise_var)

    def trace(self, params: ModelParams) -> float:
        return self.on_weight * params.dim_latent + self.off_weight * (params.dim_x - params.dim_latent)

    def matrix(self, params: ModelParams) -> np.ndarray:
        p = params.projector
        return self.on_weight * p + self.off_weight * (np.eye(params.dim_x) - p)

    def quad(self, params: ModelParams, v: np.ndarray) -> float:
        """v' Sigma v without forming the matrix."""
        on = params.latent_map.T @ v
        on_sq = float(on @ on)
        return self.on_weight * on_sq + self.off_weight * (float(v @ v) - on_sq)


def pooling_matrix(dim_latent: int, dim_rec: int, pool_width: int, base_weight: float = 1.0) -> np.ndarray:
    """Measurement map where channel j sums pool_width consecutive latents.

    Windows wrap around; the last latent in each window enters at half
    weight. A uniform window of even length is orthogonal to the alternating
    mode (rank collapse whenever gcd(pool_width, dim_latent) > 1), so the
    taper keeps the window response bounded away from zero and the map full
    rank for every latent dimension.
    """
    if pool_width < 1:
        raise DimensionError("pool_width must be >= 1")
    if pool_width > dim_latent:
        raise DimensionError("pool_width cannot exceed dim_latent")
    if dim_rec < dim_latent:
        raise DimensionError("need dim_rec >= dim_latent for a full-rank map")
    h = np.zeros((dim_latent, dim_rec))
    for j in range(dim_rec):
        s = j % dim_latent
        for t in range(pool_width):
            w = base_weight * (0.5 if (t == pool_width - 1 and pool_width > 1) else 1.0)
            h[(s + t) % dim_latent, j] += w
    return h


def _unit_task_vector(latent_map: np.ndarray, misalign: float, rng: np.random.Generator) -> np.ndarray:
    """Unit vector combining the first latent direction with a seeded
    off-subspace direction so the off-subspace norm equals misalign exactly."""
    dim_x = latent_map.shape[0]
    u_on = latent_map[:, 0]
    v = rng.standard_normal(dim_x)
    v -= latent_map @ (latent_map.T @ v)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise RuntimeError("degenerate off-subspace draw")
    u_off = v / norm
    return math.sqrt(max(0.0, 1.0 - misalign**2)) * u_on + misalign * u_off


def _latent_cov(latent_noise, dim_latent: int) -> np.ndarray:
    if np.isscalar(latent_noise):
        return float(latent_noise) * np.eye(dim_latent)
    arr = np.asarray(latent_noise, dtype=float)
    if arr.ndim == 1:
        return np.diag(arr)
    return arr


def build_random_model(
    dim_x: int,
    dim_latent: int,
    dim_rec: int,
    misalign: float,
    snr_task: float,
    latent_noise=0.5,
    rec_noise_var: float = 0.4,
    pool_width: int = 4,
    seed: int = 0,
) -> ModelParams:
    """Construct a ground-truth model with controlled misalignment.

    Parameters
    ----------
    misalign : float in [0, 1]
        Norm of the task vector's component outside the measured latent
        subspace. The task vector has unit norm, so its label noise is
        1 / snr_task.
    latent_noise : scalar, 1-d array, or matrix
        Latent noise covariance (scalar means isotropic).
    pool_width : int
        Latents summed per recording channel (see `pooling_matrix`).
    seed : int
        Root seed; the latent map and the off-subspace task direction come
        from the model stream of this seed.
    """
    if not 0 < dim_latent < dim_x:
        raise DimensionError(f"need 0 < dim_latent < dim_x, got {dim_latent}, {dim_x}")
    if dim_rec < dim_latent:
        raise DimensionError(f"need dim_rec >= dim_latent, got {dim_rec}, {dim_latent}")
    if misalign < 0 or misalign > 1.0 + 1e-15:
        raise MisalignmentError(f"misalignment {misalign} outside [0, |task vector|] = [0, 1]")
    if snr_task <= 0:
        raise ValueError("snr_task must be > 0")
    rng = stream(seed, MODEL_STREAM)
    g = rng.standard_normal((dim_x, dim_latent))
    q, r = np.linalg.qr(g)
    latent_map = q * np.sign(np.diag(r))
    task_vector = _unit_task_vector(latent_map, misalign, rng)
    return ModelParams(
        dim_x=dim_x,
        dim_latent=dim_latent,
        dim_rec=dim_rec,
        latent_map=latent_map,
        readout=pooling_matrix(dim_latent, dim_rec, pool_width),
        task_vector=task_vector,
        latent_cov=_latent_cov(latent_noise, dim_latent),
        rec_noise_var=rec_noise_var,
        label_noise_var=1.0 / snr_task,
    )


def build_fmri_preset(
    snr_ratio: float,
    misalign: float,
    hours: float,
    seed: int = 0,
    dim_latent: int = FMRI_DIM_LATENT,
) -> tuple[ModelParams, int]:
    """fMRI-scale preset model plus the recording count bought by `hours`.

    snr_ratio is task SNR over channel SNR; with the preset's channel SNR
    fixed at 2/3 this sets the label noise to 1.5 / snr_ratio. Returns
    (params, floor(1800 * hours)). `dim_latent` may be overridden for
    dimensionality sweeps; the voxel calibration is unchanged.
    """
    if hours < 0:
        raise ValueError("hours must be >= 0")
    if snr_ratio <= 0:
        raise ValueError("snr_ratio must be > 0")
    if misalign < 0 or misalign > 1.0 + 1e-15:
        raise MisalignmentError(f"misalignment {misalign} outside [0, 1]")
    base_weight = math.sqrt(FMRI_REC_NOISE / (FMRI_POOL_WIDTH - 1 + 0.25))
    rng = stream(seed, MODEL_STREAM)
    g = rng.standard_normal((FMRI_DIM_X, dim_latent))
    q, r = np.linalg.qr(g)
    latent_map = q * np.sign(np.diag(r))
    params = ModelParams(
        dim_x=FMRI_DIM_X,
        dim_latent=dim_latent,
        dim_rec=FMRI_DIM_REC,
        latent_map=latent_map,
        readout=pooling_matrix(dim_latent, FMRI_DIM_REC, FMRI_POOL_WIDTH, base_weight),
        task_vector=_unit_task_vector(latent_map, misalign, rng),
        latent_cov=FMRI_LATENT_VAR * np.eye(dim_latent),
        rec_noise_var=FMRI_REC_NOISE,
        label_noise_var=1.0 / (snr_ratio * FMRI_SNR_BRAIN),
    )
    return params, int(math.floor(FMRI_SAMPLES_PER_HOUR * hours))


def sample_brain_dataset(params: ModelParams, n: int, seed: int) -> BrainDataset:
    """Draw n i.i.d. (input, recording) pairs. Deterministic given seed."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = stream(seed, BRAIN_STREAM)
    x = rng.standard_normal((n, params.dim_x))
    latents = x @ params.latent_map
    if params.latent_cov.any():
        root = _cov_root(params.latent_cov)
        latents = latents + rng.standard_normal((n, params.dim_latent)) @ root.T
    r = latents @ params.readout
    if params.rec_noise_var > 0:
        r = r + math.sqrt(params.rec_noise_var) * rng.standard_normal((n, params.dim_rec))
    return BrainDataset(x=x, r=r, n=n)


def sample_task_dataset(params: ModelParams, n: int, seed: int) -> TaskDataset:
    """Draw n i.i.d. (input, label) pairs. Deterministic given seed."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = stream(seed, TASK_STREAM)
    x = rng.standard_normal((n, params.dim_x))
    y = x @ params.task_vector
    if params.label_noise_var > 0:
        y = y + math.sqrt(params.label_noise_var) * rng.standard_normal(n)
    return TaskDataset(x=x, y=y, n=n)


def _cov_root(cov: np.ndarray) -> np.ndarray:
    if np.count_nonzero(cov - np.diag(np.diag(cov))) == 0:
        return np.diag(np.sqrt(np.clip(np.diag(cov), 0.0, None)))
    w, v = np.linalg.eigh(cov)
    return v * np.sqrt(np.clip(w, 0.0, None))


def misalignment(params: ModelParams) -> float:
    """Norm of the task vector's component outside the latent subspace."""
    b = params.task_vector
    on = params.latent_map.T @ b
    return math.sqrt(max(0.0, float(b @ b) - float(on @ on)))


def snr_task(params: ModelParams) -> float:
    """Task SNR: squared task-vector norm over label noise variance."""
    if params.label_noise_var == 0:
        raise ZeroDivisionError("label noise variance is zero")
    b = params.task_vector
    return float(b @ b) / params.label_noise_var


def snr_brain(params: ModelParams) -> float:
    """Average per-channel SNR of the recordings."""
    h = params.readout
    signal = np.einsum("ij,ij->j", h, h)
    neural = np.einsum("ij,jk,ik->i", h.T, params.latent_cov, h.T)
    denom = neural + params.rec_noise_var
    if np.any(denom == 0):
        raise ZeroDivisionError("channel noise variance is zero")
    return float(np.mean(signal / denom))


def model_from_config(cfg: dict) -> tuple[ModelParams, int | None]:
    """Build a model from a plain config mapping.

    Preset form: {"preset": "fmri", "snr_ratio", "m", "hours", "seed",
    optionally "dim_latent"}; returns the recording count implied by hours.
    Explicit form mirrors build_random_model's arguments:
    {"d_x", "d_l", "d_r", "m", "snr_task", "latent_noise", "sigma_r2",
    "pool_width", "seed"}; the recording count is None.
    """
    from .errors import ConfigError

    if not isinstance(cfg, dict):
        raise ConfigError("model config must be a mapping")
    cfg = dict(cfg)
    try:
        if cfg.get("preset") == "fmri":
            params, n_b = build_fmri_preset(
                snr_ratio=float(cfg.get("snr_ratio", 0.1)),
                misalign=float(cfg.get("m", 0.05)),
                hours=float(cfg.get("hours", 1000.0)),
                seed=int(cfg.get("seed", 0)),
                dim_latent=int(cfg.get("dim_latent", FMRI_DIM_LATENT)),
            )
            return params, n_b
        if "preset" in cfg:
            raise ConfigError(f"unknown preset {cfg['preset']!r}")
        params = build_random_model(
            dim_x=int(cfg["d_x"]),
            dim_latent=int(cfg["d_l"]),
            dim_rec=int(cfg["d_r"]),
            misalign=float(cfg.get("m", 0.0)),
            snr_task=float(cfg.get("snr_task", 1.0)),
            latent_noise=cfg.get("latent_noise", 0.5),
            rec_noise_var=float(cfg.get("sigma_r2", 0.4)),
            pool_width=int(cfg.get("pool_width", 4)),
            seed=int(cfg.get("seed", 0)),
        )
        return params, None
    except KeyError as exc:
        raise ConfigError(f"model config missing key {exc}") from exc
