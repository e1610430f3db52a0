"""Closed-form risk laws, penalty schedule, and data-value formulas.

Everything here evaluates finite-sample or asymptotic expectations of test
risk in closed form; no data is sampled. All formulas keep the leading
orders in 1/n_B and 1/n_T and drop vanishing remainders, so Monte Carlo
estimates converge to these values up to those remainders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateScheduleError, OutOfRegimeError, RankError
from .estimators import EncodingModel
from .linmodel import ModelParams, TestSpec

INF = math.inf


@dataclass(frozen=True)
class TestMoments:
    """Scalars through which a block test covariance enters the laws.

    tr_on / tr_off: covariance trace on the latent subspace / its complement;
    off_quad: task-offsubspace quadratic form b_off' Sigma b_off;
    tr_on_est: trace of (on-subspace covariance block x estimation noise).
    """

    tr_on: float
    tr_off: float
    off_quad: float
    tr_on_est: float


@dataclass(frozen=True)
class TheoryQuantities:
    """Derived constants controlling how fast brain data pays off.

    sigma_est is the effective latent-estimation noise covariance (support
    inside the latent subspace); delta the scalar learning difficulty;
    gamma_i(n_b) the expected squared off-subspace task mass after an
    n_b-sample encoding fit.
    """

    dim_x: int
    dim_latent: int
    m2: float
    beta_sigma_beta: float
    tr_sigma_est: float
    delta: float
    core: np.ndarray  # (dim_latent, dim_latent) noise matrix in latent coords
    latent_map: np.ndarray

    @cached_property
    def sigma_est(self) -> np.ndarray:
        """Full-size estimation noise covariance (dim_x x dim_x, rank <= dim_latent)."""
        return self.latent_map @ self.core @ self.latent_map.T

    def gamma_i(self, n_b: float) -> float:
        if n_b <= 0:
            raise ValueError("n_b must be positive")
        return self.m2 + (self.dim_x - self.dim_latent) * self.delta / n_b

    def test_moments(self, test: TestSpec) -> TestMoments:
        d_off = self.dim_x - self.dim_latent
        return TestMoments(
            tr_on=test.on_weight * self.dim_latent,
            tr_off=test.off_weight * d_off,
            off_quad=test.off_weight * self.m2,
            tr_on_est=test.on_weight * self.tr_sigma_est,
        )

    def gamma_test(self, n_b: float, test: TestSpec) -> float:
        return self.gamma_general(n_b, self.test_moments(test))

    def gamma_general(self, n_b: float, mom: TestMoments) -> float:
        """First-order expected off-subspace test mass of the task vector."""
        if n_b <= 0:
            raise ValueError("n_b must be positive")
        return mom.off_quad + (
            self.m2 * mom.tr_on_est - 2.0 * mom.off_quad * self.tr_sigma_est + self.beta_sigma_beta * mom.tr_off
        ) / n_b

    def proj_off_trace(self, n_b: float, mom: TestMoments) -> float:
        """First-order expected trace of the learned-complement projector
        against the test covariance."""
        d_off = self.dim_x - self.dim_latent
        bracket = mom.tr_off * self.tr_sigma_est - mom.tr_on_est * d_off
        return mom.tr_off - bracket / n_b


def derive_quantities(params: ModelParams) -> TheoryQuantities:
    """Compute the derived constants for a model.

    The estimation noise in latent coordinates is
    rec_noise_var * (H H')^{-1} + latent_cov, requiring the readout Gram to
    be invertible.
    """
    h = params.readout
    gram = h @ h.T
    w = np.linalg.eigvalsh(gram)
    if w[0] <= 1e-12 * max(w[-1], 1.0):
        raise RankError("readout Gram is singular; estimation noise undefined")
    core = params.rec_noise_var * np.linalg.inv(gram) + params.latent_cov
    core = 0.5 * (core + core.T)
    b_on = params.latent_map.T @ params.task_vector
    b = params.task_vector
    m2 = max(0.0, float(b @ b) - float(b_on @ b_on))
    beta_sigma_beta = float(b_on @ core @ b_on)
    tr_sigma_est = float(np.trace(core))
    delta = beta_sigma_beta - m2 * tr_sigma_est / (params.dim_x - params.dim_latent)
    return TheoryQuantities(
        dim_x=params.dim_x,
        dim_latent=params.dim_latent,
        m2=m2,
        beta_sigma_beta=beta_sigma_beta,
        tr_sigma_est=tr_sigma_est,
        delta=delta,
        core=core,
        latent_map=params.latent_map,
    )


def tos_risk(params: ModelParams, test: TestSpec, n_t: int) -> float:
    """Exact expected test risk of the task-only least-squares fit."""
    if n_t <= params.dim_x + 1:
        raise OutOfRegimeError(f"need n_t > dim_x + 1 = {params.dim_x + 1}, got {n_t}")
    return test.test_noise_var + params.label_noise_var * test.trace(params) / (n_t - params.dim_x - 1)


def befs_finite_risk(
    params: ModelParams,
    test: TestSpec,
    n_b: float,
    n_t: int,
    lam: float,
    quantities: TheoryQuantities | None = None,
) -> float:
    """Finite-sample risk law of the soft two-stage estimator.

    Leading orders in 1/n_B and 1/n_T; at lam = 0 this reduces exactly to
    `tos_risk`. Pass `quantities` to amortize the derived constants over a
    sweep.
    """
    if n_t <= params.dim_x + 1:
        raise OutOfRegimeError(f"need n_t > dim_x + 1 = {params.dim_x + 1}, got {n_t}")
    if n_b < 1:
        raise OutOfRegimeError("need n_b >= 1 (use tos_risk for no brain data)")
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if lam == 0:
        # every correction carries a (1 - alpha) or (1 - alpha^2) factor;
        # evaluate the collapse exactly rather than to rounding
        return tos_risk(params, test, n_t)
    q = quantities or derive_quantities(params)
    d_x, d_l = q.dim_x, q.dim_latent
    d_off = d_x - d_l
    alpha = 1.0 / (1.0 + lam)
    mom = q.test_moments(test)
    gam_test = q.gamma_general(n_b, mom)
    gam_i = q.gamma_i(n_b)
    bracket = mom.tr_off * q.tr_sigma_est - mom.tr_on_est * d_off
    trace_mix = mom.tr_on + alpha**2 * mom.tr_off
    one_m_a2 = 1.0 - alpha**2

    risk = test.test_noise_var
    risk += (1.0 - alpha) ** 2 * gam_test * (1.0 + (2.0 * alpha * (d_l + alpha * d_off) + 3.0 * alpha**2) / n_t)
    risk += params.label_noise_var / (n_t - d_x - 1) * (trace_mix + one_m_a2 / n_b * bracket)
    risk += (1.0 - alpha) ** 2 * gam_i / n_t * trace_mix
    risk += one_m_a2 * (1.0 - alpha) ** 2 * q.m2 / (n_b * n_t) * bracket
    return risk


def optimal_lambda(
    params: ModelParams,
    n_b: float,
    n_t: int,
    quantities: TheoryQuantities | None = None,
) -> float:
    """Penalty schedule balancing the leading bias and variance terms.

    Decays as 1/n_t; requires positive expected off-subspace task mass.
    """
    q = quantities or derive_quantities(params)
    gam_i = q.gamma_i(n_b)
    if gam_i <= 0:
        raise DegenerateScheduleError(f"gamma_i(n_b={n_b}) = {gam_i} <= 0; schedule undefined")
    return params.label_noise_var * (params.dim_x - params.dim_latent) / (n_t * gam_i)


def befs_hard_risk(params: ModelParams, test: TestSpec, enc: EncodingModel, n_t: int) -> float:
    """Risk of the hard-constrained fit, conditional on the learned subspace."""
    k = enc.rank
    if n_t <= k + 1:
        raise OutOfRegimeError(f"need n_t > rank + 1 = {k + 1}, got {n_t}")
    b = params.task_vector
    b_off = b - enc.basis @ (enc.basis.T @ b)
    bias = test.quad(params, b_off)
    # trace of the block test covariance against the learned projector
    on_basis = params.latent_map.T @ enc.basis
    tr_on_proj = float(np.sum(on_basis**2))
    tr_proj = test.on_weight * tr_on_proj + test.off_weight * (k - tr_on_proj)
    noise = (params.label_noise_var + float(b_off @ b_off)) / (n_t - k - 1) * tr_proj
    return test.test_noise_var + bias + noise


def asymptotic_value(
    params: ModelParams,
    n_b: float,
    quantities: TheoryQuantities | None = None,
) -> tuple[float, float, float]:
    """Exchange rate and equivalent-task-sample value of n_b brain samples.

    Returns (rho, v_t, v_t_limit): rho = v_t / n_b, and v_t_limit the value
    in the infinite-brain-data limit (math.inf under exact alignment).
    """
    q = quantities or derive_quantities(params)
    d_off = q.dim_x - q.dim_latent
    gam_i = q.gamma_i(n_b)
    if gam_i <= 0:
        raise DegenerateScheduleError(f"gamma_i(n_b={n_b}) = {gam_i} <= 0; value undefined")
    v_t = params.label_noise_var * d_off**2 / (q.dim_x * gam_i)
    beta_sq = float(params.task_vector @ params.task_vector)
    aligned = q.m2 <= 1e-12 * beta_sq
    v_limit = INF if aligned else params.label_noise_var * d_off**2 / (q.dim_x * q.m2)
    return v_t / n_b, v_t, v_limit


def robustness_value(
    params: ModelParams,
    test: TestSpec,
    n_b: float,
    quantities: TheoryQuantities | None = None,
) -> float:
    """Equivalent-task-sample value under a shifted block test covariance.

    The penalty is tuned for the isotropic test; the value can be negative
    when the test concentrates on the missed task direction.
    """
    q = quantities or derive_quantities(params)
    return _value_from_moments(params, q, n_b, q.test_moments(test))


def _value_from_moments(
    params: ModelParams,
    q: TheoryQuantities,
    n_b: float,
    mom: TestMoments,
) -> float:
    """First-order value law over explicit test-covariance moments.

    Block test specs route through `robustness_value`; this entry point also
    admits moments of a general PSD covariance (e.g. mass concentrated on
    the missed task direction), where the sign condition can trigger.
    """
    tr_total = mom.tr_on + mom.tr_off
    if tr_total <= 0:
        raise ValueError("test covariance must have positive trace")
    d_off = q.dim_x - q.dim_latent
    gam_i = q.gamma_i(n_b)
    if gam_i <= 0:
        raise DegenerateScheduleError(f"gamma_i(n_b={n_b}) = {gam_i} <= 0; value undefined")
    v_iso = params.label_noise_var * d_off**2 / (q.dim_x * gam_i)
    return (q.dim_x / tr_total) * v_iso * (
        2.0 * q.proj_off_trace(n_b, mom) / d_off - q.gamma_general(n_b, mom) / gam_i
    )


def moments_from_matrix(params: ModelParams, sigma_test: np.ndarray, quantities: TheoryQuantities | None = None) -> TestMoments:
    """Test moments of an explicit PSD covariance matrix."""
    q = quantities or derive_quantities(params)
    a = params.latent_map
    b = params.task_vector
    b_off = b - a @ (a.T @ b)
    on_block = a.T @ sigma_test @ a
    tr_on = float(np.trace(on_block))
    tr_off = float(np.trace(sigma_test)) - tr_on
    # b_off lies in the complement, so the complement-block quadratic form
    # reduces to the plain one
    off_quad = float(b_off @ sigma_test @ b_off)
    # P Sigma P against the estimation noise, both supported in col(A)
    tr_on_est = float(np.trace(on_block @ q.core))
    return TestMoments(tr_on=tr_on, tr_off=tr_off, off_quad=off_quad, tr_on_est=tr_on_est)
