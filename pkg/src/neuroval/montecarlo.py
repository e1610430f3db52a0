"""Monte Carlo risk estimation with bootstrap confidence intervals.

Protocol: every trial draws fresh brain and task datasets from the
generative model, fits the requested estimator, and evaluates its exact
population risk; trials are averaged within replicates and a percentile
bootstrap over replicate means gives the 95% interval. Trial randomness is
keyed by (root seed, replicate, trial), so estimates are bit-identical for
any worker count or execution order.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import estimators, theory
from .errors import InversionError, NeurovalError, OutOfRegimeError, SingularDesignError
from .linmodel import ModelParams, TestSpec, sample_brain_dataset, sample_task_dataset
from .rng import BOOTSTRAP_STREAM, TRIAL_STREAM, stream

BOOTSTRAP_RESAMPLES = 10_000

CSV_FIELDS = [
    "config_hash", "n_B", "n_T", "lambda_policy", "lambda",
    "mean", "ci_low", "ci_high", "trials", "replicates", "seed",
]


@dataclass(frozen=True)
class RiskEstimate:
    mean: float
    ci_low: float
    ci_high: float
    trials: int
    replicates: int
    seed: int
    config_hash: str

    def __post_init__(self):
        if not (self.ci_low <= self.mean <= self.ci_high):
            raise ValueError("confidence interval must bracket the mean")
        if self.trials < 1 or self.replicates < 1:
            raise ValueError("trials and replicates must be >= 1")


@dataclass(frozen=True)
class LambdaCurve:
    grid: np.ndarray
    risks: list
    best_lambda: float


@dataclass(frozen=True)
class ValueEstimate:
    value: float
    ci_low: float
    ci_high: float
    risk: RiskEstimate


def _params_digest(params: ModelParams) -> str:
    h = hashlib.sha256()
    for arr in (params.latent_map, params.readout, params.task_vector, params.latent_cov):
        h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    h.update(repr((params.dim_x, params.dim_latent, params.dim_rec,
                   params.rec_noise_var, params.label_noise_var)).encode())
    return h.hexdigest()


def config_hash(params: ModelParams, test: TestSpec, **kw) -> str:
    desc = {
        "model": _params_digest(params),
        "test": [repr(test.on_weight), repr(test.off_weight), repr(test.test_noise_var)],
    }
    desc.update({k: repr(v) for k, v in sorted(kw.items())})
    return hashlib.sha256(json.dumps(desc, sort_keys=True).encode()).hexdigest()[:16]


def _trial_seed(seed: int, rep: int, trial: int) -> int:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(TRIAL_STREAM, rep, trial))
    return int(ss.generate_state(1, np.uint64)[0])


def _check_regime(params: ModelParams, n_b: int, n_t: int, kind: str) -> None:
    if kind in ("tos", "fixed", "theory-optimal") and n_t <= params.dim_x:
        raise OutOfRegimeError(f"policy {kind}: need n_t > dim_x, got {n_t}")
    if kind == "hard" and n_t <= params.dim_latent:
        raise OutOfRegimeError(f"policy hard: need n_t > dim_latent, got {n_t}")
    if kind != "tos" and n_b <= params.dim_x:
        raise OutOfRegimeError(f"policy {kind}: need n_b > dim_x, got {n_b}")


def _policy_kind(lambda_policy) -> tuple[str, float]:
    """Normalize a policy spec to (kind, lam); lam is nan when deferred."""
    if isinstance(lambda_policy, str):
        if lambda_policy not in ("tos", "hard", "theory-optimal"):
            raise ValueError(f"unknown policy {lambda_policy!r}")
        return lambda_policy, float("nan")
    lam = float(lambda_policy)
    if lam < 0:
        raise ValueError("fixed penalty must be >= 0")
    return "fixed", lam


def _trial_error(exc: Exception, rep: int, trial: int) -> Exception:
    """Attach the failing trial index; errors abort the run (dropped trials
    would bias the estimate)."""
    msg = f"trial (replicate={rep}, trial={trial}): {exc}"
    if isinstance(exc, NeurovalError):
        return type(exc)(msg)
    return SingularDesignError(msg)


def _run_range(args) -> np.ndarray:
    """Risks for global trial indices [start, stop); used by worker processes."""
    (params, test, n_b, n_t, kind, lam, seed, trials, start, stop) = args
    out = np.empty(stop - start)
    k = params.dim_latent
    for g in range(start, stop):
        rep, trial = divmod(g, trials)
        tseed = _trial_seed(seed, rep, trial)
        try:
            task = sample_task_dataset(params, n_t, tseed)
            if kind == "tos":
                pred = estimators.fit_tos(task)
            else:
                brain = sample_brain_dataset(params, n_b, tseed)
                enc = estimators.fit_encoding(brain, k)
                if kind == "hard":
                    pred = estimators.fit_befs_hard(task, enc)
                else:
                    pred = estimators.fit_befs_soft(task, enc, lam)
            out[g - start] = estimators.exact_risk(pred, params, test)
        except (NeurovalError, np.linalg.LinAlgError) as exc:
            raise _trial_error(exc, rep, trial) from exc
    return out


def _run_grid_range(args) -> np.ndarray:
    """Grid-sharing variant: one dataset draw per trial, one risk per grid point."""
    (params, test, n_b, n_t, grid, seed, trials, start, stop) = args
    out = np.empty((stop - start, len(grid)))
    k = params.dim_latent
    eye = np.eye(params.dim_x)
    for g in range(start, stop):
        rep, trial = divmod(g, trials)
        tseed = _trial_seed(seed, rep, trial)
        try:
            task = sample_task_dataset(params, n_t, tseed)
            brain = sample_brain_dataset(params, n_b, tseed)
            enc = estimators.fit_encoding(brain, k)
            gram = task.x.T @ task.x / n_t
            xy = task.x.T @ task.y / n_t
            off = eye - enc.projector
            for j, lam in enumerate(grid):
                coef = np.linalg.solve(gram + lam * off, xy)
                diff = coef - params.task_vector
                out[g - start, j] = test.quad(params, diff) + test.test_noise_var
        except (NeurovalError, np.linalg.LinAlgError) as exc:
            raise _trial_error(exc, rep, trial) from exc
    return out


def _dispatch(worker, args_base, total: int, trials: int, n_jobs: int):
    """Run contiguous index ranges serially or across processes.

    Per-trial seeding makes the result independent of the chunking, and
    chunks are reassembled in index order, so any n_jobs gives identical
    output.
    """
    if n_jobs <= 1 or total < 4:
        return worker(args_base + (0, total))
    n_chunks = min(total, 4 * n_jobs)
    bounds = np.linspace(0, total, n_chunks + 1).astype(int)
    jobs = [args_base + (int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        parts = list(pool.map(worker, jobs))
    return np.concatenate(parts, axis=0)


def _bootstrap_ci(rep_means: np.ndarray, seed: int) -> tuple[float, float]:
    rng = stream(seed, BOOTSTRAP_STREAM)
    idx = rng.integers(0, rep_means.size, size=(BOOTSTRAP_RESAMPLES, rep_means.size))
    boot = rep_means[idx].mean(axis=1)
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return float(lo), float(hi)


def estimate_risk(
    params: ModelParams,
    test: TestSpec,
    n_b: int,
    n_t: int,
    lambda_policy,
    trials: int,
    replicates: int,
    seed: int,
    n_jobs: int = 1,
) -> RiskEstimate:
    """Estimate expected test risk of an estimator under repeated draws.

    Parameters
    ----------
    lambda_policy : "tos" | "hard" | "theory-optimal" | float
        A float fixes the soft penalty; "theory-optimal" resolves the
        schedule once from the closed form.
    trials, replicates : int
        trials fresh-dataset fits per replicate; the 95% CI is a percentile
        bootstrap over replicate means.
    n_jobs : int
        Worker processes; results are identical for any value.
    """
    if trials < 1 or replicates < 1:
        raise ValueError("trials and replicates must be >= 1")
    kind, lam = _policy_kind(lambda_policy)
    _check_regime(params, n_b, n_t, kind)
    if kind == "theory-optimal":
        lam = theory.optimal_lambda(params, n_b, n_t)
    total = trials * replicates
    flat = _dispatch(
        _run_range,
        (params, test, n_b, n_t, kind, lam, seed, trials),
        total, trials, n_jobs,
    )
    rep_means = flat.reshape(replicates, trials).mean(axis=1)
    lo, hi = _bootstrap_ci(rep_means, seed)
    mean = float(rep_means.mean())
    return RiskEstimate(
        mean=mean, ci_low=min(lo, mean), ci_high=max(hi, mean),
        trials=trials, replicates=replicates, seed=seed,
        config_hash=config_hash(params, test, n_b=n_b, n_t=n_t, policy=kind,
                                lam=lam, trials=trials, replicates=replicates, seed=seed),
    )


def lambda_grid(lo: float, hi: float, points: int) -> np.ndarray:
    if points < 1 or lo <= 0 or hi < lo:
        raise ValueError("need 0 < lo <= hi and points >= 1")
    if points == 1:
        return np.array([lo])
    return np.geomspace(lo, hi, points)


def grid_search_lambda(
    params: ModelParams,
    test: TestSpec,
    n_b: int,
    n_t: int,
    grid_spec: tuple[float, float, int],
    trials: int,
    replicates: int,
    seed: int,
    n_jobs: int = 1,
) -> LambdaCurve:
    """Empirical penalty selection on a log grid.

    Each trial's datasets and encoding fit are shared across the grid
    (variance reduction), and the best penalty is the argmin of the grand
    means with ties going to the smaller value.
    """
    if trials < 1 or replicates < 1:
        raise ValueError("trials and replicates must be >= 1")
    grid = lambda_grid(*grid_spec)
    _check_regime(params, n_b, n_t, "fixed")
    total = trials * replicates
    flat = _dispatch(
        _run_grid_range,
        (params, test, n_b, n_t, grid, seed, trials),
        total, trials, n_jobs,
    )
    rep_means = flat.reshape(replicates, trials, grid.size).mean(axis=1)  # (R, G)
    means = rep_means.mean(axis=0)
    rng = stream(seed, BOOTSTRAP_STREAM)
    idx = rng.integers(0, replicates, size=(BOOTSTRAP_RESAMPLES, replicates))
    base_hash = config_hash(params, test, n_b=n_b, n_t=n_t, policy="grid",
                            grid=tuple(grid), trials=trials, replicates=replicates, seed=seed)
    risks = []
    for j in range(grid.size):
        boot = rep_means[idx, j].mean(axis=1)
        lo, hi = np.percentile(boot, [2.5, 97.5])
        mean_j = float(means[j])
        risks.append(RiskEstimate(
            mean=mean_j, ci_low=min(float(lo), mean_j), ci_high=max(float(hi), mean_j),
            trials=trials, replicates=replicates, seed=seed, config_hash=base_hash,
        ))
    best = float(grid[int(np.argmin(means))])
    return LambdaCurve(grid=grid, risks=risks, best_lambda=best)


def empirical_value(
    params: ModelParams,
    test: TestSpec,
    n_b: int,
    n_t: int,
    trials: int,
    replicates: int,
    seed: int,
    n_jobs: int = 1,
) -> ValueEstimate:
    """Equivalent extra task samples implied by an empirical risk estimate.

    Inverts the exact task-only risk law at the estimated risk; the interval
    maps through the (monotone decreasing) inversion endpointwise. Estimates
    at or below the test noise floor cannot be inverted.
    """
    est = estimate_risk(params, test, n_b, n_t, "theory-optimal",
                        trials, replicates, seed, n_jobs=n_jobs)
    floor = test.test_noise_var

    def invert(risk: float) -> float:
        if risk <= floor:
            raise InversionError(
                f"estimated risk {risk} at or below the test noise floor {floor}; value unstable")
        return (params.label_noise_var * test.trace(params) / (risk - floor)
                + params.dim_x + 1 - n_t)

    return ValueEstimate(
        value=invert(est.mean),
        ci_low=invert(est.ci_high),
        ci_high=invert(est.ci_low),
        risk=est,
    )


def csv_row(est: RiskEstimate, n_b: int, n_t: int, lambda_policy, lam: float) -> dict:
    """Row for the per-point CSV interface (see CSV_FIELDS)."""
    kind, _ = _policy_kind(lambda_policy)
    return {
        "config_hash": est.config_hash,
        "n_B": n_b,
        "n_T": n_t,
        "lambda_policy": kind,
        "lambda": repr(float(lam)),
        "mean": repr(est.mean),
        "ci_low": repr(est.ci_low),
        "ci_high": repr(est.ci_high),
        "trials": est.trials,
        "replicates": est.replicates,
        "seed": est.seed,
    }
