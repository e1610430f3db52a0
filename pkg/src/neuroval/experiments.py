"""Declarative experiment drivers behind the CLI.

Each experiment kind consumes a config mapping and produces named tables
(ordered field lists plus rows of strings/numbers) that the CLI writes as
CSVs and renders as figures. Per-point regime failures are collected, not
fatal; a config that cannot be interpreted raises ConfigError before any
computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import budget as budget_mod
from . import montecarlo, theory, valuation
from .errors import ConfigError, NeurovalError
from .linmodel import (
    FMRI_SAMPLES_PER_HOUR,
    ModelParams,
    TestSpec,
    model_from_config,
)

EXPERIMENT_KINDS = ("savings_sweep", "robustness_sweep", "budget_sweep",
                    "lambda_curve", "validate_empirical")

SAVINGS_FIELDS = ["panel", "axis_value", "n_B", "n_T",
                  "v_T_asymptotic", "percent_saved_asymptotic",
                  "v_T_finite", "percent_saved_finite"]
ROBUST_FIELDS = ["tau", "n_B", "n_T",
                 "v_T_asymptotic", "percent_saved_asymptotic",
                 "v_T_finite", "percent_saved_finite"]
BUDGET_FIELDS = ["budget", "cost_ratio", "c_B", "c_T", "F",
                 "n_B_opt_asymptotic", "n_B_opt_grid",
                 "percent_budget_saved_asymptotic", "percent_budget_saved_grid",
                 "hours_opt_grid"]
LAMBDA_FIELDS = ["n_T", "lambda", "mean", "ci_low", "ci_high", "is_best",
                 "lambda_opt", "finite_risk"]
LAMBDA_BEST_FIELDS = ["n_T", "best_lambda", "lambda_opt", "ratio"]
VALIDATE_FIELDS = ["n_T", "policy", "lambda", "mean", "ci_low", "ci_high", "theory"]
ERROR_FIELDS = ["table", "point", "error"]


@dataclass
class ExperimentResult:
    tables: dict = field(default_factory=dict)  # name -> (fields, rows)
    errors: list = field(default_factory=list)

    def add_error(self, table: str, point: str, exc: Exception) -> None:
        self.errors.append({"table": table, "point": point, "error": f"{type(exc).__name__}: {exc}"})


def _require(cfg: dict, key: str, where: str):
    if key not in cfg:
        raise ConfigError(f"{where}: missing key {key!r}")
    return cfg[key]


def _as_list(value, where: str) -> list:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{where}: expected a nonempty list")
    return list(value)


def _test_from_config(cfg: dict, params: ModelParams) -> TestSpec:
    tcfg = cfg.get("test") or {}
    noise = tcfg.get("sigma_test2")
    noise = params.label_noise_var if noise is None else float(noise)
    return TestSpec(float(tcfg.get("c_on", 1.0)), float(tcfg.get("c_off", 1.0)), noise)


def _mc_from_config(cfg: dict) -> tuple[int, int, int]:
    mc = cfg.get("mc") or {}
    return int(mc.get("trials", 200)), int(mc.get("replicates", 10)), int(mc.get("seed", 0))


def _baseline_n_b(cfg: dict, preset_n_b: int | None, where: str) -> int:
    axes = cfg.get("axes") or {}
    if "n_B_baseline" in axes:
        return int(axes["n_B_baseline"])
    if preset_n_b is not None:
        return preset_n_b
    if "n_B" in axes and not isinstance(axes["n_B"], (list, tuple)):
        return int(axes["n_B"])
    raise ConfigError(f"{where}: explicit models need a scalar axes.n_B or axes.n_B_baseline")


def _fmt(x) -> str:
    import numpy as np

    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _record_or_raise(result: ExperimentResult, table: str, point: str, exc: Exception) -> None:
    """Config problems abort; regime/estimation problems become error rows."""
    if isinstance(exc, ConfigError):
        raise exc
    result.add_error(table, point, exc)


# --- savings_sweep ---------------------------------------------------------

SAVINGS_PANEL_KEYS = ("hours", "m", "snr_ratio", "dim_ratio", "n_B")


def _panel_model(model_cfg: dict, panel: str, value) -> tuple[ModelParams, int | None]:
    cfg = dict(model_cfg)
    if panel == "hours":
        cfg["hours"] = value
    elif panel == "m":
        cfg["m"] = value
    elif panel == "snr_ratio":
        if cfg.get("preset") == "fmri":
            cfg["snr_ratio"] = value
        else:
            cfg["snr_task"] = value
    elif panel == "dim_ratio":
        if cfg.get("preset") != "fmri":
            raise ConfigError("dim_ratio panel requires the fmri preset")
        from .linmodel import FMRI_DIM_X

        cfg["dim_latent"] = int(round(float(value) * FMRI_DIM_X))
    return model_from_config(cfg)


def run_savings_sweep(cfg: dict) -> ExperimentResult:
    model_cfg = _require(cfg, "model", "savings_sweep")
    axes = _require(cfg, "axes", "savings_sweep")
    n_t_grid = [int(v) for v in _as_list(_require(axes, "n_T", "savings_sweep.axes"), "axes.n_T")]
    panels = [k for k in SAVINGS_PANEL_KEYS if isinstance(axes.get(k), (list, tuple))]
    if not panels:
        raise ConfigError("savings_sweep: no panel axis given "
                          f"(one of {', '.join(SAVINGS_PANEL_KEYS)})")
    result = ExperimentResult()
    rows = []
    for panel in panels:
        for value in axes[panel]:
            try:
                if panel == "n_B":
                    params, _ = model_from_config(model_cfg)
                    n_b = int(value)
                else:
                    params, preset_n_b = _panel_model(model_cfg, panel, value)
                    n_b = _baseline_n_b(cfg, preset_n_b, "savings_sweep")
                test = _test_from_config(cfg, params)
                q = theory.derive_quantities(params)
            except NeurovalError as exc:
                _record_or_raise(result, "savings", f"{panel}={value}", exc)
                continue
            for n_t in n_t_grid:
                try:
                    asym = valuation.savings_curve(params, test, n_b, [n_t], "asymptotic", quantities=q)[0]
                    fin = valuation.savings_curve(params, test, n_b, [n_t], "finite-theory", quantities=q)[0]
                    rows.append({
                        "panel": panel, "axis_value": _fmt(value), "n_B": n_b, "n_T": n_t,
                        "v_T_asymptotic": _fmt(asym.value),
                        "percent_saved_asymptotic": _fmt(asym.percent_saved),
                        "v_T_finite": _fmt(fin.value),
                        "percent_saved_finite": _fmt(fin.percent_saved),
                    })
                except NeurovalError as exc:
                    _record_or_raise(result, "savings", f"{panel}={value},n_T={n_t}", exc)
    result.tables["savings"] = (SAVINGS_FIELDS, rows)
    return result


# --- robustness_sweep ------------------------------------------------------

def run_robustness_sweep(cfg: dict) -> ExperimentResult:
    model_cfg = _require(cfg, "model", "robustness_sweep")
    axes = _require(cfg, "axes", "robustness_sweep")
    taus = [float(v) for v in _as_list(_require(axes, "tau", "robustness_sweep.axes"), "axes.tau")]
    n_t_grid = [int(v) for v in _as_list(_require(axes, "n_T", "robustness_sweep.axes"), "axes.n_T")]
    params, preset_n_b = model_from_config(model_cfg)
    n_b = _baseline_n_b(cfg, preset_n_b, "robustness_sweep")
    q = theory.derive_quantities(params)
    noise = (cfg.get("test") or {}).get("sigma_test2")
    noise = params.label_noise_var if noise is None else float(noise)
    result = ExperimentResult()
    rows = []
    for tau in taus:
        test = TestSpec.shifted(tau, noise)
        for n_t in n_t_grid:
            try:
                value = theory.robustness_value(params, test, n_b, quantities=q)
                lam = theory.optimal_lambda(params, n_b, n_t, quantities=q)
                risk = theory.befs_finite_risk(params, test, n_b, n_t, lam, quantities=q)
                fin = valuation.value_from_risks(params, test, n_t, risk, n_b=n_b)
                rows.append({
                    "tau": _fmt(tau), "n_B": n_b, "n_T": n_t,
                    "v_T_asymptotic": _fmt(value),
                    "percent_saved_asymptotic": _fmt(100.0 * (1.0 - n_t / (n_t + value))),
                    "v_T_finite": _fmt(fin.value),
                    "percent_saved_finite": _fmt(fin.percent_saved),
                })
            except NeurovalError as exc:
                _record_or_raise(result, "robustness", f"tau={tau},n_T={n_t}", exc)
    result.tables["robustness"] = (ROBUST_FIELDS, rows)
    return result


# --- budget_sweep ----------------------------------------------------------

def run_budget_sweep(cfg: dict) -> ExperimentResult:
    model_cfg = _require(cfg, "model", "budget_sweep")
    axes = _require(cfg, "axes", "budget_sweep")
    budgets = [float(v) for v in _as_list(_require(axes, "budget", "budget_sweep.axes"), "axes.budget")]
    ratios = [float(v) for v in _as_list(_require(axes, "cost_ratio", "budget_sweep.axes"), "axes.cost_ratio")]
    cost_task = float(cfg.get("cost_task", budget_mod.CROWD_LABEL_COST))
    grid_points = int(cfg.get("grid_points", 64))
    params, _ = model_from_config(model_cfg)
    test = _test_from_config(cfg, params)
    q = theory.derive_quantities(params)
    result = ExperimentResult()
    rows = []
    for ratio in ratios:
        for total in budgets:
            spec = budget_mod.BudgetSpec(cost_brain=ratio * cost_task, cost_task=cost_task, total=total)
            point = f"cost_ratio={ratio},budget={total}"
            try:
                asym = budget_mod.asymptotic_allocation(params, spec, test=test, quantities=q)
                grid = budget_mod.grid_allocation(params, test, spec, grid_points=grid_points, quantities=q)
                rows.append({
                    "budget": _fmt(total), "cost_ratio": _fmt(ratio),
                    "c_B": _fmt(spec.cost_brain), "c_T": _fmt(spec.cost_task),
                    "F": _fmt(asym.favorability),
                    "n_B_opt_asymptotic": _fmt(asym.n_b_opt_exact),
                    "n_B_opt_grid": grid.n_b_opt,
                    "percent_budget_saved_asymptotic": _fmt(asym.percent_budget_saved),
                    "percent_budget_saved_grid": _fmt(grid.percent_budget_saved),
                    "hours_opt_grid": _fmt(grid.n_b_opt / FMRI_SAMPLES_PER_HOUR),
                })
            except NeurovalError as exc:
                _record_or_raise(result, "budget", point, exc)
    result.tables["budget"] = (BUDGET_FIELDS, rows)
    return result


# --- lambda_curve ----------------------------------------------------------

def run_lambda_curve(cfg: dict, n_jobs: int = 1) -> ExperimentResult:
    model_cfg = _require(cfg, "model", "lambda_curve")
    axes = _require(cfg, "axes", "lambda_curve")
    n_t_grid = [int(v) for v in _as_list(_require(axes, "n_T", "lambda_curve.axes"), "axes.n_T")]
    gcfg = _require(axes, "lambda", "lambda_curve.axes")
    grid_spec = (float(_require(gcfg, "min", "axes.lambda")),
                 float(_require(gcfg, "max", "axes.lambda")),
                 int(_require(gcfg, "points", "axes.lambda")))
    params, preset_n_b = model_from_config(model_cfg)
    n_b = _baseline_n_b(cfg, preset_n_b, "lambda_curve")
    test = _test_from_config(cfg, params)
    trials, replicates, seed = _mc_from_config(cfg)
    q = theory.derive_quantities(params)
    result = ExperimentResult()
    rows, best_rows = [], []
    for n_t in n_t_grid:
        try:
            curve = montecarlo.grid_search_lambda(
                params, test, n_b, n_t, grid_spec, trials, replicates, seed, n_jobs=n_jobs)
            lam_opt = theory.optimal_lambda(params, n_b, n_t, quantities=q)
            for lam, est in zip(curve.grid, curve.risks):
                rows.append({
                    "n_T": n_t, "lambda": _fmt(float(lam)),
                    "mean": _fmt(est.mean), "ci_low": _fmt(est.ci_low), "ci_high": _fmt(est.ci_high),
                    "is_best": int(lam == curve.best_lambda),
                    "lambda_opt": _fmt(lam_opt),
                    "finite_risk": _fmt(theory.befs_finite_risk(params, test, n_b, n_t, float(lam), quantities=q)),
                })
            ratio = max(curve.best_lambda / lam_opt, lam_opt / curve.best_lambda)
            best_rows.append({"n_T": n_t, "best_lambda": _fmt(curve.best_lambda),
                              "lambda_opt": _fmt(lam_opt), "ratio": _fmt(ratio)})
        except NeurovalError as exc:
            _record_or_raise(result, "lambda_curve", f"n_T={n_t}", exc)
    result.tables["lambda_curve"] = (LAMBDA_FIELDS, rows)
    result.tables["lambda_best"] = (LAMBDA_BEST_FIELDS, best_rows)
    return result


# --- validate_empirical ----------------------------------------------------

def run_validate_empirical(cfg: dict, n_jobs: int = 1) -> ExperimentResult:
    model_cfg = _require(cfg, "model", "validate_empirical")
    axes = _require(cfg, "axes", "validate_empirical")
    n_t_grid = [int(v) for v in _as_list(_require(axes, "n_T", "validate_empirical.axes"), "axes.n_T")]
    policies = cfg.get("policies", ["tos", "theory-optimal"])
    params, preset_n_b = model_from_config(model_cfg)
    n_b = _baseline_n_b(cfg, preset_n_b, "validate_empirical")
    test = _test_from_config(cfg, params)
    trials, replicates, seed = _mc_from_config(cfg)
    q = theory.derive_quantities(params)
    result = ExperimentResult()
    rows = []
    for n_t in n_t_grid:
        for policy in policies:
            point = f"n_T={n_t},policy={policy}"
            try:
                est = montecarlo.estimate_risk(
                    params, test, n_b, n_t, policy, trials, replicates, seed, n_jobs=n_jobs)
                if policy == "tos":
                    lam, ref = 0.0, theory.tos_risk(params, test, n_t)
                elif policy == "theory-optimal":
                    lam = theory.optimal_lambda(params, n_b, n_t, quantities=q)
                    ref = theory.befs_finite_risk(params, test, n_b, n_t, lam, quantities=q)
                else:
                    lam = float(policy)
                    ref = theory.befs_finite_risk(params, test, n_b, n_t, lam, quantities=q)
                rows.append({
                    "n_T": n_t, "policy": policy if isinstance(policy, str) else "fixed",
                    "lambda": _fmt(float(lam)),
                    "mean": _fmt(est.mean), "ci_low": _fmt(est.ci_low), "ci_high": _fmt(est.ci_high),
                    "theory": _fmt(ref),
                })
            except NeurovalError as exc:
                _record_or_raise(result, "validate", point, exc)
    result.tables["validate"] = (VALIDATE_FIELDS, rows)
    return result


# --- dispatch and describe -------------------------------------------------

def run_experiment(cfg: dict, n_jobs: int = 1) -> ExperimentResult:
    kind = _require(cfg, "experiment", "config")
    if kind == "savings_sweep":
        return run_savings_sweep(cfg)
    if kind == "robustness_sweep":
        return run_robustness_sweep(cfg)
    if kind == "budget_sweep":
        return run_budget_sweep(cfg)
    if kind == "lambda_curve":
        return run_lambda_curve(cfg, n_jobs=n_jobs)
    if kind == "validate_empirical":
        return run_validate_empirical(cfg, n_jobs=n_jobs)
    raise ConfigError(f"unknown experiment {kind!r} (one of {', '.join(EXPERIMENT_KINDS)})")


def describe(cfg: dict) -> str:
    """Plan summary: point counts, estimated fit counts, regime warnings.

    Performs no risk computation.
    """
    kind = _require(cfg, "experiment", "config")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"unknown experiment {kind!r} (one of {', '.join(EXPERIMENT_KINDS)})")
    model_cfg = _require(cfg, "model", kind)
    axes = cfg.get("axes") or {}
    lines = [f"experiment: {kind}"]
    if model_cfg.get("preset"):
        lines.append(f"model: preset {model_cfg['preset']}")
        dim_x = 4096
    else:
        dim_x = int(model_cfg.get("d_x", 0))
        lines.append(f"model: explicit d_x={dim_x}")
    n_t_vals = axes.get("n_T") or []
    if not isinstance(n_t_vals, (list, tuple)):
        n_t_vals = [n_t_vals]
    warn = [int(v) for v in n_t_vals if int(v) <= dim_x + 1]
    points = 0
    if kind == "savings_sweep":
        panels = [k for k in SAVINGS_PANEL_KEYS if isinstance(axes.get(k), (list, tuple))]
        for p in panels:
            n = len(axes[p]) * max(len(n_t_vals), 1)
            points += n
            lines.append(f"panel {p}: {len(axes[p])} values x {len(n_t_vals)} n_T = {n} points")
        if not panels:
            lines.append("warning: no panel axis given")
    elif kind == "robustness_sweep":
        points = len(axes.get("tau") or []) * max(len(n_t_vals), 1)
        lines.append(f"tau grid: {len(axes.get('tau') or [])} x {len(n_t_vals)} n_T = {points} points")
    elif kind == "budget_sweep":
        points = len(axes.get("budget") or []) * len(axes.get("cost_ratio") or [])
        lines.append(f"budget grid: {len(axes.get('budget') or [])} budgets x "
                     f"{len(axes.get('cost_ratio') or [])} cost ratios = {points} points")
    else:
        trials, replicates, _ = _mc_from_config(cfg)
        per_point = trials * replicates
        if kind == "lambda_curve":
            g = axes.get("lambda") or {}
            points = len(n_t_vals)
            lines.append(f"{points} n_T values x {g.get('points', '?')} grid penalties; "
                         f"{per_point} fits per point (datasets shared across the grid)")
        else:
            policies = cfg.get("policies", ["tos", "theory-optimal"])
            points = len(n_t_vals) * len(policies)
            lines.append(f"{len(n_t_vals)} n_T values x {len(policies)} policies = {points} points; "
                         f"{per_point} fits per point")
    if points == 0:
        lines.append("warning: zero points")
    if warn:
        lines.append(f"warning: n_T values at or below dim_x + 1 are out of regime: {warn}")
    return "\n".join(lines)
