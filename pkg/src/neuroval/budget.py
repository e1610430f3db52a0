"""Budget-constrained data collection: favorability, optimal allocation
between recordings and labels, and equivalent extra budget.

Whether recordings are worth collecting at all is governed by the
favorability score F (cost ratio x dimensionality margin x relative task
difficulty); asymptotically in the budget, a positive allocation is optimal
exactly when F > 1 with positive learning difficulty delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import montecarlo, theory
from .errors import BudgetTooSmallError, DegenerateScheduleError, InversionError
from .linmodel import ModelParams, TestSpec

# Label cost of the crowd-labeling scenario: $15/hour at one label every
# two seconds.
CROWD_LABEL_COST = 15.0 / 1800.0

CSV_FIELDS = ["B", "c_B", "c_T", "F", "n_B_opt", "n_T_opt", "risk",
              "extra_budget", "percent_budget_saved", "method"]


@dataclass(frozen=True)
class BudgetSpec:
    """Unit costs and total budget, in any fixed currency."""

    cost_brain: float
    cost_task: float
    total: float

    def __post_init__(self):
        if self.cost_brain <= 0 or self.cost_task <= 0:
            raise ValueError("unit costs must be > 0")
        if self.total < 0:
            raise ValueError("budget must be >= 0")


@dataclass(frozen=True)
class BudgetReport:
    """Allocation outcome; n_b_opt/n_t_opt are integer counts satisfying the
    cost constraint, n_b_opt_exact the pre-rounding optimizer."""

    favorability: float
    n_b_opt: int
    n_t_opt: int
    n_b_opt_exact: float
    risk_at_opt: float
    extra_budget: float
    percent_budget_saved: float
    method: str
    note: str = ""

    def __post_init__(self):
        if self.n_b_opt < 0 or self.n_t_opt < 0:
            raise ValueError("counts must be >= 0")


def favorability(params: ModelParams, spec: BudgetSpec,
                 quantities: theory.TheoryQuantities | None = None) -> float:
    """Collection-favorability score; collect brain data (asymptotically)
    iff F > 1 and delta > 0. Returns math.inf at delta = 0 and a negative
    score for delta < 0 (collection condition fails either way)."""
    q = quantities or theory.derive_quantities(params)
    dims = (params.dim_x - params.dim_latent) / params.dim_x
    if q.delta == 0:
        return math.inf
    return (spec.cost_task / spec.cost_brain) * dims * params.label_noise_var / q.delta


def _default_test(params: ModelParams) -> TestSpec:
    return TestSpec.isotropic(params.label_noise_var)


def _extra_budget_from_risk(params: ModelParams, test: TestSpec, spec: BudgetSpec, risk: float) -> float:
    """Budget increment Delta such that a task-only spend of total + Delta
    reaches the same risk (continuous relaxation of the task-only law)."""
    floor = test.test_noise_var
    if risk <= floor:
        raise InversionError(f"risk {risk} at or below the test noise floor {floor}")
    return (spec.cost_task
            * (params.label_noise_var * test.trace(params) / (risk - floor) + params.dim_x + 1)
            - spec.total)


def asymptotic_allocation(
    params: ModelParams,
    spec: BudgetSpec,
    test: TestSpec | None = None,
    quantities: theory.TheoryQuantities | None = None,
) -> BudgetReport:
    """Large-budget optimal allocation in closed form.

    The optimal recording count saturates (independent of the budget); the
    equivalent extra budget is cost_task * v_limit * (1 - sqrt(1/F))^2 for
    F > 1 and zero otherwise. Requires enough budget for a valid task-only
    regime after the brain spend.
    """
    q = quantities or theory.derive_quantities(params)
    test = test or _default_test(params)
    fav = favorability(params, spec, quantities=q)
    d_off = params.dim_x - params.dim_latent

    if q.delta <= 0 or fav <= 1.0:
        note = "delta <= 0: brain data slows task learning" if q.delta <= 0 else "F <= 1: collection not worth the cost"
        n_b_exact = 0.0
    else:
        if q.m2 == 0:
            raise DegenerateScheduleError("exact alignment: asymptotic optimum unbounded")
        note = ""
        big_d = d_off * q.delta
        n_b_exact = max(0.0, big_d / q.m2 * (math.sqrt(fav) - 1.0))

    n_b = int(math.floor(n_b_exact))
    n_t = int(math.floor((spec.total - spec.cost_brain * n_b) / spec.cost_task))
    if n_t <= params.dim_x + 1:
        raise BudgetTooSmallError(
            f"budget leaves n_t = {n_t} <= dim_x + 1 after the asymptotic brain spend")

    if n_b >= 1:
        lam = theory.optimal_lambda(params, n_b, n_t, quantities=q)
        risk = theory.befs_finite_risk(params, test, n_b, n_t, lam, quantities=q)
    else:
        risk = theory.tos_risk(params, test, n_t)

    if q.delta > 0 and fav > 1.0:
        _, _, v_limit = theory.asymptotic_value(params, max(n_b, 1), quantities=q)
        extra = spec.cost_task * v_limit * (1.0 - math.sqrt(1.0 / fav)) ** 2
    else:
        extra = 0.0
    pct = 100.0 * extra / (spec.total + extra) if spec.total + extra > 0 else 0.0
    return BudgetReport(
        favorability=fav, n_b_opt=n_b, n_t_opt=n_t, n_b_opt_exact=n_b_exact,
        risk_at_opt=risk, extra_budget=extra, percent_budget_saved=pct,
        method="asymptotic", note=note,
    )


def feasible_brain_grid(params: ModelParams, spec: BudgetSpec, points: int = 64) -> np.ndarray:
    """Geometric candidate grid of recording counts, including zero."""
    n_b_max = int(math.floor((spec.total - spec.cost_task * (params.dim_x + 2)) / spec.cost_brain))
    if spec.total / spec.cost_task < params.dim_x + 2:
        raise BudgetTooSmallError(
            f"budget below cost_task * (dim_x + 2) = {spec.cost_task * (params.dim_x + 2)}")
    if n_b_max < 1:
        return np.array([0])
    grid = np.unique(np.geomspace(1, n_b_max, points).astype(int))
    return np.concatenate([[0], grid])


def grid_allocation(
    params: ModelParams,
    test: TestSpec,
    spec: BudgetSpec,
    grid_points: int = 64,
    risk_source: str | tuple = "finite-theory",
    quantities: theory.TheoryQuantities | None = None,
) -> BudgetReport:
    """Minimize risk over feasible integer allocations.

    risk_source "finite-theory" evaluates the finite two-stage law at the
    optimal penalty schedule (zero recordings fall back to the task-only
    law); ("empirical", trials, replicates, seed[, n_jobs]) estimates each
    point by Monte Carlo. Ties prefer fewer recordings; grid points where
    the penalty schedule is undefined (possible for delta < 0 at small
    recording counts) are skipped.
    """
    q = quantities or theory.derive_quantities(params)
    empirical = None
    if isinstance(risk_source, tuple):
        if risk_source[0] != "empirical":
            raise ValueError(f"unknown risk source {risk_source!r}")
        empirical = risk_source[1:]
    elif risk_source != "finite-theory":
        raise ValueError(f"unknown risk source {risk_source!r}")

    candidates = feasible_brain_grid(params, spec, points=grid_points)
    best = None
    skipped = 0
    for n_b in candidates:
        n_b = int(n_b)
        n_t = int(math.floor((spec.total - spec.cost_brain * n_b) / spec.cost_task))
        if n_t <= params.dim_x + 1:
            continue
        if empirical is not None and 0 < n_b <= params.dim_x:
            continue  # encoding stage unfittable below dim_x recordings
        try:
            if empirical is None:
                if n_b == 0:
                    risk = theory.tos_risk(params, test, n_t)
                else:
                    lam = theory.optimal_lambda(params, n_b, n_t, quantities=q)
                    risk = theory.befs_finite_risk(params, test, n_b, n_t, lam, quantities=q)
            else:
                trials, replicates, seed = empirical[:3]
                n_jobs = empirical[3] if len(empirical) > 3 else 1
                policy = "tos" if n_b == 0 else "theory-optimal"
                risk = montecarlo.estimate_risk(
                    params, test, int(n_b), n_t, policy, trials, replicates, seed, n_jobs=n_jobs
                ).mean
        except DegenerateScheduleError:
            skipped += 1
            continue
        if best is None or risk < best[0] - 1e-15:
            best = (risk, int(n_b), n_t)
    if best is None:
        raise BudgetTooSmallError("no feasible allocation on the candidate grid")
    risk, n_b, n_t = best
    extra = _extra_budget_from_risk(params, test, spec, risk)
    pct = 100.0 * extra / (spec.total + extra)
    return BudgetReport(
        favorability=favorability(params, spec, quantities=q),
        n_b_opt=n_b, n_t_opt=n_t, n_b_opt_exact=float(n_b),
        risk_at_opt=risk, extra_budget=extra, percent_budget_saved=pct,
        method="grid", note=f"skipped {skipped} undefined-schedule points" if skipped else "",
    )


def csv_row(report: BudgetReport, spec: BudgetSpec) -> dict:
    return {
        "B": repr(spec.total),
        "c_B": repr(spec.cost_brain),
        "c_T": repr(spec.cost_task),
        "F": repr(report.favorability),
        "n_B_opt": report.n_b_opt,
        "n_T_opt": report.n_t_opt,
        "risk": repr(report.risk_at_opt),
        "extra_budget": repr(report.extra_budget),
        "percent_budget_saved": repr(report.percent_budget_saved),
        "method": report.method,
    }
