"""Convert risk levels into exchange rates, equivalent task samples, and
percent task data saved.

The conversion inverts the exact finite-sample task-only risk law, so the
round trip value_from_risks(tos_risk(n_t + w)) == w is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import theory
from .errors import InversionError, OutOfRegimeError
from .linmodel import ModelParams, TestSpec

CSV_FIELDS = ["n_B", "n_T", "tau_or_test_id", "v_T", "rho", "percent_saved", "source"]


@dataclass(frozen=True)
class ValueReport:
    """Value of n_b brain samples against a task-only baseline at n_t.

    value is the equivalent extra task samples (may be negative, or
    math.inf under exact alignment in the asymptotic source); rate is
    value / n_b; percent_saved = 100 * (1 - n_t / (n_t + value)).
    """

    n_b: float
    n_t: int
    value: float
    rate: float
    percent_saved: float
    source: str

    def __post_init__(self):
        if self.source not in ("asymptotic", "finite-theory", "empirical"):
            raise ValueError(f"unknown source {self.source!r}")


def _percent_saved(n_t: int, value: float) -> float:
    if math.isinf(value):
        return 100.0
    return 100.0 * (1.0 - n_t / (n_t + value))


def _report(n_b: float, n_t: int, value: float, source: str) -> ValueReport:
    rate = 0.0 if n_b == 0 else value / n_b
    return ValueReport(n_b=n_b, n_t=n_t, value=value, rate=rate,
                       percent_saved=_percent_saved(n_t, value), source=source)


def value_from_risks(
    params: ModelParams,
    test: TestSpec,
    n_t: int,
    risk_befs: float,
    n_b: float = 0.0,
    source: str = "finite-theory",
) -> ValueReport:
    """Equivalent extra task samples for a given two-stage risk level.

    Solves tos_risk(n_t + v) = risk_befs for v analytically. Negative v
    (brain data hurts) is allowed; risk at or below the test noise floor is
    not invertible.
    """
    if n_t <= params.dim_x + 1:
        raise OutOfRegimeError(f"need n_t > dim_x + 1 = {params.dim_x + 1}, got {n_t}")
    floor = test.test_noise_var
    if risk_befs <= floor:
        raise InversionError(f"risk {risk_befs} at or below the test noise floor {floor}")
    value = (params.label_noise_var * test.trace(params) / (risk_befs - floor)
             + params.dim_x + 1 - n_t)
    return _report(n_b, n_t, value, source)


def savings_curve(
    params: ModelParams,
    test: TestSpec,
    n_b: float,
    n_t_grid,
    mode: str = "finite-theory",
    quantities: theory.TheoryQuantities | None = None,
) -> list[ValueReport]:
    """Value reports along a task-sample grid.

    finite-theory evaluates the finite-sample two-stage law at the optimal
    penalty schedule and inverts it; asymptotic uses the large-sample
    exchange-rate law directly.
    """
    if mode not in ("finite-theory", "asymptotic"):
        raise ValueError(f"unknown mode {mode!r}")
    q = quantities or theory.derive_quantities(params)
    out = []
    for n_t in n_t_grid:
        n_t = int(n_t)
        if mode == "asymptotic":
            _, value, _ = theory.asymptotic_value(params, n_b, quantities=q)
            out.append(_report(n_b, n_t, value, "asymptotic"))
        else:
            lam = theory.optimal_lambda(params, n_b, n_t, quantities=q)
            risk = theory.befs_finite_risk(params, test, n_b, n_t, lam, quantities=q)
            out.append(value_from_risks(params, test, n_t, risk, n_b=n_b, source="finite-theory"))
    return out


def csv_row(report: ValueReport, test_id: str = "") -> dict:
    return {
        "n_B": repr(float(report.n_b)),
        "n_T": report.n_t,
        "tau_or_test_id": test_id,
        "v_T": repr(report.value),
        "rho": repr(report.rate),
        "percent_saved": repr(report.percent_saved),
        "source": report.source,
    }
