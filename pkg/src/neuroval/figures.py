"""Render experiment tables as figures next to their CSVs.

Convention mirrors the data columns: solid lines for the finite-sample
laws, dashed for asymptotics, error bars for Monte Carlo estimates.
"""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

plt.rcParams.update({
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
    "axes.titlesize": 10,
})


def _group(rows, key):
    grouped = defaultdict(list)
    for row in rows:
        grouped[row[key]].append(row)
    return grouped


def _f(row, key):
    return float(row[key])


def render_savings(rows, path) -> None:
    panels = _group(rows, "panel")
    n = max(len(panels), 1)
    fig, axes = plt.subplots(1, n, figsize=(5.0 * n, 3.6), squeeze=False)
    for ax, (panel, prows) in zip(axes[0], sorted(panels.items())):
        for value, vrows in sorted(_group(prows, "axis_value").items(), key=lambda kv: float(kv[0])):
            vrows = sorted(vrows, key=lambda r: int(r["n_T"]))
            x = [int(r["n_T"]) for r in vrows]
            ax.plot(x, [_f(r, "percent_saved_finite") for r in vrows], "-", label=f"{panel}={value}")
            ax.plot(x, [_f(r, "percent_saved_asymptotic") for r in vrows], "--",
                    color=ax.lines[-1].get_color(), alpha=0.6)
        ax.set_xscale("log")
        ax.set_xlabel("task samples")
        ax.set_ylabel("% task data saved")
        ax.set_title(f"panel: {panel} (solid finite, dashed asymptotic)")
        ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_robustness(rows, path) -> None:
    fig, ax = plt.subplots()
    for n_t, trows in sorted(_group(rows, "n_T").items(), key=lambda kv: int(kv[0])):
        trows = sorted(trows, key=lambda r: float(r["tau"]))
        x = [float(r["tau"]) for r in trows]
        ax.plot(x, [_f(r, "percent_saved_finite") for r in trows], "-", label=f"n_T={n_t}")
        ax.plot(x, [_f(r, "percent_saved_asymptotic") for r in trows], "--",
                color=ax.lines[-1].get_color(), alpha=0.6)
    ax.set_xlabel("test covariance shift toward the brain-insensitive subspace")
    ax.set_ylabel("% task data saved")
    ax.set_title("value under test shift (solid finite, dashed asymptotic)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_budget(rows, path) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.6))
    for ratio, rrows in sorted(_group(rows, "cost_ratio").items(), key=lambda kv: float(kv[0])):
        rrows = sorted(rrows, key=lambda r: float(r["budget"]))
        x = [float(r["budget"]) for r in rrows]
        axes[0].plot(x, [_f(r, "percent_budget_saved_grid") for r in rrows], "-",
                     label=f"c_B/c_T={ratio}")
        axes[0].plot(x, [_f(r, "percent_budget_saved_asymptotic") for r in rrows], ":",
                     color=axes[0].lines[-1].get_color(), alpha=0.7)
        axes[1].plot(x, [_f(r, "hours_opt_grid") for r in rrows], "-", label=f"c_B/c_T={ratio}")
    for ax, ylabel in zip(axes, ["% budget saved", "optimal recording hours"]):
        ax.set_xscale("log")
        ax.set_xlabel("budget")
        ax.set_ylabel(ylabel)
        ax.legend()
    axes[0].set_title("solid grid optimum, dotted asymptotic")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_lambda(rows, path) -> None:
    fig, ax = plt.subplots()
    for n_t, trows in sorted(_group(rows, "n_T").items(), key=lambda kv: int(kv[0])):
        trows = sorted(trows, key=lambda r: float(r["lambda"]))
        x = [float(r["lambda"]) for r in trows]
        mean = [_f(r, "mean") for r in trows]
        lo = [m - _f(r, "ci_low") for r, m in zip(trows, mean)]
        hi = [_f(r, "ci_high") - m for r, m in zip(trows, mean)]
        ax.errorbar(x, mean, yerr=[lo, hi], fmt="s-", ms=3, capsize=2, label=f"empirical n_T={n_t}")
        ax.plot(x, [_f(r, "finite_risk") for r in trows], "-", alpha=0.6,
                color=ax.lines[-1].get_color())
        best = [float(r["lambda_opt"]) for r in trows][0]
        ax.axvline(best, color=ax.lines[-1].get_color(), ls="--", alpha=0.4)
    ax.set_xscale("log")
    ax.set_xlabel("penalty")
    ax.set_ylabel("test risk")
    ax.set_title("risk over penalty grid (dashed: schedule optimum)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_validate(rows, path) -> None:
    fig, ax = plt.subplots()
    for policy, prows in sorted(_group(rows, "policy").items()):
        prows = sorted(prows, key=lambda r: int(r["n_T"]))
        x = [int(r["n_T"]) for r in prows]
        mean = [_f(r, "mean") for r in prows]
        lo = [m - _f(r, "ci_low") for r, m in zip(prows, mean)]
        hi = [_f(r, "ci_high") - m for r, m in zip(prows, mean)]
        ax.errorbar(x, mean, yerr=[lo, hi], fmt="s", ms=4, capsize=3, label=f"empirical {policy}")
        ax.plot(x, [_f(r, "theory") for r in prows], "-", alpha=0.7,
                color=ax.lines[-1].get_color(), label=f"theory {policy}")
    ax.set_xscale("log")
    ax.set_xlabel("task samples")
    ax.set_ylabel("test risk")
    ax.set_title("Monte Carlo vs closed form")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


RENDERERS = {
    "savings": render_savings,
    "robustness": render_robustness,
    "budget": render_budget,
    "lambda_curve": render_lambda,
    "validate": render_validate,
}


def render_table(name: str, rows, path) -> bool:
    """Render a known table kind; returns False for tables with no figure."""
    fn = RENDERERS.get(name)
    if fn is None or not rows:
        return False
    fn(rows, path)
    return True
