"""Value of neural recordings for task learning in a linear-Gaussian model:
generative system, two-stage estimators, closed-form risk laws, Monte Carlo
validation, brain/task exchange rates, and budget planning."""

from .budget import BudgetReport, BudgetSpec, asymptotic_allocation, favorability, grid_allocation
from .errors import (
    BudgetTooSmallError,
    ConfigError,
    DegenerateScheduleError,
    DimensionError,
    InversionError,
    MisalignmentError,
    NeurovalError,
    OutOfRegimeError,
    RankError,
    SingularDesignError,
)
from .estimators import (
    EncodingModel,
    TaskPredictor,
    exact_risk,
    fit_befs_hard,
    fit_befs_soft,
    fit_encoding,
    fit_tos,
)
from .linmodel import (
    BrainDataset,
    ModelParams,
    TaskDataset,
    TestSpec,
    build_fmri_preset,
    build_random_model,
    misalignment,
    model_from_config,
    pooling_matrix,
    sample_brain_dataset,
    sample_task_dataset,
    snr_brain,
    snr_task,
)
from .montecarlo import (
    LambdaCurve,
    RiskEstimate,
    ValueEstimate,
    empirical_value,
    estimate_risk,
    grid_search_lambda,
)
from .theory import (
    TheoryQuantities,
    asymptotic_value,
    befs_finite_risk,
    befs_hard_risk,
    derive_quantities,
    optimal_lambda,
    robustness_value,
    tos_risk,
)
from .valuation import ValueReport, savings_curve, value_from_risks

__version__ = "0.1.0"

__all__ = [
    "BrainDataset", "BudgetReport", "BudgetSpec", "BudgetTooSmallError", "ConfigError",
    "DegenerateScheduleError", "DimensionError", "EncodingModel", "InversionError",
    "LambdaCurve", "MisalignmentError", "ModelParams", "NeurovalError", "OutOfRegimeError",
    "RankError", "RiskEstimate", "SingularDesignError", "TaskDataset", "TaskPredictor",
    "TestSpec", "TheoryQuantities", "ValueEstimate", "ValueReport",
    "asymptotic_allocation", "asymptotic_value", "befs_finite_risk", "befs_hard_risk",
    "build_fmri_preset", "build_random_model", "derive_quantities", "empirical_value",
    "estimate_risk", "exact_risk", "favorability", "fit_befs_hard", "fit_befs_soft",
    "fit_encoding", "fit_tos", "grid_allocation", "grid_search_lambda", "misalignment",
    "model_from_config", "optimal_lambda", "pooling_matrix", "robustness_value",
    "sample_brain_dataset", "sample_task_dataset", "savings_curve", "snr_brain",
    "snr_task", "tos_risk", "value_from_risks",
]
