"""Statistical core: normalization, detection, Lasso, mixed model, tuning, interpretation."""

from .analysis import (
    AnalysisSettings,
    GTAProblem,
    TraitPrediction,
    analyze_design,
    design_from_dataset,
    predict_trait_cv,
    run_gta_analysis,
)
from .design import DesignMatrices, RegressionResult, SelectedGene
from .lasso import coordinate_descent, lambda_max, lasso_fit, soft_threshold
from .lmm import LmmSpec, build_spec, estimate_delta, lmm_fit, rotate, rotation_matrix
from .multitest import bh_correct
from .normalize import detect_batch_effect, zscore
from .tuning import cv_folds, tune_hyperparameters, tune_lasso
from .twostep import two_step_regress

__all__ = [
    "AnalysisSettings",
    "DesignMatrices",
    "GTAProblem",
    "LmmSpec",
    "RegressionResult",
    "SelectedGene",
    "TraitPrediction",
    "analyze_design",
    "bh_correct",
    "build_spec",
    "coordinate_descent",
    "cv_folds",
    "design_from_dataset",
    "detect_batch_effect",
    "estimate_delta",
    "lambda_max",
    "lasso_fit",
    "lmm_fit",
    "predict_trait_cv",
    "rotate",
    "rotation_matrix",
    "run_gta_analysis",
    "soft_threshold",
    "tune_hyperparameters",
    "tune_lasso",
    "two_step_regress",
    "zscore",
]
