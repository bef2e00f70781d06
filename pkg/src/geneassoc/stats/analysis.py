"""End-to-end gene-trait association analysis and trait prediction."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from ..cohort import LinkedDataset
from ..errors import InvalidInput
from .design import DesignMatrices, RegressionResult, is_binary
from .lasso import coordinate_descent, lasso_fit, predict
from .lmm import DELTA_GRID, build_spec, estimate_delta, lmm_fit, rotate
from .normalize import detect_batch_effect, fit_standardizer, zscore
from .tuning import DEFAULT_FOLDS, DEFAULT_LAMBDA_GRID, cv_folds, normalize_split, tune_lasso
from .twostep import two_step_regress

log = logging.getLogger(__name__)

AGE_GENDER = ("Age", "Gender")


@dataclass
class GTAProblem:
    trait: str
    condition: Optional[str] = None

    def __post_init__(self):
        if self.condition is not None and self.condition == self.trait:
            raise InvalidInput("condition must differ from the trait")

    @property
    def is_two_step(self) -> bool:
        return self.condition is not None and self.condition not in AGE_GENDER

    @property
    def key(self) -> str:
        return self.trait if self.condition is None else f"{self.trait}__{self.condition}"


@dataclass
class AnalysisSettings:
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID
    delta_grid: Sequence[float] = DELTA_GRID
    folds: int = DEFAULT_FOLDS
    seed: int = 0
    gap_t: int = 10
    alpha: float = 0.05
    correction: str = "lmm"  # or "rotation"
    rotate_y: bool = True


def analyze_design(dm: DesignMatrices, settings: AnalysisSettings = AnalysisSettings()) -> RegressionResult:
    """Detect batch structure, pick the model, tune, fit on all samples, interpret."""
    dm.validate()
    Xz = zscore(dm.X)[0]
    Cz = None if dm.C is None else zscore(dm.C)[0]
    batch = detect_batch_effect(Xz, settings.gap_t)
    norm = {"method": "zscore", "sd": "population"}

    if batch and settings.correction == "lmm":
        delta, profile = estimate_delta(Xz, dm.y, Cz, settings.delta_grid, return_profile=True)
        result = lmm_fit(DesignMatrices(Xz, dm.y, dm.feature_names, Cz, dm.condition_names), build_spec(Xz, delta), settings.alpha)
        result.cv = {"folds": 0, "grid": sorted(float(g) for g in settings.delta_grid), "scores": [float(v) for v in profile], "seed": settings.seed}
    else:
        rotated = batch and settings.correction == "rotation"
        work = dm
        delta = None
        if rotated:
            delta = estimate_delta(Xz, dm.y, Cz, settings.delta_grid)
            Xr, yr = rotate(Xz, delta, dm.y)
            Cr = None if Cz is None else rotate(Xz, delta, Cz)[1]
            work = DesignMatrices(Xr, yr if settings.rotate_y else dm.y, dm.feature_names, Cr, dm.condition_names)
        elif batch:
            raise InvalidInput(f"unknown correction {settings.correction!r}")
        tuned = tune_lasso(work, settings.lambda_grid, settings.folds, settings.seed)
        Wx = zscore(work.X)[0]
        Wc = None if work.C is None else zscore(work.C)[0]
        result = lasso_fit(DesignMatrices(Wx, work.y, work.feature_names, Wc, work.condition_names), tuned.best * work.n)
        result.best_lambda = tuned.best
        result.delta = delta
        result.rotated = rotated
        result.cv = tuned.to_json()
    result.batch_effect = batch
    result.normalization = norm
    return result


def design_from_dataset(ds: LinkedDataset, condition: Optional[str] = None) -> DesignMatrices:
    """Genes as features; Age or Gender as the condition column when requested."""
    C, names = None, []
    if condition is not None:
        if condition not in ds.clinical:
            raise InvalidInput(f"dataset has no {condition!r} column")
        C, names = ds.clinical[condition][:, None], [condition]
    return DesignMatrices(ds.X, ds.y, list(ds.genes), C, names)


def run_gta_analysis(
    problem: GTAProblem,
    trait_ds: LinkedDataset,
    cond_ds: Optional[LinkedDataset] = None,
    known_condition_genes: Optional[Iterable[str]] = None,
    settings: AnalysisSettings = AnalysisSettings(),
) -> RegressionResult:
    """Solve one problem: assemble design matrices, then :func:`analyze_design`."""
    if problem.is_two_step:
        if cond_ds is None:
            raise InvalidInput(f"two-step problem needs a {problem.condition!r} cohort")
        dm = two_step_regress(
            trait_ds, cond_ds, known_condition_genes or (), settings.lambda_grid, settings.folds, settings.seed
        )
    else:
        dm = design_from_dataset(trait_ds, problem.condition)
    return analyze_design(dm, settings)


@dataclass
class TraitPrediction:
    accuracy: float
    f1: float
    fold_accuracy: list[float] = field(default_factory=list)
    fold_f1: list[float] = field(default_factory=list)
    fold_coefficients: list[np.ndarray] = field(default_factory=list)
    folds: list[np.ndarray] = field(default_factory=list)

    def __iter__(self):
        return iter((self.accuracy, self.f1))


def _binary_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    tp = float(np.sum((y_pred == 1) & (y_true == 1)))
    fp = float(np.sum((y_pred == 1) & (y_true == 0)))
    fn = float(np.sum((y_pred == 0) & (y_true == 1)))
    if tp + fp + fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


def predict_trait_cv(
    ds: LinkedDataset,
    grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    folds: int = DEFAULT_FOLDS,
    seed: int = 0,
) -> TraitPrediction:
    """Cross-validated prediction of a binary trait from genes and covariates.

    Every outer training fold tunes its own Lasso penalty by inner CV and is
    standardized on its own rows; the validation fold only receives the
    fitted transform. Predictions are thresholded at 0.5.
    """
    dm = DesignMatrices(
        ds.X, ds.y, list(ds.genes),
        np.column_stack([ds.clinical[c] for c in ds.covariate_names]) if ds.covariate_names else None,
        ds.covariate_names,
    )
    if not is_binary(dm.y):
        raise InvalidInput("trait prediction needs a binary trait")
    dm.validate()
    out = TraitPrediction(0.0, 0.0)
    for val in cv_folds(dm.n, folds, seed):
        train = np.setdiff1d(np.arange(dm.n), val)
        sub = dm.subset(train)
        if np.all(sub.y == sub.y[0]):
            alpha = max(grid)
        else:
            alpha = tune_lasso(sub, grid, folds, seed).best
        split = normalize_split(dm, train, val)
        fit = coordinate_descent(split.X_train, dm.y[train], alpha * len(train), C=split.C_train)
        pred = (predict(fit, split.X_val, split.C_val) >= 0.5).astype(float)
        out.fold_accuracy.append(float(np.mean(pred == dm.y[val])))
        out.fold_f1.append(_binary_f1(dm.y[val], pred))
        out.fold_coefficients.append(fit.coef.copy())
        out.folds.append(val)
    out.accuracy = float(np.mean(out.fold_accuracy))
    out.f1 = float(np.mean(out.fold_f1))
    return out
