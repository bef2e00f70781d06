"""Seeded k-fold cross-validation and hyperparameter search."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import TooFewSamples
from .design import DesignMatrices
from .lasso import LassoFit, coordinate_descent, predict
from .normalize import fit_standardizer

DEFAULT_LAMBDA_GRID = tuple(10.0**k for k in range(-6, 1))
DEFAULT_FOLDS = 5


def cv_folds(n: int, k: int = DEFAULT_FOLDS, seed: int = 0) -> list[np.ndarray]:
    """Split ``range(n)`` into ``k`` disjoint validation folds (sorted indices)."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n < k:
        raise TooFewSamples(f"{n} samples cannot fill {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, k)]


def validation_score(y_true: np.ndarray, y_pred: np.ndarray, binary: bool) -> float:
    """Accuracy at a 0.5 threshold for binary targets, R² otherwise."""
    if binary:
        return float(np.mean((y_pred >= 0.5).astype(float) == y_true))
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


@dataclass
class NormalizedSplit:
    X_train: np.ndarray
    X_val: np.ndarray
    C_train: Optional[np.ndarray]
    C_val: Optional[np.ndarray]


def normalize_split(dm: DesignMatrices, train: np.ndarray, val: np.ndarray) -> NormalizedSplit:
    """z-score features and conditions with statistics from the training rows only."""
    sx = fit_standardizer(dm.X[train])
    if dm.C is None:
        C_train = C_val = None
    else:
        sc = fit_standardizer(dm.C[train])
        C_train, C_val = sc.transform(dm.C[train]), sc.transform(dm.C[val])
    return NormalizedSplit(sx.transform(dm.X[train]), sx.transform(dm.X[val]), C_train, C_val)


def lasso_path(
    X: np.ndarray,
    y: np.ndarray,
    alphas: Sequence[float],
    C: Optional[np.ndarray] = None,
) -> dict[float, LassoFit]:
    """Fit each per-sample penalty ``alpha`` (``lam = alpha * n``), largest first, warm-started."""
    n = X.shape[0]
    fits: dict[float, LassoFit] = {}
    prev = None
    for a in sorted(alphas, reverse=True):
        prev = coordinate_descent(X, y, a * n, C=C, warm_start=prev)
        fits[a] = prev
    return fits


@dataclass
class TuneResult:
    model_kind: str
    best: float
    grid: list[float]
    scores: list[float]
    folds: int
    seed: int
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"folds": self.folds, "grid": list(self.grid), "scores": list(self.scores), "seed": self.seed}


def best_by_score(grid: Sequence[float], scores: Sequence[float]) -> float:
    """Highest score wins; ties go to the smaller grid value."""
    best_val, best_score = None, -np.inf
    for val, score in sorted(zip(grid, scores)):
        if score > best_score:
            best_val, best_score = val, score
    return best_val if best_val is not None else min(grid)


def tune_lasso(
    dm: DesignMatrices,
    grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    folds: int = DEFAULT_FOLDS,
    seed: int = 0,
) -> TuneResult:
    """Choose the per-sample Lasso penalty by k-fold CV on the raw design.

    Normalization is refit inside every training fold. Binary targets are
    scored by accuracy at 0.5, continuous targets by R².
    """
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("empty hyperparameter grid")
    binary = dm.is_binary
    totals = {a: 0.0 for a in grid}
    parts = cv_folds(dm.n, folds, seed)
    for val in parts:
        train = np.setdiff1d(np.arange(dm.n), val)
        split = normalize_split(dm, train, val)
        fits = lasso_path(split.X_train, dm.y[train], grid, C=split.C_train)
        for a, fit in fits.items():
            pred = predict(fit, split.X_val, split.C_val)
            totals[a] += validation_score(dm.y[val], pred, binary)
    scores = [totals[a] / len(parts) for a in grid]
    return TuneResult("Lasso", best_by_score(grid, scores), grid, scores, folds, seed)


def tune_hyperparameters(
    model_kind: str,
    dm: DesignMatrices,
    grid: Optional[Sequence[float]] = None,
    folds: int = DEFAULT_FOLDS,
    seed: int = 0,
) -> TuneResult:
    """Select a model's hyperparameter.

    ``"Lasso"``: k-fold CV over per-sample penalties (see :func:`tune_lasso`).
    ``"LMM"``: the per-gene closed form has no penalty to cross-validate;
    the variance ratio is chosen by restricted likelihood over ``grid`` and
    the profile is reported as the scores.
    """
    if model_kind == "Lasso":
        return tune_lasso(dm, DEFAULT_LAMBDA_GRID if grid is None else grid, folds, seed)
    if model_kind == "LMM":
        from .lmm import DELTA_GRID, estimate_delta
        from .normalize import zscore

        grid = sorted(DELTA_GRID if grid is None else grid)
        Xz = zscore(dm.X)[0]
        Cz = None if dm.C is None else zscore(dm.C)[0]
        best, lls = estimate_delta(Xz, dm.y, Cz, grid, return_profile=True)
        return TuneResult("LMM", best, list(grid), [float(v) for v in lls], 0, seed)
    raise ValueError(f"unknown model kind {model_kind!r}")
