"""Two-step regression: impute an unobserved condition from shared genes."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from ..cohort import LinkedDataset
from ..errors import InvalidInput, NoCommonRegressors
from .design import DesignMatrices, is_binary
from .lasso import coordinate_descent, predict
from .normalize import zscore
from .tuning import DEFAULT_FOLDS, DEFAULT_LAMBDA_GRID, tune_lasso


def common_regressors(trait_ds: LinkedDataset, cond_ds: LinkedDataset, known_condition_genes: Iterable[str]) -> list[str]:
    return sorted(set(trait_ds.genes) & set(cond_ds.genes) & set(known_condition_genes))


def two_step_regress(
    trait_ds: LinkedDataset,
    cond_ds: LinkedDataset,
    known_condition_genes: Iterable[str],
    grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    folds: int = DEFAULT_FOLDS,
    seed: int = 0,
) -> DesignMatrices:
    """Predict the condition in the trait cohort and use it as a covariate.

    Step one fits a CV-tuned Lasso of the condition on the shared,
    condition-associated genes of the condition cohort. Step two applies it
    to the same genes of the trait cohort (each cohort standardized on its
    own), thresholding at 0.5 when the condition is binary. Those genes are
    then removed from the trait cohort's features.
    """
    common = common_regressors(trait_ds, cond_ds, known_condition_genes)
    if not common:
        raise NoCommonRegressors("no condition-associated gene is shared by both cohorts")
    y_cond = cond_ds.y
    if np.all(y_cond == y_cond[0]):
        raise InvalidInput("condition is constant in the condition cohort")
    step1 = DesignMatrices(cond_ds.gene_columns(common), y_cond, common)
    step1.validate()
    tuned = tune_lasso(step1, grid, folds, seed)
    Xc_z = zscore(step1.X)[0]
    fit = coordinate_descent(Xc_z, y_cond, tuned.best * step1.n)

    Xt_z = zscore(trait_ds.gene_columns(common))[0]
    predicted = predict(fit, Xt_z)
    if is_binary(y_cond):
        predicted = (predicted >= 0.5).astype(float)

    rest = trait_ds.without_genes(common)
    if not rest.genes:
        raise NoCommonRegressors("removing the shared regressors leaves no gene features")
    return DesignMatrices(
        X=rest.X,
        y=rest.y,
        feature_names=list(rest.genes),
        C=predicted[:, None],
        condition_names=[cond_ds.trait_name],
    )
