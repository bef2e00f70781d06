"""Design matrices and the regression result record."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import InvalidInput


@dataclass
class DesignMatrices:
    """Gene features ``X``, trait ``y`` and optional conditions ``C``."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    C: Optional[np.ndarray] = None
    condition_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.ndim != 2:
            raise InvalidInput("X must be 2-D")
        n, p = self.X.shape
        if self.y.shape[0] != n:
            raise InvalidInput(f"y has {self.y.shape[0]} entries for {n} samples")
        if len(self.feature_names) != p:
            raise InvalidInput("feature_names length does not match X")
        if self.C is not None:
            self.C = np.asarray(self.C, dtype=float)
            if self.C.ndim == 1:
                self.C = self.C[:, None]
            if self.C.shape[1] == 0:
                self.C = None
        if self.C is not None:
            if self.C.shape[0] != n:
                raise InvalidInput("C row count does not match X")
            if len(self.condition_names) != self.C.shape[1]:
                raise InvalidInput("condition_names length does not match C")
        elif self.condition_names:
            raise InvalidInput("condition_names given without C")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def is_binary(self) -> bool:
        return is_binary(self.y)

    def validate(self) -> None:
        """Check the analysis preconditions: dense, n >= 2, p >= 1, y varies."""
        if self.n < 2:
            raise InvalidInput(f"need at least 2 samples, got {self.n}")
        if self.p < 1:
            raise InvalidInput("no gene features")
        arrays = [self.X, self.y] + ([self.C] if self.C is not None else [])
        if any(not np.all(np.isfinite(a)) for a in arrays):
            raise InvalidInput("design matrices contain missing or non-finite values")
        if np.all(self.y == self.y[0]):
            raise InvalidInput("trait is constant across samples")

    def subset(self, rows: np.ndarray) -> "DesignMatrices":
        return DesignMatrices(
            X=self.X[rows],
            y=self.y[rows],
            feature_names=list(self.feature_names),
            C=None if self.C is None else self.C[rows],
            condition_names=list(self.condition_names),
        )


def is_binary(y: np.ndarray) -> bool:
    y = np.asarray(y)
    return bool(y.size) and bool(np.all((y == 0) | (y == 1)))


@dataclass
class SelectedGene:
    symbol: str
    coefficient: float
    p_value: Optional[float] = None
    adjusted_p: Optional[float] = None


@dataclass
class RegressionResult:
    """Fitted model, per-feature statistics and the significant-gene subset.

    ``scores`` ranks every tested gene for threshold-free evaluation:
    ``|coefficient|`` for Lasso and ``1 - adjusted_p`` for the mixed model.
    """

    model_kind: str  # "Lasso" or "LMM"
    feature_names: list[str]
    coefficients: np.ndarray
    selected: list[SelectedGene]
    best_lambda: Optional[float] = None
    delta: Optional[float] = None
    standard_errors: Optional[np.ndarray] = None
    p_values: Optional[np.ndarray] = None
    adjusted_p: Optional[np.ndarray] = None
    condition_names: list[str] = field(default_factory=list)
    condition_coefficients: Optional[np.ndarray] = None
    intercept: float = 0.0
    normalization: dict = field(default_factory=dict)
    cv: dict = field(default_factory=dict)
    batch_effect: Optional[bool] = None
    rotated: bool = False

    @property
    def selected_symbols(self) -> list[str]:
        return [g.symbol for g in self.selected]

    def scores(self) -> dict[str, float]:
        if self.model_kind == "LMM":
            vals = 1.0 - np.asarray(self.adjusted_p, dtype=float)
        else:
            vals = np.abs(np.asarray(self.coefficients, dtype=float))
        return {name: float(v) for name, v in zip(self.feature_names, vals)}
