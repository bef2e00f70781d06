"""Column standardization and eigen-gap confounding detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TooFewSamples


@dataclass(frozen=True)
class Standardizer:
    """Per-column location/scale learned from one matrix, applicable to another.

    Columns with zero spread keep ``scale == 0`` and are mapped to zeros.
    """

    mean: np.ndarray
    scale: np.ndarray

    def transform(self, M: np.ndarray) -> np.ndarray:
        M = np.asarray(M, dtype=float)
        safe = np.where(self.scale > 0, self.scale, 1.0)
        out = (M - self.mean) / safe
        out[:, self.scale == 0] = 0.0
        return out


def fit_standardizer(M: np.ndarray) -> Standardizer:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if M.shape[0] == 0:
        return Standardizer(np.zeros(M.shape[1]), np.zeros(M.shape[1]))
    mean = M.mean(axis=0)
    scale = M.std(axis=0)  # population (1/n) convention
    # a spread at rounding level of the mean is a constant column
    tiny = np.abs(mean) * 1e-14 + 1e-300
    scale = np.where(scale > tiny, scale, 0.0)
    return Standardizer(mean, scale)


def zscore(M: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standardize every column to mean 0 and population sd 1.

    Returns:
        ``(Z, mean, sd)``; constant columns become zeros and report ``sd == 0``.
    """
    std = fit_standardizer(M)
    return std.transform(M), std.mean, std.scale


def gap_spectrum(X: np.ndarray) -> np.ndarray:
    """Eigenvalues of ``X Xᵀ`` scaled to unit trace, sorted descending."""
    X = np.asarray(X, dtype=float)
    gram = X @ X.T
    evals = np.linalg.eigvalsh(gram)[::-1]
    evals = np.clip(evals, 0.0, None)
    total = evals.sum()
    if total <= 0:
        return np.zeros_like(evals)
    return evals / total


def detect_batch_effect(X: np.ndarray, t: int = 10) -> bool:
    """Report a confounding structure when the leading eigenvalues show a gap.

    The spectrum of ``X Xᵀ`` is normalized to unit trace, so each eigenvalue
    is a share of total variance and ``1/n`` is the share of an average
    direction. A gap larger than that among the first ``t`` eigenvalues means
    a few directions dominate, which iid noise does not produce.

    Args:
        X: z-scored samples-by-features matrix.
        t: number of leading gaps to inspect.

    Raises:
        TooFewSamples: fewer than two samples.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise TooFewSamples(f"need at least 2 samples for detection, got {n}")
    if t < 1:
        raise ValueError("t must be >= 1")
    e = gap_spectrum(X)
    m = min(t, n - 1)
    gaps = e[:m] - e[1 : m + 1]
    return bool(np.any(gaps > 1.0 / n))
