"""Benjamini-Hochberg false discovery rate control."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInput


def bh_correct(p, alpha: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """Step-up Benjamini-Hochberg procedure.

    Args:
        p: raw p-values in ``[0, 1]``.
        alpha: target false discovery rate.

    Returns:
        ``(adjusted, reject)``. ``adjusted[i] = min_{k >= rank(i)} m p_(k) / k``
        capped at 1; ``reject`` marks every hypothesis ranked at or below the
        largest ``k`` with ``p_(k) <= k alpha / m``.
    """
    p = np.asarray(p, dtype=float).ravel()
    m = p.size
    if m == 0:
        return np.zeros(0), np.zeros(0, dtype=bool)
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise InvalidInput("p-values must lie in [0, 1]")
    order = np.argsort(p, kind="mergesort")
    ranked = p[order]
    ks = np.arange(1, m + 1)
    scaled = ranked * m / ks
    adj_sorted = np.minimum(np.minimum.accumulate(scaled[::-1])[::-1], 1.0)

    passing = np.flatnonzero(ranked <= ks * alpha / m)
    reject_sorted = np.zeros(m, dtype=bool)
    if passing.size:
        reject_sorted[: passing[-1] + 1] = True

    adjusted = np.empty(m)
    reject = np.empty(m, dtype=bool)
    adjusted[order] = adj_sorted
    reject[order] = reject_sorted
    return adjusted, reject
