"""Linear mixed model with the gene matrix standing in for the random-effect design.

With ``V = delta * I + X Xᵀ`` and ``X Xᵀ = U diag(e) Uᵀ``, every quantity
below is computed through the eigendecomposition: ``V⁻¹ = U diag(1/(delta+e)) Uᵀ``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sps

from ..errors import InvalidInput, SingularModel
from .design import DesignMatrices, RegressionResult, SelectedGene
from .multitest import bh_correct

log = logging.getLogger(__name__)

DELTA_GRID = tuple(10.0**k for k in np.linspace(-5, 5, 21))
EIG_TOL = 1e-8


@dataclass
class LmmSpec:
    delta: float
    eigvals: np.ndarray
    eigvecs: np.ndarray


def gram_eigh(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of ``X Xᵀ`` with round-off negatives clipped to zero."""
    X = np.asarray(X, dtype=float)
    evals, evecs = np.linalg.eigh(X @ X.T)
    scale = max(1.0, float(np.abs(evals).max(initial=0.0)))
    if np.any(evals < -EIG_TOL * scale):
        raise SingularModel("X Xᵀ has materially negative eigenvalues")
    return np.clip(evals, 0.0, None), evecs


def build_spec(X: np.ndarray, delta: float) -> LmmSpec:
    evals, evecs = gram_eigh(X)
    return LmmSpec(float(delta), evals, evecs)


def _weights(spec: LmmSpec) -> np.ndarray:
    d = spec.eigvals + spec.delta
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise SingularModel(f"delta={spec.delta} makes delta*I + X Xᵀ singular")
    return d


def _covariates(n: int, C: Optional[np.ndarray], intercept: bool = True) -> np.ndarray:
    cols = [np.ones((n, 1))] if intercept else [np.empty((n, 0))]
    if C is not None and np.size(C):
        cols.append(np.asarray(C, dtype=float).reshape(n, -1))
    return np.hstack(cols)


def null_loglik(
    evals: np.ndarray,
    evecs: np.ndarray,
    y: np.ndarray,
    delta: float,
    B: np.ndarray,
) -> float:
    """Restricted (REML) profile log-likelihood of ``y ~ N(B mu, s2 (X Xᵀ + delta I))``.

    The restricted form matters: z-scored ``X`` always has the intercept in the
    null space of ``X Xᵀ``, where the plain likelihood diverges as delta -> 0.
    """
    n = len(y)
    d = evals + delta
    w = 1.0 / d
    yr = evecs.T @ y
    Br = evecs.T @ B
    BtW = Br.T * w
    info = BtW @ Br
    mu, *_ = np.linalg.lstsq(info, BtW @ yr, rcond=None)
    r = yr - Br @ mu
    dof = n - np.linalg.matrix_rank(B)
    s2 = float(np.sum(w * r * r)) / dof
    if s2 <= 0:
        return np.inf
    _, logdet_info = np.linalg.slogdet(info)
    return -0.5 * (dof * np.log(2 * np.pi * s2) + float(np.sum(np.log(d))) + logdet_info + dof)


def estimate_delta(
    X: np.ndarray,
    y: np.ndarray,
    C: Optional[np.ndarray] = None,
    grid: Sequence[float] = DELTA_GRID,
    return_profile: bool = False,
):
    """Variance ratio maximizing the null-model restricted likelihood over a log grid.

    One eigendecomposition of ``X Xᵀ`` is shared across the grid. Ties go to
    the smaller ratio; an optimum on either grid end is logged as a warning.
    """
    y = np.asarray(y, dtype=float).ravel()
    grid = sorted(float(g) for g in grid)
    if not grid or grid[0] <= 0:
        raise InvalidInput("delta grid must be non-empty and positive")
    evals, evecs = gram_eigh(X)
    B = _covariates(len(y), C)
    lls = [null_loglik(evals, evecs, y, d, B) for d in grid]
    best = int(np.argmax(lls))
    if len(grid) > 1 and best in (0, len(grid) - 1):
        log.warning("delta estimate %.3g lies on the grid boundary", grid[best])
    if return_profile:
        return grid[best], lls
    return grid[best]


def whitening(spec: LmmSpec) -> np.ndarray:
    """``W`` with ``Wᵀ W = V⁻¹`` (eigenbasis form, cheaper than the symmetric root)."""
    d = _weights(spec)
    return spec.eigvecs.T / np.sqrt(d)[:, None]


def lmm_fit(dm: DesignMatrices, spec: LmmSpec, alpha: float = 0.05, intercept: bool = True) -> RegressionResult:
    """Per-gene generalized least squares under the mixed-model covariance.

    Each gene's effect is ``xᵀV⁻¹y / xᵀV⁻¹x`` after the intercept and any
    conditions are projected out in the whitened space. Standard errors use
    the per-gene whitened residual variance; p-values are two-sided Wald
    tests, Benjamini-Hochberg adjusted, and genes with adjusted p below
    ``alpha`` are selected. For centered genes the intercept projection
    leaves every effect unchanged.
    """
    n, p = dm.X.shape
    if spec.eigvecs.shape != (n, n):
        raise InvalidInput("LMM spec was built for a different sample count")
    W = whitening(spec)
    Xw = W @ dm.X
    yw = W @ dm.y
    Bw = W @ _covariates(n, dm.C, intercept)
    rank = 0
    Q = np.empty((n, 0))
    if Bw.shape[1]:
        Q, R = np.linalg.qr(Bw)
        rank = int(np.sum(np.abs(np.diag(R)) > 1e-10 * max(1.0, np.abs(R).max())))
        Q = Q[:, :rank]

    Xr = Xw - Q @ (Q.T @ Xw)
    yr = yw - Q @ (Q.T @ yw)
    xx = np.einsum("ij,ij->j", Xr, Xr)
    xy = Xr.T @ yr
    ok = xx > 1e-12 * np.maximum(1.0, np.einsum("ij,ij->j", Xw, Xw))
    beta = np.where(ok, xy / np.where(ok, xx, 1.0), 0.0)

    dof = n - rank - 1
    if dof < 1:
        raise InvalidInput(f"too few samples ({n}) for {rank} covariates plus a gene effect")
    rss = float(yr @ yr) - np.where(ok, xy * beta, 0.0)
    rss = np.maximum(rss, 0.0)
    sigma2 = rss / dof
    se = np.where(ok, np.sqrt(sigma2 / np.where(ok, xx, 1.0)), np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, beta / se, np.where(beta == 0, 0.0, np.inf))
    pvals = np.where(ok, 2.0 * sps.norm.sf(np.abs(z)), 1.0)
    adj, reject = bh_correct(pvals, alpha)

    cond_coef = None
    if dm.C is not None:
        # GLS fit of the conditions alone, reported for reference
        coef, *_ = np.linalg.lstsq(Bw, yw, rcond=None)
        cond_coef = coef[int(intercept):]

    selected = [
        SelectedGene(symbol=name, coefficient=float(b), p_value=float(pv), adjusted_p=float(ap))
        for name, b, pv, ap, rj in zip(dm.feature_names, beta, pvals, adj, reject)
        if rj
    ]
    return RegressionResult(
        model_kind="LMM",
        feature_names=list(dm.feature_names),
        coefficients=beta,
        selected=selected,
        delta=spec.delta,
        standard_errors=se,
        p_values=pvals,
        adjusted_p=adj,
        condition_names=list(dm.condition_names),
        condition_coefficients=cond_coef,
    )


def rotation_matrix(X: np.ndarray, delta: float) -> np.ndarray:
    """Symmetric inverse square root ``(delta I + X Xᵀ)^(-1/2)``."""
    if delta <= 0:
        raise InvalidInput("delta must be positive")
    spec = build_spec(X, delta)
    d = _weights(spec)
    U = spec.eigvecs
    return (U / np.sqrt(d)) @ U.T


def rotate(X: np.ndarray, delta: float, y: Optional[np.ndarray] = None):
    """Decorrelate samples: ``X̃ = (delta I + X Xᵀ)^(-1/2) X``.

    When ``y`` is given it receives the same rotation and ``(X̃, ỹ)`` is returned.
    """
    X = np.asarray(X, dtype=float)
    M = rotation_matrix(X, delta)
    if y is None:
        return M @ X
    return M @ X, M @ np.asarray(y, dtype=float)
