"""Brute-force reference implementations used only by the tests."""

import itertools

import numpy as np


def bh_bruteforce(p, alpha):
    """Rejection set by the step-up definition: largest k with p_(k) <= k alpha / m."""
    p = np.asarray(p, dtype=float)
    m = len(p)
    ranked = sorted(range(m), key=lambda i: (p[i], i))
    k_star = 0
    for k in range(m, 0, -1):
        if p[ranked[k - 1]] <= k * alpha / m:
            k_star = k
            break
    reject = np.zeros(m, dtype=bool)
    for i in ranked[:k_star]:
        reject[i] = True
    return reject


def bh_adjusted_bruteforce(p):
    p = np.asarray(p, dtype=float)
    m = len(p)
    ranked = sorted(range(m), key=lambda i: (p[i], i))
    out = np.empty(m)
    for pos, i in enumerate(ranked):
        out[i] = min(1.0, min(p[ranked[k]] * m / (k + 1) for k in range(pos, m)))
    return out


def auroc_pairwise(scores, labels):
    """Probability a positive outranks a negative, ties counted one half. O(n^2)."""
    pos = [s for s, lab in zip(scores, labels) if lab]
    neg = [s for s, lab in zip(scores, labels) if not lab]
    total = 0.0
    for a, b in itertools.product(pos, neg):
        total += 1.0 if a > b else 0.5 if a == b else 0.0
    return total / (len(pos) * len(neg))


def gsea_direct(ranked_genes, ranked_scores, gene_set, weight=1.0):
    """Running sum at each rank from explicit prefix sums: hit-weight share minus miss share."""
    hits = [g in gene_set for g in ranked_genes]
    w = [(abs(s) ** weight if weight != 0 else 1.0) if h else 0.0 for s, h in zip(ranked_scores, hits)]
    if not any(v > 0 for v in w):
        w = [1.0 if h else 0.0 for h in hits]
    n_miss = len(hits) - sum(hits)
    total = 0.0
    for v in w:
        total += v
    walk = []
    for i in range(len(hits)):
        h = 0.0
        for v in w[: i + 1]:
            h += v
        m = sum(1 for x in hits[: i + 1] if not x)
        walk.append(h / total - m / n_miss)
    return walk


def lasso_kkt_violation(X, y, beta, intercept, lam):
    r = y - X @ beta - intercept
    g = X.T @ r
    viol = np.where(beta != 0, np.abs(g - lam * np.sign(beta)), np.maximum(np.abs(g) - lam, 0.0))
    return float(viol.max())


def dense_gls(X, y, V):
    """GLS slopes through an explicit matrix inverse."""
    Vi = np.linalg.inv(V)
    return np.array([(x @ Vi @ y) / (x @ Vi @ x) for x in X.T])
