"""Evaluation metrics for dataset filtering/selection, preprocessing and gene identification."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Hashable, Iterable, Mapping, Optional

import numpy as np
from scipy.stats import rankdata

from .cohort import LinkedDataset
from .errors import DegenerateLabels, InvalidInput


@dataclass
class GeneScoreList:
    """Scores for some genes of a universe; unscored universe genes count as 0."""

    scores: dict[str, float]
    universe: set[str] = field(default_factory=set)

    def __post_init__(self):
        self.universe = set(self.universe) | set(self.scores)

    def full(self) -> tuple[list[str], np.ndarray]:
        genes = sorted(self.universe)
        return genes, np.array([self.scores.get(g, 0.0) for g in genes], dtype=float)


def jaccard(a: Iterable[Hashable], b: Iterable[Hashable]) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def _pearson(u: np.ndarray, v: np.ndarray) -> float:
    if np.array_equal(u, v):
        return 1.0  # exact, where the formula can round to 1 - 1e-16
    du, dv = u - u.mean(), v - v.mean()
    nu, nv = float(np.sqrt(du @ du)), float(np.sqrt(dv @ dv))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip((du @ dv) / (nu * nv), -1.0, 1.0))


def csc(pred: LinkedDataset, ref: LinkedDataset) -> float:
    """Attribute Jaccard x sample Jaccard x mean Pearson correlation of shared columns.

    Correlations are taken over shared samples. A constant shared column
    counts as 1 when both sides are identical and 0 otherwise.
    """
    pcols, rcols = pred.columns, ref.columns
    shared_cols = sorted(set(pcols) & set(rcols))
    shared_samples = sorted(set(pred.sample_ids) & set(ref.sample_ids))
    if not shared_cols or not shared_samples:
        return 0.0
    pm, rm = pred.matrix(), ref.matrix()
    pi = {s: i for i, s in enumerate(pred.sample_ids)}
    ri = {s: i for i, s in enumerate(ref.sample_ids)}
    pc = {c: j for j, c in enumerate(pcols)}
    rc = {c: j for j, c in enumerate(rcols)}
    prow = [pi[s] for s in shared_samples]
    rrow = [ri[s] for s in shared_samples]
    corrs = [_pearson(pm[prow, pc[c]], rm[rrow, rc[c]]) for c in shared_cols]
    return jaccard(pcols, rcols) * jaccard(pred.sample_ids, ref.sample_ids) * float(np.mean(corrs))


def set_prf(pred: Iterable[Hashable], ref: Iterable[Hashable]) -> tuple[float, float, float]:
    """Precision, recall and F1 of a predicted set against a reference set."""
    pred, ref = set(pred), set(ref)
    if not pred and not ref:
        return 1.0, 1.0, 1.0
    tp = len(pred & ref)
    precision = tp / len(pred) if pred else 0.0
    recall = tp / len(ref) if ref else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def auroc(scores: GeneScoreList, ref: Iterable[str]) -> float:
    """Mann-Whitney AUROC with average ranks for ties."""
    ref = set(ref)
    missing = ref - scores.universe
    if missing:
        raise InvalidInput(f"{len(missing)} reference genes are outside the universe")
    genes, vals = scores.full()
    labels = np.array([g in ref for g in genes])
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("AUROC needs at least one positive and one negative gene")
    ranks = rankdata(vals)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def gsea_running_sum(scores: GeneScoreList, gene_set: Iterable[str], weight: float = 1.0) -> tuple[list[str], np.ndarray]:
    """Walk down the ranking; returns the genes in rank order and the running sum after each step.

    Ties in score are ordered by gene symbol so the walk is deterministic.
    """
    gene_set = set(gene_set)
    genes, vals = scores.full()
    order = sorted(range(len(genes)), key=lambda i: (-vals[i], genes[i]))
    ranked = [genes[i] for i in order]
    rv = vals[order]
    hits = np.array([g in gene_set for g in ranked])
    n_hit = int(hits.sum())
    n = len(ranked)
    if n_hit == 0:
        raise InvalidInput("gene set does not intersect the scored universe")
    if n_hit == n:
        raise InvalidInput("gene set covers the whole universe")
    w = np.abs(rv) ** weight if weight != 0 else np.ones(n)
    hit_w = np.where(hits, w, 0.0)
    if not np.any(hit_w > 0):
        hit_w = hits.astype(float)  # all hit scores are zero: step uniformly
    # cumulative shares, so the walk ends at exactly 1 - 1 = 0
    H = np.cumsum(hit_w)
    M = np.cumsum(~hits)
    return ranked, H / H[-1] - M / M[-1]


def gsea_es(scores: GeneScoreList, gene_set: Iterable[str], weight: float = 1.0) -> float:
    """Enrichment score: the running-sum value farthest from zero, with its sign."""
    _, walk = gsea_running_sum(scores, gene_set, weight)
    return float(walk[np.argmax(np.abs(walk))])


def _check_keys(preds: Mapping, refs: Mapping) -> None:
    if set(preds) != set(refs):
        extra = sorted(map(str, set(preds) ^ set(refs)))
        raise InvalidInput(f"prediction/reference keys differ: {extra}")


def df_f1(preds: Mapping[str, bool], refs: Mapping[str, bool]) -> float:
    """F1 of usability judgments with "usable" as the positive class."""
    _check_keys(preds, refs)
    return set_prf([k for k, v in preds.items() if v], [k for k, v in refs.items() if v])[2]


def _selection_key(sel):
    if sel is None:
        return None
    if isinstance(sel, (list, tuple)):
        return tuple(sorted(str(s) for s in sel if s is not None))
    return (str(sel),)


def ds_accuracy(preds: Mapping[str, object], refs: Mapping[str, object]) -> float:
    """Share of problems whose selected cohort (or unordered pair) matches the reference."""
    _check_keys(preds, refs)
    if not refs:
        return 1.0
    hits = sum(_selection_key(preds[k]) == _selection_key(refs[k]) for k in refs)
    return hits / len(refs)


@dataclass
class EvalReport:
    df_f1: Optional[float] = None
    ds_accuracy: Optional[float] = None
    attribute_jaccard: Optional[float] = None
    sample_jaccard: Optional[float] = None
    csc: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    auroc: Optional[float] = None
    gsea_es: Optional[float] = None

    def to_json(self) -> dict:
        return asdict(self)


def mean_report(reports: Iterable[EvalReport]) -> EvalReport:
    """Macro-average each metric over the reports that define it."""
    reports = list(reports)
    out = EvalReport()
    for name in EvalReport.__dataclass_fields__:
        vals = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        setattr(out, name, float(np.mean(vals)) if vals else None)
    return out


def format_table(rows: Mapping[str, EvalReport]) -> str:
    """Aligned plain-text table, one row per key, one column per metric."""
    names = list(EvalReport.__dataclass_fields__)
    header = ["problem"] + names
    body = [[k] + ["-" if getattr(r, n) is None else f"{getattr(r, n):.4f}" for n in names] for k, r in rows.items()]
    widths = [max(len(str(x)) for x in col) for col in zip(header, *body)]
    lines = ["  ".join(str(x).ljust(w) for x, w in zip(line, widths)).rstrip() for line in [header] + body]
    return "\n".join(lines) + "\n"
