"""Synthetic data with planted gene signals, a dense GLS oracle and raw-file fixture writers."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .clinical import BINARY, CONTINUOUS
from .cohort import LinkedDataset
from .errors import InvalidConfig, SingularModel
from .ingest import (
    AnnotationTable,
    ExpressionMatrix,
    SampleCharacteristics,
    SeriesMetadata,
    format_value,
    write_series_matrix,
    write_soft_annotation,
    write_xena_tables,
)
from .stats.normalize import zscore


@dataclass
class SynthConfig:
    """Generator settings; every draw comes from ``np.random.default_rng(seed)``."""

    n: int = 100
    p: int = 150
    k: int = 10
    beta_scale: float = 1.0
    sigma_eps: float = 1.0
    sigma_u: float = 0.0
    n_batches: int = 1
    batch_shift: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise InvalidConfig("n and p must be positive")
        if not 0 <= self.k <= self.p:
            raise InvalidConfig(f"k={self.k} must lie in [0, p={self.p}]")
        if self.sigma_eps < 0 or self.sigma_u < 0:
            raise InvalidConfig("noise scales must be non-negative")
        if not 1 <= self.n_batches <= self.n:
            raise InvalidConfig(f"n_batches={self.n_batches} must lie in [1, n={self.n}]")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def to_json(self) -> dict:
        return asdict(self)


def _plant(rng: np.random.Generator, p: int, k: int, scale: float) -> tuple[np.ndarray, np.ndarray]:
    support = np.sort(rng.choice(p, size=k, replace=False)).astype(int)
    beta = np.zeros(p)
    beta[support] = scale * rng.choice([-1.0, 1.0], size=k)
    return support, beta


def gen_linear(cfg: SynthConfig):
    """y = X beta + eps with X iid standard normal and k planted coefficients of random sign.

    Returns:
        (X, y, true_support, true_beta)
    """
    rng = cfg.rng()
    X = rng.standard_normal((cfg.n, cfg.p))
    support, beta = _plant(rng, cfg.p, cfg.k, cfg.beta_scale)
    y = X @ beta + cfg.sigma_eps * rng.standard_normal(cfg.n)
    return X, y, support, beta


@dataclass
class BatchedData:
    X: np.ndarray
    y: np.ndarray
    batch_labels: np.ndarray
    support: np.ndarray
    beta: np.ndarray
    batch_effects: np.ndarray


def planted_batched(cfg: SynthConfig) -> BatchedData:
    """Like :func:`gen_linear` plus batch structure.

    Batch b shifts every feature by ``b * batch_shift`` and adds a random
    effect u_b ~ N(0, sigma_u^2) to the trait. Batches are balanced and
    assigned in random order.
    """
    rng = cfg.rng()
    X = rng.standard_normal((cfg.n, cfg.p))
    support, beta = _plant(rng, cfg.p, cfg.k, cfg.beta_scale)
    eps = rng.standard_normal(cfg.n)
    labels = rng.permutation(np.arange(cfg.n) % cfg.n_batches)
    u = cfg.sigma_u * rng.standard_normal(cfg.n_batches)
    X = X + cfg.batch_shift * labels[:, None]
    y = X @ beta + u[labels] + cfg.sigma_eps * eps
    return BatchedData(X, y, labels, support, beta, u)


def gen_batched(cfg: SynthConfig):
    """Batched design; returns (X, y, batch_labels). See :func:`planted_batched`."""
    d = planted_batched(cfg)
    return d.X, d.y, d.batch_labels


def gene_names(p: int, prefix: str = "GENE") -> list[str]:
    width = max(4, len(str(p)))
    return [f"{prefix}{j + 1:0{width}d}" for j in range(p)]


@dataclass
class ConditionPair:
    """Two cohorts linked through shared regressors.

    Iterates as (trait_ds, condition_ds, common_regressors, planted_support).
    """

    trait_ds: LinkedDataset
    condition_ds: LinkedDataset
    common: list[str]
    planted: list[str]
    true_condition: np.ndarray  # condition model applied to the trait cohort
    condition_beta: np.ndarray

    def __iter__(self):
        return iter((self.trait_ds, self.condition_ds, self.common, self.planted))


def gen_condition_pair(
    cfg: SynthConfig,
    n_condition: Optional[int] = None,
    n_common: int = 5,
    condition_effect: float = 1.0,
    binary_condition: bool = False,
    condition_noise: float = 0.0,
) -> ConditionPair:
    """Trait and condition cohorts sharing ``n_common`` known condition genes.

    Both cohorts' gene matrices are z-scored on their own statistics. The
    condition is ``Z[:, common] @ beta_c`` (plus optional noise, thresholded at
    0 when binary). The trait depends on its own planted genes, disjoint from
    the common set, plus ``condition_effect`` times the trait cohort's condition.
    """
    if n_common < 1 or n_common + cfg.k > cfg.p:
        raise InvalidConfig("need 1 <= n_common and n_common + k <= p")
    rng = cfg.rng()
    n_c = n_condition or cfg.n
    genes = gene_names(cfg.p)
    perm = rng.permutation(cfg.p)
    common_idx = np.sort(perm[:n_common])
    planted_idx = np.sort(perm[n_common:n_common + cfg.k])
    beta_c = cfg.beta_scale * rng.choice([-1.0, 1.0], size=n_common)
    beta = np.zeros(cfg.p)
    beta[planted_idx] = cfg.beta_scale * rng.choice([-1.0, 1.0], size=cfg.k)

    Zt = zscore(rng.standard_normal((cfg.n, cfg.p)))[0]
    Zc = zscore(rng.standard_normal((n_c, cfg.p)))[0]
    cond_c = Zc[:, common_idx] @ beta_c + condition_noise * rng.standard_normal(n_c)
    cond_t = Zt[:, common_idx] @ beta_c
    if binary_condition:
        cond_c = (cond_c > 0).astype(float)
        cond_t = (cond_t > 0).astype(float)
    y = Zt @ beta + condition_effect * cond_t + cfg.sigma_eps * rng.standard_normal(cfg.n)

    ckind = BINARY if binary_condition else CONTINUOUS
    trait_ds = LinkedDataset(
        [f"T{i:04d}" for i in range(cfg.n)], "Trait", {"Trait": y}, {"Trait": CONTINUOUS}, list(genes), Zt
    )
    cond_ds = LinkedDataset(
        [f"C{i:04d}" for i in range(n_c)], "Condition", {"Condition": cond_c}, {"Condition": ckind}, list(genes), Zc
    )
    return ConditionPair(
        trait_ds, cond_ds, [genes[j] for j in common_idx], [genes[j] for j in planted_idx], cond_t, beta_c
    )


def gls_oracle(X: np.ndarray, y: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Per-column GLS slopes x_j' V^-1 y / x_j' V^-1 x_j from a dense Cholesky solve.

    Raises:
        SingularModel: V is not symmetric positive definite.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    V = np.asarray(V, dtype=float)
    if V.shape != (len(y), len(y)) or not np.allclose(V, V.T):
        raise SingularModel("V must be a symmetric n x n matrix")
    try:
        factor = scipy.linalg.cho_factor(V)
    except np.linalg.LinAlgError as exc:
        raise SingularModel(f"V is not positive definite: {exc}") from None
    if np.min(np.diag(factor[0])) ** 2 <= 1e-12 * np.max(np.diag(V)):
        raise SingularModel("V is numerically singular")
    Viy = scipy.linalg.cho_solve(factor, y)
    ViX = scipy.linalg.cho_solve(factor, X)
    return (X.T @ Viy) / np.einsum("ij,ij->j", X, ViX)


# Raw fixtures

FIXTURE_STYLES = ("series_matrix", "soft", "xena")
_GENDER_TEXT = {0.0: "Female", 1.0: "Male"}


def _char_text(name: str, value: float) -> Optional[str]:
    if np.isnan(value):
        return None
    if name == "Gender":
        return f"gender: {_GENDER_TEXT[float(value)]}"
    if name == "Age":
        return f"age: {format_value(value)}y"
    return f"{name.lower()}: {format_value(value)}"


def _rule_spec(name: str, kind: str, trait: str, textual: bool = True) -> dict:
    """Rule that reads back a value rendered by :func:`_char_text` (or plain numbers when not textual)."""
    variable = "trait" if name == trait else name
    if kind == BINARY:
        if textual and name == "Gender":
            clauses = [{"pattern": "female", "value": 0}, {"pattern": "male", "value": 1}]
        else:
            clauses = [{"pattern": "0", "value": 0}, {"pattern": "1", "value": 1}]
        return {"variable": variable, "kind": BINARY, "prefix_strip": textual, "clauses": clauses}
    suffixes = ["y"] if textual and name == "Age" else []
    return {"variable": variable, "kind": CONTINUOUS, "prefix_strip": textual, "numeric": {"suffixes": suffixes}}


def write_fixture(
    ds: LinkedDataset,
    style: str,
    directory,
    cohort_id: str = "GSE0",
    trait: Optional[str] = None,
) -> dict:
    """Render a linked dataset as raw files plus the ``cohort.json`` that reads them back.

    ``series_matrix`` keys the table by gene symbol; ``soft`` keys it by probe
    ID with a platform annotation mapping each probe to one symbol; ``xena``
    writes a clinical table and a gene-by-sample expression table.

    Returns:
        The cohort config that was written.
    """
    if style not in FIXTURE_STYLES:
        raise InvalidConfig(f"unknown fixture style {style!r}; expected one of {FIXTURE_STYLES}")
    os.makedirs(directory, exist_ok=True)
    trait = trait or ds.trait_name
    clin_names = [ds.trait_name] + ds.covariate_names
    samples = list(ds.sample_ids)
    cfg: dict = {"id": cohort_id, "trait": trait, "gene_available": True, "gene_mapping": None}

    if style == "xena":
        cfg.update(source="TCGA", id_column="sampleID", files={"clinical": "clinical.tsv", "expression": "expression.tsv"})
        header = ["sampleID"] + [f"{c.lower()}_value" for c in clin_names]
        rows = [
            tuple([s] + [format_value(ds.clinical[c][i]) for c in clin_names]) for i, s in enumerate(samples)
        ]
        cfg["rules"] = [
            dict(_rule_spec(c, ds.kinds.get(c, CONTINUOUS), ds.trait_name, textual=False), column=col)
            for c, col in zip(clin_names, header[1:])
        ]
        matrix = ExpressionMatrix(list(ds.genes), samples, ds.X.T.copy())
        with open(os.path.join(directory, "clinical.tsv"), "w", encoding="utf-8") as fc, open(
            os.path.join(directory, "expression.tsv"), "w", encoding="utf-8"
        ) as fe:
            write_xena_tables(fc, fe, AnnotationTable(header, rows), matrix)
    else:
        cfg.update(source="GEO", files={"matrix": "matrix.txt"})
        rows = [[_char_text(c, ds.clinical[c][i]) for i in range(ds.n)] for c in clin_names]
        chars = SampleCharacteristics(samples, rows)
        cfg["rules"] = [dict(_rule_spec(c, ds.kinds.get(c, CONTINUOUS), ds.trait_name), row=r) for r, c in enumerate(clin_names)]
        row_ids = list(ds.genes)
        if style == "soft":
            row_ids = [f"P{j + 1:06d}" for j in range(len(ds.genes))]
            table = AnnotationTable(["ID", "Gene Symbol"], [(pid, g) for pid, g in zip(row_ids, ds.genes)])
            with open(os.path.join(directory, "family.soft"), "w", encoding="utf-8") as fh:
                write_soft_annotation(fh, table)
            cfg["files"]["soft"] = "family.soft"
            cfg["gene_mapping"] = {"id_column": "ID", "symbol_column": "Gene Symbol"}
        matrix = ExpressionMatrix(row_ids, samples, ds.X.T.copy())
        meta = SeriesMetadata(title=f"Synthetic cohort {cohort_id}", accession=cohort_id)
        with open(os.path.join(directory, "matrix.txt"), "w", encoding="utf-8") as fh:
            write_series_matrix(fh, meta, chars, matrix)

    with open(os.path.join(directory, "cohort.json"), "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
    return cfg
