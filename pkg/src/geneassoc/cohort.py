"""Linking clinical and gene tables, missing-value policy, dataset filtering and selection."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .clinical import BINARY, CONTINUOUS, ClinicalTable
from .errors import (
    EmptyAfterFiltering,
    InvalidInput,
    MalformedFile,
    NoCommonSamples,
    NoUsableCohort,
)
from .ingest import ExpressionMatrix, format_value, parse_value

GENE_MISSING_THRESHOLD = 0.20
COVARIATES = ("Age", "Gender")


@dataclass
class LinkedDataset:
    """Samples as rows: one trait, optional Age/Gender, then gene columns."""

    sample_ids: list[str]
    trait_name: str
    clinical: dict[str, np.ndarray]
    kinds: dict[str, str]
    genes: list[str]
    X: np.ndarray  # samples x genes

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(len(self.sample_ids), len(self.genes))
        if self.trait_name not in self.clinical:
            raise InvalidInput(f"trait column {self.trait_name!r} missing")
        if len(set(self.genes)) != len(self.genes):
            raise InvalidInput("duplicate gene symbols")
        for name, col in self.clinical.items():
            if len(col) != len(self.sample_ids):
                raise InvalidInput(f"clinical column {name!r} has the wrong length")

    @property
    def n(self) -> int:
        return len(self.sample_ids)

    @property
    def y(self) -> np.ndarray:
        return self.clinical[self.trait_name]

    @property
    def covariate_names(self) -> list[str]:
        return [c for c in COVARIATES if c in self.clinical and c != self.trait_name]

    @property
    def columns(self) -> list[str]:
        """Attribute names in file order: trait, Age, Gender, then genes."""
        return [self.trait_name] + self.covariate_names + list(self.genes)

    def matrix(self) -> np.ndarray:
        """All attributes as one samples-by-columns array in ``columns`` order."""
        parts = [self.clinical[c][:, None] for c in [self.trait_name] + self.covariate_names]
        return np.hstack(parts + [self.X])

    def gene_columns(self, symbols: Sequence[str]) -> np.ndarray:
        pos = {g: j for j, g in enumerate(self.genes)}
        return self.X[:, [pos[s] for s in symbols]]

    def without_genes(self, symbols) -> "LinkedDataset":
        drop = set(symbols)
        keep = [j for j, g in enumerate(self.genes) if g not in drop]
        return LinkedDataset(
            list(self.sample_ids), self.trait_name, dict(self.clinical), dict(self.kinds),
            [self.genes[j] for j in keep], self.X[:, keep],
        )


def link(clinical: ClinicalTable, genes: ExpressionMatrix, trait_name: Optional[str] = None) -> LinkedDataset:
    """Inner-join clinical variables with a gene-by-sample matrix on sample ID.

    Shared samples are kept in sorted ID order.
    """
    trait_name = trait_name or clinical.trait
    if trait_name is None:
        raise InvalidInput("clinical table has no trait column")
    if len(clinical) == 0 or genes.values.size == 0:
        raise NoCommonSamples("one side of the link is empty")
    shared = sorted(set(clinical.sample_ids) & set(genes.sample_ids))
    if not shared:
        raise NoCommonSamples("clinical and gene data share no sample IDs")
    ci = {s: i for i, s in enumerate(clinical.sample_ids)}
    gi = {s: i for i, s in enumerate(genes.sample_ids)}
    crow = [ci[s] for s in shared]
    grow = [gi[s] for s in shared]
    clin = {name: np.asarray(col, dtype=float)[crow] for name, col in clinical.columns.items()}
    return LinkedDataset(
        shared, trait_name, clin, dict(clinical.kinds), list(genes.row_ids), genes.values[:, grow].T
    )


def _mode(values: np.ndarray) -> float:
    vals, counts = np.unique(values, return_counts=True)
    return float(vals[np.argmax(counts)])  # ties -> smallest value


def handle_missing(ds: LinkedDataset, gene_missing_threshold: float = GENE_MISSING_THRESHOLD) -> LinkedDataset:
    """Drop unusable samples, then impute what is left.

    Samples lacking the trait, or missing more than ``gene_missing_threshold``
    of their genes, are removed. Remaining gaps are filled with the gene's
    mean, the covariate's mean (continuous) or its mode (binary). Genes or
    covariates with no observed value at all are dropped.
    """
    y = ds.y
    gene_frac = np.isnan(ds.X).mean(axis=1) if ds.genes else np.zeros(ds.n)
    keep = ~np.isnan(y) & (gene_frac <= gene_missing_threshold)
    if not keep.any():
        raise EmptyAfterFiltering("no sample survives the missing-value filters")
    X = ds.X[keep].copy()
    observed = ~np.all(np.isnan(X), axis=0)
    X = X[:, observed]
    genes = [g for g, ok in zip(ds.genes, observed) if ok]
    if not genes:
        raise EmptyAfterFiltering("no gene has an observed value in the retained samples")
    col_means = np.nanmean(X, axis=0) if X.size else np.zeros(X.shape[1])
    rows, cols = np.nonzero(np.isnan(X))
    X[rows, cols] = col_means[cols]

    clinical, kinds = {}, {}
    for name, col in ds.clinical.items():
        col = np.asarray(col, dtype=float)[keep].copy()
        gaps = np.isnan(col)
        if gaps.all():
            continue
        if gaps.any():
            fill = _mode(col[~gaps]) if ds.kinds.get(name) == BINARY else float(np.mean(col[~gaps]))
            col[gaps] = fill
        clinical[name] = col
        kinds[name] = ds.kinds.get(name, CONTINUOUS)
    sample_ids = [s for s, k in zip(ds.sample_ids, keep) if k]
    return LinkedDataset(sample_ids, ds.trait_name, clinical, kinds, genes, X)


def trait_is_constant(ds: LinkedDataset) -> bool:
    y = ds.y[~np.isnan(ds.y)]
    return y.size == 0 or bool(np.all(y == y[0]))


@dataclass
class CohortRecord:
    id: str
    source: str
    gene_available: bool
    trait_available: bool
    sample_count: int = 0
    quality_ok: bool = False

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "CohortRecord":
        return cls(
            id=str(d["id"]),
            source=str(d.get("source", "GEO")),
            gene_available=bool(d["gene_available"]),
            trait_available=bool(d["trait_available"]),
            sample_count=int(d.get("sample_count", 0)),
            quality_ok=bool(d.get("quality_ok", False)),
        )

    @classmethod
    def load(cls, path) -> "CohortRecord":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def judge_usability(rec: CohortRecord) -> bool:
    return rec.gene_available and rec.trait_available and rec.quality_ok


def select_cohort(usable: Sequence[CohortRecord]) -> CohortRecord:
    """Largest sample count; ties go to the lexicographically smallest ID."""
    if not usable:
        raise NoUsableCohort("no usable cohort to select from")
    return min(usable, key=lambda r: (-r.sample_count, r.id))


def select_pair(
    trait_cohorts: Sequence[CohortRecord], condition_cohorts: Sequence[CohortRecord]
) -> tuple[CohortRecord, CohortRecord]:
    """Pair with the largest product of sample counts; ties by (trait ID, condition ID)."""
    if not trait_cohorts or not condition_cohorts:
        raise NoUsableCohort("both the trait and the condition need a usable cohort")
    return min(
        ((t, c) for t in trait_cohorts for c in condition_cohorts),
        key=lambda tc: (-tc[0].sample_count * tc[1].sample_count, tc[0].id, tc[1].id),
    )


def write_linked_csv(path, ds: LinkedDataset) -> None:
    """Samples as rows, trait/Age/Gender then genes sorted lexicographically."""
    order = sorted(range(ds.n), key=lambda i: ds.sample_ids[i])
    gene_order = sorted(range(len(ds.genes)), key=lambda j: ds.genes[j])
    clin_names = [ds.trait_name] + ds.covariate_names
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample"] + clin_names + [ds.genes[j] for j in gene_order])
        for i in order:
            row = [ds.sample_ids[i]]
            row += [format_value(ds.clinical[c][i]) for c in clin_names]
            row += [format_value(ds.X[i, j]) for j in gene_order]
            w.writerow(row)


def read_linked_csv(path, kinds: Optional[dict[str, str]] = None) -> LinkedDataset:
    """Inverse of :func:`write_linked_csv`; the trait is the first data column.

    Clinical kinds are inferred (only 0/1 values means binary) unless given.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) < 2:
        raise MalformedFile(f"{path}: linked CSV needs a sample column and a trait column")
    header = rows[0]
    trait = header[1]
    clin_names = [trait] + [h for h in header[2:4] if h in COVARIATES]
    genes = header[1 + len(clin_names):]
    data = np.array([[parse_value(v) for v in r[1:]] for r in rows[1:]], dtype=float).reshape(len(rows) - 1, len(header) - 1)
    clinical = {name: data[:, k] for k, name in enumerate(clin_names)}
    inferred = {}
    for name, col in clinical.items():
        vals = col[~np.isnan(col)]
        inferred[name] = BINARY if vals.size and np.all((vals == 0) | (vals == 1)) else CONTINUOUS
    if kinds:
        inferred.update(kinds)
    return LinkedDataset([r[0] for r in rows[1:]], trait, clinical, inferred, genes, data[:, len(clin_names):])


def csv_header(path) -> list[str]:
    with open(path, encoding="utf-8", newline="") as fh:
        return next(csv.reader(fh), [])
