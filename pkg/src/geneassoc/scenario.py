"""A small synthetic data root with planted signals, and the reference outputs it implies.

Layout written under ``root``::

    synonyms.tsv
    problems.json
    condition_genes/<condition>.txt
    GEO/<trait>/<cohort>/cohort.json (+ matrix.txt, family.soft)
    TCGA/<trait>/<cohort>/cohort.json (+ clinical.tsv, expression.tsv)
    reference/{preprocessed,selection,output}/...

Traits: ``TraitA`` (continuous, no batch structure), ``TraitB`` (continuous,
two batches in its largest cohort) and ``TraitC`` (binary, driven by a few
known condition genes).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .clinical import BINARY, CONTINUOUS
from .cohort import CohortRecord, LinkedDataset, write_linked_csv
from .genes import write_synonym_dict
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
from .synth import gene_names

N_GENES = 200
N_PLANTED = 8
N_CONDITION_GENES = 5
BASELINE = 8.0

PROBLEMS = [
    {"trait": "TraitA", "condition": None},
    {"trait": "TraitA", "condition": "Age"},
    {"trait": "TraitA", "condition": "TraitC"},
    {"trait": "TraitB", "condition": None},
]


@dataclass
class _Cohort:
    cid: str
    trait: str
    samples: list[str]
    X: np.ndarray  # true values, samples x genes
    y: np.ndarray
    age: np.ndarray
    gender: np.ndarray
    kind: str = CONTINUOUS


def problem_key(trait: str, condition: Optional[str]) -> str:
    return trait if condition is None else f"{trait}__{condition}"


def _dump(path, obj) -> None:
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _draw(rng, cid, trait, n, beta, sigma=1.0, batches=1, shift=0.0, sigma_u=0.0, binary_genes=None) -> _Cohort:
    Z = rng.standard_normal((n, len(beta)))
    labels = rng.permutation(np.arange(n) % batches)
    Z = Z + shift * labels[:, None]
    u = sigma_u * rng.standard_normal(batches)
    if binary_genes is not None:
        idx, bc = binary_genes
        y = (Z[:, idx] @ bc > 0).astype(float)
        kind = BINARY
    else:
        y = Z @ beta + u[labels] + sigma * rng.standard_normal(n)
        kind = CONTINUOUS
    age = rng.integers(20, 80, n).astype(float)
    gender = rng.integers(0, 2, n).astype(float)
    samples = [f"{cid}_S{i:03d}" for i in range(n)]
    return _Cohort(cid, trait, samples, BASELINE + Z, y, age, gender, kind)


def _trait_text(c: _Cohort, v: float) -> Optional[str]:
    if np.isnan(v):
        return None
    if c.kind == BINARY:
        return "status: case" if v == 1 else "status: control"
    return f"{c.trait.lower()} score: {format_value(v)}"


def _trait_rule(c: _Cohort, **where) -> dict:
    if c.kind == BINARY:
        clauses = [{"pattern": "case", "value": 1}, {"pattern": "control", "value": 0}]
        return dict(variable="trait", kind=BINARY, prefix_strip=True, clauses=clauses, **where)
    return dict(variable="trait", kind=CONTINUOUS, prefix_strip=True, numeric={"suffixes": []}, **where)


def _write_geo(rng, root, c: _Cohort, genes, aliases, probes: bool) -> tuple[LinkedDataset, set]:
    """Raw GEO files with a few injected defects; returns the expected linked data and dropped samples."""
    d = os.path.join(root, "GEO", c.trait, c.cid)
    os.makedirs(d, exist_ok=True)
    n, p = c.X.shape
    y = c.y.copy()
    values = c.X.T.copy()  # genes x samples
    dropped = {c.samples[0]}
    y[0] = np.nan  # trait not reported
    values[rng.random(p) < 0.3, 1] = np.nan  # one sample mostly unmeasured
    dropped.add(c.samples[1])
    mask = rng.random(values.shape) < 0.01
    mask[:, :2] = False
    values[mask] = np.nan

    chars = SampleCharacteristics(
        list(c.samples),
        [
            [_trait_text(c, v) for v in y],
            [f"age: {int(a)}y" for a in c.age],
            ["gender: Female" if g == 0 else "gender: Male" for g in c.gender],
        ],
    )
    rules = [
        _trait_rule(c, row=0),
        {"variable": "Age", "row": 1, "kind": CONTINUOUS, "prefix_strip": True, "numeric": {"suffixes": ["y"]}},
        {
            "variable": "Gender", "row": 2, "kind": BINARY, "prefix_strip": True,
            "clauses": [{"pattern": "female", "value": 0}, {"pattern": "male", "value": 1}],
        },
    ]
    cfg = {"id": c.cid, "source": "GEO", "trait": c.trait, "gene_available": True, "rules": rules,
           "files": {"matrix": "matrix.txt"}, "gene_mapping": None}
    symbols = [aliases.get(g, g) for g in genes]
    if probes:
        row_ids, rows, annot = [], [], []
        for j, sym in enumerate(symbols):
            if rng.random() < 0.1:
                # two probes whose mean is the true value
                dev = 0.05 * rng.standard_normal(n)
                for k, sgn in enumerate((1.0, -1.0)):
                    pid = f"{c.cid}_P{j:04d}_{k}"
                    row_ids.append(pid)
                    rows.append(values[j] + sgn * dev)
                    annot.append((pid, sym))
            else:
                pid = f"{c.cid}_P{j:04d}"
                row_ids.append(pid)
                rows.append(values[j])
                annot.append((pid, sym))
        for k in range(10):
            pid = f"{c.cid}_CTRL{k:02d}"
            row_ids.append(pid)
            rows.append(BASELINE + rng.standard_normal(n))
            annot.append((pid, ""))
        with open(os.path.join(d, "family.soft"), "w", encoding="utf-8") as fh:
            write_soft_annotation(fh, AnnotationTable(["ID", "Gene Symbol"], annot), platform=f"GPL{c.cid[-4:]}")
        cfg["files"]["soft"] = "family.soft"
        cfg["gene_mapping"] = {"id_column": "ID", "symbol_column": "Gene Symbol"}
        matrix = ExpressionMatrix(row_ids, list(c.samples), np.array(rows))
    else:
        matrix = ExpressionMatrix(symbols, list(c.samples), values)
    with open(os.path.join(d, "matrix.txt"), "w", encoding="utf-8") as fh:
        write_series_matrix(fh, SeriesMetadata(title=f"{c.trait} cohort {c.cid}", accession=c.cid), chars, matrix)
    _dump(os.path.join(d, "cohort.json"), cfg)
    return _expected(c, genes, dropped), dropped


def _write_tcga(root, c: _Cohort, genes) -> LinkedDataset:
    d = os.path.join(root, "TCGA", c.trait, c.cid)
    os.makedirs(d, exist_ok=True)
    header = ["sampleID", f"{c.trait.lower()}_score", "age_at_index", "age_at_initial_pathologic_diagnosis", "gender"]
    rows = [
        (s, format_value(c.y[i]), "[Not Available]" if i % 2 else str(int(c.age[i])), str(int(c.age[i])),
         "FEMALE" if c.gender[i] == 0 else "MALE")
        for i, s in enumerate(c.samples)
    ]
    matrix = ExpressionMatrix(list(genes), list(c.samples), c.X.T.copy())
    with open(os.path.join(d, "clinical.tsv"), "w", encoding="utf-8") as fc, open(
        os.path.join(d, "expression.tsv"), "w", encoding="utf-8"
    ) as fe:
        write_xena_tables(fc, fe, AnnotationTable(header, rows), matrix)
    cfg = {
        "id": c.cid, "source": "TCGA", "trait": c.trait, "gene_available": True, "gene_mapping": None,
        "id_column": "sampleID", "files": {"clinical": "clinical.tsv", "expression": "expression.tsv"},
        "rules": [
            dict(_trait_rule(c, column=header[1]), prefix_strip=False),
            {"variable": "Age", "candidates": ["age_at_index", "age_at_initial_pathologic_diagnosis"]},
            {"variable": "Gender", "candidates": ["gender"]},
        ],
    }
    _dump(os.path.join(d, "cohort.json"), cfg)
    return _expected(c, genes, set())


def _expected(c: _Cohort, genes, dropped) -> LinkedDataset:
    keep = [i for i, s in enumerate(c.samples) if s not in dropped]
    return LinkedDataset(
        [c.samples[i] for i in keep], c.trait,
        {c.trait: c.y[keep], "Age": c.age[keep], "Gender": c.gender[keep]},
        {c.trait: c.kind, "Age": CONTINUOUS, "Gender": BINARY},
        list(genes), c.X[keep],
    )


def _reference_result(trait, condition, genes, beta, seed) -> dict:
    planted = [(g, float(b)) for g, b in zip(genes, beta) if b != 0]
    return {
        "problem": {"trait": trait, "condition": condition},
        "model": "Lasso",
        "significant_genes": [{"symbol": g, "coefficient": b} for g, b in planted],
        "scores": {g: abs(float(b)) for g, b in zip(genes, beta)},
        "seed": seed,
    }


def write_scenario(root, seed: int = 0) -> list[dict]:
    """Write raw cohorts and the matching reference outputs; returns the problem list."""
    rng = np.random.default_rng(seed)
    genes = gene_names(N_GENES)
    perm = rng.permutation(N_GENES)
    cond_idx = np.sort(perm[:N_CONDITION_GENES])
    a_idx = np.sort(perm[N_CONDITION_GENES:N_CONDITION_GENES + N_PLANTED])
    b_idx = np.sort(perm[N_CONDITION_GENES + N_PLANTED:N_CONDITION_GENES + 2 * N_PLANTED])
    beta_a = np.zeros(N_GENES)
    beta_a[a_idx] = rng.choice([-1.0, 1.0], N_PLANTED)
    beta_b = np.zeros(N_GENES)
    beta_b[b_idx] = rng.choice([-1.0, 1.0], N_PLANTED)
    beta_c = rng.choice([-1.0, 1.0], N_CONDITION_GENES)
    aliased = np.sort(rng.choice(N_GENES, 20, replace=False))
    aliases = {genes[j]: f"ALS{j:04d}" for j in aliased}

    with open(os.path.join(_mkdir(root), "synonyms.tsv"), "w", encoding="utf-8") as fh:
        fh.write("# official symbol<TAB>aliases\n")
        write_synonym_dict(fh, [(g, [aliases[g]] if g in aliases else []) for g in genes])
    os.makedirs(os.path.join(root, "condition_genes"), exist_ok=True)
    with open(os.path.join(root, "condition_genes", "TraitC.txt"), "w", encoding="utf-8") as fh:
        fh.write("".join(genes[j] + "\n" for j in cond_idx))
    _dump(os.path.join(root, "problems.json"), PROBLEMS)

    ref = os.path.join(root, "reference")
    expected: dict[str, tuple[CohortRecord, Optional[LinkedDataset]]] = {}

    def geo(c, probes):
        ds, _ = _write_geo(rng, root, c, genes, aliases, probes)
        expected[f"{c.trait}/{c.cid}"] = (CohortRecord(c.cid, "GEO", True, True, ds.n, True), ds)

    geo(_draw(rng, "GSE1001", "TraitA", 120, beta_a), probes=True)
    geo(_draw(rng, "GSE1002", "TraitA", 80, beta_a), probes=False)
    tc = _draw(rng, "TCGA_A", "TraitA", 60, beta_a)
    expected["TraitA/TCGA_A"] = (CohortRecord(tc.cid, "TCGA", True, True, 60, True), _write_tcga(root, tc, genes))
    # trait annotated but no expression data
    _dump(os.path.join(root, "GEO", "TraitA", "GSE1003", "cohort.json"), {
        "id": "GSE1003", "source": "GEO", "trait": "TraitA", "gene_available": False, "files": {},
        "rules": [_trait_rule(_Cohort("GSE1003", "TraitA", [], None, None, None, None), row=0)],
    })
    expected["TraitA/GSE1003"] = (CohortRecord("GSE1003", "GEO", False, True, 0, False), None)
    geo(_draw(rng, "GSE2001", "TraitB", 120, beta_b, batches=2, shift=3.0, sigma_u=1.0), probes=False)
    geo(_draw(rng, "GSE2002", "TraitB", 50, beta_b), probes=True)
    geo(_draw(rng, "GSE3001", "TraitC", 100, np.zeros(N_GENES), binary_genes=(cond_idx, beta_c)), probes=False)

    for key, (rec, ds) in sorted(expected.items()):
        trait, cid = key.split("/")
        _dump(os.path.join(ref, "preprocessed", trait, f"{cid}.json"), rec.to_json())
        if ds is not None:
            write_linked_csv(os.path.join(ref, "preprocessed", trait, f"{cid}.csv"), ds)

    picks = {"TraitA": "GSE1001", "TraitB": "GSE2001", "TraitC": "GSE3001"}
    betas = {"TraitA": beta_a, "TraitB": beta_b}
    for prob in PROBLEMS:
        t, cond = prob["trait"], prob["condition"]
        key = problem_key(t, cond)
        sel = {"trait": picks[t], "condition": picks.get(cond)}
        _dump(os.path.join(ref, "selection", f"{key}.json"), {"problem": prob, "selected": sel})
        _dump(os.path.join(ref, "output", t, f"{key}.json"), _reference_result(t, cond, genes, betas[t], seed))
    return PROBLEMS


def _mkdir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
