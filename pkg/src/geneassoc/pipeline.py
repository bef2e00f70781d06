"""Per-cohort preprocessing: raw files plus a cohort config -> linked dataset and record.

A cohort directory holds the raw files and a ``cohort.json``::

    {"id": "GSE1", "source": "GEO", "trait": "Asthma", "gene_available": true,
     "files": {"matrix": "matrix.txt", "soft": "family.soft"},
     "gene_mapping": {"id_column": "ID", "symbol_column": "Symbol"},
     "rules": [{"variable": "trait", "row": 0, "kind": "binary", "clauses": [...]},
               {"variable": "Age", "row": 2, "kind": "continuous", "numeric": {"suffixes": ["y"]}}]}

Xena cohorts use ``"files": {"clinical": ..., "expression": ...}``, an
``"id_column"``, and rules addressed by ``"column"`` or ``"candidates"``.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .clinical import (
    AGE_RULE,
    GENDER_RULE,
    ClinicalColumn,
    ConversionRule,
    assemble_clinical,
    choose_tcga_column,
    extract_feature,
    extract_table_feature,
)
from .cohort import CohortRecord, LinkedDataset, handle_missing, link, trait_is_constant
from .errors import GeneAssocError, InvalidConfig, MalformedFile
from .genes import ProbeGeneMap, SynonymDict, map_probes, normalize_symbols
from .ingest import parse_series_matrix, parse_soft_annotation, parse_xena_tables

log = logging.getLogger(__name__)

CONFIG_NAME = "cohort.json"
COVARIATE_DEFAULTS = {"Age": AGE_RULE, "Gender": GENDER_RULE}


@dataclass
class CohortOutcome:
    record: CohortRecord
    trait: str
    dataset: Optional[LinkedDataset] = None
    error: Optional[GeneAssocError] = None


def load_cohort_config(cohort_dir) -> dict:
    path = os.path.join(cohort_dir, CONFIG_NAME)
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: {exc}") from None
    for key in ("id", "trait"):
        if key not in cfg:
            raise InvalidConfig(f"{path}: missing {key!r}")
    return cfg


def _rule(spec: dict, variable: str) -> ConversionRule:
    if "clauses" in spec or "numeric" in spec:
        return ConversionRule.from_dict(spec)
    if variable in COVARIATE_DEFAULTS:
        return COVARIATE_DEFAULTS[variable]
    raise InvalidConfig(f"rule for {variable!r} has neither clauses nor numeric parsing")


def _column_name(variable: str, trait: str) -> str:
    return trait if variable == "trait" else variable


def _geo_clinical(cfg: dict, chars) -> list[ClinicalColumn]:
    cols = []
    for spec in cfg.get("rules", []):
        variable = spec.get("variable", "trait")
        cols.append(extract_feature(chars, int(spec["row"]), _rule(spec, variable), _column_name(variable, cfg["trait"])))
    return cols


def _xena_clinical(cfg: dict, table) -> list[ClinicalColumn]:
    id_column = cfg.get("id_column", table.column_names[0])
    cols = []
    for spec in cfg.get("rules", []):
        variable = spec.get("variable", "trait")
        column = spec.get("column")
        if column is None:
            column = choose_tcga_column(table, spec["candidates"], variable)
        rule = _rule(spec, variable)
        if variable in COVARIATE_DEFAULTS and "clauses" not in spec and "numeric" not in spec:
            rule = ConversionRule(rule.kind, rule.clauses, False, rule.suffixes, rule.variable)
        cols.append(extract_table_feature(table, id_column, column, rule, _column_name(variable, cfg["trait"])))
    return cols


def preprocess_cohort(
    cohort_dir,
    synonyms: Optional[SynonymDict] = None,
    gene_missing_threshold: float = 0.20,
) -> CohortOutcome:
    """Run ingestion, encoding, gene mapping/normalization, linking and missing-value handling.

    Failures never raise: they come back as ``quality_ok = False`` with the error attached.
    """
    try:
        cfg = load_cohort_config(cohort_dir)
    except (OSError, GeneAssocError) as exc:
        cid = os.path.basename(os.path.normpath(cohort_dir))
        err = exc if isinstance(exc, GeneAssocError) else MalformedFile(str(exc))
        return CohortOutcome(CohortRecord(cid, "GEO", False, False, 0, False), "", error=err)

    source = cfg.get("source", "GEO")
    trait_available = any(r.get("variable", "trait") == "trait" for r in cfg.get("rules", []))
    record = CohortRecord(str(cfg["id"]), source, bool(cfg.get("gene_available", True)), trait_available, 0, False)
    outcome = CohortOutcome(record, cfg["trait"])
    if not (record.gene_available and record.trait_available):
        return outcome

    files = cfg.get("files", {})
    path = lambda key: os.path.join(cohort_dir, files[key])  # noqa: E731
    try:
        if source == "TCGA":
            table, expr = parse_xena_tables(path("clinical"), path("expression"))
            columns = _xena_clinical(cfg, table)
        else:
            _, chars, expr = parse_series_matrix(path("matrix"))
            columns = _geo_clinical(cfg, chars)
            mapping = cfg.get("gene_mapping")
            if mapping:
                annot = parse_soft_annotation(path("soft"))
                expr = map_probes(expr, ProbeGeneMap.from_annotation(annot, mapping["id_column"], mapping["symbol_column"]))
        if synonyms is not None:
            expr = normalize_symbols(expr, synonyms)
        clinical = assemble_clinical(columns, trait=cfg["trait"])
        ds = handle_missing(link(clinical, expr), gene_missing_threshold)
        if trait_is_constant(ds):
            raise MalformedFile("all samples share the same trait value")
    except GeneAssocError as exc:
        outcome.error = exc
        return outcome
    except (OSError, KeyError, ValueError) as exc:
        outcome.error = MalformedFile(f"{type(exc).__name__}: {exc}")
        return outcome

    record.sample_count = ds.n
    record.quality_ok = True
    outcome.dataset = ds
    return outcome
