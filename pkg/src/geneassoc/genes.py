"""Probe-to-symbol mapping and synonym normalization of gene symbols."""

from __future__ import annotations

import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import MalformedFile, NoMappedGenes
from .ingest import AnnotationTable, ExpressionMatrix, Source, _open_lines

log = logging.getLogger(__name__)

_SEPARATORS = re.compile(r";|\||/{2,}|,")  # "///" is one separator


@dataclass
class SynonymDict:
    """Case-insensitive alias lookup; every official symbol maps to itself."""

    entries: dict[str, str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def lookup(self, symbol: str) -> Optional[str]:
        return self.entries.get(symbol.strip().upper())

    def __len__(self) -> int:
        return len(self.entries)


def load_synonym_dict(source: Source) -> SynonymDict:
    """Read ``official<TAB>alias1|alias2|...`` lines.

    Official symbols always resolve to themselves. When an alias is claimed
    by several official symbols, the earliest line keeps it and a warning is
    recorded. A ``#`` line is a comment.
    """
    records: list[tuple[str, list[str]]] = []
    for line_no, line in enumerate(_open_lines(source), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) > 2 or not parts[0].strip():
            raise MalformedFile(f"synonym line {line_no}: expected 'symbol<TAB>aliases'")
        official = parts[0].strip()
        aliases = [a.strip() for a in parts[1].split("|")] if len(parts) == 2 else []
        aliases = [a for a in aliases if a and a != "-"]
        records.append((official, aliases))

    sd = SynonymDict()
    for official, _ in records:
        sd.entries.setdefault(official.upper(), official)
    for official, aliases in records:
        for alias in aliases:
            key = alias.upper()
            owner = sd.entries.get(key)
            if owner is None:
                sd.entries[key] = official
            elif owner != official:
                msg = f"alias {alias!r} of {official} already resolves to {owner}; keeping {owner}"
                log.debug(msg)
                sd.warnings.append(msg)
    if sd.warnings:
        log.warning("%d ambiguous synonyms resolved by file order", len(sd.warnings))
    return sd


def split_symbols(raw: str) -> list[str]:
    """Split a multi-symbol annotation field on ``;``, ``|``, ``//`` and ``,``."""
    if not raw:
        return []
    return [s.strip() for s in _SEPARATORS.split(raw) if s.strip()]


@dataclass
class ProbeGeneMap:
    pairs: list[tuple[str, str]]

    @classmethod
    def from_annotation(cls, table: AnnotationTable, id_column: str, symbol_column: str) -> "ProbeGeneMap":
        return cls(list(zip(table.column(id_column), table.column(symbol_column))))


def _group_mean(values: np.ndarray, groups: Mapping[str, Sequence[int]], order_key: Sequence[str]) -> tuple[list[str], np.ndarray]:
    """Per-cell mean over contributor rows, ignoring NaN; contributors summed in ``order_key`` order."""
    names = sorted(groups)
    out = np.empty((len(names), values.shape[1]))
    for k, name in enumerate(names):
        idx = sorted(set(groups[name]), key=lambda i: order_key[i])
        block = values[idx]
        present = ~np.isnan(block)
        counts = present.sum(axis=0)
        sums = np.where(present, block, 0.0).sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            out[k] = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return names, out


def map_probes(expr: ExpressionMatrix, mapping: ProbeGeneMap) -> ExpressionMatrix:
    """Re-index a probe-level matrix by gene symbol.

    Each probe contributes its full row to every symbol in its annotation
    field; a symbol's row is the mean of its contributors. Unmapped probes
    are dropped and output rows are sorted by symbol.
    """
    row_of = {rid: i for i, rid in enumerate(expr.row_ids)}
    groups: dict[str, set[int]] = defaultdict(set)
    for probe, raw in mapping.pairs:
        i = row_of.get(probe)
        if i is None:
            continue
        for sym in split_symbols(raw):
            groups[sym].add(i)
    if not groups:
        raise NoMappedGenes("no probe could be mapped to a gene symbol")
    names, values = _group_mean(expr.values, groups, expr.row_ids)
    return ExpressionMatrix(names, list(expr.sample_ids), values)


def normalize_symbols(expr: ExpressionMatrix, synonyms: SynonymDict) -> ExpressionMatrix:
    """Replace aliases by official symbols, drop unknown genes, average duplicates."""
    groups: dict[str, list[int]] = defaultdict(list)
    for i, rid in enumerate(expr.row_ids):
        official = synonyms.lookup(rid)
        if official is not None:
            groups[official].append(i)
    if not groups:
        raise NoMappedGenes("no gene symbol could be normalized")
    names, values = _group_mean(expr.values, groups, expr.row_ids)
    return ExpressionMatrix(names, list(expr.sample_ids), values)


def write_synonym_dict(out, records: Iterable[tuple[str, Sequence[str]]]) -> None:
    for official, aliases in records:
        out.write(f"{official}\t{'|'.join(aliases) if aliases else '-'}\n")
