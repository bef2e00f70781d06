"""Declarative encoding of free-text sample characteristics into clinical variables."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import AlignmentError, InvalidConfig, InvalidInput, InvalidRow, NoUsableColumn
from .ingest import AnnotationTable, SampleCharacteristics

BINARY = "binary"
CONTINUOUS = "continuous"

_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


@dataclass(frozen=True)
class Clause:
    pattern: str
    value: float
    case_insensitive: bool = True

    def matches(self, text: str) -> bool:
        if self.case_insensitive:
            return self.pattern.lower() in text.lower()
        return self.pattern in text


@dataclass(frozen=True)
class ConversionRule:
    """Ordered substring clauses (first match wins), then an optional numeric parse.

    ``suffixes`` is ``None`` when numeric parsing is disabled; an empty tuple
    enables it without stripping anything.
    """

    kind: str
    clauses: tuple[Clause, ...] = ()
    prefix_strip: bool = True
    suffixes: Optional[tuple[str, ...]] = None
    variable: str = ""

    def __post_init__(self):
        if self.kind not in (BINARY, CONTINUOUS):
            raise InvalidConfig(f"unknown rule kind {self.kind!r}")
        if not self.clauses and self.suffixes is None:
            raise InvalidConfig("a rule needs at least one clause or a numeric parse")
        if self.kind == BINARY and any(c.value not in (0, 1) for c in self.clauses):
            raise InvalidConfig("binary clause values must be 0 or 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ConversionRule":
        numeric = d.get("numeric")
        suffixes = None if numeric is None else tuple(numeric.get("suffixes", ()))
        clauses = tuple(
            Clause(str(c["pattern"]), float(c["value"]), bool(c.get("case_insensitive", True)))
            for c in d.get("clauses", ())
        )
        return cls(
            kind=d.get("kind", BINARY),
            clauses=clauses,
            prefix_strip=bool(d.get("prefix_strip", True)),
            suffixes=suffixes,
            variable=d.get("variable", ""),
        )

    def to_dict(self) -> dict:
        d: dict = {
            "variable": self.variable,
            "kind": self.kind,
            "prefix_strip": self.prefix_strip,
            "clauses": [
                {"pattern": c.pattern, "value": c.value, "case_insensitive": c.case_insensitive}
                for c in self.clauses
            ],
        }
        if self.suffixes is not None:
            d["numeric"] = {"suffixes": list(self.suffixes)}
        return d


def load_rules(path) -> list[ConversionRule]:
    """Read a rule file: one rule object or a list, optionally under a ``"rules"`` key."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        doc = doc.get("rules", [doc])
    return [ConversionRule.from_dict(d) for d in doc]


def parse_number(text: str, suffixes: Sequence[str] = ()) -> Optional[float]:
    t = text.strip()
    for suf in sorted(suffixes, key=len, reverse=True):
        if suf and t.lower().endswith(suf.lower()):
            t = t[: -len(suf)].strip()
            break
    if not _NUMBER.match(t):
        return None
    return float(t)


def _is_missing(raw) -> bool:
    return raw is None or (isinstance(raw, float) and math.isnan(raw))


def apply_rule(rule: ConversionRule, raw) -> Optional[float]:
    """Encode one raw characteristic string; ``None`` means missing."""
    if _is_missing(raw):
        return None
    text = str(raw)
    if rule.prefix_strip and ":" in text:
        text = text.split(":", 1)[1]
    text = text.strip()
    for clause in rule.clauses:
        if clause.matches(text):
            return clause.value
    if rule.suffixes is not None:
        value = parse_number(text, rule.suffixes)
        if value is not None and (rule.kind == CONTINUOUS or value in (0.0, 1.0)):
            return value
    return None


@dataclass
class ClinicalColumn:
    name: str
    kind: str
    sample_ids: list[str]
    values: np.ndarray  # float, NaN = missing


def _encode(rule: ConversionRule, raws: Iterable) -> np.ndarray:
    out = [apply_rule(rule, r) for r in raws]
    return np.array([np.nan if v is None else v for v in out], dtype=float)


def extract_feature(chars: SampleCharacteristics, row: int, rule: ConversionRule, name: str) -> ClinicalColumn:
    if not 0 <= row < len(chars.rows):
        raise InvalidRow(f"characteristics row {row} does not exist ({len(chars.rows)} rows)")
    return ClinicalColumn(name, rule.kind, list(chars.sample_ids), _encode(rule, chars.rows[row]))


def extract_table_feature(
    table: AnnotationTable, id_column: str, column: str, rule: ConversionRule, name: str
) -> ClinicalColumn:
    """Encode one column of a samples-as-rows clinical table."""
    try:
        ids = table.column(id_column)
        raws = [v if v != "" else None for v in table.column(column)]
    except KeyError as exc:
        raise InvalidRow(str(exc)) from None
    return ClinicalColumn(name, rule.kind, ids, _encode(rule, raws))


AGE_RULE = ConversionRule(kind=CONTINUOUS, prefix_strip=True, suffixes=("y", "yrs", "years"), variable="Age")
GENDER_RULE = ConversionRule(
    kind=BINARY,
    prefix_strip=True,
    # "female" contains "male", so it must come first
    clauses=(Clause("female", 0), Clause("male", 1)),
    variable="Gender",
)
_GENDER_EXACT = {"f": 0.0, "female": 0.0, "m": 1.0, "male": 1.0}


def _default_encode(variable: str, raw: str) -> Optional[float]:
    if variable == "age":
        return apply_rule(AGE_RULE, raw)
    t = raw.split(":", 1)[-1].strip().lower()
    if t in _GENDER_EXACT:
        return _GENDER_EXACT[t]
    return apply_rule(GENDER_RULE, raw)


def choose_tcga_column(table: AnnotationTable, candidates: Sequence[str], variable: str) -> str:
    """Pick the candidate column with the smallest share of unparseable values.

    Ties keep candidate order. ``variable`` is ``"age"`` or ``"gender"``.
    """
    variable = variable.lower()
    if variable not in ("age", "gender"):
        raise InvalidInput(f"unsupported variable {variable!r}")
    if not candidates:
        raise InvalidInput("no candidate columns")
    best, best_frac = None, 1.0
    for name in candidates:
        if name not in table.column_names:
            raise InvalidInput(f"candidate column {name!r} not in table")
        vals = table.column(name)
        ok = sum(1 for v in vals if v != "" and _default_encode(variable, v) is not None)
        frac = 1.0 - ok / len(vals) if vals else 1.0
        if frac < best_frac:
            best, best_frac = name, frac
    if best is None:
        raise NoUsableColumn(f"no candidate column holds usable {variable} values")
    return best


@dataclass
class ClinicalTable:
    sample_ids: list[str]
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    kinds: dict[str, str] = field(default_factory=dict)
    trait: Optional[str] = None

    def __len__(self) -> int:
        return len(self.sample_ids)


def assemble_clinical(
    columns: Sequence[ClinicalColumn], sample_ids: Optional[Sequence[str]] = None, trait: Optional[str] = None
) -> ClinicalTable:
    """Join encoded columns that share one sample order into a table."""
    if sample_ids is None:
        if not columns:
            raise InvalidInput("sample_ids are required when no columns are given")
        sample_ids = columns[0].sample_ids
    sample_ids = list(sample_ids)
    table = ClinicalTable(sample_ids, trait=trait)
    for col in columns:
        if list(col.sample_ids) != sample_ids:
            raise AlignmentError(f"column {col.name!r} has a different sample order")
        if col.name in table.columns:
            raise InvalidInput(f"duplicate clinical column {col.name!r}")
        table.columns[col.name] = np.asarray(col.values, dtype=float)
        table.kinds[col.name] = col.kind
    if trait is not None and trait not in table.columns:
        raise InvalidInput(f"trait column {trait!r} not among the assembled columns")
    return table
