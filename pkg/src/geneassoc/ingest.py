"""Readers and writers for GEO series-matrix, GEO SOFT and Xena tab-separated files.

Sources may be a path, a text stream or a binary stream. Input is decoded as
UTF-8 with invalid bytes replaced, so stray legacy characters in free-text
metadata never abort a parse.
"""

from __future__ import annotations

import io
import logging
import math
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Optional, Union

import numpy as np

from .errors import MalformedFile

log = logging.getLogger(__name__)

Source = Union[str, os.PathLike, IO]

MISSING_TOKENS = {"", "na", "null", "nan"}

SERIES_TABLE_BEGIN = "!series_matrix_table_begin"
SERIES_TABLE_END = "!series_matrix_table_end"
PLATFORM_TABLE_BEGIN = "!platform_table_begin"
PLATFORM_TABLE_END = "!platform_table_end"


@dataclass
class SeriesMetadata:
    title: str = ""
    summary: str = ""
    overall_design: str = ""
    accession: str = ""


@dataclass
class SampleCharacteristics:
    sample_ids: list[str]
    rows: list[list[Optional[str]]]

    def __post_init__(self):
        for i, row in enumerate(self.rows):
            if len(row) != len(self.sample_ids):
                raise MalformedFile(
                    f"characteristics row {i} has {len(row)} entries for {len(self.sample_ids)} samples"
                )


@dataclass
class ExpressionMatrix:
    """Rows are probes or genes, columns are samples; missing cells are NaN."""

    row_ids: list[str]
    sample_ids: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(len(self.row_ids), len(self.sample_ids))
        if len(set(self.row_ids)) != len(self.row_ids):
            raise MalformedFile("duplicate row identifiers in expression matrix")
        if len(set(self.sample_ids)) != len(self.sample_ids):
            raise MalformedFile("duplicate sample identifiers in expression matrix")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def equals(self, other: "ExpressionMatrix") -> bool:
        return (
            self.row_ids == other.row_ids
            and self.sample_ids == other.sample_ids
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


@dataclass
class AnnotationTable:
    column_names: list[str]
    rows: list[tuple[str, ...]]
    warnings: list[str] = field(default_factory=list)

    def column(self, name: str) -> list[str]:
        try:
            j = self.column_names.index(name)
        except ValueError:
            raise KeyError(f"no column {name!r}") from None
        return [row[j] for row in self.rows]


def _open_lines(source: Source) -> Iterator[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8", errors="replace", newline="") as fh:
            yield from _strip_newlines(fh)
        return
    if isinstance(source, io.TextIOBase) or (hasattr(source, "read") and isinstance(source.read(0), str)):
        yield from _strip_newlines(source)
        return
    wrapper = io.TextIOWrapper(source, encoding="utf-8", errors="replace", newline="")
    try:
        yield from _strip_newlines(wrapper)
    finally:
        wrapper.detach()


def _strip_newlines(lines: Iterable[str]) -> Iterator[str]:
    for line in lines:
        yield line.rstrip("\r\n")


def unquote(value: str) -> str:
    """Remove one layer of surrounding double quotes."""
    value = value.strip()
    if len(value) >= 2 and value[0] == '"' and value[-1] == '"':
        return value[1:-1]
    return value


def _fields(line: str) -> list[str]:
    return [unquote(v) for v in line.split("\t")]


def parse_value(token: str, where: str = "") -> float:
    """Parse one expression cell; empty/NA/null mean missing, other text is an error."""
    t = token.strip()
    if t.lower() in MISSING_TOKENS:
        return math.nan
    try:
        return float(t)
    except ValueError:
        raise MalformedFile(f"non-numeric expression value {token!r}{where}") from None


def _read_table(rows: list[list[str]], first_line_no: int) -> ExpressionMatrix:
    if not rows:
        raise MalformedFile("expression table has no header row")
    header = rows[0]
    sample_ids = header[1:]
    row_ids: list[str] = []
    values = np.empty((len(rows) - 1, len(sample_ids)))
    for k, row in enumerate(rows[1:]):
        line_no = first_line_no + k + 1
        if len(row) != len(header):
            raise MalformedFile(f"line {line_no}: {len(row)} fields, header has {len(header)}")
        row_ids.append(row[0])
        for j, tok in enumerate(row[1:]):
            values[k, j] = parse_value(tok, f" at line {line_no}")
    return ExpressionMatrix(row_ids, sample_ids, values)


def parse_series_matrix(source: Source) -> tuple[SeriesMetadata, SampleCharacteristics, ExpressionMatrix]:
    """Read metadata, sample characteristics and the expression table of a series-matrix file."""
    meta: dict[str, list[list[str]]] = {}
    table: Optional[list[list[str]]] = None
    table_start = 0
    closed = False
    for line_no, line in enumerate(_open_lines(source), start=1):
        if table is not None and not closed:
            if line.strip().lower() == SERIES_TABLE_END:
                closed = True
            else:
                table.append(_fields(line))
            continue
        if line.strip().lower() == SERIES_TABLE_BEGIN:
            if table is not None:
                raise MalformedFile(f"line {line_no}: second expression table")
            table, table_start = [], line_no + 1
            continue
        if line.startswith("!"):
            key, _, rest = line.partition("\t")
            meta.setdefault(key, []).append(_fields(rest) if rest else [])
    if table is None:
        raise MalformedFile(f"missing {SERIES_TABLE_BEGIN} marker")
    if not closed:
        raise MalformedFile(f"missing {SERIES_TABLE_END} marker")

    def text(key: str) -> str:
        return "\n".join(" ".join(v) for v in meta.get(key, []))

    metadata = SeriesMetadata(
        title=text("!Series_title"),
        summary=text("!Series_summary"),
        overall_design=text("!Series_overall_design"),
        accession=text("!Series_geo_accession"),
    )
    matrix = _read_table(table, table_start)
    sample_ids = meta.get("!Sample_geo_accession", [matrix.sample_ids])[0]

    rows = []
    for i, values in enumerate(meta.get("!Sample_characteristics_ch1", [])):
        if len(values) > len(sample_ids):
            raise MalformedFile(f"characteristics row {i} has more entries than samples")
        padded: list[Optional[str]] = [v if v != "" else None for v in values]
        padded += [None] * (len(sample_ids) - len(values))
        rows.append(padded)
    return metadata, SampleCharacteristics(list(sample_ids), rows), matrix


def characteristics_summary(chars: SampleCharacteristics) -> dict[int, list[str]]:
    """Unique non-missing values per characteristics row, in first-seen order."""
    return {i: list(dict.fromkeys(v for v in row if v is not None)) for i, row in enumerate(chars.rows)}


def _pad_rows(header: list[str], body: list[list[str]], first_line_no: int) -> list[tuple[str, ...]]:
    out = []
    for k, row in enumerate(body):
        if len(row) > len(header):
            raise MalformedFile(f"line {first_line_no + k}: {len(row)} fields, header has {len(header)}")
        out.append(tuple(row) + ("",) * (len(header) - len(row)))
    return out


def parse_soft_annotation(source: Source) -> AnnotationTable:
    """Extract the platform annotation table from a SOFT family file.

    Only the first platform table is read; later ones add a warning.
    """
    tables: list[tuple[int, list[list[str]]]] = []
    current: Optional[list[list[str]]] = None
    for line_no, line in enumerate(_open_lines(source), start=1):
        marker = line.strip().lower()
        if current is not None:
            if marker == PLATFORM_TABLE_END:
                current = None
            else:
                current.append(_fields(line))
        elif marker == PLATFORM_TABLE_BEGIN:
            current = []
            tables.append((line_no + 1, current))
    if not tables:
        raise MalformedFile("no platform table section")
    if current is not None:
        raise MalformedFile(f"missing {PLATFORM_TABLE_END} marker")
    start, rows = tables[0]
    if not rows or not any(rows[0]):
        raise MalformedFile("platform table has no header")
    table = AnnotationTable(rows[0], _pad_rows(rows[0], rows[1:], start + 1))
    if len(tables) > 1:
        msg = f"{len(tables)} platform tables found; only the first was parsed"
        log.warning(msg)
        table.warnings.append(msg)
    return table


def _tsv_rows(source: Source) -> list[list[str]]:
    return [_fields(line) for line in _open_lines(source) if line.strip() != ""]


def parse_xena_tables(clinical: Source, expression: Source) -> tuple[AnnotationTable, ExpressionMatrix]:
    """Load a Xena clinical matrix (samples as rows) and gene expression matrix (genes as rows).

    An expression header that omits the corner cell is accepted: the header
    then lists only sample IDs and the first column of each row is the gene.
    """
    crows = _tsv_rows(clinical)
    if not crows or not any(crows[0]):
        raise MalformedFile("clinical table has an empty header")
    clin = AnnotationTable(crows[0], _pad_rows(crows[0], crows[1:], 2))

    erows = _tsv_rows(expression)
    if not erows or not any(erows[0]):
        raise MalformedFile("expression table has an empty header")
    header = erows[0]
    if len(erows) > 1 and len(erows[1]) == len(header) + 1:
        header = ["sample"] + header
    return clin, _read_table([header] + erows[1:], 1)


def format_value(v: float) -> str:
    """17 significant digits, enough to round-trip any double; NaN as empty."""
    if math.isnan(v):
        return ""
    return format(float(v), ".17g")


def _quote(s: str) -> str:
    return f'"{s}"'


def write_series_matrix(
    out: IO[str],
    metadata: SeriesMetadata,
    chars: SampleCharacteristics,
    matrix: ExpressionMatrix,
) -> None:
    out.write(f"!Series_title\t{_quote(metadata.title)}\n")
    if metadata.accession:
        out.write(f"!Series_geo_accession\t{_quote(metadata.accession)}\n")
    out.write(f"!Series_summary\t{_quote(metadata.summary)}\n")
    out.write(f"!Series_overall_design\t{_quote(metadata.overall_design)}\n")
    out.write("!Sample_geo_accession\t" + "\t".join(_quote(s) for s in chars.sample_ids) + "\n")
    for row in chars.rows:
        out.write("!Sample_characteristics_ch1\t" + "\t".join(_quote(v or "") for v in row) + "\n")
    out.write(SERIES_TABLE_BEGIN + "\n")
    out.write("\t".join(_quote(s) for s in ["ID_REF"] + list(matrix.sample_ids)) + "\n")
    for rid, vals in zip(matrix.row_ids, matrix.values):
        out.write("\t".join([_quote(rid)] + [format_value(v) for v in vals]) + "\n")
    out.write(SERIES_TABLE_END + "\n")


def write_soft_annotation(out: IO[str], table: AnnotationTable, platform: str = "GPL0") -> None:
    out.write(f"^PLATFORM = {platform}\n")
    out.write(f"!Platform_geo_accession = {platform}\n")
    out.write(PLATFORM_TABLE_BEGIN + "\n")
    out.write("\t".join(table.column_names) + "\n")
    for row in table.rows:
        out.write("\t".join(row) + "\n")
    out.write(PLATFORM_TABLE_END + "\n")


def write_xena_tables(clinical_out: IO[str], expression_out: IO[str], clinical: AnnotationTable, matrix: ExpressionMatrix) -> None:
    clinical_out.write("\t".join(clinical.column_names) + "\n")
    for row in clinical.rows:
        clinical_out.write("\t".join(row) + "\n")
    expression_out.write("\t".join(["sample"] + list(matrix.sample_ids)) + "\n")
    for rid, vals in zip(matrix.row_ids, matrix.values):
        expression_out.write("\t".join([rid] + [format_value(v) if not math.isnan(v) else "NA" for v in vals]) + "\n")
