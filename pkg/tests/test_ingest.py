import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geneassoc.errors import MalformedFile
from geneassoc.ingest import (
    AnnotationTable,
    ExpressionMatrix,
    SampleCharacteristics,
    SeriesMetadata,
    characteristics_summary,
    format_value,
    parse_series_matrix,
    parse_soft_annotation,
    parse_value,
    parse_xena_tables,
    unquote,
    write_series_matrix,
    write_soft_annotation,
    write_xena_tables,
)

SERIES = """!Series_title\t"Epilepsy tissue study"
!Series_geo_accession\t"GSE143272"
!Series_summary\t"First paragraph."
!Series_summary\t"Second paragraph."
!Series_overall_design\t"Six cases and nine controls."
!Sample_geo_accession\t"GSM1"\t"GSM2"\t"GSM3"
!Sample_characteristics_ch1\t"tissue: Hippocampus"\t"tissue: Parietal lobe"\t"tissue: Temporal lobe"
!Sample_characteristics_ch1\t"gender: Female"\t""
!series_matrix_table_begin
"ID_REF"\t"GSM1"\t"GSM2"\t"GSM3"
"P1"\t1.5\t2\tNA
"P2"\t-3e-2\tnull\t7
!series_matrix_table_end
"""


def test_series_matrix_sections():
    meta, chars, expr = parse_series_matrix(io.StringIO(SERIES))
    assert meta.title == "Epilepsy tissue study"
    assert meta.accession == "GSE143272"
    assert meta.summary == "First paragraph.\nSecond paragraph."
    assert chars.sample_ids == ["GSM1", "GSM2", "GSM3"]
    assert chars.rows[0] == ["tissue: Hippocampus", "tissue: Parietal lobe", "tissue: Temporal lobe"]
    # short rows are padded, empty cells are missing
    assert chars.rows[1] == ["gender: Female", None, None]
    assert expr.row_ids == ["P1", "P2"]
    np.testing.assert_array_equal(expr.values, [[1.5, 2.0, np.nan], [-0.03, np.nan, 7.0]])


def test_series_matrix_accepts_paths_and_bytes(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text(SERIES, encoding="utf-8")
    a = parse_series_matrix(path)[2]
    b = parse_series_matrix(str(path))[2]
    c = parse_series_matrix(io.BytesIO(SERIES.encode()))[2]
    assert a.equals(b) and a.equals(c)


def test_characteristics_summary():
    _, chars, _ = parse_series_matrix(io.StringIO(SERIES))
    summary = characteristics_summary(chars)
    assert summary[1] == ["gender: Female"]
    assert len(summary[0]) == 3


@pytest.mark.parametrize(
    "broken",
    [
        SERIES.replace("!series_matrix_table_end\n", ""),
        SERIES.replace("!series_matrix_table_begin\n", ""),
        SERIES.replace('"P2"\t-3e-2\tnull\t7', '"P2"\t-3e-2\tnull'),
        SERIES.replace('"P2"', '"P1"'),
        SERIES.replace("-3e-2", "abc"),
    ],
    ids=["no-end", "no-begin", "short-row", "dup-id", "text-value"],
)
def test_series_matrix_malformed(broken):
    with pytest.raises(MalformedFile):
        parse_series_matrix(io.StringIO(broken))


def test_characteristics_longer_than_samples():
    text = SERIES.replace('"gender: Female"\t""', '"a"\t"b"\t"c"\t"d"')
    with pytest.raises(MalformedFile):
        parse_series_matrix(io.StringIO(text))


@pytest.mark.parametrize("tok", ["", "NA", "na", "null", "NaN", "  "])
def test_missing_tokens(tok):
    assert math.isnan(parse_value(tok))


def test_unquote():
    assert unquote('"abc"') == "abc"
    assert unquote('"') == '"'
    assert unquote(' x ') == "x"


SOFT = """^PLATFORM = GPL1
!Platform_title = array
!platform_table_begin
ID\tGene Symbol\tOther
1007_s_at\tDDR1 /// MIR4640\tx
1053_at\tRFC2
!platform_table_end
!platform_table_begin
ID\tGene Symbol
9\tZZZ
!platform_table_end
"""


def test_soft_annotation_first_table_only():
    table = parse_soft_annotation(io.StringIO(SOFT))
    assert table.column_names == ["ID", "Gene Symbol", "Other"]
    assert table.column("ID") == ["1007_s_at", "1053_at"]
    assert table.rows[1] == ("1053_at", "RFC2", "")
    assert len(table.warnings) == 1


def test_soft_annotation_errors():
    with pytest.raises(MalformedFile):
        parse_soft_annotation(io.StringIO("^PLATFORM = GPL1\n"))
    with pytest.raises(MalformedFile):
        parse_soft_annotation(io.StringIO("!platform_table_begin\nID\tSym\n1\tA\n"))
    with pytest.raises(MalformedFile):
        parse_soft_annotation(io.StringIO("!platform_table_begin\nID\tSym\n1\tA\tB\tC\n!platform_table_end\n"))
    with pytest.raises(KeyError):
        parse_soft_annotation(io.StringIO(SOFT)).column("missing")


def test_xena_tables_with_and_without_corner():
    clin = "sampleID\tage\nS1\t50\nS2\t\n"
    with_corner = "sample\tS1\tS2\nTP53\t1\t2\n"
    without = "S1\tS2\nTP53\t1\t2\n"
    c, a = parse_xena_tables(io.StringIO(clin), io.StringIO(with_corner))
    _, b = parse_xena_tables(io.StringIO(clin), io.StringIO(without))
    assert a.equals(b)
    assert a.sample_ids == ["S1", "S2"]
    assert c.column("age") == ["50", ""]


def test_expression_matrix_rejects_duplicates():
    with pytest.raises(MalformedFile):
        ExpressionMatrix(["a", "a"], ["s"], np.zeros((2, 1)))


def test_format_value_round_trips():
    for v in [0.1, 1 / 3, -2.5e-300, 1e308, 123456789.123456789]:
        assert float(format_value(v)) == v
    assert format_value(float("nan")) == ""


ids = st.lists(st.from_regex(r"[A-Za-z][A-Za-z0-9_.-]{0,8}", fullmatch=True), min_size=1, max_size=5, unique=True)
finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=40, deadline=None)
@given(rows=ids, samples=ids, data=st.data())
def test_series_matrix_round_trip(rows, samples, data):
    vals = np.array(
        data.draw(st.lists(st.lists(finite | st.just(float("nan")), min_size=len(samples), max_size=len(samples)), min_size=len(rows), max_size=len(rows)))
    )
    matrix = ExpressionMatrix(rows, samples, vals)
    chars = SampleCharacteristics(samples, [[f"age: {k}y" for k in range(len(samples))]])
    buf = io.StringIO()
    write_series_matrix(buf, SeriesMetadata(title="t", summary="s"), chars, matrix)
    meta, chars2, matrix2 = parse_series_matrix(io.StringIO(buf.getvalue()))
    assert matrix2.equals(matrix)
    assert chars2.rows == chars.rows
    assert meta.title == "t"


def test_empty_series_matrix_round_trip():
    buf = io.StringIO()
    empty = ExpressionMatrix([], [], np.zeros((0, 0)))
    write_series_matrix(buf, SeriesMetadata(), SampleCharacteristics([], []), empty)
    _, chars, matrix = parse_series_matrix(io.StringIO(buf.getvalue()))
    assert matrix.shape == (0, 0)
    assert chars.rows == []


def test_soft_and_xena_writers_round_trip():
    table = AnnotationTable(["ID", "Gene Symbol"], [("p1", "TP53"), ("p2", "")])
    buf = io.StringIO()
    write_soft_annotation(buf, table)
    back = parse_soft_annotation(io.StringIO(buf.getvalue()))
    assert back.rows == table.rows

    clin = AnnotationTable(["sampleID", "age"], [("S1", "40"), ("S2", "")])
    matrix = ExpressionMatrix(["A", "B"], ["S1", "S2"], np.array([[0.25, np.nan], [1e-9, -4.0]]))
    cbuf, ebuf = io.StringIO(), io.StringIO()
    write_xena_tables(cbuf, ebuf, clin, matrix)
    c2, m2 = parse_xena_tables(io.StringIO(cbuf.getvalue()), io.StringIO(ebuf.getvalue()))
    assert m2.equals(matrix)
    assert c2.rows == clin.rows
