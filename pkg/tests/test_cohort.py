import numpy as np
import pytest
from hypothesis import given, strategies as st

from geneassoc.clinical import BINARY, CONTINUOUS, ClinicalColumn, assemble_clinical
from geneassoc.cohort import (
    CohortRecord,
    LinkedDataset,
    csv_header,
    handle_missing,
    judge_usability,
    link,
    read_linked_csv,
    select_cohort,
    select_pair,
    trait_is_constant,
    write_linked_csv,
)
from geneassoc.errors import EmptyAfterFiltering, NoCommonSamples, NoUsableCohort
from geneassoc.ingest import ExpressionMatrix


def _clinical(ids, trait, age=None):
    cols = [ClinicalColumn("T", BINARY, ids, np.asarray(trait, dtype=float))]
    if age is not None:
        cols.append(ClinicalColumn("Age", CONTINUOUS, ids, np.asarray(age, dtype=float)))
    return assemble_clinical(cols, trait="T")


def test_link_intersects_and_sorts():
    clin = _clinical(["S3", "S1", "S2"], [1, 0, 1], [30, 40, 50])
    genes = ExpressionMatrix(["G1"], ["S4", "S2", "S3"], np.array([[4.0, 2.0, 3.0]]))
    ds = link(clin, genes)
    assert ds.sample_ids == ["S2", "S3"]
    np.testing.assert_array_equal(ds.y, [1, 1])
    np.testing.assert_array_equal(ds.clinical["Age"], [50, 30])
    np.testing.assert_array_equal(ds.X[:, 0], [2.0, 3.0])


def test_link_identical_and_disjoint():
    clin = _clinical(["a", "b"], [0, 1])
    assert link(clin, ExpressionMatrix(["G"], ["b", "a"], np.ones((1, 2)))).sample_ids == ["a", "b"]
    with pytest.raises(NoCommonSamples):
        link(clin, ExpressionMatrix(["G"], ["c"], np.ones((1, 1))))


def _ds(y, X, age=None, gender=None):
    n = len(y)
    clin = {"T": np.asarray(y, float)}
    kinds = {"T": BINARY}
    if age is not None:
        clin["Age"], kinds["Age"] = np.asarray(age, float), CONTINUOUS
    if gender is not None:
        clin["Gender"], kinds["Gender"] = np.asarray(gender, float), BINARY
    X = np.asarray(X, float)
    return LinkedDataset([f"S{i}" for i in range(n)], "T", clin, kinds, [f"G{j}" for j in range(X.shape[1])], X)


def test_missing_trait_dropped_and_mean_imputation():
    nan = np.nan
    X = [[1.0, 5, 0, 0, 0], [9, 9, 9, 9, 9], [nan, 6, 0, 0, 0], [3.0, 7, 0, 0, 0]]
    out = handle_missing(_ds([1, nan, 0, 1], X))
    assert out.sample_ids == ["S0", "S2", "S3"]
    np.testing.assert_array_equal(out.X[:, 0], [1.0, 2.0, 3.0])


def test_gene_missingness_threshold():
    nan = np.nan
    X = np.ones((2, 4))
    X[0, 0] = nan  # 25% missing
    out = handle_missing(_ds([0, 1], X), 0.20)
    assert out.sample_ids == ["S1"]
    X = np.ones((2, 5))
    X[0, 0] = nan  # exactly 20% stays
    assert handle_missing(_ds([0, 1], X), 0.20).n == 2


def test_covariate_fill_and_dense_output():
    nan = np.nan
    ds = _ds([0, 1, 0, 1], np.arange(8.0).reshape(4, 2), age=[20, nan, 40, 60], gender=[1, nan, 0, 0])
    out = handle_missing(ds)
    np.testing.assert_array_equal(out.clinical["Age"], [20, 40, 40, 60])
    np.testing.assert_array_equal(out.clinical["Gender"], [1, 0, 0, 0])
    assert not np.isnan(out.matrix()).any()


def test_all_missing_columns_dropped():
    nan = np.nan
    ds = _ds([0, 1], [[nan, 1.0, 2.0, 3.0, 4.0, 5.0], [nan, 2.0, 3.0, 4.0, 5.0, 6.0]], age=[nan, nan])
    with pytest.raises(EmptyAfterFiltering):
        handle_missing(_ds([0, 1], [[nan], [nan]]), 1.0)
    out = handle_missing(ds, 0.2)
    assert out.genes == ["G1", "G2", "G3", "G4", "G5"]
    assert "Age" not in out.clinical


def test_empty_after_filtering():
    with pytest.raises(EmptyAfterFiltering):
        handle_missing(_ds([np.nan, np.nan], np.ones((2, 1))))


def test_trait_is_constant():
    assert trait_is_constant(_ds([1, 1], np.ones((2, 1))))
    assert not trait_is_constant(_ds([0, 1], np.ones((2, 1))))


@pytest.mark.parametrize(
    "flags, usable",
    [((True, True, True), True), ((False, True, True), False), ((True, False, True), False), ((True, True, False), False)],
)
def test_judge_usability(flags, usable):
    g, t, q = flags
    assert judge_usability(CohortRecord("X", "GEO", g, t, 10, q)) is usable


def _rec(cid, n):
    return CohortRecord(cid, "GEO", True, True, n, True)


def test_select_cohort():
    assert select_cohort([_rec("A", 50), _rec("B", 80)]).id == "B"
    assert select_cohort([_rec("B", 50), _rec("A", 50)]).id == "A"
    with pytest.raises(NoUsableCohort):
        select_cohort([])


@given(st.permutations([_rec("A", 5), _rec("B", 7), _rec("C", 7), _rec("D", 1)]))
def test_select_cohort_permutation_invariant(recs):
    assert select_cohort(recs).id == "B"


def test_select_pair():
    t, c = select_pair([_rec("A", 50), _rec("B", 80)], [_rec("C", 30), _rec("D", 40)])
    assert (t.id, c.id) == ("B", "D")
    assert t.sample_count * c.sample_count == 3200
    t, c = select_pair([_rec("A", 1)], [_rec("Z", 1)])
    assert (t.id, c.id) == ("A", "Z")
    t, c = select_pair([_rec("B", 10), _rec("A", 10)], [_rec("D", 5), _rec("C", 5)])
    assert (t.id, c.id) == ("A", "C")  # four pairs tie at 50
    with pytest.raises(NoUsableCohort):
        select_pair([], [_rec("C", 1)])


def test_record_json_round_trip(tmp_path):
    rec = CohortRecord("GSE1", "TCGA", True, False, 12, True)
    assert CohortRecord.from_json(rec.to_json()) == rec
    assert set(rec.to_json()) == {"id", "source", "gene_available", "trait_available", "quality_ok", "sample_count"}


def test_linked_csv_layout_and_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    ds = LinkedDataset(
        ["s2", "s1", "s3"], "T",
        {"T": np.array([1.0, 0.0, 1.0]), "Age": rng.uniform(size=3), "Gender": np.array([0.0, 1.0, 1.0])},
        {"T": BINARY, "Age": CONTINUOUS, "Gender": BINARY},
        ["ZZ", "AA", "MM"], rng.standard_normal((3, 3)),
    )
    path = tmp_path / "d.csv"
    write_linked_csv(path, ds)
    assert csv_header(path) == ["sample", "T", "Age", "Gender", "AA", "MM", "ZZ"]
    back = read_linked_csv(path)
    assert back.sample_ids == ["s1", "s2", "s3"]
    assert back.kinds == ds.kinds
    order = [1, 0, 2]
    np.testing.assert_array_equal(back.gene_columns(["ZZ", "AA", "MM"]), ds.X[order])
    np.testing.assert_array_equal(back.clinical["Age"], ds.clinical["Age"][order])


def test_without_genes():
    ds = _ds([0, 1], np.arange(6.0).reshape(2, 3))
    out = ds.without_genes(["G1"])
    assert out.genes == ["G0", "G2"]
    np.testing.assert_array_equal(out.X, [[0, 2], [3, 5]])
