import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geneassoc.clinical import BINARY, CONTINUOUS
from geneassoc.cohort import LinkedDataset
from geneassoc.errors import DegenerateLabels, InvalidInput
from geneassoc.metrics import (
    EvalReport,
    GeneScoreList,
    auroc,
    csc,
    df_f1,
    ds_accuracy,
    format_table,
    gsea_es,
    gsea_running_sum,
    jaccard,
    mean_report,
    set_prf,
)

from oracles import auroc_pairwise, gsea_direct


def test_jaccard():
    assert jaccard({"a", "b"}, {"b", "c"}) == pytest.approx(1 / 3)
    assert jaccard({"a"}, {"a"}) == 1.0
    assert jaccard({"a"}, {"b"}) == 0.0
    assert jaccard(set(), set()) == 1.0


def test_set_prf():
    assert set_prf({"a", "b"}, {"b", "c"}) == (0.5, 0.5, 0.5)
    assert set_prf({"a"}, {"a"}) == (1.0, 1.0, 1.0)
    assert set_prf(set(), {"a"}) == (0.0, 0.0, 0.0)
    assert set_prf(set(), set()) == (1.0, 1.0, 1.0)
    assert set_prf({"a"}, set()) == (0.0, 0.0, 0.0)


def _ds(samples, cols, rng):
    X = rng.standard_normal((len(samples), len(cols) - 1))
    return LinkedDataset(list(samples), "T", {"T": rng.integers(0, 2, len(samples)).astype(float)}, {"T": BINARY}, cols[1:], X)


def test_csc_identity_and_examples(rng):
    ds = _ds(["s1", "s2", "s3", "s4"], ["T", "g1", "g2"], rng)
    assert csc(ds, ds) == 1.0
    extra = LinkedDataset(ds.sample_ids, "T", ds.clinical, ds.kinds, ["g1", "g2", "g3"], np.column_stack([ds.X, rng.standard_normal(4)]))
    assert csc(ds, extra) == 0.75
    other = _ds(["x1", "x2"], ["T", "g1", "g2"], rng)
    assert csc(ds, other) == 0.0


def test_csc_constant_column_fallback():
    ds = LinkedDataset(["a", "b"], "T", {"T": np.array([1.0, 1.0])}, {"T": BINARY}, ["g"], np.array([[1.0], [2.0]]))
    assert csc(ds, ds) == 1.0
    flipped = LinkedDataset(["a", "b"], "T", {"T": np.array([0.0, 0.0])}, {"T": BINARY}, ["g"], np.array([[1.0], [2.0]]))
    assert csc(ds, flipped) == 0.5


def test_csc_symmetric_and_bounded(rng):
    a = _ds([f"s{i}" for i in range(8)], ["T", "g1", "g2", "g3"], rng)
    b = _ds([f"s{i}" for i in range(2, 10)], ["T", "g2", "g3", "g4"], rng)
    assert csc(a, b) == pytest.approx(csc(b, a), abs=1e-15)
    assert -1.0 <= csc(a, b) <= 1.0


def test_auroc_examples():
    gl = GeneScoreList({"a": 3.0, "b": 2.0, "c": 1.0, "d": 0.5}, {"a", "b", "c", "d"})
    assert auroc(gl, {"a", "b"}) == 1.0
    flat = GeneScoreList({g: 1.0 for g in "abcd"}, set("abcd"))
    assert auroc(flat, {"a"}) == 0.5
    with pytest.raises(DegenerateLabels):
        auroc(gl, set("abcd"))
    with pytest.raises(InvalidInput):
        auroc(gl, {"zz"})


def test_auroc_unscored_genes_count_as_zero():
    gl = GeneScoreList({"a": 2.0, "b": -1.0}, {"a", "b", "c"})
    # c scores 0, between a and b
    assert auroc(gl, {"c"}) == 0.5


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 200), st.integers(0, 2**31 - 1))
def test_auroc_matches_pairwise_and_negation(n, seed):
    r = np.random.default_rng(seed)
    genes = [f"g{i}" for i in range(n)]
    vals = np.round(r.standard_normal(n), 1)  # force ties
    k = int(r.integers(1, n))
    ref = set(r.choice(genes, size=k, replace=False))
    gl = GeneScoreList(dict(zip(genes, vals)), set(genes))
    got = auroc(gl, ref)
    full_genes, full_vals = gl.full()
    assert abs(got - auroc_pairwise(full_vals, [g in ref for g in full_genes])) < 1e-12
    neg = GeneScoreList({g: -v for g, v in zip(genes, vals)}, set(genes))
    assert abs(got + auroc(neg, ref) - 1.0) < 1e-12


def test_gsea_top_and_bottom():
    scores = {f"g{i}": float(10 - i) for i in range(10)}
    gl = GeneScoreList(scores, set(scores))
    assert gsea_es(gl, {"g0", "g1"}) > 0
    assert gsea_es(gl, {"g8", "g9"}) < 0


def test_gsea_weight_zero_hand_walk():
    gl = GeneScoreList({"a": 4.0, "b": 3.0, "c": 2.0, "d": 1.0}, set("abcd"))
    ranked, walk = gsea_running_sum(gl, {"a"}, weight=0)
    assert ranked == ["a", "b", "c", "d"]
    np.testing.assert_allclose(walk, [1.0, 2 / 3, 1 / 3, 0.0])
    assert gsea_es(gl, {"a"}, weight=0) == 1.0


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 60), st.integers(0, 2**31 - 1), st.sampled_from([0.0, 1.0, 2.0]))
def test_gsea_matches_direct_walk(n, seed, weight):
    r = np.random.default_rng(seed)
    genes = [f"g{i:03d}" for i in range(n)]
    vals = np.round(r.standard_normal(n), 2)
    k = int(r.integers(1, n))
    gene_set = set(r.choice(genes, size=k, replace=False))
    gl = GeneScoreList(dict(zip(genes, vals)), set(genes))
    ranked, walk = gsea_running_sum(gl, gene_set, weight)
    score_of = dict(zip(genes, vals))
    direct = gsea_direct(ranked, [score_of[g] for g in ranked], gene_set, weight)
    assert walk.tolist() == direct
    assert walk[-1] == 0.0
    es = gsea_es(gl, gene_set, weight)
    assert es == max(direct, key=abs)


def test_gsea_errors():
    gl = GeneScoreList({"a": 1.0, "b": 0.5}, {"a", "b"})
    with pytest.raises(InvalidInput):
        gsea_es(gl, {"zz"})
    with pytest.raises(InvalidInput):
        gsea_es(gl, {"a", "b"})


def _confusion_f1(preds, refs):
    tp = sum(preds[k] and refs[k] for k in refs)
    fp = sum(preds[k] and not refs[k] for k in refs)
    fn = sum(not preds[k] and refs[k] for k in refs)
    return 2 * tp / (2 * tp + fp + fn)


def test_df_f1():
    refs = {"A": True, "B": False, "C": True, "D": False}
    assert df_f1(refs, refs) == 1.0
    assert df_f1({k: not v for k, v in refs.items()}, refs) == 0.0
    half = {"A": True, "B": True, "C": False, "D": False}
    assert df_f1(half, refs) == pytest.approx(_confusion_f1(half, refs))
    with pytest.raises(InvalidInput):
        df_f1({"A": True}, refs)


def test_ds_accuracy():
    refs = {"p1": ("A",), "p2": ("B", "C")}
    assert ds_accuracy(refs, refs) == 1.0
    assert ds_accuracy({"p1": ("A",), "p2": ("C", "B")}, refs) == 1.0
    assert ds_accuracy({"p1": ("Z",), "p2": ("Q", "R")}, refs) == 0.0
    with pytest.raises(InvalidInput):
        ds_accuracy({"p1": ("A",)}, refs)


def test_report_helpers():
    a = EvalReport(precision=1.0, auroc=0.5)
    b = EvalReport(precision=0.0)
    m = mean_report([a, b])
    assert m.precision == 0.5 and m.auroc == 0.5 and m.f1 is None
    text = format_table({"x": a, "mean": m})
    assert text.splitlines()[0].split()[0] == "problem"
    assert "0.5000" in text
