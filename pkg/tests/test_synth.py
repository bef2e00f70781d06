import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from geneassoc.clinical import AGE_RULE, BINARY, CONTINUOUS, extract_feature
from geneassoc.cohort import LinkedDataset
from geneassoc.errors import InvalidConfig
from geneassoc.ingest import parse_series_matrix
from geneassoc.metrics import set_prf
from geneassoc.pipeline import preprocess_cohort
from geneassoc.stats import AnalysisSettings, analyze_design, design_from_dataset, two_step_regress
from geneassoc.stats.lasso import coordinate_descent
from geneassoc.stats.normalize import zscore
from geneassoc.synth import (
    FIXTURE_STYLES,
    SynthConfig,
    gen_batched,
    gen_condition_pair,
    gen_linear,
    gene_names,
    planted_batched,
    write_fixture,
)


@pytest.mark.parametrize(
    "kwargs",
    [dict(k=11, p=10), dict(sigma_eps=-1.0), dict(n_batches=0), dict(n=0), dict(sigma_u=-0.1)],
)
def test_config_validation(kwargs):
    with pytest.raises(InvalidConfig):
        SynthConfig(**kwargs)


def test_noiseless_single_feature():
    X, y, support, beta = gen_linear(SynthConfig(n=30, p=10, k=1, sigma_eps=0.0, seed=3))
    assert len(support) == 1
    np.testing.assert_array_equal(y, X[:, support[0]] * beta[support[0]])


def test_bit_identical_regeneration():
    a = gen_linear(SynthConfig(seed=7))
    b = gen_linear(SynthConfig(seed=7))
    for u, v in zip(a, b):
        np.testing.assert_array_equal(u, v)
    c = gen_linear(SynthConfig(seed=8))
    assert not np.array_equal(a[0], c[0])


def test_planted_coefficients():
    _, _, support, beta = gen_linear(SynthConfig(p=50, k=6, beta_scale=2.5, seed=1))
    assert np.count_nonzero(beta) == 6
    np.testing.assert_array_equal(np.flatnonzero(beta), support)
    assert set(np.abs(beta[support])) == {2.5}


def test_noise_sd_monte_carlo():
    X, y, _, beta = gen_linear(SynthConfig(n=10000, p=5, k=2, sigma_eps=0.7, seed=2))
    assert abs(np.std(y - X @ beta) / 0.7 - 1) < 0.05


def test_batched_structure():
    d = planted_batched(SynthConfig(n=90, p=20, k=3, n_batches=3, batch_shift=2.0, sigma_u=1.0, seed=0))
    assert np.bincount(d.batch_labels).tolist() == [30, 30, 30]
    means = [d.X[d.batch_labels == b].mean() for b in range(3)]
    assert means[0] < means[1] < means[2]
    X, y, labels = gen_batched(SynthConfig(n=90, p=20, k=3, n_batches=3, batch_shift=2.0, sigma_u=1.0, seed=0))
    np.testing.assert_array_equal(X, d.X)


def test_unshifted_batches_match_linear_distribution():
    lin_y, bat_y, lin_x, bat_x = [], [], [], []
    for seed in range(20):
        X, y, _, _ = gen_linear(SynthConfig(n=100, p=20, k=3, seed=seed))
        Xb, yb, _ = gen_batched(SynthConfig(n=100, p=20, k=3, n_batches=2, seed=seed + 1000))
        lin_y.append(y), bat_y.append(yb), lin_x.append(X.ravel()), bat_x.append(Xb.ravel())
    assert sps.ks_2samp(np.concatenate(lin_y), np.concatenate(bat_y)).pvalue > 0.01
    assert sps.ks_2samp(np.concatenate(lin_x), np.concatenate(bat_x)).pvalue > 0.01


def test_single_batch_effect_is_constant():
    d = planted_batched(SynthConfig(n=50, p=10, k=2, n_batches=1, sigma_u=3.0, sigma_eps=0.0, seed=4))
    offset = d.y - d.X @ d.beta
    np.testing.assert_allclose(offset, offset[0])


def test_oracle_penalty_recovers_support():
    cfg = SynthConfig(n=200, p=500, k=10, beta_scale=1.0, sigma_eps=0.1, seed=0)
    X, y, support, _ = gen_linear(cfg)
    Xz = zscore(X)[0]
    names = gene_names(500)
    truth = [names[j] for j in support]
    best = 0.0
    for alpha in np.geomspace(1e-3, 1.0, 31):
        coef = coordinate_descent(Xz, y, alpha * cfg.n).coef
        best = max(best, set_prf([names[j] for j in np.flatnonzero(coef)], truth)[2])
    assert best >= 0.9


def test_condition_pair_layout():
    pair = gen_condition_pair(SynthConfig(n=50, p=40, k=4, seed=0), n_condition=30, n_common=6)
    trait_ds, cond_ds, common, planted = pair
    assert len(common) == 6 and len(planted) == 4
    assert not set(common) & set(planted)
    assert cond_ds.n == 30 and trait_ds.n == 50
    np.testing.assert_allclose(cond_ds.X.mean(0), 0, atol=1e-12)
    with pytest.raises(InvalidConfig):
        gen_condition_pair(SynthConfig(n=50, p=40, k=4), n_common=0)


@pytest.mark.slow
def test_zero_condition_effect_two_step_matches_direct():
    # p > n: with few genes per sample the eigen-gap detector fires on noise
    diffs = []
    settings = AnalysisSettings()
    for seed in range(20):
        pair = gen_condition_pair(SynthConfig(seed=seed), condition_effect=0.0)
        direct = analyze_design(design_from_dataset(pair.trait_ds), settings)
        two = analyze_design(two_step_regress(pair.trait_ds, pair.condition_ds, pair.common), settings)
        diffs.append(set_prf(direct.selected_symbols, pair.planted)[2] - set_prf(two.selected_symbols, pair.planted)[2])
    assert abs(np.mean(diffs)) < 0.1


def _random_ds(rng, n, p, covariates=True):
    clin = {"Trait": rng.integers(0, 2, n).astype(float)}
    kinds = {"Trait": BINARY}
    if covariates:
        clin["Age"] = np.round(rng.uniform(18, 90, n), 3)
        clin["Gender"] = rng.integers(0, 2, n).astype(float)
        kinds.update(Age=CONTINUOUS, Gender=BINARY)
    return LinkedDataset([f"GSM{i:05d}" for i in range(n)], "Trait", clin, kinds, gene_names(p), rng.standard_normal((n, p)))


@pytest.mark.parametrize("style", FIXTURE_STYLES)
def test_fixture_round_trip_through_preprocessing(tmp_path, style):
    rng = np.random.default_rng(5)
    ds = _random_ds(rng, 12, 7)
    ds.clinical["Trait"][:2] = [0.0, 1.0]
    write_fixture(ds, style, tmp_path, cohort_id="GSE9")
    out = preprocess_cohort(tmp_path)
    assert out.error is None and out.record.quality_ok and out.record.sample_count == 12
    back = out.dataset
    assert back.sample_ids == ds.sample_ids and back.genes == ds.genes
    np.testing.assert_array_equal(back.X, ds.X)
    for name in ds.clinical:
        np.testing.assert_array_equal(back.clinical[name], ds.clinical[name])
    assert back.kinds == ds.kinds


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 9), st.integers(1, 6), st.integers(0, 10**6), st.sampled_from(FIXTURE_STYLES))
def test_fixture_round_trip_property(tmp_path_factory, n, p, seed, style):
    rng = np.random.default_rng(seed)
    ds = _random_ds(rng, n, p, covariates=bool(seed % 2))
    ds.clinical["Trait"][:2] = [0.0, 1.0]
    ds.X[:] = rng.standard_normal((n, p)) * 10.0 ** rng.integers(-200, 200, (n, p))
    d = tmp_path_factory.mktemp("fx")
    write_fixture(ds, style, d)
    back = preprocess_cohort(d).dataset
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.y, ds.y)


def test_age_rendering_reextractable(tmp_path):
    rng = np.random.default_rng(1)
    ds = _random_ds(rng, 5, 2)
    write_fixture(ds, "series_matrix", tmp_path)
    _, chars, _ = parse_series_matrix(tmp_path / "matrix.txt")
    assert all(v.startswith("age: ") and v.endswith("y") for v in chars.rows[1])
    col = extract_feature(chars, 1, AGE_RULE, "Age")
    np.testing.assert_array_equal(col.values, ds.clinical["Age"])


def test_empty_dataset_fixture(tmp_path):
    empty = LinkedDataset([], "Trait", {"Trait": np.zeros(0)}, {"Trait": BINARY}, [], np.zeros((0, 0)))
    write_fixture(empty, "series_matrix", tmp_path)
    _, chars, matrix = parse_series_matrix(tmp_path / "matrix.txt")
    assert matrix.shape == (0, 0) and chars.sample_ids == []


def test_fixture_rejects_unknown_style(tmp_path):
    with pytest.raises(InvalidConfig):
        write_fixture(_random_ds(np.random.default_rng(0), 3, 2), "csv", tmp_path)
