import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowthreat.exceptions import ArgumentError, EmptyInput
from flowthreat.features import (
    MiReport,
    cumulative_explained_variance,
    discrete_mutual_information,
    equal_frequency_bins,
    mutual_information,
    pca_fit,
    pca_transform,
    rank_features_mi,
    read_cumulative_variance_csv,
    write_cumulative_variance_csv,
)
from flowthreat.matrix import FeatureMatrix


def brute_mi(xs, ys):
    """Plain double loop over the joint histogram, natural log."""
    n = len(xs)
    joint = Counter(zip(xs, ys))
    px, py = Counter(xs), Counter(ys)
    total = 0.0
    for (a, b), c in joint.items():
        total += (c / n) * math.log((c / n) / ((px[a] / n) * (py[b] / n)))
    return total


def entropy(ys):
    n = len(ys)
    return -sum((c / n) * math.log(c / n) for c in Counter(ys).values())


# -- mutual information -----------------------------------------------------


def test_label_copy_balanced_gives_ln2():
    y = np.array([0, 1] * 50)
    assert mutual_information(y, y, bins=2) == pytest.approx(math.log(2), abs=1e-12)


@pytest.mark.parametrize("n_zero", [1, 13, 50, 87, 99])
def test_unbalanced_label_copy_gives_entropy(n_zero):
    y = np.array([0] * n_zero + [1] * (100 - n_zero))
    assert mutual_information(y, y, bins=2) == pytest.approx(entropy(y.tolist()), abs=1e-12)


def test_constant_column_is_exactly_zero():
    assert mutual_information(np.full(30, 7.0), np.array([0, 1] * 15)) == 0.0


def test_small_example_gives_ln2():
    mi = mutual_information([1, 2, 3, 4], [0, 0, 1, 1], bins=2)
    assert mi == pytest.approx(brute_mi([0, 0, 1, 1], [0, 0, 1, 1]), abs=1e-15)
    assert mi == pytest.approx(math.log(2), abs=1e-15)


def test_equal_frequency_bins_collapse_ties():
    # the four 5s occupy ranks 1..4, average 2.5, and 2.5 * 3 / 6 floors to bin 1
    assert equal_frequency_bins([5, 5, 5, 5, 1, 9], 3).tolist() == [1, 1, 1, 1, 0, 2]
    assert equal_frequency_bins([7] * 9 + [8], 4).tolist() == [1] * 9 + [3]
    assert equal_frequency_bins(np.arange(10), 5).tolist() == [0, 0, 1, 1, 2, 2, 3, 3, 4, 4]


@pytest.mark.parametrize("col, labels, bins", [([], [], 10), ([1, 2], [0], 10), ([1, 2], [0, 1], 1)])
def test_mi_argument_errors(col, labels, bins):
    with pytest.raises(ArgumentError):
        mutual_information(col, labels, bins)


def test_mi_matches_brute_force_on_random_discrete_inputs():
    rng = np.random.default_rng(4)
    for _ in range(100):
        n = int(rng.integers(1, 400))
        x = rng.integers(0, int(rng.integers(1, 8)), size=n)
        y = rng.integers(0, int(rng.integers(1, 4)), size=n)
        assert discrete_mutual_information(x, y) == pytest.approx(brute_mi(x.tolist(), y.tolist()), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 3)), min_size=1, max_size=200))
def test_mi_symmetric_and_bounded(pairs):
    x = [a for a, _ in pairs]
    y = [b for _, b in pairs]
    mxy = discrete_mutual_information(x, y)
    assert mxy == pytest.approx(discrete_mutual_information(y, x), abs=1e-12)
    assert 0.0 <= mxy <= min(entropy(x), entropy(y)) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=150), st.integers(2, 20), st.randoms())
def test_binned_mi_bounded_by_entropies(col, bins, rnd):
    y = [rnd.randint(0, 1) for _ in col]
    binned = equal_frequency_bins(col, bins)
    mi = mutual_information(col, y, bins)
    assert 0.0 <= mi <= min(entropy(binned.tolist()), entropy(y)) + 1e-12
    assert binned.max() < bins


# -- ranking ----------------------------------------------------------------


def _mi_matrix():
    y = np.array([0, 1] * 20)
    data = np.column_stack([np.full(40, 3.0), y.astype(float), np.arange(40.0)])
    return FeatureMatrix(data, ("const", "copy", "ramp"), y)


def test_rank_picks_label_copy():
    assert rank_features_mi(_mi_matrix(), bins=10, k=1).names == ["copy"]


def test_rank_k_equals_d_returns_all():
    rep = rank_features_mi(_mi_matrix(), bins=10, k=3)
    assert sorted(rep.names) == ["const", "copy", "ramp"]
    scores = [s for _, s in rep.scores]
    assert scores == sorted(scores, reverse=True) and min(scores) >= 0.0
    assert rep.n_rows == 40 and rep.bins == 10


def test_rank_ties_broken_by_name():
    y = np.array([0, 1] * 5)
    data = np.column_stack([y, y, y]).astype(float)
    assert rank_features_mi(FeatureMatrix(data, ("b", "c", "a"), y)).names == ["a", "b", "c"]


def test_rank_k_out_of_range():
    with pytest.raises(ArgumentError):
        rank_features_mi(_mi_matrix(), k=4)


def test_mi_report_csv_round_trip(tmp_path):
    rep = rank_features_mi(_mi_matrix())
    rep.to_csv(tmp_path / "mi.csv")
    assert MiReport.read_csv(tmp_path / "mi.csv").scores == rep.scores


def test_rank_on_synthetic_gives_twenty_names(small_synth):
    from flowthreat.preprocess import fit_pipeline, transform

    m = transform(fit_pipeline(small_synth), small_synth)
    rep = rank_features_mi(m, bins=10, k=20)
    assert len(rep.names) == 20
    assert rep == rank_features_mi(m, bins=10, k=20)


# -- PCA --------------------------------------------------------------------

# integer points whose sample covariance is exactly [[2, 1], [1, 2]]
COV_FIXTURE = np.array([[-3.0, -3.0], [-3.0, 0.0], [-2.0, -1.0], [0.0, 0.0]])


def test_fixture_covariance():
    assert np.array_equal(np.cov(COV_FIXTURE, rowvar=False), [[2.0, 1.0], [1.0, 2.0]])


def test_pca_2x2_eigenvalues():
    p = pca_fit(COV_FIXTURE)
    assert p.eigenvalues == pytest.approx([3.0, 1.0], abs=1e-10)
    assert p.explained_variance_ratio == pytest.approx([0.75, 0.25], abs=1e-10)
    assert cumulative_explained_variance(p) == pytest.approx([0.75, 1.0], abs=1e-10)
    s = 1 / math.sqrt(2)
    assert p.components == pytest.approx(np.array([[s, s], [s, -s]]), abs=1e-12)


def test_uncorrelated_unit_variance_equal_ratios():
    # rows of a scaled Hadamard matrix: centered, orthogonal columns of equal norm
    h = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]], dtype=float)
    p = pca_fit(h[:, 1:])
    assert p.explained_variance_ratio == pytest.approx([1 / 3] * 3, abs=1e-12)


def test_duplicated_columns_give_zero_eigenvalue():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(50, 2))
    x = np.column_stack([a, a[:, 0]])
    p = pca_fit(x)
    centered = x - x.mean(axis=0)
    rank = np.linalg.matrix_rank(centered.T @ centered)
    assert rank == 2
    assert abs(p.eigenvalues[-1]) < 1e-12
    assert (p.eigenvalues[:rank] > 1e-6).all()


def test_single_feature_curve():
    assert cumulative_explained_variance(pca_fit(np.array([[1.0], [2.0], [4.0]]))).tolist() == [1.0]


def test_equal_ratios_curve_d4():
    h = np.array([[1, 1, 1, 1, 1], [1, -1, 1, -1, 1], [1, 1, -1, -1, 1], [1, -1, -1, 1, 1],
                  [-1, -1, -1, -1, 1], [-1, 1, -1, 1, 1], [-1, -1, 1, 1, 1], [-1, 1, 1, -1, 1]], dtype=float)
    curve = cumulative_explained_variance(pca_fit(h[:, :4]))
    assert curve == pytest.approx([0.25, 0.5, 0.75, 1.0], abs=1e-12)


def test_pca_needs_two_rows():
    with pytest.raises(EmptyInput):
        pca_fit(np.array([[1.0, 2.0]]))


def _random_matrix(seed, n=60, d=5):
    rng = np.random.default_rng(seed)
    data = rng.normal(size=(n, d)) @ rng.normal(size=(d, d))
    return FeatureMatrix(data, tuple(f"f{i}" for i in range(d)), rng.integers(0, 2, n))


def test_full_projection_preserves_distances():
    m = _random_matrix(3)
    z = pca_transform(pca_fit(m), m, k=m.n_cols).data
    dx = np.linalg.norm(m.data[:, None] - m.data[None], axis=2)
    dz = np.linalg.norm(z[:, None] - z[None], axis=2)
    assert np.abs(dx - dz).max() < 1e-8


def test_projection_first_axis_matches_inner_product():
    m = _random_matrix(5)
    p = pca_fit(m)
    z = pca_transform(p, m, k=1)
    assert z.feature_names == ("pc1",)
    assert np.abs(z.data[:, 0] - (m.data - p.mean) @ p.components[0]).max() < 1e-10
    assert np.array_equal(z.labels, m.labels)


def test_projected_variances_equal_eigenvalues():
    m = _random_matrix(7)
    p = pca_fit(m)
    z = pca_transform(p, m, k=m.n_cols).data
    assert np.abs(z.var(axis=0, ddof=1) - p.eigenvalues).max() < 1e-8


def test_projection_k_bounds():
    m = _random_matrix(1)
    with pytest.raises(ArgumentError):
        pca_transform(pca_fit(m), m, k=0)


def test_curve_csv_round_trip(tmp_path):
    curve = cumulative_explained_variance(pca_fit(_random_matrix(2)))
    write_cumulative_variance_csv(curve, tmp_path / "c.csv")
    assert np.array_equal(read_cumulative_variance_csv(tmp_path / "c.csv"), curve)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 80), d=st.integers(1, 8))
def test_pca_invariants(seed, n, d):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d)) * rng.uniform(0.1, 10, size=d)
    p = pca_fit(x)
    trace = np.trace(np.cov(x, rowvar=False, ddof=1).reshape(d, d))
    assert abs(p.eigenvalues.sum() - trace) <= 1e-8 * max(1.0, abs(trace))
    assert np.abs(p.components @ p.components.T - np.eye(d)).max() < 1e-8
    assert (np.diff(p.eigenvalues) <= 1e-12).all()
    assert abs(p.explained_variance_ratio.sum() - 1.0) < 1e-10
    centered = x - p.mean
    z = centered @ p.components.T
    assert np.abs(z @ p.components - centered).max() < 1e-8
    lead = p.components[np.arange(d), np.abs(p.components).argmax(axis=1)]
    assert (lead > 0).all()
