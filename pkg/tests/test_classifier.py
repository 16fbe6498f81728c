"""Tree growth against the exhaustive reference, and the experiment harness."""

import numpy as np
import pytest

from beaconkit.classifier import (
    Dataset,
    EmptyDataset,
    Leaf,
    SingleClass,
    TooFewRows,
    TreeConfig,
    best_split,
    cross_validate,
    experiment,
    fit,
    gini,
    predict,
    under_sample,
)

from oracles import brute_force_best_split, brute_force_fit, brute_force_predict


class TestGini:
    def test_pure_node(self):
        assert gini((10, 0)) == 0.0

    def test_maximal_impurity(self):
        assert gini((5, 5)) == 0.5

    def test_hand_arithmetic(self):
        assert gini((3, 1)) == pytest.approx(0.375)

    def test_empty_node_rejected(self):
        with pytest.raises(ValueError):
            gini((0, 0))


class TestBestSplit:
    def test_perfect_binary_separator(self):
        X = np.array([[0.0], [0.0], [1.0], [1.0]])
        y = np.array([False, False, True, True])
        feature, threshold, gain = best_split(X, y)
        assert feature == 0 and threshold == 0.5
        assert gain == pytest.approx(gini((2, 2)))

    def test_identical_features_mixed_labels(self):
        X = np.ones((4, 2))
        y = np.array([True, False, True, False])
        assert best_split(X, y) is None

    def test_four_row_toy_matches_brute_force(self):
        X = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 1.0], [4.0, 1.0]])
        y = np.array([False, True, True, False])
        assert best_split(X, y) == brute_force_best_split(X, y)

    def test_property_family_against_oracle(self):
        """>= 500 generated small datasets, exact agreement required."""
        rng = np.random.default_rng(20240811)
        for case in range(500):
            n = int(rng.integers(2, 13))
            f = int(rng.integers(1, 5))
            if case % 3 == 0:
                X = rng.normal(size=(n, f)).round(1)
            else:
                X = rng.integers(0, 4, size=(n, f)).astype(float)
            y = rng.integers(0, 2, size=n).astype(bool)
            assert best_split(X, y) == brute_force_best_split(X, y), (X, y)

    def test_min_leaf_constraint(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([False, True, True, True])
        unconstrained = best_split(X, y, min_leaf=1)
        constrained = best_split(X, y, min_leaf=2)
        assert unconstrained[1] == 0.5
        assert constrained[1] == 1.5


class TestFit:
    def test_separable_training_accuracy_one(self):
        X = np.array([[0.0, 7.0], [1.0, 6.0], [8.0, 1.0], [9.0, 0.0]])
        y = np.array([False, False, True, True])
        tree = fit(Dataset(X, y, ("a", "b")))
        assert (predict(tree, X) == y).all()

    def test_single_row(self):
        tree = fit(Dataset(np.array([[3.0]]), np.array([True]), ("x",)))
        assert isinstance(tree, Leaf) and tree.predicted is True

    def test_empty_rejected(self):
        with pytest.raises(EmptyDataset):
            fit(Dataset(np.empty((0, 1)), np.empty(0, dtype=bool), ("x",)))

    def test_tie_predicts_negative(self):
        X = np.ones((4, 1))
        y = np.array([True, True, False, False])
        tree = fit(Dataset(X, y, ("x",)))
        assert isinstance(tree, Leaf) and tree.predicted is False

    def test_max_depth_zero_gives_majority_stump(self):
        X = np.array([[0.0], [1.0], [2.0]])
        y = np.array([True, True, False])
        tree = fit(Dataset(X, y, ("x",)), TreeConfig(max_depth=0))
        assert isinstance(tree, Leaf) and tree.predicted is True

    def test_twenty_row_set_matches_reference_cart(self):
        rng = np.random.default_rng(5)
        X = rng.integers(0, 5, size=(20, 3)).astype(float)
        y = rng.integers(0, 2, size=20).astype(bool)
        tree = fit(Dataset(X, y, ("a", "b", "c")))
        reference = brute_force_fit(X, y)
        probe = rng.integers(0, 5, size=(64, 3)).astype(float)
        for grid in (X, probe):
            mine = predict(tree, grid)
            theirs = np.array([brute_force_predict(reference, row) for row in grid])
            assert (mine == theirs).all()

    def test_round_trip_accuracy_on_consistent_rows(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(40, 4)).round(2)
        y = rng.integers(0, 2, size=40).astype(bool)
        # distinct rows are almost sure here; verify the precondition anyway
        assert len({tuple(r) for r in X.tolist()}) == 40
        tree = fit(Dataset(X, y, ("a", "b", "c", "d")))
        assert (predict(tree, X) == y).all()


def balanced_dataset(n_per_class: int = 30, informative: bool = True,
                     seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    X0 = rng.normal(0.0, 1.0, size=(n_per_class, 3))
    X1 = rng.normal(5.0 if informative else 0.0, 1.0, size=(n_per_class, 3))
    X = np.vstack([X0, X1])
    y = np.array([False] * n_per_class + [True] * n_per_class)
    return Dataset(X, y, ("a", "b", "c"))


class TestUnderSample:
    def test_paper_scale_balance(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(30572, 2))
        y = np.zeros(30572, dtype=bool)
        y[:235] = True
        balanced = under_sample(Dataset(X, y, ("a", "b")), seed=1)
        assert len(balanced) == 470
        assert int(balanced.y.sum()) == 235

    def test_already_balanced_is_permutation(self):
        ds = balanced_dataset(10)
        out = under_sample(ds, seed=3)
        assert sorted(map(tuple, out.X.tolist())) == sorted(map(tuple, ds.X.tolist()))

    def test_two_seeds_share_minority_differ_in_majority(self):
        rng = np.random.default_rng(2)
        X = np.arange(400, dtype=float).reshape(-1, 1)
        y = np.zeros(400, dtype=bool)
        y[:20] = True
        ds = Dataset(X, y, ("x",))
        a = under_sample(ds, seed=1)
        b = under_sample(ds, seed=2)
        assert set(a.X[a.y, 0]) == set(b.X[b.y, 0]) == set(range(20))
        assert set(a.X[~a.y, 0]) != set(b.X[~b.y, 0])
        assert np.array_equal(under_sample(ds, seed=1).X, a.X)

    def test_single_class_rejected(self):
        with pytest.raises(SingleClass):
            under_sample(Dataset(np.ones((5, 1)), np.ones(5, dtype=bool), ("x",)), 0)


class TestCrossValidate:
    def test_separable_data_perfect_folds(self):
        metrics = cross_validate(balanced_dataset(25), k=5, seed=0)
        assert len(metrics) == 5
        for m in metrics:
            assert m.recall == m.precision == m.accuracy == 1.0

    def test_constant_predictor_accuracy_half(self):
        # identical features force a single tie leaf predicting False
        X = np.ones((40, 2))
        y = np.array([True, False] * 20)
        metrics = cross_validate(Dataset(X, y, ("a", "b")), k=10, seed=1)
        for m in metrics:
            assert m.accuracy == 0.5
            assert m.recall == 0.0

    def test_deterministic_per_seed(self):
        ds = balanced_dataset(20, informative=False, seed=9)
        assert cross_validate(ds, k=4, seed=5) == cross_validate(ds, k=4, seed=5)

    def test_too_few_rows(self):
        with pytest.raises(TooFewRows):
            cross_validate(balanced_dataset(5), k=10)

    def test_non_stratified_flag(self):
        ds = balanced_dataset(20)
        metrics = cross_validate(ds, k=4, seed=0, stratified=False)
        assert len(metrics) == 4


class TestExperiment:
    def test_reproducible_reports(self):
        ds = balanced_dataset(30)
        a = experiment(ds, resamples=5, k=5, seed=42)
        b = experiment(ds, resamples=5, k=5, seed=42)
        assert a.to_json() == b.to_json()

    def test_summary_recomputable_from_folds(self):
        ds = balanced_dataset(30, informative=False)
        rep = experiment(ds, resamples=8, k=5, seed=3)
        flat = np.array([[m.recall, m.precision, m.accuracy]
                         for resample in rep.fold_metrics for m in resample])
        for j, name in enumerate(("recall", "precision", "accuracy")):
            assert rep.summary[name]["mean"] == pytest.approx(float(flat[:, j].mean()))
            assert rep.summary[name]["std"] == pytest.approx(float(flat[:, j].std()))

    def test_feature_subset_restricts_columns(self):
        ds = balanced_dataset(30)
        rep = experiment(ds, resamples=3, k=5, seed=1, feature_subset=["b"])
        assert rep.feature_subset == ("b",)

    def test_per_resample_aggregation_mode(self):
        ds = balanced_dataset(30)
        rep = experiment(ds, resamples=4, k=5, seed=1, aggregate="per_resample")
        means = np.array([np.mean([m.accuracy for m in rs]) for rs in rep.fold_metrics])
        assert rep.summary["accuracy"]["mean"] == pytest.approx(float(means.mean()))
        assert rep.summary["accuracy"]["std"] == pytest.approx(float(means.std()))

    def test_single_class_propagates(self):
        X = np.ones((30, 1))
        with pytest.raises(SingleClass):
            experiment(Dataset(X, np.ones(30, dtype=bool), ("x",)), resamples=2, k=3)

    def test_text_rendering_shape(self):
        rep = experiment(balanced_dataset(30), resamples=2, k=5, seed=0)
        text = rep.to_text()
        assert "Recall" in text and "Std. dev." in text
