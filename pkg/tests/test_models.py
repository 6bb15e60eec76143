import numpy as np
import pytest

from conftest import make_dataset
from stresskit.errors import (
    InvalidParamValue,
    SingleClassTraining,
    UnknownParam,
    UnsupportedModel,
    WidthMismatch,
)
from stresskit.models import (
    ModelConfig,
    fit,
    load_model,
    predict,
    predict_proba,
    save_model,
)
from stresskit.models.common import multinomial_deviance, one_hot, softmax
from stresskit.models.linear import lr_objective


def blobs(seed, n_per=50, sep=4.0, d=3, classes=3):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_per * classes, d))
    y = np.repeat(np.arange(classes), n_per)
    x += y[:, None] * sep
    return make_dataset(x, y)


class TestConfig:
    def test_unknown_param_rejected(self):
        with pytest.raises(UnknownParam):
            ModelConfig("gb", {"n_trees": 10})

    def test_bad_value_rejected(self):
        with pytest.raises(InvalidParamValue):
            ModelConfig("gb", {"subsample": 1.5})
        with pytest.raises(InvalidParamValue):
            ModelConfig("knn", {"weights": "squared"})

    def test_unknown_kind(self):
        with pytest.raises(UnsupportedModel):
            ModelConfig("xgboost", {})

    def test_solver_aliases_accepted(self):
        for solver in ("newton-cg", "lbfgs", "liblinear"):
            ModelConfig("lr", {"solver": solver})
        for solver in ("svd", "lsqr", "eigen"):
            ModelConfig("lda", {"solver": solver})

    def test_svc_grid_parses_but_fit_rejects(self):
        cfg = ModelConfig("svc", {"kernel": "rbf", "C": 50, "gamma": "scale"})
        ds = blobs(0, n_per=10)
        with pytest.raises(UnsupportedModel, match="out of scope"):
            fit(cfg, ds)

    def test_single_class_training(self):
        ds = make_dataset(np.arange(8, dtype=float).reshape(4, 2), [1, 1, 1, 1], n_classes=2)
        with pytest.raises(SingleClassTraining):
            fit(ModelConfig("knn", {"n_neighbors": 1}), ds)


class TestKNN:
    def test_k1_memorizes_training_points(self):
        ds = blobs(1, n_per=15)
        model = fit(ModelConfig("knn", {"n_neighbors": 1}), ds)
        assert np.array_equal(model.predict(ds.x), ds.y)

    def test_two_row_dataset(self):
        ds = make_dataset([[0.0], [1.0]], [0, 1])
        model = fit(ModelConfig("knn", {"n_neighbors": 1}), ds)
        assert np.array_equal(model.predict(ds.x), [0, 1])

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(2)
        ds = blobs(2, n_per=20, sep=1.0)
        probe = rng.standard_normal((25, 3)) * 3.0
        model = fit(ModelConfig("knn", {"n_neighbors": 5}), ds)
        perm = rng.permutation(ds.n_rows)
        shuffled = ds.select_rows(perm)
        model2 = fit(ModelConfig("knn", {"n_neighbors": 5}), shuffled)
        assert np.array_equal(model.predict(probe), model2.predict(probe))

    def test_distance_weight_exact_match(self):
        ds = make_dataset([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [0, 1, 1])
        model = fit(ModelConfig("knn", {"n_neighbors": 3, "weights": "distance"}), ds)
        proba = model.predict_proba(np.array([[0.0, 0.0]]))
        assert proba[0, 0] == 1.0  # zero-distance neighbour dominates

    def test_metrics_agree_on_hand_distances(self):
        ds = make_dataset([[0.0, 0.0], [3.0, 4.0]], [0, 1])
        probe = np.array([[3.0, 3.9]])
        for metric in ("euclidean", "manhattan", "minkowski"):
            model = fit(ModelConfig("knn", {"n_neighbors": 1, "metric": metric}), ds)
            assert model.predict(probe)[0] == 1

    def test_k_exceeds_rows(self):
        ds = make_dataset([[0.0], [1.0]], [0, 1])
        with pytest.raises(InvalidParamValue):
            fit(ModelConfig("knn", {"n_neighbors": 5}), ds)


class TestGradientBoosting:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        scores = rng.standard_normal((5, 3))
        y = rng.integers(0, 3, 5)
        analytic = softmax(scores) - one_hot(y, 3)  # gradient of the summed deviance
        h = 1e-6
        for i in range(5):
            for c in range(3):
                up, dn = scores.copy(), scores.copy()
                up[i, c] += h
                dn[i, c] -= h
                fd = (multinomial_deviance(up, y) - multinomial_deviance(dn, y)) * 5 / (2 * h)
                assert abs(fd - analytic[i, c]) / max(1.0, abs(fd)) < 1e-5

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_overfits_random_labels(self, seed):
        rng = np.random.default_rng(seed)
        ds = make_dataset(rng.standard_normal((20, 5)), rng.integers(0, 3, 20), 3)
        model = fit(ModelConfig("gb", {"n_estimators": 500, "max_depth": 3}, seed=seed), ds)
        assert np.mean(model.predict(ds.x) == ds.y) == 1.0

    def test_deviance_non_increasing(self):
        ds = blobs(4, n_per=40, sep=1.0)
        model = fit(ModelConfig("gb", {"n_estimators": 60, "subsample": 1.0}, seed=0), ds)
        trace = model.train_deviance
        assert len(trace) == 61
        assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))

    def test_zero_iterations_gives_priors(self):
        y = np.array([0] * 6 + [1] * 3 + [2] * 1)
        ds = make_dataset(np.random.default_rng(5).standard_normal((10, 2)), y)
        model = fit(ModelConfig("gb", {"n_estimators": 0}), ds)
        proba = model.predict_proba(np.zeros((4, 2)))
        assert np.allclose(proba, [0.6, 0.3, 0.1], atol=1e-12)

    def test_zero_learning_rate_keeps_prior_argmax(self):
        rng = np.random.default_rng(6)
        y = np.array([0] * 12 + [1] * 5 + [2] * 3)
        ds = make_dataset(rng.standard_normal((20, 3)), y)
        model = fit(ModelConfig("gb", {"n_estimators": 25, "learning_rate": 0.0}), ds)
        pred = model.predict(rng.standard_normal((30, 3)))
        assert np.all(pred == 0)

    def test_max_depth_honored(self):
        ds = blobs(7, n_per=30, sep=1.0)
        for depth in (1, 2, 3):
            model = fit(ModelConfig("gb", {"n_estimators": 10, "max_depth": depth}), ds)
            for iteration in model.trees:
                for tree in iteration:
                    assert tree.node_depths().max() <= depth

    def test_deterministic_with_subsample(self):
        ds = blobs(8, n_per=25, sep=1.0)
        probe = np.random.default_rng(9).standard_normal((10, 3))
        a = fit(ModelConfig("gb", {"n_estimators": 20, "subsample": 0.7}, seed=3), ds)
        b = fit(ModelConfig("gb", {"n_estimators": 20, "subsample": 0.7}, seed=3), ds)
        assert np.array_equal(a.predict_proba(probe), b.predict_proba(probe))


class TestRandomForest:
    def test_max_depth_honored(self):
        ds = blobs(10, n_per=25, sep=0.5)
        model = fit(ModelConfig("rf", {"estimators": 12, "max_depth": 4}), ds)
        for tree in model.trees:
            assert tree.node_depths().max() <= 4

    def test_majority_vote_probabilities(self):
        ds = blobs(11, n_per=30)
        model = fit(ModelConfig("rf", {"estimators": 15}), ds)
        proba = model.predict_proba(ds.x[:8])
        votes = proba * 15
        assert np.allclose(votes, np.round(votes), atol=1e-9)

    def test_deterministic(self):
        ds = blobs(12, n_per=20, sep=1.0)
        probe = np.random.default_rng(1).standard_normal((12, 3))
        a = fit(ModelConfig("rf", {"estimators": 10}, seed=4), ds)
        b = fit(ModelConfig("rf", {"estimators": 10}, seed=4), ds)
        assert np.array_equal(a.predict(probe), b.predict(probe))

    def test_log2_and_sqrt_rules(self):
        ds = blobs(13, n_per=15, d=9)
        for rule in ("log2", "sqrt"):
            model = fit(ModelConfig("rf", {"estimators": 5, "max_features": rule}), ds)
            assert np.mean(model.predict(ds.x) == ds.y) > 0.9


class TestLogisticRegression:
    def test_objective_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(14)
        x = rng.standard_normal((12, 4))
        y = rng.integers(0, 3, 12)
        w = rng.standard_normal((4, 3)) * 0.3
        b = rng.standard_normal(3) * 0.1
        penalty = 0.5
        _, gw, gb = lr_objective(x, y, w, b, penalty)
        h = 1e-6
        for i in range(4):
            for c in range(3):
                up, dn = w.copy(), w.copy()
                up[i, c] += h
                dn[i, c] -= h
                fd = (lr_objective(x, y, up, b, penalty)[0]
                      - lr_objective(x, y, dn, b, penalty)[0]) / (2 * h)
                assert abs(fd - gw[i, c]) / max(1.0, abs(fd)) < 1e-5
        for c in range(3):
            up, dn = b.copy(), b.copy()
            up[c] += h
            dn[c] -= h
            fd = (lr_objective(x, y, w, up, penalty)[0]
                  - lr_objective(x, y, w, dn, penalty)[0]) / (2 * h)
            assert abs(fd - gb[c]) / max(1.0, abs(fd)) < 1e-5

    def test_probabilities_are_softmax_of_linear(self):
        # finite-difference the log-probabilities in input space and compare
        # against the softmax-of-linear analytic jacobian
        ds = blobs(15, n_per=25, sep=2.0)
        model = fit(ModelConfig("lr", {"c_value": 10.0}), ds)
        rng = np.random.default_rng(16)
        h = 1e-6
        for point in rng.standard_normal((3, 3)):
            p = model.predict_proba(point[None, :])[0]
            for c in range(3):
                analytic = model.weights[:, c] - model.weights @ p
                for j in range(3):
                    up, dn = point.copy(), point.copy()
                    up[j] += h
                    dn[j] -= h
                    fd = (
                        np.log(model.predict_proba(up[None, :])[0, c])
                        - np.log(model.predict_proba(dn[None, :])[0, c])
                    ) / (2 * h)
                    assert abs(fd - analytic[j]) < 1e-4

    def test_extreme_regularization_collapses_to_majority(self):
        rng = np.random.default_rng(17)
        y = np.array([0] * 40 + [1] * 10)
        x = rng.standard_normal((50, 3)) + y[:, None] * 2.0
        ds = make_dataset(x, y)
        model = fit(ModelConfig("lr", {"c_value": 1e-6}), ds)
        assert np.all(model.predict(x) == 0)

    def test_converges_on_separable_data(self):
        ds = blobs(18, n_per=30, sep=5.0)
        model = fit(ModelConfig("lr", {"c_value": 100.0}), ds)
        assert np.mean(model.predict(ds.x) == ds.y) == 1.0


class TestLDA:
    @pytest.mark.parametrize("seed", range(5))
    def test_separated_blobs(self, seed):
        rng = np.random.default_rng(seed)
        n = 200
        x = rng.standard_normal((2 * n, 4))
        x[n:] += 6.0  # 6 sigma separation
        y = np.array([0] * n + [1] * n)
        ds = make_dataset(x, y)
        train = ds.select_rows(np.r_[0:150, 200:350])
        test = ds.select_rows(np.r_[150:200, 350:400])
        model = fit(ModelConfig("lda", {}), train)
        assert np.mean(model.predict(test.x) == test.y) >= 0.99


class TestCommonContract:
    KINDS = [
        ("gb", {"n_estimators": 15, "max_depth": 2}),
        ("rf", {"estimators": 8}),
        ("knn", {"n_neighbors": 3, "weights": "distance"}),
        ("lr", {"c_value": 1.0}),
        ("lda", {}),
    ]

    @pytest.mark.parametrize("kind,params", KINDS)
    def test_proba_rows_sum_to_one(self, kind, params):
        ds = blobs(20, n_per=20, sep=1.5)
        model = fit(ModelConfig(kind, params, seed=1), ds)
        proba = predict_proba(model, np.random.default_rng(21).standard_normal((40, 3)))
        assert np.all(proba >= 0)
        assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-9)

    @pytest.mark.parametrize("kind,params", KINDS)
    def test_width_mismatch(self, kind, params):
        ds = blobs(22, n_per=20)
        model = fit(ModelConfig(kind, params), ds)
        with pytest.raises(WidthMismatch):
            predict(model, np.zeros((2, 7)))

    @pytest.mark.parametrize("kind,params", KINDS)
    def test_serialization_round_trip(self, kind, params, tmp_path):
        ds = blobs(23, n_per=18, sep=1.0)
        probe = np.random.default_rng(24).standard_normal((16, 3))
        model = fit(ModelConfig(kind, params, seed=2), ds)
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        assert np.array_equal(model.predict_proba(probe), loaded.predict_proba(probe))
        assert np.array_equal(model.predict(probe), loaded.predict(probe))

    @pytest.mark.parametrize("kind,params", KINDS)
    def test_predicts_only_training_classes(self, kind, params):
        rng = np.random.default_rng(25)
        x = rng.standard_normal((30, 3))
        y = np.array(([1] * 15) + ([3] * 15))  # classes 1 and 3 of a 4-class problem
        ds = make_dataset(x + y[:, None], y, n_classes=4)
        model = fit(ModelConfig(kind, params), ds)
        pred = model.predict(rng.standard_normal((20, 3)) + 2.0)
        assert set(pred.tolist()) <= {1, 3}
