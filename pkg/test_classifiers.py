"""Tests for the MLP, SVM and ELM heads and the model file format."""
import numpy as np
import pytest

from conftest import blobs
from src.classifiers.base import class_scores, error_percent, load_model, one_hot, predict, save_model
from src.classifiers.elm import random_projection, solve_readout, train_elm
from src.classifiers.mlp import init_params, loss_and_gradients, train_mlp
from src.classifiers.registry import get_classifier, get_classifier_list
from src.classifiers.svm import select_svm_c, svm_objective, train_svm
from src.core.errors import DimensionError, FormatError, ParameterError, SolverError
from src.core.params import ElmConfig, MlpConfig, SvmConfig
from src.core.types import FeatureSet


def test_error_percent():
    assert error_percent([0, 1, 2, 3], [0, 1, 2, 3]) == 0.0
    assert error_percent([1, 0], [0, 1]) == 100.0
    assert error_percent([0, 1, 1, 1], [0, 1, 2, 3]) == 50.0
    with pytest.raises(ParameterError):
        error_percent([], [])


def test_mlp_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    vectors = rng.standard_normal((6, 5))
    targets = one_hot(rng.integers(0, 3, size=6), 3)
    params = init_params(5, 4, 3, seed=1)
    params["hidden_bias"] = rng.standard_normal(4) * 0.1
    params["output_bias"] = rng.standard_normal(3) * 0.1
    _, gradients = loss_and_gradients(params, vectors, targets)

    step = 1e-6
    for name, value in params.items():
        numeric = np.zeros_like(value)
        for index in np.ndindex(value.shape):
            original = value[index]
            value[index] = original + step
            plus, _ = loss_and_gradients(params, vectors, targets)
            value[index] = original - step
            minus, _ = loss_and_gradients(params, vectors, targets)
            value[index] = original
            numeric[index] = (plus - minus) / (2 * step)
        scale = max(np.abs(numeric).max(), np.abs(gradients[name]).max(), 1e-12)
        assert np.abs(numeric - gradients[name]).max() / scale < 1e-4, name


def test_mlp_learns_separable_blobs():
    features = blobs()
    config = MlpConfig(hidden_units=16, epochs=60, learning_rate=0.1, momentum=0.9, batch_size=10, seed=2)
    model = train_mlp(features, config)

    assert error_percent(predict(model, features), features.labels) == 0.0
    history = model.diagnostics["loss"]
    assert len(history) == 60
    assert history[-1] < history[0]


def test_mlp_is_deterministic():
    features = blobs(per_class=5)
    config = MlpConfig(hidden_units=4, epochs=3, batch_size="full", seed=7)
    first, second = train_mlp(features, config), train_mlp(features, config)
    for name in first.weights:
        np.testing.assert_array_equal(first.weights[name], second.weights[name])
    assert first.metadata["mlp.seed"] == "7"


def test_mlp_zero_epochs_keeps_initial_weights():
    features = blobs(per_class=3)
    model = train_mlp(features, MlpConfig(hidden_units=3, epochs=0, seed=4))
    initial = init_params(features.dim, 3, features.class_count, seed=4)
    np.testing.assert_allclose(model.weights["hidden_weights"], initial["hidden_weights"], rtol=1e-6)
    assert model.diagnostics["loss"] == []


def test_mlp_rejects_empty_and_non_finite():
    with pytest.raises(ParameterError):
        train_mlp(FeatureSet(np.zeros((0, 2)), np.zeros(0, dtype=np.int64), 2), MlpConfig(hidden_units=2))
    bad = FeatureSet(np.array([[np.nan, 0.0]]), np.array([0]), 2)
    with pytest.raises(ParameterError):
        train_mlp(bad, MlpConfig(hidden_units=2, epochs=1))


def test_elm_readout_matches_normal_equations():
    rng = np.random.default_rng(3)
    hidden = rng.random((40, 10))
    targets = one_hot(rng.integers(0, 4, size=40), 4)
    ridge = 1e-3
    readout = solve_readout(hidden.copy(), targets, ridge)

    gram = hidden.T @ hidden + ridge * np.eye(10)
    oracle = np.linalg.solve(gram, hidden.T @ targets)
    np.testing.assert_allclose(readout, oracle, atol=1e-8)
    residual = np.linalg.norm(gram @ readout - hidden.T @ targets)
    assert residual <= 1e-6 * max(1.0, np.linalg.norm(hidden.T @ targets))


def test_elm_singular_system_without_ridge():
    with pytest.raises(SolverError, match="ridge"):
        solve_readout(np.zeros((5, 3)), one_hot(np.array([0, 1, 0, 1, 0]), 2), 0.0)


def test_elm_projection_is_seeded():
    first, bias = random_projection(6, 5, seed=3)
    again, _ = random_projection(6, 5, seed=3)
    assert first.shape == (6, 5) and bias.shape == (5,)
    np.testing.assert_array_equal(first, again)
    assert not np.array_equal(first, random_projection(6, 5, seed=4)[0])


def test_elm_learns_separable_blobs():
    features = blobs()
    model = train_elm(features, ElmConfig(hidden_units=30, ridge=1e-3, seed=0))
    assert error_percent(predict(model, features), features.labels) == 0.0
    assert model.metadata["elm.hidden_units"] == "30"


def test_svm_toy_optimum_matches_grid_search():
    features = FeatureSet(np.array([[1.0], [-1.0]]), np.array([1, 0]), 2)
    model = train_svm(features, SvmConfig(C=1.0, max_iterations=100, tolerance=1e-10))
    objective = model.diagnostics["objective"][1][-1]

    w_grid, b_grid = np.meshgrid(np.arange(0.5, 1.1, 1e-3), np.arange(-0.3, 0.3, 1e-3))
    slack_pos = np.maximum(0.0, 1.0 - (w_grid + b_grid))
    slack_neg = np.maximum(0.0, 1.0 + (-w_grid + b_grid))
    grid_best = (0.5 * w_grid ** 2 + slack_pos ** 2 + slack_neg ** 2).min()

    assert abs(objective - 0.4) < 1e-4
    assert objective <= grid_best + 1e-4
    assert model.weights["weights"][0, 1] == pytest.approx(0.8, abs=1e-4)
    assert model.weights["bias"][1] == pytest.approx(0.0, abs=1e-4)
    assert svm_objective(np.array([0.8]), 0.0, features.vectors, np.array([1.0, -1.0]), 1.0) == pytest.approx(0.4)


def test_svm_objective_never_increases():
    features = blobs(per_class=15, spread=1.5, seed=3)
    model = train_svm(features, SvmConfig(C=2.0, max_iterations=50))
    for sequence in model.diagnostics["objective"]:
        assert all(b <= a + 1e-12 for a, b in zip(sequence, sequence[1:]))
    assert len(model.diagnostics["converged"]) == features.class_count


def test_svm_zero_iterations_returns_zero_weights():
    features = blobs(per_class=4)
    model = train_svm(features, SvmConfig(max_iterations=0))
    assert not model.weights["weights"].any()
    assert not model.weights["bias"].any()
    np.testing.assert_array_equal(predict(model, features), np.zeros(len(features)))


def test_svm_learns_separable_blobs():
    features = blobs()
    model = train_svm(features, SvmConfig())
    assert error_percent(predict(model, features), features.labels) == 0.0
    assert all(model.diagnostics["converged"])


def test_select_svm_c_returns_a_candidate():
    features = blobs(per_class=10)
    chosen = select_svm_c(features, [0.01, 1.0, 10.0], validation_fraction=0.3, seed=1)
    assert chosen in (0.01, 1.0, 10.0)
    with pytest.raises(ParameterError):
        select_svm_c(features, [])


@pytest.mark.parametrize("kind", ["mlp", "svm", "elm"])
def test_model_file_roundtrip_reproduces_predictions(tmp_path, kind):
    features = blobs(per_class=6)
    configs = {
        "mlp": MlpConfig(hidden_units=5, epochs=5, batch_size=4, seed=1),
        "svm": SvmConfig(max_iterations=20),
        "elm": ElmConfig(hidden_units=8, seed=1),
    }
    model = get_classifier(kind).trainer(features, configs[kind])
    path = tmp_path / f"{kind}.wbm"
    save_model(model, path)
    loaded = load_model(path)

    assert loaded.kind == kind
    assert loaded.metadata == model.metadata
    np.testing.assert_array_equal(class_scores(loaded, features.vectors), class_scores(model, features.vectors))


def test_model_file_rejects_corruption(tmp_path):
    model = train_elm(blobs(per_class=3), ElmConfig(hidden_units=4))
    path = tmp_path / "elm.wbm"
    save_model(model, path)
    data = bytearray(path.read_bytes())
    data[50] ^= 0x10
    path.write_bytes(bytes(data))
    with pytest.raises(FormatError):
        load_model(path)


def test_scores_reject_wrong_dimension():
    model = train_elm(blobs(per_class=3), ElmConfig(hidden_units=4))
    with pytest.raises(DimensionError):
        class_scores(model, np.zeros((2, 7)))


def test_registry():
    assert get_classifier("svm").config_class is SvmConfig
    assert [entry["key"] for entry in get_classifier_list()] == ["mlp", "svm", "elm"]
    with pytest.raises(ParameterError):
        get_classifier("knn")


def test_elm_readout_identity_hidden_returns_targets():
    targets = np.array([[1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_allclose(solve_readout(np.eye(2), targets, 0.0), targets)


def test_elm_ridge_shrinks_the_readout():
    rng = np.random.default_rng(5)
    hidden = rng.random((20, 8))
    targets = one_hot(rng.integers(0, 3, size=20), 3)
    norms = [np.linalg.norm(solve_readout(hidden, targets, ridge)) for ridge in (1e-3, 1.0, 100.0, 1e9)]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-6


def test_svm_duplicated_set_with_half_c_has_the_same_solution():
    features = blobs(per_class=10, spread=1.5, seed=4)
    doubled = FeatureSet(np.concatenate([features.vectors] * 2), np.concatenate([features.labels] * 2), 3)
    single = train_svm(features, SvmConfig(C=1.0, tolerance=1e-8))
    twice = train_svm(doubled, SvmConfig(C=0.5, tolerance=1e-8))
    np.testing.assert_allclose(twice.weights["weights"], single.weights["weights"], atol=1e-5)
    np.testing.assert_allclose(twice.weights["bias"], single.weights["bias"], atol=1e-5)


def test_svm_reruns_are_bit_identical():
    features = blobs(per_class=12, spread=1.0, seed=6)
    first, second = train_svm(features, SvmConfig(C=2.0)), train_svm(features, SvmConfig(C=2.0))
    for name in first.weights:
        np.testing.assert_array_equal(first.weights[name], second.weights[name])


def test_predictions_follow_row_permutation():
    features = blobs(per_class=10, spread=1.0, seed=8)
    model = train_elm(features, ElmConfig(hidden_units=12, seed=2))
    order = np.random.default_rng(9).permutation(len(features))
    shuffled = FeatureSet(features.vectors[order], features.labels[order], features.class_count)
    np.testing.assert_array_equal(predict(model, shuffled), predict(model, features)[order])


def test_mlp_solves_xor():
    xor = FeatureSet(np.array([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]]), np.array([0, 1, 1, 0]), 2)
    config = MlpConfig(hidden_units=8, epochs=2000, learning_rate=0.5, momentum=0.9, batch_size="full", seed=3)
    model = train_mlp(xor, config)
    assert error_percent(predict(model, xor), xor.labels) == 0.0


def test_mlp_full_batch_loss_decreases_with_small_steps():
    features = blobs(per_class=10)
    config = MlpConfig(hidden_units=6, epochs=10, learning_rate=0.01, momentum=0.0, batch_size="full", seed=5)
    history = train_mlp(features, config).diagnostics["loss"]
    assert all(b <= a for a, b in zip(history, history[1:]))
