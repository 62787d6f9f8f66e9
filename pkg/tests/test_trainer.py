import math

import numpy as np
import pytest

from ssl_forge.core.dataset import TaskKind, validate_dataset
from ssl_forge.core.exceptions import ConvergenceError
from ssl_forge.core.registry import estimator_fit
from ssl_forge.data.generators import generate
from ssl_forge.data.split import split_labeled_unlabeled
from ssl_forge.neural.strategies import MeanTeacher, PiModel, PseudoLabel, Strategy
from ssl_forge.neural.trainer import TrainConfig, trainer_fit


@pytest.fixture
def moons_data(moons_split):
    return validate_dataset(moons_split.dataset, TaskKind.CLASSIFICATION)


def _config(**overrides):
    values = {"hidden": [8], "epochs": 5, "batch_size": 16}
    values.update(overrides)
    return TrainConfig(**values)


def _same_trajectory(a, b):
    return len(a) == len(b) and all(
        all(np.array_equal(p, q) for p, q in zip(step_a, step_b)) for step_a, step_b in zip(a, b)
    )


@pytest.mark.parametrize("strategy", [
    PiModel(w_max=0.0),
    PseudoLabel(alpha_f=0.0),
    MeanTeacher(w_max=0.0),
])
def test_zero_weight_strategies_train_like_supervised(moons_data, strategy):
    supervised = trainer_fit(Strategy(), moons_data, _config(), seed=3, record_trajectory=True)
    collapsed = trainer_fit(strategy, moons_data, _config(), seed=3, record_trajectory=True)
    assert _same_trajectory(supervised.trajectory, collapsed.trajectory)


def test_step_count(moons_data):
    run = trainer_fit(Strategy(), moons_data, _config(epochs=4, batch_size=32), seed=0)
    assert run.steps == 4 * math.ceil(max(moons_data.n_labeled, moons_data.n_unlabeled) / 32)
    assert len(run.epoch_losses) == 4


def test_zero_epochs_keeps_initial_network(moons_data):
    run = trainer_fit(PiModel(), moons_data, _config(epochs=0), seed=0)
    assert run.steps == 0
    assert all(np.array_equal(p, q) for p, q in zip(run.student.parameters(), run.initial.parameters()))


def test_training_is_seed_deterministic(moons_data):
    a = trainer_fit(PiModel(), moons_data, _config(), seed=7)
    b = trainer_fit(PiModel(), moons_data, _config(), seed=7)
    assert a.epoch_losses == b.epoch_losses
    assert all(np.array_equal(p, q) for p, q in zip(a.student.parameters(), b.student.parameters()))


def test_divergence_raises():
    data = generate("linear", {"n": 40, "d": 2}, seed=0)
    split = split_labeled_unlabeled(data.X, data.y, n_labeled=10, stratified=False, seed=0)
    d = validate_dataset(split.dataset, TaskKind.REGRESSION)
    config = _config(epochs=200, optimizer={"kind": "sgd", "lr": 1e6})
    with pytest.raises(ConvergenceError, match="non-finite loss"):
        trainer_fit(Strategy(), d, config, seed=0, regression=True)


def _median_moons_accuracy(name):
    scores = []
    for seed in range(5):
        data = generate("two_moons", {"n": 200, "noise_sd": 0.05}, seed=seed)
        split = split_labeled_unlabeled(data.X, data.y, n_labeled=10, seed=seed)
        model = estimator_fit(name, None, split.dataset, seed=seed)
        scores.append(model.score(split.dataset.unlabeled_X, split.unlabeled_y))
    return float(np.median(scores))


@pytest.mark.parametrize("name", ["pi_model", "mean_teacher"])
def test_consistency_methods_keep_up_with_supervised_mlp(name):
    assert _median_moons_accuracy(name) >= _median_moons_accuracy("mlp") - 0.02


def test_neural_classifier_probabilities(moons_split):
    model = estimator_fit("pseudo_label", {"hidden": [8], "epochs": 10}, moons_split.dataset, seed=0)
    proba = model.predict_proba(moons_split.dataset.unlabeled_X)
    assert np.allclose(proba.sum(axis=1), 1.0)
    assert model.diagnostics["steps"] == 10 * math.ceil(moons_split.dataset.n_unlabeled / 32)


def test_mlp_regressor_learns_linear_target():
    data = generate("linear", {"n": 150, "d": 2}, seed=1)
    split = split_labeled_unlabeled(data.X, data.y, n_labeled=50, stratified=False, seed=1)
    model = estimator_fit("pi_model_reg", {"hidden": [16], "epochs": 150, "noise_sd": 0.05}, split.dataset, seed=0)
    assert model.score(split.dataset.unlabeled_X, split.unlabeled_y) > 0.5
