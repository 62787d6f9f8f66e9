import math

import numpy as np
import pytest
from pydantic import ValidationError

from ssl_forge.neural.optim import Adam, OptimizerSpec, SGD, SchedulerSpec


def test_plain_sgd_step():
    p, g = [np.array([1.0, 2.0])], [np.array([0.5, -1.0])]
    updated = SGD(p).step(p, g, lr=0.1)
    assert np.allclose(updated[0], [0.95, 2.1])


def test_sgd_momentum_accumulates():
    p, g = [np.array([0.0])], [np.array([1.0])]
    opt = SGD(p, momentum=0.9)
    p = opt.step(p, g, lr=1.0)
    p = opt.step(p, g, lr=1.0)
    assert p[0][0] == pytest.approx(-(1.0 + 1.9))
    assert opt.steps == 2


def test_sgd_weight_decay():
    p = [np.array([2.0])]
    updated = SGD(p, weight_decay=0.5).step(p, [np.zeros(1)], lr=0.1)
    assert updated[0][0] == pytest.approx(2.0 - 0.1 * 1.0)


def test_adam_first_step_moves_by_lr():
    p, g = [np.array([1.0, 1.0])], [np.array([3.0, -0.01])]
    updated = Adam(p).step(p, g, lr=0.01)
    assert np.allclose(updated[0], [0.99, 1.01], atol=1e-6)


def test_spec_builds_optimizer():
    params = [np.zeros(2)]
    assert isinstance(OptimizerSpec(kind="sgd", momentum=0.5).build(params), SGD)
    assert isinstance(OptimizerSpec().build(params), Adam)
    with pytest.raises(ValidationError):
        OptimizerSpec(kind="rmsprop")
    with pytest.raises(ValidationError):
        OptimizerSpec(lr=0.1, nesterov=True)


def test_step_schedule():
    spec = SchedulerSpec(kind="step", period=10, factor=0.5)
    assert spec.lr_at(0.1, 9) == pytest.approx(0.1)
    assert spec.lr_at(0.1, 25) == pytest.approx(0.025)


def test_cosine_schedule():
    spec = SchedulerSpec(kind="cosine", T_max=10, lr_min=0.001)
    assert spec.lr_at(0.1, 0) == pytest.approx(0.1)
    assert spec.lr_at(0.1, 5) == pytest.approx(0.001 + 0.099 * 0.5 * (1.0 + math.cos(math.pi / 2)))
    assert spec.lr_at(0.1, 10) == pytest.approx(0.001)
    assert spec.lr_at(0.1, 50) == pytest.approx(0.001)


def test_constant_schedule():
    assert SchedulerSpec().lr_at(0.3, 1000) == 0.3
