"""
One epoch/batch training loop shared by every neural strategy, and the
registered neural estimators built on it.

Each step draws one labeled and one unlabeled batch (the shorter stream
cycles), computes the labeled loss on a clean forward pass, adds the
strategy's weighted unsupervised term when its weight is positive, and
applies one optimizer step. Initialization, shuffling and input noise use
three independent child streams of the seed.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import Field, model_validator
from scipy.special import softmax

from ssl_forge.core.dataset import SSLDataset, TaskKind
from ssl_forge.core.estimator import Estimator, FittedState, ScoreState
from ssl_forge.core.exceptions import ConvergenceError
from ssl_forge.core.params import ComponentParams
from ssl_forge.core.registry import register
from ssl_forge.core.rng import SeededStream
from ssl_forge.neural.network import MlpNetwork, add_gradients, mse, softmax_cross_entropy
from ssl_forge.neural.optim import OptimizerSpec, SchedulerSpec
from ssl_forge.neural.strategies import (
    MeanTeacher, PiModel, PiModelReg, PseudoLabel, Strategy, ema_update,
)


logger = logging.getLogger(__name__)


class TrainConfig(ComponentParams):
    hidden: List[int] = Field(default_factory=lambda: [32], description="Hidden layer widths")
    epochs: int = Field(100, ge=0, description="Training epochs")
    batch_size: int = Field(32, ge=1, description="Rows per labeled and per unlabeled batch")
    optimizer: OptimizerSpec = Field(default_factory=OptimizerSpec, description="Optimizer component")
    scheduler: SchedulerSpec = Field(default_factory=SchedulerSpec, description="Learning-rate schedule")

    @model_validator(mode="after")
    def check_hidden(self) -> "TrainConfig":
        if any(width < 1 for width in self.hidden):
            raise ValueError("hidden widths must be positive")
        return self


@dataclass
class TrainingRun:
    """Networks and traces produced by `trainer_fit`."""
    student: MlpNetwork
    teacher: Optional[MlpNetwork]
    initial: MlpNetwork
    epoch_losses: List[float] = field(default_factory=list)
    steps: int = 0
    trajectory: List[List[np.ndarray]] = field(default_factory=list)


def _batch(order: np.ndarray, start: int, stop: int) -> np.ndarray:
    if order.size == 0:
        return order
    return order[np.arange(start, stop) % order.size]


def trainer_fit(
    strategy: Strategy,
    d: SSLDataset,
    config: TrainConfig,
    seed: int = 0,
    regression: bool = False,
    record_trajectory: bool = False,
    log: logging.Logger = logger
) -> TrainingRun:
    """Train a network under `strategy`; the run keeps the initial network for inspection."""
    init_stream, shuffle_stream, noise_stream = SeededStream(seed).spawn(3)
    n_outputs = 1 if regression else d.n_classes
    student = MlpNetwork.initialize([d.n_features, *config.hidden, n_outputs], init_stream)
    run = TrainingRun(student=student, teacher=student.copy() if strategy.uses_teacher else None,
                      initial=student.copy())
    optimizer = config.optimizer.build(student.parameters())
    targets = d.y.astype(np.float64).reshape(-1, 1) if regression else d.y
    l, u = d.n_labeled, d.n_unlabeled
    steps_per_epoch = max(1, math.ceil(max(l, u) / config.batch_size))

    for epoch in range(config.epochs):
        lr = config.scheduler.lr_at(config.optimizer.lr, epoch)
        weight = strategy.weight(epoch)
        order_l = shuffle_stream.permutation(l)
        order_u = shuffle_stream.permutation(u)
        span = max(l, u)
        epoch_loss = 0.0
        for s in range(steps_per_epoch):
            start, stop = s * config.batch_size, min((s + 1) * config.batch_size, span)
            idx_l = _batch(order_l, start, stop)
            X_l = d.X[idx_l]
            X_u = d.unlabeled_X[_batch(order_u, start, stop)]
            cache = student.forward(X_l)
            if regression:
                loss, d_out = mse(cache.output, targets[idx_l])
            else:
                loss, d_out = softmax_cross_entropy(cache.output, targets[idx_l])
            grads = student.backward(cache, d_out)
            if weight > 0:
                u_loss, u_grads = strategy.unsupervised(student, run.teacher, X_l, X_u, noise_stream)
                loss += weight * u_loss
                grads = add_gradients(grads, u_grads, weight)
            if not np.isfinite(loss):
                raise ConvergenceError(f"non-finite loss at epoch {epoch}, batch {s}")
            student.set_parameters(optimizer.step(student.parameters(), grads, lr))
            run.steps += 1
            if run.teacher is not None:
                ema_update(run.teacher, student, strategy.ema_coefficient(run.steps))
            if record_trajectory:
                run.trajectory.append([p.copy() for p in student.parameters()])
            epoch_loss += loss
        run.epoch_losses.append(epoch_loss / steps_per_epoch)
        log.debug(f"{strategy.kind} epoch {epoch}: loss={run.epoch_losses[-1]:.6f}, lr={lr:.3g}, weight={weight:.4f}")
    return run


@dataclass(frozen=True)
class MlpClassifierState(ScoreState):
    network: MlpNetwork

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.network.outputs(X), axis=1)


@dataclass(frozen=True)
class MlpRegressorState(FittedState):
    network: MlpNetwork

    def decide(self, X):
        return self.network.outputs(X)[:, 0], None


class PseudoLabelParams(TrainConfig):
    T1: int = Field(5, ge=0, description="Epoch where the pseudo-label weight starts rising")
    T2: int = Field(20, ge=0, description="Epoch where it reaches alpha_f")
    alpha_f: float = Field(1.0, ge=0.0, description="Final pseudo-label weight")


class ConsistencyParams(TrainConfig):
    w_max: float = Field(1.0, ge=0.0, description="Final consistency weight")
    ramp_T: int = Field(10, ge=1, description="Ramp-up length in epochs")
    noise_sd: float = Field(0.1, ge=0.0, description="Gaussian input-noise standard deviation")


class MeanTeacherParams(ConsistencyParams):
    ema_decay: float = Field(0.99, ge=0.0, lt=1.0, description="Teacher EMA decay cap")


class _NeuralEstimator(Estimator):
    probabilistic = True
    Params = TrainConfig
    regression = False

    def strategy(self) -> Strategy:
        return Strategy()

    def _fit(self, dataset: SSLDataset, seed: int, diagnostics: Dict[str, Any]) -> FittedState:
        run = trainer_fit(self.strategy(), dataset, self.params, seed, self.regression, log=self.logger)
        network = run.teacher if run.teacher is not None else run.student
        diagnostics.update({
            "epoch_losses": run.epoch_losses,
            "steps": run.steps,
            "final_loss": run.epoch_losses[-1] if run.epoch_losses else None,
        })
        if self.regression:
            return MlpRegressorState(network=network)
        return MlpClassifierState(network=network)


@register
class MlpClassifier(_NeuralEstimator):
    """Supervised MLP on the labeled rows (unlabeled batches are drawn but unused)."""
    name = "mlp"


@register
class MlpRegressor(_NeuralEstimator):
    name = "mlp_regressor"
    task = TaskKind.REGRESSION
    probabilistic = False
    regression = True


@register
class PseudoLabelEstimator(_NeuralEstimator):
    name = "pseudo_label"
    Params = PseudoLabelParams

    def strategy(self):
        return PseudoLabel(self.params.T1, self.params.T2, self.params.alpha_f)


@register
class PiModelEstimator(_NeuralEstimator):
    name = "pi_model"
    Params = ConsistencyParams

    def strategy(self):
        return PiModel(self.params.w_max, self.params.ramp_T, self.params.noise_sd)


@register
class MeanTeacherEstimator(_NeuralEstimator):
    """Mean Teacher; predictions come from the EMA teacher."""
    name = "mean_teacher"
    Params = MeanTeacherParams

    def strategy(self):
        p = self.params
        return MeanTeacher(p.ema_decay, p.w_max, p.ramp_T, p.noise_sd)


@register
class PiModelRegEstimator(_NeuralEstimator):
    name = "pi_model_reg"
    task = TaskKind.REGRESSION
    Params = ConsistencyParams
    probabilistic = False
    regression = True

    def strategy(self):
        return PiModelReg(self.params.w_max, self.params.ramp_T, self.params.noise_sd)
