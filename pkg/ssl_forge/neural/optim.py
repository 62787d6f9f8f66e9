"""
Optimizers and learning-rate schedulers of the neural trainer.

Both are pydantic-configured components: `OptimizerSpec.build` creates the
stateful optimizer and `SchedulerSpec.lr_at` maps an epoch to a rate.
"""
import math
from typing import List, Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class SGD:
    """v <- momentum * v + g + weight_decay * theta; theta <- theta - lr * v."""

    def __init__(self, params: Sequence[np.ndarray], momentum: float = 0.0, weight_decay: float = 0.0):
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity = [np.zeros_like(p) for p in params]
        self.steps = 0

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray], lr: float) -> List[np.ndarray]:
        updated = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self.velocity[i] = self.momentum * self.velocity[i] + g + self.weight_decay * p
            updated.append(p - lr * self.velocity[i])
        self.steps += 1
        return updated


class Adam:
    """Bias-corrected Adam."""

    def __init__(self, params: Sequence[np.ndarray], beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, weight_decay: float = 0.0):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.steps = 0

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray], lr: float) -> List[np.ndarray]:
        self.steps += 1
        t = self.steps
        updated = []
        for i, (p, g) in enumerate(zip(params, grads)):
            g = g + self.weight_decay * p
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            m_hat = self.m[i] / (1.0 - self.beta1 ** t)
            v_hat = self.v[i] / (1.0 - self.beta2 ** t)
            updated.append(p - lr * m_hat / (np.sqrt(v_hat) + self.eps))
        return updated


def optimizer_step(optimizer, params: Sequence[np.ndarray], grads: Sequence[np.ndarray], lr: float) -> List[np.ndarray]:
    return optimizer.step(params, grads, lr)


class OptimizerSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["sgd", "adam"] = Field("adam", description="Optimizer")
    lr: float = Field(0.01, gt=0.0, description="Base learning rate")
    momentum: float = Field(0.0, ge=0.0, lt=1.0, description="SGD momentum")
    weight_decay: float = Field(0.0, ge=0.0, description="L2 weight decay added to the gradient")
    beta1: float = Field(0.9, ge=0.0, lt=1.0, description="Adam first-moment decay")
    beta2: float = Field(0.999, ge=0.0, lt=1.0, description="Adam second-moment decay")
    eps: float = Field(1e-8, gt=0.0, description="Adam denominator guard")

    def build(self, params: Sequence[np.ndarray]):
        if self.kind == "sgd":
            return SGD(params, self.momentum, self.weight_decay)
        return Adam(params, self.beta1, self.beta2, self.eps, self.weight_decay)


class SchedulerSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["constant", "step", "cosine"] = Field("constant", description="Schedule shape")
    period: int = Field(10, ge=1, description="Epochs between step decays")
    factor: float = Field(0.5, gt=0.0, le=1.0, description="Step decay factor")
    T_max: int = Field(100, ge=1, description="Cosine half-period in epochs")
    lr_min: float = Field(1e-5, gt=0.0, description="Cosine floor")

    @model_validator(mode="after")
    def check_floor(self) -> "SchedulerSpec":
        if self.kind == "cosine" and self.lr_min <= 0:
            raise ValueError("cosine lr_min must be positive")
        return self

    def lr_at(self, base_lr: float, epoch: int) -> float:
        if self.kind == "step":
            return base_lr * self.factor ** (epoch // self.period)
        if self.kind == "cosine":
            progress = min(epoch, self.T_max) / self.T_max
            return self.lr_min + (base_lr - self.lr_min) * 0.5 * (1.0 + math.cos(math.pi * progress))
        return base_lr
