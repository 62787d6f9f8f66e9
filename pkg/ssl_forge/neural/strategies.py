"""
Semi-supervised strategies plugged into the trainer loop.

A strategy supplies the weight of its unsupervised term for an epoch and the
term itself (loss plus student gradients) for one batch. The supervised
labeled loss is computed by the trainer for every strategy.
"""
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import softmax

from ssl_forge.neural.network import (
    MlpNetwork, add_gradients, consistency_mse, mlp_forward, softmax_cross_entropy,
)
from ssl_forge.core.rng import SeededStream


def ramp_weight(t: float, T: int, w_max: float) -> float:
    """w(t) = w_max * exp(-5 (1 - min(t, T) / T)^2)."""
    phase = 1.0 - min(t, T) / T
    return w_max * math.exp(-5.0 * phase * phase)


def pseudo_label_weight(t: float, T1: int, T2: int, alpha_f: float) -> float:
    """alpha_f * clip((t - T1) / (T2 - T1), 0, 1)."""
    if T2 <= T1:
        return alpha_f if t >= T2 else 0.0
    return alpha_f * min(max((t - T1) / (T2 - T1), 0.0), 1.0)


class Strategy:
    """Supervised training: no unsupervised term."""
    kind = "supervised"
    uses_teacher = False

    def weight(self, epoch: int) -> float:
        return 0.0

    def unsupervised(
        self,
        student: MlpNetwork,
        teacher: Optional[MlpNetwork],
        X_l: np.ndarray,
        X_u: np.ndarray,
        noise: SeededStream
    ) -> Tuple[float, List[np.ndarray]]:
        raise NotImplementedError


class PseudoLabel(Strategy):
    """Cross-entropy of unlabeled rows against the current model's argmax."""
    kind = "pseudo_label"

    def __init__(self, T1: int = 5, T2: int = 20, alpha_f: float = 1.0):
        self.T1, self.T2, self.alpha_f = T1, T2, alpha_f

    def weight(self, epoch):
        return pseudo_label_weight(epoch, self.T1, self.T2, self.alpha_f)

    def unsupervised(self, student, teacher, X_l, X_u, noise):
        if X_u.shape[0] == 0:
            return 0.0, [np.zeros_like(p) for p in student.parameters()]
        cache = student.forward(X_u)
        targets = np.argmax(cache.output, axis=1)
        loss, d_out = softmax_cross_entropy(cache.output, targets)
        return loss, student.backward(cache, d_out)


class PiModel(Strategy):
    """Squared difference of softmax outputs of two noisy passes over all batch rows."""
    kind = "pi_model"
    use_softmax = True

    def __init__(self, w_max: float = 1.0, ramp_T: int = 10, noise_sd: float = 0.1):
        self.w_max, self.ramp_T, self.noise_sd = w_max, ramp_T, noise_sd

    def weight(self, epoch):
        return ramp_weight(epoch, self.ramp_T, self.w_max)

    def unsupervised(self, student, teacher, X_l, X_u, noise):
        X = np.vstack([X_l, X_u])
        first = mlp_forward(student, X, True, self.noise_sd, noise)
        second = mlp_forward(student, X, True, self.noise_sd, noise)
        loss, d_a, d_b = consistency_mse(first.output, second.output, self.use_softmax)
        return loss, add_gradients(student.backward(first, d_a), student.backward(second, d_b))


class PiModelReg(PiModel):
    """Π-model on raw regression outputs."""
    kind = "pi_model_reg"
    use_softmax = False


class MeanTeacher(PiModel):
    """Student softmax pulled toward an EMA teacher's softmax; the teacher predicts."""
    kind = "mean_teacher"
    uses_teacher = True

    def __init__(self, ema_decay: float = 0.99, w_max: float = 1.0, ramp_T: int = 10, noise_sd: float = 0.1):
        super().__init__(w_max, ramp_T, noise_sd)
        self.ema_decay = ema_decay

    def unsupervised(self, student, teacher, X_l, X_u, noise):
        X = np.vstack([X_l, X_u])
        student_pass = mlp_forward(student, X, True, self.noise_sd, noise)
        teacher_pass = mlp_forward(teacher, X, True, self.noise_sd, noise)
        target = softmax(teacher_pass.output, axis=1)
        probs = softmax(student_pass.output, axis=1)
        diff = probs - target
        g = 2.0 * diff / diff.size
        d_out = probs * (g - np.sum(g * probs, axis=1, keepdims=True))
        return float(np.mean(diff ** 2)), student.backward(student_pass, d_out)

    def ema_coefficient(self, step: int) -> float:
        return min(self.ema_decay, 1.0 - 1.0 / (step + 1))


def ema_update(teacher: MlpNetwork, student: MlpNetwork, a: float) -> None:
    """teacher <- a * teacher + (1 - a) * student."""
    teacher.set_parameters([a * t + (1.0 - a) * s for t, s in zip(teacher.parameters(), student.parameters())])
