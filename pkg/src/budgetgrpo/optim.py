"""Ascent-direction optimizers over a flat parameter vector."""

from __future__ import annotations

import numpy as np


class GradientAscent:
    """Plain fixed-step ascent: ``theta + lr * grad``."""

    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def update(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return theta + self.learning_rate * grad


class Adam:
    """Adam applied to ascent; per-coordinate scaling lets rarely active features keep pace."""

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = None
        self.v = None
        self.t = 0

    def update(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return theta + self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


OPTIMIZERS = {"sgd": GradientAscent, "adam": Adam}


def make_optimizer(name: str, learning_rate: float):
    return OPTIMIZERS[name](learning_rate)
