"""Adam updates over named numpy parameters."""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np


@dataclass
class Adam:
    learning_rate: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    steps: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        """Return updated copies of `params`; inputs are left untouched"""
        self.steps += 1
        correction1 = 1.0 - self.beta1 ** self.steps
        correction2 = 1.0 - self.beta2 ** self.steps
        updated = {}
        for name, value in params.items():
            grad = grads[name]
            m = self.first_moment.get(name, np.zeros_like(value))
            v = self.second_moment.get(name, np.zeros_like(value))
            m = self.beta1 * m + (1.0 - self.beta1) * grad
            v = self.beta2 * v + (1.0 - self.beta2) * grad * grad
            self.first_moment[name] = m
            self.second_moment[name] = v
            m_hat = m / correction1
            v_hat = v / correction2
            updated[name] = value - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
        return updated
