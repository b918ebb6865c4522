"""Adam optimizer over a ParamRegistry."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import numpy as np

from acdnet.exceptions import ContractError


class Adam:
    """Adam with bias correction and per-parameter moment state.

    Parameters without a gradient (or with an all-zero gradient) are left
    untouched and keep their moments and step count.
    """

    def __init__(self, params, lr=0.0015, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ContractError(f"lr must be > 0, got {lr}")
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.first_moment = {}
        self.second_moment = {}
        self.steps = {}

    def step(self):
        """Apply one update from the populated gradients, then zero them."""
        for name, tensor in self.params.items():
            gradient = tensor.grad
            if gradient is None or not np.any(gradient):
                continue
            if name not in self.first_moment:
                self.first_moment[name] = np.zeros_like(tensor.data)
                self.second_moment[name] = np.zeros_like(tensor.data)
                self.steps[name] = 0
            self.steps[name] += 1
            step = self.steps[name]
            self.first_moment[name] = self.beta1 * self.first_moment[name] + (1.0 - self.beta1) * gradient
            self.second_moment[name] = self.beta2 * self.second_moment[name] + (
                1.0 - self.beta2
            ) * (gradient * gradient)
            m_hat = self.first_moment[name] / (1.0 - self.beta1**step)
            v_hat = self.second_moment[name] / (1.0 - self.beta2**step)
            tensor.data = tensor.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        self.params.zero_grad()

    def state(self):
        """Return the optimizer state as name -> (m, v, step)."""
        return {
            name: (self.first_moment[name].copy(), self.second_moment[name].copy(), self.steps[name])
            for name in self.first_moment
        }

    def load_state(self, state):
        """Restore state produced by state()."""
        self.first_moment, self.second_moment, self.steps = {}, {}, {}
        for name, (first, second, step) in state.items():
            if name not in self.params:
                raise ContractError(f"optimizer state for unknown parameter {name}")
            self.first_moment[name] = np.array(first, dtype=np.float64)
            self.second_moment[name] = np.array(second, dtype=np.float64)
            self.steps[name] = int(step)
