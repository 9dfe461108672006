from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass
class OptimizerConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    batch_size: int = 64
    max_epochs: int = 30
    patience: int = 10

    def __post_init__(self):
        for name in ("learning_rate", "epsilon", "batch_size", "max_epochs", "patience"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("beta1", "beta2"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


class Adam:
    """Adam with bias-corrected moment estimates, updating parameters in place."""

    def __init__(self, params: dict[str, np.ndarray], cfg: OptimizerConfig):
        self.cfg = cfg
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        c = self.cfg
        self.t += 1
        corr1 = 1.0 - c.beta1 ** self.t
        corr2 = 1.0 - c.beta2 ** self.t
        for name, p in params.items():
            g = grads[name]
            m, v = self.m[name], self.v[name]
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * (g * g)
            step = (c.learning_rate / corr1) * m / (np.sqrt(v / corr2) + c.epsilon)
            p -= step.astype(p.dtype, copy=False)
