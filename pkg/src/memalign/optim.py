"""From-scratch AdamW with linear warmup and cosine annealing."""
from __future__ import annotations

import math

import numpy as np


def lr_at_step(
    step: int, total_steps: int, base_lr: float, warmup_ratio: float
) -> float:
    """Linear warmup over ``warmup_ratio`` of total steps, then cosine decay to 0.

    ``step`` is 0-based.
    """
    if total_steps <= 0:
        return base_lr
    warmup_steps = int(round(warmup_ratio * total_steps))
    if warmup_steps > 0 and step < warmup_steps:
        return base_lr * (step + 1) / warmup_steps
    span = max(total_steps - warmup_steps, 1)
    progress = min((step - warmup_steps) / span, 1.0)
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))


class AdamW:
    """Decoupled weight decay Adam over a dict of named numpy parameters.

    Parameters are updated in place; iteration order is the sorted
    parameter name, so updates are deterministic.
    """

    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.0,
        total_steps: int = 0,
        warmup_ratio: float = 0.0,
    ):
        self.params = params
        self.base_lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.total_steps = total_steps
        self.warmup_ratio = warmup_ratio
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def current_lr(self) -> float:
        return lr_at_step(self.t, self.total_steps, self.base_lr, self.warmup_ratio)

    def step(self, grads: dict[str, np.ndarray]) -> None:
        lr = self.current_lr()
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name in sorted(self.params):
            p = self.params[name]
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p -= lr * (update + self.weight_decay * p)
