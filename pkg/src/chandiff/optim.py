"""Adaptive-moment optimizer with a warm-up-then-cosine learning rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .denoiser import DenoiserParameters


@dataclass(frozen=True)
class LearningRateSchedule:
    """Linear warm-up to ``base``, then cosine decay toward ``base * floor_fraction``."""

    base: float = 1e-4
    warmup_steps: int = 500
    total_steps: int = 20000
    floor_fraction: float = 0.0

    def __post_init__(self):
        if self.base <= 0 or self.warmup_steps < 1 or self.total_steps < 1:
            raise ValueError(f"invalid learning-rate schedule: {self}")
        if not 0.0 <= self.floor_fraction <= 1.0:
            raise ValueError("floor_fraction must be in [0, 1]")

    def at(self, step: int) -> float:
        if step < 1:
            raise ValueError(f"step must be >= 1, got {step}")
        if step <= self.warmup_steps:
            return self.base * step / self.warmup_steps
        span = max(self.total_steps - self.warmup_steps, 1)
        progress = min((step - self.warmup_steps) / span, 1.0)
        floor = self.base * self.floor_fraction
        return floor + (self.base - floor) * 0.5 * (1.0 + np.cos(np.pi * progress))


def optimizer_step(
    params: DenoiserParameters,
    grads: dict[str, np.ndarray],
    lr_schedule: LearningRateSchedule,
    step: int | None = None,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> DenoiserParameters:
    """One bias-corrected adaptive-moment update, in place.

    ``step`` defaults to the parameter object's own counter + 1. Non-finite
    gradients abort before any state is touched.
    """
    for key, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient in {key!r}; aborting update")
    step = params.opt_step + 1 if step is None else step
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    lr = lr_schedule.at(step)
    c1 = 1.0 - beta1**step
    c2 = 1.0 - beta2**step
    for key, g in grads.items():
        m = params.opt_m[key]
        v = params.opt_v[key]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g**2
        params.weights[key] -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    params.opt_step = step
    return params
