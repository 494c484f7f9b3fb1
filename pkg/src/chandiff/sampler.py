"""Deterministic m-step reverse sampler.

Starting from the equalized observation as the step-m state, each step
predicts the injected noise, reconstructs the clean-block estimate, and
re-projects to the previous step with the same predicted noise; the final
step emits the reconstruction directly. No fresh noise enters the
recursion, so the output is a deterministic function of the observation,
the channel moduli, and the model. With a noise predictor that returns the
true driving noise, the recursion inverts the forward corruption exactly.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .denoiser import DenoiserParameters, predict_epsilon
from .equalizer import EqualizedObservation
from .schedule import DiffusionSchedule

#: A noise predictor: (x_t, h_r, t) -> predicted unit noise, same shape as x_t.
NoisePredictor = Callable[[np.ndarray, np.ndarray, int], np.ndarray]


def as_predictor(model) -> NoisePredictor:
    """Accept either trained parameters or a bare callable."""
    if isinstance(model, DenoiserParameters):
        return lambda x, h_r, t: predict_epsilon(model, x, h_r, t)
    if callable(model):
        return model
    raise TypeError(f"cannot use {type(model).__name__} as a noise predictor")


def estimate_x0(
    x_t: np.ndarray,
    eps_hat: np.ndarray,
    w_n_diag: np.ndarray,
    t: int,
    schedule: DiffusionSchedule,
) -> np.ndarray:
    """Invert the forward corruption using the predicted noise."""
    ab = float(schedule.alpha_bar_at(t))
    return (x_t - np.sqrt(1.0 - ab) * w_n_diag * eps_hat) / np.sqrt(ab)


def sample_step(
    x_t: np.ndarray,
    eps_hat: np.ndarray,
    w_n_diag: np.ndarray,
    t: int,
    schedule: DiffusionSchedule,
) -> np.ndarray:
    """One reverse step t -> t-1 (t >= 2): re-project the clean estimate."""
    if t < 2:
        raise ValueError(f"sample_step needs t >= 2, got {t} (the last step is separate)")
    ab_prev = float(schedule.alpha_bar_before(t))
    x0_hat = estimate_x0(x_t, eps_hat, w_n_diag, t, schedule)
    return np.sqrt(ab_prev) * x0_hat + np.sqrt(1.0 - ab_prev) * w_n_diag * eps_hat


def sample_from_state(
    x_m: np.ndarray,
    w_n_diag: np.ndarray,
    h_r: np.ndarray,
    model,
    m: int,
    schedule: DiffusionSchedule,
) -> np.ndarray:
    """Run the m-step reverse recursion from an arbitrary step-m state.

    Makes exactly m noise-predictor evaluations. Rows of a batched ``x_m``
    are denoised independently.
    """
    if not 1 <= m <= schedule.t_max:
        raise ValueError(f"m must be in [1, t_max={schedule.t_max}], got {m}")
    predictor = as_predictor(model)
    x = np.asarray(x_m, dtype=np.float64)
    for t in range(m, 1, -1):
        x = sample_step(x, predictor(x, h_r, t), w_n_diag, t, schedule)
    return estimate_x0(x, predictor(x, h_r, 1), w_n_diag, 1, schedule)


def sample(
    y_r: EqualizedObservation,
    model,
    m: int,
    schedule: DiffusionSchedule,
) -> np.ndarray:
    """Denoise an equalized observation: treat it as the step-m state."""
    ch = y_r.channel
    return sample_from_state(y_r.y_r, ch.w_n_diag, ch.h_r, model, m, schedule)
