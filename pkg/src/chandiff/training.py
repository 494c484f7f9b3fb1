"""Denoiser training loop over random blocks, steps, and channel draws.

Each iteration draws a minibatch of source blocks, a uniform step index per
block, fresh fading moduli (Rayleigh mode) and unit noise, then descends the
noise-prediction objective on the diffused states. The loop never reads an
evaluation noise level: under Rayleigh fading the weight diagonals are
formed with the noise level implied by the drawn step itself,
sigma_t^2 = (1 - alpha_bar_t)/alpha_bar_t, so a single training run covers
the whole SNR range spanned by the schedule.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import sample_rayleigh_channel
from .denoiser import Batch, DenoiserParameters, NetworkSpec, init_params, loss_and_gradients
from .optim import LearningRateSchedule, optimizer_step
from .schedule import DiffusionSchedule

CHANNEL_MODES = ("awgn", "rayleigh")


def draw_training_batch(
    source,
    schedule: DiffusionSchedule,
    channel_mode: str,
    batch: int,
    rng: np.random.Generator,
    fixed_t: int | None = None,
) -> Batch:
    """One minibatch: blocks, steps, channel weights, and unit noise.

    Rayleigh mode draws fresh gains independently of the blocks and derives
    the weight diagonals from each row's own step index (see module note);
    AWGN mode uses identity weights throughout. ``fixed_t`` pins every row
    to one step (used by the Monte-Carlo diagnostics).
    """
    if channel_mode not in CHANNEL_MODES:
        raise ValueError(f"channel_mode must be one of {CHANNEL_MODES}, got {channel_mode!r}")
    x = source.sample_batch(rng, batch)
    d = x.shape[-1]
    if fixed_t is None:
        t = rng.integers(1, schedule.T + 1, size=batch)
    else:
        t = np.full(batch, int(fixed_t))
    if channel_mode == "awgn":
        ones = np.ones((batch, d))
        h_r, w_s, w_n = ones, ones, ones
    else:
        h_c = sample_rayleigh_channel(batch * (d // 2), rng).reshape(batch, d // 2)
        mod = np.abs(h_c)
        h_r = np.concatenate([mod, mod], axis=-1)
        sigma_sq = (1.0 - schedule.alpha_bar_at(t)) / schedule.alpha_bar_at(t)
        denom = h_r**2 + 2.0 * sigma_sq[:, None]
        w_s = h_r**2 / denom
        w_n = h_r / denom
    eps = rng.standard_normal((batch, d))
    return Batch(x0=w_s * x, w_n=w_n, h_r=h_r, t=t, eps=eps)


@dataclass
class TrainingRun:
    """Final parameters plus the (step, loss, learning_rate) trace."""

    params: DenoiserParameters
    trace: np.ndarray
    rng: np.random.Generator
    config_hash: str = ""
    channel_mode: str = "awgn"
    schedule: DiffusionSchedule | None = None

    def final_loss(self) -> float:
        return float(self.trace[-1, 1]) if len(self.trace) else float("nan")


def write_loss_trace(path: str | Path, trace: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "loss", "learning_rate"])
        for step, loss, lr in trace:
            writer.writerow([int(step), f"{loss:.10g}", f"{lr:.10g}"])


def train(
    source,
    schedule: DiffusionSchedule,
    channel_mode: str,
    steps: int,
    batch: int,
    rng: np.random.Generator,
    params: DenoiserParameters | None = None,
    network: NetworkSpec | None = None,
    lr_schedule: LearningRateSchedule | None = None,
    weighted: bool = False,
    failure_checkpoint: str | Path | None = None,
    config_hash: str = "",
) -> TrainingRun:
    """Run ``steps`` optimizer iterations and return parameters plus trace.

    Pass ``params`` to continue a previous run (its optimizer state and step
    counter carry over). A non-finite loss aborts; if ``failure_checkpoint``
    is set, the last finite state is saved there before raising.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    if batch < 1:
        raise ValueError(f"batch must be >= 1, got {batch}")
    if params is None:
        if network is None:
            raise ValueError("need either params or a network spec")
        params = init_params(network, rng)
    if lr_schedule is None:
        lr_schedule = LearningRateSchedule(total_steps=max(params.opt_step + steps, 1))
    trace = np.empty((steps, 3))
    last_good = params.copy()
    for i in range(steps):
        minibatch = draw_training_batch(source, schedule, channel_mode, batch, rng)
        loss, grads = loss_and_gradients(params, minibatch, schedule, weighted=weighted)
        if not np.isfinite(loss):
            if failure_checkpoint is not None:
                from .checkpoint import save_checkpoint

                save_checkpoint(failure_checkpoint, last_good, schedule, channel_mode,
                                rng=None, config_hash=config_hash)
            raise FloatingPointError(
                f"non-finite loss {loss} at step {params.opt_step + 1}; aborted"
            )
        last_good = params.copy()
        optimizer_step(params, grads, lr_schedule)
        trace[i] = (params.opt_step, loss, lr_schedule.at(params.opt_step))
    return TrainingRun(params, trace, rng, config_hash, channel_mode, schedule)
