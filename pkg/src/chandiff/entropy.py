"""Monte-Carlo diagnostics for the entropy-reduction condition.

For each step t the report estimates the noise predictor's first and second
moments over source/channel/noise draws, an empirical element-wise loss
bound tau_hat (an upper quantile, since the true supremum is noise-dominated
in Monte Carlo), the threshold curve f_tau that the second moment must
exceed for the reverse step to lower the per-coordinate entropy bound, and
the margin between the step-t conditional entropy and the Gaussian
upper bound u_tau on the step-(t-1) entropy. Entropies use the additive
constant C = ln(2*pi*e)/2, so a unit-variance Gaussian coordinate has
entropy ln(2*pi*e)/2; only differences and orderings are consumed anywhere.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .sampler import as_predictor
from .schedule import DiffusionSchedule, forward_diffuse, step_coefficients
from .training import draw_training_batch

ENTROPY_CONST = 0.5 * np.log(2.0 * np.pi * np.e)


def f_tau(t: int, tau: float, schedule: DiffusionSchedule) -> float:
    """Second-moment threshold for the step-t entropy bound to decrease.

    Defined for t >= 2; at t = 1 the previous-step spread is zero and the
    threshold degenerates.
    """
    if t < 2:
        raise ValueError(f"f_tau needs t >= 2, got {t}")
    beta, _, gamma_prev = step_coefficients(t, schedule)
    denom = gamma_prev**2 - beta * gamma_prev
    one_minus_ab = 1.0 - float(schedule.alpha_bar_at(t))
    return (one_minus_ab - beta * gamma_prev) / denom - (beta**2 - beta * gamma_prev) / denom * tau


def u_tau(
    t: int, tau: float, mean_eps_sq: float, w_n_i: float, schedule: DiffusionSchedule
) -> float:
    """Gaussian upper bound on the step-(t-1) per-coordinate entropy."""
    if t < 2:
        raise ValueError(f"u_tau needs t >= 2, got {t}")
    beta, _, gamma_prev = step_coefficients(t, schedule)
    bg = beta * gamma_prev
    arg = w_n_i**2 * ((gamma_prev**2 - bg) * mean_eps_sq + bg + (beta**2 - bg) * tau)
    if arg <= 0.0:
        raise ValueError(
            f"entropy bound undefined at t={t}: log argument {arg} <= 0 "
            "(second moment exceeds what the loss bound permits)"
        )
    return 0.5 * np.log(arg) + ENTROPY_CONST


def conditional_entropy_step(t: int, w_n_i: float, schedule: DiffusionSchedule) -> float:
    """Per-coordinate conditional entropy of the step-t state given block and gains."""
    if w_n_i <= 0.0:
        raise ValueError(f"w_n_i must be > 0, got {w_n_i} (degenerate coordinate)")
    one_minus_ab = 1.0 - float(schedule.alpha_bar_at(t))
    return 0.5 * np.log(w_n_i**2 * one_minus_ab) + ENTROPY_CONST


@dataclass
class MCMoments:
    """Monte-Carlo noise-predictor moments at one step."""

    mean_eps: float
    mean_eps_sq: float
    tau_hat: float
    mean_eps_per_coord: np.ndarray
    mean_w_n: float
    n: int


def mc_moments(
    model,
    source,
    schedule: DiffusionSchedule,
    t: int,
    n: int,
    rng: np.random.Generator,
    channel_mode: str = "awgn",
    tau_percentile: float = 95.0,
) -> MCMoments:
    """Estimate predictor moments at step t over n fresh draws.

    Channel weights are drawn exactly as in training (identity under AWGN,
    step-matched noise level under Rayleigh). ``tau_hat`` is the given upper
    percentile of the element-wise squared prediction error.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    predictor = as_predictor(model)
    batch = draw_training_batch(source, schedule, channel_mode, n, rng, fixed_t=t)
    x_t = forward_diffuse(batch.x0, batch.t, batch.w_n, batch.eps, schedule)
    pred = predictor(x_t, batch.h_r, batch.t)
    sq_err = (batch.eps - pred) ** 2
    return MCMoments(
        mean_eps=float(np.mean(pred)),
        mean_eps_sq=float(np.mean(pred**2)),
        tau_hat=float(np.percentile(sq_err, tau_percentile)),
        mean_eps_per_coord=pred.mean(axis=0),
        mean_w_n=float(np.mean(batch.w_n)),
        n=n,
    )


@dataclass
class MonteCarloReport:
    """Per-step moment estimates and entropy-bound curves on one step grid."""

    steps: np.ndarray
    mean_eps: np.ndarray
    mean_eps_sq: np.ndarray
    tau_hat: np.ndarray
    f_tau: np.ndarray
    entropy: np.ndarray
    u_tau: np.ndarray
    entropy_margin: np.ndarray
    samples_per_step: int
    sigma: float
    channel_mode: str
    w_n_i: float
    tau_percentile: float

    def __post_init__(self):
        lengths = {
            len(self.steps), len(self.mean_eps), len(self.mean_eps_sq),
            len(self.tau_hat), len(self.f_tau), len(self.entropy),
            len(self.u_tau), len(self.entropy_margin),
        }
        if len(lengths) != 1:
            raise ValueError("report arrays are not aligned on one step grid")
        if np.any(self.mean_eps_sq + 1e-12 < self.mean_eps**2):
            raise ValueError("second moment below squared mean; estimator is broken")

    CSV_COLUMNS = ("t", "mean_eps", "mean_eps_sq", "tau_hat", "f_tau", "H", "u_tau", "margin")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.CSV_COLUMNS)
            for i, t in enumerate(self.steps):
                writer.writerow(
                    [int(t)]
                    + [f"{v:.10g}" for v in (
                        self.mean_eps[i], self.mean_eps_sq[i], self.tau_hat[i],
                        self.f_tau[i], self.entropy[i], self.u_tau[i],
                        self.entropy_margin[i],
                    )]
                )


def _coefficients(schedule: DiffusionSchedule, steps: np.ndarray):
    """Vectorized beta/gamma arrays; second evaluation path next to
    :func:`step_coefficients`."""
    ab = schedule.alpha_bar_at(steps)
    ab_prev = schedule.alpha_bar_before(steps)
    gamma_prev = np.sqrt(1.0 - ab_prev)
    beta = np.sqrt(1.0 - ab) / np.sqrt(schedule.alpha_at(steps))
    return ab, beta, gamma_prev


def build_report(
    model,
    source,
    schedule: DiffusionSchedule,
    steps: np.ndarray | list[int],
    n: int,
    rng: np.random.Generator,
    channel_mode: str = "awgn",
    sigma: float = 0.0,
    tau_percentile: float = 95.0,
) -> MonteCarloReport:
    """Monte-Carlo report over a step grid (all steps must be >= 2)."""
    steps = np.asarray(sorted(int(t) for t in steps))
    if steps.size == 0 or steps[0] < 2:
        raise ValueError("step grid must be nonempty with every t >= 2")
    mean_eps = np.empty(steps.size)
    mean_eps_sq = np.empty(steps.size)
    tau_hat = np.empty(steps.size)
    w_n_means = np.empty(steps.size)
    for i, t in enumerate(steps):
        mom = mc_moments(model, source, schedule, int(t), n, rng, channel_mode, tau_percentile)
        mean_eps[i] = mom.mean_eps
        mean_eps_sq[i] = mom.mean_eps_sq
        tau_hat[i] = mom.tau_hat
        w_n_means[i] = mom.mean_w_n
    w_n_i = 1.0 if channel_mode == "awgn" else float(np.mean(w_n_means))
    ab, beta, gamma_prev = _coefficients(schedule, steps)
    bg = beta * gamma_prev
    denom = gamma_prev**2 - bg
    f_curve = ((1.0 - ab) - bg) / denom - (beta**2 - bg) / denom * tau_hat
    u_arg = w_n_i**2 * (denom * mean_eps_sq + bg + (beta**2 - bg) * tau_hat)
    if np.any(u_arg <= 0.0):
        bad = steps[u_arg <= 0.0]
        raise ValueError(f"entropy bound undefined at steps {bad.tolist()}: log argument <= 0")
    u_curve = 0.5 * np.log(u_arg) + ENTROPY_CONST
    h_curve = 0.5 * np.log(w_n_i**2 * (1.0 - ab)) + ENTROPY_CONST
    return MonteCarloReport(
        steps=steps,
        mean_eps=mean_eps,
        mean_eps_sq=mean_eps_sq,
        tau_hat=tau_hat,
        f_tau=f_curve,
        entropy=h_curve,
        u_tau=u_curve,
        entropy_margin=h_curve - u_curve,
        samples_per_step=n,
        sigma=sigma,
        channel_mode=channel_mode,
        w_n_i=w_n_i,
        tau_percentile=tau_percentile,
    )


def recommend_tmax(
    report: MonteCarloReport,
    window: tuple[int, int] = (10, 150),
    slope_fraction: float = 0.01,
) -> int:
    """Largest useful sampling step within the window, clamped to [10, 150].

    A step qualifies when the estimated second moment clears the f_tau
    threshold and the margin curve still moves (local slope at least
    ``slope_fraction`` of the initial slope). If nothing qualifies, the
    window minimum is returned with a warning.
    """
    lo, hi = int(window[0]), int(window[1])
    if lo > hi:
        raise ValueError(f"empty window {window}")
    steps = report.steps
    if steps.size < 2:
        raise ValueError("report too short to estimate slopes")
    slopes = np.diff(report.entropy_margin) / np.diff(steps)
    slopes = np.append(slopes, slopes[-1])  # last grid point reuses the final slope
    initial = abs(slopes[0])
    in_window = (steps >= lo) & (steps <= hi)
    qualifies = in_window & (report.mean_eps_sq >= report.f_tau) & (
        np.abs(slopes) >= slope_fraction * initial
    )
    if not np.any(qualifies):
        warnings.warn(
            "entropy-reduction condition holds nowhere in the window; "
            f"falling back to t_max = {lo}"
        )
        return lo
    best = int(steps[qualifies].max())
    return min(max(best, 10), 150)
