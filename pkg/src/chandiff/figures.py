"""Figure rendering for the report paths.

Each report command drops PNG figures next to its CSV: the training loss
trace, MSE-vs-SNR curves for both arms of the sweep, and the two
entropy-report views (predictor moments against the f_tau threshold, and
the entropy margin with the recommended step cap). Figures are a
convenience view; the CSVs stay the primary, deterministic record.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .bench import MetricsRecord  # noqa: E402
from .entropy import MonteCarloReport  # noqa: E402


def plot_loss_trace(trace, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(trace[:, 0], trace[:, 1], lw=0.8)
    ax.set_xlabel("step")
    ax.set_ylabel("batch loss")
    ax.set_yscale("log")
    ax.set_title("training loss")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_mse_vs_snr(records: list[MetricsRecord], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    by_sigma_h: dict[float, list[MetricsRecord]] = {}
    for rec in records:
        by_sigma_h.setdefault(rec.sigma_h, []).append(rec)
    for sigma_h, recs in sorted(by_sigma_h.items()):
        recs = sorted(recs, key=lambda r: r.snr_db)
        snrs = [r.snr_db for r in recs]
        suffix = f", sigma_h={sigma_h:g}" if sigma_h else ""
        ax.plot(snrs, [10 * np.log10(r.mse_without) for r in recs],
                marker="s", ls="--", label=f"equalizer only{suffix}")
        ax.plot(snrs, [10 * np.log10(r.mse_with) for r in recs],
                marker="o", label=f"denoised{suffix}")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("MSE (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    mode = records[0].channel_mode if records else "?"
    ax.set_title(f"MSE vs SNR ({mode})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_entropy_report(
    report: MonteCarloReport, moments_path: str | Path, margin_path: str | Path,
    recommendation: int | None = None,
) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(report.steps, report.mean_eps, label="E[eps_hat]", ls="--")
    ax.plot(report.steps, report.mean_eps_sq, label="E[eps_hat^2]")
    ax.plot(report.steps, report.f_tau, label="f_tau threshold", ls=":")
    ax.set_xlabel("step t")
    ax.grid(True, alpha=0.3)
    ax.legend()
    ax.set_title(f"predictor moments ({report.channel_mode}, n={report.samples_per_step})")
    fig.tight_layout()
    fig.savefig(moments_path, dpi=150)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(report.steps, report.entropy_margin)
    if recommendation is not None:
        ax.axvline(recommendation, color="red", ls="--", lw=1,
                   label=f"recommended t_max = {recommendation}")
        ax.legend()
    ax.set_xlabel("step t")
    ax.set_ylabel("entropy margin")
    ax.grid(True, alpha=0.3)
    ax.set_title("conditional-entropy margin")
    fig.tight_layout()
    fig.savefig(margin_path, dpi=150)
    plt.close(fig)
