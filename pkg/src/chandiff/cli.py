"""Command-line interface.

Subcommands: ``train``, ``sample``, ``mse-bench``, ``entropy-report``,
``inspect-checkpoint``. Each run writes its outputs under ``--out`` with the
run id as filename prefix, next to a manifest carrying the fully resolved
config and seed. Exit codes: 0 success, 2 usage error, 3 malformed config,
4 checkpoint problem, 5 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .bench import (
    ensure_new_output,
    run_entropy_experiment,
    run_mse_experiment,
    sample_blocks_csv,
    write_metrics_csv,
)
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, ExperimentConfig, load_config, parse_float_list
from .denoiser import NetworkSpec
from .optim import LearningRateSchedule
from .rng import stream
from .schedule import build_schedule
from .sources import make_source
from .training import train, write_loss_trace

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_CHECKPOINT = 4
EXIT_RUNTIME = 5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chandiff",
        description="Diffusion-based channel denoising: training, sampling, and benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, checkpoint: bool = False):
        p.add_argument("--config", type=Path, default=None, help="INI config file")
        p.add_argument("--out", type=Path, default=Path("runs"), help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--run-id", default=None)
        p.add_argument("--channel", choices=("awgn", "rayleigh"), default=None)
        p.add_argument("--snr-db", default=None, help="comma-separated SNR list in dB")
        p.add_argument("--sigma-h", default=None, help="comma-separated estimation-error levels")
        p.add_argument("--k", type=int, default=None, help="channel uses per block")
        p.add_argument("--source", default=None, help="source kind")
        p.add_argument("--m-mode", choices=("kl-zero", "literal-eq20"), default=None)
        p.add_argument("--t-max", type=int, default=None)
        p.add_argument("--no-figures", action="store_true")
        if checkpoint:
            p.add_argument("--checkpoint", type=Path, required=False, default=None)

    p_train = sub.add_parser("train", help="train a denoiser and write a checkpoint")
    common(p_train)
    p_train.add_argument("--steps", type=int, default=None, help="optimizer steps")

    p_sample = sub.add_parser("sample", help="denoise simulated blocks at one SNR")
    common(p_sample, checkpoint=True)
    p_sample.add_argument("--blocks", type=int, default=None)

    p_bench = sub.add_parser("mse-bench", help="paired MSE sweep over the SNR grid")
    common(p_bench, checkpoint=True)
    p_bench.add_argument("--blocks", type=int, default=None)

    p_entropy = sub.add_parser("entropy-report", help="Monte-Carlo entropy-condition report")
    common(p_entropy, checkpoint=True)

    p_inspect = sub.add_parser("inspect-checkpoint", help="print checkpoint metadata")
    p_inspect.add_argument("checkpoint", type=Path)
    return parser


def _resolve_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> ExperimentConfig:
    if args.config is not None and not Path(args.config).is_file():
        parser.error(f"config file not found: {args.config}")
    cfg = load_config(args.config)
    overrides = {
        "seed": args.seed,
        "run_id": args.run_id,
        "channel_mode": args.channel,
        "k": args.k,
        "source_kind": args.source,
        "m_mode": args.m_mode,
        "t_max": args.t_max,
    }
    if getattr(args, "steps", None) is not None:
        overrides["train_steps"] = args.steps
    if getattr(args, "blocks", None) is not None:
        overrides["eval_blocks"] = args.blocks
    for name, value in overrides.items():
        if value is not None:
            setattr(cfg, name, value)
    if args.snr_db is not None:
        cfg.snr_db = parse_float_list(args.snr_db)
    if args.sigma_h is not None:
        cfg.sigma_h = parse_float_list(args.sigma_h)
    if args.no_figures:
        cfg.figures = False
    return cfg.validate()


def _schedule_from(cfg: ExperimentConfig):
    return build_schedule(cfg.schedule_steps, cfg.alpha_first, cfg.alpha_last, cfg.t_max)


def _out_path(cfg: ExperimentConfig, out_dir: Path, suffix: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    return ensure_new_output(out_dir / f"{cfg.run_id}.{suffix}")


def _load_model(args, cfg: ExperimentConfig, parser):
    if args.checkpoint is None:
        raise CheckpointError(
            "no checkpoint given: pass --checkpoint or train one first "
            "(set [training] auto_train = true to train in-line)"
        )
    if not Path(args.checkpoint).is_file():
        raise CheckpointError(f"checkpoint not found: {args.checkpoint}")
    return load_checkpoint(args.checkpoint)


def _train(cfg: ExperimentConfig, out_dir: Path) -> Path:
    schedule = _schedule_from(cfg)
    source = make_source(cfg.source_kind, cfg.k, cfg.corpus or None)
    rng = stream(cfg.seed, 0)
    spec = NetworkSpec(k=cfg.k, hidden=cfg.hidden, blocks=cfg.blocks, embed_dim=cfg.embed_dim)
    lr = LearningRateSchedule(
        base=cfg.base_lr, warmup_steps=cfg.warmup_steps, total_steps=cfg.train_steps
    )
    ckpt_path = _out_path(cfg, out_dir, "ckpt")
    trace_path = _out_path(cfg, out_dir, "loss.csv")
    run = train(
        source, schedule, cfg.channel_mode, cfg.train_steps, cfg.batch, rng,
        network=spec, lr_schedule=lr, failure_checkpoint=ckpt_path,
        config_hash=cfg.config_hash(),
    )
    save_checkpoint(ckpt_path, run.params, schedule, cfg.channel_mode,
                    rng=run.rng, config_hash=cfg.config_hash())
    write_loss_trace(trace_path, run.trace)
    cfg.write_manifest(_out_path(cfg, out_dir, "train-manifest.txt"))
    if cfg.figures:
        from .figures import plot_loss_trace

        plot_loss_trace(run.trace, _out_path(cfg, out_dir, "loss.png"))
    print(f"trained {cfg.train_steps} steps; final loss {run.final_loss():.6g}")
    print(f"checkpoint: {ckpt_path}")
    return ckpt_path


def _cmd_train(args, parser) -> int:
    cfg = _resolve_config(args, parser)
    _train(cfg, args.out)
    return EXIT_OK


def _cmd_sample(args, parser) -> int:
    cfg = _resolve_config(args, parser)
    ckpt = _load_model(args, cfg, parser)
    out = _out_path(cfg, args.out, "samples.csv")
    blocks = args.blocks if args.blocks is not None else cfg.eval_blocks
    mse_without, mse_with, m = sample_blocks_csv(
        out, cfg, ckpt.params, ckpt.schedule, cfg.snr_db[0], blocks
    )
    cfg.write_manifest(_out_path(cfg, args.out, "sample-manifest.txt"))
    print(f"m={m}  mean MSE without denoising: {mse_without:.6g}  with: {mse_with:.6g}")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_mse_bench(args, parser) -> int:
    cfg = _resolve_config(args, parser)
    if args.checkpoint is None and cfg.auto_train:
        args.checkpoint = _train(cfg, args.out)
    ckpt = _load_model(args, cfg, parser)
    records = run_mse_experiment(cfg, ckpt.params, ckpt.schedule)
    out = _out_path(cfg, args.out, "metrics.csv")
    write_metrics_csv(out, records)
    manifest = _out_path(cfg, args.out, "bench-manifest.txt")
    cfg.write_manifest(manifest)
    with open(manifest, "a") as fh:
        for rec in records:
            fh.write(
                f"wall_time[snr={rec.snr_db:g},sigma_h={rec.sigma_h:g}] = {rec.wall_time:.3f}\n"
            )
    if cfg.figures:
        from .figures import plot_mse_vs_snr

        plot_mse_vs_snr(records, _out_path(cfg, args.out, "mse.png"))
    for rec in records:
        gain = 10 * (np.log10(rec.mse_without) - np.log10(rec.mse_with))
        print(
            f"snr={rec.snr_db:g} dB sigma_h={rec.sigma_h:g}: m={rec.m} "
            f"mse {rec.mse_without:.5g} -> {rec.mse_with:.5g} (gain {gain:+.2f} dB)"
        )
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_entropy_report(args, parser) -> int:
    cfg = _resolve_config(args, parser)
    ckpt = _load_model(args, cfg, parser)
    report, recommendation = run_entropy_experiment(cfg, ckpt.params, ckpt.schedule)
    out = _out_path(cfg, args.out, "entropy.csv")
    report.write_csv(out)
    manifest = _out_path(cfg, args.out, "entropy-manifest.txt")
    cfg.write_manifest(manifest)
    with open(manifest, "a") as fh:
        fh.write(f"recommended_t_max = {recommendation}\n")
        fh.write(f"tau_percentile = {report.tau_percentile}\n")
    if cfg.figures:
        from .figures import plot_entropy_report

        plot_entropy_report(
            report,
            _out_path(cfg, args.out, "entropy-moments.png"),
            _out_path(cfg, args.out, "entropy-margin.png"),
            recommendation,
        )
    print(f"recommended t_max: {recommendation}")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_inspect(args, parser) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    spec = ckpt.params.spec
    n_weights = int(sum(w.size for w in ckpt.params.weights.values()))
    print(f"checkpoint: {args.checkpoint}")
    print(f"network: k={spec.k} hidden={spec.hidden} blocks={spec.blocks} "
          f"embed_dim={spec.embed_dim} ({n_weights} parameters)")
    print(f"schedule: T={ckpt.schedule.T} t_max={ckpt.schedule.t_max} "
          f"alpha[1]={ckpt.schedule.alpha[0]:.6g} alpha[T]={ckpt.schedule.alpha[-1]:.6g}")
    print(f"channel mode: {ckpt.channel_mode}")
    print(f"optimizer steps: {ckpt.params.opt_step}")
    print(f"config hash: {ckpt.config_hash or '(none)'}")
    print(f"resumable stream state: {'yes' if ckpt.rng is not None else 'no'}")
    return EXIT_OK


_COMMANDS = {
    "train": _cmd_train,
    "sample": _cmd_sample,
    "mse-bench": _cmd_mse_bench,
    "entropy-report": _cmd_entropy_report,
    "inspect-checkpoint": _cmd_inspect,
}


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, parser)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except (ValueError, FloatingPointError, FileExistsError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:  # console-script entry point
    sys.exit(cli_main())
