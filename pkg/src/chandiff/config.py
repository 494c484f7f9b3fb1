"""Experiment configuration: INI-style files, flag overrides, manifests.

A config file uses the sections below (all keys optional; defaults shown by
``ExperimentConfig``). Flag overrides from the CLI take precedence over the
file. The fully resolved key/value list is written next to every output as
a manifest, and its hash identifies the run: any output row is reproducible
from its manifest alone.

    [experiment]  seed, run_id
    [channel]     mode, snr_db, sigma_h, k
    [source]      kind, corpus
    [schedule]    steps, alpha_first, alpha_last, t_max, m_mode
    [training]    steps, batch, hidden, blocks, embed_dim, base_lr,
                  warmup_steps, auto_train
    [eval]        blocks, entropy_samples, entropy_max_step, entropy_stride,
                  window_lo, window_hi
    [output]      figures

SNR convention (recorded in every manifest): SNR_dB = 10*log10(1/(2*sigma^2))
for unit-power blocks; the complex per-symbol noise variance is 2*sigma^2.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, fields
from pathlib import Path

from .channel import snr_db_to_sigma
from .schedule import M_MODES
from .sources import SOURCE_KINDS
from .training import CHANNEL_MODES

SNR_CONVENTION = "snr_db = 10*log10(1/(2*sigma^2)); complex noise variance 2*sigma^2"


class ConfigError(Exception):
    """Malformed configuration file or invalid option value."""


@dataclass
class ExperimentConfig:
    seed: int = 0
    run_id: str = ""
    channel_mode: str = "awgn"
    snr_db: list[float] = field(default_factory=lambda: [5.0, 10.0, 20.0])
    sigma_h: list[float] = field(default_factory=lambda: [0.0])
    k: int = 32
    source_kind: str = "gaussian_mixture"
    corpus: str = ""
    schedule_steps: int = 1000
    alpha_first: float = 0.9999
    alpha_last: float = 0.9800
    t_max: int = 93
    m_mode: str = "kl-zero"
    train_steps: int = 4000
    batch: int = 64
    hidden: int = 128
    blocks: int = 2
    embed_dim: int = 64
    base_lr: float = 1e-3
    warmup_steps: int = 200
    auto_train: bool = False
    eval_blocks: int = 2000
    entropy_samples: int = 2000
    entropy_max_step: int = 160
    entropy_stride: int = 2
    window_lo: int = 10
    window_hi: int = 150
    figures: bool = True

    def validate(self) -> "ExperimentConfig":
        if self.channel_mode not in CHANNEL_MODES:
            raise ConfigError(f"channel mode must be one of {CHANNEL_MODES}: {self.channel_mode!r}")
        if self.source_kind not in SOURCE_KINDS:
            raise ConfigError(f"source kind must be one of {SOURCE_KINDS}: {self.source_kind!r}")
        if self.m_mode not in M_MODES:
            raise ConfigError(f"m mode must be one of {M_MODES}: {self.m_mode!r}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not self.snr_db:
            raise ConfigError("snr_db list is empty")
        for s in self.snr_db:
            if not (snr_db_to_sigma(s) > 0.0):
                raise ConfigError(f"snr_db {s} does not map to a positive noise level")
        for s in self.sigma_h:
            if s < 0:
                raise ConfigError(f"sigma_h must be >= 0, got {s}")
        if not (1 <= self.t_max <= self.schedule_steps):
            raise ConfigError(f"t_max must be in [1, {self.schedule_steps}], got {self.t_max}")
        if self.source_kind == "file_corpus" and not self.corpus:
            raise ConfigError("file_corpus source needs [source] corpus = <path>")
        if not self.run_id:
            self.run_id = self.config_hash()[:12]
        return self

    def resolved(self) -> list[tuple[str, str]]:
        """Flat, ordered key/value view of every field (manifest content)."""
        out: list[tuple[str, str]] = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = ",".join(f"{x:g}" for x in v)
            out.append((f.name, str(v)))
        out.append(("snr_convention", SNR_CONVENTION))
        return out

    def config_hash(self) -> str:
        text = "\n".join(f"{k} = {v}" for k, v in self.resolved() if k != "run_id")
        return hashlib.sha256(text.encode()).hexdigest()

    def write_manifest(self, path: str | Path) -> None:
        lines = [f"{k} = {v}" for k, v in self.resolved()]
        lines.append(f"config_hash = {self.config_hash()}")
        Path(path).write_text("\n".join(lines) + "\n")


_SECTION_MAP = {
    ("experiment", "seed"): ("seed", int),
    ("experiment", "run_id"): ("run_id", str),
    ("channel", "mode"): ("channel_mode", str),
    ("channel", "snr_db"): ("snr_db", "float_list"),
    ("channel", "sigma_h"): ("sigma_h", "float_list"),
    ("channel", "k"): ("k", int),
    ("source", "kind"): ("source_kind", str),
    ("source", "corpus"): ("corpus", str),
    ("schedule", "steps"): ("schedule_steps", int),
    ("schedule", "alpha_first"): ("alpha_first", float),
    ("schedule", "alpha_last"): ("alpha_last", float),
    ("schedule", "t_max"): ("t_max", int),
    ("schedule", "m_mode"): ("m_mode", str),
    ("training", "steps"): ("train_steps", int),
    ("training", "batch"): ("batch", int),
    ("training", "hidden"): ("hidden", int),
    ("training", "blocks"): ("blocks", int),
    ("training", "embed_dim"): ("embed_dim", int),
    ("training", "base_lr"): ("base_lr", float),
    ("training", "warmup_steps"): ("warmup_steps", int),
    ("training", "auto_train"): ("auto_train", "bool"),
    ("eval", "blocks"): ("eval_blocks", int),
    ("eval", "entropy_samples"): ("entropy_samples", int),
    ("eval", "entropy_max_step"): ("entropy_max_step", int),
    ("eval", "entropy_stride"): ("entropy_stride", int),
    ("eval", "window_lo"): ("window_lo", int),
    ("eval", "window_hi"): ("window_hi", int),
    ("output", "figures"): ("figures", "bool"),
}


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {text!r}: {exc}") from exc


def load_config(path: str | Path | None) -> ExperimentConfig:
    """Parse a config file (or return defaults when ``path`` is None)."""
    cfg = ExperimentConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise FileNotFoundError(f"config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    known_sections = {s for s, _ in _SECTION_MAP}
    for section in parser.sections():
        if section not in known_sections:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if (section, key) not in _SECTION_MAP:
                raise ConfigError(f"unknown option {key!r} in section [{section}]")
            name, kind = _SECTION_MAP[(section, key)]
            try:
                if kind == "float_list":
                    value = parse_float_list(raw)
                elif kind == "bool":
                    value = raw.strip().lower() in ("1", "true", "yes", "on")
                else:
                    value = kind(raw)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
            setattr(cfg, name, value)
    return cfg
