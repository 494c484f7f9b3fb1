"""Versioned binary checkpoint container.

Layout: 8-byte magic, little-endian uint32 format version, uint64 JSON
header length, JSON header, then the raw little-endian float64 payload. The
header records the architecture descriptor, schedule endpoints and cap, the
channel mode, the training-config hash, the optimizer step counter, the
random-stream state (so a resumed run replays bit-exactly), and the payload
manifest (array name, shape) in storage order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .denoiser import DenoiserParameters, NetworkSpec, _layer_keys
from .schedule import DiffusionSchedule

MAGIC = b"CHDMODEL"
VERSION = 1


class CheckpointError(Exception):
    """Unreadable, corrupt, or incompatible checkpoint file."""


def _rng_state_to_json(rng: np.random.Generator) -> dict:
    def convert(obj):
        if isinstance(obj, np.ndarray):
            return {"__nd__": obj.dtype.str, "data": obj.tolist()}
        if isinstance(obj, dict):
            return {k: convert(v) for k, v in obj.items()}
        if isinstance(obj, (np.integer,)):
            return int(obj)
        return obj

    return convert(rng.bit_generator.state)


def _rng_state_from_json(state: dict) -> np.random.Generator:
    def restore(obj):
        if isinstance(obj, dict) and "__nd__" in obj:
            return np.array(obj["data"], dtype=np.dtype(obj["__nd__"]))
        if isinstance(obj, dict):
            return {k: restore(v) for k, v in obj.items()}
        return obj

    restored = restore(state)
    gen = np.random.Generator(np.random.Philox())
    gen.bit_generator.state = restored
    return gen


@dataclass
class Checkpoint:
    params: DenoiserParameters
    schedule: DiffusionSchedule
    channel_mode: str
    config_hash: str
    rng: np.random.Generator | None


def save_checkpoint(
    path: str | Path,
    params: DenoiserParameters,
    schedule: DiffusionSchedule,
    channel_mode: str = "awgn",
    rng: np.random.Generator | None = None,
    config_hash: str = "",
) -> None:
    keys = _layer_keys(params.spec)
    arrays: list[tuple[str, np.ndarray]] = []
    for key in keys:
        arrays.append((f"w:{key}", params.weights[key]))
    for key in keys:
        arrays.append((f"m:{key}", params.opt_m[key]))
    for key in keys:
        arrays.append((f"v:{key}", params.opt_v[key]))
    arrays.append(("schedule_alpha", schedule.alpha))
    header = {
        "network": {
            "k": params.spec.k,
            "hidden": params.spec.hidden,
            "blocks": params.spec.blocks,
            "embed_dim": params.spec.embed_dim,
        },
        "schedule": {"T": schedule.T, "t_max": schedule.t_max},
        "channel_mode": channel_mode,
        "config_hash": config_hash,
        "opt_step": params.opt_step,
        "rng_state": None if rng is None else _rng_state_to_json(rng),
        "manifest": [[name, list(a.shape)] for name, a in arrays],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(Path(path), "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(raw) < 20 or raw[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    (version,) = struct.unpack("<I", raw[8:12])
    if version != VERSION:
        raise CheckpointError(f"{path}: format version {version} != supported {VERSION}")
    (hlen,) = struct.unpack("<Q", raw[12:20])
    try:
        header = json.loads(raw[20 : 20 + hlen])
    except (ValueError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from exc
    spec = NetworkSpec(**header["network"])
    offset = 20 + hlen
    loaded: dict[str, np.ndarray] = {}
    for name, shape in header["manifest"]:
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(raw):
            raise CheckpointError(f"{path}: truncated payload at array {name!r}")
        loaded[name] = np.frombuffer(raw[offset:end], dtype="<f8").reshape(shape).copy()
        offset = end
    try:
        weights = {k: loaded[f"w:{k}"] for k in _layer_keys(spec)}
        opt_m = {k: loaded[f"m:{k}"] for k in _layer_keys(spec)}
        opt_v = {k: loaded[f"v:{k}"] for k in _layer_keys(spec)}
        alpha = loaded["schedule_alpha"]
    except KeyError as exc:
        raise CheckpointError(f"{path}: missing array {exc}") from exc
    params = DenoiserParameters(spec, weights, opt_m, opt_v, header["opt_step"])
    schedule = DiffusionSchedule(alpha, np.cumprod(alpha), header["schedule"]["t_max"])
    rng = None
    if header.get("rng_state") is not None:
        rng = _rng_state_from_json(header["rng_state"])
    return Checkpoint(params, schedule, header["channel_mode"], header["config_hash"], rng)
