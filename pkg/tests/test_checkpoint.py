import struct

import numpy as np
import pytest

from chandiff.checkpoint import (
    MAGIC,
    CheckpointError,
    load_checkpoint,
    save_checkpoint,
)
from chandiff.denoiser import NetworkSpec, init_params
from chandiff.rng import stream
from chandiff.schedule import build_schedule
from chandiff.sources import make_source
from chandiff.training import train


def trained_state(steps=25):
    sch = build_schedule(40, 0.999, 0.95, t_max=40)
    spec = NetworkSpec(k=3, hidden=16, blocks=1, embed_dim=8)
    run = train(
        make_source("gaussian_mixture", 3), sch, "rayleigh", steps, 6, stream(101),
        network=spec, config_hash="cfg-abc",
    )
    return run, sch


def test_round_trip_parameters(tmp_path):
    run, sch = trained_state()
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, run.params, sch, "rayleigh", rng=run.rng, config_hash="cfg-abc")
    ck = load_checkpoint(path)
    assert ck.channel_mode == "rayleigh"
    assert ck.config_hash == "cfg-abc"
    assert ck.params.opt_step == run.params.opt_step
    assert ck.params.spec == run.params.spec
    for key in run.params.weights:
        np.testing.assert_array_equal(ck.params.weights[key], run.params.weights[key])
        np.testing.assert_array_equal(ck.params.opt_m[key], run.params.opt_m[key])
        np.testing.assert_array_equal(ck.params.opt_v[key], run.params.opt_v[key])
    np.testing.assert_array_equal(ck.schedule.alpha, sch.alpha)
    assert ck.schedule.t_max == sch.t_max


def test_resumed_training_replays_identical_trace(tmp_path):
    run, sch = trained_state()
    path = tmp_path / "resume.ckpt"
    save_checkpoint(path, run.params, sch, "rayleigh", rng=run.rng, config_hash="cfg-abc")

    src = make_source("gaussian_mixture", 3)
    continued = train(src, sch, "rayleigh", 20, 6, run.rng, params=run.params)

    ck = load_checkpoint(path)
    replayed = train(make_source("gaussian_mixture", 3), ck.schedule, ck.channel_mode,
                     20, 6, ck.rng, params=ck.params)
    assert np.array_equal(continued.trace, replayed.trace)


def test_corrupt_magic_rejected(tmp_path):
    run, sch = trained_state(steps=2)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, run.params, sch)
    raw = bytearray(path.read_bytes())
    raw[:8] = b"XXXXXXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_version_bump_rejected(tmp_path):
    run, sch = trained_state(steps=2)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, run.params, sch)
    raw = bytearray(path.read_bytes())
    assert raw[:8] == MAGIC
    raw[8:12] = struct.pack("<I", 99)
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="version 99"):
        load_checkpoint(path)


def test_truncated_payload_rejected(tmp_path):
    run, sch = trained_state(steps=2)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, run.params, sch)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) - 64])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_missing_file_error_names_path(tmp_path):
    with pytest.raises(CheckpointError, match="nope.ckpt"):
        load_checkpoint(tmp_path / "nope.ckpt")
