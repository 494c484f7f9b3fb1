"""Noise estimator network: residual MLP over the 2k signal vector.

The estimator eps_hat(x_t, h_r, t) is a stack of residual fully-connected
blocks in 64-bit floats. The input layer sees the noisy state concatenated
with the channel moduli and a sinusoidal encoding of the step index; each
block additionally injects the step encoding through its own hidden layer.
The output layer is zero-initialized so an untrained model predicts zero
noise. Forward, loss, and analytic gradients are written out by hand and
checked against central finite differences in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .schedule import DiffusionSchedule, forward_diffuse


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture descriptor."""

    k: int
    hidden: int = 128
    blocks: int = 2
    embed_dim: int = 64

    def __post_init__(self):
        if self.k < 1 or self.hidden < 1 or self.blocks < 0 or self.embed_dim < 2:
            raise ValueError(f"invalid network spec: {self}")
        if self.embed_dim % 2 != 0:
            raise ValueError("embed_dim must be even")

    @property
    def signal_dim(self) -> int:
        return 2 * self.k

    @property
    def input_dim(self) -> int:
        return 2 * self.signal_dim + self.embed_dim


def _layer_keys(spec: NetworkSpec) -> list[str]:
    keys = ["w_in", "b_in"]
    for j in range(spec.blocks):
        keys += [f"blk{j}_emb_w", f"blk{j}_emb_b", f"blk{j}_w1", f"blk{j}_b1",
                 f"blk{j}_w2", f"blk{j}_b2"]
    keys += ["w_out", "b_out"]
    return keys


def _shapes(spec: NetworkSpec) -> dict[str, tuple[int, ...]]:
    h, e, d = spec.hidden, spec.embed_dim, spec.signal_dim
    shapes: dict[str, tuple[int, ...]] = {"w_in": (spec.input_dim, h), "b_in": (h,)}
    for j in range(spec.blocks):
        shapes[f"blk{j}_emb_w"] = (e, h)
        shapes[f"blk{j}_emb_b"] = (h,)
        shapes[f"blk{j}_w1"] = (h, h)
        shapes[f"blk{j}_b1"] = (h,)
        shapes[f"blk{j}_w2"] = (h, h)
        shapes[f"blk{j}_b2"] = (h,)
    shapes["w_out"] = (h, d)
    shapes["b_out"] = (d,)
    return shapes


@dataclass
class DenoiserParameters:
    """Network weights plus adaptive-moment optimizer state."""

    spec: NetworkSpec
    weights: dict[str, np.ndarray]
    opt_m: dict[str, np.ndarray] = field(default_factory=dict)
    opt_v: dict[str, np.ndarray] = field(default_factory=dict)
    opt_step: int = 0

    def __post_init__(self):
        if not self.opt_m:
            self.opt_m = {k: np.zeros_like(v) for k, v in self.weights.items()}
            self.opt_v = {k: np.zeros_like(v) for k, v in self.weights.items()}

    def copy(self) -> "DenoiserParameters":
        return DenoiserParameters(
            self.spec,
            {k: v.copy() for k, v in self.weights.items()},
            {k: v.copy() for k, v in self.opt_m.items()},
            {k: v.copy() for k, v in self.opt_v.items()},
            self.opt_step,
        )

    def flat_weights(self) -> np.ndarray:
        return np.concatenate([self.weights[k].ravel() for k in _layer_keys(self.spec)])

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.weights.values())


def init_params(spec: NetworkSpec, rng: np.random.Generator) -> DenoiserParameters:
    """Scaled-uniform init; output layer zeroed so the initial prediction is 0."""
    weights: dict[str, np.ndarray] = {}
    for key, shape in _shapes(spec).items():
        if key in ("w_out", "b_out") or key.endswith(("_b1", "_b2", "_emb_b")) or key == "b_in":
            weights[key] = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[0])
            weights[key] = rng.uniform(-bound, bound, size=shape)
    return DenoiserParameters(spec, weights)


def timestep_embedding(t, dim: int) -> np.ndarray:
    """Sinusoidal step features in [-1, 1]; deterministic in t."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / max(half - 1, 1))
    angles = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=-1)


def _forward(params: DenoiserParameters, x_t: np.ndarray, h_r: np.ndarray, t):
    """Cached forward pass on a (B, 2k) batch; returns (output, cache)."""
    w = params.weights
    spec = params.spec
    x_t = np.atleast_2d(np.asarray(x_t, dtype=np.float64))
    h_r = np.broadcast_to(np.asarray(h_r, dtype=np.float64), x_t.shape)
    if x_t.shape[-1] != spec.signal_dim:
        raise ValueError(f"signal width {x_t.shape[-1]} != 2k={spec.signal_dim}")
    t_arr = np.broadcast_to(np.atleast_1d(t), (x_t.shape[0],))
    emb = timestep_embedding(t_arr, spec.embed_dim)
    z = np.concatenate([x_t, h_r, emb], axis=-1)
    h = np.tanh(z @ w["w_in"] + w["b_in"])
    cache = {"z": z, "emb": emb, "h0": h}
    for j in range(spec.blocks):
        g = np.tanh(emb @ w[f"blk{j}_emb_w"] + w[f"blk{j}_emb_b"])
        u = np.tanh(h @ w[f"blk{j}_w1"] + w[f"blk{j}_b1"] + g)
        cache[f"g{j}"], cache[f"u{j}"], cache[f"hin{j}"] = g, u, h
        h = h + u @ w[f"blk{j}_w2"] + w[f"blk{j}_b2"]
    cache["h_last"] = h
    return h @ w["w_out"] + w["b_out"], cache


def _backward(params: DenoiserParameters, cache: dict, d_out: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss given d(loss)/d(output)."""
    w = params.weights
    grads: dict[str, np.ndarray] = {}
    grads["w_out"] = cache["h_last"].T @ d_out
    grads["b_out"] = d_out.sum(axis=0)
    d_h = d_out @ w["w_out"].T
    for j in reversed(range(params.spec.blocks)):
        g, u, h_in = cache[f"g{j}"], cache[f"u{j}"], cache[f"hin{j}"]
        grads[f"blk{j}_w2"] = u.T @ d_h
        grads[f"blk{j}_b2"] = d_h.sum(axis=0)
        d_a = (d_h @ w[f"blk{j}_w2"].T) * (1.0 - u**2)
        grads[f"blk{j}_w1"] = h_in.T @ d_a
        grads[f"blk{j}_b1"] = d_a.sum(axis=0)
        d_eg = d_a * (1.0 - g**2)
        grads[f"blk{j}_emb_w"] = cache["emb"].T @ d_eg
        grads[f"blk{j}_emb_b"] = d_eg.sum(axis=0)
        d_h = d_h + d_a @ w[f"blk{j}_w1"].T
    d_pre = d_h * (1.0 - cache["h0"] ** 2)
    grads["w_in"] = cache["z"].T @ d_pre
    grads["b_in"] = d_pre.sum(axis=0)
    return grads


def predict_epsilon(params: DenoiserParameters, x_t: np.ndarray, h_r: np.ndarray, t) -> np.ndarray:
    """Deterministic noise prediction; preserves the input's batch shape."""
    squeeze = np.ndim(x_t) == 1
    out, _ = _forward(params, x_t, h_r, t)
    return out[0] if squeeze else out


@dataclass
class Batch:
    """One training minibatch in the 2k real layout (rows are blocks)."""

    x0: np.ndarray
    w_n: np.ndarray
    h_r: np.ndarray
    t: np.ndarray
    eps: np.ndarray


def noise_prediction_loss(
    params: DenoiserParameters,
    x0: np.ndarray,
    w_n_diag: np.ndarray,
    h_r: np.ndarray,
    t,
    eps: np.ndarray,
    schedule: DiffusionSchedule,
    weighted: bool = False,
) -> float:
    """Squared error between injected and predicted noise on diffused states.

    Per block the loss is sum_i (eps_i - eps_hat_i)^2; ``weighted`` scales
    the residual by the channel noise weights before squaring (the
    un-reweighted objective), which coincides with the plain loss when the
    weights are identity. Batched inputs are averaged.
    """
    x_t = forward_diffuse(np.atleast_2d(x0), t, w_n_diag, np.atleast_2d(eps), schedule)
    pred = predict_epsilon(params, x_t, h_r, t)
    resid = np.atleast_2d(eps) - np.atleast_2d(pred)
    if weighted:
        resid = np.atleast_2d(w_n_diag) * resid
    return float(np.mean(np.sum(resid**2, axis=-1)))


def loss_and_gradients(
    params: DenoiserParameters,
    batch: Batch,
    schedule: DiffusionSchedule,
    weighted: bool = False,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean batch loss and its analytic gradient w.r.t. every weight."""
    x0 = np.atleast_2d(batch.x0)
    if x0.shape[0] == 0:
        raise ValueError("empty batch")
    eps = np.atleast_2d(batch.eps)
    x_t = forward_diffuse(x0, batch.t, batch.w_n, eps, schedule)
    out, cache = _forward(params, x_t, batch.h_r, batch.t)
    resid = out - eps
    if weighted:
        w2 = np.broadcast_to(np.atleast_2d(batch.w_n) ** 2, resid.shape)
        loss = float(np.mean(np.sum(w2 * resid**2, axis=-1)))
        d_out = 2.0 * w2 * resid / out.shape[0]
    else:
        loss = float(np.mean(np.sum(resid**2, axis=-1)))
        d_out = 2.0 * resid / out.shape[0]
    return loss, _backward(params, cache, d_out)


def grad_loss(
    params: DenoiserParameters,
    batch: Batch,
    schedule: DiffusionSchedule,
    weighted: bool = False,
) -> dict[str, np.ndarray]:
    """Analytic gradient of the mean batch loss (see loss_and_gradients)."""
    return loss_and_gradients(params, batch, schedule, weighted)[1]
