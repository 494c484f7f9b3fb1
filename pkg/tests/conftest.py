"""Shared test helpers: finite-difference gradient oracle."""

import numpy as np

from chandiff.denoiser import loss_and_gradients


def finite_difference_gradients(params, batch, schedule, weighted=False, h=1e-5):
    """Central differences on every coordinate of every weight array."""
    grads = {}
    for key, w in params.weights.items():
        g = np.zeros_like(w)
        flat = w.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp, _ = loss_and_gradients(params, batch, schedule, weighted)
            flat[i] = orig - h
            lm, _ = loss_and_gradients(params, batch, schedule, weighted)
            flat[i] = orig
            g.ravel()[i] = (lp - lm) / (2 * h)
        grads[key] = g
    return grads


def gradient_relative_max_norm_error(analytic, numeric):
    num = max(np.max(np.abs(analytic[k] - numeric[k])) for k in analytic)
    scale = max(max(np.max(np.abs(g)) for g in analytic.values()), 1e-8)
    return num / scale
