"""Central finite-difference gradients, used to verify backpropagation."""

from __future__ import annotations

import numpy as np

from .network import NetworkState, backward, forward, mse_loss


def numeric_gradient(state: NetworkState, batch, target, epsilon: float = 1e-5, masks=None):
    """``(L(θ+ε) - L(θ-ε)) / 2ε`` for every parameter.

    Dropout is off unless fixed ``masks`` are supplied, in which case the same
    masks are used for every perturbed evaluation.
    """
    mode = "eval" if masks is None else "train"
    probe = state.copy()

    def loss() -> float:
        pred, _ = forward(probe, batch, mode=mode, masks=masks)
        return mse_loss(pred, target)

    grads = {}
    for name, theta in probe.params.items():
        g = np.zeros_like(theta)
        flat, gflat = theta.reshape(-1), g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + epsilon
            up = loss()
            flat[j] = orig - epsilon
            down = loss()
            flat[j] = orig
            gflat[j] = (up - down) / (2.0 * epsilon)
        grads[name] = g
    return grads


def analytic_gradient(state: NetworkState, batch, target, masks=None):
    mode = "eval" if masks is None else "train"
    pred, cache = forward(state, batch, mode=mode, masks=masks)
    return backward(state, cache, pred, target)


def max_relative_error(analytic, numeric, floor: float = 1e-8) -> float:
    """Largest ``|a-n| / max(|a|,|n|)`` over components where either side
    reaches ``floor``."""
    worst = 0.0
    for name in analytic:
        a = np.ravel(analytic[name])
        n = np.ravel(numeric[name])
        scale = np.maximum(np.abs(a), np.abs(n))
        keep = scale >= floor
        if np.any(keep):
            worst = max(worst, float(np.max(np.abs(a - n)[keep] / scale[keep])))
    return worst
