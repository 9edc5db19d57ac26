"""LSTM and GRU cells and their sequence layers, forward and backward.

Kernels follow the ``[gates*H, in]`` layout, so a pre-activation is
``x @ W.T + h @ U.T + b``.  Gate blocks are ordered (i, f, g, o) for the LSTM
and (z, r, n) for the GRU.  Everything works on a leading batch axis; single
vectors are promoted to a batch of one by the cell-level wrappers.
"""

from __future__ import annotations

import numpy as np


def sigmoid(x):
    # tanh form: overflow-free for any finite x
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# --------------------------------------------------------------------- LSTM


def _lstm_step(a_in, h_prev, c_prev, U):
    H = h_prev.shape[-1]
    a = a_in + h_prev @ U.T
    i = sigmoid(a[:, :H])
    f = sigmoid(a[:, H : 2 * H])
    g = np.tanh(a[:, 2 * H : 3 * H])
    o = sigmoid(a[:, 3 * H :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (h_prev, c_prev, i, f, g, o, tc)


def _lstm_step_back(dh, dc, step, U):
    h_prev, c_prev, i, f, g, o, tc = step
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc * tc)
    da = np.concatenate(
        [
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            dc * i * (1.0 - g * g),
            do * o * (1.0 - o),
        ],
        axis=1,
    )
    return da, da @ U, dc * f


def lstm_cell_forward(params, x, h_prev, c_prev):
    """One LSTM step.  ``params`` maps ``W``, ``U``, ``b``.

    Returns ``(h, c, cache)``; shapes follow the inputs (vector or batch).
    """
    squeeze = np.ndim(x) == 1
    x, h_prev, c_prev = (np.atleast_2d(np.asarray(v, dtype=np.float64)) for v in (x, h_prev, c_prev))
    h, c, step = _lstm_step(x @ params["W"].T + params["b"], h_prev, c_prev, params["U"])
    cache = {"x": x, "step": step}
    if squeeze:
        return h[0], c[0], cache
    return h, c, cache


def lstm_cell_backward(params, dh, dc, cache):
    """Gradients of one LSTM step given upstream ``dh`` and ``dc``.

    Returns ``(dx, dh_prev, dc_prev, grads)`` with batch axes kept.
    """
    dh, dc = np.atleast_2d(dh), np.atleast_2d(dc)
    da, dh_prev, dc_prev = _lstm_step_back(dh, dc, cache["step"], params["U"])
    h_prev = cache["step"][0]
    grads = {"W": da.T @ cache["x"], "U": da.T @ h_prev, "b": da.sum(axis=0)}
    return da @ params["W"], dh_prev, dc_prev, grads


def lstm_layer_forward(params, X):
    """Run an LSTM over ``X`` of shape [B, T, D] from a zero state.

    Returns the hidden sequence [B, T, H] and a cache for backprop.
    """
    B, T, _ = X.shape
    H = params["U"].shape[1]
    A = X @ params["W"].T + params["b"]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    hs = np.empty((B, T, H))
    steps = []
    for t in range(T):
        h, c, step = _lstm_step(A[:, t], h, c, params["U"])
        hs[:, t] = h
        steps.append(step)
    return hs, {"X": X, "steps": steps}


def lstm_layer_backward(params, dhs, cache):
    """Backpropagate ``dhs`` ([B, T, H], loss gradient w.r.t. every emitted
    hidden state) through time.  Returns ``(dX, grads)``."""
    X, steps = cache["X"], cache["steps"]
    B, T, _ = X.shape
    H = params["U"].shape[1]
    dA = np.empty((B, T, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in reversed(range(T)):
        da, dh_next, dc_next = _lstm_step_back(dhs[:, t] + dh_next, dc_next, steps[t], params["U"])
        dA[:, t] = da
    h_prev = np.stack([s[0] for s in steps], axis=1)
    grads = {
        "W": np.einsum("btg,btd->gd", dA, X),
        "U": np.einsum("btg,bth->gh", dA, h_prev),
        "b": dA.sum(axis=(0, 1)),
    }
    return dA @ params["W"], grads


# ---------------------------------------------------------------------- GRU


def _gru_step(a_in, h_prev, U):
    H = h_prev.shape[-1]
    ah = h_prev @ U[: 2 * H].T
    z = sigmoid(a_in[:, :H] + ah[:, :H])
    r = sigmoid(a_in[:, H : 2 * H] + ah[:, H:])
    rh = r * h_prev
    n = np.tanh(a_in[:, 2 * H :] + rh @ U[2 * H :].T)
    h = z * h_prev + (1.0 - z) * n
    return h, (h_prev, z, r, rh, n)


def _gru_step_back(dh, step, U):
    h_prev, z, r, rh, n = step
    H = h_prev.shape[-1]
    dan = dh * (1.0 - z) * (1.0 - n * n)
    drh = dan @ U[2 * H :]
    daz = dh * (h_prev - n) * z * (1.0 - z)
    dar = drh * h_prev * r * (1.0 - r)
    dazr = np.concatenate([daz, dar], axis=1)
    dh_prev = dh * z + drh * r + dazr @ U[: 2 * H]
    return np.concatenate([daz, dar, dan], axis=1), dh_prev


def gru_cell_forward(params, x, h_prev):
    """One GRU step, ``h = z*h_prev + (1-z)*n``.  Returns ``(h, cache)``."""
    squeeze = np.ndim(x) == 1
    x, h_prev = (np.atleast_2d(np.asarray(v, dtype=np.float64)) for v in (x, h_prev))
    h, step = _gru_step(x @ params["W"].T + params["b"], h_prev, params["U"])
    cache = {"x": x, "step": step}
    return (h[0] if squeeze else h), cache


def _gru_recurrent_grad(da, step):
    h_prev, _, _, rh, _ = step
    H = h_prev.shape[-1]
    return np.concatenate([da[:, : 2 * H].T @ h_prev, da[:, 2 * H :].T @ rh], axis=0)


def gru_cell_backward(params, dh, cache):
    """Returns ``(dx, dh_prev, grads)`` for one GRU step."""
    dh = np.atleast_2d(dh)
    da, dh_prev = _gru_step_back(dh, cache["step"], params["U"])
    grads = {
        "W": da.T @ cache["x"],
        "U": _gru_recurrent_grad(da, cache["step"]),
        "b": da.sum(axis=0),
    }
    return da @ params["W"], dh_prev, grads


def gru_layer_forward(params, X):
    B, T, _ = X.shape
    H = params["U"].shape[1]
    A = X @ params["W"].T + params["b"]
    h = np.zeros((B, H))
    hs = np.empty((B, T, H))
    steps = []
    for t in range(T):
        h, step = _gru_step(A[:, t], h, params["U"])
        hs[:, t] = h
        steps.append(step)
    return hs, {"X": X, "steps": steps}


def gru_layer_backward(params, dhs, cache):
    X, steps = cache["X"], cache["steps"]
    B, T, _ = X.shape
    H = params["U"].shape[1]
    dA = np.empty((B, T, 3 * H))
    dU = np.zeros_like(params["U"])
    dh_next = np.zeros((B, H))
    for t in reversed(range(T)):
        da, dh_next = _gru_step_back(dhs[:, t] + dh_next, steps[t], params["U"])
        dA[:, t] = da
        dU += _gru_recurrent_grad(da, steps[t])
    grads = {
        "W": np.einsum("btg,btd->gd", dA, X),
        "U": dU,
        "b": dA.sum(axis=(0, 1)),
    }
    return dA @ params["W"], grads


LAYERS = {
    "lstm": (4, lstm_layer_forward, lstm_layer_backward),
    "gru": (3, gru_layer_forward, gru_layer_backward),
}
