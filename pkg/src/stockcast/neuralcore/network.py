"""Stacked recurrent regressor: LSTM base, optional LSTM/GRU layer, dropout,
linear dense head."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import LengthMismatch, NonFiniteActivation, NonFiniteGradient
from ..rng import SplitMix64
from .cells import LAYERS

ADDITIONAL_LAYERS = ("none", "lstm", "gru")


@dataclass(frozen=True)
class ModelSpec:
    input_dim: int = 5
    time_steps: int = 25
    neurons: int = 16
    additional_layer: str = "none"
    dropout: float = 0.2

    def __post_init__(self):
        if self.neurons < 1:
            raise ValueError("neurons must be >= 1")
        if self.input_dim < 1 or self.time_steps < 1:
            raise ValueError("input_dim and time_steps must be >= 1")
        if self.additional_layer not in ADDITIONAL_LAYERS:
            raise ValueError(f"additional_layer must be one of {ADDITIONAL_LAYERS}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    @property
    def layer_kinds(self) -> tuple[str, ...]:
        if self.additional_layer == "none":
            return ("lstm",)
        return ("lstm", self.additional_layer)

    def to_dict(self) -> dict:
        return asdict(self)


def param_shapes(spec: ModelSpec) -> dict[str, tuple[int, ...]]:
    """Ordered parameter names and shapes."""
    H = spec.neurons
    shapes: dict[str, tuple[int, ...]] = {}
    fan_in = spec.input_dim
    for k, kind in enumerate(spec.layer_kinds):
        gates = LAYERS[kind][0]
        shapes[f"{kind}{k}.W"] = (gates * H, fan_in)
        shapes[f"{kind}{k}.U"] = (gates * H, H)
        shapes[f"{kind}{k}.b"] = (gates * H,)
        fan_in = H
    shapes["dense.w"] = (H,)
    shapes["dense.b"] = (1,)
    return shapes


@dataclass
class NetworkState:
    spec: ModelSpec
    params: dict[str, np.ndarray] = field(default_factory=dict)

    def layer_params(self, k: int) -> dict[str, np.ndarray]:
        kind = self.spec.layer_kinds[k]
        return {p: self.params[f"{kind}{k}.{p}"] for p in ("W", "U", "b")}

    def copy(self) -> "NetworkState":
        return NetworkState(self.spec, {k: v.copy() for k, v in self.params.items()})

    @property
    def size(self) -> int:
        return sum(v.size for v in self.params.values())


def init_network(spec: ModelSpec, seed: int) -> NetworkState:
    """Glorot-uniform kernels from a SplitMix64 stream; zero biases except the
    LSTM forget-gate block, which starts at 1."""
    rng = SplitMix64(seed)
    params: dict[str, np.ndarray] = {}
    H = spec.neurons
    for name, shape in param_shapes(spec).items():
        if name.endswith(".b"):
            arr = np.zeros(shape)
            if name.startswith("lstm"):
                arr[H : 2 * H] = 1.0
        else:
            fan_out, fan_in = (shape[0], shape[1]) if len(shape) == 2 else (1, shape[0])
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            arr = (2.0 * rng.uniform(int(np.prod(shape))) - 1.0).reshape(shape) * limit
        params[name] = arr
    return NetworkState(spec, params)


def dropout_masks(spec: ModelSpec, batch: int, seed: int) -> list[np.ndarray]:
    """Inverted-dropout masks, one per recurrent layer output.

    Intermediate layers emit a full sequence [B, T, H]; the last layer only its
    final state [B, H].
    """
    rng = SplitMix64(seed)
    p = spec.dropout
    masks = []
    n_layers = len(spec.layer_kinds)
    for k in range(n_layers):
        shape = (batch, spec.neurons) if k == n_layers - 1 else (batch, spec.time_steps, spec.neurons)
        keep = rng.uniform(int(np.prod(shape))).reshape(shape) >= p
        masks.append(keep / (1.0 - p))
    return masks


def forward(state: NetworkState, batch, mode: str = "eval", dropout_seed=None, masks=None):
    """Predict one value per window of ``batch`` ([B, T, D]).

    In ``train`` mode dropout masks are drawn from ``dropout_seed`` unless
    given explicitly.  Returns ``(predictions [B], cache)``.
    """
    X = np.asarray(batch, dtype=np.float64)
    spec = state.spec
    if X.ndim != 3 or X.shape[2] != spec.input_dim:
        raise ValueError(f"batch shape {X.shape} incompatible with input_dim {spec.input_dim}")
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if mode == "train" and spec.dropout > 0 and masks is None:
        if dropout_seed is None:
            raise ValueError("train mode requires dropout_seed")
        masks = dropout_masks(spec, X.shape[0], dropout_seed)
    if mode == "eval" or spec.dropout == 0:
        masks = None

    # overflow surfaces as NonFiniteActivation below, not as warnings
    with np.errstate(over="ignore", invalid="ignore"):
        pred, cache = _forward_layers(state, X, masks)
    if not np.all(np.isfinite(pred)):
        raise NonFiniteActivation("non-finite prediction in forward pass")
    return pred, cache


def _forward_layers(state: NetworkState, X, masks):
    spec = state.spec
    n_layers = len(spec.layer_kinds)
    layer_caches = []
    inp = X
    for k, kind in enumerate(spec.layer_kinds):
        hs, lc = LAYERS[kind][1](state.layer_params(k), inp)
        layer_caches.append(lc)
        out = hs if k < n_layers - 1 else hs[:, -1]
        if masks is not None:
            out = out * masks[k]
        inp = out
    pred = inp @ state.params["dense.w"] + state.params["dense.b"][0]
    return pred, {"layers": layer_caches, "masks": masks, "h_final": inp, "T": X.shape[1]}


def mse_loss(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise LengthMismatch(pred.size, target.size)
    if pred.size == 0:
        raise ValueError("mse of empty vectors")
    d = pred - target
    return float(np.mean(d * d))


def rmse(pred, target) -> float:
    return math.sqrt(mse_loss(pred, target))


def backward(state: NetworkState, cache, pred, target) -> dict[str, np.ndarray]:
    """Analytic gradients of the batch MSE w.r.t. every parameter."""
    spec = state.spec
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise LengthMismatch(pred.size, target.size)
    B = pred.shape[0]
    T = cache["T"]
    H = spec.neurons
    masks = cache["masks"]

    dpred = 2.0 * (pred - target) / B
    grads = {
        "dense.w": cache["h_final"].T @ dpred,
        "dense.b": np.array([dpred.sum()]),
    }
    dout = np.outer(dpred, state.params["dense.w"])
    n_layers = len(spec.layer_kinds)
    for k in reversed(range(n_layers)):
        kind = spec.layer_kinds[k]
        if masks is not None:
            dout = dout * masks[k]
        if k == n_layers - 1:
            dhs = np.zeros((B, T, H))
            dhs[:, -1] = dout
        else:
            dhs = dout
        dX, lg = LAYERS[kind][2](state.layer_params(k), dhs, cache["layers"][k])
        for p, g in lg.items():
            grads[f"{kind}{k}.{p}"] = g
        dout = dX

    ordered = {name: grads[name] for name in state.params}
    for name, g in ordered.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient for {name}")
    return ordered


def predict(state: NetworkState, X, chunk: int = 4096) -> np.ndarray:
    """Eval-mode predictions for an arbitrary number of windows."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        return np.zeros(0)
    parts = [forward(state, X[i : i + chunk])[0] for i in range(0, X.shape[0], chunk)]
    return np.concatenate(parts)
