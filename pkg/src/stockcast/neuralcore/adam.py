"""Adam optimiser with bias-corrected moment estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import NetworkState


@dataclass
class OptimizerState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def hyperparameters(self) -> dict:
        return {"name": "adam", "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}


def adam_init(state: NetworkState, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-7) -> OptimizerState:
    return OptimizerState(
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        m={k: np.zeros_like(v) for k, v in state.params.items()},
        v={k: np.zeros_like(v) for k, v in state.params.items()},
    )


def adam_step(opt: OptimizerState, state: NetworkState, grads: dict[str, np.ndarray]):
    """Update ``state`` in place and return ``(opt, state)``."""
    opt.t += 1
    bc1 = 1.0 - opt.beta1**opt.t
    bc2 = 1.0 - opt.beta2**opt.t
    for name, theta in state.params.items():
        g = grads[name]
        m = opt.m.setdefault(name, np.zeros_like(theta))
        v = opt.v.setdefault(name, np.zeros_like(theta))
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * (g * g)
        theta -= opt.lr * (m / bc1) / (np.sqrt(v / bc2) + opt.eps)
    return opt, state
