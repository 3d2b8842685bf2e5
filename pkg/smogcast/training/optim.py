from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from smogcast.core.exceptions import ShapeMismatchError
from smogcast.core.tensor import Tensor, global_norm
from smogcast.models.config import TrainConfig

ParamDict = Dict[str, Tensor]


def clip_by_global_norm(grads: ParamDict, clipnorm: float) -> ParamDict:
    """Rescale every gradient by clipnorm / norm when the joint norm exceeds clipnorm"""
    if clipnorm <= 0:
        raise ValueError("clipnorm must be positive")
    norm = global_norm(grads.values())
    if norm <= clipnorm:
        return grads
    factor = clipnorm / norm
    return {name: (g * factor).astype(g.dtype, copy=False) for name, g in grads.items()}


@dataclass
class AdamState:
    m: ParamDict = field(default_factory=dict)
    v: ParamDict = field(default_factory=dict)
    step_count: int = 0
    lr: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clipnorm: float = 1.0

    @classmethod
    def create(cls, params: ParamDict, cfg: TrainConfig) -> "AdamState":
        return cls(
            m={name: np.zeros_like(p) for name, p in params.items()},
            v={name: np.zeros_like(p) for name, p in params.items()},
            lr=cfg.learning_rate,
            beta1=cfg.beta1,
            beta2=cfg.beta2,
            epsilon=cfg.epsilon,
            clipnorm=cfg.clipnorm,
        )


def adam_step(params: ParamDict, grads: ParamDict, state: AdamState) -> Tuple[ParamDict, AdamState]:
    """
    One Adam update, in place on params and state. Gradients must already be
    clipped.
    """
    if set(grads) != set(params):
        raise ShapeMismatchError("Gradient names do not match parameter names")
    for name, p in params.items():
        if grads[name].shape != p.shape:
            raise ShapeMismatchError(f"{name}: gradient {grads[name].shape} vs parameter {p.shape}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)

    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** t
    correction2 = 1.0 - b2 ** t
    for name, p in params.items():
        g = grads[name]
        m, v = state.m[name], state.v[name]
        m[...] = b1 * m + (1.0 - b1) * g
        v[...] = b2 * v + (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params, state
