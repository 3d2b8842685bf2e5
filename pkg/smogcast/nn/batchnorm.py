from dataclasses import dataclass
from typing import Dict, Literal, Tuple

import numpy as np

from smogcast.core.exceptions import NonFiniteError, ShapeMismatchError
from smogcast.core.tensor import Tensor

Mode = Literal["train", "infer"]


@dataclass
class BatchNormParams:
    """Per-channel normalization over every non-channel axis"""

    gamma: Tensor
    beta: Tensor
    running_mean: Tensor
    running_var: Tensor
    momentum: float = 0.99
    epsilon: float = 1e-3

    @classmethod
    def create(cls, channels: int, momentum: float = 0.99, epsilon: float = 1e-3, dtype=np.float32) -> "BatchNormParams":
        return cls(
            gamma=np.ones(channels, dtype=dtype),
            beta=np.zeros(channels, dtype=dtype),
            running_mean=np.zeros(channels, dtype=dtype),
            running_var=np.ones(channels, dtype=dtype),
            momentum=momentum,
            epsilon=epsilon,
        )

    @property
    def channels(self) -> int:
        return self.gamma.shape[0]

    def trainable(self) -> Dict[str, Tensor]:
        return {"gamma": self.gamma, "beta": self.beta}

    def running(self) -> Dict[str, Tensor]:
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def param_count(self) -> int:
        return 4 * self.channels


@dataclass
class BatchNormCache:
    x_hat: Tensor
    inv_std: Tensor
    mode: Mode


def batchnorm_forward(
    x: Tensor, params: BatchNormParams, mode: Mode = "infer", update_running: bool = True
) -> Tuple[Tensor, BatchNormCache]:
    """
    train: normalize with batch statistics and, when update_running is set,
    fold them into the running statistics (this mutates params); infer:
    normalize with running statistics.
    """
    if x.shape[-1] != params.channels:
        raise ShapeMismatchError(f"Input has {x.shape[-1]} channels, batch norm expects {params.channels}")
    if np.any(params.running_var < 0):
        raise NonFiniteError("Batch norm running variance is negative")

    axes = tuple(range(x.ndim - 1))
    if mode == "train":
        mean = x.mean(axis=axes)
        centered = x - mean
        var = (centered * centered).mean(axis=axes)
        if update_running:
            m = params.momentum
            params.running_mean[...] = m * params.running_mean + (1.0 - m) * mean
            params.running_var[...] = m * params.running_var + (1.0 - m) * var
    elif mode == "infer":
        mean, var = params.running_mean, params.running_var
        centered = x - mean
    else:
        raise ValueError(f"Unknown batch norm mode {mode!r}")

    inv_std = 1.0 / np.sqrt(var + params.epsilon)
    x_hat = centered * inv_std
    return x_hat * params.gamma + params.beta, BatchNormCache(x_hat=x_hat, inv_std=inv_std, mode=mode)


def batchnorm_backward(cache: BatchNormCache, grad_y: Tensor, params: BatchNormParams) -> Tuple[Tensor, Tensor, Tensor]:
    """Returns (grad_x, grad_gamma, grad_beta); running statistics get no gradient"""
    if grad_y.shape != cache.x_hat.shape:
        raise ShapeMismatchError(f"grad_y shape {grad_y.shape} does not match {cache.x_hat.shape}")
    axes = tuple(range(grad_y.ndim - 1))
    grad_beta = grad_y.sum(axis=axes)
    grad_gamma = (grad_y * cache.x_hat).sum(axis=axes)
    grad_x_hat = grad_y * params.gamma
    if cache.mode == "infer":
        return grad_x_hat * cache.inv_std, grad_gamma, grad_beta
    n = grad_y.size // grad_y.shape[-1]
    grad_x = (cache.inv_std / n) * (
        n * grad_x_hat - grad_x_hat.sum(axis=axes) - cache.x_hat * (grad_x_hat * cache.x_hat).sum(axis=axes)
    )
    return grad_x, grad_gamma, grad_beta
