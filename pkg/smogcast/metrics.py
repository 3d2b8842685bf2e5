"""Evaluation metrics: binary cross entropy, mean squared error and SSIM."""
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.signal import correlate

from smogcast.core.exceptions import DataError, ShapeMismatchError
from smogcast.core.tensor import Tensor, ensure_finite
from smogcast.models.config import SsimConfig

BCE_CLAMP = 1e-7


def _paired(name: str, y: Tensor, y_hat: Tensor) -> Tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise ShapeMismatchError(f"{name}: shapes {y.shape} and {y_hat.shape} differ")
    if y.size == 0:
        raise DataError(f"{name}: empty input")
    return y, y_hat


def bce(y: Tensor, y_hat: Tensor) -> float:
    """Mean binary cross entropy; predictions are clamped to [1e-7, 1 - 1e-7]"""
    y, y_hat = _paired("bce", y, y_hat)
    p = np.clip(y_hat, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def bce_grad_logits(y: Tensor, y_hat: Tensor) -> np.ndarray:
    """Gradient of mean BCE with respect to the pre-sigmoid logits: (y_hat - y) / N"""
    if y.shape != y_hat.shape:
        raise ShapeMismatchError(f"bce_grad_logits: shapes {y.shape} and {y_hat.shape} differ")
    return (y_hat - y) / y.size


def mse(y: Tensor, y_hat: Tensor) -> float:
    y, y_hat = _paired("mse", y, y_hat)
    diff = y - y_hat
    return float(np.mean(diff * diff))


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    coords = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(coords ** 2) / (2.0 * sigma ** 2))
    g /= g.sum()
    return np.outer(g, g)


def _ssim_formula(mu_x, mu_y, var_x, var_y, cov, c1: float, c2: float):
    return ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2))


def ssim(x: Tensor, y: Tensor, cfg: Optional[SsimConfig] = None) -> float:
    """
    Structural similarity of two single-channel images.

    Global mode applies the formula once with whole-image statistics
    (population variance). Gaussian mode averages the per-window SSIM map;
    the window shrinks to the image when the image is smaller.
    """
    cfg = cfg or SsimConfig()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeMismatchError(f"ssim: shapes {x.shape} and {y.shape} differ")
    if x.ndim != 2:
        raise ShapeMismatchError(f"ssim expects 2-D images, got shape {x.shape}")
    if x.size == 0:
        raise DataError("ssim: empty image")
    ensure_finite("ssim input", x)
    ensure_finite("ssim input", y)

    if cfg.window == "global":
        mu_x, mu_y = x.mean(), y.mean()
        dx, dy = x - mu_x, y - mu_y
        return float(_ssim_formula(mu_x, mu_y, np.mean(dx * dx), np.mean(dy * dy), np.mean(dx * dy), cfg.c1, cfg.c2))

    size = min(cfg.window_size, *x.shape)
    if size % 2 == 0:
        size -= 1
    win = gaussian_window(size, cfg.sigma)

    def filt(img):
        return correlate(img, win, mode="valid", method="direct")

    mu_x, mu_y = filt(x), filt(y)
    var_x = filt(x * x) - mu_x * mu_x
    var_y = filt(y * y) - mu_y * mu_y
    cov = filt(x * y) - mu_x * mu_y
    return float(np.mean(_ssim_formula(mu_x, mu_y, var_x, var_y, cov, cfg.c1, cfg.c2)))


class SsimSeries(NamedTuple):
    values: List[Tuple[int, float]]
    mean: float


def _frames(stack: Tensor) -> np.ndarray:
    stack = np.asarray(stack)
    if stack.ndim == 4 and stack.shape[-1] == 1:
        stack = stack[..., 0]
    if stack.ndim != 3:
        raise ShapeMismatchError(f"Expected a (T, H, W) stack, got shape {stack.shape}")
    return stack


def ssim_series(pred: Tensor, truth: Tensor, cfg: Optional[SsimConfig] = None) -> SsimSeries:
    """Per-timestep SSIM and its mean"""
    pred, truth = _frames(pred), _frames(truth)
    if pred.shape != truth.shape:
        raise ShapeMismatchError(f"ssim_series: shapes {pred.shape} and {truth.shape} differ")
    if pred.shape[0] == 0:
        raise DataError("ssim_series: no frames")
    values = [(t, ssim(pred[t], truth[t], cfg)) for t in range(pred.shape[0])]
    return SsimSeries(values=values, mean=float(np.mean([v for _, v in values])))
