"""Central finite differences in binary64 for checking analytic backward passes."""
from typing import Callable, Optional

import numpy as np

EPS = 1e-4
TOLERANCE = 1e-5


def numeric_grad(f: Callable[[], float], x: np.ndarray, indices: Optional[np.ndarray] = None, eps: float = EPS) -> np.ndarray:
    """
    d f / d x at the given flat indices (all of them by default), perturbing x
    in place and restoring it. Returns a flat array aligned with ``indices``.
    """
    assert x.dtype == np.float64, "gradient checks run in binary64"
    flat = x.reshape(-1)
    assert np.shares_memory(flat, x)
    if indices is None:
        indices = np.arange(flat.size)
    out = np.empty(len(indices))
    for n, i in enumerate(indices):
        saved = flat[i]
        flat[i] = saved + eps
        plus = f()
        flat[i] = saved - eps
        minus = f()
        flat[i] = saved
        out[n] = (plus - minus) / (2.0 * eps)
    return out


def sample_indices(size: int, count: int, rng: np.random.Generator) -> np.ndarray:
    if size <= count:
        return np.arange(size)
    return np.sort(rng.choice(size, count, replace=False))


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest absolute deviation relative to the larger gradient magnitude"""
    analytic = np.asarray(analytic, dtype=np.float64).ravel()
    numeric = np.asarray(numeric, dtype=np.float64).ravel()
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def assert_grad_close(name: str, analytic: np.ndarray, numeric: np.ndarray, tol: float = TOLERANCE) -> None:
    err = relative_error(analytic, numeric)
    assert err < tol, f"{name}: relative error {err:.3e} exceeds {tol:.0e}"
