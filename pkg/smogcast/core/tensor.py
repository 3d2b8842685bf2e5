"""
Dense tensor kernels.

Tensors are C-contiguous numpy arrays with the channel axis last. Every
convolution is stride 1 with symmetric "same" zero padding, so spatial
extents are preserved. Kernels compute in the floating dtype of their
operands: binary32 for stored parameters, binary64 when the caller casts
for gradient checks.
"""
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, TypeAlias

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from numpy.typing import NDArray
from scipy.special import expit

from smogcast.core.exceptions import NonFiniteError, ShapeMismatchError

Tensor: TypeAlias = NDArray[np.floating]

STORAGE_DTYPE = np.float32


@dataclass(frozen=True)
class ConvSpec:
    """Kernel geometry of a same-padded convolution (2-D when kernel_d is None)"""

    kernel_h: int
    kernel_w: int
    in_channels: int
    out_channels: int
    kernel_d: Optional[int] = None
    padding: str = "same"

    def __post_init__(self):
        for extent in self.kernel_extents:
            if extent < 1 or extent % 2 == 0:
                raise ShapeMismatchError(f"Kernel extents must be odd and positive, got {self.kernel_extents}")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ShapeMismatchError("Channel counts must be positive")
        if self.padding != "same":
            raise ShapeMismatchError(f"Unsupported padding {self.padding!r}")

    @property
    def kernel_extents(self) -> Tuple[int, ...]:
        if self.kernel_d is None:
            return (self.kernel_h, self.kernel_w)
        return (self.kernel_d, self.kernel_h, self.kernel_w)

    @property
    def weight_shape(self) -> Tuple[int, ...]:
        return self.kernel_extents + (self.in_channels, self.out_channels)

    @classmethod
    def from_weights(cls, weights: Tensor) -> "ConvSpec":
        if weights.ndim == 4:
            kh, kw, cin, cout = weights.shape
            return cls(kh, kw, cin, cout)
        if weights.ndim == 5:
            kd, kh, kw, cin, cout = weights.shape
            return cls(kh, kw, cin, cout, kernel_d=kd)
        raise ShapeMismatchError(f"Convolution weights must be rank 4 or 5, got shape {weights.shape}")


def ensure_finite(name: str, x: Tensor) -> Tensor:
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return x


def _check_same(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{op}: operand shapes {a.shape} and {b.shape} differ")


# Convolution

def _validate_conv(x: Tensor, weights: Tensor, bias: Optional[Tensor], spec: Optional[ConvSpec], spatial: int) -> ConvSpec:
    if weights.ndim != spatial + 2:
        raise ShapeMismatchError(f"Expected rank-{spatial + 2} weights, got shape {weights.shape}")
    derived = ConvSpec.from_weights(weights)
    if spec is not None and spec.weight_shape != derived.weight_shape:
        raise ShapeMismatchError(f"Weights {weights.shape} do not match spec {spec.weight_shape}")
    if x.ndim < spatial + 1:
        raise ShapeMismatchError(f"Input of shape {x.shape} has too few axes for a {spatial}-D convolution")
    if x.shape[-1] != derived.in_channels:
        raise ShapeMismatchError(f"Input has {x.shape[-1]} channels, weights expect {derived.in_channels}")
    if bias is not None and bias.shape != (derived.out_channels,):
        raise ShapeMismatchError(f"Bias shape {bias.shape} does not match {derived.out_channels} output channels")
    return derived


def _windows(x: Tensor, extents: Sequence[int]) -> Tensor:
    """Zero-pad and expose every kernel window: (N, *S, C) -> (N, *S, C, *K)"""
    k = len(extents)
    pad = [(0, 0)] + [(e // 2, e // 2) for e in extents] + [(0, 0)]
    padded = np.pad(x, pad)
    return sliding_window_view(padded, tuple(extents), axis=tuple(range(1, k + 1)))


def _conv_same(x: Tensor, weights: Tensor, spatial: int) -> Tensor:
    extents = weights.shape[:spatial]
    lead = x.shape[: x.ndim - spatial - 1]
    flat = x.reshape((-1,) + x.shape[x.ndim - spatial - 1:])
    win = _windows(flat, extents)
    # contraction order (C, k...) is fixed so reruns reduce identically
    kernel = np.moveaxis(weights, spatial, 0)
    out = np.tensordot(win, kernel, axes=(list(range(spatial + 1, 2 * spatial + 2)), list(range(spatial + 1))))
    return np.ascontiguousarray(out.reshape(lead + out.shape[1:]))


def _conv_same_backward(x: Tensor, weights: Tensor, grad_out: Tensor, spatial: int) -> Tuple[Tensor, Tensor, Tensor]:
    extents = weights.shape[:spatial]
    cout = weights.shape[-1]
    expected = x.shape[:-1] + (cout,)
    if grad_out.shape != expected:
        raise ShapeMismatchError(f"grad_out shape {grad_out.shape} does not match forward output {expected}")

    flat_x = x.reshape((-1,) + x.shape[x.ndim - spatial - 1:])
    flat_g = grad_out.reshape((-1,) + grad_out.shape[grad_out.ndim - spatial - 1:])
    win = _windows(flat_x, extents)

    batch_axes = list(range(spatial + 1))
    grad_w = np.tensordot(win, flat_g, axes=(batch_axes, batch_axes))  # (C, *K, Cout)
    grad_w = np.ascontiguousarray(np.moveaxis(grad_w, 0, spatial))
    grad_b = flat_g.reshape(-1, cout).sum(axis=0)

    # input gradient: same-convolution of grad_out with the spatially flipped,
    # channel-transposed kernel
    flipped = np.flip(weights, axis=tuple(range(spatial))).swapaxes(spatial, spatial + 1)
    grad_x = _conv_same(grad_out, np.ascontiguousarray(flipped), spatial)
    return grad_x, grad_w, grad_b


def conv2d_forward(x: Tensor, weights: Tensor, bias: Optional[Tensor] = None, spec: Optional[ConvSpec] = None) -> Tensor:
    """Same-padded 2-D convolution over (..., H, W, Cin) with weights (kh, kw, Cin, Cout)"""
    _validate_conv(x, weights, bias, spec, spatial=2)
    out = _conv_same(x, weights, spatial=2)
    if bias is not None:
        out += bias
    return ensure_finite("conv2d output", out)


def conv2d_backward(x: Tensor, weights: Tensor, grad_out: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
    """Returns (grad_input, grad_weights, grad_bias)"""
    _validate_conv(x, weights, None, None, spatial=2)
    return _conv_same_backward(x, weights, grad_out, spatial=2)


def conv3d_forward(x: Tensor, weights: Tensor, bias: Optional[Tensor] = None, spec: Optional[ConvSpec] = None) -> Tensor:
    """Same-padded 3-D convolution over (..., T, H, W, Cin) with weights (kd, kh, kw, Cin, Cout)"""
    _validate_conv(x, weights, bias, spec, spatial=3)
    out = _conv_same(x, weights, spatial=3)
    if bias is not None:
        out += bias
    return ensure_finite("conv3d output", out)


def conv3d_backward(x: Tensor, weights: Tensor, grad_out: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
    _validate_conv(x, weights, None, None, spatial=3)
    return _conv_same_backward(x, weights, grad_out, spatial=3)


# Elementwise

def sigmoid(x: Tensor) -> Tensor:
    return expit(x)


def sigmoid_backward(y: Tensor, grad_out: Tensor) -> Tensor:
    """Takes the forward output y = sigmoid(x)"""
    _check_same("sigmoid_backward", y, grad_out)
    return grad_out * y * (1.0 - y)


def tanh(x: Tensor) -> Tensor:
    return np.tanh(x)


def tanh_backward(y: Tensor, grad_out: Tensor) -> Tensor:
    """Takes the forward output y = tanh(x)"""
    _check_same("tanh_backward", y, grad_out)
    return grad_out * (1.0 - y * y)


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    _check_same("hadamard", a, b)
    return a * b


def hadamard_backward(a: Tensor, b: Tensor, grad_out: Tensor) -> Tuple[Tensor, Tensor]:
    _check_same("hadamard_backward", a, grad_out)
    return grad_out * b, grad_out * a


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same("add", a, b)
    return a + b


def add_backward(grad_out: Tensor) -> Tuple[Tensor, Tensor]:
    return grad_out, grad_out


def scale(x: Tensor, factor: float) -> Tensor:
    return x * factor


def scale_backward(grad_out: Tensor, factor: float) -> Tensor:
    return grad_out * factor


# Reductions

def global_norm(tensors: Iterable[Tensor]) -> float:
    """l2 norm of every element of every tensor, accumulated in binary64"""
    total = 0.0
    for t in tensors:
        flat = np.asarray(t, dtype=np.float64).ravel()
        total += float(np.dot(flat, flat))
    return float(np.sqrt(total))
