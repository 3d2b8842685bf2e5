"""
ConvLSTM cell and layer.

    i = sigmoid(W_xi * x + W_hi * H_prev + b_i)
    f = sigmoid(W_xf * x + W_hf * H_prev + b_f)
    g = tanh(W_xc * x + W_hc * H_prev + b_c)          (candidate cell)
    C = f . C_prev + i . g
    o = sigmoid(W_xo * x + W_ho * H_prev + b_o)
    H = o . tanh(C)

The eight kernels are convolved as one stacked kernel over the channel
concatenation [x, H_prev]; gate order in the stack is i, f, c, o.
"""
from dataclasses import dataclass, fields
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from smogcast.core.exceptions import ShapeMismatchError
from smogcast.core.tensor import (
    Tensor,
    conv2d_backward,
    conv2d_forward,
    ensure_finite,
    sigmoid,
    sigmoid_backward,
    tanh,
    tanh_backward,
)

GATES = ("i", "f", "c", "o")


@dataclass
class ConvLSTMCellParams:
    W_xi: Tensor
    W_xf: Tensor
    W_xc: Tensor
    W_xo: Tensor
    W_hi: Tensor
    W_hf: Tensor
    W_hc: Tensor
    W_ho: Tensor
    b_i: Tensor
    b_f: Tensor
    b_c: Tensor
    b_o: Tensor

    def __post_init__(self):
        kh, kw, cin, cf = self.W_xi.shape
        for gate in GATES:
            wx, wh, b = self.tensor(f"W_x{gate}"), self.tensor(f"W_h{gate}"), self.tensor(f"b_{gate}")
            if wx.shape != (kh, kw, cin, cf) or wh.shape != (kh, kw, cf, cf) or b.shape != (cf,):
                raise ShapeMismatchError(f"Gate {gate} tensors do not share kernel ({kh}, {kw}) and Cin={cin}, Cf={cf}")

    def tensor(self, name: str) -> Tensor:
        return getattr(self, name)

    @property
    def kernel(self) -> Tuple[int, int]:
        return self.W_xi.shape[0], self.W_xi.shape[1]

    @property
    def in_channels(self) -> int:
        return self.W_xi.shape[2]

    @property
    def filters(self) -> int:
        return self.W_xi.shape[3]

    def named_tensors(self) -> Dict[str, Tensor]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def param_count(self) -> int:
        return sum(t.size for t in self.named_tensors().values())

    def stacked(self) -> Tuple[Tensor, Tensor]:
        """Kernel (kh, kw, Cin + Cf, 4 Cf) and bias (4 Cf) in gate order i, f, c, o"""
        wx = np.concatenate([self.tensor(f"W_x{g}") for g in GATES], axis=3)
        wh = np.concatenate([self.tensor(f"W_h{g}") for g in GATES], axis=3)
        bias = np.concatenate([self.tensor(f"b_{g}") for g in GATES])
        return np.concatenate([wx, wh], axis=2), bias

    @classmethod
    def unstack(cls, kernel: Tensor, bias: Tensor, in_channels: int) -> "ConvLSTMCellParams":
        """Inverse of stacked(); used to split stacked gradients back into named tensors"""
        cf = bias.shape[0] // 4
        parts = {}
        for k, gate in enumerate(GATES):
            cols = slice(k * cf, (k + 1) * cf)
            parts[f"W_x{gate}"] = np.ascontiguousarray(kernel[:, :, :in_channels, cols])
            parts[f"W_h{gate}"] = np.ascontiguousarray(kernel[:, :, in_channels:, cols])
            parts[f"b_{gate}"] = np.ascontiguousarray(bias[cols])
        return cls(**parts)


def cell_param_count(kernel: int, in_channels: int, filters: int) -> int:
    return 4 * (kernel * kernel * (in_channels + filters) * filters + filters)


class CellState(NamedTuple):
    H: Tensor
    C: Tensor

    @classmethod
    def zeros(cls, spatial_shape: Tuple[int, ...], filters: int, dtype=np.float32) -> "CellState":
        shape = tuple(spatial_shape) + (filters,)
        return cls(np.zeros(shape, dtype=dtype), np.zeros(shape, dtype=dtype))


@dataclass
class CellCache:
    """Forward intermediates of one timestep, kept for the backward pass"""

    x: Tensor
    prev: CellState
    i: Tensor
    f: Tensor
    g: Tensor
    o: Tensor
    C: Tensor
    tanh_C: Tensor
    kernel: Tensor


def cell_forward(x_t: Tensor, prev: CellState, params: ConvLSTMCellParams) -> Tuple[CellState, CellCache]:
    if x_t.shape[-1] != params.in_channels:
        raise ShapeMismatchError(f"Input has {x_t.shape[-1]} channels, cell expects {params.in_channels}")
    if prev.H.shape[:-1] != x_t.shape[:-1] or prev.H.shape != prev.C.shape or prev.H.shape[-1] != params.filters:
        raise ShapeMismatchError(f"State {prev.H.shape} does not fit input {x_t.shape} with {params.filters} filters")

    kernel, bias = params.stacked()
    z = conv2d_forward(np.concatenate([x_t, prev.H], axis=-1), kernel, bias)
    zi, zf, zc, zo = np.split(z, 4, axis=-1)
    i, f, o = sigmoid(zi), sigmoid(zf), sigmoid(zo)
    g = tanh(zc)
    C = f * prev.C + i * g
    tanh_C = tanh(C)
    H = o * tanh_C
    ensure_finite("ConvLSTM cell state", C)
    ensure_finite("ConvLSTM hidden state", H)
    cache = CellCache(x=x_t, prev=prev, i=i, f=f, g=g, o=o, C=C, tanh_C=tanh_C, kernel=kernel)
    return CellState(H, C), cache


def cell_step(x_t: Tensor, prev: CellState, params: ConvLSTMCellParams) -> CellState:
    state, _ = cell_forward(x_t, prev, params)
    return state


def cell_backward(
    cache: Optional[CellCache], grad_H: Tensor, grad_C: Tensor, params: ConvLSTMCellParams
) -> Tuple[Tensor, CellState, ConvLSTMCellParams]:
    """Returns (grad_x, grad of the previous state, parameter gradients)"""
    if cache is None:
        raise ShapeMismatchError("cell_backward needs the forward cache of this timestep")
    if grad_H.shape != cache.C.shape or grad_C.shape != cache.C.shape:
        raise ShapeMismatchError(f"Upstream gradients must have shape {cache.C.shape}")

    grad_o = grad_H * cache.tanh_C
    grad_C_total = grad_C + tanh_backward(cache.tanh_C, grad_H * cache.o)
    grad_f = grad_C_total * cache.prev.C
    grad_prev_C = grad_C_total * cache.f
    grad_i = grad_C_total * cache.g
    grad_g = grad_C_total * cache.i

    grad_z = np.concatenate(
        [
            sigmoid_backward(cache.i, grad_i),
            sigmoid_backward(cache.f, grad_f),
            tanh_backward(cache.g, grad_g),
            sigmoid_backward(cache.o, grad_o),
        ],
        axis=-1,
    )
    stacked_in = np.concatenate([cache.x, cache.prev.H], axis=-1)
    grad_in, grad_kernel, grad_bias = conv2d_backward(stacked_in, cache.kernel, grad_z)
    cin = params.in_channels
    grads = ConvLSTMCellParams.unstack(grad_kernel, grad_bias, cin)
    return grad_in[..., :cin], CellState(grad_in[..., cin:], grad_prev_C), grads


def _time_axis(seq: Tensor) -> int:
    # (T, H, W, C) or (B, T, H, W, C)
    if seq.ndim not in (4, 5):
        raise ShapeMismatchError(f"Sequences are (T, H, W, C) or (B, T, H, W, C), got shape {seq.shape}")
    return seq.ndim - 4


def layer_forward_cached(seq: Tensor, params: ConvLSTMCellParams) -> Tuple[Tensor, List[CellCache]]:
    axis = _time_axis(seq)
    steps = seq.shape[axis]
    if steps < 1:
        raise ShapeMismatchError("ConvLSTM layer needs at least one timestep")
    frame_shape = np.take(seq, 0, axis=axis).shape
    state = CellState.zeros(frame_shape[:-1], params.filters, dtype=np.result_type(seq, params.W_xi))
    outputs, caches = [], []
    for t in range(steps):
        state, cache = cell_forward(np.take(seq, t, axis=axis), state, params)
        outputs.append(state.H)
        caches.append(cache)
    return np.stack(outputs, axis=axis), caches


def layer_forward(seq: Tensor, params: ConvLSTMCellParams, return_sequences: bool = True) -> Tensor:
    """Runs the cell over the time axis from a zero state"""
    out, _ = layer_forward_cached(seq, params)
    if return_sequences:
        return out
    return np.take(out, out.shape[_time_axis(out)] - 1, axis=_time_axis(out))


def layer_backward(caches: List[CellCache], grad_seq: Tensor, params: ConvLSTMCellParams) -> Tuple[Tensor, ConvLSTMCellParams]:
    """BPTT over a return_sequences layer; returns (grad of the input sequence, summed parameter gradients)"""
    if not caches:
        raise ShapeMismatchError("layer_backward needs the forward caches")
    axis = _time_axis(grad_seq)
    steps = grad_seq.shape[axis]
    if steps != len(caches):
        raise ShapeMismatchError(f"{steps} gradient steps for {len(caches)} cached steps")

    grad_next = CellState(np.zeros_like(caches[0].C), np.zeros_like(caches[0].C))
    totals = {name: np.zeros_like(t) for name, t in params.named_tensors().items()}
    grad_inputs = [None] * steps
    for t in reversed(range(steps)):
        grad_H = np.take(grad_seq, t, axis=axis) + grad_next.H
        grad_x, grad_next, grads = cell_backward(caches[t], grad_H, grad_next.C, params)
        grad_inputs[t] = grad_x
        for name, g in grads.named_tensors().items():
            totals[name] += g
    return np.stack(grad_inputs, axis=axis), ConvLSTMCellParams(**totals)
