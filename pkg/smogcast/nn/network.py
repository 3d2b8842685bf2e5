"""
The forecasting network:

    input -> bn0 -> ConvLSTM(16) -> bn1 -> ConvLSTM(32) -> bn2 -> Conv3D(1) -> sigmoid

Both ConvLSTM layers return full sequences, every convolution is
same-padded, and the head is a 3x3x3 convolution over (time, lat, lon).
Filter counts come from ArchitectureConfig, so tests can build tiny variants.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from smogcast.core.exceptions import DataError, ShapeMismatchError
from smogcast.core.tensor import Tensor, conv3d_backward, conv3d_forward, ensure_finite, sigmoid
from smogcast.metrics import bce, bce_grad_logits
from smogcast.models.api import ArchitectureSummary, LayerRow
from smogcast.models.config import ArchitectureConfig
from smogcast.nn.batchnorm import BatchNormCache, BatchNormParams, Mode, batchnorm_backward, batchnorm_forward
from smogcast.nn.cell import GATES, CellCache, ConvLSTMCellParams, cell_param_count, layer_backward, layer_forward_cached

ParamGrads = Dict[str, Tensor]

RUNNING_STATS = ("running_mean", "running_var")


@dataclass
class NetworkParams:
    architecture: ArchitectureConfig
    bn0: BatchNormParams
    cells: List[ConvLSTMCellParams]
    norms: List[BatchNormParams]
    head_kernel: Tensor
    head_bias: Tensor

    def __post_init__(self):
        if len(self.cells) != len(self.norms):
            raise ShapeMismatchError("Every ConvLSTM layer needs a following batch norm")

    def named_tensors(self) -> Dict[str, Tensor]:
        """Every tensor, running statistics included, in checkpoint order"""
        out: Dict[str, Tensor] = {}

        def add_norm(prefix: str, bn: BatchNormParams):
            for name, t in {**bn.trainable(), **bn.running()}.items():
                out[f"{prefix}.{name}"] = t

        add_norm("bn0", self.bn0)
        for k, (cell, bn) in enumerate(zip(self.cells, self.norms), start=1):
            for name, t in cell.named_tensors().items():
                out[f"cell{k}.{name}"] = t
            add_norm(f"bn{k}", bn)
        out["head.kernel"] = self.head_kernel
        out["head.bias"] = self.head_bias
        return out

    def trainable_names(self) -> List[str]:
        return [name for name in self.named_tensors() if name.rsplit(".", 1)[-1] not in RUNNING_STATS]

    def trainable(self) -> Dict[str, Tensor]:
        tensors = self.named_tensors()
        return {name: tensors[name] for name in self.trainable_names()}

    @property
    def dtype(self) -> np.dtype:
        return self.head_kernel.dtype

    def astype(self, dtype) -> "NetworkParams":
        return NetworkParams.from_tensors(self.architecture, {k: v.astype(dtype) for k, v in self.named_tensors().items()})

    def copy(self) -> "NetworkParams":
        return self.astype(self.dtype)

    @classmethod
    def from_tensors(cls, architecture: ArchitectureConfig, tensors: Dict[str, Tensor]) -> "NetworkParams":
        expected = expected_shapes(architecture)
        if set(tensors) != set(expected):
            missing = sorted(set(expected) - set(tensors))
            extra = sorted(set(tensors) - set(expected))
            raise ShapeMismatchError(f"Tensor set does not match the architecture (missing {missing}, unexpected {extra})")
        for name, shape in expected.items():
            if tuple(tensors[name].shape) != shape:
                raise ShapeMismatchError(f"{name} has shape {tuple(tensors[name].shape)}, architecture expects {shape}")

        def norm(prefix: str) -> BatchNormParams:
            return BatchNormParams(
                gamma=tensors[f"{prefix}.gamma"],
                beta=tensors[f"{prefix}.beta"],
                running_mean=tensors[f"{prefix}.running_mean"],
                running_var=tensors[f"{prefix}.running_var"],
                momentum=architecture.bn_momentum,
                epsilon=architecture.bn_epsilon,
            )

        cells, norms = [], []
        for k in range(1, len(architecture.filters) + 1):
            names = ConvLSTMCellParams.__dataclass_fields__
            cells.append(ConvLSTMCellParams(**{n: tensors[f"cell{k}.{n}"] for n in names}))
            norms.append(norm(f"bn{k}"))
        return cls(architecture, norm("bn0"), cells, norms, tensors["head.kernel"], tensors["head.bias"])


def expected_shapes(arch: ArchitectureConfig) -> Dict[str, Tuple[int, ...]]:
    shapes: Dict[str, Tuple[int, ...]] = {}
    k = arch.kernel_size

    def norm(prefix: str, channels: int):
        for name in ("gamma", "beta") + RUNNING_STATS:
            shapes[f"{prefix}.{name}"] = (channels,)

    norm("bn0", arch.in_channels)
    cin = arch.in_channels
    for idx, cf in enumerate(arch.filters, start=1):
        for gate in GATES:
            shapes[f"cell{idx}.W_x{gate}"] = (k, k, cin, cf)
        for gate in GATES:
            shapes[f"cell{idx}.W_h{gate}"] = (k, k, cf, cf)
        for gate in GATES:
            shapes[f"cell{idx}.b_{gate}"] = (cf,)
        norm(f"bn{idx}", cf)
        cin = cf
    hk = arch.head_kernel
    shapes["head.kernel"] = (hk, hk, hk, cin, 1)
    shapes["head.bias"] = (1,)
    return shapes


def build_network(arch: Optional[ArchitectureConfig] = None, seed: int = 42, dtype=np.float32) -> NetworkParams:
    """
    Fresh parameters: kernels uniform in +-1/sqrt(fan_in), biases zero except
    the forget gate (arch.forget_bias), batch norms at gamma=1, beta=0,
    running mean 0 and running variance 1.
    """
    arch = arch or ArchitectureConfig()
    rng = np.random.default_rng(seed)
    k = arch.kernel_size

    def uniform(shape, fan_in):
        limit = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-limit, limit, size=shape).astype(dtype)

    cells, norms = [], []
    cin = arch.in_channels
    for cf in arch.filters:
        fan_in = k * k * (cin + cf)
        tensors = {}
        for gate in GATES:
            tensors[f"W_x{gate}"] = uniform((k, k, cin, cf), fan_in)
        for gate in GATES:
            tensors[f"W_h{gate}"] = uniform((k, k, cf, cf), fan_in)
        for gate in GATES:
            tensors[f"b_{gate}"] = np.full(cf, arch.forget_bias if gate == "f" else 0.0, dtype=dtype)
        cells.append(ConvLSTMCellParams(**tensors))
        norms.append(BatchNormParams.create(cf, arch.bn_momentum, arch.bn_epsilon, dtype))
        cin = cf

    hk = arch.head_kernel
    head_kernel = uniform((hk, hk, hk, cin, 1), hk * hk * hk * cin)
    return NetworkParams(
        architecture=arch,
        bn0=BatchNormParams.create(arch.in_channels, arch.bn_momentum, arch.bn_epsilon, dtype),
        cells=cells,
        norms=norms,
        head_kernel=head_kernel,
        head_bias=np.zeros(1, dtype=dtype),
    )


@dataclass
class ForwardCache:
    bn0: BatchNormCache
    layers: List[List[CellCache]] = field(default_factory=list)
    norms: List[BatchNormCache] = field(default_factory=list)
    head_input: Optional[Tensor] = None
    output: Optional[Tensor] = None


def network_forward_cached(
    batch: Tensor, params: NetworkParams, mode: Mode = "infer", update_running: bool = True
) -> Tuple[Tensor, ForwardCache]:
    if batch.ndim != 5:
        raise ShapeMismatchError(f"Network input must be (B, T, H, W, C), got shape {batch.shape}")
    if batch.shape[-1] != params.architecture.in_channels:
        raise ShapeMismatchError(f"Network expects {params.architecture.in_channels} channels, got {batch.shape[-1]}")
    batch = batch.astype(params.dtype, copy=False)

    a, bn0_cache = batchnorm_forward(batch, params.bn0, mode, update_running)
    cache = ForwardCache(bn0=bn0_cache)
    for cell, bn in zip(params.cells, params.norms):
        h, caches = layer_forward_cached(a, cell)
        a, bn_cache = batchnorm_forward(h, bn, mode, update_running)
        cache.layers.append(caches)
        cache.norms.append(bn_cache)
    logits = conv3d_forward(a, params.head_kernel, params.head_bias)
    out = sigmoid(logits)
    ensure_finite("network output", out)
    cache.head_input = a
    cache.output = out
    return out, cache


def network_forward(batch: Tensor, params: NetworkParams, mode: Mode = "infer") -> Tensor:
    """(B, T, H, W, C) -> (B, T, H, W, 1) with every value in (0, 1)"""
    out, _ = network_forward_cached(batch, params, mode)
    return out


def network_backward(
    batch: Tensor,
    targets: Tensor,
    params: NetworkParams,
    mode: Mode = "train",
    cache: Optional[ForwardCache] = None,
) -> Tuple[float, ParamGrads]:
    """
    BCE loss and the gradient of every trainable tensor.

    Pass the cache of an earlier forward pass to skip the forward here.
    Without one, the forward run here leaves the running statistics as
    they were.
    """
    if cache is None:
        _, cache = network_forward_cached(batch, params, mode, update_running=False)
    y_hat = cache.output
    targets = np.asarray(targets, dtype=params.dtype)
    if targets.shape != y_hat.shape:
        raise ShapeMismatchError(f"Targets {targets.shape} do not match network output {y_hat.shape}")
    if np.any(targets < 0) or np.any(targets > 1):
        raise DataError("BCE targets must lie in [0, 1]")

    loss = bce(targets, y_hat)
    grads: ParamGrads = {}
    grad_a, grads["head.kernel"], grads["head.bias"] = conv3d_backward(
        cache.head_input, params.head_kernel, bce_grad_logits(targets, y_hat)
    )
    for k in reversed(range(len(params.cells))):
        idx = k + 1
        grad_h, grads[f"bn{idx}.gamma"], grads[f"bn{idx}.beta"] = batchnorm_backward(cache.norms[k], grad_a, params.norms[k])
        grad_a, cell_grads = layer_backward(cache.layers[k], grad_h, params.cells[k])
        for name, g in cell_grads.named_tensors().items():
            grads[f"cell{idx}.{name}"] = g
    _, grads["bn0.gamma"], grads["bn0.beta"] = batchnorm_backward(cache.bn0, grad_a, params.bn0)
    return loss, {name: grads[name] for name in params.trainable_names()}


def layer_summary(arch: ArchitectureConfig, height: Optional[int] = None, width: Optional[int] = None, timesteps: int = 1) -> ArchitectureSummary:
    """Per-layer output shapes and parameter counts, batch axis shown as None"""

    def shape(channels: int) -> List[Optional[int]]:
        return [None, timesteps, height, width, channels]

    rows = [
        LayerRow(name="input", layer_type="InputLayer", output_shape=shape(arch.in_channels), params=0, trainable=0),
        LayerRow(name="bn0", layer_type="BatchNormalization", output_shape=shape(arch.in_channels), params=4 * arch.in_channels, trainable=2 * arch.in_channels),
    ]
    cin = arch.in_channels
    for idx, cf in enumerate(arch.filters, start=1):
        count = cell_param_count(arch.kernel_size, cin, cf)
        rows.append(LayerRow(name=f"conv_lstm{idx}", layer_type="ConvLSTM2D", output_shape=shape(cf), params=count, trainable=count))
        rows.append(LayerRow(name=f"bn{idx}", layer_type="BatchNormalization", output_shape=shape(cf), params=4 * cf, trainable=2 * cf))
        cin = cf
    head = arch.head_kernel ** 3 * cin + 1
    rows.append(LayerRow(name="head", layer_type="Conv3D", output_shape=shape(1), params=head, trainable=head))

    total = sum(r.params for r in rows)
    trainable = sum(r.trainable for r in rows)
    return ArchitectureSummary(layers=rows, total_params=total, trainable_params=trainable, non_trainable_params=total - trainable)


def param_count(params: NetworkParams, height: Optional[int] = None, width: Optional[int] = None) -> ArchitectureSummary:
    """Counts taken from the live tensors; must agree with layer_summary"""
    summary = layer_summary(params.architecture, height, width)
    tensors = params.named_tensors()
    live = {"input": 0, "bn0": sum(tensors[f"bn0.{n}"].size for n in ("gamma", "beta") + RUNNING_STATS)}
    for idx, (cell, bn) in enumerate(zip(params.cells, params.norms), start=1):
        live[f"conv_lstm{idx}"] = cell.param_count()
        live[f"bn{idx}"] = bn.param_count()
    live["head"] = params.head_kernel.size + params.head_bias.size
    for row in summary.layers:
        if live[row.name] != row.params:
            raise ShapeMismatchError(f"Layer {row.name} holds {live[row.name]} values, architecture implies {row.params}")
    return summary
