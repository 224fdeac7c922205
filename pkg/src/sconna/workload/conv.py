"""Convolution as vector dot products: exact reference, flattening, decomposition."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .spec import LayerSpec, NetworkSpec, VDP_KINDS


def _pad(inp: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return inp
    return np.pad(inp, ((padding, padding), (padding, padding), (0, 0)))


def conv_output_oracle(inp, kernels, stride: int, coord, padding: int = 0) -> int:
    """One output point O(i, j, l) as the explicit triple sum, zero-based indices.

    ``inp`` has shape (H, W, D) and ``kernels`` (L, K, K, D); padding is applied
    to the input before the sum.
    """
    inp = _pad(np.asarray(inp, dtype=np.int64), padding)
    kernels = np.asarray(kernels, dtype=np.int64)
    L, K, K2, D = kernels.shape
    H, W, D_in = inp.shape
    if K != K2 or D != D_in:
        raise ValueError(f"kernel {kernels.shape} incompatible with input {inp.shape}")
    i, j, l = coord
    h_out = (H - K) // stride + 1
    w_out = (W - K) // stride + 1
    if not (0 <= i < h_out and 0 <= j < w_out and 0 <= l < L):
        raise ValueError(f"output index {coord} outside ({h_out}, {w_out}, {L})")
    total = 0
    for d in range(D):
        for q in range(K):
            for r in range(K):
                total += int(kernels[l, r, q, d]) * int(inp[i * stride + r, j * stride + q, d])
    return total


@dataclass(frozen=True)
class FlatPair:
    coord: tuple
    inputs: np.ndarray
    kernel: np.ndarray


def flatten_layer(layer: LayerSpec, inp, kernels) -> Iterator[FlatPair]:
    """Yield one (input vector, kernel vector) pair per output point.

    conv: kernels (L, K, K, D), S = K*K*D. depthwise_conv: kernels (D, K, K),
    channel l of the input meets kernel l only, S = K*K. fully_connected:
    kernels (L, D) and input of D features. Order is (i, j, l) row-major.
    """
    if layer.kind not in VDP_KINDS:
        raise ValueError(f"{layer.name}: cannot flatten a {layer.kind} layer")
    kernels = np.asarray(kernels, dtype=np.int64)
    if layer.kind == "fully_connected":
        x = np.asarray(inp, dtype=np.int64).reshape(layer.D)
        for l in range(layer.L):
            yield FlatPair((0, 0, l), x, kernels[l].reshape(layer.D))
        return
    x = _pad(np.asarray(inp, dtype=np.int64).reshape(layer.H, layer.W, layer.D), layer.padding)
    K, s = layer.K, layer.stride
    for i in range(layer.H_out):
        for j in range(layer.W_out):
            window = x[i * s:i * s + K, j * s:j * s + K, :]
            for l in range(layer.L):
                if layer.kind == "depthwise_conv":
                    yield FlatPair((i, j, l), window[:, :, l].reshape(-1), kernels[l].reshape(-1))
                else:
                    yield FlatPair((i, j, l), window.reshape(-1), kernels[l].reshape(-1))


def layer_forward(layer: LayerSpec, inp, kernels) -> np.ndarray:
    """Exact integer layer output with shape (H_out, W_out, L), via flattening."""
    out = np.zeros((layer.H_out, layer.W_out, layer.L), dtype=np.int64)
    for p in flatten_layer(layer, inp, kernels):
        out[p.coord] = int(np.dot(p.inputs, p.kernel))
    return out


@dataclass(frozen=True)
class VdpTask:
    """Segmentation of one S-point VDP onto N-point VDPEs."""

    s: int
    n: int
    segments: tuple
    coord: tuple | None = None

    @property
    def div_count(self) -> int:
        return len(self.segments)

    C = div_count

    @property
    def psum_tree_depth(self) -> int:
        return math.ceil(math.log2(self.div_count)) if self.div_count > 1 else 0


def decompose(S: int, N: int, coord=None) -> VdpTask:
    if S < 1 or N < 1:
        raise ValueError(f"decompose needs S >= 1 and N >= 1, got S={S}, N={N}")
    C = -(-S // N)
    segs = tuple((k * N, min(S, (k + 1) * N)) for k in range(C))
    return VdpTask(S, N, segs, coord)


def split_vectors(inputs, kernel, N: int):
    """DIVs and DKVs as (C, N) arrays; the short last segment is zero-padded."""
    x = np.asarray(inputs)
    w = np.asarray(kernel)
    if x.shape != w.shape or x.ndim != 1:
        raise ValueError("input and kernel vectors must be 1-D and equal length")
    task = decompose(x.size, N)
    pad = task.div_count * N - x.size
    divs = np.concatenate([x, np.zeros(pad, dtype=x.dtype)]).reshape(task.div_count, N)
    dkvs = np.concatenate([w, np.zeros(pad, dtype=w.dtype)]).reshape(task.div_count, N)
    return divs, dkvs


def tensor_stats(network: NetworkSpec, threshold: int = 44, include_fc: bool = False):
    """Kernel counts (S <= threshold, S > threshold) over the network's VDP layers.

    Convolution kernels (regular and depthwise) are always counted; classifier
    (fully connected) kernels only with ``include_fc``.
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    small = large = 0
    for layer in network.vdp_layers:
        if layer.kind == "fully_connected" and not include_fc:
            continue
        if layer.S <= threshold:
            small += layer.kernel_count
        else:
            large += layer.kernel_count
    return small, large
