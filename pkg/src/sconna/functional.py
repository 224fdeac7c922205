"""Bit-exact functional evaluation of a small quantized CNN through the SC datapath."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sc_core
from .workload.conv import flatten_layer, split_vectors
from .workload.spec import LayerSpec, NetworkSpec


def toy_network() -> NetworkSpec:
    """8x8x3 input -> conv3x3/8 -> conv3x3/16 stride 2 -> fc 10."""
    return NetworkSpec("toy3", (
        LayerSpec("conv1", "conv", 8, 8, 3, 3, 8, 1, 1),
        LayerSpec("conv2", "conv", 8, 8, 8, 3, 16, 2, 1),
        LayerSpec("fc", "fully_connected", 1, 1, 4 * 4 * 16, 1, 10),
    ))


def _kernel_shape(layer: LayerSpec):
    if layer.kind == "fully_connected":
        return (layer.L, layer.D)
    if layer.kind == "depthwise_conv":
        return (layer.D, layer.K, layer.K)
    return (layer.L, layer.K, layer.K, layer.D)


@dataclass(frozen=True)
class ToyModel:
    network: NetworkSpec
    weights: tuple
    input: np.ndarray
    B: int = 8

    @classmethod
    def build(cls, seed: int = 0, B: int = 8) -> "ToyModel":
        """Signed B-bit weights and unsigned B-bit activations."""
        rng = np.random.default_rng(seed)
        L = 2 ** B
        net = toy_network()
        ws = tuple(rng.integers(-(L - 1), L, _kernel_shape(l)) for l in net.layers)
        x = rng.integers(0, L, (8, 8, 3))
        return cls(net, ws, x, B)


def requantize(acc: np.ndarray, B: int) -> np.ndarray:
    """ReLU then shift the layer's integer outputs back into B-bit range."""
    acc = np.maximum(acc, 0)
    top = int(acc.max())
    if top == 0:
        return acc
    shift = max(0, top.bit_length() - B)
    return np.minimum(acc >> shift, 2 ** B - 1)


@dataclass
class NeuronCheck:
    layer: str
    neurons: int
    S: int
    bound: float
    max_abs_error: float
    violations: int

    @property
    def ok(self) -> bool:
        return self.violations == 0


def run_toy(model: ToyModel, N: int = sc_core.DEFAULT_VDPE_SIZE, bit_exact: bool = True):
    """Compare every neuron of the SC path with the exact integer forward pass.

    Each layer sees the exact pass's (requantized) input so rounding does not
    compound. A neuron passes when |sc - exact/2^B| <= 0.5 * S counts.
    """
    prec = sc_core.PrecisionConfig(model.B)
    L = prec.stream_length
    lut = sc_core.build_lut(prec)
    x = model.input
    checks = []
    for layer, w in zip(model.network.layers, model.weights):
        worst, bad, count = 0.0, 0, 0
        exact_out = np.zeros((layer.H_out, layer.W_out, layer.L), dtype=np.int64)
        for pair in flatten_layer(layer, x, w):
            exact = int(np.dot(pair.inputs, pair.kernel))
            exact_out[pair.coord] = exact
            divs, dkvs = split_vectors(pair.inputs, pair.kernel, N)
            got = sum(sc_core.vdpe_dot(d, k, prec, lut=lut, size=N, bit_exact=bit_exact)
                      for d, k in zip(divs, dkvs))
            err = abs(got - exact / L)
            worst = max(worst, err)
            bad += err > 0.5 * layer.S
            count += 1
        checks.append(NeuronCheck(layer.name, count, layer.S, 0.5 * layer.S, worst, bad))
        x = requantize(exact_out, model.B)
        if layer.kind != "fully_connected":
            x = x.reshape(layer.H_out, layer.W_out, layer.L)
    return checks
