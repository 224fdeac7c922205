"""CNN layer / network descriptors and their JSON form."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

LAYER_KINDS = ("conv", "depthwise_conv", "fully_connected", "pool", "activation")
VDP_KINDS = ("conv", "depthwise_conv", "fully_connected")
LAYER_FIELDS = ("name", "kind", "H", "W", "D", "K", "L", "stride", "padding")
NETWORK_FIELDS = ("name", "layers")


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    name: str
    kind: str
    H: int
    W: int
    D: int
    K: int
    L: int
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise SchemaError(f"{self.name}: unknown layer kind {self.kind!r}")
        for f in ("H", "W", "D", "K", "L", "stride"):
            v = getattr(self, f)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise SchemaError(f"{self.name}: {f} must be a positive integer, got {v!r}")
        if not isinstance(self.padding, int) or self.padding < 0:
            raise SchemaError(f"{self.name}: padding must be a non-negative integer")
        if self.kind == "fully_connected" and (self.K != 1 or self.H != 1 or self.W != 1):
            raise SchemaError(f"{self.name}: fully_connected layers need H = W = K = 1")
        if self.kind in ("depthwise_conv", "pool", "activation") and self.L != self.D:
            raise SchemaError(f"{self.name}: {self.kind} layers need L == D")
        if self.H_out < 1 or self.W_out < 1:
            raise SchemaError(f"{self.name}: kernel {self.K} does not fit input {self.H}x{self.W}")

    @property
    def H_out(self) -> int:
        return (self.H + 2 * self.padding - self.K) // self.stride + 1

    @property
    def W_out(self) -> int:
        return (self.W + 2 * self.padding - self.K) // self.stride + 1

    @property
    def is_vdp(self) -> bool:
        return self.kind in VDP_KINDS

    @property
    def S(self) -> int:
        """Length of one flattened input/kernel vector."""
        if self.kind == "depthwise_conv":
            return self.K * self.K
        if self.kind == "fully_connected":
            return self.D
        return self.K * self.K * self.D

    @property
    def kernel_count(self) -> int:
        return self.L

    @property
    def output_points(self) -> int:
        return self.H_out * self.W_out * self.L

    @property
    def macs(self) -> int:
        return self.output_points * self.S if self.is_vdp else 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    layers: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    def __iter__(self):
        return iter(self.layers)

    def __len__(self):
        return len(self.layers)

    @property
    def vdp_layers(self):
        return [l for l in self.layers if l.is_vdp]

    @property
    def total_kernels(self) -> int:
        return sum(l.kernel_count for l in self.vdp_layers)

    @property
    def macs(self) -> int:
        return sum(l.macs for l in self.layers)

    def chain_breaks(self) -> list[str]:
        """Layer boundaries where the output shape does not feed the next input.

        Branching topologies (residual, inception, channel split) produce breaks
        by construction; strictly sequential networks must return none.
        """
        breaks = []
        for prev, cur in zip(self.layers, self.layers[1:]):
            if cur.kind == "fully_connected":
                ok = cur.D in (prev.L, prev.H_out * prev.W_out * prev.L)
            else:
                ok = (cur.H, cur.W, cur.D) == (prev.H_out, prev.W_out, prev.L)
            if not ok:
                breaks.append(f"{prev.name} -> {cur.name}")
        return breaks

    def to_dict(self) -> dict:
        return {"name": self.name, "layers": [l.to_dict() for l in self.layers]}


def layer_from_dict(d: dict) -> LayerSpec:
    if not isinstance(d, dict):
        raise SchemaError(f"layer entry must be an object, got {type(d).__name__}")
    unknown = set(d) - set(LAYER_FIELDS)
    if unknown:
        raise SchemaError(f"unknown layer fields: {sorted(unknown)}")
    missing = set(LAYER_FIELDS) - {"padding"} - set(d)
    if missing:
        raise SchemaError(f"layer {d.get('name', '?')!r} missing fields: {sorted(missing)}")
    if not isinstance(d["name"], str):
        raise SchemaError("layer name must be a string")
    return LayerSpec(**d)


def network_from_dict(d: dict) -> NetworkSpec:
    if not isinstance(d, dict):
        raise SchemaError("network descriptor must be a JSON object")
    unknown = set(d) - set(NETWORK_FIELDS)
    if unknown:
        raise SchemaError(f"unknown network fields: {sorted(unknown)}")
    if set(NETWORK_FIELDS) - set(d):
        raise SchemaError("network descriptor needs 'name' and 'layers'")
    if not isinstance(d["layers"], list):
        raise SchemaError("'layers' must be a list")
    return NetworkSpec(d["name"], tuple(layer_from_dict(l) for l in d["layers"]))


def load_network(path) -> NetworkSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    return network_from_dict(data)


def save_network(net: NetworkSpec, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(net.to_dict(), indent=1) + "\n")
    return path
