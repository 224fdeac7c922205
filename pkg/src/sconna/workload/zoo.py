"""Builders for the bundled CNN descriptors.

The JSON files under ``data/`` are generated from these functions
(``python -m sconna.workload.zoo``). Layer geometry follows the published
ImageNet definitions at 224x224 input; padding reproduces their "same"
spatial sizes. Branching (residual, inception, channel split) is flattened
into execution order, so these networks are not sequential chains.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .spec import LayerSpec, NetworkSpec, network_from_dict

BUNDLED = ("googlenet", "resnet50", "mobilenet_v2", "shufflenet_v2")


class _Builder:
    def __init__(self, name, H, W, D):
        self.name = name
        self.layers = []
        self.shape = (H, W, D)

    def _add(self, layer: LayerSpec, shape=None):
        self.layers.append(layer)
        return (layer.H_out, layer.W_out, layer.L)

    def conv(self, name, L, K, stride=1, padding=None, shape=None):
        H, W, D = shape or self.shape
        pad = K // 2 if padding is None else padding
        out = self._add(LayerSpec(name, "conv", H, W, D, K, L, stride, pad))
        if shape is None:
            self.shape = out
        return out

    def dw(self, name, K, stride=1, shape=None):
        H, W, D = shape or self.shape
        out = self._add(LayerSpec(name, "depthwise_conv", H, W, D, K, D, stride, K // 2))
        if shape is None:
            self.shape = out
        return out

    def pool(self, name, K, stride, padding=0, shape=None):
        H, W, D = shape or self.shape
        out = self._add(LayerSpec(name, "pool", H, W, D, K, D, stride, padding))
        if shape is None:
            self.shape = out
        return out

    def global_pool(self, name):
        H, W, D = self.shape
        self.shape = self._add(LayerSpec(name, "pool", H, W, D, H, D, 1, 0))

    def fc(self, name, L, D=None):
        H, W, C = self.shape
        D = D or H * W * C
        self.shape = self._add(LayerSpec(name, "fully_connected", 1, 1, D, 1, L, 1, 0))

    def net(self):
        return NetworkSpec(self.name, tuple(self.layers))


def resnet50() -> NetworkSpec:
    """ResNet50 v1 (stride on the first 1x1 of each downsampling block)."""
    b = _Builder("resnet50", 224, 224, 3)
    b.conv("conv1", 64, 7, 2, 3)
    b.pool("pool1", 3, 2, 1)
    stages = [(64, 3, 1), (128, 4, 2), (256, 6, 2), (512, 3, 2)]
    for si, (width, blocks, stride) in enumerate(stages, start=2):
        for bi in range(1, blocks + 1):
            s = stride if bi == 1 else 1
            inp = b.shape
            p = f"conv{si}_block{bi}"
            if bi == 1:
                b.conv(f"{p}_0_conv", 4 * width, 1, s, 0, shape=inp)
            b.conv(f"{p}_1_conv", width, 1, s, 0)
            b.conv(f"{p}_2_conv", width, 3, 1, 1)
            b.conv(f"{p}_3_conv", 4 * width, 1, 1, 0)
    b.global_pool("avg_pool")
    b.fc("predictions", 1000)
    return b.net()


# (1x1, 3x3 reduce, 3x3, 5x5 reduce, 5x5, pool proj)
_INCEPTION = {
    "3a": (64, 96, 128, 16, 32, 32), "3b": (128, 128, 192, 32, 96, 64),
    "4a": (192, 96, 208, 16, 48, 64), "4b": (160, 112, 224, 24, 64, 64),
    "4c": (128, 128, 256, 24, 64, 64), "4d": (112, 144, 288, 32, 64, 64),
    "4e": (256, 160, 320, 32, 128, 128), "5a": (256, 160, 320, 32, 128, 128),
    "5b": (384, 192, 384, 48, 128, 128),
}


def _inception(b: _Builder, tag: str):
    c1, c3r, c3, c5r, c5, cp = _INCEPTION[tag]
    inp = b.shape
    p = f"inception_{tag}"
    b.conv(f"{p}_1x1", c1, 1, shape=inp)
    mid = b.conv(f"{p}_3x3_reduce", c3r, 1, shape=inp)
    b.conv(f"{p}_3x3", c3, 3, shape=mid)
    mid = b.conv(f"{p}_5x5_reduce", c5r, 1, shape=inp)
    b.conv(f"{p}_5x5", c5, 5, shape=mid)
    mid = b.pool(f"{p}_pool", 3, 1, 1, shape=inp)
    b.conv(f"{p}_pool_proj", cp, 1, shape=mid)
    b.shape = (inp[0], inp[1], c1 + c3 + c5 + cp)


def _aux(b: _Builder, tag: str):
    inp = b.shape
    mid = b.pool(f"aux{tag}_pool", 5, 3, shape=inp)
    mid = b.conv(f"aux{tag}_conv", 128, 1, shape=mid)
    b.layers.append(LayerSpec(f"aux{tag}_fc1", "fully_connected", 1, 1,
                              mid[0] * mid[1] * mid[2], 1, 1024))
    b.layers.append(LayerSpec(f"aux{tag}_fc2", "fully_connected", 1, 1, 1024, 1, 1000))
    b.shape = inp


def googlenet() -> NetworkSpec:
    """GoogLeNet (Inception v1) including both auxiliary classifier heads."""
    b = _Builder("googlenet", 224, 224, 3)
    b.conv("conv1", 64, 7, 2, 3)
    b.pool("pool1", 3, 2, 1)
    b.conv("conv2_reduce", 64, 1)
    b.conv("conv2", 192, 3)
    b.pool("pool2", 3, 2, 1)
    _inception(b, "3a")
    _inception(b, "3b")
    b.pool("pool3", 3, 2, 1)
    _inception(b, "4a")
    _aux(b, "1")
    for t in ("4b", "4c", "4d"):
        _inception(b, t)
    _aux(b, "2")
    _inception(b, "4e")
    b.pool("pool4", 3, 2, 1)
    _inception(b, "5a")
    _inception(b, "5b")
    b.global_pool("avg_pool")
    b.fc("predictions", 1000)
    return b.net()


def mobilenet_v2() -> NetworkSpec:
    b = _Builder("mobilenet_v2", 224, 224, 3)
    b.conv("conv1", 32, 3, 2, 1)
    settings = [(1, 16, 1, 1), (6, 24, 2, 2), (6, 32, 3, 2), (6, 64, 4, 2),
                (6, 96, 3, 1), (6, 160, 3, 2), (6, 320, 1, 1)]
    idx = 0
    for t, c, n, s in settings:
        for k in range(n):
            p = f"block_{idx}"
            if t != 1:
                b.conv(f"{p}_expand", b.shape[2] * t, 1, 1, 0)
            b.dw(f"{p}_depthwise", 3, s if k == 0 else 1)
            b.conv(f"{p}_project", c, 1, 1, 0)
            idx += 1
    b.conv("conv_last", 1280, 1, 1, 0)
    b.global_pool("avg_pool")
    b.fc("predictions", 1000)
    return b.net()


def shufflenet_v2() -> NetworkSpec:
    """ShuffleNet V2 1.0x."""
    b = _Builder("shufflenet_v2", 224, 224, 3)
    b.conv("conv1", 24, 3, 2, 1)
    b.pool("pool1", 3, 2, 1)
    for si, (out_c, repeats) in enumerate([(116, 4), (232, 8), (464, 4)], start=2):
        half = out_c // 2
        for u in range(1, repeats + 1):
            p = f"stage{si}_unit{u}"
            inp = b.shape
            if u == 1:
                mid = b.dw(f"{p}_b1_dw", 3, 2, shape=inp)
                b.conv(f"{p}_b1_pw", half, 1, 1, 0, shape=mid)
                mid = b.conv(f"{p}_b2_pw1", half, 1, 1, 0, shape=inp)
                mid = b.dw(f"{p}_b2_dw", 3, 2, shape=mid)
                out = b.conv(f"{p}_b2_pw2", half, 1, 1, 0, shape=mid)
            else:
                split = (inp[0], inp[1], half)
                mid = b.conv(f"{p}_b2_pw1", half, 1, 1, 0, shape=split)
                mid = b.dw(f"{p}_b2_dw", 3, 1, shape=mid)
                out = b.conv(f"{p}_b2_pw2", half, 1, 1, 0, shape=mid)
            b.shape = (out[0], out[1], out_c)
    b.conv("conv5", 1024, 1, 1, 0)
    b.global_pool("avg_pool")
    b.fc("predictions", 1000)
    return b.net()


BUILDERS = {
    "googlenet": googlenet,
    "resnet50": resnet50,
    "mobilenet_v2": mobilenet_v2,
    "shufflenet_v2": shufflenet_v2,
}


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("sconna.workload") / "data" / f"{name}.json"))


def load_bundled(name: str) -> NetworkSpec:
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled network {name!r}; available: {', '.join(BUNDLED)}")
    return network_from_dict(json.loads(bundled_path(name).read_text()))


def write_bundled(out_dir=None):
    out_dir = Path(out_dir) if out_dir else bundled_path("x").parent
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, fn in BUILDERS.items():
        p = out_dir / f"{name}.json"
        p.write_text(json.dumps(fn().to_dict(), indent=1) + "\n")
        paths.append(p)
    return paths


if __name__ == "__main__":
    for p in write_bundled():
        print(p)
