"""Transaction-level performance model: weight-stationary mapping, per-layer
latency and energy, FPS / FPS/W / FPS/W/mm^2 and cross-accelerator comparison.

Timing model (all times in ns):

* a wave is one slot on every VDPE group; its pipeline latency is
  fetch + launch + stream + ADC, where SCONNA fetches from the buffer and the
  LUT (2 ns each) and streams 2^B bits at BR, and baselines fetch from the
  buffer, launch through a DAC and hold one symbol for 1/DR;
* consecutive waves overlap, so a layer of W waves costs (W-1)*II + fill with
  II the slowest pipeline stage;
* psum reduction overlaps with later waves; only the last tree
  (depth * 3.125 ns, one extra level to merge bit slices) is exposed;
* each layer pays one eDRAM weight load, one activation step and one bus +
  router transfer at its boundary; pooling windows are processed by one
  pooling unit per tile.

Energy: tile infrastructure draws its power for the whole run, datapath
converters/serializers/LUTs/PCAs and the lasers while a VDP layer computes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .archmodel import Accelerator, PeripheralCosts, build_accelerator, cost_summary
from .workload.conv import decompose, split_vectors
from .workload.spec import LayerSpec, NetworkSpec

TILE_COMPONENTS = ("reduction_network", "activation_unit", "pooling_unit", "io_interface",
                   "edram", "bus", "router")
BUFFER_FETCH_NS = 2.0


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSchedule:
    name: str
    kind: str
    S: int
    tasks: int
    C: int
    parallel: int
    waves: int
    tree_depth: int
    positions: int

    @property
    def segments(self) -> int:
        return self.tasks * self.C

    @property
    def psum_adds(self) -> int:
        return self.tasks * (self.C - 1)

    @property
    def dkv_count(self) -> int:
        return (self.tasks // self.positions) * self.C

    def slot(self, k: int) -> tuple[int, int]:
        """(wave, vdpe group) of the k-th segment in DKV-major order."""
        return k % self.waves, k // self.waves

    def segment(self, k: int) -> tuple[int, int, int]:
        """(dkv index, output position, segment index) of slot k.

        Segments are ordered by DKV (kernel, segment) then output position, and
        each VDPE group owns a contiguous run, so its weights change only at
        DKV boundaries.
        """
        dkv, pos = divmod(k, self.positions)
        return dkv, pos, dkv % self.C

    def weight_loads(self) -> int:
        """Number of (VDPE group, DKV) residencies over the layer."""
        starts = np.arange(0, self.segments, self.waves, dtype=np.int64)
        ends = np.minimum(starts + self.waves, self.segments) - 1
        return int(np.sum(ends // self.positions - starts // self.positions + 1))


@dataclass(frozen=True)
class Schedule:
    network: str
    accelerator: str
    N: int
    layers: tuple

    def __iter__(self):
        return iter(self.layers)

    @property
    def total_waves(self) -> int:
        return sum(l.waves for l in self.layers if l.waves)


def _layer_geometry(layer: LayerSpec):
    positions = layer.H_out * layer.W_out
    return positions, positions * layer.L


def map_network(network: NetworkSpec, instance: Accelerator, N: int | None = None) -> Schedule:
    cfg = instance.config
    N = cfg.N if N is None else N
    if not 1 <= N <= cfg.N:
        raise MappingError(f"N={N} outside 1..{cfg.N} (configured VDPE size)")
    P = cfg.parallel_results
    out = []
    for layer in network:
        positions, tasks = _layer_geometry(layer)
        if not layer.is_vdp:
            out.append(LayerSchedule(layer.name, layer.kind, 0, tasks, 0, P, 0, 0, positions))
            continue
        task = decompose(layer.S, N)
        waves = -(-tasks * task.C // P)
        out.append(LayerSchedule(layer.name, layer.kind, layer.S, tasks, task.C, P, waves,
                                 task.psum_tree_depth, positions))
    return Schedule(network.name, cfg.name, N, tuple(out))


@dataclass(frozen=True)
class Timing:
    fetch: float
    launch: float
    stream: float
    adc: float

    @property
    def fill(self) -> float:
        return self.fetch + self.launch + self.stream + self.adc

    @property
    def interval(self) -> float:
        return max(self.fetch, self.launch, self.stream, self.adc)


def wave_timing(instance: Accelerator) -> Timing:
    cfg, c = instance.config, instance.costs
    if cfg.family == "SCONNA":
        return Timing(BUFFER_FETCH_NS + c["lut_per_osm"].latency, c["serializer_per_osm"].latency,
                      2 ** cfg.B_native / cfg.line_rate * 1e9, c["adc_sconna"].latency)
    return Timing(BUFFER_FETCH_NS, c["dac"].latency, 1.0 / cfg.line_rate * 1e9,
                  c["adc_baseline"].latency)


@dataclass
class LayerMetrics:
    name: str
    kind: str
    waves: int
    psums: int
    adc_conversions: int
    weight_loads: int
    compute_ns: float
    latency_ns: float
    energy_nj: float


@dataclass
class SimMetrics:
    network: str
    accelerator: str
    layers: list
    latency_s: float
    energy_j: float
    area_mm2: float
    fps: float | None
    fps_per_watt: float | None
    fps_per_watt_per_mm2: float | None
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def average_power_w(self) -> float | None:
        return self.energy_j / self.latency_s if self.latency_s > 0 else None

    def summary(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "layers"}
        d["average_power_w"] = self.average_power_w
        return d

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=1, sort_keys=True)

    def layer_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["layer", "kind", "waves", "latency_ns", "energy_nj", "psums",
                    "adc_conversions", "weight_loads"])
        for l in self.layers:
            w.writerow([l.name, l.kind, l.waves, repr(l.latency_ns), repr(l.energy_nj),
                        l.psums, l.adc_conversions, l.weight_loads])
        return buf.getvalue()


def _power_groups(instance: Accelerator):
    """(tile infrastructure mW, datapath mW, laser mW)."""
    summ = cost_summary(instance)
    tile = sum(b["power_mw"] for k, b in summ.breakdown.items() if k in TILE_COMPONENTS)
    data = summ.total_static_power_mw - tile
    return tile, data, summ.laser_power_mw, summ.total_area_mm2


def simulate(network: NetworkSpec, instance: Accelerator, schedule: Schedule | None = None,
             costs: PeripheralCosts | None = None, bit_exact_layers=(), seed: int = 0,
             bit_exact_points: int = 64) -> SimMetrics:
    if costs is not None and costs is not instance.costs:
        instance = build_accelerator(instance.config, costs)
    schedule = schedule or map_network(network, instance)
    if len(schedule.layers) != len(network.layers):
        raise MappingError("schedule does not match network")
    cfg, c = instance.config, instance.costs
    timing = wave_timing(instance)
    tile_mw, data_mw, laser_mw, area = _power_groups(instance)
    red = c["reduction_network"].latency
    boundary = c["bus"].latency + c["router"].latency
    slices = cfg.bit_slices_per_result

    layers = []
    for spec, ls in zip(network.layers, schedule.layers):
        if spec.kind == "pool":
            windows = -(-ls.positions // cfg.tile_count)
            latency = windows * c["pooling_unit"].latency + boundary
            layers.append(LayerMetrics(spec.name, spec.kind, 0, 0, 0, 0, 0.0, latency,
                                       tile_mw * latency * 1e-3))
            continue
        if spec.kind == "activation":
            latency = c["activation_unit"].latency + boundary
            layers.append(LayerMetrics(spec.name, spec.kind, 0, 0, 0, 0, 0.0, latency,
                                       tile_mw * latency * 1e-3))
            continue
        compute = (ls.waves - 1) * timing.interval + timing.fill
        tail = (ls.tree_depth + (1 if slices > 1 else 0)) * red
        latency = (c["edram"].latency + compute + tail + c["activation_unit"].latency
                   + boundary)
        energy_pj = tile_mw * latency + (data_mw + laser_mw) * compute
        layers.append(LayerMetrics(spec.name, spec.kind, ls.waves, ls.psum_adds,
                                   ls.segments * slices, ls.weight_loads(), compute,
                                   latency, energy_pj * 1e-3))

    diagnostics = {
        "waves": sum(l.waves for l in layers),
        "psums": sum(l.psums for l in layers),
        "adc_conversions": sum(l.adc_conversions for l in layers),
        "weight_loads": sum(l.weight_loads for l in layers),
        "wave_interval_ns": timing.interval,
        "wave_fill_ns": timing.fill,
    }
    if bit_exact_layers:
        diagnostics["bit_exact"] = cross_validate(network, instance, bit_exact_layers,
                                                  seed=seed, points=bit_exact_points)
    latency_s = math.fsum(l.latency_ns for l in layers) * 1e-9
    energy_j = math.fsum(l.energy_nj for l in layers) * 1e-9
    if not layers:
        return SimMetrics(network.name, cfg.name, [], 0.0, 0.0, area, None, None, None,
                          diagnostics, error="empty network: fps undefined")
    fps = 1.0 / latency_s
    fpw = fps / (energy_j / latency_s)
    return SimMetrics(network.name, cfg.name, layers, latency_s, energy_j, area, fps, fpw,
                      fpw / area, diagnostics)


def cross_validate(network: NetworkSpec, instance: Accelerator, layer_names, seed: int = 0,
                   points: int = 64) -> dict:
    """Run sampled output points of selected layers through the bit-level SC path.

    Returns, per layer, the largest gap between the bit-exact and the analytic
    (LUT popcount) results, and the largest deviation from the exact dot
    product in charge counts next to the per-term rounding bound.
    """
    from . import sc_core

    if instance.family != "SCONNA":
        raise MappingError("bit-exact cross-validation needs a SCONNA instance")
    prec = sc_core.PrecisionConfig(instance.config.B_native)
    L = prec.stream_length
    lut = sc_core.build_lut(prec)
    by_name = {l.name: l for l in network.vdp_layers}
    rng = np.random.default_rng(seed)
    report = {}
    for name in layer_names:
        if name not in by_name:
            raise MappingError(f"no VDP layer named {name!r}")
        layer = by_name[name]
        gap = dev = 0.0
        for _ in range(points):
            x = rng.integers(0, L, layer.S)
            w = rng.integers(-(L - 1), L, layer.S)
            divs, dkvs = split_vectors(x, w, instance.config.N)
            bit = sum(sc_core.vdpe_dot(d, k, prec, lut=lut, bit_exact=True,
                                       size=instance.config.N) for d, k in zip(divs, dkvs))
            fast = sum(sc_core.vdpe_dot(d, k, prec, lut=lut, size=instance.config.N)
                       for d, k in zip(divs, dkvs))
            gap = max(gap, abs(bit - fast))
            dev = max(dev, abs(bit - int(np.dot(x, w)) / L))
        report[name] = {"points": points, "max_bit_vs_analytic": gap,
                        "max_abs_error_counts": dev, "rounding_bound": 0.5 * layer.S}
    return report


@dataclass
class Comparison:
    reference: str
    metrics: dict  # (network, accelerator) -> SimMetrics
    networks: list
    accelerators: list

    METRICS = ("fps", "fps_per_watt", "fps_per_watt_per_mm2")

    def ratio(self, network: str, other: str, metric: str = "fps") -> float:
        """metric(reference) / metric(other) on one network."""
        return (getattr(self.metrics[network, self.reference], metric)
                / getattr(self.metrics[network, other], metric))

    def gmean_ratio(self, other: str, metric: str = "fps") -> float:
        logs = [math.log(self.ratio(n, other, metric)) for n in self.networks]
        return math.exp(math.fsum(logs) / len(logs))

    def long_rows(self):
        for n in self.networks:
            for a in self.accelerators:
                m = self.metrics[n, a]
                for k in self.METRICS:
                    yield n, a, k, getattr(m, k)

    def long_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["network", "accelerator", "metric", "value"])
        for n, a, k, v in self.long_rows():
            w.writerow([n, a, k, repr(v)])
        return buf.getvalue()

    def ratio_table(self) -> dict:
        out = {}
        for a in self.accelerators:
            if a == self.reference:
                continue
            out[a] = {k: {"per_network": {n: self.ratio(n, a, k) for n in self.networks},
                          "gmean": self.gmean_ratio(a, k)} for k in self.METRICS}
        return {"reference": self.reference, "ratios": out}

    def ratio_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["reference", "baseline", "metric", "network", "ratio"])
        for a, block in self.ratio_table()["ratios"].items():
            for k, r in block.items():
                for n, v in r["per_network"].items():
                    w.writerow([self.reference, a, k, n, repr(v)])
                w.writerow([self.reference, a, k, "gmean", repr(r["gmean"])])
        return buf.getvalue()


def compare(networks, instances, reference: str | None = None) -> Comparison:
    """Simulate every network on every instance; ratios are reference / other."""
    networks = list(networks)
    instances = list(instances)
    if not networks:
        raise ValueError("compare needs at least one network")
    if len(instances) < 2:
        raise ValueError("compare needs at least two accelerator instances")
    names = [i.config.name for i in instances]
    if len(set(names)) != len(names):
        names = [f"{n}#{k}" for k, n in enumerate(names)]
    metrics = {}
    for net in networks:
        for name, inst in zip(names, instances):
            m = simulate(net, inst)
            if m.error:
                raise ValueError(f"{net.name} on {name}: {m.error}")
            metrics[net.name, name] = m
    return Comparison(reference or names[0], metrics, [n.name for n in networks], names)
