"""Component inventories and power/area/latency cost models of the accelerators.

Three families are modeled: SCONNA (stochastic optical VDPCs), MAM
(HOLYLIGHT-style, one shared DIV per VDPC) and AMM (DEAPCNN-style, one DIV
per VDPE). Peripheral costs default to the reference per-component values.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields, replace

FAMILIES = ("SCONNA", "MAM", "AMM")

# No explicit system clock is given; cycle-denominated latencies use the
# recurring 0.78 ns peripheral quantum.
CYCLE_NS = 0.78
LASER_POWER_MW = 10.0


@dataclass(frozen=True)
class ComponentCost:
    power_mw: float
    area_mm2: float
    latency_ns: float | None = None
    latency_cycles: int | None = None

    @property
    def latency(self) -> float:
        if self.latency_cycles is not None:
            return self.latency_cycles * CYCLE_NS
        return self.latency_ns or 0.0


def _default_costs():
    return {
        "reduction_network": ComponentCost(0.05, 3.0e-5, 3.125),
        "activation_unit": ComponentCost(0.52, 6.0e-4, 0.78),
        "io_interface": ComponentCost(140.18, 2.44e-2, 0.78),
        "pooling_unit": ComponentCost(0.4, 2.4e-4, 3.125),
        "edram": ComponentCost(41.1, 0.166, 1.56),
        "bus": ComponentCost(7.0, 9.0e-3, latency_cycles=5),
        "router": ComponentCost(42.0, 0.151, latency_cycles=2),
        "dac": ComponentCost(30.0, 0.034, 0.78),
        "adc_baseline": ComponentCost(29.0, 0.103, 0.78),
        "adc_sconna": ComponentCost(2.55, 0.002, 0.78),
        "serializer_per_osm": ComponentCost(5.0, 5.9, 0.03),
        "lut_per_osm": ComponentCost(0.06, 0.09, 2.0),
        "pca": ComponentCost(0.02, 0.28, None),
    }


@dataclass(frozen=True)
class PeripheralCosts:
    components: dict = field(default_factory=_default_costs)

    def __post_init__(self):
        for name, c in self.components.items():
            if min(c.power_mw, c.area_mm2) < 0 or (c.latency_ns or 0) < 0:
                raise ValueError(f"{name}: costs must be non-negative")

    def __getitem__(self, name) -> ComponentCost:
        return self.components[name]

    def with_overrides(self, **changes) -> "PeripheralCosts":
        comps = dict(self.components)
        for name, vals in changes.items():
            if name not in comps:
                raise KeyError(f"unknown component {name!r}")
            comps[name] = replace(comps[name], **vals)
        return PeripheralCosts(comps)

    def to_dict(self) -> dict:
        return {k: asdict(v) for k, v in self.components.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "PeripheralCosts":
        base = _default_costs()
        for k, v in d.items():
            if k not in base:
                raise ValueError(f"unknown component {k!r}")
            base[k] = ComponentCost(**v)
        return cls(base)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AcceleratorConfig:
    """One accelerator instance.

    ``vdpe_count`` counts physical VDPEs; baselines that reach the target
    precision by bit slicing spend ``bit_slices_per_result`` of them per result.
    ``peripheral_sets_per_vdpe`` (SCONNA only) is the number of LUT+serializer
    sets instantiated per VDPE; see the sconna-paper preset for its value.
    """

    name: str
    family: str
    N: int
    M: int
    vdpe_count: int
    B_native: int = 8
    B_target: int = 8
    line_rate: float = 30e9
    vdpcs_per_tile: int = 4
    bit_slices_per_result: int = 1
    peripheral_sets_per_vdpe: float = 0.0

    def __post_init__(self):
        problems = []
        if self.family not in FAMILIES:
            problems.append(f"family={self.family!r} (expected one of {FAMILIES})")
        for f in ("N", "M", "vdpe_count", "vdpcs_per_tile", "bit_slices_per_result",
                  "B_native", "B_target"):
            v = getattr(self, f)
            if not isinstance(v, int) or v < 1:
                problems.append(f"{f}={v!r} (must be a positive integer)")
        if not self.line_rate > 0:
            problems.append(f"line_rate={self.line_rate!r} (must be > 0)")
        if not problems:
            need = math.ceil(self.B_target / self.B_native)
            if self.bit_slices_per_result != need:
                problems.append(f"bit_slices_per_result={self.bit_slices_per_result} "
                                f"(B_native={self.B_native}, B_target={self.B_target} need {need})")
            if self.family == "SCONNA" and self.peripheral_sets_per_vdpe <= 0:
                problems.append("peripheral_sets_per_vdpe must be > 0 for SCONNA")
            if self.family != "SCONNA" and self.peripheral_sets_per_vdpe:
                problems.append("peripheral_sets_per_vdpe only applies to SCONNA")
            if self.vdpe_count < self.bit_slices_per_result:
                problems.append("vdpe_count smaller than one sliced result group")
        if problems:
            raise ConfigError("invalid accelerator config: " + "; ".join(problems))

    @property
    def vdpc_count(self) -> int:
        return math.ceil(self.vdpe_count / self.M)

    @property
    def tile_count(self) -> int:
        return math.ceil(self.vdpc_count / self.vdpcs_per_tile)

    @property
    def parallel_results(self) -> int:
        """VDP results produced concurrently (sliced VDPE groups)."""
        return self.vdpe_count // self.bit_slices_per_result

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AcceleratorConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown accelerator fields: {sorted(unknown)}")
        if "family" not in d:
            raise ConfigError("accelerator config needs a 'family' discriminator")
        return cls(**d)


PRESETS = {
    "sconna-paper": AcceleratorConfig(
        name="sconna-paper", family="SCONNA", N=176, M=176, vdpe_count=1024,
        B_native=8, line_rate=30e9, bit_slices_per_result=1,
        # One set per OSM (176 per VDPE) would make the reference ~1.1e6 mm^2;
        # 0.5 lands the area-scaled baselines near 3971 / 3172 VDPEs.
        peripheral_sets_per_vdpe=0.5),
    "mam-holylight": AcceleratorConfig(
        name="mam-holylight", family="MAM", N=22, M=22, vdpe_count=3971,
        B_native=4, line_rate=5e9, bit_slices_per_result=2),
    "amm-deapcnn": AcceleratorConfig(
        name="amm-deapcnn", family="AMM", N=16, M=16, vdpe_count=3172,
        B_native=4, line_rate=5e9, bit_slices_per_result=2),
}

SCONNA_REFERENCE_VDPES = 1024


def preset(name: str) -> AcceleratorConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


@dataclass(frozen=True)
class Accelerator:
    config: AcceleratorConfig
    costs: PeripheralCosts
    inventory: dict
    zero_cost: dict

    @property
    def family(self):
        return self.config.family

    @property
    def laser_count(self) -> int:
        return self.inventory.get("laser", 0)


# Components whose area/power is not itemized in the cost table.
_UNCOSTED = {
    "laser": "optical source; power accounted as laser power, no area entry",
    "mrr": "microrings (OAG, filter, modulator banks) carry no itemized area/power",
    "photodetector": "part of the summation element / PCA entries",
}


def build_accelerator(config: AcceleratorConfig, costs: PeripheralCosts | None = None) -> Accelerator:
    costs = costs or PeripheralCosts()
    c = config
    inv = {"laser": c.N * c.vdpc_count}
    if c.family == "SCONNA":
        inv["mrr"] = c.vdpe_count * c.N * 2  # OAG + sign filter per point
        sets = c.peripheral_sets_per_vdpe * c.vdpe_count
        inv["serializer_per_osm"] = sets
        inv["lut_per_osm"] = sets
        inv["pca"] = 2 * c.vdpe_count
        inv["adc_sconna"] = c.vdpe_count
    elif c.family == "MAM":
        inv["mrr"] = c.vdpc_count * c.N + c.vdpe_count * c.N
        inv["dac"] = c.vdpc_count * c.N + c.vdpe_count * c.N
        inv["adc_baseline"] = c.vdpe_count
        inv["photodetector"] = 2 * c.vdpe_count
    else:
        inv["mrr"] = 2 * c.vdpe_count * c.N
        inv["dac"] = 2 * c.vdpe_count * c.N
        inv["adc_baseline"] = c.vdpe_count
        inv["photodetector"] = 2 * c.vdpe_count
    for tile_part in ("reduction_network", "activation_unit", "pooling_unit", "io_interface",
                      "edram", "bus", "router"):
        inv[tile_part] = c.tile_count
    zero = {k: v for k, v in _UNCOSTED.items() if k in inv}
    return Accelerator(c, costs, inv, zero)


@dataclass(frozen=True)
class CostSummary:
    total_area_mm2: float
    total_static_power_mw: float
    laser_power_mw: float
    breakdown: dict
    zero_cost: dict

    @property
    def total_power_mw(self) -> float:
        return self.total_static_power_mw + self.laser_power_mw

    def to_dict(self) -> dict:
        return {
            "total_area_mm2": self.total_area_mm2,
            "total_static_power_mw": self.total_static_power_mw,
            "laser_power_mw": self.laser_power_mw,
            "breakdown": self.breakdown,
            "zero_cost": self.zero_cost,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["component", "count", "power_mw", "area_mm2"])
        for name, b in self.breakdown.items():
            w.writerow([name, repr(b["count"]), repr(b["power_mw"]), repr(b["area_mm2"])])
        return buf.getvalue()


def cost_summary(acc: Accelerator) -> CostSummary:
    breakdown = {}
    for name, count in acc.inventory.items():
        if name in acc.zero_cost:
            continue
        comp = acc.costs[name]
        breakdown[name] = {"count": count, "power_mw": comp.power_mw * count,
                           "area_mm2": comp.area_mm2 * count}
    area = sum(b["area_mm2"] for b in breakdown.values())
    power = sum(b["power_mw"] for b in breakdown.values())
    return CostSummary(area, power, LASER_POWER_MW * acc.laser_count, breakdown, dict(acc.zero_cost))


def instance_area(config: AcceleratorConfig, costs: PeripheralCosts | None = None) -> float:
    return cost_summary(build_accelerator(config, costs)).total_area_mm2


def reference_area(costs: PeripheralCosts | None = None,
                   sconna: AcceleratorConfig | None = None) -> float:
    """Area of the 1024-VDPE SCONNA instance used for area-proportionate scaling."""
    cfg = sconna or PRESETS["sconna-paper"]
    return instance_area(replace(cfg, vdpe_count=SCONNA_REFERENCE_VDPES), costs)


def area_proportionate_scale(baseline: AcceleratorConfig, reference_area_mm2: float,
                             costs: PeripheralCosts | None = None, limit: int = 1 << 24) -> int:
    """Largest VDPE count whose instance area fits the reference area."""
    def area(n):
        # below one sliced group the smallest valid instance stands in
        return instance_area(replace(baseline, vdpe_count=max(n, baseline.bit_slices_per_result)),
                             costs)

    if area(1) > reference_area_mm2:
        warnings.warn("reference area is smaller than one VDPE group; scaled count is 0")
        return 0
    hi = 2
    while hi < limit and area(hi) <= reference_area_mm2:
        hi *= 2
    # area is non-decreasing in the VDPE count; count the ones that fit
    return bisect.bisect_left(range(1, hi + 1), True,
                              key=lambda n: area(n) > reference_area_mm2)


def scaled_baseline(name: str, costs: PeripheralCosts | None = None) -> AcceleratorConfig:
    """Baseline preset with its VDPE count matched to the SCONNA reference area."""
    cfg = preset(name)
    n = area_proportionate_scale(cfg, reference_area(costs), costs)
    return replace(cfg, vdpe_count=n)
