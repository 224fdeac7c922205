import json
from dataclasses import replace

import pytest

from sconna import archmodel as am


def _tile_free_costs():
    zero = {"power_mw": 0.0, "area_mm2": 0.0}
    return am.PeripheralCosts().with_overrides(**{k: zero for k in (
        "reduction_network", "activation_unit", "io_interface", "pooling_unit", "edram",
        "bus", "router")})


def test_default_cost_values():
    c = am.PeripheralCosts()
    assert (c["edram"].power_mw, c["edram"].area_mm2, c["edram"].latency) == (41.1, 0.166, 1.56)
    assert c["bus"].latency == pytest.approx(5 * 0.78)
    assert c["router"].latency == pytest.approx(2 * 0.78)
    assert c["serializer_per_osm"].area_mm2 == 5.9
    assert c["adc_sconna"].power_mw == 2.55


def test_single_edram_summary():
    acc = am.Accelerator(am.PRESETS["sconna-paper"], am.PeripheralCosts(), {"edram": 1}, {})
    s = am.cost_summary(acc)
    assert s.total_static_power_mw == 41.1
    assert s.total_area_mm2 == 0.166
    assert s.laser_power_mw == 0


def test_sconna_inventory():
    acc = am.build_accelerator(am.preset("sconna-paper"))
    assert acc.config.vdpc_count == 6
    assert acc.config.tile_count == 2
    assert acc.inventory["pca"] == 2048
    assert acc.inventory["adc_sconna"] == 1024
    assert acc.inventory["laser"] == 6 * 176
    s = am.cost_summary(acc)
    assert s.laser_power_mw == 10.0 * 6 * 176
    assert set(s.zero_cost) == {"laser", "mrr"}


def test_totals_equal_breakdown_and_json_csv():
    s = am.cost_summary(am.build_accelerator(am.scaled_baseline("mam-holylight")))
    assert s.total_area_mm2 == pytest.approx(sum(b["area_mm2"] for b in s.breakdown.values()))
    assert json.loads(s.to_json())["total_area_mm2"] == s.total_area_mm2
    rows = s.to_csv().splitlines()
    assert rows[0] == "component,count,power_mw,area_mm2" and len(rows) == len(s.breakdown) + 1


def test_doubling_tiles_doubles_tile_totals():
    cfg = am.preset("amm-deapcnn")
    one = replace(cfg, vdpe_count=64 * 10)
    two = replace(cfg, vdpe_count=64 * 20)
    a = am.cost_summary(am.build_accelerator(one)).breakdown
    b = am.cost_summary(am.build_accelerator(two)).breakdown
    assert two.tile_count == 2 * one.tile_count
    for k in ("edram", "router", "bus", "io_interface"):
        assert b[k]["power_mw"] == 2 * a[k]["power_mw"]
        assert b[k]["area_mm2"] == 2 * a[k]["area_mm2"]


def test_validation_lists_fields():
    with pytest.raises(am.ConfigError) as e:
        am.AcceleratorConfig("x", "MAM", N=0, M=4, vdpe_count=0, B_native=4,
                             bit_slices_per_result=2)
    assert "N=0" in str(e.value) and "vdpe_count=0" in str(e.value)
    with pytest.raises(am.ConfigError):
        am.AcceleratorConfig("x", "MAM", N=4, M=4, vdpe_count=8, B_native=4,
                             bit_slices_per_result=1)
    with pytest.raises(am.ConfigError):
        am.AcceleratorConfig("x", "TPU", N=4, M=4, vdpe_count=8)
    with pytest.raises(am.ConfigError):
        am.AcceleratorConfig.from_dict({"name": "x", "N": 4})


def test_baseline_presets():
    m = am.preset("mam-holylight")
    assert (m.N, m.line_rate, m.bit_slices_per_result) == (22, 5e9, 2)
    assert am.preset("amm-deapcnn").N == 16
    with pytest.raises(KeyError):
        am.preset("nope")


def test_scale_trivial_two_units():
    costs = _tile_free_costs()
    cfg = replace(am.preset("amm-deapcnn"), vdpe_count=2)
    unit = 2 * 16 * 0.034 + 0.103
    assert am.area_proportionate_scale(cfg, 2 * unit + 1e-9, costs) == 2


def test_scale_reference_too_small_warns():
    with pytest.warns(UserWarning):
        assert am.area_proportionate_scale(am.preset("mam-holylight"), 0.01) == 0


def test_scaled_never_exceeds_reference():
    ref = am.reference_area()
    for name in ("mam-holylight", "amm-deapcnn"):
        cfg = am.scaled_baseline(name)
        assert am.instance_area(cfg) <= ref
        assert am.instance_area(replace(cfg, vdpe_count=cfg.vdpe_count + 1)) > ref


def test_converter_power_per_result():
    c = am.PeripheralCosts()
    sconna = c["adc_sconna"].power_mw
    baseline = 2 * (c["dac"].power_mw + c["adc_baseline"].power_mw)
    assert sconna < baseline
