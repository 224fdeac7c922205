import math
from dataclasses import replace

import pytest

from oracles import gmean
from sconna import archmodel as am
from sconna import simengine as se
from sconna.workload import LayerSpec, NetworkSpec, load_bundled


def _inst(name="sconna-paper", **kw):
    return am.build_accelerator(replace(am.preset(name), **kw))


SCONNA = _inst()
RES4608 = LayerSpec("deep", "conv", 7, 7, 512, 3, 512, 1, 1)


def test_segments_equal_vdpes_is_one_wave():
    # fc with S=176 and L=1024 outputs: 1024 segments on 1024 VDPEs
    net = NetworkSpec("n", (LayerSpec("fc", "fully_connected", 1, 1, 176, 1, 1024),))
    assert se.map_network(net, SCONNA).layers[0].waves == 1


def test_psum_geometry_examples():
    net = NetworkSpec("n", (RES4608,))
    base = am.build_accelerator(am.AcceleratorConfig("b44", "MAM", 44, 44, 4000, B_native=4,
                                                     line_rate=5e9, bit_slices_per_result=2))
    ls = se.map_network(net, base).layers[0]
    assert (ls.C, ls.tree_depth) == (105, 7)
    ls = se.map_network(net, SCONNA).layers[0]
    assert (ls.C, ls.tree_depth) == (27, 5)


def test_map_rejects_oversized_n():
    with pytest.raises(se.MappingError):
        se.map_network(NetworkSpec("n", (RES4608,)), SCONNA, N=200)


def test_every_segment_in_one_slot_and_weight_stationary():
    layer = LayerSpec("c", "conv", 6, 6, 20, 3, 5, 1, 1)
    inst = _inst(vdpe_count=7)
    ls = se.map_network(NetworkSpec("n", (layer,)), inst, N=16).layers[0]
    seen = {}
    for k in range(ls.segments):
        wave, group = ls.slot(k)
        assert 0 <= wave < ls.waves and 0 <= group < ls.parallel
        assert (wave, group) not in seen
        seen[wave, group] = ls.segment(k)
    assert len(seen) == ls.segments == ls.tasks * ls.C
    # along each VDPE group, the DKV only changes when its runs of positions end
    loads = 0
    for g in range(ls.parallel):
        dkvs = [seen[w, g][0] for w in range(ls.waves) if (w, g) in seen]
        assert dkvs == sorted(dkvs)
        loads += len(set(dkvs))
    assert loads == ls.weight_loads()


def test_more_vdpes_never_more_waves():
    net = load_bundled("shufflenet_v2")
    small = se.map_network(net, _inst(vdpe_count=512))
    big = se.map_network(net, _inst(vdpe_count=1024))
    assert all(b.waves <= s.waves for s, b in zip(small.layers, big.layers))


def test_single_wave_stream_dominates():
    t = se.wave_timing(SCONNA)
    assert t.stream == pytest.approx(256 / 30e9 * 1e9)
    assert t.interval == t.stream
    assert t.stream > t.fetch + t.launch + t.adc


def test_bit_slicing_halves_result_rate():
    base = am.preset("mam-holylight")
    assert base.parallel_results * 2 == base.vdpe_count - base.vdpe_count % 2


def test_empty_network_sentinel():
    m = se.simulate(NetworkSpec("empty", ()), SCONNA)
    assert m.latency_s == 0 and m.energy_j == 0 and m.fps is None
    assert "empty" in m.error


def test_totals_are_layer_sums_and_identities():
    m = se.simulate(load_bundled("googlenet"), SCONNA)
    assert m.latency_s == pytest.approx(math.fsum(l.latency_ns for l in m.layers) * 1e-9)
    assert m.energy_j == pytest.approx(math.fsum(l.energy_nj for l in m.layers) * 1e-9)
    assert all(l.energy_nj > 0 for l in m.layers)
    assert m.fps_per_watt == pytest.approx(m.fps / m.average_power_w)
    assert m.fps_per_watt_per_mm2 == pytest.approx(m.fps_per_watt / m.area_mm2)


def test_psum_events_count():
    m = se.simulate(NetworkSpec("n", (RES4608,)), SCONNA)
    assert m.layers[0].psums == 7 * 7 * 512 * 26


def test_adding_layer_never_reduces_latency():
    net = load_bundled("mobilenet_v2")
    for k in (1, 10, 30):
        a = se.simulate(NetworkSpec("a", net.layers[:k]), SCONNA).latency_s
        b = se.simulate(NetworkSpec("b", net.layers[:k + 1]), SCONNA).latency_s
        assert b >= a


def test_deterministic():
    net = load_bundled("resnet50")
    a = se.simulate(net, SCONNA)
    b = se.simulate(net, SCONNA)
    assert a.summary_json() == b.summary_json() and a.layer_csv() == b.layer_csv()


def test_compare_identical_instances():
    c = se.compare([load_bundled("shufflenet_v2")], [SCONNA, SCONNA])
    other = c.accelerators[1]
    for k in c.METRICS:
        assert c.gmean_ratio(other, k) == 1.0


def test_compare_gmean_definition():
    nets = [load_bundled(n) for n in ("googlenet", "mobilenet_v2")]
    c = se.compare(nets, [SCONNA, _inst("amm-deapcnn")])
    r = [c.ratio(n.name, "amm-deapcnn") for n in nets]
    assert c.gmean_ratio("amm-deapcnn") == pytest.approx(gmean(r), rel=1e-12)
    rows = c.long_csv().splitlines()
    assert rows[0] == "network,accelerator,metric,value" and len(rows) == 1 + 2 * 2 * 3


def test_compare_needs_two_instances():
    with pytest.raises(ValueError):
        se.compare([load_bundled("googlenet")], [SCONNA])


def test_bit_exact_cross_validation():
    net = NetworkSpec("n", (LayerSpec("c", "conv", 4, 4, 40, 3, 2, 1, 1),))
    rep = se.simulate(net, SCONNA, bit_exact_layers=["c"], bit_exact_points=8)
    d = rep.diagnostics["bit_exact"]["c"]
    assert d["max_bit_vs_analytic"] == 0
    assert d["max_abs_error_counts"] <= d["rounding_bound"]
    with pytest.raises(se.MappingError):
        se.simulate(net, _inst("mam-holylight"), bit_exact_layers=["c"])
