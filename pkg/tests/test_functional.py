import numpy as np

from sconna.functional import ToyModel, requantize, run_toy, toy_network


def test_toy_network_is_sequential():
    net = toy_network()
    assert net.chain_breaks() == []
    assert [l.S for l in net.layers] == [27, 72, 256]


def test_toy_weights_are_seeded():
    a, b = ToyModel.build(1), ToyModel.build(1)
    assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
    assert all(np.abs(w).max() <= 255 for w in a.weights)


def test_requantize_range():
    acc = np.array([-5, 0, 1000, 70000])
    out = requantize(acc, 8)
    assert out.min() == 0 and out.max() <= 255
    assert list(out) == sorted(out)


def test_fast_and_bit_exact_paths_agree():
    m = ToyModel.build(4)
    fast = run_toy(m, bit_exact=False)
    assert all(c.ok for c in fast)
    # smaller VDPE size forces decomposition into several segments
    small = run_toy(m, N=16, bit_exact=False)
    assert all(c.ok for c in small)
