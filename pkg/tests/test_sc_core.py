import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import round_half_even
from sconna import sc_core as sc

P8 = sc.PrecisionConfig(8)


def test_exhaustive_products_b8():
    lut = sc.build_lut(P8)
    a = np.arange(257)
    expected = np.array([[round_half_even(int(i) * int(w), 256) for w in a] for i in a])
    assert np.array_equal(lut.product_counts, expected)


@pytest.mark.parametrize("B", [1, 2, 3, 4])
def test_small_precisions_via_explicit_streams(B):
    prec = sc.PrecisionConfig(B)
    L = prec.stream_length
    for i in range(L + 1):
        for w in range(L + 1):
            I, W = sc.generate_uncorrelated_pair(i, w, prec)
            assert I.popcount == i and W.popcount == w
            assert sc.osm_multiply(I, W).popcount == round_half_even(i * w, L)


def test_tie_rule_b1():
    # 1/2 * 1/2 = 1/4 of a length-2 stream: half a one, rounds to even (0).
    I, W = sc.generate_uncorrelated_pair(1, 1, sc.PrecisionConfig(1))
    assert sc.osm_multiply(I, W).popcount == 0


def test_lut_rows_encode_their_operands():
    lut = sc.build_lut(P8)
    rng = np.random.default_rng(3)
    for i, w in rng.integers(0, 257, (200, 2)):
        I, W = lut.entry(int(i), int(w))
        assert (I.popcount, W.popcount) == (i, w)
        assert sc.osm_multiply(I, W).popcount == lut.and_count(i, w)


def test_lut_sizes():
    lut = sc.build_lut(P8)
    assert lut.reported_hw_entry_count == 256
    assert lut.reported_entry_width_bits == 512
    assert lut.functional_entry_count == 257 * 257


def test_lut_sidecar_round_trip(tmp_path):
    lut = sc.build_lut(sc.PrecisionConfig(4))
    p = sc.write_lut(lut, tmp_path / "lut.bin")
    back = sc.read_lut(p)
    assert np.array_equal(back.i_packed, lut.i_packed)
    assert np.array_equal(back.w_packed, lut.w_packed)
    assert np.array_equal(back.product_counts, lut.product_counts)
    raw = p.read_bytes()
    assert raw[:4] == b"SCLT"
    (p.parent / "bad.bin").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        sc.read_lut(p.parent / "bad.bin")


def test_operand_range_checked():
    with pytest.raises(ValueError):
        sc.encode_unipolar(257, P8)
    with pytest.raises(ValueError):
        sc.generate_uncorrelated_pair(-1, 3, P8)


def test_and_gate_length_mismatch():
    a = sc.encode_unipolar(2, sc.PrecisionConfig(2))
    b = sc.encode_unipolar(2, sc.PrecisionConfig(3))
    with pytest.raises(ValueError):
        sc.osm_multiply(a, b)


def test_bitstream_is_immutable():
    s = sc.encode_unipolar(5, sc.PrecisionConfig(3))
    with pytest.raises(ValueError):
        s.bits[0] = 1


def test_pca_rejects_mixed_lengths():
    with pytest.raises(ValueError):
        sc.pca_accumulate([sc.encode_unipolar(1, sc.PrecisionConfig(2)),
                           sc.encode_unipolar(1, sc.PrecisionConfig(3))])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 256), min_size=1, max_size=20),
       st.lists(st.integers(0, 256), min_size=1, max_size=20))
def test_pca_linearity(a, b):
    enc = [sc.encode_unipolar(v, P8) for v in a + b]
    total = sc.pca_accumulate(enc)
    assert total == sc.pca_accumulate(enc[:len(a)]) + sc.pca_accumulate(enc[len(a):])
    assert total == sum(a) + sum(b)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 255), st.integers(-255, 255)), min_size=1, max_size=176))
def test_vdpe_sign_negation(pairs):
    x = [p[0] for p in pairs]
    w = [p[1] for p in pairs]
    assert sc.vdpe_dot(x, w, P8) == -sc.vdpe_dot(x, [-v for v in w], P8)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 255), st.integers(-255, 255)), min_size=1, max_size=40))
def test_bit_exact_equals_lut_path(pairs):
    x = [p[0] for p in pairs]
    w = [p[1] for p in pairs]
    assert sc.vdpe_dot(x, w, P8, bit_exact=True) == sc.vdpe_dot(x, w, P8)


def test_signed_operand_input_form():
    ops = [sc.SignedOperand(10, True), sc.SignedOperand(20)]
    assert sc.vdpe_dot([100, 50], ops, P8) == sc.vdpe_dot([100, 50], [-10, 20], P8)


def test_vdpe_size_limit():
    with pytest.raises(ValueError):
        sc.vdpe_dot([1] * 177, [1] * 177, P8)


def test_adc_lossless_without_noise():
    adc = sc.AdcModel()
    q = np.arange(0, adc.full_scale_counts + 1)
    assert np.array_equal(sc.adc_to_counts(sc.adc_convert(q, adc), adc), q)


def test_adc_saturation_counted():
    adc = sc.AdcModel()
    diag = sc.AdcDiagnostics()
    code = sc.adc_convert(adc.full_scale_counts + 500, adc, diagnostics=diag)
    assert code == adc.levels
    assert diag.saturations == 1


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 45056), st.integers(0, 45056))
def test_adc_monotone(a, b):
    adc = sc.AdcModel()
    lo, hi = sorted((a, b))
    assert sc.adc_convert(lo, adc) <= sc.adc_convert(hi, adc)


def test_adc_noise_is_seeded():
    adc = sc.AdcModel()
    q = np.arange(1, 2000)
    a = sc.adc_convert(q, adc, True, np.random.default_rng(5))
    b = sc.adc_convert(q, adc, True, np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_calibration_reproduces_shipped_sigma():
    sigma = sc.calibrate_adc_noise()
    assert sigma == pytest.approx(sc.ADC_NOISE_SIGMA, rel=1e-4)


def test_error_study_paired_adc_not_better():
    on = sc.measure_vdp_error(500, 176, P8, seed=7)
    assert on.mae_adc >= on.mae_rounding
    assert on.max_abs_rounding <= 0.5 * 176


def test_error_study_length_one_single_term_bound():
    st_ = sc.measure_vdp_error(2000, 1, P8, seed=1)
    assert st_.max_abs_rounding <= 0.5


def test_error_study_rejects_zero_trials():
    with pytest.raises(ValueError):
        sc.measure_vdp_error(0, 4, P8)
