"""Bit-exact functional model of the stochastic optical datapath.

Covers unipolar bitstream encoding, the precomputed lookup table of
uncorrelated (I, W) stream pairs, the optical AND multiplier, sign-routed
photo-charge accumulation and the ADC that digitizes the accumulated charge.

Values travel as integers: an operand ``x`` in ``[0, 2**B]`` is the stream
with ``x`` ones out of ``2**B`` bits, and a VDPE result is reported in charge
counts, i.e. in units of ``2**-B`` of the integer dot product.
"""

from __future__ import annotations

import functools
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

# Documentation-only constants of the time-integrating receiver (not simulated).
TIR_RESISTANCE_OHM = 50.0
TIR_CAPACITANCE_F = 250e-12
TIR_AMPLIFIER_GAIN = 80.0

DEFAULT_VDPE_SIZE = 176
DEFAULT_PRECISION_BITS = 8

# Std-dev of the multiplicative Gaussian ADC error. Produced by
# calibrate_adc_noise() on the default AdcModel (seed 0, full uniform sweep)
# for a 1.3 % mean absolute percentage error; test_sc_core re-derives it.
ADC_NOISE_SIGMA = 0.016318798065185547


@dataclass(frozen=True)
class PrecisionConfig:
    B: int = DEFAULT_PRECISION_BITS

    def __post_init__(self):
        if int(self.B) != self.B or self.B < 1:
            raise ValueError(f"precision B must be an integer >= 1, got {self.B!r}")

    @property
    def stream_length(self) -> int:
        return 1 << self.B


@dataclass(frozen=True, eq=False)
class Bitstream:
    """Unipolar stochastic number stored as a read-only 0/1 uint8 vector."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits, dtype=np.uint8)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("bitstream must be a non-empty 1-D bit vector")
        if np.any(arr > 1):
            raise ValueError("bitstream entries must be 0 or 1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def length(self) -> int:
        return int(self.bits.size)

    @property
    def popcount(self) -> int:
        return int(self.bits.sum(dtype=np.int64))

    @property
    def value(self) -> float:
        return self.popcount / self.length

    def __len__(self):
        return self.length

    def __eq__(self, other):
        if not isinstance(other, Bitstream):
            return NotImplemented
        return self.length == other.length and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash(self.bits.tobytes())

    def __repr__(self):
        if self.length <= 32:
            body = "".join(map(str, self.bits.tolist()))
        else:
            body = f"{self.popcount}/{self.length}"
        return f"Bitstream({body})"


@dataclass(frozen=True)
class SignedOperand:
    magnitude: int
    negative: bool = False

    @property
    def signed(self) -> int:
        return -self.magnitude if self.negative else self.magnitude


def round_half_even_div(num, den):
    """Integer ``num / den`` rounded to nearest, ties to even. Works on arrays."""
    q, r = np.divmod(num, den)
    twice = 2 * r
    up = (twice > den) | ((twice == den) & (q % 2 == 1))
    out = q + up
    if np.ndim(out) == 0:
        return int(out)
    return out


def _check_value(value: int, length: int):
    if not 0 <= value <= length:
        raise ValueError(f"operand {value} outside [0, {length}]")


def _spread_mask(n_ones, length: int) -> np.ndarray:
    """Evenly spaced ones: position p is set iff floor((p+1)n/L) > floor(pn/L).

    ``n_ones`` may be an array; the result then has one row per entry.
    """
    n = np.asarray(n_ones, dtype=np.int64)[..., None]
    p = np.arange(length, dtype=np.int64)
    if length == 0:
        return np.zeros(n.shape[:-1] + (0,), dtype=bool)
    return ((p + 1) * n) // length > (p * n) // length


def encode_unipolar(value: int, precision: PrecisionConfig) -> Bitstream:
    L = precision.stream_length
    _check_value(value, L)
    return Bitstream(_spread_mask(value, L).astype(np.uint8))


def _pair_rows(i_b: int, w_values: np.ndarray, L: int):
    """I stream for ``i_b`` and one W stream per entry of ``w_values``."""
    i_mask = _spread_mask(i_b, L)
    ones = np.flatnonzero(i_mask)
    zeros = np.flatnonzero(~i_mask)
    k = round_half_even_div(i_b * w_values, L)
    k = np.atleast_1d(k)
    w = np.zeros((w_values.size, L), dtype=bool)
    # k of W's ones overlap I's ones, the rest sit on I's zeros; both spread evenly.
    w[:, ones] = _spread_mask(k, ones.size)
    w[:, zeros] = _spread_mask(w_values - k, zeros.size)
    return i_mask, w


def generate_uncorrelated_pair(i_b: int, w_b: int, precision: PrecisionConfig):
    """Deterministic (I, W) pair whose AND popcount is round_half_even(I_b*W_b/2^B)."""
    L = precision.stream_length
    _check_value(i_b, L)
    _check_value(w_b, L)
    i_mask, w = _pair_rows(i_b, np.array([w_b], dtype=np.int64), L)
    return Bitstream(i_mask.astype(np.uint8)), Bitstream(w[0].astype(np.uint8))


def osm_multiply(i_stream: Bitstream, w_stream: Bitstream) -> Bitstream:
    if i_stream.length != w_stream.length:
        raise ValueError(f"stream length mismatch: {i_stream.length} vs {w_stream.length}")
    return Bitstream(i_stream.bits & w_stream.bits)


@dataclass(frozen=True, eq=False)
class BitstreamLUT:
    """All uncorrelated pairs for one precision, keyed by the full (I_b, W_b) pair.

    ``i_packed``/``w_packed`` hold little-endian bit-packed streams with shape
    ``(2^B + 1, 2^B + 1, bytes)``; ``product_counts[i, w]`` is the popcount of
    the AND of the stored pair.
    """

    precision: PrecisionConfig
    i_packed: np.ndarray
    w_packed: np.ndarray
    product_counts: np.ndarray

    @property
    def reported_hw_entry_count(self) -> int:
        return self.precision.stream_length

    @property
    def reported_entry_width_bits(self) -> int:
        return 2 * self.precision.stream_length

    @property
    def functional_entry_count(self) -> int:
        return self.product_counts.size

    def _unpack(self, packed):
        L = self.precision.stream_length
        return np.unpackbits(packed, axis=-1, count=L, bitorder="little")

    def entry(self, i_b: int, w_b: int) -> tuple[Bitstream, Bitstream]:
        L = self.precision.stream_length
        _check_value(i_b, L)
        _check_value(w_b, L)
        return (Bitstream(self._unpack(self.i_packed[i_b, w_b])),
                Bitstream(self._unpack(self.w_packed[i_b, w_b])))

    def and_count(self, i_b, w_b):
        return self.product_counts[i_b, w_b]

    def __len__(self):
        return self.functional_entry_count


def _build_lut(B: int) -> BitstreamLUT:
    precision = PrecisionConfig(B)
    L = precision.stream_length
    n_bytes = (L + 7) // 8
    i_packed = np.zeros((L + 1, L + 1, n_bytes), dtype=np.uint8)
    w_packed = np.zeros_like(i_packed)
    w_values = np.arange(L + 1, dtype=np.int64)
    for i_b in range(L + 1):
        i_mask, w = _pair_rows(i_b, w_values, L)
        i_packed[i_b] = np.packbits(i_mask, bitorder="little")
        w_packed[i_b] = np.packbits(w, axis=-1, bitorder="little")
    counts = np.bitwise_count(i_packed & w_packed).sum(axis=-1, dtype=np.int64)
    for arr in (i_packed, w_packed, counts):
        arr.setflags(write=False)
    return BitstreamLUT(precision, i_packed, w_packed, counts)


@functools.lru_cache(maxsize=8)
def _cached_lut(B: int) -> BitstreamLUT:
    return _build_lut(B)


def build_lut(precision: PrecisionConfig, cache: bool = True) -> BitstreamLUT:
    return _cached_lut(precision.B) if cache else _build_lut(precision.B)


LUT_MAGIC = b"SCLT"
_LUT_HEADER = struct.Struct("<4sHHII")  # magic, version, B, entry count, row bytes
LUT_VERSION = 1


def write_lut(lut: BitstreamLUT, path) -> Path:
    """Binary sidecar: header then one row per (I_b, W_b) in row-major order.

    Each row is the packed I stream followed by the packed W stream, bits in
    little-endian order within each byte.
    """
    path = Path(path)
    n_bytes = lut.i_packed.shape[-1]
    rows = np.concatenate([lut.i_packed, lut.w_packed], axis=-1).reshape(-1, 2 * n_bytes)
    header = _LUT_HEADER.pack(LUT_MAGIC, LUT_VERSION, lut.precision.B, rows.shape[0], 2 * n_bytes)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(rows.tobytes())
    return path


def read_lut(path) -> BitstreamLUT:
    data = Path(path).read_bytes()
    magic, version, B, count, row_bytes = _LUT_HEADER.unpack_from(data)
    if magic != LUT_MAGIC or version != LUT_VERSION:
        raise ValueError(f"{path}: not a version-{LUT_VERSION} LUT sidecar")
    precision = PrecisionConfig(B)
    side = precision.stream_length + 1
    if count != side * side:
        raise ValueError(f"{path}: entry count {count} does not match B={B}")
    body = np.frombuffer(data, dtype=np.uint8, offset=_LUT_HEADER.size)
    if body.size != count * row_bytes:
        raise ValueError(f"{path}: truncated body")
    rows = body.reshape(side, side, row_bytes)
    half = row_bytes // 2
    i_packed = rows[..., :half].copy()
    w_packed = rows[..., half:].copy()
    counts = np.bitwise_count(i_packed & w_packed).sum(axis=-1, dtype=np.int64)
    return BitstreamLUT(precision, i_packed, w_packed, counts)


def pca_accumulate(streams: Iterable[Bitstream]) -> int:
    """Charge count collected by one photo-charge accumulator."""
    total = 0
    length = None
    for s in streams:
        if length is None:
            length = s.length
        elif s.length != length:
            raise ValueError("all streams incident on a PCA must share one length")
        total += s.popcount
    return total


def pca_capacity(n_streams: int, precision: PrecisionConfig) -> int:
    return n_streams * precision.stream_length


@dataclass(frozen=True)
class AdcModel:
    resolution_bits: int = 16
    full_scale_counts: int = DEFAULT_VDPE_SIZE * (1 << DEFAULT_PRECISION_BITS)
    target_mape: float = 0.013
    noise_seed: int = 0
    noise_sigma: float = ADC_NOISE_SIGMA

    def __post_init__(self):
        if self.resolution_bits < 1:
            raise ValueError("ADC resolution must be >= 1 bit")
        if self.full_scale_counts < 1:
            raise ValueError("ADC full scale must be >= 1 count")
        if self.target_mape < 0 or self.noise_sigma < 0:
            raise ValueError("ADC error figures must be non-negative")

    @property
    def levels(self) -> int:
        return (1 << self.resolution_bits) - 1

    @classmethod
    def for_vdpe(cls, n: int, precision: PrecisionConfig, **kw) -> "AdcModel":
        """Full scale sized to the PCA capacity of an n-point VDPE."""
        return cls(full_scale_counts=pca_capacity(n, precision), **kw)


@dataclass
class AdcDiagnostics:
    conversions: int = 0
    saturations: int = 0


def adc_convert(charge, adc: AdcModel, noise_enabled: bool = False,
                rng: np.random.Generator | None = None,
                diagnostics: AdcDiagnostics | None = None):
    """Mid-tread conversion of a charge count (scalar or array) to an ADC code.

    Charges above full scale saturate and are counted in ``diagnostics``.
    With noise enabled the charge is scaled by ``1 + eps``, eps ~ N(0, sigma),
    drawn from ``rng`` (a fresh generator seeded by ``adc.noise_seed`` if None).
    """
    q = np.asarray(charge, dtype=np.int64)
    if np.any(q < 0):
        raise ValueError("charge must be non-negative")
    fs = adc.full_scale_counts
    over = q > fs
    if diagnostics is not None:
        diagnostics.conversions += int(q.size)
        diagnostics.saturations += int(over.sum())
    q = np.minimum(q, fs)
    if not noise_enabled:
        code = (2 * q * adc.levels + fs) // (2 * fs)
    else:
        if rng is None:
            rng = np.random.default_rng(adc.noise_seed)
        eps = rng.standard_normal(q.shape) * adc.noise_sigma
        x = np.clip(q * (1.0 + eps), 0.0, fs)
        code = np.floor(x * adc.levels / fs + 0.5).astype(np.int64)
    if code.ndim == 0:
        return int(code)
    return code


def adc_to_counts(code, adc: AdcModel):
    """Digital rescale of an ADC code back to the nearest charge count."""
    c = np.asarray(code, dtype=np.int64)
    out = round_half_even_div(2 * c * adc.full_scale_counts, 2 * adc.levels)
    return out


def adc_sweep_mape(adc: AdcModel, sigma: float | None = None, seed: int | None = None,
                   charges: np.ndarray | None = None) -> float:
    """MAPE of read-back counts over a uniform sweep of non-zero charges."""
    if charges is None:
        charges = np.arange(1, adc.full_scale_counts + 1, dtype=np.int64)
    if sigma is not None:
        adc = AdcModel(adc.resolution_bits, adc.full_scale_counts, adc.target_mape,
                       adc.noise_seed, sigma)
    rng = np.random.default_rng(adc.noise_seed if seed is None else seed)
    counts = adc_to_counts(adc_convert(charges, adc, True, rng), adc)
    return float(np.mean(np.abs(counts - charges) / charges))


def calibrate_adc_noise(adc: AdcModel | None = None, tol: float = 1e-6) -> float:
    """Noise sigma at which the fixed-seed sweep MAPE equals the target."""
    adc = adc or AdcModel()
    return float(brentq(lambda s: adc_sweep_mape(adc, s) - adc.target_mape, 0.0, 1.0, xtol=tol))


def _split_weights(dkv) -> tuple[np.ndarray, np.ndarray]:
    """Magnitudes and negative-sign mask from SignedOperands or signed ints."""
    if len(dkv) and isinstance(dkv[0], SignedOperand):
        mags = np.array([d.magnitude for d in dkv], dtype=np.int64)
        neg = np.array([d.negative for d in dkv], dtype=bool)
        return mags, neg
    w = np.asarray(dkv, dtype=np.int64)
    return np.abs(w), w < 0


@dataclass(frozen=True)
class VdpeCharges:
    positive: np.ndarray
    negative: np.ndarray


def vdpe_charges(div, weights, precision: PrecisionConfig, lut: BitstreamLUT | None = None):
    """Charge counts on the OWA (positive) and OWA' (negative) accumulators.

    ``div`` and ``weights`` are ``(..., n)`` arrays; weights are signed ints or
    a sequence of SignedOperand.
    """
    L = precision.stream_length
    lut = lut or build_lut(precision)
    x = np.asarray(div, dtype=np.int64)
    mags, neg = _split_weights(weights)
    if x.shape != mags.shape:
        raise ValueError(f"DIV/DKV shape mismatch: {x.shape} vs {mags.shape}")
    if np.any(x < 0) or np.any(x >= L):
        raise ValueError(f"DIV values must lie in [0, {L - 1}]")
    if np.any(mags >= L):
        raise ValueError(f"DKV magnitudes must lie in [0, {L - 1}]")
    prod = lut.product_counts[x, mags]
    pos = np.where(neg, 0, prod).sum(axis=-1)
    negc = np.where(neg, prod, 0).sum(axis=-1)
    return VdpeCharges(pos, negc)


def _digitize(charge, adc, noise_enabled, rng):
    if adc is None:
        return charge
    return adc_to_counts(adc_convert(charge, adc, noise_enabled, rng), adc)


def vdpe_dot(div, dkv, precision: PrecisionConfig, adc: AdcModel | None = None,
             noise_enabled: bool = False, *, size: int | None = DEFAULT_VDPE_SIZE,
             lut: BitstreamLUT | None = None, rng: np.random.Generator | None = None,
             bit_exact: bool = False):
    """Signed VDP result in charge counts (units of 2^-B).

    With ``adc=None`` both accumulators are read exactly. ``bit_exact`` pushes
    every term through explicit streams and the AND gate instead of using the
    LUT's precomputed AND popcounts; results are identical.
    """
    n = len(div)
    if n != len(dkv):
        raise ValueError(f"DIV/DKV length mismatch: {n} vs {len(dkv)}")
    if size is not None and n > size:
        raise ValueError(f"vector length {n} exceeds VDPE size {size}; decompose first")
    if bit_exact:
        lut = lut or build_lut(precision)
        mags, neg = _split_weights(dkv)
        owa, owa_n = [], []
        for x, m, s in zip(div, mags, neg):
            i_s, w_s = lut.entry(int(x), int(m))
            (owa_n if s else owa).append(osm_multiply(i_s, w_s))
        charges = VdpeCharges(np.int64(pca_accumulate(owa)), np.int64(pca_accumulate(owa_n)))
    else:
        charges = vdpe_charges(np.asarray(div, dtype=np.int64).reshape(n), dkv, precision, lut)
    if adc is not None and noise_enabled and rng is None:
        rng = np.random.default_rng(adc.noise_seed)
    pos = _digitize(charges.positive, adc, noise_enabled, rng)
    negc = _digitize(charges.negative, adc, noise_enabled, rng)
    return int(pos - negc)


def vdpe_dot_batch(div, weights, precision: PrecisionConfig, adc: AdcModel | None = None,
                   noise_enabled: bool = False, *, size: int | None = DEFAULT_VDPE_SIZE,
                   lut: BitstreamLUT | None = None, rng: np.random.Generator | None = None):
    """Vectorized vdpe_dot over the leading axes of ``(..., n)`` operand arrays."""
    div = np.asarray(div, dtype=np.int64)
    if size is not None and div.shape[-1] > size:
        raise ValueError(f"vector length {div.shape[-1]} exceeds VDPE size {size}")
    charges = vdpe_charges(div, weights, precision, lut)
    if adc is not None and noise_enabled and rng is None:
        rng = np.random.default_rng(adc.noise_seed)
    return (_digitize(charges.positive, adc, noise_enabled, rng)
            - _digitize(charges.negative, adc, noise_enabled, rng))


@dataclass(frozen=True)
class VdpErrorStats:
    trials: int
    length: int
    mape_rounding: float
    mape_adc: float
    max_abs_rounding: float
    max_abs_adc: float
    mae_rounding: float
    mae_adc: float
    excluded_zero: int = 0
    extra: dict = field(default_factory=dict)


def measure_vdp_error(trials: int, length: int, precision: PrecisionConfig,
                      adc: AdcModel | None = None, seed: int = 0,
                      signed: bool = False) -> VdpErrorStats:
    """Error of VDPE results against the exact dot product / 2^B.

    The same random operands are evaluated twice: counted exactly (rounding
    error of the stochastic products only) and through the noisy ADC. Unsigned
    mode draws non-negative weights so a single accumulator carries the result;
    signed mode draws random weight signs. Trials whose exact value is zero are
    left out of the MAPE.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if length < 1:
        raise ValueError("length must be >= 1")
    L = precision.stream_length
    adc = adc or AdcModel.for_vdpe(max(length, 1), precision)
    rng = np.random.default_rng(seed)
    div = rng.integers(0, L, size=(trials, length))
    w = rng.integers(0, L, size=(trials, length))
    if signed:
        w = np.where(rng.random((trials, length)) < 0.5, -w, w)
    exact = (div * w).sum(axis=-1) / L
    lut = build_lut(precision)
    rounded = vdpe_dot_batch(div, w, precision, None, size=None, lut=lut)
    noisy = vdpe_dot_batch(div, w, precision, adc, True, size=None, lut=lut,
                           rng=np.random.default_rng([seed, 1]))
    nz = exact != 0
    err_r = np.abs(rounded - exact)
    err_a = np.abs(noisy - exact)

    def mape(err):
        return float(np.mean(err[nz] / np.abs(exact[nz]))) if nz.any() else 0.0

    return VdpErrorStats(
        trials=trials, length=length,
        mape_rounding=mape(err_r), mape_adc=mape(err_a),
        max_abs_rounding=float(err_r.max()), max_abs_adc=float(err_a.max()),
        mae_rounding=float(err_r.mean()), mae_adc=float(err_a.mean()),
        excluded_zero=int((~nz).sum()),
    )


def exact_dot_counts(div: Sequence[int], weights, precision: PrecisionConfig) -> float:
    mags, neg = _split_weights(weights)
    signed = np.where(neg, -mags, mags)
    return float(np.dot(np.asarray(div, dtype=np.int64), signed)) / precision.stream_length
