"""Fronthaul compression between edge nodes and the central processor.

Two families:

* Quantize-and-forward carries the received samples, either through the
  Gaussian test-channel abstraction (additive noise with variance
  P / (2^(B/n) - 1)) or through an explicit uniform mid-rise quantizer
  on each real dimension.

* Detect-and-forward carries per-event activity flags plus quantized
  LLRs.  Each node spends 1 bit per event on its activity flag; the
  remaining budget goes to the flagged events' LLRs, either pooled over
  whatever is flagged ("pooled") or as a fixed per-event slice
  ("per_event").  Payloads serialize big-endian: the M activity bits
  first, then the flagged events' LLR codewords in event order, values
  1..R.

Quantizer codes are capped at 32 bits per scalar; beyond that the step
size drops below float64 resolution while the distortion is already
far below anything the decoders can see.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_BITS_PER_SCALAR = 32


class BudgetTooSmallError(ValueError):
    """The bit budget cannot accommodate the requested layout."""


@dataclass(frozen=True)
class QuantizedBlock:
    samples: np.ndarray   # (..., n) complex, what the CP receives
    quant_var: np.ndarray  # effective additive variance per block (...,)
    bits_used: float


@dataclass(frozen=True)
class DtfPayload:
    """One node's detect-and-forward message."""

    activity: np.ndarray      # (M,) bool flags
    codes: np.ndarray         # (num_flagged, R) integer codewords
    bits_per_llr: int
    clip: float
    num_values: int
    bits_used: int


def nominal_received_power(system, assignment) -> float:
    """Mean |y_i|^2 under the model: noise plus the average superposed
    codeword energy spread over the codeword length."""
    sizes = assignment.group_sizes(system.num_events)
    signal = system.activation_prob * float(sizes.sum()) * system.channel_var
    return system.noise_var + signal / system.codeword_length


def quantization_noise_var(bit_budget: float, codeword_length: int, power):
    """Variance of the equivalent quantization noise at rate B/n bits
    per complex sample.  Infinite budgets give zero noise."""
    rate = bit_budget / codeword_length
    with np.errstate(over="ignore"):
        denom = np.exp2(rate) - 1.0
    if np.isinf(denom):
        return np.zeros_like(np.asarray(power, dtype=np.float64))
    return np.asarray(power, dtype=np.float64) / denom


def qf_test_channel(
    samples: np.ndarray,
    bit_budget: float,
    codeword_length: int,
    power=None,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
) -> QuantizedBlock:
    """Model fronthaul quantization as an additive Gaussian test channel.

    ``power`` defaults to the per-block empirical mean |y_i|^2.  ``noise``
    may supply pre-drawn unit-variance complex normals shaped like
    ``samples``; the same draws scale to any budget, keeping sweep points
    paired.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    if power is None:
        power = np.mean(np.abs(samples) ** 2, axis=-1)
    quant_var = quantization_noise_var(bit_budget, codeword_length, power)
    if np.all(quant_var == 0.0):
        return QuantizedBlock(samples=samples.copy(), quant_var=quant_var,
                              bits_used=float(bit_budget))
    if noise is None:
        if rng is None:
            raise ValueError("qf_test_channel needs rng or pre-drawn noise")
        w = rng.standard_normal(samples.shape) + 1j * rng.standard_normal(samples.shape)
        noise = w / np.sqrt(2.0)
    out = samples + np.sqrt(quant_var)[..., None] * noise
    return QuantizedBlock(samples=out, quant_var=quant_var,
                          bits_used=float(bit_budget))


def midrise_codes(values: np.ndarray, bits: int, clip: float) -> np.ndarray:
    """Uniform mid-rise code indices over [-clip, clip], saturating."""
    if bits < 1:
        raise ValueError("midrise quantizer needs at least one bit")
    levels = 1 << bits
    step = 2.0 * clip / levels
    idx = np.floor((np.asarray(values, dtype=np.float64) + clip) / step)
    return np.clip(idx, 0, levels - 1).astype(np.int64)


def midrise_reconstruct(codes: np.ndarray, bits: int, clip: float) -> np.ndarray:
    levels = 1 << bits
    step = 2.0 * clip / levels
    return -clip + (np.asarray(codes, dtype=np.float64) + 0.5) * step


def qf_uniform_quantize(
    samples: np.ndarray, bit_budget: float, codeword_length: int, clip: float
) -> QuantizedBlock:
    """Scalar uniform quantization of each real dimension of a block.

    The per-sample rate floor(B / 2n) bits applies to real and imaginary
    parts separately.  The reported variance is the block's empirical
    distortion, which downstream decoding treats as extra noise.
    """
    bits = int(bit_budget // (2 * codeword_length)) if math.isfinite(bit_budget) else MAX_BITS_PER_SCALAR
    if bits < 1:
        raise BudgetTooSmallError(
            f"uniform quantization needs >= 1 bit per real dimension, "
            f"budget {bit_budget} over {2 * codeword_length} dimensions"
        )
    bits = min(bits, MAX_BITS_PER_SCALAR)
    samples = np.asarray(samples, dtype=np.complex128)
    re = midrise_reconstruct(midrise_codes(samples.real, bits, clip), bits, clip)
    im = midrise_reconstruct(midrise_codes(samples.imag, bits, clip), bits, clip)
    out = re + 1j * im
    quant_var = np.mean(np.abs(out - samples) ** 2, axis=-1)
    return QuantizedBlock(samples=out, quant_var=quant_var,
                          bits_used=2.0 * codeword_length * bits)


def dtf_bits_per_llr(
    bit_budget: float, num_events: int, num_values: int,
    num_flagged: int, allocation: str = "pooled",
) -> int:
    """LLR codeword width for a node's payload under either allocation."""
    if allocation == "per_event":
        if math.isinf(bit_budget):
            return MAX_BITS_PER_SCALAR
        per_event = int(bit_budget // num_events)
        if per_event - 1 < num_values:
            raise BudgetTooSmallError(
                f"per-event budget {per_event} bits cannot carry the activity "
                f"flag plus {num_values} LLRs"
            )
        return min((per_event - 1) // num_values, MAX_BITS_PER_SCALAR)
    if allocation == "pooled":
        if bit_budget < num_events:
            raise BudgetTooSmallError(
                f"budget {bit_budget} cannot carry {num_events} activity flags"
            )
        if num_flagged == 0:
            return 0
        pool = bit_budget - num_events
        return int(min(pool // (num_flagged * num_values), MAX_BITS_PER_SCALAR))
    raise ValueError(f"unknown dtf allocation {allocation!r}")


def dtf_quantize(
    llrs: np.ndarray,
    local_decisions: np.ndarray,
    bit_budget: float,
    clip: float,
    allocation: str = "pooled",
) -> DtfPayload:
    """Compress one node's LLR matrix into flags plus codewords.

    Events whose local decision is 0 carry only their flag bit.  Flagged
    events carry one mid-rise codeword per value, all with the same
    width.  A pooled width of 0 (too many flagged events) degrades to
    flags-only rather than erroring.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    m_events, num_values = llrs.shape
    flags = np.asarray(local_decisions) != 0
    bits = dtf_bits_per_llr(bit_budget, m_events, num_values,
                            int(flags.sum()), allocation)
    if bits > 0:
        codes = midrise_codes(np.clip(llrs[flags], -clip, clip), bits, clip)
    else:
        codes = np.zeros((int(flags.sum()), num_values), dtype=np.int64)
    bits_used = m_events + int(flags.sum()) * num_values * bits
    return DtfPayload(activity=flags, codes=codes, bits_per_llr=bits,
                      clip=clip, num_values=num_values, bits_used=bits_used)


def dtf_dequantize(payload: DtfPayload) -> np.ndarray:
    """Reconstruct the LLR matrix; unflagged events decode to all-zero."""
    m_events = payload.activity.shape[0]
    out = np.zeros((m_events, payload.num_values), dtype=np.float64)
    if payload.bits_per_llr > 0 and payload.codes.size:
        out[payload.activity] = midrise_reconstruct(
            payload.codes, payload.bits_per_llr, payload.clip
        )
    return out


def dtf_roundtrip_llrs(
    llrs: np.ndarray,
    flags: np.ndarray,
    bit_budget: float,
    clip: float,
    allocation: str = "pooled",
):
    """Vectorized quantize-then-dequantize of many nodes' LLR matrices.

    ``llrs`` has shape (..., M, R) and ``flags`` shape (..., M); leading
    axes are (trial, node) batches.  Bit-for-bit equivalent to running
    ``dtf_quantize`` / ``dtf_dequantize`` per matrix.  Returns the
    reconstructed LLRs and the bits used per matrix.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    flags = np.asarray(flags, dtype=bool)
    m_events, num_values = llrs.shape[-2:]
    num_flagged = flags.sum(axis=-1)

    if allocation == "per_event":
        bits = float(dtf_bits_per_llr(bit_budget, m_events, num_values, 0,
                                      "per_event"))
        bits_arr = np.full(num_flagged.shape, bits)
    elif allocation == "pooled":
        if bit_budget < m_events:
            raise BudgetTooSmallError(
                f"budget {bit_budget} cannot carry {m_events} activity flags"
            )
        pool = bit_budget - m_events
        safe = np.maximum(num_flagged, 1)
        per = np.floor_divide(pool, safe * num_values)
        bits_arr = np.where(num_flagged > 0,
                            np.minimum(per, MAX_BITS_PER_SCALAR), 0.0)
    else:
        raise ValueError(f"unknown dtf allocation {allocation!r}")

    levels = np.exp2(bits_arr)[..., None, None]
    step = 2.0 * clip / levels
    v = np.clip(llrs, -clip, clip)
    with np.errstate(divide="ignore", invalid="ignore"):
        idx = np.clip(np.floor((v + clip) / step), 0, levels - 1)
        recon = -clip + (idx + 0.5) * step
    keep = flags[..., None] & (bits_arr[..., None, None] > 0)
    out = np.where(keep, recon, 0.0)
    bits_used = m_events + num_flagged * num_values * bits_arr
    return out, bits_used


def serialize_payload(payload: DtfPayload) -> bytes:
    """Big-endian bit packing: M activity bits, then LLR codewords of the
    flagged events in event order, values in order."""
    bits: list[int] = [int(b) for b in payload.activity]
    width = payload.bits_per_llr
    for row in payload.codes:
        for code in row:
            for shift in range(width - 1, -1, -1):
                bits.append((int(code) >> shift) & 1)
    out = bytearray((len(bits) + 7) // 8)
    for i, b in enumerate(bits):
        if b:
            out[i >> 3] |= 0x80 >> (i & 7)
    return bytes(out)


def deserialize_payload(
    data: bytes, num_events: int, num_values: int, bits_per_llr: int, clip: float
) -> DtfPayload:
    """Inverse of ``serialize_payload`` given the layout parameters."""
    total_bits = len(data) * 8

    def read_bit(i: int) -> int:
        return (data[i >> 3] >> (7 - (i & 7))) & 1

    if num_events > total_bits:
        raise ValueError("payload shorter than its activity field")
    flags = np.array([read_bit(i) for i in range(num_events)], dtype=bool)
    num_flagged = int(flags.sum())
    codes = np.zeros((num_flagged, num_values), dtype=np.int64)
    pos = num_events
    if bits_per_llr > 0:
        need = num_flagged * num_values * bits_per_llr
        if pos + need > total_bits:
            raise ValueError("payload shorter than its codeword field")
        for row in range(num_flagged):
            for col in range(num_values):
                code = 0
                for _ in range(bits_per_llr):
                    code = (code << 1) | read_bit(pos)
                    pos += 1
                codes[row, col] = code
    bits_used = num_events + num_flagged * num_values * bits_per_llr
    return DtfPayload(activity=flags, codes=codes, bits_per_llr=bits_per_llr,
                      clip=clip, num_values=num_values, bits_used=bits_used)
