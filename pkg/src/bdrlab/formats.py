"""Concrete format catalog: MX/MSFP/BFP presets, scalar FP8, INT, VSQ.

Block formats are thin wrappers over the BDR codec; FP8 and VSQ carry
their own element codecs here.  Preset names are the stable identifiers
used by the CLI.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bdr import BDRConfig, ScaleState, bits_per_element as _bdr_bits

SCALING_POLICIES = ("per-block-hw", "per-tensor-sw-delayed", "per-coarse-block-sw")

# Fig. 7-style software scaling keeps the running max over this many
# past vectors unless the caller overrides it.
DEFAULT_WINDOW = 16


class UnknownPresetError(ValueError):
    pass


@dataclass(frozen=True)
class FormatPreset:
    name: str
    kind: str                      # "bdr" | "fp8" | "int" | "vsq"
    scaling_policy: str
    cfg: BDRConfig | None = None   # bdr only
    variant: str | None = None     # fp8 only
    bits: int | None = None        # int / vsq element bits
    vsq_d2: int | None = None
    vsq_k2: int | None = None


def _mx_cfg(m: int) -> BDRConfig:
    return BDRConfig(m=m, d1=8, d2=1, k1=16, k2=2)


_FIXED_PRESETS = {
    "MX9": FormatPreset("MX9", "bdr", "per-block-hw", cfg=_mx_cfg(7)),
    "MX6": FormatPreset("MX6", "bdr", "per-block-hw", cfg=_mx_cfg(4)),
    "MX4": FormatPreset("MX4", "bdr", "per-block-hw", cfg=_mx_cfg(2)),
    # MSFP names count sign + mantissa + shared-exponent bits.
    "MSFP16": FormatPreset("MSFP16", "bdr", "per-block-hw",
                           cfg=BDRConfig(m=7, d1=8, d2=0, k1=16, k2=1)),
    "MSFP12": FormatPreset("MSFP12", "bdr", "per-block-hw",
                           cfg=BDRConfig(m=3, d1=8, d2=0, k1=16, k2=1)),
    "INT8": FormatPreset("INT8", "int", "per-tensor-sw-delayed", bits=8),
    "INT4": FormatPreset("INT4", "int", "per-tensor-sw-delayed", bits=4),
    "FP8-E4M3": FormatPreset("FP8-E4M3", "fp8", "per-tensor-sw-delayed", variant="E4M3"),
    "FP8-E5M2": FormatPreset("FP8-E5M2", "fp8", "per-tensor-sw-delayed", variant="E5M2"),
}

_BFP_RE = re.compile(r"^BFP\((\d+),(\d+)\)$")
_VSQ_RE = re.compile(r"^VSQ\((\d+)\)$")


def known_presets() -> list[str]:
    return sorted(_FIXED_PRESETS) + ["BFP(k1,m)", "VSQ(b)"]


def preset(name: str) -> FormatPreset:
    """Resolve a preset name, e.g. 'MX9', 'BFP(16,5)', 'VSQ(8)'."""
    key = name.strip().upper().replace(" ", "")
    if key in _FIXED_PRESETS:
        return _FIXED_PRESETS[key]
    m_ = _BFP_RE.match(key)
    if m_:
        k1, m = int(m_.group(1)), int(m_.group(2))
        return FormatPreset(f"BFP({k1},{m})", "bdr", "per-block-hw",
                            cfg=BDRConfig(m=m, d1=8, d2=0, k1=k1, k2=1))
    m_ = _VSQ_RE.match(key)
    if m_:
        b = int(m_.group(1))
        return FormatPreset(f"VSQ({b})", "vsq", "per-tensor-sw-delayed",
                            bits=b, vsq_d2=8, vsq_k2=16)
    raise UnknownPresetError(
        f"unknown preset {name!r}; known presets: {', '.join(known_presets())}")


def preset_bits_per_element(fmt: FormatPreset) -> Fraction:
    """Storage bits per element (per-tensor software scales excluded)."""
    if fmt.kind == "bdr":
        return _bdr_bits(fmt.cfg)
    if fmt.kind == "fp8":
        return Fraction(8)
    if fmt.kind == "int":
        return Fraction(fmt.bits)
    if fmt.kind == "vsq":
        return Fraction(fmt.bits) + Fraction(fmt.vsq_d2, fmt.vsq_k2)
    raise ValueError(f"unhandled preset kind {fmt.kind!r}")


# ---------------------------------------------------------------------------
# INT quantization with software scaling
# ---------------------------------------------------------------------------

def max_scale(x, m: int) -> float:
    """Max-aligned scale s = max|x| / (2^(m-1) - 1); 1.0 for all-zero input."""
    if m < 2:
        raise ValueError("INT quantization needs m >= 2")
    x = np.asarray(x, dtype=np.float64)
    if not np.isfinite(x).all():
        raise ValueError("non-finite input")
    amax = float(np.max(np.abs(x))) if x.size else 0.0
    return amax / (2 ** (m - 1) - 1) if amax > 0 else 1.0


def int_quantize(x, m: int, s: float) -> np.ndarray:
    """Round-to-nearest-even x/s, saturating to [-2^(m-1), 2^(m-1)-1]."""
    if s <= 0:
        raise ValueError(f"scale must be positive, got {s}")
    if m < 2:
        raise ValueError("INT quantization needs m >= 2")
    x = np.asarray(x, dtype=np.float64)
    q = np.rint(x / s)
    return np.clip(q, -(2 ** (m - 1)), 2 ** (m - 1) - 1).astype(np.int64)


def int_dequantize(q, s: float) -> np.ndarray:
    return np.asarray(q, dtype=np.float64) * s


def delayed_scale(state: ScaleState, new_amax: float, format_max: float) -> float:
    """Delayed scaling: push the new amax, return window-max / format_max."""
    if format_max <= 0:
        raise ValueError("format_max must be positive")
    state.push(new_amax)
    peak = state.running_max()
    return peak / format_max if peak > 0 else 1.0


# ---------------------------------------------------------------------------
# Scalar FP8 (E4M3 / E5M2)
# ---------------------------------------------------------------------------

# variant -> (exp bits, mantissa bits, bias, max finite)
FP8_VARIANTS = {
    "E4M3": (4, 3, 7, 448.0),
    "E5M2": (5, 2, 15, 57344.0),
}


@dataclass(frozen=True)
class Fp8Code:
    byte: int
    variant: str


def _decode_one(byte: int, variant: str) -> float:
    eb, mb, bias, _ = FP8_VARIANTS[variant]
    sign = -1.0 if byte & 0x80 else 1.0
    e = (byte >> mb) & ((1 << eb) - 1)
    frac = byte & ((1 << mb) - 1)
    if variant == "E5M2" and e == (1 << eb) - 1:
        return sign * float("inf") if frac == 0 else float("nan")
    if variant == "E4M3" and e == (1 << eb) - 1 and frac == (1 << mb) - 1:
        return float("nan")
    if e == 0:
        return sign * frac * 2.0 ** (1 - bias - mb)
    return sign * (1 + frac / (1 << mb)) * 2.0 ** (e - bias)


def fp8_decode_table(variant: str) -> np.ndarray:
    """All 256 code values (NaN/inf included) for one variant."""
    return np.array([_decode_one(c, variant) for c in range(256)])


def fp8_round_values(x, variant: str) -> np.ndarray:
    """Round an array to the nearest representable FP8 value, saturating.

    Overflow (and infinities) saturate to the max finite value; NaN
    propagates.
    """
    eb, mb, bias, max_fin = FP8_VARIANTS[variant]
    x = np.asarray(x, dtype=np.float64)
    a = np.abs(x)
    finite = np.isfinite(a)
    _, ex = np.frexp(np.where(finite, a, 1.0))
    e = np.maximum(ex.astype(np.int64) - 1, 1 - bias)  # subnormal floor
    q = np.ldexp(np.rint(np.ldexp(np.where(finite, a, 0.0), mb - e)), e - mb)
    q = np.minimum(q, max_fin)
    out = np.where(np.signbit(x), -q, q)
    return np.where(np.isnan(x), np.nan, np.where(np.isinf(x), np.copysign(max_fin, x), out))


def fp8_encode(x: float, variant: str, s: float = 1.0) -> Fp8Code:
    """Encode x/s to an FP8 byte (round-to-nearest-even, saturating)."""
    if s <= 0:
        raise ValueError(f"scale must be positive, got {s}")
    eb, mb, bias, max_fin = FP8_VARIANTS[variant]
    v = x / s
    sign = 1 if (np.signbit(v) and not np.isnan(v)) else 0
    if np.isnan(v):
        byte = 0x7F if variant == "E4M3" else 0x7E
        return Fp8Code(byte | (0x80 if np.signbit(v) else 0), variant)
    v = float(fp8_round_values(np.array([v]), variant)[0])
    a = abs(v)
    if a == 0.0:
        return Fp8Code(sign << 7, variant)
    e = int(np.floor(np.log2(a)))
    if e < 1 - bias:  # subnormal
        frac = int(round(a / 2.0 ** (1 - bias - mb)))
        return Fp8Code((sign << 7) | frac, variant)
    frac = int(round((a / 2.0 ** e - 1.0) * (1 << mb)))
    return Fp8Code((sign << 7) | ((e + bias) << mb) | frac, variant)


def fp8_decode(code: Fp8Code) -> float:
    return _decode_one(code.byte, code.variant)


# ---------------------------------------------------------------------------
# VSQ: coarse software scale + per-group integer sub-scales
# ---------------------------------------------------------------------------

@dataclass
class VsqBlock:
    coarse_scale: float
    sub_scales: np.ndarray  # int, one per k2-group
    codes: np.ndarray       # int, two's-complement range of the element width


def vsq_quantize(x, element_bits: int, d2: int, k2: int,
                 s: float | None = None) -> VsqBlock:
    """Quantize a vector with a coarse scale and integer group sub-scales.

    Sub-scales are chosen by max-alignment per group: the smallest
    integer that keeps the group max in code range (so the per-element
    error stays within half a step), clamped to [1, 2^d2 - 1].
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size % k2 != 0:
        raise ValueError(f"vector length {x.size} is not a multiple of k2={k2}")
    if d2 < 1:
        raise ValueError("VSQ needs at least one sub-scale bit")
    if not np.isfinite(x).all():
        raise ValueError("non-finite input")
    intmax = 2 ** (element_bits - 1) - 1
    ss_max = 2 ** d2 - 1
    if s is None:
        amax = float(np.max(np.abs(x))) if x.size else 0.0
        s = amax / (intmax * ss_max) if amax > 0 else 1.0
    gmax = np.abs(x).reshape(-1, k2).max(axis=1)
    ss = np.ceil(gmax / (s * intmax))
    ss = np.clip(ss, 1, ss_max).astype(np.int64)
    step = s * np.repeat(ss, k2)
    codes = np.clip(np.rint(x / step), -(intmax + 1), intmax).astype(np.int64)
    return VsqBlock(coarse_scale=s, sub_scales=ss, codes=codes)


def vsq_dequantize(b: VsqBlock, k2: int) -> np.ndarray:
    step = b.coarse_scale * np.repeat(b.sub_scales, k2)
    return b.codes * step
