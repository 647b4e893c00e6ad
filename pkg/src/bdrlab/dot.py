"""Software model of the block dot-product hardware pipeline.

Per k1-block, mantissa products are summed as exact integers; the
conditional sub-block right-shifts are absorbed by carrying 2*beta guard
bits, so the intra-block reduction is lossless.  The r/k1 block partials
are then normalized to the largest partial's exponent with truncating
right shifts and accumulated in an f-bit two's-complement register that
saturates (and raises a flag) instead of wrapping.

Configuring k1 = k2 = 1 gives a scalar floating-point dot product;
d2 = 0 gives conventional block floating-point.  ``f=UNCONSTRAINED``
disables both the truncation and the saturation, making the pipeline
exact for on-grid inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bdr import BDRConfig, QuantizedTensor, quantize_tensor_along_axis

UNCONSTRAINED = math.inf


def default_acc_width(cfg: BDRConfig) -> int:
    """Bits needed to hold the largest exact block partial, capped at 25."""
    exact = 2 * cfg.m + math.ceil(math.log2(cfg.k1)) + 2 * cfg.beta + 1
    return min(25, exact)


@dataclass(frozen=True)
class DotConfig:
    cfg: BDRConfig
    r: int
    f: int | float | None = None  # None -> default formula; UNCONSTRAINED -> exact

    def __post_init__(self):
        if self.r % self.cfg.k1 != 0:
            raise ValueError(f"k1={self.cfg.k1} must divide r={self.r}")
        if self.f is None:
            object.__setattr__(self, "f", default_acc_width(self.cfg))
        elif self.f is not UNCONSTRAINED and (not isinstance(self.f, int) or self.f < 2):
            raise ValueError(f"accumulator width must be an int >= 2, got {self.f}")


@dataclass
class DotResult:
    value: float
    overflow: bool


@dataclass
class FixedPointAcc:
    """Saturating two's-complement accumulator of width f."""

    width: int
    value: int = 0
    overflow: bool = False

    def add(self, addend: int) -> None:
        lo, hi = -(1 << (self.width - 1)), (1 << (self.width - 1)) - 1
        self.value += addend
        if self.value > hi:
            self.value = hi
            self.overflow = True
        elif self.value < lo:
            self.value = lo
            self.overflow = True


def _block_rows(qt: QuantizedTensor):
    if len(qt.shape) != 1:
        raise ValueError("dot operands must be rank-1 quantized tensors")
    return qt.blocks


def mx_dot(a: QuantizedTensor, b: QuantizedTensor, dc: DotConfig) -> DotResult:
    """Dot product of two quantized vectors through the modeled datapath."""
    cfg = dc.cfg
    if a.cfg != cfg or b.cfg != cfg:
        raise ValueError("operands were quantized with a different format")
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.shape[0] != dc.r:
        raise ValueError(f"expected reduction length {dc.r}, got {a.shape[0]}")
    ba, bb = _block_rows(a), _block_rows(b)
    if ba.scales is not None or bb.scales is not None:
        raise ValueError("the hardware pipeline models power-of-two scaling only")

    guard = 2 * cfg.beta
    frac_bits = 2 * (cfg.m - 1) + guard
    m = cfg.m

    partials: list[tuple[int, int]] = []  # (integer value incl. guard bits, exponent)
    n_blocks = len(ba)
    for j in range(n_blocks):
        if ba.zero[j] or bb.zero[j]:
            continue
        p = 0
        for i in range(cfg.n_sub):
            lo, hi = i * cfg.k2, (i + 1) * cfg.k2
            sa = np.where(ba.signs[j, lo:hi], -ba.mags[j, lo:hi], ba.mags[j, lo:hi])
            sb = np.where(bb.signs[j, lo:hi], -bb.mags[j, lo:hi], bb.mags[j, lo:hi])
            ssum = int(np.dot(sa, sb))
            shift = guard - int(ba.shifts[j, i]) - int(bb.shifts[j, i])
            p += ssum << shift
        if p != 0:
            partials.append((p, int(ba.shared_exp[j]) + int(bb.shared_exp[j])))

    if not partials:
        return DotResult(0.0, False)

    if dc.f is UNCONSTRAINED:
        emin = min(e for _, e in partials)
        total = sum(p << (e - emin) for p, e in partials)
        return DotResult(_to_float(total, emin - frac_bits), False)

    emax = max(e for _, e in partials)
    acc = FixedPointAcc(width=int(dc.f))
    for p, e in partials:
        acc.add(p >> (emax - e))  # truncating alignment shift
    return DotResult(_to_float(acc.value, emax - frac_bits), acc.overflow)


def _to_float(mant: int, exp: int) -> float:
    if mant == 0:
        return 0.0
    # keep 63 significant bits so the ldexp below cannot overflow an int cast
    extra = max(0, mant.bit_length() - 63)
    return math.ldexp(float(mant >> extra) if mant >= 0 else -float((-mant) >> extra),
                      exp + extra) if extra else math.ldexp(mant, exp)


def quantized_dot(x, y, dc: DotConfig) -> DotResult:
    """Quantize two raw vectors in dc.cfg and run the pipeline."""
    qa = quantize_tensor_along_axis(np.asarray(x, dtype=np.float64), 0, dc.cfg)
    qb = quantize_tensor_along_axis(np.asarray(y, dtype=np.float64), 0, dc.cfg)
    return mx_dot(qa, qb, dc)


def reference_dot(x, y) -> float:
    """Wide-precision oracle: compensated (Neumaier) summation of products."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    s = 0.0
    comp = 0.0
    for xi, yi in zip(x, y):
        p = float(xi) * float(yi)
        t = s + p
        if abs(s) >= abs(p):
            comp += (s - t) + p
        else:
            comp += (p - t) + s
        s = t
    return s + comp
