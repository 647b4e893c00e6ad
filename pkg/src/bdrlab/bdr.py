"""Two-level block quantization codec.

A block of ``k1`` values shares one power-of-two exponent ``E``; each
``k2``-element sub-block may additionally be right-shifted by up to
``beta = 2**d2 - 1`` positions.  Elements are stored sign-magnitude with
``m`` explicit mantissa bits in fixed-point form ``b0.b1...b_{m-1}``
(no implicit leading one).

Rounding is round-to-nearest, ties to even.  If the largest magnitude of
a (sub-)block would round past the top of the mantissa grid, its
exponent is bumped by one before encoding so the per-element error bound
``|q - x| <= 2**(E - tau - m)`` stays valid for the anchor element.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from collections import deque
from fractions import Fraction

import numpy as np

# Shared exponent storage: 8 bits, bias 127.
E_MIN = -127
E_MAX = 128

SCALE_KINDS = ("power-of-two", "high-precision-software", "integer")
SUB_SCALE_KINDS = ("none", "power-of-two", "integer", "per-element-exponent")


@dataclass(frozen=True)
class BDRConfig:
    """Five-parameter block format descriptor.

    m:  explicit mantissa bits (excluding sign)
    d1: first-level scale width in bits
    d2: second-level scale width in bits (0 = conventional BFP)
    k1: first-level block granularity
    k2: second-level sub-block granularity (divides k1)
    """

    m: int
    d1: int = 8
    d2: int = 0
    k1: int = 1
    k2: int = 1
    scale_kind: str = "power-of-two"
    sub_scale_kind: str = "power-of-two"

    def __post_init__(self):
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError(f"block granularities must be >= 1, got k1={self.k1}, k2={self.k2}")
        if self.k1 % self.k2 != 0:
            raise ValueError(f"k2={self.k2} must divide k1={self.k1}")
        if self.m < 1:
            raise ValueError(f"need at least one mantissa bit, got m={self.m}")
        if not 0 <= self.d1 <= 8:
            raise ValueError(f"d1 must be in [0, 8], got {self.d1}")
        if self.d2 < 0:
            raise ValueError(f"d2 must be >= 0, got {self.d2}")
        if self.scale_kind not in SCALE_KINDS:
            raise ValueError(f"unknown scale_kind {self.scale_kind!r}")
        if self.d2 == 0:
            object.__setattr__(self, "sub_scale_kind", "none")
        elif self.sub_scale_kind not in SUB_SCALE_KINDS or self.sub_scale_kind == "none":
            raise ValueError(f"d2={self.d2} requires a sub_scale_kind, got {self.sub_scale_kind!r}")

    @property
    def beta(self) -> int:
        return 2 ** self.d2 - 1

    @property
    def n_sub(self) -> int:
        return self.k1 // self.k2

    @property
    def grid_max(self) -> float:
        """Largest representable mantissa value, 2 - 2^(1-m)."""
        return 2.0 - 2.0 ** (1 - self.m)

    def key(self) -> str:
        return (f"m{self.m}-d1{self.d1}-d2{self.d2}-k1{self.k1}-k2{self.k2}-"
                f"{self.scale_kind}")


@dataclass
class ScaleState:
    """Bounded window of recent absolute-maximum observations."""

    capacity: int
    window: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("window capacity must be >= 1")
        self.window = deque(self.window, maxlen=self.capacity)

    def push(self, amax: float) -> None:
        if amax < 0:
            raise ValueError("absolute maximum cannot be negative")
        self.window.append(amax)

    def running_max(self) -> float:
        return max(self.window) if self.window else 0.0


@dataclass
class BlockArrays:
    """Column-oriented storage for a batch of quantized blocks.

    shared_exp : (nb,) int            shifts : (nb, k1/k2) int
    signs      : (nb, k1) bool        mags   : (nb, k1) int
    zero       : (nb,) bool           scales : (nb,) float or None
    """

    shared_exp: np.ndarray
    shifts: np.ndarray
    signs: np.ndarray
    mags: np.ndarray
    zero: np.ndarray
    saturated: np.ndarray
    scales: np.ndarray | None = None

    def __len__(self):
        return len(self.shared_exp)


@dataclass
class QuantizedBlock:
    """One k1-element block: exponent, sub-block shifts, sign/magnitude codes."""

    shared_exp: int
    shifts: np.ndarray
    signs: np.ndarray
    mags: np.ndarray
    zero: bool
    scale: float | None = None


@dataclass
class QuantizedTensor:
    """Blocks laid out along one reduction axis of an N-d tensor."""

    shape: tuple
    axis: int
    cfg: BDRConfig
    blocks: BlockArrays
    tail_len: int

    @property
    def blocks_per_fiber(self) -> int:
        return -(-self.shape[self.axis] // self.cfg.k1)

    def block(self, i: int) -> QuantizedBlock:
        b = self.blocks
        return QuantizedBlock(
            shared_exp=int(b.shared_exp[i]),
            shifts=b.shifts[i].copy(),
            signs=b.signs[i].copy(),
            mags=b.mags[i].copy(),
            zero=bool(b.zero[i]),
            scale=None if b.scales is None else float(b.scales[i]),
        )


def _require_finite(x: np.ndarray) -> None:
    bad = ~np.isfinite(x)
    if bad.any():
        idx = np.unravel_index(int(np.flatnonzero(bad.ravel())[0]), x.shape)
        raise ValueError(f"non-finite input value {x[idx]!r} at index {idx}")


def _carry_adjusted_exponents(amax: np.ndarray, m: int) -> np.ndarray:
    """Exponent of each magnitude, bumped where rounding would carry out.

    Valid only where amax > 0; callers mask zero entries.
    """
    _, ex = np.frexp(amax)
    e = ex.astype(np.int64) - 1  # floor(log2(amax))
    q = np.rint(np.ldexp(amax, (m - 1) - e))
    return np.where(q >= 2 ** m, e + 1, e)


def compute_shared_exponent(x, m: int) -> int:
    """Shared exponent of a block: carry-adjusted floor(log2(max |x|)).

    All-zero input yields E_MIN (the block is then flagged zero by the
    quantizer).  Non-finite input is rejected.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot compute an exponent of an empty block")
    _require_finite(x)
    amax = float(np.max(np.abs(x)))
    if amax == 0.0:
        return E_MIN
    e = int(_carry_adjusted_exponents(np.array([amax]), m)[0])
    return max(E_MIN, min(E_MAX, e))


def compute_subblock_shifts(x, E: int, cfg: BDRConfig) -> np.ndarray:
    """Per-sub-block right shifts tau_i = min(E - E_i, beta).

    E_i is the carry-adjusted max exponent of sub-block i; an all-zero
    sub-block is maximally down-shifted (tau = beta).
    """
    x = np.asarray(x, dtype=np.float64)
    _require_finite(x)
    if x.size != cfg.k1:
        raise ValueError(f"expected {cfg.k1} elements, got {x.size}")
    sub = np.abs(x).reshape(cfg.n_sub, cfg.k2)
    smax = sub.max(axis=1)
    szero = smax == 0.0
    ei = _carry_adjusted_exponents(np.where(szero, 1.0, smax), cfg.m)
    ei = np.minimum(ei, E)
    tau = np.clip(E - ei, 0, cfg.beta)
    return np.where(szero, cfg.beta, tau).astype(np.int64)


def quantize_blocks(x2d: np.ndarray, cfg: BDRConfig) -> BlockArrays:
    """Quantize an (nb, k1) batch of blocks."""
    x2d = np.asarray(x2d, dtype=np.float64)
    _require_finite(x2d)
    nb, width = x2d.shape
    if width != cfg.k1:
        raise ValueError(f"expected row width {cfg.k1}, got {width}")
    if cfg.sub_scale_kind not in ("none", "power-of-two"):
        raise ValueError(
            f"the block codec handles sub_scale_kind 'none'/'power-of-two'; "
            f"{cfg.sub_scale_kind!r} formats have dedicated codecs in bdrlab.formats")

    scales = None
    work = x2d
    if cfg.scale_kind != "power-of-two":
        amax0 = np.abs(x2d).max(axis=1)
        s = amax0 / cfg.grid_max
        if cfg.scale_kind == "integer":
            s = np.maximum(1.0, np.rint(s))
        s = np.where(s == 0.0, 1.0, s)
        scales = s
        work = x2d / s[:, None]

    ax = np.abs(work)
    amax = ax.max(axis=1)
    zero = amax == 0.0
    e_blk = _carry_adjusted_exponents(np.where(zero, 1.0, amax), cfg.m)
    e_blk = np.clip(e_blk, E_MIN, E_MAX)
    e_blk = np.where(zero, E_MIN, e_blk)

    sub = ax.reshape(nb, cfg.n_sub, cfg.k2)
    smax = sub.max(axis=2)
    szero = smax == 0.0
    e_sub = _carry_adjusted_exponents(np.where(szero, 1.0, smax), cfg.m)
    e_sub = np.minimum(e_sub, e_blk[:, None])
    tau = np.clip(e_blk[:, None] - e_sub, 0, cfg.beta)
    tau = np.where(szero, cfg.beta, tau)

    # Scale exponent per element; encode on the fixed-point grid.
    se = e_blk[:, None, None] - tau[:, :, None]
    q = np.rint(np.ldexp(sub, (cfg.m - 1) - se))
    top = 2 ** cfg.m - 1
    saturated = q > top
    q = np.minimum(q, top)

    return BlockArrays(
        shared_exp=e_blk,
        shifts=tau.astype(np.int64),
        signs=np.signbit(work) & (work != 0.0),
        mags=q.reshape(nb, cfg.k1).astype(np.int64),
        zero=zero,
        saturated=saturated.reshape(nb, cfg.k1),
        scales=scales,
    )


def dequantize_blocks(b: BlockArrays, cfg: BDRConfig) -> np.ndarray:
    nb = len(b)
    se = b.shared_exp[:, None, None] - b.shifts[:, :, None]
    vals = np.ldexp(b.mags.reshape(nb, cfg.n_sub, cfg.k2).astype(np.float64),
                    se - (cfg.m - 1)).reshape(nb, cfg.k1)
    vals[b.signs] = -vals[b.signs]
    if b.scales is not None:
        vals = vals * b.scales[:, None]
    return vals


def quantize_dequantize(x2d: np.ndarray, cfg: BDRConfig) -> np.ndarray:
    """Round-trip an (n, L) batch through the codec, padding tails with zeros."""
    x2d = np.asarray(x2d, dtype=np.float64)
    n, length = x2d.shape
    pad = (-length) % cfg.k1
    if pad:
        x2d = np.concatenate([x2d, np.zeros((n, pad))], axis=1)
    blocks = quantize_blocks(x2d.reshape(-1, cfg.k1), cfg)
    out = dequantize_blocks(blocks, cfg).reshape(n, length + pad)
    return out[:, :length]


def quantize_block(x, cfg: BDRConfig) -> QuantizedBlock:
    x = np.asarray(x, dtype=np.float64)
    if x.size != cfg.k1:
        raise ValueError(f"expected {cfg.k1} elements, got {x.size}")
    b = quantize_blocks(x.reshape(1, cfg.k1), cfg)
    return QuantizedBlock(
        shared_exp=int(b.shared_exp[0]),
        shifts=b.shifts[0],
        signs=b.signs[0],
        mags=b.mags[0],
        zero=bool(b.zero[0]),
        scale=None if b.scales is None else float(b.scales[0]),
    )


def dequantize_block(blk: QuantizedBlock, cfg: BDRConfig) -> np.ndarray:
    arrays = BlockArrays(
        shared_exp=np.array([blk.shared_exp]),
        shifts=blk.shifts.reshape(1, -1),
        signs=blk.signs.reshape(1, -1),
        mags=blk.mags.reshape(1, -1),
        zero=np.array([blk.zero]),
        saturated=np.zeros((1, cfg.k1), dtype=bool),
        scales=None if blk.scale is None else np.array([blk.scale]),
    )
    return dequantize_blocks(arrays, cfg)[0]


def quantize_tensor_along_axis(t, axis: int, cfg: BDRConfig) -> QuantizedTensor:
    """Split every fiber along ``axis`` into k1-blocks (tail zero-padded)."""
    t = np.asarray(t, dtype=np.float64)
    if t.size == 0:
        raise ValueError("cannot quantize an empty tensor")
    if not -t.ndim <= axis < t.ndim:
        raise ValueError(f"axis {axis} out of range for rank-{t.ndim} tensor")
    axis %= t.ndim
    _require_finite(t)
    moved = np.moveaxis(t, axis, -1)
    length = moved.shape[-1]
    pad = (-length) % cfg.k1
    flat = moved.reshape(-1, length)
    if pad:
        flat = np.concatenate([flat, np.zeros((flat.shape[0], pad))], axis=1)
    blocks = quantize_blocks(flat.reshape(-1, cfg.k1), cfg)
    return QuantizedTensor(shape=t.shape, axis=axis, cfg=cfg, blocks=blocks,
                           tail_len=pad)


def dequantize_tensor(qt: QuantizedTensor) -> np.ndarray:
    cfg = qt.cfg
    vals = dequantize_blocks(qt.blocks, cfg)
    length = qt.shape[qt.axis]
    lead = tuple(s for i, s in enumerate(qt.shape) if i != qt.axis)
    padded = length + qt.tail_len
    moved = vals.reshape(lead + (padded,))[..., :length]
    return np.moveaxis(moved, -1, qt.axis)


def bits_per_element(cfg: BDRConfig) -> Fraction:
    """(m + 1) + d1/k1 + d2/k2 as an exact rational."""
    return Fraction(cfg.m + 1) + Fraction(cfg.d1, cfg.k1) + Fraction(cfg.d2, cfg.k2)
