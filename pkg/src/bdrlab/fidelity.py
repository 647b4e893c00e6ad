"""QSNR measurement, data generators, and the worst-case QSNR lower bound.

The bound (in dB, for a block format with m mantissa bits, granularities
k1/k2 and beta = 2^d2 - 1) is

    QSNR >= 6.02*m + 10*log10( 2^(2*beta) / (min(N, k1) + (2^(2*beta)-1)*k2) )

and holds for any input distribution.  ``exhaustive_min_block_error``
and ``inequality_chain`` are brute-force oracles for the per-block error
analysis behind it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import bdr
from .bdr import BDRConfig, ScaleState
from .formats import (DEFAULT_WINDOW, FP8_VARIANTS, FormatPreset, delayed_scale,
                      fp8_round_values, int_quantize, vsq_dequantize, vsq_quantize)
from .rng import LaneRng

DISTRIBUTION_KINDS = (
    "gaussian-variable-variance",
    "gaussian-fixed",
    "uniform",
    "lognormal",
    "two-magnitude-adversarial",
)


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    seed: int = 0
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in DISTRIBUTION_KINDS:
            raise ValueError(f"unknown distribution {self.kind!r}; "
                             f"choose from {DISTRIBUTION_KINDS}")
        object.__setattr__(self, "params", tuple(self.params))

    def param(self, i: int, default: float) -> float:
        return self.params[i] if i < len(self.params) else default


@dataclass(frozen=True)
class QSNRReport:
    mean_db: float
    std_db: float
    n_vectors: int
    vec_len: int


@dataclass(frozen=True)
class BoundParams:
    N: int
    m: int
    k1: int
    k2: int
    beta: int

    @classmethod
    def from_config(cls, cfg: BDRConfig, N: int) -> "BoundParams":
        return cls(N=N, m=cfg.m, k1=cfg.k1, k2=cfg.k2, beta=cfg.beta)


def sample_vectors(dist: DistributionSpec, n_vectors: int, vec_len: int,
                   first_vector: int = 0) -> np.ndarray:
    """Draw (n_vectors, vec_len) samples; vector i uses lane first_vector+i."""
    if vec_len < 1 or n_vectors < 1:
        raise ValueError("need at least one vector of at least one element")
    rng = LaneRng(dist.seed, n_vectors, first_lane=first_vector)
    kind = dist.kind
    if kind == "gaussian-fixed":
        sigma = dist.param(0, 1.0)
        return rng.normal_block(vec_len) * sigma
    if kind == "gaussian-variable-variance":
        sigma = np.abs(rng.normal_block(1))  # one |N(0,1)| draw per vector
        return rng.normal_block(vec_len) * sigma
    if kind == "uniform":
        low, high = dist.param(0, -1.0), dist.param(1, 1.0)
        return low + (high - low) * rng.uniform_block(vec_len)
    if kind == "lognormal":
        mu, sigma = dist.param(0, 0.0), dist.param(1, 1.0)
        mag = np.exp(mu + sigma * rng.normal_block(vec_len))
        signs = np.where(rng.uniform_block(vec_len) < 0.5, -1.0, 1.0)
        return mag * signs
    # two-magnitude-adversarial: a sparse pattern of large outliers among
    # tiny values, with random signs.
    big = dist.param(0, 1.0)
    small = dist.param(1, 2.0 ** -20)
    ratio = dist.param(2, 0.5)
    period = max(1, round(1.0 / ratio))
    mags = np.where(np.arange(vec_len) % period == 0, big, small)
    signs = np.where(rng.uniform_block(vec_len) < 0.5, -1.0, 1.0)
    return mags[None, :] * signs


def sample_vector(dist: DistributionSpec, vec_len: int, index: int = 0) -> np.ndarray:
    return sample_vectors(dist, 1, vec_len, first_vector=index)[0]


def variable_variance_sigmas(dist: DistributionSpec, n_vectors: int) -> np.ndarray:
    """The per-vector sigma draws used by gaussian-variable-variance."""
    rng = LaneRng(dist.seed, n_vectors)
    return np.abs(rng.normal_block(1))[:, 0]


# ---------------------------------------------------------------------------
# QSNR
# ---------------------------------------------------------------------------

def qsnr(x, q) -> float:
    """-10*log10(||q - x||^2 / ||x||^2); +inf for an exact match."""
    x = np.asarray(x, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if x.shape != q.shape:
        raise ValueError("original and quantized vectors differ in shape")
    sig = float(np.sum(x * x))
    if sig == 0.0:
        raise ValueError("QSNR is undefined for an all-zero signal")
    noise = float(np.sum((q - x) ** 2))
    if noise == 0.0:
        return math.inf
    return -10.0 * math.log10(noise / sig)


def per_vector_qsnr(X: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Row-wise QSNR in dB (+inf where exact)."""
    noise = np.sum((Q - X) ** 2, axis=1)
    sig = np.sum(X * X, axis=1)
    if (sig == 0.0).any():
        raise ValueError("QSNR is undefined for an all-zero signal")
    with np.errstate(divide="ignore"):
        return -10.0 * np.log10(noise / sig)


def quantize_dequantize(fmt: FormatPreset, X: np.ndarray,
                        window: int = DEFAULT_WINDOW) -> np.ndarray:
    """Round-trip a batch of row vectors through a preset's full pipeline.

    Software-scaled presets consume the rows in order, maintaining the
    delayed-scaling window across them.
    """
    X = np.asarray(X, dtype=np.float64)
    if fmt.kind == "bdr":
        cfg = fmt.cfg
        if fmt.scaling_policy == "per-block-hw":
            return bdr.quantize_dequantize(X, cfg)
        if fmt.scaling_policy == "per-coarse-block-sw":
            sw = BDRConfig(m=cfg.m, d1=cfg.d1, d2=cfg.d2, k1=cfg.k1, k2=cfg.k2,
                           scale_kind="high-precision-software",
                           sub_scale_kind=cfg.sub_scale_kind)
            return bdr.quantize_dequantize(X, sw)
        # per-tensor-sw-delayed: coarse FP32 scale per row, then the
        # power-of-two block codec on the rescaled row.
        state = ScaleState(window)
        out = np.empty_like(X)
        for i, row in enumerate(X):
            s = delayed_scale(state, float(np.max(np.abs(row))), cfg.grid_max)
            out[i] = bdr.quantize_dequantize((row / s)[None, :], cfg)[0] * s
        return out
    if fmt.kind == "fp8":
        _, _, _, max_fin = FP8_VARIANTS[fmt.variant]
        state = ScaleState(window)
        out = np.empty_like(X)
        for i, row in enumerate(X):
            s = delayed_scale(state, float(np.max(np.abs(row))), max_fin)
            out[i] = fp8_round_values(row / s, fmt.variant) * s
        return out
    if fmt.kind == "int":
        intmax = 2 ** (fmt.bits - 1) - 1
        state = ScaleState(window)
        out = np.empty_like(X)
        for i, row in enumerate(X):
            s = delayed_scale(state, float(np.max(np.abs(row))), intmax)
            out[i] = int_quantize(row, fmt.bits, s) * s
        return out
    if fmt.kind == "vsq":
        intmax = 2 ** (fmt.bits - 1) - 1
        ss_max = 2 ** fmt.vsq_d2 - 1
        state = ScaleState(window)
        out = np.empty_like(X)
        for i, row in enumerate(X):
            s = delayed_scale(state, float(np.max(np.abs(row))), intmax * ss_max)
            blk = vsq_quantize(row, fmt.bits, fmt.vsq_d2, fmt.vsq_k2, s=s)
            out[i] = vsq_dequantize(blk, fmt.vsq_k2)
        return out
    raise ValueError(f"unhandled preset kind {fmt.kind!r}")


def qsnr_samples(fmt: FormatPreset, dist: DistributionSpec, n_vectors: int,
                 vec_len: int, window: int = DEFAULT_WINDOW) -> np.ndarray:
    X = sample_vectors(dist, n_vectors, vec_len)
    Q = quantize_dequantize(fmt, X, window=window)
    return per_vector_qsnr(X, Q)


def estimate_qsnr(fmt: FormatPreset, dist: DistributionSpec, n_vectors: int,
                  vec_len: int, window: int = DEFAULT_WINDOW,
                  pool_energy: bool = False) -> QSNRReport:
    """Monte-Carlo QSNR of a format over a distribution.

    By default per-vector QSNRs are averaged in dB; with ``pool_energy``
    the noise and signal energies are pooled before taking the log.
    """
    if n_vectors < 1:
        raise ValueError("need at least one vector")
    X = sample_vectors(dist, n_vectors, vec_len)
    Q = quantize_dequantize(fmt, X, window=window)
    if pool_energy:
        noise = float(np.sum((Q - X) ** 2))
        sig = float(np.sum(X * X))
        mean = math.inf if noise == 0.0 else -10.0 * math.log10(noise / sig)
        return QSNRReport(mean_db=mean, std_db=0.0, n_vectors=n_vectors,
                          vec_len=vec_len)
    db = per_vector_qsnr(X, Q)
    return QSNRReport(mean_db=float(np.mean(db)), std_db=float(np.std(db)),
                      n_vectors=n_vectors, vec_len=vec_len)


# ---------------------------------------------------------------------------
# Worst-case lower bound and its brute-force oracles
# ---------------------------------------------------------------------------

def theorem1_bound(p: BoundParams) -> float:
    """Worst-case QSNR floor in dB for a block format."""
    four_beta = 4.0 ** p.beta
    return 6.02 * p.m + 10.0 * math.log10(
        four_beta / (min(p.N, p.k1) + (four_beta - 1.0) * p.k2))


def bound_for_config(cfg: BDRConfig, N: int) -> float:
    return theorem1_bound(BoundParams.from_config(cfg, N))


def _grid_round(vals: np.ndarray, exps: np.ndarray, m: int) -> np.ndarray:
    """Round magnitudes to the b0.b1..b_{m-1} grid at the given exponents."""
    q = np.rint(np.ldexp(vals, (m - 1) - exps))
    q = np.minimum(q, 2 ** m - 1)
    return np.ldexp(q, exps - (m - 1))


def exhaustive_min_block_error(x, cfg: BDRConfig) -> float:
    """Minimum squared block error over anchored shift assignments.

    Enumerates every per-sub-block shift tuple in [0, beta]^(k1/k2) that
    keeps all elements on-grid (no saturation), which implies the anchor
    sub-block keeps shift zero, and returns the best total squared error.
    Small blocks only; this is the oracle the codec is checked against.
    """
    x = np.asarray(x, dtype=np.float64)
    E = bdr.compute_shared_exponent(x, cfg.m)
    if float(np.max(np.abs(x))) == 0.0:
        return 0.0
    sub = np.abs(x).reshape(cfg.n_sub, cfg.k2)
    smax = sub.max(axis=1)
    # Largest non-saturating shift per sub-block.
    limits = []
    for i, mx in enumerate(smax):
        if mx == 0.0:
            limits.append(cfg.beta)
            continue
        ei = int(bdr._carry_adjusted_exponents(np.array([mx]), cfg.m)[0])
        limits.append(min(cfg.beta, max(0, E - ei)))
    best = math.inf
    for taus in product(*[range(lim + 1) for lim in limits]):
        exps = E - np.repeat(np.array(taus), cfg.k2)
        q = _grid_round(np.abs(x), exps, cfg.m)
        err = float(np.sum((q - np.abs(x)) ** 2))
        best = min(best, err)
    return best


def codec_block_error(x, cfg: BDRConfig) -> float:
    x = np.asarray(x, dtype=np.float64)
    blk = bdr.quantize_block(x, cfg)
    dq = bdr.dequantize_block(blk, cfg)
    return float(np.sum((dq - x) ** 2))


@dataclass(frozen=True)
class ChainTerms:
    """Per-block quantities of the worst-case error analysis.

    noise_sq <= noise_bound, signal_sq >= signal_floor, and
    noise_sq/signal_sq <= nsr_ceiling; signal_floor is only claimed when
    no exponent carry-bump fired (carry anchors sit slightly below
    2^(E - tau)).
    """
    noise_sq: float
    noise_bound: float
    signal_sq: float
    signal_floor: float
    nsr_ceiling: float
    carry_adjusted: bool
    elementwise_ok: bool


def inequality_chain(x, cfg: BDRConfig) -> ChainTerms:
    """Evaluate the per-block inequality chain behind the QSNR bound."""
    x = np.asarray(x, dtype=np.float64)
    blk = bdr.quantize_block(x, cfg)
    dq = bdr.dequantize_block(blk, cfg)
    E, tau, beta = blk.shared_exp, blk.shifts, cfg.beta
    err = np.abs(dq - x)
    step_half = np.ldexp(1.0, E - np.repeat(tau, cfg.k2) - cfg.m)
    elementwise_ok = bool(np.all(err <= step_half + 1e-300))

    r = np.bincount(tau, minlength=beta + 1)  # shift histogram
    noise_sq = float(np.sum(err ** 2))
    noise_units = cfg.k1 + sum(
        r[t] * cfg.k2 * (4.0 ** (beta - t) - 1.0) for t in range(beta))
    noise_bound = noise_units / 4.0 ** beta * np.ldexp(1.0, 2 * (E - cfg.m))
    signal_sq = float(np.sum(x * x))
    signal_floor = float(sum(r[t] * np.ldexp(1.0, 2 * (E - t)) for t in range(beta)))
    nsr_ceiling = (cfg.k1 + (4.0 ** beta - 1.0) * cfg.k2) / 4.0 ** beta * 4.0 ** -cfg.m

    # Did any sub-block exponent come from a rounding carry?
    sub = np.abs(x).reshape(cfg.n_sub, cfg.k2)
    smax = sub.max(axis=1)
    carry = False
    for mx in smax[smax > 0]:
        _, ex = np.frexp(mx)
        if int(bdr._carry_adjusted_exponents(np.array([mx]), cfg.m)[0]) != ex - 1:
            carry = True
    return ChainTerms(noise_sq=noise_sq, noise_bound=float(noise_bound),
                      signal_sq=signal_sq, signal_floor=signal_floor,
                      nsr_ceiling=float(nsr_ceiling), carry_adjusted=carry,
                      elementwise_ok=elementwise_ok)


def random_valid_configs(n: int, seed: int = 0) -> list[BDRConfig]:
    """Sample n valid power-of-two-scaled configs for dominance checks."""
    rng = LaneRng(seed, 4)
    configs = []
    while len(configs) < n:
        u = rng.uniform()
        m = 2 + int(u[0] * 7)            # 2..8
        d2 = int(u[1] * 3)               # 0..2
        k2 = 2 ** int(u[2] * 4)          # 1,2,4,8
        k1 = k2 * (2 ** int(u[3] * 4))   # k2 .. 8*k2
        configs.append(BDRConfig(m=m, d1=8, d2=d2, k1=k1, k2=k2))
    return configs
