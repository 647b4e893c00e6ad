"""Acceptance suite: the nine headline claims, at their stated tolerances.

Each test prints a one-line PASS summary with the measured numbers so the
suite doubles as a results table when run with `pytest -v -s`.
"""

import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from bdrlab import bdr
from bdrlab.bdr import BDRConfig, bits_per_element
from bdrlab.cost import dominates, packing_efficiency, pareto_frontier
from bdrlab.dot import UNCONSTRAINED, DotConfig, mx_dot, reference_dot
from bdrlab.fidelity import (DistributionSpec, codec_block_error,
                             exhaustive_min_block_error, inequality_chain,
                             per_vector_qsnr, qsnr_samples, sample_vectors)
from bdrlab.formats import fp8_decode, fp8_decode_table, fp8_encode, preset
from bdrlab.rng import LaneRng

PROTOCOL_DIST = DistributionSpec("gaussian-variable-variance", seed=0)
N_VECTORS = 10_000
VEC_LEN = 1024


@pytest.fixture(scope="module")
def protocol_means():
    """Mean QSNR of the headline formats under the 10K x 1024 protocol."""
    t0 = time.time()
    means = {}
    for name in ("MX9", "MX6", "MSFP16", "FP8-E4M3", "FP8-E5M2"):
        db = qsnr_samples(preset(name), PROTOCOL_DIST, N_VECTORS, VEC_LEN)
        means[name] = float(np.mean(db))
    means["_elapsed"] = time.time() - t0
    return means


def test_criterion_1_mx9_vs_e4m3_gap(protocol_means):
    gap = protocol_means["MX9"] - protocol_means["FP8-E4M3"]
    elapsed = protocol_means["_elapsed"]
    assert abs(gap - 16.0) <= 2.0, f"gap {gap:.2f} dB outside 16 +/- 2"
    assert elapsed < 120.0, f"protocol took {elapsed:.0f}s (budget 120s)"
    print(f"\n[criterion 1] PASS  MX9 - E4M3 = {gap:.2f} dB "
          f"(target 16 +/- 2), all 5 formats in {elapsed:.1f}s")


def test_criterion_2_mx9_vs_msfp16_gap(protocol_means):
    gap = protocol_means["MX9"] - protocol_means["MSFP16"]
    assert abs(gap - 3.6) <= 1.0, f"gap {gap:.2f} dB outside 3.6 +/- 1"
    print(f"\n[criterion 2] PASS  MX9 - MSFP16 = {gap:.2f} dB (target 3.6 +/- 1)")


def test_criterion_3_mx6_between_fp8_variants(protocol_means):
    lo, mid, hi = (protocol_means["FP8-E5M2"], protocol_means["MX6"],
                   protocol_means["FP8-E4M3"])
    assert lo < mid < hi, f"ordering violated: {lo:.2f}, {mid:.2f}, {hi:.2f}"
    print(f"\n[criterion 3] PASS  E5M2 {lo:.2f} < MX6 {mid:.2f} < E4M3 {hi:.2f} dB")


def test_criterion_4_knee_deltas():
    """Parameter-knee QSNR steps at the k1=16 geometry, measured per block."""
    X = sample_vectors(PROTOCOL_DIST, N_VECTORS, 16)
    def mean_db(cfg):
        return float(np.mean(per_vector_qsnr(X, bdr.quantize_dequantize(X, cfg))))

    base = mean_db(BDRConfig(m=7, d1=8, d2=1, k1=16, k2=2))
    d_d2 = mean_db(BDRConfig(m=7, d1=8, d2=2, k1=16, k2=2)) - base
    d_k2a = base - mean_db(BDRConfig(m=7, d1=8, d2=1, k1=16, k2=8))
    d_k2b = mean_db(BDRConfig(m=7, d1=8, d2=1, k1=16, k2=1)) - base
    assert abs(d_d2 - 0.5) <= 0.3, f"d2 1->2 delta {d_d2:.3f} outside 0.5 +/- 0.3"
    assert abs(d_k2a - 2.0) <= 0.7, f"k2 8->2 delta {d_k2a:.3f} outside 2 +/- 0.7"
    assert abs(d_k2b - 0.7) <= 0.4, f"k2 2->1 delta {d_k2b:.3f} outside 0.7 +/- 0.4"
    print(f"\n[criterion 4] PASS  d2 1->2: {d_d2:.2f} dB, k2 8->2: {d_k2a:.2f} dB, "
          f"k2 2->1: {d_k2b:.2f} dB")


def test_criterion_5_bound_dominance_and_slope():
    from bdrlab.verify import run_verification
    rep = run_verification(n_configs=100, vectors_per_case=40, vec_len=256, seed=0)
    assert rep.n_configs >= 100 and rep.n_distributions == 5
    assert rep.violations == 0, "\n".join(rep.lines)
    assert abs(rep.bound_slope - 6.02) <= 0.5
    assert abs(rep.measured_slope - 6.02) <= 0.5
    print(f"\n[criterion 5] PASS  {rep.n_measurements} measurements, 0 below bound "
          f"(min margin {rep.min_margin_db:.2f} dB); slopes bound "
          f"{rep.bound_slope:.2f} / measured {rep.measured_slope:.2f} dB/bit")


def test_criterion_6_appendix_oracle_tiny_instances():
    """Exhaustive tiny instances: per-element bound, inequality chain, and
    shift optimality vs. brute force — zero counterexamples."""
    grid = np.array([0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5])
    cases = 0
    configs = [BDRConfig(m=2, d1=8, d2=1, k1=4, k2=2),
               BDRConfig(m=3, d1=8, d2=1, k1=4, k2=2),
               BDRConfig(m=2, d1=8, d2=2, k1=4, k2=1),
               BDRConfig(m=3, d1=8, d2=1, k1=2, k2=1)]
    for cfg in configs:
        for vals in product(grid, repeat=cfg.k1):
            x = np.array(vals)
            if not x.any():
                continue
            cases += 1
            ch = inequality_chain(x, cfg)
            assert ch.elementwise_ok, f"element bound broken on {x} {cfg.key()}"
            assert ch.noise_sq <= ch.noise_bound + 1e-12
            if not ch.carry_adjusted:
                assert ch.signal_sq >= ch.signal_floor - 1e-12
            assert ch.noise_sq / ch.signal_sq <= ch.nsr_ceiling + 1e-12
            assert (codec_block_error(x, cfg)
                    <= exhaustive_min_block_error(x, cfg) + 1e-12)
    print(f"\n[criterion 6] PASS  {cases} exhaustive tiny blocks, 0 counterexamples")


def test_criterion_7_dot_engine_oracle_equivalence():
    """10K fuzzed dot products, unconstrained accumulator: bitwise equality
    with a compensated-summation reference on the quantized operands."""
    configs = [BDRConfig(m=7, d1=8, d2=1, k1=16, k2=2),   # MX-style
               BDRConfig(m=4, d1=8, d2=1, k1=16, k2=2),
               BDRConfig(m=2, d1=8, d2=1, k1=16, k2=2),
               BDRConfig(m=5, d1=8, d2=0, k1=16, k2=1),   # BFP
               BDRConfig(m=3, d1=8, d2=2, k1=8, k2=1),
               BDRConfig(m=6, d1=8, d2=0, k1=1, k2=1)]    # scalar
    rng = LaneRng(1234, 2)
    cases = 0
    for trial in range(10_000):
        cfg = configs[trial % len(configs)]
        r = cfg.k1 * (1 + trial % 3)
        X = rng.normal_block(r)
        if trial % 7 == 0:
            X[0, : r // 2] = 0.0  # exercise zero blocks
        qa = bdr.quantize_tensor_along_axis(X[0], 0, cfg)
        qb = bdr.quantize_tensor_along_axis(X[1], 0, cfg)
        got = mx_dot(qa, qb, DotConfig(cfg=cfg, r=r, f=UNCONSTRAINED)).value
        ref = reference_dot(bdr.dequantize_tensor(qa), bdr.dequantize_tensor(qb))
        assert got == ref, f"trial {trial}: {got!r} != {ref!r} for {cfg.key()}"
        cases += 1
    print(f"\n[criterion 7] PASS  {cases} fuzz cases bitwise-equal to the oracle")


def test_criterion_8_format_arithmetic():
    assert bits_per_element(preset("MX9").cfg) == Fraction(9)
    assert bits_per_element(preset("MX6").cfg) == Fraction(6)
    assert bits_per_element(preset("MX4").cfg) == Fraction(4)
    assert packing_efficiency(preset("MX9")) == 0.90
    assert packing_efficiency(preset("FP8-E4M3")) == 1.00
    for variant in ("E4M3", "E5M2"):
        table = fp8_decode_table(variant)
        for code in range(256):
            v = table[code]
            if not np.isfinite(v):
                continue
            back = fp8_encode(v, variant)
            assert fp8_decode(back) == v
            if v != 0.0:
                assert back.byte == code
    print("\n[criterion 8] PASS  bits/elem 9/6/4, packing 0.90/1.00, "
          "FP8 256-pattern round-trips clean")


def test_criterion_9_sweep_scale(tmp_path):
    from bdrlab.sweep import SweepSpec, enumerate_configs, run_sweep
    t0 = time.time()
    spec = SweepSpec()
    rows, skipped = enumerate_configs(spec)
    assert len(rows) > 800, f"only {len(rows)} valid configurations"
    points = list(run_sweep(spec, workers=1))
    elapsed = time.time() - t0
    assert len(points) == len(rows)
    assert elapsed < 1800.0, f"sweep took {elapsed:.0f}s (budget 30 min)"
    frontier = pareto_frontier(points)
    names = {id(p) for p in frontier}
    for p in points:
        if id(p) not in names:
            assert any(dominates(f, p) for f in frontier), \
                f"{p.name} excluded but not dominated"
    print(f"\n[criterion 9] PASS  {len(points)} configs in {elapsed / 60:.1f} min, "
          f"{len(frontier)}-point dominance-verified frontier")
