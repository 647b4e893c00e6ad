"""Tests for QSNR measurement, distributions, the bound, and its oracles."""

import math
from itertools import product

import numpy as np
import pytest

from bdrlab import bdr
from bdrlab.bdr import BDRConfig
from bdrlab.fidelity import (BoundParams, DistributionSpec, bound_for_config,
                             codec_block_error, estimate_qsnr,
                             exhaustive_min_block_error, inequality_chain,
                             per_vector_qsnr, qsnr, random_valid_configs,
                             sample_vector, sample_vectors, theorem1_bound,
                             variable_variance_sigmas)
from bdrlab.formats import preset


# ---------------------------------------------------------------------------
# qsnr
# ---------------------------------------------------------------------------

def test_qsnr_known_value():
    assert qsnr([3.0, 4.0], [3.0, 4.5]) == pytest.approx(20.0)


def test_qsnr_exact_is_infinite():
    assert qsnr([1.0, 2.0], [1.0, 2.0]) == math.inf


def test_qsnr_zero_quantization_is_zero_db():
    assert qsnr([1.0, -2.0], [0.0, 0.0]) == pytest.approx(0.0)


def test_qsnr_rejects_zero_signal():
    with pytest.raises(ValueError):
        qsnr([0.0, 0.0], [0.1, 0.0])


def test_per_vector_qsnr_matches_scalar():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(5, 32))
    Q = X + rng.normal(size=(5, 32)) * 0.01
    rows = per_vector_qsnr(X, Q)
    for i in range(5):
        assert rows[i] == pytest.approx(qsnr(X[i], Q[i]))


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------

def test_sampling_is_deterministic():
    d = DistributionSpec("gaussian-fixed", seed=42, params=(1.0,))
    a = sample_vectors(d, 4, 64)
    b = sample_vectors(d, 4, 64)
    np.testing.assert_array_equal(a, b)


def test_sampling_is_schedule_independent():
    """Vector i is the same whether drawn alone or in a batch."""
    d = DistributionSpec("gaussian-variable-variance", seed=7)
    batch = sample_vectors(d, 8, 32)
    np.testing.assert_array_equal(sample_vector(d, 32, index=5), batch[5])


def test_unknown_distribution_rejected():
    with pytest.raises(ValueError, match="unknown distribution"):
        DistributionSpec("cauchy", seed=0)


def test_two_magnitude_alternates():
    d = DistributionSpec("two-magnitude-adversarial", seed=0,
                         params=(1.0, 2.0 ** -20, 0.5))
    x = np.abs(sample_vector(d, 8))
    np.testing.assert_allclose(x[0::2], 1.0)
    np.testing.assert_allclose(x[1::2], 2.0 ** -20)


def test_variable_variance_matches_half_normal():
    """KS-test the per-vector sigma draws against |N(0,1)| at n=10K."""
    scipy_stats = pytest.importorskip("scipy.stats")
    d = DistributionSpec("gaussian-variable-variance", seed=0)
    sig = variable_variance_sigmas(d, 10000)
    stat, p = scipy_stats.kstest(sig, "halfnorm")
    assert p > 0.01, f"KS stat {stat}, p {p}"


def test_gaussian_moments_sane():
    d = DistributionSpec("gaussian-fixed", seed=3, params=(2.0,))
    x = sample_vectors(d, 100, 1000)
    assert abs(float(np.mean(x))) < 0.02
    assert float(np.std(x)) == pytest.approx(2.0, rel=0.01)


def test_uniform_range():
    d = DistributionSpec("uniform", seed=1, params=(-3.0, 5.0))
    x = sample_vectors(d, 10, 1000)
    assert x.min() >= -3.0 and x.max() < 5.0
    assert float(np.mean(x)) == pytest.approx(1.0, abs=0.1)


# ---------------------------------------------------------------------------
# estimate_qsnr
# ---------------------------------------------------------------------------

def test_estimate_qsnr_deterministic():
    d = DistributionSpec("gaussian-variable-variance", seed=0)
    a = estimate_qsnr(preset("MX6"), d, 32, 128)
    b = estimate_qsnr(preset("MX6"), d, 32, 128)
    assert a == b


def test_estimate_qsnr_wide_mantissa_is_high():
    wide = BDRConfig(m=20, d1=8, d2=1, k1=16, k2=2)
    from bdrlab.formats import FormatPreset
    fmt = FormatPreset("wide", "bdr", "per-block-hw", cfg=wide)
    d = DistributionSpec("gaussian-fixed", seed=0, params=(1.0,))
    assert estimate_qsnr(fmt, d, 16, 256).mean_db > 60.0


def test_estimate_qsnr_pooled_close_to_db_mean():
    d = DistributionSpec("gaussian-fixed", seed=0, params=(1.0,))
    a = estimate_qsnr(preset("MX9"), d, 64, 512)
    b = estimate_qsnr(preset("MX9"), d, 64, 512, pool_energy=True)
    assert abs(a.mean_db - b.mean_db) < 1.0


def test_qsnr_scale_invariance_power_of_two():
    d = DistributionSpec("gaussian-fixed", seed=5, params=(1.0,))
    X = sample_vectors(d, 8, 64)
    cfg = preset("MX6").cfg
    a = per_vector_qsnr(X, bdr.quantize_dequantize(X, cfg))
    Xs = X * 2.0 ** 9
    b = per_vector_qsnr(Xs, bdr.quantize_dequantize(Xs, cfg))
    np.testing.assert_array_equal(a, b)


# ---------------------------------------------------------------------------
# the lower bound
# ---------------------------------------------------------------------------

def test_bound_mx9():
    assert bound_for_config(preset("MX9").cfg, 1024) == pytest.approx(34.74, abs=0.01)


def test_bound_mx4():
    assert bound_for_config(preset("MX4").cfg, 1024) == pytest.approx(4.64, abs=0.01)


def test_bound_bfp_collapse():
    cfg = BDRConfig(m=7, d1=8, d2=0, k1=16, k2=1)
    expect = 6.02 * 7 - 10 * math.log10(16)
    assert bound_for_config(cfg, 1024) == pytest.approx(expect)


def test_bound_small_n_uses_n():
    p16 = theorem1_bound(BoundParams(N=16, m=2, k1=16, k2=2, beta=1))
    p4 = theorem1_bound(BoundParams(N=4, m=2, k1=16, k2=2, beta=1))
    assert p16 == pytest.approx(4.64, abs=0.01)
    assert p4 > p16


def test_monotonicity_in_granularity():
    """Mean QSNR should not improve when k1 or k2 grows."""
    d = DistributionSpec("gaussian-variable-variance", seed=2)
    X = sample_vectors(d, 400, 256)

    def mean_db(cfg):
        return float(np.mean(per_vector_qsnr(X, bdr.quantize_dequantize(X, cfg))))

    k1_seq = [mean_db(BDRConfig(m=4, d1=8, d2=1, k1=k, k2=2)) for k in (8, 16, 32, 64)]
    k2_seq = [mean_db(BDRConfig(m=4, d1=8, d2=1, k1=16, k2=k)) for k in (1, 2, 4, 8)]
    tol = 0.05
    assert all(a >= b - tol for a, b in zip(k1_seq, k1_seq[1:]))
    assert all(a >= b - tol for a, b in zip(k2_seq, k2_seq[1:]))


def test_random_valid_configs_are_valid_and_plentiful():
    cfgs = random_valid_configs(100, seed=1)
    assert len(cfgs) == 100
    assert len({c.key() for c in cfgs}) > 20


# ---------------------------------------------------------------------------
# brute-force oracles (small instances)
# ---------------------------------------------------------------------------

TINY_GRID = np.array([0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5])


def test_codec_matches_shift_oracle_on_coarse_grid():
    """The codec's shifts must be squared-error optimal among anchored,
    non-saturating assignments on every coarse-grid block."""
    cfg = BDRConfig(m=2, d1=8, d2=1, k1=4, k2=2)
    bad = 0
    for vals in product(TINY_GRID, repeat=4):
        x = np.array(vals)
        if not x.any():
            continue
        if codec_block_error(x, cfg) > exhaustive_min_block_error(x, cfg) + 1e-12:
            bad += 1
    assert bad == 0


def test_inequality_chain_on_coarse_grid():
    cfg = BDRConfig(m=3, d1=8, d2=1, k1=4, k2=2)
    signs = np.array([1, -1, 1, -1])
    for vals in product(TINY_GRID, repeat=4):
        x = np.array(vals) * signs
        if not x.any():
            continue
        ch = inequality_chain(x, cfg)
        assert ch.elementwise_ok
        assert ch.noise_sq <= ch.noise_bound + 1e-12
        if not ch.carry_adjusted:
            assert ch.signal_sq >= ch.signal_floor - 1e-12
        assert ch.noise_sq / ch.signal_sq <= ch.nsr_ceiling + 1e-12


def test_chain_oracle_zero_counterexamples_k2_1():
    cfg = BDRConfig(m=2, d1=8, d2=2, k1=3, k2=1)
    for vals in product(TINY_GRID[::2], repeat=3):
        x = np.array(vals)
        if not x.any():
            continue
        ch = inequality_chain(x, cfg)
        assert ch.elementwise_ok
        assert ch.noise_sq / ch.signal_sq <= ch.nsr_ceiling + 1e-12
