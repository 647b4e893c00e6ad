"""Design-space sweep: grid enumeration, per-config scoring, checkpointed CSV."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bdr, fidelity
from .bdr import BDRConfig, ScaleState
from .cost import CostPoint, make_cost_point, mem_cost, normalized_area
from .fidelity import DistributionSpec, per_vector_qsnr
from .formats import DEFAULT_WINDOW, FormatPreset, delayed_scale

POLICY_TAGS = {
    "per-block-hw": "hw",
    "per-coarse-block-sw": "sw",
    "per-tensor-sw-delayed": "delayed",
}

_MX_ALIASES = {
    (7, 1, 16, 2, "per-block-hw"): "MX9",
    (4, 1, 16, 2, "per-block-hw"): "MX6",
    (2, 1, 16, 2, "per-block-hw"): "MX4",
}


@dataclass(frozen=True)
class SweepSpec:
    m_grid: tuple = (2, 3, 4, 5, 6, 7)
    d2_grid: tuple = (0, 1, 2)
    k1_grid: tuple = (8, 16, 32, 64)
    k2_grid: tuple = (1, 2, 4, 8)
    policies: tuple = ("per-block-hw", "per-coarse-block-sw", "per-tensor-sw-delayed")
    dist: DistributionSpec = field(
        default_factory=lambda: DistributionSpec("gaussian-variable-variance", seed=0))
    n_vectors: int = 1024
    vec_len: int = 1024
    r: int = 64
    window: int = DEFAULT_WINDOW


def row_name(cfg: BDRConfig, policy: str) -> str:
    alias = _MX_ALIASES.get((cfg.m, cfg.d2, cfg.k1, cfg.k2, policy))
    if alias:
        return alias
    return f"m{cfg.m}-d2_{cfg.d2}-k1_{cfg.k1}-k2_{cfg.k2}-{POLICY_TAGS[policy]}"


def enumerate_configs(spec: SweepSpec):
    """Canonically ordered (name, cfg, policy) rows; invalid combos skipped."""
    rows, skipped = [], 0
    for m in spec.m_grid:
        for d2 in spec.d2_grid:
            for k1 in spec.k1_grid:
                for k2 in spec.k2_grid:
                    for policy in spec.policies:
                        try:
                            if spec.r % k1 != 0:
                                raise ValueError(f"k1={k1} does not divide r={spec.r}")
                            cfg = BDRConfig(m=m, d1=8, d2=d2, k1=k1, k2=k2)
                        except ValueError:
                            skipped += 1
                            continue
                        rows.append((row_name(cfg, policy), cfg, policy))
    rows.sort(key=lambda t: t[0])
    return rows, skipped


def _score_config(cfg: BDRConfig, policy: str, X: np.ndarray, spec: SweepSpec) -> float:
    if policy == "per-block-hw":
        Q = bdr.quantize_dequantize(X, cfg)
    elif policy == "per-coarse-block-sw":
        sw = BDRConfig(m=cfg.m, d1=cfg.d1, d2=cfg.d2, k1=cfg.k1, k2=cfg.k2,
                       scale_kind="high-precision-software",
                       sub_scale_kind=cfg.sub_scale_kind)
        Q = bdr.quantize_dequantize(X, sw)
    else:
        state = ScaleState(spec.window)
        Q = np.empty_like(X)
        for i, row in enumerate(X):
            s = delayed_scale(state, float(np.max(np.abs(row))), cfg.grid_max)
            Q[i] = bdr.quantize_dequantize((row / s)[None, :], cfg)[0] * s
    return float(np.mean(per_vector_qsnr(X, Q)))


def evaluate_rows(rows, spec: SweepSpec, X: np.ndarray | None = None) -> list[CostPoint]:
    """Score a list of (name, cfg, policy) rows against one shared sample set."""
    if not rows:
        return []
    if X is None:
        X = fidelity.sample_vectors(spec.dist, spec.n_vectors, spec.vec_len)
    out = []
    for name, cfg, policy in rows:
        fmt = FormatPreset(name, "bdr", policy, cfg=cfg)
        q = _score_config(cfg, policy, X, spec)
        out.append(make_cost_point(name, q, normalized_area(fmt, r=spec.r),
                                   mem_cost(fmt)))
    return out


def _worker(args):
    return evaluate_rows(*args)


def run_sweep(spec: SweepSpec, done_names=(), workers: int | None = None,
              progress=None):
    """Evaluate the grid, skipping rows whose names are already done.

    Yields CostPoints in canonical (name-sorted) order.  Worker count
    defaults to the BDR_THREADS environment variable (1 if unset).
    """
    rows, skipped = enumerate_configs(spec)
    todo = [r for r in rows if r[0] not in set(done_names)]
    if workers is None:
        workers = max(1, int(os.environ.get("BDR_THREADS", "1")))
    if workers <= 1 or len(todo) < 2 * workers:
        X = fidelity.sample_vectors(spec.dist, spec.n_vectors, spec.vec_len) if todo else None
        for row in todo:
            yield evaluate_rows([row], spec, X=X)[0]
            if progress:
                progress(row[0])
        return
    chunks = [todo[i::workers] for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_worker, [(c, spec) for c in chunks]))
    merged = sorted((p for chunk in results for p in chunk), key=lambda p: p.name)
    for p in merged:
        if progress:
            progress(p.name)
        yield p


def grid_size(spec: SweepSpec):
    rows, skipped = enumerate_configs(spec)
    return len(rows), skipped
