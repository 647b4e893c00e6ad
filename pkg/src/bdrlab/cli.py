"""bdrlab command-line interface.

Exit codes: 0 success, 1 usage error (bad flags/arguments), 2 data error
(malformed files, invalid values, failed verification).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import bdr, cost, dot, fidelity, sweep as sweep_mod, tensorio, verify
from .bdr import BDRConfig
from .formats import DEFAULT_WINDOW, UnknownPresetError, known_presets, preset
from .rng import LaneRng

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _die(msg: str) -> "SystemExit":
    print(f"error: {msg}", file=sys.stderr)
    return SystemExit(DATA_ERROR)


def _dist_from_args(args) -> fidelity.DistributionSpec:
    params = tuple(float(p) for p in args.dist_params.split(",")) \
        if getattr(args, "dist_params", "") else ()
    return fidelity.DistributionSpec(args.dist, seed=args.seed, params=params)


def _config_from_args(args, need_preset_kind=None):
    """Resolve --preset or raw --m/--d1/--d2/--k1/--k2 into a BDRConfig."""
    if args.preset:
        fmt = preset(args.preset)
        if need_preset_kind and fmt.kind != need_preset_kind:
            raise ValueError(f"{fmt.name} is not a block ({need_preset_kind}) format")
        return fmt.cfg
    if args.m is None:
        raise ValueError("either --preset or --m (with --k1 etc.) is required")
    return BDRConfig(m=args.m, d1=args.d1, d2=args.d2, k1=args.k1, k2=args.k2)


def _add_raw_format_flags(p):
    p.add_argument("--preset", help="named format, e.g. MX9, BFP(16,5)")
    p.add_argument("--m", type=int, help="explicit mantissa bits")
    p.add_argument("--d1", type=int, default=8)
    p.add_argument("--d2", type=int, default=0)
    p.add_argument("--k1", type=int, default=16)
    p.add_argument("--k2", type=int, default=1)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_quantize(args) -> int:
    x = tensorio.read_tensor(args.input)
    fmt = preset(args.preset)
    if fmt.kind != "bdr":
        raise ValueError(f"quantize works on block formats; {fmt.name} is {fmt.kind}")
    qt = bdr.quantize_tensor_along_axis(x, args.axis, fmt.cfg)
    y = bdr.dequantize_tensor(qt)
    tensorio.write_tensor(args.output, y)
    # float32 storage of the round-trip result is part of the pipeline
    y32 = y.astype(np.float32).astype(np.float64)
    sig = float(np.sum(x * x))
    if sig == 0.0:
        q = None
    else:
        q = fidelity.qsnr(x, y32)
        q = "inf" if math.isinf(q) else q
    report = {
        "preset": fmt.name,
        "axis": args.axis,
        "qsnr_db": q,
        "max_abs_err": float(np.max(np.abs(y32 - x))),
    }
    print(json.dumps(report))
    return 0


def cmd_qsnr(args) -> int:
    fmt = preset(args.preset)
    dist = _dist_from_args(args)
    db = fidelity.qsnr_samples(fmt, dist, args.n_vectors, args.vec_len,
                               window=args.window)
    finite = db[np.isfinite(db)]
    mean = float(np.mean(db)) if finite.size == db.size else math.inf
    std = float(np.std(finite)) if finite.size else 0.0
    print(f"{fmt.name} over {dist.kind} "
          f"({args.n_vectors} x {args.vec_len}, seed {args.seed}): "
          f"mean QSNR {mean:.3f} dB, std {std:.3f} dB")
    if args.plot:
        from .plots import save_qsnr_hist
        path = save_qsnr_hist(finite, args.plot,
                              title=f"{fmt.name} / {dist.kind}")
        print(f"wrote {path}")
    return 0


def cmd_bound(args) -> int:
    cfg = _config_from_args(args, need_preset_kind="bdr")
    print(f"{fidelity.bound_for_config(cfg, args.n):.4f}")
    return 0


def cmd_dot(args) -> int:
    cfg = _config_from_args(args, need_preset_kind="bdr")
    if args.f == "unconstrained":
        f = dot.UNCONSTRAINED
    elif args.f is not None:
        f = int(args.f)
    else:
        f = None
    dc = dot.DotConfig(cfg=cfg, r=args.r, f=f)
    if args.a or args.b:
        if not (args.a and args.b):
            raise ValueError("--a and --b must be given together")
        x, y = tensorio.read_tensor(args.a), tensorio.read_tensor(args.b)
        if x.ndim != 1 or y.ndim != 1:
            raise ValueError("dot operands must be rank-1 tensors")
    else:
        rng = LaneRng(args.seed, 2)
        X = rng.normal_block(args.r)
        x, y = X[0], X[1]
    qa = bdr.quantize_tensor_along_axis(x, 0, cfg)
    qb = bdr.quantize_tensor_along_axis(y, 0, cfg)
    res = dot.mx_dot(qa, qb, dc)
    ref = dot.reference_dot(bdr.dequantize_tensor(qa), bdr.dequantize_tensor(qb))
    print(f"pipeline : {res.value!r}")
    print(f"reference: {ref!r}  (dot of the quantized operands)")
    print(f"abs error: {abs(res.value - ref):.6e}  overflow: {res.overflow}")
    return 0


def cmd_sweep(args) -> int:
    spec = sweep_mod.SweepSpec(
        dist=fidelity.DistributionSpec("gaussian-variable-variance", seed=args.seed),
        n_vectors=args.n_vectors, vec_len=args.vec_len, window=args.window)
    total, skipped = sweep_mod.grid_size(spec)
    print(f"grid: {total} valid configurations ({skipped} invalid combinations "
          f"skipped)", file=sys.stderr)
    done = []
    if args.resume and os.path.exists(args.out):
        done = cost.read_cost_csv(args.out)
        print(f"resuming: {len(done)} rows already in {args.out}", file=sys.stderr)
    done_names = {p.name for p in done}
    points = list(done)
    n_done = len(done)

    def note(name):
        nonlocal n_done
        n_done += 1
        if n_done % 50 == 0 or n_done == total:
            print(f"  {n_done}/{total} rows", file=sys.stderr)

    checkpoint = args.out + ".part"
    cost.write_cost_csv(checkpoint, points)
    import csv as _csv
    with open(checkpoint, "a", newline="") as fh:
        w = _csv.writer(fh)
        for p in sweep_mod.run_sweep(spec, done_names=done_names,
                                     workers=args.workers, progress=note):
            points.append(p)
            w.writerow([p.name, f"{p.qsnr_db:.6f}", f"{p.area:.6f}",
                        f"{p.mem_cost:.6f}", f"{p.combined:.6f}"])
            fh.flush()
    points.sort(key=lambda p: p.name)
    cost.write_cost_csv(args.out, points)
    os.remove(checkpoint)
    print(f"wrote {len(points)} rows to {args.out}")
    return 0


def cmd_pareto(args) -> int:
    points = cost.read_cost_csv(args.input)
    frontier = cost.pareto_frontier(points)
    cost.write_cost_csv(args.out, frontier)
    print(f"{len(frontier)} frontier points (of {len(points)}) -> {args.out}")
    if args.plot:
        from .plots import save_pareto_plot
        path = save_pareto_plot(points, frontier, args.plot)
        print(f"wrote {path}")
    return 0


def cmd_verify(args) -> int:
    rep = verify.run_verification(n_configs=args.n_configs,
                                  vectors_per_case=args.n_vectors,
                                  vec_len=args.vec_len, seed=args.seed)
    for line in rep.lines:
        print(line)
    if rep.ok:
        print("verify: PASS")
        return 0
    print("verify: FAIL", file=sys.stderr)
    return DATA_ERROR


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="bdrlab",
                  description="Block-format quantization laboratory")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quantize", parents=[], help="round-trip a tensor file",
                       description="Quantize+dequantize a BDRT tensor file.")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--preset", required=True,
                   help=f"one of: {', '.join(known_presets())}")
    p.add_argument("--axis", type=int, default=-1)
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("qsnr", help="Monte-Carlo QSNR of a preset")
    p.add_argument("--preset", required=True)
    p.add_argument("--dist", default="gaussian-variable-variance",
                   choices=fidelity.DISTRIBUTION_KINDS)
    p.add_argument("--dist-params", default="",
                   help="comma-separated distribution parameters")
    p.add_argument("--n-vectors", type=int, default=1024)
    p.add_argument("--vec-len", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--plot", help="write a QSNR histogram (PNG) here")
    p.set_defaults(func=cmd_qsnr)

    p = sub.add_parser("bound", help="worst-case QSNR lower bound (dB)")
    _add_raw_format_flags(p)
    p.add_argument("--n", type=int, default=1024, help="vector length")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("dot", help="run the fixed-point dot pipeline")
    _add_raw_format_flags(p)
    p.add_argument("--r", type=int, default=64, help="reduction length")
    p.add_argument("--f", help="accumulator width (int) or 'unconstrained'")
    p.add_argument("--a", help="BDRT file for the left operand")
    p.add_argument("--b", help="BDRT file for the right operand")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for generated operands when no files are given")
    p.set_defaults(func=cmd_dot)

    p = sub.add_parser("sweep", help="design-space sweep to CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-vectors", type=int, default=1024)
    p.add_argument("--vec-len", type=int, default=1024)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: BDR_THREADS or 1)")
    p.add_argument("--resume", action="store_true",
                   help="keep rows already present in the output CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pareto", help="extract the Pareto frontier from a sweep CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", help="write a frontier scatter plot (PNG) here")
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("verify", help="bound-dominance and slope verification suite")
    p.add_argument("--n-configs", type=int, default=100)
    p.add_argument("--n-vectors", type=int, default=40)
    p.add_argument("--vec-len", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (tensorio.TensorFileError, UnknownPresetError, ValueError, OSError) as e:
        raise _die(str(e))


if __name__ == "__main__":
    sys.exit(main())
