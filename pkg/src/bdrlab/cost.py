"""Hardware cost modeling: memory packing, an area proxy, Pareto extraction.

The area proxy is a weighted structural count over the dot-product
datapath (multipliers, adder tree, conditional shifters, normalization,
final fixed-point reduction).  It is deliberately not a synthesis
number; measured areas can be loaded from a CSV table and override it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from .formats import FP8_VARIANTS, FormatPreset, preset_bits_per_element
from .dot import default_acc_width

BASELINE_FORMAT = "FP8-E4M3"
DEFAULT_REDUCTION = 64
DEFAULT_TILE = 256
DEFAULT_LINE_BITS = 512  # 64B memory interface


@dataclass(frozen=True)
class CostPoint:
    name: str
    qsnr_db: float
    area: float       # normalized, FP8 baseline = 1
    mem_cost: float   # 1 / packing efficiency
    combined: float   # area * mem_cost


def make_cost_point(name: str, qsnr_db: float, area: float, mem_cost: float) -> CostPoint:
    if area <= 0 or mem_cost <= 0:
        raise ValueError("cost components must be positive")
    return CostPoint(name, qsnr_db, area, mem_cost, area * mem_cost)


def packing_efficiency(fmt: FormatPreset, tile: int = DEFAULT_TILE,
                       line_bits: int = DEFAULT_LINE_BITS) -> float:
    """Payload fraction when a tile is bit-packed into fixed-width lines.

    Blocks are packed contiguously and may straddle line boundaries.
    """
    if tile < 1 or line_bits < 1:
        raise ValueError("tile and line width must be positive")
    if fmt.kind == "bdr" and tile % fmt.cfg.k1 != 0:
        raise ValueError(f"tile {tile} is not a multiple of k1={fmt.cfg.k1}")
    total_bits = tile * preset_bits_per_element(fmt)
    if total_bits.denominator != 1:
        raise ValueError(f"tile {tile} does not pack {fmt.name} to whole bits")
    total = int(total_bits)
    lines = -(-total // line_bits)
    return total / (lines * line_bits)


def mem_cost(fmt: FormatPreset, tile: int = DEFAULT_TILE,
             line_bits: int = DEFAULT_LINE_BITS) -> float:
    return 1.0 / packing_efficiency(fmt, tile, line_bits)


def _pipeline_counts(w: int, k1: int, k2: int, beta: int, r: int, f: int) -> float:
    """Structural unit count for one r-length dot datapath.

    w is the multiplier operand width (mantissa bits incl. the integer
    bit).  Adder widths grow per tree level; conditional shifters span
    2*beta positions; each partial gets a normalization barrel shifter
    and the partials reduce in an f-bit adder tree.
    """
    area = r * w * w                     # mantissa multipliers
    area += (r // k1) * 8                # shared-exponent adders
    if k1 > 1:
        levels = int(math.log2(k1))
        tree = sum((k1 >> l) * (2 * w + l + 2 * beta) for l in range(1, levels + 1))
        area += (r // k1) * tree
    if k2 >= 1 and beta > 0:
        area += (r // k2) * (2 * w + max(1, int(math.log2(max(2, k2))))) * 2 * beta
    n_part = r // k1
    area += n_part * f * max(1, math.ceil(math.log2(f)))   # normalization shifters
    area += max(0, n_part - 1) * f                          # final fixed adder tree
    return float(area)


def area_proxy(fmt: FormatPreset, r: int = DEFAULT_REDUCTION) -> float:
    """Structural-count area stand-in; monotone in m, r and beta."""
    if fmt.kind == "bdr":
        cfg = fmt.cfg
        if r % cfg.k1 != 0:
            raise ValueError(f"r={r} must be a multiple of k1={cfg.k1}")
        return _pipeline_counts(cfg.m, cfg.k1, cfg.k2, cfg.beta, r, default_acc_width(cfg))
    if fmt.kind == "fp8":
        mb = FP8_VARIANTS[fmt.variant][1]
        w = mb + 1  # implicit leading one
        f = min(25, 2 * w + 1)
        return _pipeline_counts(w, 1, 1, 0, r, f)
    if fmt.kind == "int":
        # plain integer MAC tree, no exponent handling
        w = fmt.bits
        levels = max(1, int(math.ceil(math.log2(r))))
        return float(r * w * w + sum((r >> l) * (2 * w + l) for l in range(1, levels + 1)))
    if fmt.kind == "vsq":
        w = fmt.bits
        base = area_proxy(FormatPreset(fmt.name, "int", fmt.scaling_policy, bits=w), r)
        # per-group integer rescale multipliers
        return base + (r // fmt.vsq_k2) * (2 * w) * fmt.vsq_d2
    raise ValueError(f"unhandled preset kind {fmt.kind!r}")


def normalized_area(fmt: FormatPreset, baseline: FormatPreset | None = None,
                    r: int = DEFAULT_REDUCTION) -> float:
    from .formats import preset as _preset
    base = baseline if baseline is not None else _preset(BASELINE_FORMAT)
    return area_proxy(fmt, r) / area_proxy(base, r)


def dominates(a: CostPoint, b: CostPoint) -> bool:
    """a dominates b under (higher qsnr, lower combined cost)."""
    return (a.qsnr_db >= b.qsnr_db and a.combined <= b.combined
            and (a.qsnr_db > b.qsnr_db or a.combined < b.combined))


def pareto_frontier(points: list[CostPoint]) -> list[CostPoint]:
    """Maximal set under (higher QSNR, lower combined), sorted by cost."""
    if not points:
        raise ValueError("cannot extract a frontier from no points")
    ordered = sorted(points, key=lambda p: (p.combined, -p.qsnr_db))
    frontier = []
    best_q = -math.inf
    for p in ordered:
        if p.qsnr_db > best_q:
            frontier.append(p)
            best_q = p.qsnr_db
        elif frontier and p.qsnr_db == best_q and p.combined == frontier[-1].combined:
            frontier.append(p)  # exact duplicate of a frontier point, keep it
    return frontier


# ---------------------------------------------------------------------------
# Measured-area tables
# ---------------------------------------------------------------------------

@dataclass
class AreaTable:
    """(format name, r) -> raw area units, loaded from a CSV sidecar."""

    entries: dict
    provenance: str = ""

    @classmethod
    def load_csv(cls, path) -> "AreaTable":
        entries = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"format", "r", "area_units"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise ValueError(f"area table needs columns {sorted(required)}")
            for row in reader:
                entries[(row["format"], int(row["r"]))] = float(row["area_units"])
        return cls(entries=entries, provenance=str(path))

    def normalized(self, name: str, r: int) -> float:
        if (BASELINE_FORMAT, r) not in self.entries:
            raise ValueError(f"area table has no {BASELINE_FORMAT} baseline at r={r}")
        if (name, r) not in self.entries:
            raise KeyError(f"no area entry for ({name}, r={r})")
        return self.entries[(name, r)] / self.entries[(BASELINE_FORMAT, r)]


def write_cost_csv(path, points: list[CostPoint]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "qsnr_db", "area", "mem_cost", "combined"])
        for p in points:
            w.writerow([p.name, f"{p.qsnr_db:.6f}", f"{p.area:.6f}",
                        f"{p.mem_cost:.6f}", f"{p.combined:.6f}"])


def read_cost_csv(path) -> list[CostPoint]:
    points = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"name", "qsnr_db", "area", "mem_cost", "combined"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"cost CSV needs columns {sorted(required)}")
        for row in reader:
            points.append(CostPoint(row["name"], float(row["qsnr_db"]),
                                    float(row["area"]), float(row["mem_cost"]),
                                    float(row["combined"])))
    return points
