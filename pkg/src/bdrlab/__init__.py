"""bdrlab: a laboratory for two-level block number formats.

Quantization codec, format catalog, QSNR measurement with an analytic
worst-case floor, a bit-exact dot-product pipeline model, cost modeling
with Pareto extraction, and a CLI tying it together.
"""

from .bdr import (BDRConfig, QuantizedBlock, QuantizedTensor, ScaleState,
                  bits_per_element, compute_shared_exponent,
                  compute_subblock_shifts, dequantize_tensor, quantize_block,
                  dequantize_block, quantize_tensor_along_axis)
from .formats import (DEFAULT_WINDOW, FormatPreset, UnknownPresetError,
                      known_presets, preset, preset_bits_per_element)
from .fidelity import (DistributionSpec, QSNRReport, bound_for_config,
                       estimate_qsnr, qsnr, theorem1_bound)
from .dot import UNCONSTRAINED, DotConfig, DotResult, mx_dot, quantized_dot, reference_dot
from .cost import (CostPoint, area_proxy, normalized_area, packing_efficiency,
                   pareto_frontier)
from .tensorio import read_tensor, write_tensor

__version__ = "0.1.0"

__all__ = [
    "BDRConfig", "QuantizedBlock", "QuantizedTensor", "ScaleState",
    "bits_per_element", "compute_shared_exponent", "compute_subblock_shifts",
    "quantize_block", "dequantize_block", "quantize_tensor_along_axis",
    "dequantize_tensor",
    "DEFAULT_WINDOW", "FormatPreset", "UnknownPresetError", "known_presets",
    "preset", "preset_bits_per_element",
    "DistributionSpec", "QSNRReport", "bound_for_config", "estimate_qsnr",
    "qsnr", "theorem1_bound",
    "UNCONSTRAINED", "DotConfig", "DotResult", "mx_dot", "quantized_dot",
    "reference_dot",
    "CostPoint", "area_proxy", "normalized_area", "packing_efficiency",
    "pareto_frontier",
    "read_tensor", "write_tensor",
    "__version__",
]
