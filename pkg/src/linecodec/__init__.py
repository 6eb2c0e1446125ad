"""Lossless and near-lossless hyperspectral cube codec built on
line-recursive neural prediction with adaptive Golomb entropy coding."""

from .codec import CompressStats, compress, decompress
from .cube import HyperCube, LineSlab, SampleOrder, cube_from_samples, iter_lines, read_cube, write_cube
from .pipeline import prequantize
from .weights import (ModelConfig, WeightSet, count_flops_per_sample, count_params,
                      load_weights, preset, random_weights, save_weights)

__version__ = "0.1.0"

__all__ = [
    "CompressStats", "HyperCube", "LineSlab", "ModelConfig", "SampleOrder",
    "WeightSet", "compress", "count_flops_per_sample", "count_params",
    "cube_from_samples", "decompress", "iter_lines", "load_weights", "preset",
    "prequantize", "random_weights", "read_cube", "save_weights", "write_cube",
]
