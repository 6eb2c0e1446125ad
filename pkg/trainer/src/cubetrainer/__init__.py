"""Toy training side of the line-recursive hyperspectral codec: synthetic
cubes, parallel-form training, LRWK weight export, parity vectors."""

from .model import LinePredictorModel, TrainConfig
from .synth import SyntheticCubeSpec, generate_cube

__all__ = ["LinePredictorModel", "SyntheticCubeSpec", "TrainConfig", "generate_cube"]
