"""Multiphase image segmentation with level sets parametrized by shallow neural networks."""

__version__ = "0.1.0"

from .activations import activate, heaviside, sigmoid, sigmoid_derivative
from .baseline import GridLevelSet, evolve
from .dataio import dice, generate_dataset, load_checkpoint, read_image, save_checkpoint, write_image
from .energy import EnergyBreakdown, energy_levelset, energy_region_form
from .gradients import finite_difference_check, grad_energy
from .multiphase import GrayImage, MultiphaseModel, region_means, segmentation_mask
from .networks import AffineFn, LayerParams, TwoLayerParams, build_polygon_indicator
from .optimizer import AdamW, RunConfig, run_segmentation
from .trainer import Dataset, TrainReport, evaluate_prior, train_prior

__all__ = [
    "AdamW", "AffineFn", "Dataset", "EnergyBreakdown", "GrayImage", "GridLevelSet", "LayerParams",
    "MultiphaseModel", "RunConfig", "TrainReport", "TwoLayerParams", "activate",
    "build_polygon_indicator", "dice", "energy_levelset", "energy_region_form", "evaluate_prior",
    "evolve", "finite_difference_check", "generate_dataset", "grad_energy", "heaviside",
    "load_checkpoint", "read_image", "region_means", "run_segmentation", "save_checkpoint",
    "segmentation_mask", "sigmoid", "sigmoid_derivative", "train_prior", "write_image",
]
