from .config import ExperimentConfig, apply_overrides, config_hash, load_config
from .dataset import CLASS_NAMES, generate_shapes
from .experiment import (
    ablate,
    build_sampling_schedule,
    default_box_mask,
    load_classifier,
    load_denoiser,
    run_experiment,
    sweep,
)
from .image_io import read_pgm, read_ppm, write_pgm, write_ppm
from .seeding import PURPOSES, rng_for

__all__ = [
    "CLASS_NAMES",
    "ExperimentConfig",
    "PURPOSES",
    "ablate",
    "apply_overrides",
    "build_sampling_schedule",
    "config_hash",
    "default_box_mask",
    "generate_shapes",
    "load_classifier",
    "load_config",
    "load_denoiser",
    "read_pgm",
    "read_ppm",
    "rng_for",
    "run_experiment",
    "sweep",
    "write_pgm",
    "write_ppm",
]
