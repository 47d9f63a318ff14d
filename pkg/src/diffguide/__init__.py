"""diffguide: training-free guided sampling for small diffusion models.

A denoiser trained once on a synthetic corpus is steered at sampling
time toward linear inverse-problem measurements (inpainting, box
super-resolution, colorization, deblurring) or a classifier target,
without gradients through the network and without tuning step sizes.
"""

__version__ = "0.1.0"

from . import augment, guidance, metrics, numerics, operators, schedule

__all__ = ["augment", "guidance", "metrics", "numerics", "operators", "schedule", "__version__"]
