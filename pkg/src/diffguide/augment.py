"""Paired random augmentations for guidance losses.

Each draw bundles an integer translation (zero fill), a square cutout
and a saturation scale; all three are linear in the pixel values, so the
averaged loss gradient is an exact average of per-augmentation adjoint
chains, not an approximation. The measurement is transformed with the
same parameters (adapted to its grid) for image-space conditions and
left untouched for label conditions.

Neutral components are exact no-ops by construction: a zero shift, an
absent cutout and a saturation scale of exactly 1.0 return the input
array unchanged, which keeps the disabled path bit-identical to a K=1
identity-augmentation run.
"""

from dataclasses import dataclass

import numpy as np

from .operators import (
    ClassifierGuidanceLoss,
    DownsampleOperator,
    GrayscaleOperator,
    LinearGuidanceLoss,
    MaskOperator,
    shift_image,
)

__all__ = [
    "AugmentConfig",
    "AugmentationParams",
    "sample_augs",
    "apply_aug",
    "apply_aug_adjoint",
    "apply_aug_measurement",
    "averaged_loss_and_grad",
]


@dataclass(frozen=True)
class AugmentConfig:
    K: int = 8
    cutout_frac: float = 0.25
    max_shift_frac: float = 0.125
    sat_range: tuple = (0.5, 1.5)
    enabled: bool = True


@dataclass(frozen=True)
class AugmentationParams:
    """shift (dy,dx) in pixels; cutout (y0,x0,h,w) or None; saturation scale."""

    shift: tuple = (0, 0)
    cutout: tuple = None
    saturation: float = 1.0

    @classmethod
    def identity(cls):
        return cls()


def sample_augs(rng, K, side, cfg):
    """Draw K parameter bundles for a side x side image."""
    max_shift = int(np.floor(cfg.max_shift_frac * side))
    cut = int(round(cfg.cutout_frac * side))
    out = []
    for _ in range(K):
        dy, dx = rng.integers(-max_shift, max_shift + 1, size=2)
        if cut > 0:
            y0 = int(rng.integers(0, side - cut + 1))
            x0 = int(rng.integers(0, side - cut + 1))
            cutout = (y0, x0, cut, cut)
        else:
            cutout = None
        sat = float(rng.uniform(cfg.sat_range[0], cfg.sat_range[1]))
        out.append(AugmentationParams(shift=(int(dy), int(dx)), cutout=cutout, saturation=sat))
    return out


def _cutout(x, region):
    y0, x0, h, w = region
    out = x.copy()
    out[:, y0 : y0 + h, x0 : x0 + w] = 0.0
    return out


def _saturate(x, scale, per_image):
    # channel-mean form for multi-channel, global-mean (contrast) form otherwise
    if per_image or x.shape[0] == 1:
        m = x.mean()
    else:
        m = x.mean(axis=0, keepdims=True)
    return m + scale * (x - m)


def apply_aug(params, x):
    """Translate, then cut out, then saturate. Exact no-op for neutral params."""
    out = x
    if params.shift != (0, 0):
        out = shift_image(out, params.shift[0], params.shift[1])
    if params.cutout is not None:
        out = _cutout(out, params.cutout)
    if params.saturation != 1.0:
        out = _saturate(out, params.saturation, per_image=False)
    return out


def apply_aug_adjoint(params, u):
    """Adjoint of apply_aug; every component is self-adjoint except the shift."""
    out = u
    if params.saturation != 1.0:
        out = _saturate(out, params.saturation, per_image=False)
    if params.cutout is not None:
        out = _cutout(out, params.cutout)
    if params.shift != (0, 0):
        out = shift_image(out, -params.shift[0], -params.shift[1])
    return out


def _scale_params(params, factor):
    dy, dx = params.shift
    shift = (int(round(dy / factor)), int(round(dx / factor)))
    cutout = None
    if params.cutout is not None:
        y0, x0, h, w = params.cutout
        cutout = (y0 // factor, x0 // factor, max(1, h // factor), max(1, w // factor))
    return AugmentationParams(shift=shift, cutout=cutout, saturation=params.saturation)


def apply_aug_measurement(params, y, op):
    """Transform the measurement the way the operator's output grid sees it."""
    if isinstance(op, DownsampleOperator):
        return apply_aug(_scale_params(params, op.factor), y)
    if isinstance(op, GrayscaleOperator):
        out = y
        if params.shift != (0, 0):
            out = shift_image(out, params.shift[0], params.shift[1])
        if params.cutout is not None:
            out = _cutout(out, params.cutout)
        if params.saturation != 1.0:
            out = _saturate(out, params.saturation, per_image=True)
        return out
    return apply_aug(params, y)


def _transformed_linear(loss, params):
    op = loss.op
    if isinstance(op, MaskOperator) and params.shift != (0, 0):
        op = op.translated(params.shift[0], params.shift[1])
    return LinearGuidanceLoss(op, apply_aug_measurement(params, loss.y, loss.op), loss.noise_std)


def averaged_loss_and_grad(loss, x_hat, cfg, rng):
    """Mean loss and mean gradient over K fresh augmentations.

    Label-conditioned (classifier) losses keep their condition untouched
    and batch all K augmented estimates through the network at once.
    """
    if not cfg.enabled:
        v, g = loss.value_and_grad(x_hat)
        return v, g
    side = x_hat.shape[-1]
    params = sample_augs(rng, cfg.K, side, cfg)
    if isinstance(loss, ClassifierGuidanceLoss):
        batch = np.stack([apply_aug(p, x_hat) for p in params])
        vals, grads = loss.value_and_grad_batch(batch)
        total_grad = np.zeros_like(x_hat)
        for p, g in zip(params, grads):
            total_grad += apply_aug_adjoint(p, g)
        return float(vals.mean()), total_grad / cfg.K
    total_val = 0.0
    total_grad = np.zeros_like(x_hat)
    for p in params:
        sub = _transformed_linear(loss, p)
        v, g = sub.value_and_grad(apply_aug(p, x_hat))
        total_val += v
        total_grad += apply_aug_adjoint(p, g)
    return total_val / cfg.K, total_grad / cfg.K
