"""Desk-scale conv nets: a time-conditioned denoiser and a shape classifier.

Both are built from the numerics op vocabulary, so weight gradients,
input gradients (classifier guidance) and full-chain gradients (first-
order baseline) all come from the same vjp machinery that the finite-
difference oracle checks.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..numerics import Var, add, affine, conv2d, mean_pool, mul, relu, reshape

__all__ = [
    "DenoiserArch",
    "ClassifierArch",
    "ConvDenoiser",
    "ConvClassifier",
    "timestep_embedding",
]


def timestep_embedding(t, dim, max_period=10000.0):
    """Sinusoidal features of integer timesteps, (N,) -> (N, dim)."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(-math.log(max_period) * np.arange(half) / half)
    args = t[:, None] * freqs[None, :]
    return np.concatenate([np.cos(args), np.sin(args)], axis=1)


@dataclass(frozen=True)
class DenoiserArch:
    image_channels: int = 3
    hidden: int = 32
    dilations: tuple = (1, 2, 4, 2)
    kernel: int = 3
    emb_dim: int = 32
    time_mode: str = "film"  # "film" scales and shifts per channel, "add" only shifts
    # With the skip, the net predicts eps - sqrt(1-alpha_bar_t) x_t instead of
    # eps itself. The skip carries the dominant, strongly t-dependent part of
    # the target, so an untrained net already yields a contracting reverse
    # chain instead of one that amplifies leftover noise step over step.
    residual_skip: bool = True


@dataclass(frozen=True)
class ClassifierArch:
    image_channels: int = 3
    classes: int = 3
    widths: tuple = (16, 32, 32)
    kernel: int = 3
    pool: int = 2
    side: int = 32


def _he_conv(rng, c_out, c_in, k, dtype):
    std = math.sqrt(2.0 / (c_in * k * k))
    return (rng.standard_normal((c_out, c_in, k, k)) * std).astype(dtype)


def _he_affine(rng, d_in, d_out, dtype):
    std = math.sqrt(2.0 / d_in)
    return (rng.standard_normal((d_in, d_out)) * std).astype(dtype)


class _Net:
    def __init__(self, arch, params):
        self.arch = arch
        self.params = dict(params)

    @property
    def n_params(self):
        return sum(int(p.size) for p in self.params.values())

    @property
    def dtype(self):
        return next(iter(self.params.values())).dtype

    def astype(self, dtype):
        return type(self)(self.arch, {k: v.astype(dtype) for k, v in self.params.items()})

    def _frozen_vars(self):
        return {k: Var(v, stop_gradient=True) for k, v in self.params.items()}


class ConvDenoiser(_Net):
    """Stack of dilated 'same' convs with per-channel time modulation."""

    @classmethod
    def init(cls, arch, seed=0, dtype=np.float64, zero=False):
        rng = np.random.default_rng(seed)
        k, h, ci = arch.kernel, arch.hidden, arch.image_channels
        p = {}
        widths_in = [ci] + [h] * (len(arch.dilations) - 1)
        for i, c_in in enumerate(widths_in):
            p[f"conv{i}.w"] = _he_conv(rng, h, c_in, k, dtype)
            p[f"conv{i}.b"] = np.zeros(h, dtype=dtype)
            p[f"time{i}.shift_w"] = _he_affine(rng, arch.emb_dim, h, dtype)
            p[f"time{i}.shift_b"] = np.zeros(h, dtype=dtype)
            if arch.time_mode == "film":
                p[f"time{i}.scale_w"] = np.zeros((arch.emb_dim, h), dtype=dtype)
                p[f"time{i}.scale_b"] = np.zeros(h, dtype=dtype)
        # zero-init output conv: the untrained net is the zero function, so
        # with the input skip the initial reverse chain contracts instead of
        # compounding random O(1) outputs
        p["out.w"] = np.zeros((ci, h, k, k), dtype=dtype)
        p["out.b"] = np.zeros(ci, dtype=dtype)
        if zero:
            p = {k2: np.zeros_like(v) for k2, v in p.items()}
        return cls(arch, p)

    def apply_vars(self, w, x, t):
        """Graph from input Var x (N,C,H,W) and integer timesteps t (N,)."""
        arch = self.arch
        emb = Var(timestep_embedding(t, arch.emb_dim).astype(x.value.dtype),
                  stop_gradient=True)
        n = x.value.shape[0]
        h = x
        for i in range(len(arch.dilations)):
            h = conv2d(h, w[f"conv{i}.w"], w[f"conv{i}.b"], dilation=arch.dilations[i])
            shift = affine(emb, w[f"time{i}.shift_w"], w[f"time{i}.shift_b"])
            shift = reshape(shift, (n, arch.hidden, 1, 1))
            if arch.time_mode == "film":
                scale = affine(emb, w[f"time{i}.scale_w"], w[f"time{i}.scale_b"])
                scale = reshape(scale, (n, arch.hidden, 1, 1))
                one = Var(np.ones((), dtype=x.value.dtype), stop_gradient=True)
                h = mul(h, add(one, scale))
            h = add(h, shift)
            h = relu(h)
        return conv2d(h, w["out.w"], w["out.b"], dilation=1)

    def predict(self, x, t):
        """Noise prediction with frozen weights; no gradients retained."""
        x = np.asarray(x, dtype=self.dtype)
        squeeze = x.ndim == 3
        if squeeze:
            x = x[None]
        t = np.full(x.shape[0], t, dtype=np.int64) if np.ndim(t) == 0 else np.asarray(t)
        out = self.apply_vars(self._frozen_vars(), Var(x, stop_gradient=True), t).value
        return out[0] if squeeze else out

    def predict_var(self, x_var, t):
        """Graph with frozen weights but a differentiable input (chain rule use)."""
        n = x_var.value.shape[0]
        t = np.full(n, t, dtype=np.int64) if np.ndim(t) == 0 else np.asarray(t)
        return self.apply_vars(self._frozen_vars(), x_var, t)

    def predict_eps(self, x, schedule, t):
        """Full noise prediction at sampling step t (1-based into schedule).

        Resolves the conditioning index through schedule.model_t and adds
        the input skip back when the arch trains against the residual
        target, so callers always receive an estimate of eps itself.
        """
        eps = self.predict(x, schedule.model_t[t - 1])
        if self.arch.residual_skip:
            eps = eps + np.sqrt(1.0 - schedule.alpha_bar[t - 1]) * np.asarray(x, dtype=eps.dtype)
        return eps

    def predict_eps_var(self, x_var, schedule, t):
        """Graph twin of predict_eps for chain-rule consumers."""
        out = self.predict_var(x_var, schedule.model_t[t - 1])
        if self.arch.residual_skip:
            k = Var(np.asarray(np.sqrt(1.0 - schedule.alpha_bar[t - 1]),
                               dtype=x_var.value.dtype), stop_gradient=True)
            out = add(out, mul(x_var, k))
        return out


class ConvClassifier(_Net):
    """conv/relu/mean-pool tower with an affine head."""

    @classmethod
    def init(cls, arch, seed=0, dtype=np.float64, zero=False):
        rng = np.random.default_rng(seed)
        k = arch.kernel
        p = {}
        c_in = arch.image_channels
        side = arch.side
        for i, width in enumerate(arch.widths):
            p[f"conv{i}.w"] = _he_conv(rng, width, c_in, k, dtype)
            p[f"conv{i}.b"] = np.zeros(width, dtype=dtype)
            c_in = width
            side //= arch.pool
        flat = arch.widths[-1] * side * side
        p["head.w"] = _he_affine(rng, flat, arch.classes, dtype)
        p["head.b"] = np.zeros(arch.classes, dtype=dtype)
        if zero:
            p = {k2: np.zeros_like(v) for k2, v in p.items()}
        return cls(arch, p)

    def apply_vars(self, w, x):
        arch = self.arch
        h = x
        for i in range(len(arch.widths)):
            h = conv2d(h, w[f"conv{i}.w"], w[f"conv{i}.b"])
            h = relu(h)
            h = mean_pool(h, arch.pool)
        n = h.value.shape[0]
        h = reshape(h, (n, -1))
        return affine(h, w["head.w"], w["head.b"])

    def logits_var(self, x_var):
        return self.apply_vars(self._frozen_vars(), x_var)

    def logits(self, x):
        x = np.asarray(x, dtype=self.dtype)
        squeeze = x.ndim == 3
        if squeeze:
            x = x[None]
        out = self.logits_var(Var(x, stop_gradient=True)).value
        return out[0] if squeeze else out

    def predict_class(self, x):
        return int(np.argmax(self.logits(x)))
