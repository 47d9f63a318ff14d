"""Noise schedules and the DDPM forward/reverse algebra.

Timesteps are 1-indexed: t runs 1..T, arrays are stored with index t-1,
and alpha_bar_prev(1) is defined as 1. A schedule built for a long
training run (default T=1000) can be respaced to a shorter sampling run;
the respaced schedule keeps the original timestep indices in model_t so
a denoiser trained on the long schedule stays correctly conditioned.
"""

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NoiseSchedule",
    "make_linear_schedule",
    "respace_schedule",
    "forward_diffuse",
    "mmse_estimate",
    "ddpm_step",
    "guidance_coeffs",
    "schedule_to_json",
    "schedule_from_json",
]


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step beta/alpha tables plus the sampler noise scale sigma."""

    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    sigma: np.ndarray
    model_t: np.ndarray = field(default=None)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=np.float64))
        object.__setattr__(self, "alpha_bar", np.asarray(self.alpha_bar, dtype=np.float64))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=np.float64))
        if self.model_t is None:
            object.__setattr__(self, "model_t", np.arange(1, beta.size + 1))
        if not (beta > 0).all() or not (beta < 1).all():
            raise ValueError("beta must lie in (0,1)")
        if not (np.diff(self.alpha_bar) < 0).all():
            raise ValueError("alpha_bar must be strictly decreasing")

    @property
    def T(self):
        return self.beta.size

    def alpha_bar_prev(self, t):
        return 1.0 if t == 1 else self.alpha_bar[t - 2]

    def noise_level(self, t):
        """sqrt(1 - alpha_bar_t), the guidance step's common factor."""
        return float(np.sqrt(1.0 - self.alpha_bar[t - 1]))


def make_linear_schedule(T, beta_start=1e-4, beta_end=0.02, sigma_mode="beta"):
    """Linearly spaced betas; sigma_mode 'beta' (sqrt(beta_t)) or 'posterior'."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if not (0 < beta_start <= beta_end < 1):
        raise ValueError("need 0 < beta_start <= beta_end < 1")
    beta = np.linspace(beta_start, beta_end, T)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    sigma = _sigma_from(beta, alpha_bar, sigma_mode)
    return NoiseSchedule(beta, alpha, alpha_bar, sigma)


def _sigma_from(beta, alpha_bar, sigma_mode):
    if sigma_mode == "beta":
        return np.sqrt(beta)
    if sigma_mode == "posterior":
        prev = np.concatenate(([1.0], alpha_bar[:-1]))
        return np.sqrt((1.0 - prev) / (1.0 - alpha_bar) * beta)
    raise ValueError(f"unknown sigma_mode {sigma_mode!r}")


def respace_schedule(base, T_new, sigma_mode="beta"):
    """Subsample base to T_new steps, preserving alpha_bar at the kept steps."""
    if not (1 <= T_new <= base.T):
        raise ValueError("T_new must be in [1, base.T]")
    sel = np.unique(np.round(np.linspace(1, base.T, T_new)).astype(int))
    ab = base.alpha_bar[sel - 1]
    prev = np.concatenate(([1.0], ab[:-1]))
    alpha = ab / prev
    beta = 1.0 - alpha
    sigma = _sigma_from(beta, ab, sigma_mode)
    return NoiseSchedule(beta, alpha, ab, sigma, model_t=sel)


def _per_sample(values, t, ref):
    """alpha_bar (or similar) at t, shaped to broadcast against ref."""
    picked = values[np.asarray(t) - 1]
    if np.ndim(t) == 0:
        return picked
    return picked.reshape((-1,) + (1,) * (ref.ndim - 1))


def forward_diffuse(schedule, x0, t, noise):
    """x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) noise.

    t may be a scalar or one integer per leading-axis sample.
    """
    ab = _per_sample(schedule.alpha_bar, t, np.asarray(x0))
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * noise


def mmse_estimate(schedule, x_t, t, eps):
    """Posterior-mean estimate of x0 implied by the noise prediction."""
    ab = _per_sample(schedule.alpha_bar, t, np.asarray(x_t))
    return (x_t - np.sqrt(1.0 - ab) * eps) / np.sqrt(ab)


def ddpm_step(schedule, x_t, t, eps, z=None):
    """One ancestral reverse step; z is forced to zero at t=1."""
    a = schedule.alpha[t - 1]
    ab = schedule.alpha_bar[t - 1]
    mean = (x_t - (1.0 - a) / np.sqrt(1.0 - ab) * eps) / np.sqrt(a)
    if t == 1 or z is None:
        return mean
    return mean + schedule.sigma[t - 1] * z


def guidance_coeffs(schedule, t, c, d, c_coeff_mode="cumulative"):
    """Per-step guidance coefficients (c_t, d_t).

    c_t scales the denoised-estimate term and grows toward c as the chain
    approaches the data; d_t scales the noise-prediction term and carries
    the sign that turns a descent direction on eps into one on x.
    c_coeff_mode picks whether c_t tracks the cumulative or the per-step
    alpha at t-1.
    """
    a = schedule.alpha[t - 1]
    ab = schedule.alpha_bar[t - 1]
    if c_coeff_mode == "cumulative":
        c_t = c * np.sqrt(schedule.alpha_bar_prev(t))
    elif c_coeff_mode == "per_step":
        c_t = c * np.sqrt(schedule.alpha[t - 2] if t > 1 else 1.0)
    else:
        raise ValueError(f"unknown c_coeff_mode {c_coeff_mode!r}")
    d_t = -d * (1.0 - a) / (np.sqrt(a) * np.sqrt(1.0 - ab))
    return float(c_t), float(d_t)


def schedule_to_json(schedule, path=None):
    """Dump T, beta and alpha_bar for fixture pinning."""
    doc = {
        "T": int(schedule.T),
        "beta": [float(b) for b in schedule.beta],
        "alpha_bar": [float(a) for a in schedule.alpha_bar],
    }
    text = json.dumps(doc, indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def schedule_from_json(text, sigma_mode="beta"):
    doc = json.loads(text)
    beta = np.asarray(doc["beta"], dtype=np.float64)
    alpha = 1.0 - beta
    alpha_bar = np.asarray(doc["alpha_bar"], dtype=np.float64)
    return NoiseSchedule(beta, alpha, alpha_bar, _sigma_from(beta, alpha_bar, sigma_mode))
