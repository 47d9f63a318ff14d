"""Seeded training loops for the denoiser and the classifier."""

import csv

import numpy as np

from ..numerics import (
    NonFiniteError,
    Var,
    add,
    backward,
    cross_entropy_with_logits,
    mul,
    squared_l2,
)
from ..schedule import forward_diffuse

__all__ = ["Adam", "train_denoiser", "train_classifier"]


class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr < 0:
            raise ValueError("lr must be >= 0")
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1**self.t
        corr2 = 1.0 - b2**self.t
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            m_hat = self.m[name] / corr1
            v_hat = self.v[name] / corr2
            params[name] -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(params[name].dtype)


def _write_curve(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "loss", "metric"])
        for epoch, loss, metric in rows:
            w.writerow([epoch, repr(float(loss)), repr(float(metric))])


def _split(n, val_frac, rng):
    idx = rng.permutation(n)
    n_val = max(1, int(round(n * val_frac)))
    return idx[n_val:], idx[:n_val]


def train_denoiser(model, images, schedule, *, epochs, batch_size, lr, rng,
                   val_frac=0.1, curve_path=None, log=None):
    """Noise-prediction MSE training; returns (epoch, train_loss, val_mse) rows.

    The validation noise draws are fixed up front so the metric is
    comparable across epochs. A non-finite loss aborts immediately.
    """
    dtype = model.dtype
    images = np.asarray(images, dtype=dtype)
    n = images.shape[0]
    train_idx, val_idx = _split(n, val_frac, rng)
    val_x = images[val_idx]
    val_t = rng.integers(1, schedule.T + 1, size=val_idx.size)
    val_noise = rng.standard_normal(val_x.shape).astype(dtype)
    opt = Adam(lr=lr)
    rows = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(train_idx)
        losses = []
        for start in range(0, order.size, batch_size):
            batch = images[order[start : start + batch_size]]
            t = rng.integers(1, schedule.T + 1, size=batch.shape[0])
            noise = rng.standard_normal(batch.shape).astype(dtype)
            x_t = forward_diffuse(schedule, batch, t, noise).astype(dtype)
            target = _net_target(model, schedule, x_t, t, noise)
            try:
                wvars = {k: Var(v) for k, v in model.params.items()}
                pred = model.apply_vars(wvars, Var(x_t, stop_gradient=True), t)
                diff = add(pred, Var(-target, stop_gradient=True))
                loss = mul(squared_l2(diff), Var(np.asarray(1.0 / diff.value.size, dtype=dtype),
                                                 stop_gradient=True))
                backward(loss)
            except NonFiniteError as e:
                raise RuntimeError(
                    f"training diverged at epoch {epoch}, batch {start // batch_size}: {e}"
                ) from e
            opt.step(model.params, {k: v.grad for k, v in wvars.items()})
            losses.append(float(loss.value))
        val_mse = _eval_denoiser(model, schedule, val_x, val_t, val_noise, batch_size)
        rows.append((epoch, float(np.mean(losses)), val_mse))
        if log:
            log(f"epoch {epoch}: train {rows[-1][1]:.4f}  val eps-mse {val_mse:.4f}")
    if curve_path:
        _write_curve(curve_path, rows)
    return rows


def _skip_coeff(schedule, t, like):
    ab = schedule.alpha_bar[np.asarray(t) - 1]
    return np.sqrt(1.0 - ab).reshape((-1,) + (1,) * (like.ndim - 1)).astype(like.dtype)


def _net_target(model, schedule, x_t, t, noise):
    """What the net itself should output for this batch."""
    if getattr(model.arch, "residual_skip", False):
        return noise - _skip_coeff(schedule, t, x_t) * x_t
    return noise


def _eval_denoiser(model, schedule, val_x, val_t, val_noise, batch_size):
    """Full-noise validation MSE, comparable across net parameterizations."""
    se, count = 0.0, 0
    skip = getattr(model.arch, "residual_skip", False)
    for start in range(0, val_x.shape[0], batch_size):
        sl = slice(start, start + batch_size)
        x_t = forward_diffuse(schedule, val_x[sl], val_t[sl], val_noise[sl]).astype(model.dtype)
        pred = model.predict(x_t, val_t[sl])
        if skip:
            pred = pred + _skip_coeff(schedule, val_t[sl], x_t) * x_t
        se += float(np.sum((pred - val_noise[sl]) ** 2))
        count += val_noise[sl].size
    return se / count


def train_classifier(model, images, labels, *, epochs, batch_size, lr, rng,
                     val_frac=0.1, noise_aug=0.25, curve_path=None, log=None):
    """Cross-entropy training with additive-noise augmentation.

    noise_aug is the upper bound of a per-sample uniform noise std; the
    classifier later grades denoised estimates mid-chain, which are far
    from clean images, so it must not be brittle. Validation accuracy is
    measured on clean inputs.
    """
    dtype = model.dtype
    images = np.asarray(images, dtype=dtype)
    labels = np.asarray(labels, dtype=np.int64)
    train_idx, val_idx = _split(images.shape[0], val_frac, rng)
    opt = Adam(lr=lr)
    rows = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(train_idx)
        losses = []
        for start in range(0, order.size, batch_size):
            sl = order[start : start + batch_size]
            batch = images[sl]
            if noise_aug > 0:
                stds = rng.uniform(0.0, noise_aug, size=(batch.shape[0], 1, 1, 1))
                batch = batch + (stds * rng.standard_normal(batch.shape)).astype(dtype)
            try:
                wvars = {k: Var(v) for k, v in model.params.items()}
                logits = model.apply_vars(wvars, Var(batch.astype(dtype), stop_gradient=True))
                loss = mul(cross_entropy_with_logits(logits, labels[sl]),
                           Var(np.asarray(1.0 / sl.size, dtype=dtype), stop_gradient=True))
                backward(loss)
            except NonFiniteError as e:
                raise RuntimeError(
                    f"training diverged at epoch {epoch}, batch {start // batch_size}: {e}"
                ) from e
            opt.step(model.params, {k: v.grad for k, v in wvars.items()})
            losses.append(float(loss.value))
        acc = _accuracy(model, images[val_idx], labels[val_idx], batch_size)
        rows.append((epoch, float(np.mean(losses)), acc))
        if log:
            log(f"epoch {epoch}: train {rows[-1][1]:.4f}  val acc {acc:.3f}")
    if curve_path:
        _write_curve(curve_path, rows)
    return rows


def _accuracy(model, images, labels, batch_size):
    hits = 0
    for start in range(0, images.shape[0], batch_size):
        sl = slice(start, start + batch_size)
        pred = np.argmax(model.logits(images[sl]), axis=1)
        hits += int(np.sum(pred == labels[sl]))
    return hits / images.shape[0]
