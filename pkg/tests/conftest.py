"""Shared fixtures: environment, shipped weights, schedules, image pools.

The numpy kernel path is forced before diffguide is imported so every
test (and every subprocess-free CLI call) runs the same arithmetic; the
cross-implementation agreement tests import both kernel modules
directly and are unaffected by the flag.
"""

import os
import pathlib

os.environ.setdefault("DIFFGUIDE_DISABLE_NUMBA", "1")

import numpy as np
import pytest

from diffguide.harness.dataset import generate_shapes
from diffguide.models import ConvClassifier, ConvDenoiser, ClassifierArch, DenoiserArch, load_weights
from diffguide.schedule import make_linear_schedule, respace_schedule

REPO_ROOT = pathlib.Path(__file__).resolve().parents[1]
WEIGHTS_DIR = REPO_ROOT / "weights"
DENOISER_PATH = WEIGHTS_DIR / "denoiser.dgw"
CLASSIFIER_PATH = WEIGHTS_DIR / "classifier.dgw"


def _require_weights():
    missing = [p.name for p in (DENOISER_PATH, CLASSIFIER_PATH) if not p.exists()]
    if missing:
        pytest.fail(
            f"missing trained weights {missing} in {WEIGHTS_DIR}; "
        "run the train-denoiser / train-classifier CLI commands from the README first"
        )


@pytest.fixture(scope="session")
def weights_dir():
    _require_weights()
    return WEIGHTS_DIR


@pytest.fixture(scope="session")
def denoiser(weights_dir):
    """Shipped denoiser, cast to float64 for sampling."""
    params, meta = load_weights(weights_dir / "denoiser.dgw")
    arch = DenoiserArch(**{k: tuple(v) if isinstance(v, list) else v for k, v in meta["arch"].items()})
    model = ConvDenoiser(arch, params=params)
    return model.astype(np.float64), meta


@pytest.fixture(scope="session")
def classifier(weights_dir):
    params, meta = load_weights(weights_dir / "classifier.dgw")
    arch = ClassifierArch(**meta["arch"])
    model = ConvClassifier(arch, params=params)
    return model.astype(np.float64), meta


@pytest.fixture(scope="session")
def train_schedule():
    """The 1000-step schedule the shipped denoiser was trained on."""
    return make_linear_schedule(1000, 1e-4, 0.02)


@pytest.fixture(scope="session")
def sched100(train_schedule):
    return respace_schedule(train_schedule, 100)


@pytest.fixture(scope="session")
def sched20(train_schedule):
    return respace_schedule(train_schedule, 20)


@pytest.fixture(scope="session")
def eval_pool():
    """Held-out images (seed disjoint from the training pool's 1000)."""
    return generate_shapes(64, 9000)


# --- shared experiment batteries -------------------------------------------------
#
# The heavyweight measured experiments are used both by the module tests
# and by the acceptance gate, so they run once per session. Every battery
# goes through run_experiment with absolute weight paths and a session
# temp directory; the returned rows carry per-seed metrics.


def _run(cfg_kwargs, tmp_factory, name):
    import time

    from diffguide.harness.experiment import run_experiment
    from diffguide.harness.config import ExperimentConfig

    cfg = ExperimentConfig(
        denoiser_path=str(DENOISER_PATH),
        classifier_path=str(CLASSIFIER_PATH),
        out_dir=str(tmp_factory.mktemp(name)),
        save_images=False,
        **cfg_kwargs,
    )
    _require_weights()
    start = time.monotonic()
    run_dir, rows, summary = run_experiment(cfg)
    return {"cfg": cfg, "run_dir": run_dir, "rows": rows, "summary": summary,
            "duration": time.monotonic() - start}


@pytest.fixture(scope="session")
def inpaint_battery(tmp_path_factory):
    """Guided vs unguided inpainting, 20 seeds at T=100, K=8, sigma_y=0.05."""
    base = dict(task="inpaint", T=100, K=8, sigma_y=0.05, seeds=20, root_seed=0)
    guided = _run(dict(base, method="dual"), tmp_path_factory, "inpaint-dual")
    unguided = _run(dict(base, method="none"), tmp_path_factory, "inpaint-none")
    return {"guided": guided, "unguided": unguided}


@pytest.fixture(scope="session")
def colorize_battery(tmp_path_factory):
    """Auto-scaled dual guidance vs the stock-scale baseline on colorization."""
    base = dict(task="colorize", T=100, K=8, sigma_y=0.05, seeds=20, root_seed=0)
    dual = _run(dict(base, method="dual"), tmp_path_factory, "colorize-dual")
    mgd = _run(dict(base, method="mgd", mgd_scale=2.0), tmp_path_factory, "colorize-mgd")
    return {"dual": dual, "mgd": mgd}


@pytest.fixture(scope="session")
def classify_battery(tmp_path_factory):
    """Classifier-guided generation, 50 seeds."""
    return _run(dict(task="classify", T=100, K=8, seeds=50, root_seed=0,
                     method="dual"), tmp_path_factory, "classify-dual")


@pytest.fixture(scope="session")
def augment_battery(tmp_path_factory):
    """Averaging count ablation on colorization at a short horizon."""
    base = dict(task="colorize", method="dual", T=50, sigma_y=0.05,
                seeds=20, root_seed=0)
    k1 = _run(dict(base, K=1), tmp_path_factory, "colorize-k1")
    k8 = _run(dict(base, K=8), tmp_path_factory, "colorize-k8")
    return {"k1": k1, "k8": k8}


@pytest.fixture(scope="session")
def sweep_battery(tmp_path_factory):
    """Manual (c,d) grid vs the auto scale on inpainting, shared seeds."""
    import time

    from diffguide.harness.config import ExperimentConfig
    from diffguide.harness.experiment import sweep

    _require_weights()
    base = dict(task="inpaint", T=100, K=8, sigma_y=0.05, seeds=5, root_seed=0)
    auto = _run(dict(base, method="dual", scale_mode="auto"),
                tmp_path_factory, "sweep-auto")
    cfg = ExperimentConfig(
        denoiser_path=str(DENOISER_PATH), classifier_path=str(CLASSIFIER_PATH),
        out_dir=str(tmp_path_factory.mktemp("sweep-grid")), save_images=False,
        **base)
    start = time.monotonic()
    c_grid = np.logspace(-2, 1, 5)
    d_grid = np.logspace(-4, -1, 5)
    csv_path, cells, best = sweep(cfg, c_grid, d_grid)
    return {"auto": auto, "cells": cells, "best": best, "csv_path": csv_path,
            "c_grid": c_grid, "d_grid": d_grid,
            "duration": time.monotonic() - start}
