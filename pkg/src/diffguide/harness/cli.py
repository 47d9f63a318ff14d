"""Command-line entry points.

Subcommands: gen-data, train-denoiser, train-classifier, run, ablate,
sweep, gradcheck, dump-schedule. Every command is fully determined by
its flags (and config file); rerunning one reproduces its outputs
byte for byte.
"""

import argparse
import csv
import dataclasses
import os
import sys

import numpy as np

from ..models import (
    ClassifierArch,
    ConvClassifier,
    ConvDenoiser,
    DenoiserArch,
    save_weights,
    train_classifier,
    train_denoiser,
)
from ..schedule import make_linear_schedule, schedule_to_json
from .config import load_config
from .dataset import CLASS_NAMES, generate_shapes
from .experiment import ablate, run_experiment, sweep
from .gradcheck import run_suite
from .image_io import write_ppm
from .seeding import rng_for

__all__ = ["main"]


def _cmd_gen_data(args):
    images, labels = generate_shapes(args.n, args.seed)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "labels.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "label", "class_name", "filename"])
        for i in range(args.n):
            name = f"shape_{i:05d}.ppm"
            write_ppm(os.path.join(args.out, name), images[i])
            w.writerow([i, int(labels[i]), CLASS_NAMES[labels[i]], name])
    print(f"wrote {args.n} images + labels.csv to {args.out}")
    return 0


def _cmd_train_denoiser(args):
    arch = DenoiserArch(hidden=args.hidden, emb_dim=args.emb_dim, time_mode=args.time_mode)
    model = ConvDenoiser.init(arch, seed=rng_for(args.seed, "denoiser_init"),
                              dtype=np.dtype(args.dtype))
    images, _ = generate_shapes(args.n, args.data_seed)
    sched = make_linear_schedule(args.train_T, args.beta_start, args.beta_end)
    rows = train_denoiser(
        model, images, sched, epochs=args.epochs, batch_size=args.batch_size,
        lr=args.lr, rng=rng_for(args.seed, "denoiser_train"),
        curve_path=args.curve, log=print if not args.quiet else None)
    meta = {
        "kind": "denoiser",
        "arch": dataclasses.asdict(arch),
        "train_schedule": {"T": args.train_T, "beta_start": args.beta_start,
                           "beta_end": args.beta_end},
        "data": {"n": args.n, "seed": args.data_seed},
        "final_val_mse": rows[-1][2],
    }
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    save_weights(args.out, model.params, meta)
    print(f"saved {model.n_params}-param denoiser to {args.out} "
          f"(val eps-mse {rows[-1][2]:.4f})")
    return 0


def _cmd_train_classifier(args):
    arch = ClassifierArch()
    model = ConvClassifier.init(arch, seed=rng_for(args.seed, "classifier_init"),
                                dtype=np.dtype(args.dtype))
    images, labels = generate_shapes(args.n, args.data_seed)
    rows = train_classifier(
        model, images, labels, epochs=args.epochs, batch_size=args.batch_size,
        lr=args.lr, rng=rng_for(args.seed, "classifier_train"),
        noise_aug=args.noise_aug, curve_path=args.curve,
        log=print if not args.quiet else None)
    meta = {
        "kind": "classifier",
        "arch": dataclasses.asdict(arch),
        "data": {"n": args.n, "seed": args.data_seed},
        "final_val_acc": rows[-1][2],
    }
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    save_weights(args.out, model.params, meta)
    print(f"saved {model.n_params}-param classifier to {args.out} "
          f"(val acc {rows[-1][2]:.3f})")
    return 0


def _cmd_run(args):
    cfg = load_config(args.config, args.set or ())
    run_dir, _, summary = run_experiment(cfg, log=print if not args.quiet else None)
    print(f"run dir: {run_dir}")
    for k in sorted(summary):
        print(f"  {k}: {summary[k]}")
    return 0


def _cmd_ablate(args):
    cfg = load_config(args.config, args.set or ())
    values = [v for v in args.values.split(",") if v]
    path, summaries = ablate(cfg, args.axis, values,
                             log=print if not args.quiet else None)
    print(f"ablation csv: {path}")
    for s in summaries:
        print(f"  {args.axis}={s['value']}: mean_residual={s['mean_residual']} "
              f"mean_psnr={s['mean_psnr']} hit_rate={s['hit_rate']}")
    return 0


def _cmd_sweep(args):
    cfg = load_config(args.config, args.set or ())
    c_values = [float(v) for v in args.c_values.split(",") if v]
    d_values = [float(v) for v in args.d_values.split(",") if v]
    path, cells, best = sweep(cfg, c_values, d_values,
                              log=print if not args.quiet else None)
    print(f"sweep csv: {path}")
    if best:
        print(f"best cell: c={best['c']} d={best['d']} "
              f"mean_residual={best['mean_residual']}")
    return 0


def _cmd_gradcheck(args):
    ok = run_suite(print_fn=print, instances=args.instances)
    print("gradcheck: all PASS" if ok else "gradcheck: FAILURES above")
    return 0 if ok else 1


def _cmd_dump_schedule(args):
    sched = make_linear_schedule(args.T, args.beta_start, args.beta_end)
    text = schedule_to_json(sched, args.out)
    if not args.out:
        print(text)
    else:
        print(f"wrote schedule to {args.out}")
    return 0


def _add_train_common(p, default_out):
    p.add_argument("--out", default=default_out)
    p.add_argument("--curve", default=None, help="write an epoch,loss,metric CSV here")
    p.add_argument("--n", type=int, default=1500)
    p.add_argument("--data-seed", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=12)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--dtype", default="float32", choices=("float32", "float64"))
    p.add_argument("--quiet", action="store_true")


def build_parser():
    ap = argparse.ArgumentParser(prog="diffguide",
                                 description="guided diffusion sampling toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a shapes dataset as PPM files")
    p.add_argument("--out", default="data")
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--seed", type=int, default=1000)
    p.set_defaults(fn=_cmd_gen_data)

    p = sub.add_parser("train-denoiser", help="train the noise-prediction model")
    _add_train_common(p, "weights/denoiser.dgw")
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--emb-dim", type=int, default=32)
    p.add_argument("--time-mode", default="film", choices=("film", "add"))
    p.add_argument("--train-T", type=int, default=1000)
    p.add_argument("--beta-start", type=float, default=1e-4)
    p.add_argument("--beta-end", type=float, default=0.02)
    p.set_defaults(fn=_cmd_train_denoiser)

    p = sub.add_parser("train-classifier", help="train the shape classifier")
    _add_train_common(p, "weights/classifier.dgw")
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--noise-aug", type=float, default=0.25)
    p.set_defaults(fn=_cmd_train_classifier)

    p = sub.add_parser("run", help="run one guided-restoration experiment")
    p.add_argument("--config", default=None)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("ablate", help="rerun the same seeds varying one axis")
    p.add_argument("--config", default=None)
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=_cmd_ablate)

    p = sub.add_parser("sweep", help="manual (c,d) scale grid")
    p.add_argument("--config", default=None)
    p.add_argument("--c-values", required=True)
    p.add_argument("--d-values", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("gradcheck", help="finite-difference oracle suite")
    p.add_argument("--instances", type=int, default=3)
    p.set_defaults(fn=_cmd_gradcheck)

    p = sub.add_parser("dump-schedule", help="dump T/beta/alpha_bar as JSON")
    p.add_argument("--T", type=int, default=100)
    p.add_argument("--beta-start", type=float, default=1e-4)
    p.add_argument("--beta-end", type=float, default=0.02)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_dump_schedule)

    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
