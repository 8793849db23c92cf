"""Command-line entry point: ``python -m nncv <command> ...``.

Exit codes: 0 success, 1 usage error, 2 runtime failure (including a
failed ``verify`` check). Every output file is written to a temporary
name and renamed into place, so a failed run leaves no partial files.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

from . import __version__
from .baseline import evolve
from .dataio import (
    atomic_write,
    boundary_overlay,
    dice,
    generate_dataset,
    labels_to_image,
    load_checkpoint,
    read_image,
    save_checkpoint,
    write_image,
)
from .energy import write_energy_csv
from .errors import NNCVError
from .multiphase import (
    GrayImage,
    MultiphaseModel,
    foreground_mask,
    level_values,
    pattern_key,
    pixel_centers,
    segmentation_mask,
    sign_patterns,
)
from .optimizer import RunConfig, run_segmentation
from .trainer import Dataset, train_prior

OUT_DIR_ENV = "NNCV_OUT_DIR"
log = logging.getLogger("nncv")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


# --- helpers -----------------------------------------------------------------------

def _out_dir(args) -> Path:
    path = Path(args.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _thread_limit(n):
    if n is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _write_rows(path, header, rows):
    with atomic_write(path, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _truth_mask(path):
    return read_image(path).pixels > 0.5


def _run_config(args, **over) -> RunConfig:
    kw = dict(m=args.m, n1=args.n1, eps=args.eps, mu=args.mu, nu=args.nu,
              batch_size=args.batch_size, iterations=args.iters, tol=args.tol, seed=args.seed,
              lr=args.lr, weight_decay=args.weight_decay, adam_eps=args.adam_eps,
              init=args.init, init_std=args.init_std, length_unit=args.length_unit)
    kw.update(over)
    return RunConfig(**kw)


def _add_run_flags(p, iters=200):
    p.add_argument("--m", type=int, default=2, help="number of level-set networks (default 2)")
    p.add_argument("--n1", type=int, default=32, help="hidden neurons per network (default 32)")
    p.add_argument("--eps", type=float, default=0.5, help="sigmoid smoothing (default 0.5)")
    p.add_argument("--mu", type=float, default=0.5, help="length weight (default 0.5)")
    p.add_argument("--nu", type=float, default=0.0, help="area weight (default 0)")
    p.add_argument("--iters", type=int, default=iters, help=f"iterations (default {iters})")
    p.add_argument("--batch-size", type=int, default=1024, help="pixels per batch (default 1024)")
    p.add_argument("--tol", type=float, default=1e-6, help="gradient-norm stopping tolerance (default 1e-6)")
    p.add_argument("--lr", type=float, default=0.03, help="AdamW learning rate (default 0.03)")
    p.add_argument("--adam-eps", type=float, default=1e-3, help="AdamW denominator floor (default 1e-3)")
    p.add_argument("--weight-decay", type=float, default=1e-3, help="decoupled weight decay (default 1e-3)")
    p.add_argument("--init", choices=("circles", "normal"), default="circles",
                   help="starting parameters when no checkpoint is given (default circles)")
    p.add_argument("--init-std", type=float, default=0.01, help="std of the normal init (default 0.01)")
    p.add_argument("--length-unit", choices=("pixel", "domain"), default="pixel",
                   help="unit of the boundary length (default pixel)")


def _segment_one(image_path, args, cfg, init, out: Path, name: str):
    img = read_image(image_path)
    result = run_segmentation(img, cfg, init)
    model = result.model
    labels = segmentation_mask(model, img.width, img.height)
    write_image(labels_to_image(labels, 2 ** model.m), out / f"{name}_mask.pgm")
    for k, lv in enumerate(_level_grids(model, img), start=1):
        write_image(boundary_overlay(img, (lv < 0).astype(int)), out / f"{name}_overlay{k}.pgm")
    write_energy_csv(out / f"{name}_energy.csv", result.trace, {"grad_norm": result.grad_norms})
    save_checkpoint(model, out / f"{name}_model.json")
    row = {"image": str(image_path), "seed": cfg.seed, "iterations": result.iterations,
           "initial_energy": repr(result.initial.total), "final_energy": repr(result.trace[-1].total),
           "dice": ""}
    return row, labels, model


def _level_grids(model: MultiphaseModel, img: GrayImage):
    lv = level_values(model, pixel_centers(img.width, img.height))
    return [lv[:, k].reshape(img.height, img.width) for k in range(model.m)]


# --- commands ----------------------------------------------------------------------

def cmd_generate(args):
    out = _out_dir(args)
    ds = generate_dataset(args.count, args.width, args.height, args.seed,
                          (args.min_circles, args.max_circles))
    rows = []
    for i, (img, lab, circles) in enumerate(zip(ds.images, ds.masks, ds.circles)):
        img_name, mask_name = f"image_{i:04d}.pgm", f"truth_{i:04d}.pgm"
        write_image(img, out / img_name)
        write_image(GrayImage((lab > 0).astype(float)), out / mask_name, maxval=255)
        rows.append([img_name, mask_name, len(circles),
                     json.dumps([[c.center[0], c.center[1], c.radius, c.foreground] for c in circles])])
    _write_rows(out / "dataset.csv", ["image", "truth", "circles", "specs"], rows)
    print(f"wrote {args.count} images to {out}")
    return 0


def _dataset_images(args):
    if args.data:
        rows = _read_rows(Path(args.data) / "dataset.csv")
        return [read_image(Path(args.data) / r["image"]) for r in rows]
    ds = generate_dataset(args.count, 50, 50, args.seed, (1, 3))
    return ds.images


def cmd_train(args):
    out = _out_dir(args)
    cfg = _run_config(args)
    images = _dataset_images(args)
    params, report = train_prior(Dataset(images, seed=args.seed), cfg, args.epochs, args.patience,
                                 min_delta=args.min_delta)
    model = MultiphaseModel(params, epsilon=cfg.eps)
    save_checkpoint(model, out / f"{args.name}.json")
    report.write_csv(out / f"{args.name}_report.csv")
    print(f"best epoch {report.best_epoch} val_loss={report.best_val_loss!r} stop={report.stop_reason}")
    return 0


def cmd_segment(args):
    out = _out_dir(args)
    cfg = _run_config(args)
    init = None
    if args.checkpoint:
        prior = load_checkpoint(args.checkpoint)
        init = prior.levelsets
        cfg = _run_config(args, m=prior.m, n1=prior.n1)
    if args.truth and len(args.truth) != len(args.image):
        raise UsageError("--truth must be given once per --image")
    rows = []
    for i, path in enumerate(args.image):
        name = args.name if len(args.image) == 1 else f"{args.name}_{i:04d}"
        row, labels, model = _segment_one(path, args, cfg, init, out, name)
        if args.truth:
            fg = foreground_mask(labels, model.constants)
            row["dice"] = repr(dice(fg, _truth_mask(args.truth[i])))
        rows.append(row)
        print(f"{path}: final energy {row['final_energy']} after {row['iterations']} iterations")
    fields = ["image", "seed", "iterations", "initial_energy", "final_energy", "dice"]
    _write_rows(out / f"{args.name}_runs.csv", fields, [[r[f] for f in fields] for r in rows])
    return 0


def cmd_evolve(args):
    out = _out_dir(args)
    img = read_image(args.image)
    res = evolve(img, args.m, None, args.steps, args.mu, args.nu, args.eps)
    labels = res.labels()
    write_image(labels_to_image(labels, 2 ** args.m), out / f"{args.name}_mask.pgm")
    rows = [[t] + [repr(float(c)) for c in consts] for t, consts in enumerate(res.constants)]
    header = ["step"] + [pattern_key(p) for p in sign_patterns(args.m)]
    _write_rows(out / f"{args.name}_constants.csv", header, rows)
    if args.truth:
        fg = foreground_mask(labels, res.constants[-1])
        print(f"dice={dice(fg, _truth_mask(args.truth))!r}")
    return 0


def cmd_verify(args):
    from .verify import run_checks

    ok = True
    for name, passed, measured, tol in run_checks(args.seed):
        print(f"{'PASS' if passed else 'FAIL'} {name}: measured={measured:.3e} tol={tol:.1e}")
        ok &= passed
    return 0 if ok else 2


def cmd_report(args):
    out = _out_dir(args)
    if args.sweep:
        return _sweep(args, out)
    if not (args.run_a and args.run_b):
        raise UsageError("report needs --run-a and --run-b, or --sweep")
    a, b = _read_rows(args.run_a), _read_rows(args.run_b)
    if len(a) != len(b):
        raise NNCVError(f"runs differ in length: {len(a)} vs {len(b)}")
    rows, wins = [], 0
    for ra, rb in zip(a, b):
        ea, eb = float(ra["final_energy"]), float(rb["final_energy"])
        wins += eb < ea
        rows.append([ra["image"], ra["final_energy"], rb["final_energy"], ra.get("dice", ""),
                     rb.get("dice", ""), int(eb < ea)])
    _write_rows(out / f"{args.name}.csv",
                ["image", "final_energy_a", "final_energy_b", "dice_a", "dice_b", "b_lower"], rows)
    print(f"run b has the lower final energy on {wins} of {len(rows)} images")
    return 0


def _sweep(args, out: Path):
    if not args.image or not args.values:
        raise UsageError("--sweep needs --image and --values")
    img = read_image(args.image)
    traces = {}
    for v in args.values:
        cfg = _run_config(args, **{args.sweep: v})
        traces[v] = [e.total for e in run_segmentation(img, cfg).trace]
    n = max(len(t) for t in traces.values())
    rows = [[i + 1] + [repr(traces[v][i]) if i < len(traces[v]) else "" for v in args.values]
            for i in range(n)]
    _write_rows(out / f"{args.name}_{args.sweep}.csv",
                ["iteration"] + [f"{args.sweep}={v!r}" for v in args.values], rows)
    return 0


# --- parser ------------------------------------------------------------------------

def _add_global_flags(p, defaults):
    d = (lambda k: argparse.SUPPRESS) if defaults is None else defaults.get
    p.add_argument("--seed", type=int, default=d("seed"), help="seed for every random draw (default 0)")
    p.add_argument("--out-dir", default=d("out_dir"), help=f"output directory (default ${OUT_DIR_ENV} or ./out)")
    p.add_argument("--threads", type=int, default=d("threads"), help="cap on BLAS worker threads")
    p.add_argument("-v", "--verbose", action="store_true", default=d("verbose"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nncv", description="Neural-network level-set segmentation.")
    parser.add_argument("--version", action="version", version=__version__)
    _add_global_flags(parser, {"seed": 0, "out_dir": os.environ.get(OUT_DIR_ENV, "out"),
                               "threads": None, "verbose": False})
    # the same flags are accepted after the subcommand; there they only override when given
    common = _Parser(add_help=False)
    _add_global_flags(common, None)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    add_parser = sub.add_parser

    def add(name, **kw):
        return add_parser(name, parents=[common], **kw)

    sub.add_parser = add

    p = sub.add_parser("generate-data", help="write synthetic circle images and truth masks")
    p.add_argument("--count", type=int, default=200, help="number of images (default 200)")
    p.add_argument("--width", type=int, default=50)
    p.add_argument("--height", type=int, default=50)
    p.add_argument("--min-circles", type=int, default=1)
    p.add_argument("--max-circles", type=int, default=3)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train an initialization prior")
    _add_run_flags(p)
    p.add_argument("--data", help="directory written by generate-data (default: generate --count images)")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--min-delta", type=float, default=0.0,
                   help="smallest validation improvement that resets patience (default 0)")
    p.add_argument("--name", default="prior", help="output file stem (default prior)")
    p.set_defaults(func=cmd_train, lr=1e-3)

    p = sub.add_parser("segment", help="segment one or more PGM images")
    _add_run_flags(p)
    p.add_argument("--image", action="append", required=True, help="PGM image (repeatable)")
    p.add_argument("--truth", action="append", help="truth mask PGM per image, for Dice")
    p.add_argument("--checkpoint", help="initialize from a saved model or prior")
    p.add_argument("--name", default="segment", help="output file stem (default segment)")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evolve-baseline", help="classical grid level-set evolution")
    p.add_argument("--image", required=True)
    p.add_argument("--truth")
    p.add_argument("--m", type=int, default=1, choices=(1, 2))
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--mu", type=float, default=0.5)
    p.add_argument("--nu", type=float, default=0.0)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--name", default="baseline")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("verify", help="run the property checks")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="compare two runs, or sweep one parameter")
    _add_run_flags(p)
    p.add_argument("--run-a", help="runs CSV written by segment")
    p.add_argument("--run-b", help="runs CSV written by segment")
    p.add_argument("--sweep", choices=("eps", "mu"), help="parameter to sweep on --image")
    p.add_argument("--values", type=float, nargs="+")
    p.add_argument("--image")
    p.add_argument("--name", default="report")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit(args.threads):
            return args.func(args)
    except UsageError as exc:
        print(f"nncv: error: {exc}", file=sys.stderr)
        return 1
    except (NNCVError, OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"nncv: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
