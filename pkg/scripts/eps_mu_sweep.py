"""Energy traces for a sweep of eps or mu, plus iterations needed to halve the energy."""
import argparse
import csv
import sys

from nncv.dataio import generate_dataset
from nncv.optimizer import RunConfig, run_segmentation


def iterations_to(result, fraction):
    target = fraction * result.initial.total
    return next((k for k, e in enumerate(result.trace, 1) if e.total <= target), "")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--param", choices=("eps", "mu"), default="eps")
    ap.add_argument("--values", type=float, nargs="+", default=[0.5, 1.0])
    ap.add_argument("--images", type=int, default=10)
    ap.add_argument("--iters", type=int, default=200)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--n1", type=int, default=32)
    ap.add_argument("--fraction", type=float, default=0.5)
    args = ap.parse_args()

    data = generate_dataset(args.images, 50, 50, seed=0)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["image", args.param, "initial_energy", "final_energy", f"iters_to_{args.fraction:g}"])
    for i, f in enumerate(data.images):
        for v in args.values:
            cfg = RunConfig(m=args.m, n1=args.n1, iterations=args.iters, seed=i, **{args.param: v})
            r = run_segmentation(f, cfg)
            out.writerow([i, v, f"{r.initial.total:.6f}", f"{r.trace[-1].total:.6f}",
                          iterations_to(r, args.fraction)])


if __name__ == "__main__":
    main()
