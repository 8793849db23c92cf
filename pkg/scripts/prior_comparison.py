"""Train an initialization prior, then compare it with the default init on held-out images."""
import argparse
import csv
import sys

from nncv.dataio import generate_dataset, save_checkpoint
from nncv.multiphase import MultiphaseModel
from nncv.optimizer import RunConfig, run_segmentation
from nncv.trainer import Dataset, train_prior


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--train-images", type=int, default=200)
    ap.add_argument("--test-images", type=int, default=10)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--n1", type=int, default=32)
    ap.add_argument("--iters", type=int, default=50)
    ap.add_argument("--save", help="write the trained prior to this checkpoint")
    args = ap.parse_args()

    train = generate_dataset(args.train_images, 50, 50, seed=0)
    cfg = RunConfig(m=args.m, n1=args.n1, lr=args.lr, seed=0)
    prior, report = train_prior(Dataset(train.images, seed=0), cfg, epochs=args.epochs)
    print(f"# validation loss {report.initial_val_loss:.6f} -> {report.best_val_loss:.6f} "
          f"(best epoch {report.best_epoch}, {report.stop_reason})", file=sys.stderr)
    if args.save:
        save_checkpoint(MultiphaseModel(prior, epsilon=cfg.eps), args.save)

    held_out = generate_dataset(args.test_images, 50, 50, seed=1)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["image", "pretrained_final", "default_final", "pretrained_lower"])
    for i, f in enumerate(held_out.images):
        run = RunConfig(m=args.m, n1=args.n1, iterations=args.iters, seed=i)
        a = run_segmentation(f, run, init=prior).trace[-1].total
        b = run_segmentation(f, run).trace[-1].total
        out.writerow([i, f"{a:.6f}", f"{b:.6f}", int(a < b)])


if __name__ == "__main__":
    main()
