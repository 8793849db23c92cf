"""Mutual Dice between the grid level-set evolution and the network segmentation on single disks."""
import argparse
import csv
import sys

from nncv.baseline import evolve
from nncv.dataio import dice, generate_dataset
from nncv.multiphase import foreground_mask, segmentation_mask
from nncv.optimizer import RunConfig, run_segmentation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--images", type=int, default=5)
    ap.add_argument("--n1", type=int, default=32)
    ap.add_argument("--iters", type=int, default=200)
    ap.add_argument("--steps", type=int, default=500)
    args = ap.parse_args()

    data = generate_dataset(args.images, 50, 50, seed=0, circles_per_image=(1, 1))
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["image", "network_area", "grid_area", "truth_area", "mutual_dice"])
    for i, (f, truth) in enumerate(zip(data.images, data.masks)):
        r = run_segmentation(f, RunConfig(m=1, n1=args.n1, iterations=args.iters, seed=i))
        net = foreground_mask(segmentation_mask(r.model, f.width, f.height), r.model.constants)
        g = evolve(f, 1, steps=args.steps)
        grid = foreground_mask(g.labels(), g.constants[-1])
        out.writerow([i, int(net.sum()), int(grid.sum()), int((truth > 0).sum()), f"{dice(net, grid):.4f}"])


if __name__ == "__main__":
    main()
