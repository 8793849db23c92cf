"""Quick property checks behind ``nncv verify``.

Each check returns ``(name, passed, measured, tolerance)``.
"""
from __future__ import annotations

import numpy as np

from .dataio import generate_dataset
from .energy import area_inclusion_exclusion, area_union_brute
from .gradients import finite_difference_check
from .multiphase import (
    GrayImage,
    MultiphaseModel,
    level_values,
    memberships_from_levels,
    pixel_centers,
    region_means,
)
from .networks import (
    AffineFn,
    LayerParams,
    count_arrangement_regions,
    lines_in_general_position,
    max_region_count,
)


def random_lines_model(m: int, n1: int, rng: np.random.Generator, slope: float = 3.0,
                       eps: float | None = 0.5) -> MultiphaseModel:
    """Networks whose hidden lines all pass through the unit square.

    Unit 0 is constant (``w = 0``, ``b = 1``) and acts as an output bias, so
    no network vanishes on a whole region where every other unit is off.
    """
    nets = []
    for _ in range(m):
        W = rng.normal(0.0, slope, (n1, 2))
        b = -np.sum(W * rng.uniform(0.1, 0.9, (n1, 2)), axis=1)
        W[0] = 0.0
        b[0] = 1.0
        nets.append(LayerParams(rng.normal(0.0, 1.0, n1), W, b))
    return MultiphaseModel(nets, epsilon=0.5 if eps is None else eps)


def random_general_lines(n: int, rng: np.random.Generator) -> list[AffineFn]:
    """``n`` well-separated lines in general position, all crossings inside ``[0.05, 0.95]^2``.

    Every crossing keeps a distance of at least ``0.02`` from the other lines,
    so each region is far wider than a probe-grid cell.
    """
    while True:
        theta = np.sort(rng.uniform(0.0, np.pi, n))
        lines = []
        for t in theta:
            w = (float(np.cos(t)), float(np.sin(t)))
            p = rng.uniform(0.3, 0.7, 2)
            lines.append(AffineFn(w, float(-(w[0] * p[0] + w[1] * p[1]))))
        if not lines_in_general_position(lines, 0.02):
            continue
        inside = True
        for i in range(n):
            for j in range(i + 1, n):
                M = np.array([lines[i].w, lines[j].w])
                x = np.linalg.solve(M, -np.array([lines[i].b, lines[j].b]))
                inside &= bool(np.all((x > 0.05) & (x < 0.95)))
        if inside:
            return lines


def _gradient_check(rng):
    img = generate_dataset(1, 12, 12, seed=int(rng.integers(1 << 30)))
    worst = 0.0
    for m, nu in ((1, 0.0), (2, 0.1)):
        model = random_lines_model(m, 8, rng)
        model.constants = region_means(model, img.images[0])
        worst = max(worst, finite_difference_check(model, img.images[0], 0.5, nu, 1e-5, 1.0 / 12))
    return "gradient-check", worst < 1e-4, worst, 1e-4


def _arrangement(rng):
    worst = 0.0
    for n in range(3, 7):
        lines = random_general_lines(n, rng)
        count = count_arrangement_regions(lines, resolution=512)
        worst = max(worst, abs(count - max_region_count(n)))
    return "arrangement-count", worst == 0, float(worst), 0.0


def _partition(rng):
    model = random_lines_model(3, 8, rng)
    memb = memberships_from_levels(level_values(model, pixel_centers(40, 40)), model.epsilon)
    err = float(np.max(np.abs(memb.sum(axis=-1) - 1.0)))
    return "partition-of-unity", err < 1e-12, err, 1e-12


def _inclusion_exclusion(rng):
    f = GrayImage(np.zeros((40, 40)))
    worst = 0.0
    for m in (1, 2, 3, 4):
        model = random_lines_model(m, 6, rng)
        worst = max(worst, abs(area_inclusion_exclusion(model, f) - area_union_brute(model, f)))
    return "inclusion-exclusion", worst == 0.0, worst, 0.0


def run_checks(seed: int = 0):
    rng = np.random.default_rng(seed)
    return [check(rng) for check in (_gradient_check, _arrangement, _partition, _inclusion_exclusion)]
