"""Chan-Vese energy in region form and in smoothed level-set form.

Integrals over the unit square are Riemann sums over pixel centres with
weight ``1 / (width * height)``. The length term is multiplied by
``length_scale``: 1 measures boundary length in units of the domain side,
``1 / max(width, height)`` measures it in pixel edges (the convention under
which ``mu`` has its classical pixel-unit meaning).
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from .activations import activate, sigmoid, sigmoid_derivative
from .errors import NonPartition
from .multiphase import (
    GrayImage,
    MultiphaseModel,
    level_gradients,
    level_values,
    memberships_from_levels,
    parse_pattern_key,
    pattern_index,
    segmentation_mask,
    sign_patterns,
)

GRAD_NORM_FLOOR = 1e-12
CSV_FIELDS = ("iteration", "data", "length", "area", "total")


@dataclass(frozen=True)
class EnergyBreakdown:
    data_term: float
    length_term: float
    area_term: float
    mu: float
    nu: float

    @property
    def total(self) -> float:
        return self.data_term + self.mu * self.length_term + self.nu * self.area_term

    def row(self, iteration: int) -> dict:
        return {"iteration": iteration, "data": repr(self.data_term),
                "length": repr(self.length_term), "area": repr(self.area_term),
                "total": repr(self.total)}


def write_energy_csv(path, breakdowns, extra=None):
    """One row per iteration; ``extra`` maps additional column names to per-row values."""
    extra = extra or {}
    fields = list(CSV_FIELDS) + list(extra)
    from .dataio import atomic_write

    with atomic_write(path, "w") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for i, e in enumerate(breakdowns, start=1):
            row = e.row(i)
            for k, vals in extra.items():
                row[k] = repr(float(vals[i - 1]))
            w.writerow(row)


def union_area_inclusion_exclusion(pos: np.ndarray) -> np.ndarray:
    """Per-point measure of the union of positive phases from activations ``pos`` (``(..., m)``).

    Alternating sum over all non-empty index subsets of the products of
    their activations.
    """
    m = pos.shape[-1]
    out = np.zeros(pos.shape[:-1])
    for size in range(1, m + 1):
        sign = 1.0 if size % 2 else -1.0
        for subset in itertools.combinations(range(m), size):
            out = out + sign * np.prod(pos[..., list(subset)], axis=-1)
    return out


def smoothed_length(levels: np.ndarray, grads: np.ndarray, eps: float) -> np.ndarray:
    """Per-point ``sum_k delta_eps(l_k) |grad l_k|``; ``levels`` ``(..., m)``, ``grads`` ``(..., m, 2)``."""
    gnorm = np.sqrt(np.sum(grads ** 2, axis=-1) + GRAD_NORM_FLOOR ** 2)
    return np.sum(sigmoid_derivative(levels, eps) * gnorm, axis=-1)


def energy_terms(levels, grads, f, constants, eps, weight):
    """``(data, length, area)`` Riemann sums with per-point ``weight``."""
    memb = memberships_from_levels(levels, eps)
    resid = (np.asarray(constants)[None, :] - f[:, None]) ** 2
    data = weight * np.sum(resid * memb)
    length = weight * np.sum(smoothed_length(levels, grads, eps))
    area = weight * np.sum(union_area_inclusion_exclusion(sigmoid(levels, eps)))
    return float(data), float(length), float(area)


def energy_levelset(model: MultiphaseModel, f: GrayImage, mu: float, nu: float,
                    length_scale: float = 1.0, pixels=None) -> EnergyBreakdown:
    """Smoothed parametrized energy of ``model`` on ``f``.

    ``pixels`` restricts the integrals to those flat pixel indices, each
    weighted ``1 / len(pixels)``.
    """
    X = f.coords()
    fv = f.values()
    if pixels is not None:
        pixels = np.asarray(pixels)
        X, fv = X[pixels], fv[pixels]
    levels = level_values(model, X, smooth=True)
    grads = level_gradients(model, X)
    data, length, area = energy_terms(levels, grads, fv, model.constants, model.epsilon,
                                      1.0 / len(fv))
    return EnergyBreakdown(data, length_scale * length, area, mu, nu)


def area_union_brute(model: MultiphaseModel, f: GrayImage) -> float:
    """Fraction of pixels where some Heaviside level-set network is positive."""
    levels = level_values(model, f.coords(), smooth=False)
    count = np.count_nonzero(np.any(levels > 0, axis=1))
    return (1.0 / f.size) * float(count)


def area_inclusion_exclusion(model: MultiphaseModel, f: GrayImage, smooth: bool = False) -> float:
    eps = model.epsilon if smooth else None
    levels = level_values(model, f.coords(), smooth=smooth)
    return (1.0 / f.size) * float(np.sum(union_area_inclusion_exclusion(activate(levels, eps))))


def _labels_from_masks(masks, m, shape):
    labels = np.full(shape, -1, dtype=int)
    cover = np.zeros(shape, dtype=int)
    for key, mask in masks.items():
        pattern = parse_pattern_key(key) if isinstance(key, str) else tuple(key)
        if len(pattern) != m:
            raise NonPartition(f"pattern {key!r} does not have length {m}")
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != shape:
            raise NonPartition(f"mask for {key!r} has shape {mask.shape}, expected {shape}")
        labels[mask] = pattern_index(pattern)
        cover += mask
    if np.any(cover != 1):
        raise NonPartition(f"masks overlap or leave gaps at {np.count_nonzero(cover != 1)} pixels")
    return labels


def interface_length(labels: np.ndarray) -> float:
    """Count of 4-neighbour label changes times the pixel edge length ``1 / max(W, H)``."""
    h = 1.0 / max(labels.shape)
    changes = np.count_nonzero(labels[1:, :] != labels[:-1, :])
    changes += np.count_nonzero(labels[:, 1:] != labels[:, :-1])
    return h * changes


def energy_from_labels(labels: np.ndarray, constants, f: GrayImage, mu: float, nu: float,
                       m: int, length_scale: float = 1.0) -> EnergyBreakdown:
    constants = np.asarray(constants, dtype=float)
    w = 1.0 / f.size
    data = w * float(np.sum((constants[labels] - f.pixels) ** 2))
    all_negative = 2 ** m - 1
    area = w * float(np.count_nonzero(labels != all_negative))
    return EnergyBreakdown(data, length_scale * interface_length(labels), area, mu, nu)


def energy_region_form(masks, constants, f: GrayImage, mu: float, nu: float,
                       length_scale: float = 1.0) -> EnergyBreakdown:
    """Region-form energy of a partition of the pixel grid.

    ``masks`` and ``constants`` map sign patterns (tuples or ``"+-"`` keys)
    to boolean pixel masks and region values. The area term is the measure
    of every region except the all-negative one, i.e. the union of the
    positive phases.
    """
    keys = list(masks)
    first = keys[0]
    m = len(first) if not isinstance(first, str) else len(parse_pattern_key(first))
    labels = _labels_from_masks(masks, m, f.pixels.shape)
    cvec = np.zeros(2 ** m)
    for key, val in constants.items():
        pattern = parse_pattern_key(key) if isinstance(key, str) else tuple(key)
        cvec[pattern_index(pattern)] = val
    return energy_from_labels(labels, cvec, f, mu, nu, m, length_scale)


def heaviside_masks(model: MultiphaseModel, f: GrayImage) -> dict:
    """Region masks of the Heaviside model, keyed by pattern tuple."""
    labels = segmentation_mask(model, f.width, f.height, smooth=False)
    return {tuple(p): labels == i for i, p in enumerate(sign_patterns(model.m))}
