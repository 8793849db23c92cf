"""Classical level-set evolution on the pixel grid, used as an independent reference.

Field values are in units of the domain side (a signed distance to a circle
of radius 0.25 ranges over roughly [-0.5, 0.25]); derivatives use unit pixel
spacing, so the curvature and ``mu`` carry the pixel-length convention of the
energy module. Each step moves every field down the gradient of the smoothed
multiphase energy:

    d l_k / dt = delta_eps(l_k) * [ mu * div(grad l_k / |grad l_k|_eta)
                                    - nu * d(area) / dH_k
                                    - sum_i i_k (c_i - f)^2 prod_{j != k} H(i_j l_j) ]

with region constants recomputed from smoothed memberships before every step.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .activations import sigmoid, sigmoid_derivative
from .errors import UnstableStep, UnsupportedPhases
from .multiphase import (
    GrayImage,
    labels_from_levels,
    memberships_from_levels,
    sign_patterns,
    weighted_means,
)


@dataclass
class GridLevelSet:
    """One level-set function sampled at pixel centres, ``values[row, col]``."""

    values: np.ndarray
    dt: float = 0.1
    eta: float = 1e-8

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("level-set values must be a 2-D array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("level-set values must be finite")
        if not self.dt > 0 or not self.eta > 0:
            raise ValueError("dt and eta must be positive")

    def copy(self) -> GridLevelSet:
        return GridLevelSet(self.values.copy(), self.dt, self.eta)


@dataclass
class EvolutionResult:
    levelsets: list[GridLevelSet]
    constants: list[np.ndarray] = field(default_factory=list)

    def labels(self) -> np.ndarray:
        return labels_from_levels(np.stack([g.values for g in self.levelsets], axis=-1))


def circle_sdf(width: int, height: int, center, radius: float) -> np.ndarray:
    """Signed distance from the pixel centres to a circle in the unit square, positive inside."""
    X, Y = np.meshgrid((np.arange(width) + 0.5) / width, (np.arange(height) + 0.5) / height)
    return radius - np.hypot(X - center[0], Y - center[1])


def default_init(f: GrayImage, m: int, dt: float = 0.1, eta: float = 1e-8) -> list[GridLevelSet]:
    """A centred circle of radius 0.25 for one field; two offset circles for two."""
    if m == 1:
        specs = [((0.5, 0.5), 0.25)]
    elif m == 2:
        specs = [((0.4, 0.4), 0.25), ((0.6, 0.6), 0.25)]
    else:
        raise UnsupportedPhases(f"grid evolution supports m in {{1, 2}}, got {m}")
    return [GridLevelSet(circle_sdf(f.width, f.height, c, r), dt, eta) for c, r in specs]


def curvature(phi: np.ndarray, eta: float) -> np.ndarray:
    """``div(grad phi / |grad phi|_eta)`` in flux form with zero flux through the border.

    Normal derivatives sit on cell faces and tangential ones are averaged
    central differences, so the grid sum of the result telescopes to zero.
    """
    p = np.pad(phi, 1, mode="symmetric")
    cy = 0.5 * (p[2:, :] - p[:-2, :])[:, 1:-1]   # d/drow at cells
    cx = 0.5 * (p[:, 2:] - p[:, :-2])[1:-1, :]   # d/dcol at cells

    gx = phi[:, 1:] - phi[:, :-1]
    gy = 0.5 * (cy[:, 1:] + cy[:, :-1])
    fx = gx / np.sqrt(gx * gx + gy * gy + eta * eta)

    hy = phi[1:, :] - phi[:-1, :]
    hx = 0.5 * (cx[1:, :] + cx[:-1, :])
    fy = hy / np.sqrt(hx * hx + hy * hy + eta * eta)

    zc = np.zeros((phi.shape[0], 1))
    zr = np.zeros((1, phi.shape[1]))
    fx = np.hstack([zc, fx, zc])
    fy = np.vstack([zr, fy, zr])
    return (fx[:, 1:] - fx[:, :-1]) + (fy[1:, :] - fy[:-1, :])


def grid_constants(fields: np.ndarray, f: GrayImage, eps: float, previous=None) -> np.ndarray:
    """Smoothed region means for stacked fields of shape ``(H, W, m)``."""
    m = fields.shape[-1]
    memb = memberships_from_levels(fields.reshape(-1, m), eps)
    prev = np.zeros(2 ** m) if previous is None else previous
    return weighted_means(memb, f.values(), prev, 1.0 / f.size)


def forcing(fields: np.ndarray, f: GrayImage, constants, mu: float, nu: float, eps: float,
            eta: float) -> np.ndarray:
    """Right-hand side of the evolution for every field, shape ``(H, W, m)``."""
    m = fields.shape[-1]
    pats = sign_patterns(m)
    pos = sigmoid(fields, eps)
    neg = sigmoid(-fields, eps)
    resid = (np.asarray(constants)[None, None, :] - f.pixels[..., None]) ** 2
    out = np.empty_like(fields)
    for k in range(m):
        weight = np.ones(fields.shape[:2] + (pats.shape[0],))
        for j in range(m):
            if j != k:
                weight = weight * np.where(pats[:, j] > 0, pos[..., j:j + 1], neg[..., j:j + 1])
        rhs = -np.sum(resid * weight * pats[:, k], axis=-1)
        if nu != 0.0:
            rhs -= nu * np.prod(np.delete(neg, k, axis=-1), axis=-1)
        if mu != 0.0:
            rhs += mu * curvature(fields[..., k], eta)
        out[..., k] = sigmoid_derivative(fields[..., k], eps) * rhs
    return out


def evolve(f: GrayImage, m: int, init=None, steps: int = 500, mu: float = 0.5, nu: float = 0.0,
           eps: float = 0.5) -> EvolutionResult:
    """Explicit Euler evolution of ``m`` grid level sets.

    ``constants[t]`` holds the region means of the fields after ``t`` steps,
    so the list has ``steps + 1`` entries. Raises ``UnstableStep`` with the
    offending step index (1-based) as soon as a field stops being finite.
    """
    if m not in (1, 2):
        raise UnsupportedPhases(f"grid evolution supports m in {{1, 2}}, got {m}")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if not eps > 0:
        raise ValueError("eps must be positive")
    init = default_init(f, m) if init is None else [g.copy() for g in init]
    if len(init) != m:
        raise ValueError(f"expected {m} initial level sets, got {len(init)}")
    for g in init:
        if g.values.shape != f.pixels.shape:
            raise ValueError(f"level-set shape {g.values.shape} does not match image {f.pixels.shape}")
    dt = np.array([g.dt for g in init])
    eta = init[0].eta

    fields = np.stack([g.values for g in init], axis=-1)
    consts = grid_constants(fields, f, eps)
    trace = [consts]
    for step in range(1, steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            fields = fields + dt * forcing(fields, f, consts, mu, nu, eps, eta)
        if not np.all(np.isfinite(fields)):
            raise UnstableStep(step)
        consts = grid_constants(fields, f, eps, consts)
        trace.append(consts)
    out = [GridLevelSet(fields[..., k].copy(), g.dt, g.eta) for k, g in enumerate(init)]
    return EvolutionResult(out, trace)
