"""Multiphase representation built from ``m`` one-layer level-set networks.

``m`` level-set networks split the unit square into up to ``2**m`` regions
indexed by sign patterns. Patterns are enumerated in a fixed order,
``itertools.product((+1, -1), repeat=m)``, and the region constants of a
model are stored in an array aligned with that order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .activations import activate, sigmoid, sigmoid_derivative
from .errors import InvalidDims, PatternLengthMismatch, ShapeMismatch
from .networks import LayerParams, hidden_activations

EMPTY_REGION_MASS = 1e-8


@lru_cache(maxsize=None)
def _patterns(m: int) -> np.ndarray:
    out = np.array(list(itertools.product((1, -1), repeat=m)), dtype=int)
    out.setflags(write=False)
    return out


def sign_patterns(m: int) -> np.ndarray:
    """All ``2**m`` sign patterns as rows of a read-only ``(2**m, m)`` int array."""
    if m < 1:
        raise ValueError("m must be at least 1")
    return _patterns(m)


def pattern_key(pattern) -> str:
    """``(1, -1, 1)`` -> ``"+-+"``."""
    return "".join("+" if s > 0 else "-" for s in pattern)


def parse_pattern_key(key: str) -> tuple[int, ...]:
    if not key or set(key) - {"+", "-"}:
        raise ValueError(f"bad sign pattern key {key!r}")
    return tuple(1 if ch == "+" else -1 for ch in key)


def pattern_index(pattern) -> int:
    """Position of ``pattern`` in the canonical enumeration."""
    idx = 0
    for s in pattern:
        idx = 2 * idx + (0 if s > 0 else 1)
    return idx


@dataclass
class GrayImage:
    """Grayscale image on the unit square, ``pixels[row, col]`` in [0, 1].

    Pixel ``(i, j)`` (column ``i``, row ``j``) is centred at
    ``((i + 0.5) / width, (j + 0.5) / height)``.
    """

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.ndim != 2 or self.pixels.size == 0:
            raise InvalidDims(f"expected a non-empty 2-D array, got shape {self.pixels.shape}")
        if not np.all(np.isfinite(self.pixels)):
            raise ValueError("pixel values must be finite")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def size(self) -> int:
        return self.pixels.size

    @property
    def pixel_size(self) -> float:
        return 1.0 / max(self.width, self.height)

    def values(self) -> np.ndarray:
        return self.pixels.ravel()

    def coords(self) -> np.ndarray:
        return pixel_centers(self.width, self.height)


@lru_cache(maxsize=32)
def _centers(width: int, height: int) -> np.ndarray:
    xs = (np.arange(width) + 0.5) / width
    ys = (np.arange(height) + 0.5) / height
    X, Y = np.meshgrid(xs, ys)
    out = np.stack([X.ravel(), Y.ravel()], axis=1)
    out.setflags(write=False)
    return out


def pixel_centers(width: int, height: int) -> np.ndarray:
    """Row-major ``(height * width, 2)`` array of pixel centres."""
    return _centers(int(width), int(height))


@dataclass
class MultiphaseModel:
    """``m`` level-set networks sharing ``n1`` neurons, region constants and smoothing."""

    levelsets: list[LayerParams]
    constants: np.ndarray = None
    epsilon: float = 0.5
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.levelsets) < 1:
            raise ValueError("a model needs at least one level-set network")
        n1 = self.levelsets[0].n1
        if any(p.n1 != n1 for p in self.levelsets):
            raise ShapeMismatch("all level-set networks must share n1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.constants is None:
            self.constants = np.zeros(2 ** self.m)
        self.constants = np.asarray(self.constants, dtype=float).reshape(-1)
        if self.constants.shape != (2 ** self.m,):
            raise ShapeMismatch(f"expected {2 ** self.m} region constants")
        if not np.all(np.isfinite(self.constants)):
            raise ValueError("region constants must be finite")

    @property
    def m(self) -> int:
        return len(self.levelsets)

    @property
    def n1(self) -> int:
        return self.levelsets[0].n1

    @property
    def patterns(self) -> np.ndarray:
        return sign_patterns(self.m)

    def constant(self, pattern) -> float:
        if len(pattern) != self.m:
            raise PatternLengthMismatch(f"pattern of length {len(pattern)} for m={self.m}")
        return float(self.constants[pattern_index(pattern)])

    def constant_map(self) -> dict[str, float]:
        return {pattern_key(p): float(c) for p, c in zip(self.patterns, self.constants)}

    def copy(self) -> MultiphaseModel:
        return MultiphaseModel([p.copy() for p in self.levelsets], self.constants.copy(),
                               self.epsilon, dict(self.meta))


def random_model(m: int, n1: int, rng: np.random.Generator, std: float = 0.01,
                 epsilon: float = 0.5) -> MultiphaseModel:
    """Parameters drawn i.i.d. from a zero-mean normal with standard deviation ``std``."""
    levelsets = [LayerParams(rng.normal(0.0, std, n1), rng.normal(0.0, std, (n1, 2)),
                             rng.normal(0.0, std, n1)) for _ in range(m)]
    return MultiphaseModel(levelsets, epsilon=epsilon)


def init_circles(m: int, radius: float = 0.3, spread: float = 0.05):
    """Centres and radius of the starting circles: one centred circle, or ``m``
    circles on a small ring around the centre (``(0.45, 0.45)`` and ``(0.55, 0.55)`` for two)."""
    if m == 1:
        return [(0.5, 0.5)], radius
    angles = 1.25 * np.pi + 2.0 * np.pi * np.arange(m) / m
    r = spread * np.sqrt(2.0)
    return [(0.5 + r * np.cos(t), 0.5 + r * np.sin(t)) for t in angles], radius


def circle_model(m: int, n1: int, rng: np.random.Generator, width: int, height: int,
                 epsilon: float = 0.5, sharpness: float = 8.0, radius: float = 0.3,
                 ridge: float = 1e-6) -> MultiphaseModel:
    """Random hidden layers whose output weights are fitted to circle distance fields.

    Every hidden unit gets a uniform random direction with slope
    ``sharpness`` and an offset placing its zero line through a uniform random
    point of the unit square. The output weights of network ``k`` are the
    ridge least-squares fit, over the pixel centres, of the signed distance
    (in pixels, positive inside) to the ``k``-th circle of ``init_circles``.
    """
    if sharpness <= 0 or radius <= 0:
        raise ValueError("sharpness and radius must be positive")
    X = pixel_centers(width, height)
    per_unit = max(width, height)
    centres, r = init_circles(m, radius)
    levelsets = []
    for c in centres:
        theta = rng.uniform(0.0, 2.0 * np.pi, n1)
        W = sharpness * np.stack([np.cos(theta), np.sin(theta)], axis=1)
        b = -np.sum(W * rng.uniform(0.0, 1.0, (n1, 2)), axis=1)
        S = sigmoid(X @ W.T + b, epsilon)
        target = per_unit * (r - np.hypot(X[:, 0] - c[0], X[:, 1] - c[1]))
        a = np.linalg.solve(S.T @ S + ridge * len(X) * np.eye(n1), S.T @ target)
        levelsets.append(LayerParams(a, W, b))
    return MultiphaseModel(levelsets, epsilon=epsilon)


def _eps(model: MultiphaseModel, smooth: bool):
    return model.epsilon if smooth else None


def level_values(model: MultiphaseModel, x, smooth: bool = True) -> np.ndarray:
    """Values of every level-set network, shape ``(..., m)``."""
    eps = _eps(model, smooth)
    cols = []
    for p in model.levelsets:
        _, s = hidden_activations(p.W, p.b, x, eps)
        cols.append(s @ p.a)
    return np.stack(cols, axis=-1)


def level_gradients(model: MultiphaseModel, x) -> np.ndarray:
    """Spatial gradients of the sigmoid level-set networks, shape ``(..., m, 2)``."""
    x = np.asarray(x, dtype=float)
    out = []
    for p in model.levelsets:
        z = x @ p.W.T + p.b
        out.append((sigmoid_derivative(z, model.epsilon) * p.a) @ p.W)
    return np.stack(out, axis=-2)


def memberships_from_levels(levels: np.ndarray, eps) -> np.ndarray:
    """Products ``prod_k act(i_k l_k)`` for every pattern, shape ``(..., 2**m)``."""
    m = levels.shape[-1]
    pats = sign_patterns(m)
    pos = activate(levels, eps)
    neg = activate(-levels, eps)
    out = np.ones(levels.shape[:-1] + (pats.shape[0],))
    for k in range(m):
        fac = np.where(pats[:, k] > 0, pos[..., k:k + 1], neg[..., k:k + 1])
        out = out * fac
    return out


def membership(model: MultiphaseModel, pattern, x, smooth: bool = True):
    """``prod_k act(pattern_k * n_k(x))``."""
    if len(pattern) != model.m:
        raise PatternLengthMismatch(f"pattern of length {len(pattern)} for m={model.m}")
    levels = level_values(model, x, smooth)
    sig = np.asarray(pattern, dtype=float)
    out = np.prod(activate(sig * levels, _eps(model, smooth)), axis=-1)
    return out[()] if np.ndim(out) == 0 else out


def eval_multiphase(model: MultiphaseModel, x, smooth: bool = True):
    """Piecewise-constant reconstruction ``sum_i c_i membership_i(x)``."""
    levels = level_values(model, x, smooth)
    out = memberships_from_levels(levels, _eps(model, smooth)) @ model.constants
    return out[()] if np.ndim(out) == 0 else out


def weighted_means(memb: np.ndarray, f: np.ndarray, previous: np.ndarray,
                   weight: float) -> np.ndarray:
    """Membership-weighted means of ``f``; regions with mass below the guard keep ``previous``."""
    mass = weight * memb.sum(axis=0)
    num = weight * (f @ memb)
    out = np.array(previous, dtype=float, copy=True)
    ok = mass >= EMPTY_REGION_MASS
    out[ok] = num[ok] / mass[ok]
    return out


def region_means(model: MultiphaseModel, f: GrayImage, smooth: bool = True) -> np.ndarray:
    """Region constants minimizing the data term for the current level sets."""
    levels = level_values(model, f.coords(), smooth)
    memb = memberships_from_levels(levels, _eps(model, smooth))
    return weighted_means(memb, f.values(), model.constants, 1.0 / f.size)


def labels_from_levels(levels: np.ndarray) -> np.ndarray:
    """Pattern index with ``sign(l_k)``, zero counted as positive."""
    idx = np.zeros(levels.shape[:-1], dtype=int)
    for k in range(levels.shape[-1]):
        idx = 2 * idx + (levels[..., k] < 0)
    return idx


def segmentation_mask(model: MultiphaseModel, width: int, height: int,
                      smooth: bool = True) -> np.ndarray:
    """Per-pixel pattern index, shape ``(height, width)``."""
    levels = level_values(model, pixel_centers(width, height), smooth)
    return labels_from_levels(levels).reshape(height, width)


def foreground_mask(labels: np.ndarray, constants: np.ndarray, min_contrast: float = 0.1) -> np.ndarray:
    """Pixels whose region constant differs from the background's by more than ``min_contrast``.

    The background is the most populous label. Merging labels by their
    constants makes the mask independent of which phase a method assigns
    to the object.
    """
    counts = np.bincount(labels.ravel(), minlength=len(constants))
    bg = constants[int(np.argmax(counts))]
    return np.abs(np.asarray(constants)[labels] - bg) > min_contrast
