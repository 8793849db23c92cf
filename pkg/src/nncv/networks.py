"""Affine functions, one- and two-layer level-set networks on the plane.

A network carries its activation in the ``eps`` field: ``None`` selects the
Heaviside step, a positive float selects the sigmoid with that slope scale.
Evaluation functions accept a single point of shape ``(2,)`` or a stack of
points of shape ``(..., 2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .activations import activate, sigmoid_derivative
from .errors import DegenerateLines, EmptyInput, HeavisideNotDifferentiable, ShapeMismatch


@dataclass(frozen=True)
class AffineFn:
    """``x -> w.x + b``; its zero set is a line whenever ``w != 0``."""

    w: tuple[float, float]
    b: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., 0] * self.w[0] + x[..., 1] * self.w[1] + self.b

    @property
    def degenerate(self) -> bool:
        return self.w[0] == 0 and self.w[1] == 0


@dataclass
class LayerParams:
    """One-layer network ``sum_j a_j act(w_j . x + b_j)``."""

    a: np.ndarray
    W: np.ndarray
    b: np.ndarray
    eps: float | None = None

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float).reshape(-1)
        self.W = np.asarray(self.W, dtype=float).reshape(-1, 2)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        n = self.a.shape[0]
        if n < 1 or self.W.shape[0] != n or self.b.shape[0] != n:
            raise ShapeMismatch(
                f"a, W, b disagree on neuron count: {self.a.shape}, {self.W.shape}, {self.b.shape}"
            )

    @property
    def n1(self) -> int:
        return self.a.shape[0]

    def copy(self) -> LayerParams:
        return LayerParams(self.a.copy(), self.W.copy(), self.b.copy(), self.eps)

    def flat(self) -> np.ndarray:
        """Parameters packed as ``[a, W (row-major), b]``."""
        return np.concatenate([self.a, self.W.ravel(), self.b])

    @classmethod
    def from_flat(cls, v, n1: int, eps: float | None = None) -> LayerParams:
        v = np.asarray(v, dtype=float)
        return cls(v[:n1], v[n1:3 * n1].reshape(n1, 2), v[3 * n1:4 * n1], eps)


@dataclass
class TwoLayerParams:
    """Two-layer network ``sum_i c_i act(sum_j A_ij act(w_j . x + b_j) + d_i)``.

    The outer offset of neuron ``i`` is the row mean of ``D``; for the
    constant rows used by every construction in this package that is the
    common entry ``d_ij``.
    """

    A: np.ndarray
    c: np.ndarray
    D: np.ndarray
    b: np.ndarray
    W: np.ndarray
    eps: float | None = None

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.D = np.atleast_2d(np.asarray(self.D, dtype=float))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.W = np.asarray(self.W, dtype=float).reshape(-1, 2)
        n2, n1 = self.A.shape
        if (self.c.shape != (n2,) or self.D.shape != (n2, n1)
                or self.b.shape != (n1,) or self.W.shape != (n1, 2)):
            raise ShapeMismatch("inconsistent two-layer network dimensions")

    @property
    def offsets(self) -> np.ndarray:
        return self.D.mean(axis=1)


def hidden_activations(W, b, x, eps):
    """Pre-activations ``z`` and activations ``act(z)``, shapes ``(..., n1)``."""
    x = np.asarray(x, dtype=float)
    z = x @ np.asarray(W).T + b
    return z, activate(z, eps)


def eval_one_layer(p: LayerParams, x):
    _, s = hidden_activations(p.W, p.b, x, p.eps)
    return s @ p.a


def eval_one_layer_gradient(p: LayerParams, x):
    """Exact spatial gradient ``sum_j a_j sigma_eps'(w_j.x + b_j) w_j``."""
    if p.eps is None:
        raise HeavisideNotDifferentiable("a Heaviside network has zero gradient almost everywhere")
    x = np.asarray(x, dtype=float)
    z = x @ p.W.T + p.b
    return (sigmoid_derivative(z, p.eps) * p.a) @ p.W


def eval_two_layer(p: TwoLayerParams, x):
    _, s = hidden_activations(p.W, p.b, x, p.eps)
    outer = activate(s @ p.A.T + p.offsets, p.eps)
    return outer @ p.c


def sigmoidize(p, eps: float):
    """Same parameters with the sigmoid of slope ``eps`` in place of the step."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return replace(p, eps=float(eps))


def heavisideize(p):
    return replace(p, eps=None)


def polygon_threshold(n_lines: int) -> float:
    """Outer offset making ``sum_j act_j + kappa`` positive only when every ``act_j == 1``."""
    return -n_lines + 1.0 / 3.0


def build_polygon_indicator(lines: Sequence[AffineFn], inside_signs: Sequence[int],
                            c_in: float, c_out: float) -> TwoLayerParams:
    """Heaviside two-layer network equal to ``c_in`` on the open convex region
    ``{inside_signs[j] * lines[j](x) > 0 for all j}`` and ``c_out`` on the open complement.
    """
    if len(lines) < 3:
        raise ValueError("a polygon needs at least 3 lines")
    if len(inside_signs) != len(lines):
        raise ShapeMismatch("one inside sign per line is required")
    if any(ln.degenerate for ln in lines):
        raise DegenerateLines("every line needs a nonzero normal")
    n1 = len(lines)
    sgn = np.array([1.0 if s > 0 else -1.0 for s in inside_signs])
    W = np.array([ln.w for ln in lines], dtype=float) * sgn[:, None]
    b = np.array([ln.b for ln in lines], dtype=float) * sgn
    kappa = polygon_threshold(n1)
    A = np.vstack([np.ones(n1), -np.ones(n1)])
    D = np.vstack([np.full(n1, kappa), np.full(n1, -kappa)])
    return TwoLayerParams(A=A, c=np.array([c_in, c_out], dtype=float), D=D, b=b, W=W)


def lines_in_general_position(lines: Sequence[AffineFn], tol: float = 1e-9) -> bool:
    """No parallel pair and no three lines through a common point, up to ``tol``."""
    n = len(lines)
    normals = [np.asarray(ln.w, dtype=float) / np.hypot(*ln.w) for ln in lines]
    offsets = [ln.b / np.hypot(*ln.w) for ln in lines]
    points = {}
    for i in range(n):
        for j in range(i + 1, n):
            M = np.vstack([normals[i], normals[j]])
            if abs(np.linalg.det(M)) < tol:
                return False
            points[i, j] = np.linalg.solve(M, -np.array([offsets[i], offsets[j]]))
    for (i, j), p in points.items():
        for k in range(n):
            if k in (i, j):
                continue
            if abs(normals[k] @ p + offsets[k]) < tol:
                return False
    return True


def max_region_count(n_lines: int) -> int:
    return n_lines * (n_lines + 1) // 2 + 1


def count_arrangement_regions(lines: Sequence[AffineFn], domain=(0.0, 1.0, 0.0, 1.0),
                              resolution: int = 512, on_line_tol: float = 1e-12) -> int:
    """Number of distinct open sign regions of the line arrangement seen inside ``domain``.

    ``domain`` is ``(xmin, xmax, ymin, ymax)``. Regions are found by probing a
    ``resolution x resolution`` grid of cell centres; probes lying on a line
    are discarded, so regions thinner than the grid spacing may be missed.
    """
    if len(lines) == 0:
        raise EmptyInput("no lines given")
    xmin, xmax, ymin, ymax = domain
    xs = xmin + (np.arange(resolution) + 0.5) * (xmax - xmin) / resolution
    ys = ymin + (np.arange(resolution) + 0.5) * (ymax - ymin) / resolution
    X, Y = np.meshgrid(xs, ys)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    W = np.array([ln.w for ln in lines], dtype=float)
    b = np.array([ln.b for ln in lines], dtype=float)
    vals = pts @ W.T + b
    keep = np.all(np.abs(vals) >= on_line_tol, axis=1)
    signs = vals[keep] > 0
    # pack sign vectors into bytes for fast deduplication
    packed = np.packbits(signs, axis=1)
    return int(np.unique(packed, axis=0).shape[0])
