"""Hand-derived parameter gradient of the smoothed energy, plus a finite-difference check.

Region constants are held fixed while differentiating; they are refreshed
separately after each parameter update.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import sigmoid, sigmoid_derivative, sigmoid_second_derivative
from .energy import GRAD_NORM_FLOOR, energy_levelset
from .errors import EmptyBatch
from .multiphase import GrayImage, MultiphaseModel, sign_patterns
from .networks import LayerParams


@dataclass
class ParamGradient:
    da: np.ndarray
    dW: np.ndarray
    db: np.ndarray
    batch_size: int

    def flat(self) -> np.ndarray:
        return np.concatenate([self.da, self.dW.ravel(), self.db])

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat()))


def _level_derivatives(levels, f, constants, eps, mu, nu, length_scale, grads):
    """Per-point derivative of the integrand w.r.t. each level value and each level gradient.

    Returns ``u`` of shape ``(B, m)`` and ``v`` of shape ``(B, m, 2)``.
    """
    B, m = levels.shape
    pats = sign_patterns(m)
    pos = sigmoid(levels, eps)
    neg = sigmoid(-levels, eps)
    d1 = sigmoid_derivative(levels, eps)
    resid = (np.asarray(constants)[None, :] - f[:, None]) ** 2

    factors = [np.where(pats[:, k] > 0, pos[:, k:k + 1], neg[:, k:k + 1]) for k in range(m)]
    u = np.zeros((B, m))
    for k in range(m):
        loo = np.ones((B, pats.shape[0]))
        for j in range(m):
            if j != k:
                loo = loo * factors[j]
        u[:, k] = d1[:, k] * np.sum(resid * loo * pats[:, k], axis=1)

    if nu != 0.0:
        for k in range(m):
            others = np.prod(np.delete(neg, k, axis=1), axis=1)
            u[:, k] += nu * d1[:, k] * others

    v = np.zeros((B, m, 2))
    if mu != 0.0:
        gnorm = np.sqrt(np.sum(grads ** 2, axis=-1) + GRAD_NORM_FLOOR ** 2)
        scale = mu * length_scale
        u += scale * sigmoid_second_derivative(levels, eps) * gnorm
        v = scale * (d1 / gnorm)[..., None] * grads
    return u, v


def grad_energy(model: MultiphaseModel, f: GrayImage, mu: float, nu: float, batch=None,
                length_scale: float = 1.0) -> list[ParamGradient]:
    """Gradient of the batch-restricted smoothed energy for every level-set network.

    ``batch`` holds flat pixel indices (all pixels when None); each batch
    pixel carries weight ``1 / len(batch)``.
    """
    X = f.coords()
    fv = f.values()
    if batch is not None:
        batch = np.asarray(batch, dtype=int)
        if batch.size == 0:
            raise EmptyBatch("batch must contain at least one pixel")
        X, fv = X[batch], fv[batch]
    B = fv.shape[0]
    eps = model.epsilon

    hidden = []
    levels = np.empty((B, model.m))
    grads = np.empty((B, model.m, 2))
    for k, p in enumerate(model.levelsets):
        z = X @ p.W.T + p.b
        s, s1 = sigmoid(z, eps), sigmoid_derivative(z, eps)
        hidden.append((z, s, s1))
        levels[:, k] = s @ p.a
        grads[:, k] = (s1 * p.a) @ p.W

    u, v = _level_derivatives(levels, fv, model.constants, eps, mu, nu, length_scale, grads)
    u /= B
    v /= B

    out = []
    for k, p in enumerate(model.levelsets):
        z, s, s1 = hidden[k]
        uk, vk = u[:, k], v[:, k]
        vw = vk @ p.W.T
        s2 = sigmoid_second_derivative(z, eps) if mu != 0.0 else np.zeros_like(z)
        T = uk[:, None] * s1 + s2 * vw
        da = s.T @ uk + np.sum(s1 * vw, axis=0)
        db = p.a * T.sum(axis=0)
        dW = p.a[:, None] * (T.T @ X + s1.T @ vk)
        out.append(ParamGradient(da, dW, db, B))
    return out


def _total_energy(model, f, mu, nu, length_scale):
    return energy_levelset(model, f, mu, nu, length_scale).total


def numeric_gradient(model: MultiphaseModel, f: GrayImage, mu: float, nu: float,
                     step: float, length_scale: float = 1.0) -> list[np.ndarray]:
    """Central differences of the full-image energy over every flat parameter."""
    out = []
    work = model.copy()
    for k, p in enumerate(model.levelsets):
        base = p.flat()
        g = np.empty_like(base)
        for i in range(base.size):
            for sgn, slot in ((1.0, 0), (-1.0, 1)):
                v = base.copy()
                v[i] += sgn * step
                work.levelsets[k] = LayerParams.from_flat(v, p.n1)
                val = _total_energy(work, f, mu, nu, length_scale)
                if slot == 0:
                    plus = val
                else:
                    minus = val
            g[i] = (plus - minus) / (2.0 * step)
        work.levelsets[k] = p.copy()
        out.append(g)
    return out


def finite_difference_check(model: MultiphaseModel, f: GrayImage, mu: float, nu: float,
                            step: float = 1e-5, length_scale: float = 1.0) -> float:
    """Worst relative error between analytic and central-difference gradients."""
    if not step > 0:
        raise ValueError("step must be positive")
    analytic = [g.flat() for g in grad_energy(model, f, mu, nu, None, length_scale)]
    numeric = numeric_gradient(model, f, mu, nu, step, length_scale)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-12)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
