"""Heaviside step, logistic sigmoid with slope scale ``eps`` and its derivatives.

All functions accept scalars or numpy arrays and broadcast elementwise.
"""
import numpy as np


def _check_eps(eps):
    if not eps > 0:
        raise ValueError(f"smoothing eps must be positive, got {eps!r}")


def heaviside(x):
    """Step function taking the value 1/2 at zero (both signed zeros)."""
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0, 1.0, np.where(x < 0, 0.0, 0.5))
    return out[()] if out.ndim == 0 else out


def sigmoid(x, eps):
    """``1 / (1 + exp(-x/eps))`` evaluated without overflow for any finite x."""
    _check_eps(eps)
    t = np.asarray(x, dtype=float) / eps
    # exp of a non-positive argument never overflows
    e = np.exp(-np.abs(t))
    out = np.where(t >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return out[()] if out.ndim == 0 else out


def sigmoid_derivative(x, eps):
    """Smoothed delta: the exact derivative ``sigma_eps(x)(1 - sigma_eps(x)) / eps``.

    Written in terms of ``exp(-|x|/eps)`` so the result is exactly even in x.
    """
    _check_eps(eps)
    e = np.exp(-np.abs(np.asarray(x, dtype=float)) / eps)
    out = e / ((1.0 + e) ** 2 * eps)
    return out[()] if out.ndim == 0 else out


def sigmoid_second_derivative(x, eps):
    """Derivative of :func:`sigmoid_derivative`, ``delta_eps(x) (1 - 2 sigma_eps(x)) / eps``."""
    s = sigmoid(x, eps)
    return sigmoid_derivative(x, eps) * (1.0 - 2.0 * s) / eps


def activate(x, eps=None):
    """Heaviside when ``eps`` is None, else the sigmoid with that slope scale."""
    return heaviside(x) if eps is None else sigmoid(x, eps)
