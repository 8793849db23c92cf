"""Shared fixtures-by-function for the test suite."""
import numpy as np
from scipy.spatial import ConvexHull

from nncv.activations import sigmoid
from nncv.dataio import generate_dataset
from nncv.networks import AffineFn, LayerParams
from nncv.multiphase import MultiphaseModel


def random_convex_polygon(rng, n_min=3, n_max=8):
    """Vertices (counter-clockwise) of a random convex polygon inside the unit square."""
    while True:
        k = int(rng.integers(n_min, n_max + 1))
        t = np.sort(rng.uniform(0, 2 * np.pi, k))
        r = rng.uniform(0.2, 0.4)
        c = rng.uniform(0.4, 0.6, 2)
        pts = c + r * np.stack([np.cos(t), np.sin(t)], axis=1)
        hull = ConvexHull(pts)
        if len(hull.vertices) == k and hull.volume > 0.02:
            return pts[hull.vertices]


def polygon_lines(vertices):
    """Edge lines in Hesse normal form and the sign of each line on the polygon interior."""
    centroid = vertices.mean(axis=0)
    lines, signs = [], []
    for p, q in zip(vertices, np.roll(vertices, -1, axis=0)):
        d = np.hypot(*(q - p))
        w = (float((q[1] - p[1]) / d), float((p[0] - q[0]) / d))
        b = float(-(w[0] * p[0] + w[1] * p[1]))
        ln = AffineFn(w, b)
        lines.append(ln)
        signs.append(1 if ln(centroid) > 0 else -1)
    return lines, signs


def grid(n):
    xs = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(xs, xs)
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def random_layer(rng, n1, scale=3.0, eps=None):
    W = rng.normal(0, scale, (n1, 2))
    b = -np.sum(W * rng.uniform(0.1, 0.9, (n1, 2)), axis=1)
    return LayerParams(rng.normal(0, 1, n1), W, b, eps)


def random_model(rng, m, n1, eps=0.5, scale=3.0):
    return MultiphaseModel([random_layer(rng, n1, scale) for _ in range(m)],
                           rng.uniform(0, 1, 2 ** m), eps)


def random_margin_model(rng, m, n1, margin=0.2, eps=0.5, scale=6.0, resolution=100):
    """Random model whose Heaviside levels stay ``margin`` away from zero on the probe grid.

    Levels that hover near zero over a whole region converge only once eps
    drops below that distance, so finite eps sweeps need this margin.
    """
    from nncv.multiphase import level_values

    pts = grid(resolution)
    while True:
        model = random_model(rng, m, n1, eps, scale)
        if np.abs(level_values(model, pts, smooth=False)).min() >= margin:
            return model


def image(seed=0, size=24):
    return generate_dataset(1, size, size, seed=seed).images[0]


def pixel_grid(f):
    xs = (np.arange(f.width) + 0.5) / f.width
    ys = (np.arange(f.height) + 0.5) / f.height
    return np.meshgrid(xs, ys)


def level(p, X, Y, eps):
    return sum(a * sigmoid(w[0] * X + w[1] * Y + b, eps) for a, w, b in zip(p.a, p.W, p.b))


def level_grad(p, X, Y, eps):
    gx = gy = 0.0
    for a, w, b in zip(p.a, p.W, p.b):
        s = sigmoid(w[0] * X + w[1] * Y + b, eps)
        d = s * (1 - s) / eps
        gx = gx + a * d * w[0]
        gy = gy + a * d * w[1]
    return np.sqrt(gx ** 2 + gy ** 2 + 1e-24)


def expanded_m1(model, f, mu, nu):
    X, Y = pixel_grid(f)
    e = model.epsilon
    p = model.levelsets[0]
    l = level(p, X, Y, e)
    H = sigmoid(l, e)
    c1, c2 = model.constants
    F = f.pixels
    data = np.mean((F - c1) ** 2 * H + (F - c2) ** 2 * (1 - H))
    length = np.mean(H * (1 - H) / e * level_grad(p, X, Y, e))
    return data + mu * length + nu * np.mean(H)


def expanded_m2(model, f, mu, nu):
    X, Y = pixel_grid(f)
    e = model.epsilon
    p, q = model.levelsets
    l1, l2 = level(p, X, Y, e), level(q, X, Y, e)
    H1, H2 = sigmoid(l1, e), sigmoid(l2, e)
    cpp, cpm, cmp_, cmm = model.constants
    F = f.pixels
    data = np.mean((F - cpp) ** 2 * H1 * H2 + (F - cpm) ** 2 * H1 * (1 - H2)
                   + (F - cmp_) ** 2 * (1 - H1) * H2 + (F - cmm) ** 2 * (1 - H1) * (1 - H2))
    length = np.mean(H1 * (1 - H1) / e * level_grad(p, X, Y, e)
                     + H2 * (1 - H2) / e * level_grad(q, X, Y, e))
    area = np.mean(H1 + H2 - H1 * H2)
    return data + mu * length + nu * area
