"""Synthetic circle images, PGM (P5) I/O, JSON checkpoints and mask metrics."""
from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimMismatch,
    InvalidDims,
    MalformedFile,
    SchemaError,
    UnsupportedFormat,
    VersionMismatch,
)
from .multiphase import GrayImage, MultiphaseModel, parse_pattern_key, pattern_index, pattern_key
from .networks import LayerParams

CHECKPOINT_VERSION = 1
MIN_CONTRAST = 0.2


@dataclass(frozen=True)
class CircleSpec:
    center: tuple[float, float]
    radius: float
    foreground: float
    background: float

    def __post_init__(self):
        if not 0.05 <= self.radius <= 0.4:
            raise ValueError(f"radius {self.radius} outside [0.05, 0.4]")
        if abs(self.foreground - self.background) < MIN_CONTRAST:
            raise ValueError("foreground and background intensities must differ by at least 0.2")

    def inside(self, x, y):
        dx = x - self.center[0]
        dy = y - self.center[1]
        return dx * dx + dy * dy < self.radius * self.radius


@dataclass
class SyntheticSet:
    images: list[GrayImage]
    masks: list[np.ndarray]
    circles: list[list[CircleSpec]]


def rasterize(circles, background: float, width: int, height: int):
    """Image and label mask (0 background, ``i`` for circle ``i``); later circles overwrite."""
    xs = (np.arange(width) + 0.5) / width
    ys = (np.arange(height) + 0.5) / height
    X, Y = np.meshgrid(xs, ys)
    img = np.full((height, width), float(background))
    labels = np.zeros((height, width), dtype=int)
    for i, c in enumerate(circles, start=1):
        inside = c.inside(X, Y)
        img[inside] = c.foreground
        labels[inside] = i
    return GrayImage(img), labels


def random_circles(rng: np.random.Generator, count: int, radius=(0.15, 0.3),
                   background=(0.0, 0.1), foreground=(0.9, 1.0), center=(0.2, 0.8)):
    bg = float(rng.uniform(*background))
    out = []
    for _ in range(count):
        c = (float(rng.uniform(*center)), float(rng.uniform(*center)))
        out.append(CircleSpec(c, float(rng.uniform(*radius)), float(rng.uniform(*foreground)), bg))
    return out, bg


def generate_dataset(count: int, width: int = 50, height: int = 50, seed: int = 0,
                     circles_per_image=(1, 3), **circle_kw) -> SyntheticSet:
    """``count`` images of random circles on a flat background, with ground-truth labels.

    ``circles_per_image`` is an inclusive ``(low, high)`` range; ``(0, 0)``
    yields constant background images.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if width < 1 or height < 1:
        raise InvalidDims(f"invalid image size {width}x{height}")
    lo, hi = circles_per_image
    rng = np.random.default_rng(seed)
    images, masks, specs = [], [], []
    for _ in range(count):
        n = int(rng.integers(lo, hi + 1))
        circles, bg = random_circles(rng, n, **circle_kw)
        img, lab = rasterize(circles, bg, width, height)
        images.append(img)
        masks.append(lab)
        specs.append(circles)
    return SyntheticSet(images, masks, specs)


@contextmanager
def atomic_write(path, mode="wb"):
    """Write to a temporary file next to ``path`` and rename it into place on success."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode, **({} if "b" in mode else {"newline": ""})) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- PGM ---------------------------------------------------------------------------

def _header_tokens(data: bytes, count: int):
    """First ``count`` whitespace-separated header tokens (comments skipped) and the offset after them."""
    tokens = []
    i = 0
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i >= n:
            raise MalformedFile("unexpected end of header", i)
        if data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < n and not data[i:i + 1].isspace() and data[i:i + 1] != b"#":
            i += 1
        tokens.append((data[start:i], start))
    return tokens, i


def decode_pgm(data: bytes) -> GrayImage:
    tokens, pos = _header_tokens(data, 4)
    magic, _ = tokens[0]
    if magic != b"P5":
        raise UnsupportedFormat(f"only binary PGM (P5) is supported, got {magic[:8]!r}")
    vals = []
    for tok, off in tokens[1:]:
        if not tok.isdigit():
            raise MalformedFile(f"expected a positive integer, got {tok[:16]!r}", off)
        vals.append(int(tok))
    width, height, maxval = vals
    if width < 1 or height < 1:
        raise MalformedFile("image dimensions must be positive", tokens[1][1])
    if not 1 <= maxval <= 65535:
        raise MalformedFile(f"maxval {maxval} outside 1..65535", tokens[3][1])
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise MalformedFile("missing whitespace after maxval", pos)
    pos += 1
    depth = 1 if maxval < 256 else 2
    expected = width * height * depth
    payload = data[pos:pos + expected]
    if len(payload) != expected:
        raise MalformedFile(f"truncated pixel data: expected {expected} bytes, got {len(payload)}", pos)
    dtype = np.uint8 if depth == 1 else np.dtype(">u2")
    raw = np.frombuffer(payload, dtype=dtype).reshape(height, width).astype(float)
    if raw.max(initial=0) > maxval:
        raise MalformedFile("pixel value exceeds maxval", pos)
    return GrayImage(raw / maxval)


def encode_pgm(img: GrayImage, maxval: int = 65535) -> bytes:
    if maxval not in (255, 65535):
        raise UnsupportedFormat("maxval must be 255 or 65535")
    q = np.rint(np.clip(img.pixels, 0.0, 1.0) * maxval)
    dtype = np.uint8 if maxval == 255 else np.dtype(">u2")
    header = f"P5\n{img.width} {img.height}\n{maxval}\n".encode("ascii")
    return header + q.astype(dtype).tobytes()


def read_image(path) -> GrayImage:
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def write_image(img: GrayImage, path, maxval: int = 65535):
    with atomic_write(path) as fh:
        fh.write(encode_pgm(img, maxval))


def labels_to_image(labels: np.ndarray, n_labels: int) -> GrayImage:
    """Spread label indices evenly over [0, 1] for viewing."""
    return GrayImage(labels / max(n_labels - 1, 1))


def boundary_overlay(img: GrayImage, labels: np.ndarray) -> GrayImage:
    """The image with pixels on a label change painted white (or black on bright pixels)."""
    edge = np.zeros(labels.shape, dtype=bool)
    dv = labels[1:, :] != labels[:-1, :]
    dh = labels[:, 1:] != labels[:, :-1]
    edge[1:, :] |= dv
    edge[:, 1:] |= dh
    out = img.pixels.copy()
    out[edge] = np.where(out[edge] > 0.5, 0.0, 1.0)
    return GrayImage(out)


# --- checkpoints -------------------------------------------------------------------

def model_to_dict(model: MultiphaseModel, optimizer_state=None) -> dict:
    d = {
        "format_version": CHECKPOINT_VERSION,
        "m": model.m,
        "n1": model.n1,
        "epsilon": model.epsilon,
        "levelsets": [{"a": p.a.tolist(), "W": p.W.tolist(), "b": p.b.tolist()}
                      for p in model.levelsets],
        "constants": {pattern_key(p): float(c) for p, c in zip(model.patterns, model.constants)},
    }
    if optimizer_state is not None:
        d["optimizer"] = optimizer_state
    return d


def _field(d: dict, name: str):
    if name not in d:
        raise SchemaError(name)
    return d[name]


def model_from_dict(d: dict) -> MultiphaseModel:
    version = _field(d, "format_version")
    if version != CHECKPOINT_VERSION:
        raise VersionMismatch(f"checkpoint version {version}, expected {CHECKPOINT_VERSION}")
    m = int(_field(d, "m"))
    n1 = int(_field(d, "n1"))
    eps = float(_field(d, "epsilon"))
    layers = []
    for i, ls in enumerate(_field(d, "levelsets")):
        p = LayerParams(_field(ls, "a"), _field(ls, "W"), _field(ls, "b"))
        if p.n1 != n1:
            raise SchemaError(f"levelsets[{i}].a")
        layers.append(p)
    if len(layers) != m:
        raise SchemaError("levelsets")
    consts = np.zeros(2 ** m)
    raw = _field(d, "constants")
    for key, val in raw.items():
        pattern = parse_pattern_key(key)
        if len(pattern) != m:
            raise SchemaError(f"constants[{key}]")
        consts[pattern_index(pattern)] = float(val)
    if len(raw) != 2 ** m:
        raise SchemaError("constants")
    return MultiphaseModel(layers, consts, eps)


def save_checkpoint(model: MultiphaseModel, path, optimizer_state=None):
    # json writes floats with repr, the shortest string that round-trips
    text = json.dumps(model_to_dict(model, optimizer_state), indent=1, allow_nan=False)
    with atomic_write(path, "w") as fh:
        fh.write(text + "\n")


def load_checkpoint(path) -> MultiphaseModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def load_optimizer_state(path):
    with open(path) as fh:
        return json.load(fh).get("optimizer")


# --- metrics -----------------------------------------------------------------------

def dice(mask_a, mask_b, label=True) -> float:
    """``2|A n B| / (|A| + |B|)`` for the pixels equal to ``label``; 1 when both are empty."""
    a = np.asarray(mask_a)
    b = np.asarray(mask_b)
    if a.shape != b.shape:
        raise DimMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    A = a == label
    B = b == label
    total = np.count_nonzero(A) + np.count_nonzero(B)
    if total == 0:
        return 1.0
    return 2.0 * np.count_nonzero(A & B) / total
