"""AdamW with decoupled weight decay and the mini-batch segmentation loop."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergyBreakdown, energy_levelset
from .errors import ConfigInvalid, ShapeMismatch
from .gradients import ParamGradient, grad_energy
from .multiphase import GrayImage, MultiphaseModel, circle_model, random_model, region_means
from .networks import LayerParams

log = logging.getLogger(__name__)


@dataclass
class AdamW:
    """Bias-corrected adaptive moments with decoupled weight decay.

    One update is ``theta -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)``.
    Moments are kept per level-set network as flat ``[a, W, b]`` vectors.
    """

    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-3
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, params: list[LayerParams], grads: list[ParamGradient]) -> list[LayerParams]:
        if len(params) != len(grads):
            raise ShapeMismatch(f"{len(params)} parameter sets but {len(grads)} gradients")
        flats = [p.flat() for p in params]
        gflats = [g.flat() for g in grads]
        for x, g in zip(flats, gflats):
            if x.shape != g.shape:
                raise ShapeMismatch(f"parameter shape {x.shape} vs gradient shape {g.shape}")
        if not self.m:
            self.m = [np.zeros_like(x) for x in flats]
            self.v = [np.zeros_like(x) for x in flats]
        elif any(mk.shape != x.shape for mk, x in zip(self.m, flats)) or len(self.m) != len(flats):
            raise ShapeMismatch("optimizer moments do not match the parameters")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        out = []
        for k, (x, g) in enumerate(zip(flats, gflats)):
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            m_hat = self.m[k] / bc1
            v_hat = self.v[k] / bc2
            x = x - self.lr * (m_hat / (np.sqrt(v_hat) + self.eps) + self.weight_decay * x)
            out.append(LayerParams.from_flat(x, params[k].n1))
        return out

    def state_dict(self) -> dict:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
                "weight_decay": self.weight_decay, "t": self.t,
                "m": [x.tolist() for x in self.m], "v": [x.tolist() for x in self.v]}

    @classmethod
    def from_state_dict(cls, d: dict) -> AdamW:
        opt = cls(d["lr"], d["beta1"], d["beta2"], d["eps"], d["weight_decay"], d["t"])
        opt.m = [np.asarray(x, dtype=float) for x in d["m"]]
        opt.v = [np.asarray(x, dtype=float) for x in d["v"]]
        return opt


@dataclass
class RunConfig:
    """Settings for one segmentation run (and for prior training).

    ``length_unit`` selects how boundary length is measured: ``"pixel"``
    (edges of pixels) or ``"domain"`` (side of the unit square).
    ``init`` picks the starting parameters when none are supplied:
    ``"circles"`` fits random hidden layers to circle distance fields
    (see :func:`circle_model`), ``"normal"`` draws every entry from
    ``N(0, init_std**2)``.
    """

    m: int = 1
    n1: int = 64
    eps: float = 0.5
    mu: float = 0.5
    nu: float = 0.0
    batch_size: int = 1024
    iterations: int = 200
    tol: float = 1e-6
    seed: int = 0
    lr: float = 0.03
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-3
    weight_decay: float = 1e-3
    init: str = "circles"
    init_std: float = 0.01
    length_unit: str = "pixel"

    def validate(self):
        if self.batch_size < 1 or self.iterations < 1 or not self.tol > 0:
            raise ConfigInvalid("batch size, iterations and tolerance must be positive")
        if self.m < 1 or self.n1 < 1:
            raise ConfigInvalid("m and n1 must be positive")
        if not self.eps > 0:
            raise ConfigInvalid("eps must be positive")
        if self.init not in ("circles", "normal"):
            raise ConfigInvalid(f"unknown init scheme {self.init!r}")
        if not self.lr > 0 or not self.adam_eps > 0 or self.weight_decay < 0:
            raise ConfigInvalid("lr and adam_eps must be positive, weight_decay non-negative")
        if self.length_unit not in ("pixel", "domain"):
            raise ConfigInvalid(f"unknown length unit {self.length_unit!r}")

    def length_scale(self, f: GrayImage) -> float:
        return f.pixel_size if self.length_unit == "pixel" else 1.0

    def optimizer(self) -> AdamW:
        return AdamW(self.lr, self.beta1, self.beta2, self.adam_eps, self.weight_decay)


class BatchSampler:
    """Uniform batches without replacement inside reshuffled epochs."""

    def __init__(self, n: int, batch_size: int, rng: np.random.Generator):
        self.n = n
        self.batch_size = min(batch_size, n)
        self.rng = rng
        self._order = np.empty(0, dtype=int)
        self._pos = 0

    def next(self) -> np.ndarray:
        if self._pos + self.batch_size > self._order.size:
            self._order = self.rng.permutation(self.n)
            self._pos = 0
        out = self._order[self._pos:self._pos + self.batch_size]
        self._pos += self.batch_size
        return out


@dataclass
class SegmentationResult:
    model: MultiphaseModel
    trace: list[EnergyBreakdown]
    grad_norms: list[float]
    initial: EnergyBreakdown
    stopped_early: bool

    @property
    def iterations(self) -> int:
        return len(self.trace)


def initial_model(f: GrayImage, cfg: RunConfig, init=None) -> MultiphaseModel:
    rng = np.random.default_rng(cfg.seed)
    if init is None and cfg.init == "circles":
        model = circle_model(cfg.m, cfg.n1, rng, f.width, f.height, cfg.eps)
    elif init is None:
        model = random_model(cfg.m, cfg.n1, rng, cfg.init_std, cfg.eps)
    else:
        init = list(init)
        if len(init) != cfg.m or any(p.n1 != cfg.n1 for p in init):
            raise ShapeMismatch(f"initial parameters must be {cfg.m} networks of {cfg.n1} neurons")
        model = MultiphaseModel([p.copy() for p in init], epsilon=cfg.eps)
    model.constants = region_means(model, f)
    return model


def run_segmentation(f: GrayImage, cfg: RunConfig, init=None) -> SegmentationResult:
    """Alternate mini-batch AdamW steps on the network parameters with region-mean updates.

    Stops after ``cfg.iterations`` iterations or as soon as every per-network
    gradient norm falls below ``cfg.tol``. The trace holds the full-image
    energy after each iteration.
    """
    cfg.validate()
    model = initial_model(f, cfg, init)
    scale = cfg.length_scale(f)
    # batches draw from a stream independent of the initialization draws
    sampler = BatchSampler(f.size, cfg.batch_size, np.random.default_rng([cfg.seed, 1]))
    opt = cfg.optimizer()
    initial = energy_levelset(model, f, cfg.mu, cfg.nu, scale)
    trace, norms = [], []
    stopped = False
    for it in range(cfg.iterations):
        batch = sampler.next()
        grads = grad_energy(model, f, cfg.mu, cfg.nu, batch, scale)
        model.levelsets = opt.step(model.levelsets, grads)
        model.constants = region_means(model, f)
        trace.append(energy_levelset(model, f, cfg.mu, cfg.nu, scale))
        gmax = max(g.norm() for g in grads)
        norms.append(gmax)
        if gmax < cfg.tol:
            stopped = True
            log.info("gradient norm %.3g below tolerance at iteration %d", gmax, it + 1)
            break
    return SegmentationResult(model, trace, norms, initial, stopped)
