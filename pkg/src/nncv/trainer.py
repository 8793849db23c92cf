"""Training initialization priors over a set of images, with validation-based early stopping."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .dataio import atomic_write
from .energy import EnergyBreakdown, energy_levelset
from .errors import EmptyDataset, ShapeMismatch
from .gradients import grad_energy
from .multiphase import GrayImage, MultiphaseModel, region_means
from .networks import LayerParams
from .optimizer import RunConfig, initial_model

log = logging.getLogger(__name__)


@dataclass
class Dataset:
    """Images with a seeded train/validation split.

    The validation part holds ``round((1 - train_fraction) * n)`` images,
    but at least one whenever there are two or more images.
    """

    images: list[GrayImage]
    train_fraction: float = 0.9
    seed: int = 0
    train_idx: np.ndarray = field(init=False, repr=False)
    val_idx: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.images = list(self.images)
        if not self.images:
            raise EmptyDataset("dataset has no images")
        if not 0.0 < self.train_fraction <= 1.0:
            raise ValueError("train_fraction must lie in (0, 1]")
        n = len(self.images)
        n_val = int(round((1.0 - self.train_fraction) * n))
        if n >= 2:
            n_val = min(max(n_val, 1), n - 1)
        else:
            n_val = 0
        order = np.random.default_rng(self.seed).permutation(n)
        self.val_idx = np.sort(order[:n_val])
        self.train_idx = np.sort(order[n_val:])

    @property
    def train(self) -> list[GrayImage]:
        return [self.images[i] for i in self.train_idx]

    @property
    def validation(self) -> list[GrayImage]:
        return [self.images[i] for i in self.val_idx]


@dataclass
class TrainReport:
    train_loss: list[float]
    val_loss: list[float]
    initial_val_loss: float
    best_epoch: int
    stop_reason: str
    best_params: list[LayerParams]

    @property
    def epochs(self) -> int:
        return len(self.val_loss)

    @property
    def best_val_loss(self) -> float:
        return self.initial_val_loss if self.best_epoch == 0 else self.val_loss[self.best_epoch - 1]

    def write_csv(self, path):
        """Columns ``epoch, train_loss, val_loss``; epoch 0 is the untrained state."""
        with atomic_write(path, "w") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_loss", "val_loss"])
            w.writerow([0, "", repr(self.initial_val_loss)])
            for e, (t, v) in enumerate(zip(self.train_loss, self.val_loss), start=1):
                w.writerow([e, repr(t), repr(v)])


def _check_params(params, cfg: RunConfig):
    params = list(params)
    if len(params) != cfg.m or any(p.n1 != cfg.n1 for p in params):
        raise ShapeMismatch(f"expected {cfg.m} networks of {cfg.n1} neurons")
    return params


def evaluate_prior(params, image: GrayImage, cfg: RunConfig) -> tuple[MultiphaseModel, EnergyBreakdown]:
    """Model with region means fitted to ``image`` and its smoothed energy; ``params`` are not touched."""
    params = _check_params(params, cfg)
    model = MultiphaseModel([p.copy() for p in params], epsilon=cfg.eps)
    model.constants = region_means(model, image)
    return model, energy_levelset(model, image, cfg.mu, cfg.nu, cfg.length_scale(image))


def validation_loss(params, images, cfg: RunConfig) -> float:
    return float(np.mean([evaluate_prior(params, img, cfg)[1].total for img in images]))


def train_prior(data: Dataset, cfg: RunConfig, epochs: int, patience: int = 10,
                init=None, min_delta: float = 0.0) -> tuple[list[LayerParams], TrainReport]:
    """One optimizer step per training image per epoch, on the full-image energy.

    Training images are visited in a per-epoch shuffle keyed by ``cfg.seed``.
    After each epoch the mean energy over the validation images is recorded;
    training stops once it has failed to improve on the best value by more
    than ``min_delta`` for ``patience`` epochs.
    A dataset without validation images is validated on its training images.
    """
    if epochs < 1 or patience < 1:
        raise ValueError("epochs and patience must be at least 1")
    if min_delta < 0:
        raise ValueError("min_delta must be non-negative")
    cfg.validate()
    train = data.train
    if not train:
        raise EmptyDataset("no training images")
    val = data.validation or train

    model = initial_model(train[0], cfg, init)
    params = [p.copy() for p in model.levelsets]
    opt = cfg.optimizer()
    rng = np.random.default_rng([cfg.seed, 2])

    initial = validation_loss(params, val, cfg)
    best, best_epoch, best_params = initial, 0, [p.copy() for p in params]
    train_hist, val_hist = [], []
    wait = 0
    reason = "max-epochs"
    for epoch in range(1, epochs + 1):
        losses = []
        for i in rng.permutation(len(train)):
            img = train[i]
            model = MultiphaseModel(params, epsilon=cfg.eps)
            model.constants = region_means(model, img)
            scale = cfg.length_scale(img)
            losses.append(energy_levelset(model, img, cfg.mu, cfg.nu, scale).total)
            grads = grad_energy(model, img, cfg.mu, cfg.nu, None, scale)
            params = opt.step(params, grads)
        train_hist.append(float(np.mean(losses)))
        v = validation_loss(params, val, cfg)
        val_hist.append(v)
        log.info("epoch %d train %.6g val %.6g", epoch, train_hist[-1], v)
        if v < best - min_delta:
            wait = 0
        else:
            wait += 1
        if v < best:
            best, best_epoch, best_params = v, epoch, [p.copy() for p in params]
        if wait >= patience:
            reason = "patience"
            break
    report = TrainReport(train_hist, val_hist, initial, best_epoch, reason, best_params)
    return [p.copy() for p in best_params], report
