"""Adam optimizer and the training loop for the compact estimators."""

from dataclasses import dataclass, field

import numpy as np

from ..rng import child_rng
from . import model as nn_model


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer schedule and regularization settings."""

    lr0: float = 2e-4
    lr_decay: float = 0.3
    decay_every: int = 10
    epochs: int = 100
    batch_size: int = 64
    l2: float = 1e-9
    seed: int = 0
    val_fraction: float = 0.05
    norm_scale: float = None  # None: set from the training targets

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be at least 1")
        if not (self.lr0 > 0 and 0 < self.lr_decay <= 1 and self.decay_every >= 1):
            raise ValueError("learning-rate schedule values must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be nonnegative")
        if not 0 < self.val_fraction < 1:
            raise ValueError("val_fraction must lie in (0, 1)")
        if self.norm_scale is not None and self.norm_scale <= 0:
            raise ValueError("norm_scale must be positive when given")


def learning_rate(cfg, epoch):
    """Step schedule: lr0 scaled by lr_decay every decay_every epochs."""
    return cfg.lr0 * cfg.lr_decay ** (epoch // cfg.decay_every)


@dataclass
class AdamState:
    """First/second-moment accumulators, one per weight tensor."""

    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def adam_step(state, w, grads, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update; mutates and returns (state, w)."""
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for name, g in grads.items():
        t = w.tensors[name]
        g = g.astype(t.dtype, copy=False)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(t)
            state.v[name] = np.zeros_like(t)
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        t -= (t.dtype.type(lr) / c1) * m / (np.sqrt(v / c2) + eps)
    return state, w


def _auto_norm_scale(targets):
    """Scale making the target planes roughly unit RMS."""
    power = float(np.mean(np.abs(targets) ** 2)) / 2.0
    if power == 0:
        raise ValueError("targets carry no energy")
    return 1.0 / np.sqrt(power)


def _epoch_loss(w, resized, targets, batch_size, l2):
    total = 0.0
    n = 0
    for start in range(0, resized.shape[0], batch_size):
        x = resized[start : start + batch_size]
        t = targets[start : start + batch_size]
        out = nn_model.forward_planes(w, x)
        total += float(np.sum((out - t) ** 2))
        n += out.size
    loss = total / n
    if l2:
        loss += l2 * sum(float(np.sum(t.astype(np.float64) ** 2)) for t in w.tensors.values())
    return loss


def train(pilots, targets, cfg, widths=nn_model.DEFAULT_WIDTHS, dtype=np.float32):
    """Train a compact estimator on (pilot observation, true channel) pairs.

    ``pilots``: complex (N, 33, 4) LS observations; ``targets``: complex
    (N, n_f) true responses. The set is shuffled once (seeded) and split
    into train/validation by cfg.val_fraction; every epoch reshuffles the
    training part. Returns (weights, history) with per-epoch train and
    validation losses; bitwise reproducible for a fixed seed.
    """
    pilots = np.asarray(pilots)
    targets = np.asarray(targets)
    n = pilots.shape[0]
    if n == 0:
        raise ValueError("dataset is empty")
    if targets.shape[0] != n:
        raise ValueError("pilots and targets disagree on sample count")

    perm = child_rng(cfg.seed, 1).permutation(n)
    n_train = max(int(np.floor(n * (1.0 - cfg.val_fraction))), 1)
    train_idx, val_idx = perm[:n_train], perm[n_train:]

    norm_scale = cfg.norm_scale or _auto_norm_scale(targets[train_idx])
    w = nn_model.init_weights(widths=widths, seed=cfg.seed, norm_scale=norm_scale, dtype=dtype)

    out_len = targets.shape[1]
    resized = nn_model.prepare_input(w, pilots, dtype=dtype, out_len=out_len)
    t_planes = nn_model.target_planes(targets, norm_scale, dtype=dtype)

    state = AdamState()
    history = {"train_loss": [], "val_loss": [], "lr": []}
    for epoch in range(cfg.epochs):
        lr = learning_rate(cfg, epoch)
        order = child_rng(cfg.seed, 2, epoch).permutation(n_train)
        epoch_losses = []
        for start in range(0, n_train, cfg.batch_size):
            rows = train_idx[order[start : start + cfg.batch_size]]
            loss, grads = nn_model.loss_and_grads(
                w, resized[rows], t_planes[rows], l2=cfg.l2
            )
            adam_step(state, w, grads, lr)
            epoch_losses.append(loss)
        history["train_loss"].append(float(np.mean(epoch_losses)))
        if val_idx.size:
            history["val_loss"].append(
                _epoch_loss(w, resized[val_idx], t_planes[val_idx], cfg.batch_size, cfg.l2)
            )
        else:
            history["val_loss"].append(float("nan"))
        history["lr"].append(lr)
    return w, history
