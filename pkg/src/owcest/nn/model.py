"""Compact convolutional channel estimator.

Maps the noisy pilot LS observation (33 tones x 4 pilot symbols, complex) to
a full-band estimate (324 subcarriers): split into two real planes, scale by
norm_scale, bilinear-resize the tone axis to the full band, run three
same-padded 3x3 convolutions (2 -> 32 -> 30 -> 2 channels, rectified hidden
layers, linear output), average over the pilot-symbol axis, rescale back and
reassemble the complex estimate. The default stack carries 9,820 parameters.
"""

from dataclasses import dataclass

import numpy as np

from ..rng import child_rng
from . import layers

DEFAULT_WIDTHS = (2, 32, 30, 2)
DEFAULT_IN_SHAPE = (33, 4)
DEFAULT_OUT_LEN = 324


@dataclass
class ModelWeights:
    """Named tensors plus the input/target normalization scale."""

    tensors: dict
    norm_scale: float
    arch_tag: str = ""

    def __post_init__(self):
        if self.norm_scale <= 0:
            raise ValueError("norm_scale must be positive")
        if not self.arch_tag:
            self.arch_tag = derive_arch_tag(self.tensors)

    def copy(self):
        return ModelWeights(
            tensors={k: v.copy() for k, v in self.tensors.items()},
            norm_scale=self.norm_scale,
            arch_tag=self.arch_tag,
        )


def derive_arch_tag(tensors):
    """Architecture fingerprint from the convolution kernel shapes."""
    widths = []
    i = 1
    while f"conv{i}_w" in tensors:
        k = tensors[f"conv{i}_w"]
        if not widths:
            widths.append(k.shape[2])
        widths.append(k.shape[3])
        i += 1
    return "conv3x3:" + "-".join(str(w) for w in widths)


def init_weights(widths=DEFAULT_WIDTHS, seed=0, norm_scale=1e4, dtype=np.float32):
    """Seeded uniform fan-in initialization; biases start at zero."""
    rng = child_rng(seed, 0)
    tensors = {}
    for i, (c_in, c_out) in enumerate(zip(widths[:-1], widths[1:]), start=1):
        bound = 1.0 / np.sqrt(9.0 * c_in)
        tensors[f"conv{i}_w"] = rng.uniform(
            -bound, bound, size=(3, 3, c_in, c_out)
        ).astype(dtype)
        tensors[f"conv{i}_b"] = np.zeros(c_out, dtype=dtype)
    return ModelWeights(tensors=tensors, norm_scale=float(norm_scale))


def param_count(w):
    return sum(int(t.size) for t in w.tensors.values())


def _n_convs(w):
    n = 0
    while f"conv{n + 1}_w" in w.tensors:
        n += 1
    return n


def pilot_planes(pilot_grids, norm_scale, dtype=np.float32):
    """Complex (B, H, W) pilot observations -> scaled real planes (B, H, W, 2)."""
    p = np.asarray(pilot_grids)
    if p.ndim == 2:
        p = p[None]
    x = np.empty(p.shape + (2,), dtype=dtype)
    x[..., 0] = p.real
    x[..., 1] = p.imag
    x *= float(norm_scale)
    return x


def prepare_input(w, pilot_grids, dtype=np.float32, out_len=DEFAULT_OUT_LEN):
    """Planes resized to the output tone axis (the fixed front end)."""
    x = pilot_planes(pilot_grids, w.norm_scale, dtype)
    y, _ = layers.resize_rows_forward(x, out_len)
    return y


def _forward_convs(w, x, keep_caches):
    n = _n_convs(w)
    caches = []
    for i in range(1, n + 1):
        x, cache = layers.conv3x3_forward(
            x, w.tensors[f"conv{i}_w"], w.tensors[f"conv{i}_b"]
        )
        if i < n:
            x, mask = layers.relu_forward(x)
        else:
            mask = None
        if keep_caches:
            caches.append((cache, mask))
    out, width = layers.mean_width_forward(x)
    return out, width, caches


def forward_planes(w, resized):
    """Normalized-scale output planes (B, out_len, 2) from resized input."""
    out, _, _ = _forward_convs(w, resized, keep_caches=False)
    return out


def forward(w, pilot_grids, chunk=256):
    """Full-band complex estimate(s) from pilot observation(s).

    Accepts one (33, 4) grid or a batch (B, 33, 4); returns (324,) or
    (B, 324) complex.
    """
    p = np.asarray(pilot_grids)
    single = p.ndim == 2
    if single:
        p = p[None]
    dtype = next(iter(w.tensors.values())).dtype
    outs = []
    for start in range(0, p.shape[0], chunk):
        resized = prepare_input(w, p[start : start + chunk], dtype)
        outs.append(forward_planes(w, resized))
    planes = np.concatenate(outs, axis=0).astype(np.float64)
    h = (planes[..., 0] + 1j * planes[..., 1]) / w.norm_scale
    return h[0] if single else h


def target_planes(true_h, norm_scale, dtype=np.float32):
    """Complex (B, n_f) targets -> scaled real planes (B, n_f, 2)."""
    t = np.asarray(true_h)
    x = np.empty(t.shape + (2,), dtype=dtype)
    x[..., 0] = t.real
    x[..., 1] = t.imag
    x *= float(norm_scale)
    return x


def loss_and_grads(w, resized_in, targets, l2=0.0):
    """Mean squared error over output planes plus L2, with exact gradients.

    ``resized_in`` is the precomputed front-end output (B, out_len, W, 2);
    ``targets`` are scaled real planes (B, out_len, 2). The mean runs over
    every output entry, so duplicating batch rows leaves the loss unchanged.
    Returns (loss, grads) with grads shaped like the weight tensors.
    """
    if resized_in.shape[0] == 0:
        raise ValueError("batch is empty")
    out, width, caches = _forward_convs(w, resized_in, keep_caches=True)
    diff = out - targets
    n_entries = diff.size
    loss = float(np.mean(diff**2))
    grads = {}
    if l2:
        for name, t in w.tensors.items():
            loss += l2 * float(np.sum(t.astype(np.float64) ** 2))
    d_out = (2.0 / n_entries) * diff
    dx = layers.mean_width_backward(width, d_out)
    n = _n_convs(w)
    for i in range(n, 0, -1):
        cache, mask = caches[i - 1]
        if mask is not None:
            dx = layers.relu_backward(mask, dx)
        dx, dw, db = layers.conv3x3_backward(cache, dx, need_input_grad=(i > 1))
        grads[f"conv{i}_w"] = dw
        grads[f"conv{i}_b"] = db
    if l2:
        for name, t in w.tensors.items():
            grads[name] = grads[name] + (2.0 * l2) * t
    return loss, grads
