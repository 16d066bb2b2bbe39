"""Array layers with explicit forward and backward passes.

Activations use channels-last layout (batch, height, width, channels).
Convolutions are 3x3, stride 1, same padding, computed as im2col + GEMM;
the input gradient is the correlation of the output gradient with the
spatially flipped kernel, which reuses the same core. All layers preserve
the dtype of their inputs, so float64 can be used for gradient checking
while training runs in float32.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _im2col(x):
    """(B, H, W, C) -> column matrix (B*H*W, 9*C) for a padded 3x3 window.

    Column index is tap-major ((3u + v) * C + c), matching
    kernel.reshape(9 * C, C_out) for kernels stored as (3, 3, C, C_out).
    """
    b, h, w, c = x.shape
    pad = np.zeros((b, h + 2, w + 2, c), dtype=x.dtype)
    pad[:, 1:-1, 1:-1, :] = x
    windows = sliding_window_view(pad, (3, 3), axis=(1, 2))  # (B,H,W,C,3,3)
    cols = np.ascontiguousarray(windows.transpose(0, 1, 2, 4, 5, 3))
    return cols.reshape(b * h * w, 9 * c)


def _conv_core(x, kernel_mat, out_channels):
    """im2col + GEMM; returns (output (B,H,W,O), cols) with cols cached."""
    b, h, w, _ = x.shape
    cols = _im2col(x)
    y = cols @ kernel_mat
    return y.reshape(b, h, w, out_channels), cols


def conv3x3_forward(x, kernel, bias):
    """Same-padded 3x3 convolution. kernel (3,3,Cin,Cout), bias (Cout,)."""
    c_out = kernel.shape[3]
    y, cols = _conv_core(x, kernel.reshape(9 * kernel.shape[2], c_out), c_out)
    y += bias
    return y, (x.shape, cols, kernel)


def conv3x3_backward(cache, d_out, need_input_grad=True):
    """Gradients of a 3x3 convolution.

    Returns (d_input or None, d_kernel, d_bias). The input gradient is a
    convolution of d_out with the flipped, transposed kernel.
    """
    x_shape, cols, kernel = cache
    b, h, w, c_in = x_shape
    c_out = kernel.shape[3]
    dy = d_out.reshape(b * h * w, c_out)
    d_kernel = (cols.T @ dy).reshape(3, 3, c_in, c_out)
    d_bias = dy.sum(axis=0)
    d_input = None
    if need_input_grad:
        flipped = kernel[::-1, ::-1].transpose(0, 1, 3, 2)  # (3,3,Cout,Cin)
        d_input, _ = _conv_core(
            d_out, flipped.reshape(9 * c_out, c_in), c_in
        )
    return d_input, d_kernel, d_bias


def relu_forward(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(mask, d_out):
    return d_out * mask


_RESIZE_CACHE = {}


def resize_matrix(n_in, n_out, dtype=np.float64):
    """Linear interpolation matrix (n_out, n_in), endpoints aligned.

    Rows sum to one, so constant inputs are reproduced exactly (up to
    rounding in the row normalization).
    """
    key = (n_in, n_out, np.dtype(dtype).str)
    if key not in _RESIZE_CACHE:
        r = np.zeros((n_out, n_in), dtype=np.float64)
        if n_in == 1:
            r[:, 0] = 1.0
        else:
            pos = np.arange(n_out) * (n_in - 1) / (n_out - 1)
            i0 = np.minimum(pos.astype(int), n_in - 2)
            frac = pos - i0
            r[np.arange(n_out), i0] = 1.0 - frac
            r[np.arange(n_out), i0 + 1] += frac
        r /= r.sum(axis=1, keepdims=True)
        _RESIZE_CACHE[key] = r.astype(dtype)
    return _RESIZE_CACHE[key]


def resize_rows_forward(x, n_out):
    """Bilinear resize along the height axis: (B, H, W, C) -> (B, n_out, W, C)."""
    b, h, w, c = x.shape
    r = resize_matrix(h, n_out, x.dtype)
    y = np.matmul(r[None], x.reshape(b, h, w * c))
    return y.reshape(b, n_out, w, c), (h, n_out)


def resize_rows_backward(cache, d_out):
    h, n_out = cache
    b = d_out.shape[0]
    w, c = d_out.shape[2], d_out.shape[3]
    r = resize_matrix(h, n_out, d_out.dtype)
    dx = np.matmul(r.T[None], d_out.reshape(b, n_out, w * c))
    return dx.reshape(b, h, w, c)


def mean_width_forward(x):
    """Average over the width axis: (B, H, W, C) -> (B, H, C)."""
    return x.mean(axis=2), x.shape[2]


def mean_width_backward(width, d_out):
    return np.repeat(d_out[:, :, None, :], width, axis=2) / width
