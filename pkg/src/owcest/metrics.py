"""Link-quality metrics."""

import numpy as np

from .validation import as_bit_array


def nmse(h_est, h_true):
    """Squared Frobenius error of the estimate normalized by the truth."""
    est = np.asarray(h_est)
    true = np.asarray(h_true)
    if est.shape != true.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {true.shape}")
    denom = np.sum(np.abs(true) ** 2)
    if denom == 0:
        raise ValueError("reference channel has zero norm")
    return float(np.sum(np.abs(est - true) ** 2) / denom)


def ber(bits_rx, bits_tx):
    """Bit error ratio: Hamming distance over length."""
    rx = as_bit_array(bits_rx, "bits_rx")
    tx = as_bit_array(bits_tx, "bits_tx")
    if rx.size != tx.size:
        raise ValueError(f"length mismatch: {rx.size} vs {tx.size}")
    if rx.size == 0:
        raise ValueError("empty bit vectors")
    return float(np.mean(rx != tx))
