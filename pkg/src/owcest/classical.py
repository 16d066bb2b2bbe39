"""Pilot-based LS and linear MMSE channel estimators plus baselines.

The LS estimate divides received pilots by transmitted pilots and averages
over the pilot symbols of the slot (the channel is constant per slot). The
MMSE estimator filters that LS vector with ensemble correlation matrices
estimated from a channel corpus. Two baselines are provided: full-band
linear interpolation of the LS pilots, and a single flat gain for receivers
that equalize with one scalar.
"""

from dataclasses import dataclass

import numpy as np

from .channel import frequency_responses
from .modem import pilot_observations


@dataclass(frozen=True)
class CorrelationSet:
    """Ensemble second-order statistics of the channel at/about pilot tones."""

    r_hhp: np.ndarray  # (n_f, n_p) cross-correlation E[H H_p^H]
    r_hphp: np.ndarray  # (n_p, n_p) autocorrelation E[H_p H_p^H]
    sample_count: int

    def __post_init__(self):
        r_hhp = np.asarray(self.r_hhp, dtype=complex)
        r_hphp = np.asarray(self.r_hphp, dtype=complex)
        if r_hphp.shape[0] != r_hphp.shape[1] or r_hhp.shape[1] != r_hphp.shape[0]:
            raise ValueError("correlation matrix shapes are inconsistent")
        object.__setattr__(self, "r_hhp", r_hhp)
        object.__setattr__(self, "r_hphp", r_hphp)


def ls_estimate(grid, pattern, tx_pilots=None):
    """Pilot-averaged LS channel estimate at the pilot tones.

    Hadamard division per pilot symbol, then the mean across the pilot
    symbols; averaging divides the effective noise variance by their count.
    """
    if tx_pilots is not None:
        tx = np.broadcast_to(
            np.asarray(tx_pilots, dtype=complex), pattern.tone_indices.shape
        )
        if (tx == 0).any():
            raise ValueError("transmitted pilot values must be nonzero")
        cols = [s - 1 for s in pattern.symbol_indices]
        obs = np.asarray(grid)[np.ix_(pattern.tone_indices, cols)] / tx[:, None]
    else:
        obs = pilot_observations(grid, pattern)
    return obs.mean(axis=1)


def estimate_correlations(realizations, pattern, n_f):
    """Sample correlation matrices over a corpus of channel realizations."""
    if len(realizations) == 0:
        raise ValueError("correlation corpus is empty")
    h = frequency_responses(realizations, n_f)
    hp = h[:, pattern.tone_indices]
    n = h.shape[0]
    r_hhp = h.T @ hp.conj() / n
    r_hphp = hp.T @ hp.conj() / n
    r_hphp = (r_hphp + r_hphp.conj().T) / 2.0
    return CorrelationSet(r_hhp=r_hhp, r_hphp=r_hphp, sample_count=n)


def mmse_estimate(h_ls, corr, noise_var):
    """Wiener-filtered full-band estimate from the pilot LS vector.

    Solves (R_HpHp + noise_var I) z = h_ls and returns R_HHp z; noise_var is
    the effective per-pilot variance after pilot-symbol averaging.
    """
    if noise_var < 0:
        raise ValueError("noise_var must be nonnegative")
    h_ls = np.asarray(h_ls, dtype=complex)
    n_p = corr.r_hphp.shape[0]
    if h_ls.shape != (n_p,):
        raise ValueError(f"h_ls must have length {n_p}")
    a = corr.r_hphp + noise_var * np.eye(n_p)
    z = np.linalg.solve(a, h_ls)
    return corr.r_hhp @ z


def ls_interpolate(h_ls, pattern, n_f):
    """Full-band baseline: linear interpolation of the LS pilots.

    Interpolates across the first half band (nearest-value extrapolation at
    the edges, covering the DC and Nyquist rows) and fills the second half by
    Hermitian mirroring.
    """
    h_ls = np.asarray(h_ls, dtype=complex)
    tones = pattern.tone_indices
    if tones.size < 2:
        raise ValueError("need at least two pilots to interpolate")
    half = n_f // 2
    head = np.arange(half + 1)
    interp = np.interp(head, tones, h_ls.real) + 1j * np.interp(
        head, tones, h_ls.imag
    )
    out = np.empty(n_f, dtype=complex)
    out[: half + 1] = interp
    out[half + 1 :] = np.conj(interp[1:half][::-1])
    return out


def direct_detection_gain(grid, pattern):
    """Single flat complex gain: the mean of all pilot LS observations."""
    return complex(pilot_observations(grid, pattern).mean())


def effective_pilot_noise_var(noise_std, cfg, pattern):
    """Variance of the averaged LS estimate per pilot tone.

    White real time-domain noise of std sigma has per-bin FFT variance
    n_f sigma^2; dividing by the pilot amplitude and averaging over the
    pilot symbols scales it by 1/(|X_p|^2 n_sym).
    """
    p2 = float(np.mean(np.abs(pattern.pilot_value) ** 2))
    return cfg.n_f * noise_std**2 / (p2 * len(pattern.symbol_indices))
