"""DCO-OFDM slot construction, modulation and recovery.

A slot is an n_f x n_s complex grid with Hermitian-symmetric columns (so the
time signal is real), four pilot symbols carrying a comb of pilot tones on
the first half band, and 64-QAM data on the remaining symbols. Modulation
adds a cyclic prefix and a DC bias and clips negative samples; demodulation
removes the prefix, subtracts the per-symbol mean (which equals the received
bias exactly, because every used symbol sums to the unused DC bin) and
applies the forward FFT.
"""

from dataclasses import dataclass

import numpy as np

from .channel import frequency_response, impulse_taps
from .rng import child_rng
from .validation import as_bit_array

_QAM_SCALE = np.sqrt(42.0)  # unit average energy for square 64-QAM

# Per-axis Gray mapping: 3-bit pattern p -> amplitude level, built so that
# neighbouring levels differ in exactly one bit and pattern 000 -> +7.
_LEVEL_FOR_PATTERN = np.zeros(8, dtype=float)
for _n in range(8):
    _LEVEL_FOR_PATTERN[_n ^ (_n >> 1)] = 7 - 2 * _n
del _n


@dataclass(frozen=True)
class ModemConfig:
    """Slot framing parameters."""

    n_f: int = 324
    n_s: int = 14
    l_cp: int = 7
    l_s: int = 5
    pilot_symbol_indices: tuple = (3, 6, 9, 12)  # 1-based symbol positions
    bias_sigma: float = 3.0
    qam_order: int = 64

    def __post_init__(self):
        if self.n_f < 4 or self.n_f % 2:
            raise ValueError("n_f must be even and at least 4")
        if not 0 <= self.l_cp < self.n_f:
            raise ValueError("l_cp must lie in [0, n_f)")
        if self.l_s < 1:
            raise ValueError("l_s must be at least 1")
        if self.qam_order != 64:
            raise ValueError("only 64-QAM is supported")
        for s in self.pilot_symbol_indices:
            if not 1 <= s <= self.n_s:
                raise ValueError(f"pilot symbol index {s} outside [1, {self.n_s}]")

    @property
    def half(self):
        return self.n_f // 2

    @property
    def data_tone_indices(self):
        """First-half tone indices that carry QAM on data symbols."""
        return np.arange(1, self.half)

    @property
    def data_symbol_indices(self):
        """1-based indices of the data (non-pilot) OFDM symbols."""
        pilots = set(self.pilot_symbol_indices)
        return tuple(s for s in range(1, self.n_s + 1) if s not in pilots)

    @property
    def bits_per_slot(self):
        return 6 * self.data_tone_indices.size * len(self.data_symbol_indices)

    @property
    def samples_per_slot(self):
        return self.n_s * (self.n_f + self.l_cp)


@dataclass(frozen=True)
class PilotPattern:
    """Pilot tone comb on the first half band plus the pilot symbol set."""

    tone_indices: np.ndarray
    symbol_indices: tuple
    pilot_value: np.ndarray

    def __post_init__(self):
        tones = np.asarray(self.tone_indices, dtype=int)
        if tones.ndim != 1 or tones.size < 1:
            raise ValueError("tone_indices must be a nonempty vector")
        if (np.diff(tones) <= 0).any() or tones[0] < 1:
            raise ValueError("tone_indices must be strictly increasing and >= 1")
        values = np.broadcast_to(
            np.asarray(self.pilot_value, dtype=complex), tones.shape
        ).copy()
        if (values == 0).any():
            raise ValueError("pilot values must be nonzero")
        object.__setattr__(self, "tone_indices", tones)
        object.__setattr__(self, "pilot_value", values)
        object.__setattr__(self, "symbol_indices", tuple(self.symbol_indices))

    @property
    def n_pilots(self):
        return self.tone_indices.size


def default_pattern(cfg):
    """Comb pattern from the config: tones 1, 1+l_s, ... within the first half.

    Pilot amplitude is 1, matching the unit average energy of the data tones.
    """
    tones = np.arange(1, cfg.half, cfg.l_s)
    if tones[-1] > cfg.half - 1:
        tones = tones[tones <= cfg.half - 1]
    return PilotPattern(
        tone_indices=tones,
        symbol_indices=cfg.pilot_symbol_indices,
        pilot_value=np.ones(tones.size, dtype=complex),
    )


def map_qam64(bits):
    """Gray-mapped square 64-QAM with unit average energy.

    Bits are consumed six per symbol: the first three select the in-phase
    level, the last three the quadrature level; the all-zeros word maps to
    the (+7+7j)/sqrt(42) corner.
    """
    b = as_bit_array(bits)
    if b.size % 6:
        raise ValueError(f"bit count must be divisible by 6, got {b.size}")
    b = b.reshape(-1, 6).astype(int)
    pat_i = (b[:, 0] << 2) | (b[:, 1] << 1) | b[:, 2]
    pat_q = (b[:, 3] << 2) | (b[:, 4] << 1) | b[:, 5]
    return (_LEVEL_FOR_PATTERN[pat_i] + 1j * _LEVEL_FOR_PATTERN[pat_q]) / _QAM_SCALE


def _nearest_pattern(axis_values):
    """Per-axis hard decision; exact midpoints resolve to the lower pattern."""
    d = np.abs(axis_values[:, None] * _QAM_SCALE - _LEVEL_FOR_PATTERN[None, :])
    return np.argmin(d, axis=1)  # first minimum = smallest pattern on ties


def demap_qam64(symbols):
    """Hard-decision Gray demapping (inverse of map_qam64)."""
    s = np.asarray(symbols, dtype=complex).ravel()
    pat_i = _nearest_pattern(s.real)
    pat_q = _nearest_pattern(s.imag)
    bits = np.empty((s.size, 6), dtype=np.uint8)
    bits[:, 0] = (pat_i >> 2) & 1
    bits[:, 1] = (pat_i >> 1) & 1
    bits[:, 2] = pat_i & 1
    bits[:, 3] = (pat_q >> 2) & 1
    bits[:, 4] = (pat_q >> 1) & 1
    bits[:, 5] = pat_q & 1
    return bits.ravel()


def assemble_slot(data_bits, pattern, cfg):
    """Fill one resource grid: pilots, QAM data, Hermitian mirror.

    Data bits are laid out symbol-major (each data OFDM symbol in time order,
    tones ascending). Pilot symbols carry the pilot comb and zeros elsewhere
    in the first half; DC and Nyquist tones stay zero everywhere.
    """
    bits = as_bit_array(data_bits, "data_bits")
    if bits.size != cfg.bits_per_slot:
        raise ValueError(
            f"expected {cfg.bits_per_slot} data bits per slot, got {bits.size}"
        )
    grid = np.zeros((cfg.n_f, cfg.n_s), dtype=complex)
    tones = cfg.data_tone_indices
    syms = map_qam64(bits).reshape(len(cfg.data_symbol_indices), tones.size)
    for row, s in zip(syms, cfg.data_symbol_indices):
        grid[tones, s - 1] = row
    for s in pattern.symbol_indices:
        grid[pattern.tone_indices, s - 1] = pattern.pilot_value
    grid[cfg.half + 1 :, :] = np.conj(grid[1 : cfg.half, :][::-1, :])
    return grid


def check_hermitian(grid, cfg, tol=1e-9):
    """Raise unless the grid has Hermitian-symmetric columns and zero DC/Nyquist."""
    scale = np.abs(grid).max() or 1.0
    mirror = np.conj(grid[1 : cfg.half, :][::-1, :])
    if (
        np.abs(grid[cfg.half + 1 :, :] - mirror).max() > tol * scale
        or np.abs(grid[0, :]).max() > tol * scale
        or np.abs(grid[cfg.half, :]).max() > tol * scale
    ):
        raise ValueError("grid is not Hermitian symmetric with zero DC/Nyquist")


def modulate(grid, cfg):
    """Hermitian grid -> real sample stream with CP, DC bias and clipping.

    The bias is bias_sigma times the AC standard deviation of the whole slot;
    negative samples after biasing are clipped to zero (the intensity channel
    cannot go negative).
    """
    grid = np.asarray(grid, dtype=complex)
    if grid.shape != (cfg.n_f, cfg.n_s):
        raise ValueError(f"grid shape {grid.shape} != {(cfg.n_f, cfg.n_s)}")
    check_hermitian(grid, cfg)
    x = np.fft.ifft(grid, axis=0)
    norm = np.linalg.norm(x)
    if norm > 0 and np.abs(x.imag).max() > 1e-10 * norm:
        raise ValueError("time signal is not real; grid symmetry is broken")
    x = x.real
    framed = np.concatenate([x[cfg.n_f - cfg.l_cp :, :], x], axis=0)
    ac = framed.T.ravel()
    bias = cfg.bias_sigma * ac.std()
    return np.maximum(ac + bias, 0.0)


def apply_channel(signal, ch, noise_std, seed, cfg):
    """Convolve with the sampled channel and add white real Gaussian noise.

    The channel is represented by the first l_cp + 1 taps of its sampled
    impulse response (delays must fit the cyclic prefix). Deterministic in
    the seed.
    """
    taps = impulse_taps(ch, cfg.n_f, cfg.l_cp + 1)
    y = np.convolve(np.asarray(signal), taps)[: len(signal)]
    if noise_std > 0:
        rng = seed if isinstance(seed, np.random.Generator) else child_rng(seed)
        y = y + rng.normal(0.0, noise_std, y.shape[0])
    return y


def noise_std_for_snr(grid, ch, snr_db, cfg):
    """Time-domain noise std that hits the target electrical SNR.

    SNR is defined at the FFT output over used (nonzero) grid entries:
    E|H o X|^2 / E|W_k|^2, with E|W_k|^2 = n_f * sigma^2 for white real
    time-domain noise of standard deviation sigma.
    """
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    grid = np.asarray(grid, dtype=complex)
    used = grid != 0
    if not used.any():
        raise ValueError("grid carries no energy")
    h = frequency_response(ch, cfg.n_f)
    sig = np.mean(np.abs(h[:, None] * grid)[used] ** 2)
    if sig == 0:
        raise ValueError("channel response is zero on all used tones")
    noise_var = sig / (cfg.n_f * 10.0 ** (snr_db / 10.0))
    return float(np.sqrt(noise_var))


def demodulate(signal, cfg):
    """Sample stream -> resource grid (CP removal, mean removal, FFT).

    The subtracted per-symbol mean equals the received DC bias exactly in the
    noiseless case: each CP-stripped window sums to the DC bin, which the
    framing keeps at zero.
    """
    sig = np.asarray(signal)
    if sig.shape[0] != cfg.samples_per_slot:
        raise ValueError(
            f"expected {cfg.samples_per_slot} samples, got {sig.shape[0]}"
        )
    windows = sig.reshape(cfg.n_s, cfg.n_f + cfg.l_cp)[:, cfg.l_cp :]
    windows = windows - windows.mean(axis=1, keepdims=True)
    return np.fft.fft(windows, axis=1).T


def pilot_observations(grid, pattern):
    """Per-pilot-symbol LS observations Y_p / X_p, shape (n_pilots, n_pilot_syms)."""
    cols = [s - 1 for s in pattern.symbol_indices]
    y = np.asarray(grid)[np.ix_(pattern.tone_indices, cols)]
    return y / pattern.pilot_value[:, None]


def equalize_and_decode(grid, h_est, pattern, cfg):
    """Single-tap equalization on the data tones followed by hard demapping."""
    h_est = np.asarray(h_est, dtype=complex)
    if h_est.ndim != 1 or h_est.shape[0] != cfg.n_f:
        raise ValueError(f"h_est must have length {cfg.n_f}")
    tones = cfg.data_tone_indices
    h = h_est[tones]
    if (h == 0).any():
        raise ValueError("h_est is zero on a data tone")
    cols = [s - 1 for s in cfg.data_symbol_indices]
    eq = np.asarray(grid)[np.ix_(tones, cols)] / h[:, None]
    return demap_qam64(eq.T.ravel())
