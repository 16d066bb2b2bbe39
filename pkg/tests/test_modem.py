"""Modem: QAM mapping, slot framing, modulation chain, SNR calibration."""

import numpy as np
import pytest

from owcest.channel import ChannelRealization, frequency_response
from owcest.modem import (
    ModemConfig,
    assemble_slot,
    apply_channel,
    check_hermitian,
    default_pattern,
    demap_qam64,
    demodulate,
    equalize_and_decode,
    map_qam64,
    modulate,
    noise_std_for_snr,
    pilot_observations,
)
from owcest.rng import child_rng

QAM_SCALE = np.sqrt(42.0)


@pytest.fixture
def cfg():
    return ModemConfig()


@pytest.fixture
def pattern(cfg):
    return default_pattern(cfg)


def random_slot(cfg, pattern, seed):
    bits = child_rng(seed).integers(0, 2, cfg.bits_per_slot)
    return bits, assemble_slot(bits, pattern, cfg)


class TestQam64:
    def test_all_zero_word_is_positive_corner(self):
        sym = map_qam64(np.zeros(6, dtype=int))
        assert sym[0] == pytest.approx((7 + 7j) / QAM_SCALE, rel=1e-12)

    def test_unit_average_energy(self):
        bits = np.array(
            [[(w >> k) & 1 for k in range(5, -1, -1)] for w in range(64)]
        ).ravel()
        syms = map_qam64(bits)
        assert np.mean(np.abs(syms) ** 2) == pytest.approx(1.0, rel=1e-12)
        assert len(np.unique(np.round(syms * QAM_SCALE, 6))) == 64

    def test_exhaustive_roundtrip(self):
        bits = np.array(
            [[(w >> k) & 1 for k in range(5, -1, -1)] for w in range(64)]
        ).ravel()
        assert np.array_equal(demap_qam64(map_qam64(bits)), bits)

    def test_noise_below_half_min_distance_is_harmless(self):
        rng = np.random.default_rng(3)
        bits = rng.integers(0, 2, 6 * 500)
        syms = map_qam64(bits)
        # half the minimum distance is 1/sqrt(42) per axis
        bump = 0.49 * (2.0 / QAM_SCALE)
        noise = bump * np.exp(2j * np.pi * rng.random(syms.size))
        assert np.array_equal(demap_qam64(syms + noise), bits)

    def test_boundary_ties_break_to_lower_pattern(self):
        # midpoint between +1 and +3 on both axes: patterns 010 vs 011
        sym = np.array([(2.0 + 2.0j) / QAM_SCALE])
        assert demap_qam64(sym).tolist() == [0, 1, 0, 0, 1, 0]
        # midpoint between -1 and +1: patterns 110 vs 010 -> 010 wins
        sym = np.array([0.0 + 0.0j])
        assert demap_qam64(sym).tolist() == [0, 1, 0, 0, 1, 0]

    def test_bit_count_must_divide(self):
        with pytest.raises(ValueError):
            map_qam64(np.zeros(5, dtype=int))


class TestAssembleSlot:
    def test_bits_per_slot_is_9660(self, cfg):
        assert cfg.bits_per_slot == 9660

    def test_pilot_pattern_has_33_tones(self, pattern):
        assert pattern.n_pilots == 33
        assert pattern.tone_indices[0] == 1
        assert pattern.tone_indices[-1] == 161

    def test_grid_is_hermitian(self, cfg, pattern):
        _, grid = random_slot(cfg, pattern, 0)
        check_hermitian(grid, cfg)
        assert np.abs(grid[0]).max() == 0.0
        assert np.abs(grid[cfg.half]).max() == 0.0

    def test_pilot_symbol_has_exactly_33_first_half_entries(self, cfg, pattern):
        _, grid = random_slot(cfg, pattern, 1)
        col = grid[: cfg.half, pattern.symbol_indices[0] - 1]
        assert np.count_nonzero(col) == 33

    def test_wrong_bit_count_rejected(self, cfg, pattern):
        with pytest.raises(ValueError):
            assemble_slot(np.zeros(100, dtype=int), pattern, cfg)


class TestModulate:
    def test_output_length(self, cfg, pattern):
        _, grid = random_slot(cfg, pattern, 2)
        assert modulate(grid, cfg).shape == (14 * 331,)
        assert cfg.samples_per_slot == 4634

    def test_real_time_signal_over_random_slots(self, cfg, pattern):
        for seed in range(20):
            _, grid = random_slot(cfg, pattern, seed)
            x = np.fft.ifft(grid, axis=0)
            assert np.abs(x.imag).max() < 1e-10 * np.linalg.norm(x)

    def test_non_hermitian_grid_rejected(self, cfg, pattern):
        _, grid = random_slot(cfg, pattern, 3)
        grid[200, 0] += 0.5
        with pytest.raises(ValueError):
            modulate(grid, cfg)

    def test_clipping_rate_below_half_percent(self, pattern):
        cfg = ModemConfig(bias_sigma=3.0)
        clipped = total = 0
        for seed in range(100):
            _, grid = random_slot(cfg, pattern, seed)
            x = np.fft.ifft(grid, axis=0).real
            ac = np.concatenate([x[-cfg.l_cp :], x], axis=0).T.ravel()
            bias = cfg.bias_sigma * ac.std()
            clipped += int((ac + bias < 0).sum())
            total += ac.size
        assert clipped / total < 0.005

    def test_roundtrip_without_clipping(self, pattern):
        cfg = ModemConfig(bias_sigma=8.0)
        _, grid = random_slot(cfg, pattern, 4)
        x = np.fft.ifft(grid, axis=0).real
        ac = np.concatenate([x[-cfg.l_cp :], x], axis=0).T.ravel()
        assert ac.min() + cfg.bias_sigma * ac.std() > 0  # no clipping events
        out = demodulate(modulate(grid, cfg), cfg)
        assert np.abs(out - grid).max() < 1e-9 * np.abs(grid).max()


class TestChannelApplication:
    def test_flat_channel_scales_signal(self, cfg):
        ch = ChannelRealization(h_los=2.5e-6)
        sig = np.sin(np.arange(200) / 7.0)
        out = apply_channel(sig, ch, 0.0, 0, cfg)
        assert np.allclose(out, 2.5e-6 * sig, rtol=1e-12)

    def test_integer_delay_circular_equivalence(self, pattern):
        cfg = ModemConfig(bias_sigma=8.0)
        ch = ChannelRealization(h_los=2e-6, nlos_paths=((6e-7, 4.0),))
        _, grid = random_slot(cfg, pattern, 5)
        rx = apply_channel(modulate(grid, cfg), ch, 0.0, 0, cfg)
        got = demodulate(rx, cfg)
        want = frequency_response(ch, cfg.n_f)[:, None] * grid
        assert np.abs(got - want).max() < 1e-9 * np.abs(want).max()

    def test_deterministic_noise(self, cfg):
        ch = ChannelRealization(h_los=1e-6)
        sig = np.ones(500)
        a = apply_channel(sig, ch, 1e-7, 99, cfg)
        b = apply_channel(sig, ch, 1e-7, 99, cfg)
        assert np.array_equal(a, b)

    def test_noise_variance_calibration(self, cfg):
        ch = ChannelRealization(h_los=1.0)
        sig = np.zeros(1_000_000)
        out = apply_channel(sig, ch, 0.5, 1, cfg)
        assert np.var(out.real) == pytest.approx(0.25, rel=0.01)


class TestNoiseStdForSnr:
    def test_three_db_halves_variance(self, cfg, pattern):
        _, grid = random_slot(cfg, pattern, 6)
        ch = ChannelRealization(h_los=1.5e-6, nlos_paths=((3e-7, 1.7),))
        s1 = noise_std_for_snr(grid, ch, 20.0, cfg)
        s2 = noise_std_for_snr(grid, ch, 20.0 + 10.0 * np.log10(2.0), cfg)
        assert s2**2 == pytest.approx(s1**2 / 2.0, rel=1e-12)

    def test_zero_channel_rejected(self, cfg, pattern):
        _, grid = random_slot(cfg, pattern, 7)
        with pytest.raises(ValueError):
            noise_std_for_snr(grid, ChannelRealization(h_los=0.0), 20.0, cfg)

    def test_zero_grid_rejected(self, cfg):
        with pytest.raises(ValueError):
            noise_std_for_snr(
                np.zeros((cfg.n_f, cfg.n_s)), ChannelRealization(h_los=1.0), 20.0, cfg
            )

    def test_monte_carlo_snr_closure_at_20db(self, pattern):
        cfg = ModemConfig(bias_sigma=8.0)  # keep clipping out of the measurement
        ch = ChannelRealization(h_los=1.8e-6, nlos_paths=((4e-7, 2.0),))
        h = frequency_response(ch, cfg.n_f)
        sig_energy = noise_energy = 0.0
        n_slots = 300
        for seed in range(n_slots):
            bits, grid = random_slot(cfg, pattern, seed)
            std = noise_std_for_snr(grid, ch, 20.0, cfg)
            rx = apply_channel(modulate(grid, cfg), ch, std, seed + 10_000, cfg)
            got = demodulate(rx, cfg)
            want = h[:, None] * grid
            used = grid != 0
            sig_energy += np.sum(np.abs(want[used]) ** 2)
            noise_energy += np.sum(np.abs((got - want)[used]) ** 2)
        measured_db = 10.0 * np.log10(sig_energy / noise_energy)
        assert abs(measured_db - 20.0) < 0.2


class TestDemodulate:
    def test_flat_channel_grid_identity(self, pattern):
        cfg = ModemConfig(bias_sigma=8.0)
        g = 3.3e-6
        _, grid = random_slot(cfg, pattern, 8)
        rx = apply_channel(modulate(grid, cfg), ChannelRealization(h_los=g), 0.0, 0, cfg)
        out = demodulate(rx, cfg)
        assert np.abs(out - g * grid).max() < 1e-9 * g * np.abs(grid).max()

    def test_two_path_matches_frequency_response_on_used_tones(self, pattern):
        cfg = ModemConfig(bias_sigma=8.0)
        ch = ChannelRealization(h_los=2e-6, nlos_paths=((5e-7, 3.0),))
        _, grid = random_slot(cfg, pattern, 9)
        rx = apply_channel(modulate(grid, cfg), ch, 0.0, 0, cfg)
        out = demodulate(rx, cfg)
        h = frequency_response(ch, cfg.n_f)
        used = grid != 0
        ratio = out[used] / grid[used]
        want = np.broadcast_to(h[:, None], grid.shape)[used]
        assert np.abs(ratio - want).max() < 1e-9 * np.abs(want).max()

    def test_length_mismatch_rejected(self, cfg):
        with pytest.raises(ValueError):
            demodulate(np.zeros(100), cfg)


class TestEqualizeAndDecode:
    def test_perfect_estimate_zero_ber(self, pattern):
        cfg = ModemConfig(bias_sigma=8.0)
        ch = ChannelRealization(h_los=2e-6, nlos_paths=((5e-7, 2.0),))
        bits, grid = random_slot(cfg, pattern, 10)
        rx = apply_channel(modulate(grid, cfg), ch, 0.0, 0, cfg)
        out = demodulate(rx, cfg)
        decoded = equalize_and_decode(out, frequency_response(ch, cfg.n_f), pattern, cfg)
        assert np.array_equal(decoded, bits)

    def test_unit_estimate_on_attenuating_channel_is_catastrophic(self, pattern):
        cfg = ModemConfig(bias_sigma=8.0)
        ch = ChannelRealization(h_los=2e-6, nlos_paths=((5e-7, 2.0),))
        bits, grid = random_slot(cfg, pattern, 11)
        rx = apply_channel(modulate(grid, cfg), ch, 0.0, 0, cfg)
        out = demodulate(rx, cfg)
        decoded = equalize_and_decode(out, np.ones(cfg.n_f, dtype=complex), pattern, cfg)
        ber = np.mean(decoded != bits)
        assert ber > 0.2  # direct-detection regime: tens of percent

    def test_phase_scrambled_estimate_near_chance(self, cfg, pattern):
        rng = np.random.default_rng(12)
        bits, grid = random_slot(cfg, pattern, 12)
        h = np.exp(2j * np.pi * rng.random(cfg.n_f))
        rx_grid = grid * h[:, None]
        decoded = equalize_and_decode(rx_grid, np.conj(h), pattern, cfg)
        ber = np.mean(decoded != bits)
        assert ber > 0.4

    def test_zero_entry_in_estimate_rejected(self, cfg, pattern):
        _, grid = random_slot(cfg, pattern, 13)
        h = np.ones(cfg.n_f, dtype=complex)
        h[50] = 0.0
        with pytest.raises(ValueError):
            equalize_and_decode(grid, h, pattern, cfg)


class TestPilotObservations:
    def test_shape_and_flat_channel_value(self, cfg, pattern):
        _, grid = random_slot(cfg, pattern, 14)
        obs = pilot_observations(2.0 * grid, pattern)
        assert obs.shape == (33, 4)
        assert np.allclose(obs, 2.0)
