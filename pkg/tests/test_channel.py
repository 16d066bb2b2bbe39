"""Channel model: geometry, path gains, responses, delay-class labels."""

import numpy as np
import pytest

from owcest.channel import (
    ChannelRealization,
    DelayClass,
    PAPER_HDS_TEMPLATE,
    PAPER_LDS_TEMPLATE,
    PdpTemplate,
    Pose,
    ScenarioConfig,
    WALLS,
    bulk_realizations,
    frequency_response,
    frequency_responses,
    impulse_taps,
    label_class,
    lambertian_order,
    los_gain,
    sample_realization,
    specular_path,
)


@pytest.fixture
def cfg():
    return ScenarioConfig()


def up():
    return np.array([0.0, 0.0, 1.0])


def down():
    return np.array([0.0, 0.0, -1.0])


class TestLambertianOrder:
    def test_45_degrees_is_exactly_2(self):
        assert lambertian_order(45.0) == pytest.approx(2.0, rel=1e-12)

    def test_60_degrees_is_exactly_1(self):
        assert lambertian_order(60.0) == pytest.approx(1.0, rel=1e-12)

    def test_30_degrees(self):
        # -ln 2 / ln cos(30 deg), evaluated independently
        assert lambertian_order(30.0) == pytest.approx(4.818841679306646, rel=1e-12)

    @pytest.mark.parametrize("bad", [0.0, 90.0, -5.0, 120.0])
    def test_domain_error(self, bad):
        with pytest.raises(ValueError):
            lambertian_order(bad)


class TestLosGain:
    def test_aligned_poses_closed_form(self, cfg):
        tx = Pose(np.array([2.5, 2.5, 5.0]), down())
        rx = Pose(np.array([2.5, 2.5, 2.5]), up())
        # A (k+1) / (2 pi d^2) with k = 2, d = 2.5, A = 1 cm^2
        expected = 1e-4 * 3.0 / (2.0 * np.pi * 6.25)
        assert los_gain(tx, rx, cfg) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(7.639437268410977e-06, rel=1e-12)

    def test_fov_gating_cuts_gain_to_zero(self, cfg):
        tx = Pose(np.array([2.5, 2.5, 5.0]), down())
        theta = np.radians(50.0)
        rx = Pose(
            np.array([2.5, 2.5, 2.5]),
            np.array([np.sin(theta), 0.0, np.cos(theta)]),
        )
        assert los_gain(tx, rx, cfg) == 0.0

    def test_fov_gate_over_degree_grid(self, cfg):
        tx = Pose(np.array([2.5, 2.5, 5.0]), down())
        for deg in range(0, 90):
            t = np.radians(deg)
            rx = Pose(
                np.array([2.5, 2.5, 2.5]),
                np.array([np.sin(t), 0.0, np.cos(t)]),
            )
            g = los_gain(tx, rx, cfg)
            if deg <= cfg.rx_fov_deg:
                assert g > 0.0, f"theta={deg} should be inside the FOV"
            else:
                assert g == 0.0, f"theta={deg} should be gated out"

    def test_inverse_square_law(self, cfg):
        tx = Pose(np.array([2.5, 2.5, 5.0]), down())
        g1 = los_gain(tx, Pose(np.array([2.5, 2.5, 3.0]), up()), cfg)
        g2 = los_gain(tx, Pose(np.array([2.5, 2.5, 1.0]), up()), cfg)
        assert g2 / g1 == pytest.approx(0.25, rel=1e-12)

    def test_degenerate_geometry_raises(self, cfg):
        tx = Pose(np.array([2.5, 2.5, 5.0]), down())
        with pytest.raises(ValueError):
            los_gain(tx, Pose(np.array([2.5, 2.5, 5.0]), up()), cfg)


class TestSpecularPath:
    def test_linear_in_reflection_coefficient(self):
        tx = Pose(np.array([2.5, 2.5, 5.0]), down())
        rx = Pose(np.array([1.0, 2.5, 1.0]), np.array([-0.5, 0.0, np.sqrt(0.75)]))
        strong = ScenarioConfig(reflection_coeff=0.7)
        weak = ScenarioConfig(reflection_coeff=0.35)
        g1, d1 = specular_path(tx, rx, "x0", strong)
        g2, d2 = specular_path(tx, rx, "x0", weak)
        assert g1 > 0.0
        assert g1 / g2 == pytest.approx(2.0, rel=1e-12)
        assert d1 == d2

    def test_symmetric_room_gives_identical_wall_paths(self, cfg):
        tx = Pose(np.array([2.5, 2.5, 5.0]), down())
        rx = Pose(np.array([2.5, 2.5, 1.0]), up())
        results = [specular_path(tx, rx, w, cfg) for w in WALLS[:4]]
        gains = [g for g, _ in results]
        delays = [d for _, d in results]
        assert np.ptp(gains) <= 1e-15 * max(gains)
        assert np.ptp(delays) <= 1e-15 * max(delays)

    def test_blocked_image_gives_zero_not_error(self, cfg):
        tx = Pose(np.array([2.5, 2.5, 5.0]), down())
        # receiver tilted hard away from the x0 wall image
        rx = Pose(np.array([4.5, 2.5, 1.0]), np.array([0.5, 0.0, np.sqrt(0.75)]))
        g, delay = specular_path(tx, rx, "x0", cfg)
        assert g == 0.0
        assert delay >= 0.0

    def test_excess_delay_nonnegative(self, cfg):
        tx = Pose(np.array([2.5, 2.5, 5.0]), down())
        rng = np.random.default_rng(7)
        for _ in range(200):
            pos = np.array([rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0.5, 1.5)])
            rx = Pose(pos, up())
            for wall in WALLS:
                _, delay = specular_path(tx, rx, wall, cfg)
                assert delay >= 0.0

    def test_unknown_wall_rejected(self, cfg):
        tx = Pose(np.array([2.5, 2.5, 5.0]), down())
        rx = Pose(np.array([1.0, 2.5, 1.0]), up())
        with pytest.raises(ValueError):
            specular_path(tx, rx, "floor", cfg)


class TestSampleRealization:
    def test_deterministic_in_seed(self, cfg):
        a = sample_realization(cfg, 123)
        b = sample_realization(cfg, 123)
        assert a == b

    def test_different_seeds_differ(self, cfg):
        assert sample_realization(cfg, 1) != sample_realization(cfg, 2)

    def test_single_path_config_has_no_nlos(self):
        cfg = ScenarioConfig(n_paths=1)
        assert sample_realization(cfg, 5).nlos_paths == ()

    def test_monte_carlo_gain_bounds(self, cfg):
        reals = bulk_realizations(cfg, 42, 10_000)
        h_los = np.array([r.h_los for r in reals])
        assert (h_los > 0.0).all()
        for r in reals:
            for gain, tau in r.nlos_paths:
                assert 0.0 <= gain <= r.h_los
                assert 0.0 < tau < 7.0  # delays fit the cyclic prefix

    def test_rejection_cap(self):
        # an FOV this narrow cannot see the transmitter from desk height
        cfg = ScenarioConfig(rx_fov_deg=0.05, rx_elevation_range_deg=(89.0, 89.9))
        with pytest.raises(RuntimeError):
            sample_realization(cfg, 0)


class TestFrequencyResponse:
    def test_flat_without_nlos(self):
        ch = ChannelRealization(h_los=3e-6)
        h = frequency_response(ch, 324)
        assert np.allclose(h, 3e-6)

    def test_two_path_integer_delay_oscillates(self):
        ch = ChannelRealization(h_los=1.0, nlos_paths=((0.25, 2.0),))
        n_f = 324
        h = frequency_response(ch, n_f)
        k = np.arange(n_f)
        expected = 1.0 + 0.25 * np.exp(-4j * np.pi * k / n_f)
        assert np.allclose(h, expected, rtol=0, atol=1e-15)
        assert np.abs(h).max() == pytest.approx(1.25, rel=1e-12)
        assert np.abs(h).min() == pytest.approx(0.75, rel=1e-12)

    def test_dc_term_sums_gains(self):
        ch = ChannelRealization(h_los=1.5e-6, nlos_paths=((2e-7, 1.3), (5e-8, 2.6)))
        h = frequency_response(ch, 324)
        assert h[0] == pytest.approx(1.5e-6 + 2e-7 + 5e-8, rel=1e-12)

    def test_odd_nf_rejected(self):
        with pytest.raises(ValueError):
            frequency_response(ChannelRealization(h_los=1.0), 323)

    def test_batched_matches_scalar(self, cfg):
        reals = bulk_realizations(cfg, 3, 50)
        batch = frequency_responses(reals, 324)
        for i, r in enumerate(reals):
            assert np.allclose(batch[i], frequency_response(r, 324), rtol=1e-12)


class TestImpulseTaps:
    def test_pure_los_is_single_tap(self):
        taps = impulse_taps(ChannelRealization(h_los=2e-6), 324, 8)
        assert taps[0] == pytest.approx(2e-6, rel=1e-12)
        assert np.abs(taps[1:]).max() < 1e-12 * 2e-6

    def test_integer_delay_isolated_taps(self):
        ch = ChannelRealization(h_los=1.0, nlos_paths=((0.3, 3.0),))
        taps = impulse_taps(ch, 324, 8)
        assert taps[0] == pytest.approx(1.0, rel=1e-12)
        assert taps[3] == pytest.approx(0.3, rel=1e-12)
        others = np.delete(np.abs(taps), [0, 3])
        assert others.max() < 1e-12

    def test_fractional_delay_leaks_but_conserves_energy(self):
        ch = ChannelRealization(h_los=1.0, nlos_paths=((0.3, 2.5),))
        n_f = 324
        h_freq = frequency_response(ch, n_f)
        taps = np.fft.ifft(h_freq)
        # Parseval identity against a brute-force DFT of the full tap vector
        brute = np.array(
            [np.mean(h_freq * np.exp(2j * np.pi * np.arange(n_f) * n / n_f)) for n in range(8)]
        )
        assert np.allclose(impulse_taps(ch, n_f, 8), brute, rtol=0, atol=1e-12)
        energy_time = np.sum(np.abs(taps) ** 2)
        energy_freq = np.sum(np.abs(h_freq) ** 2) / n_f
        assert energy_time == pytest.approx(energy_freq, rel=1e-9)
        # leakage spreads around taps 2 and 3 but total stays near the
        # two-path power (the fractional-delay cross term is O(1/n_f))
        assert energy_time == pytest.approx(1.0 + 0.09, rel=2e-2)
        assert np.abs(taps[2]) > 0.1 and np.abs(taps[3]) > 0.1

    def test_duality_and_parseval_over_random_realizations(self, cfg):
        reals = bulk_realizations(cfg, 11, 1000)
        h = frequency_responses(reals, 324)
        taps = np.fft.ifft(h, axis=1)
        # duality: impulse_taps equals the inverse DFT of frequency_response
        for i in [0, 17, 500, 999]:
            assert np.allclose(
                impulse_taps(reals[i], 324, 324),
                taps[i],
                rtol=1e-9,
                atol=1e-9 * np.abs(taps[i]).max(),
            )
        et = np.sum(np.abs(taps) ** 2, axis=1)
        ef = np.sum(np.abs(h) ** 2, axis=1) / 324
        assert np.allclose(et, ef, rtol=1e-9)

    def test_n_taps_capped(self):
        with pytest.raises(ValueError):
            impulse_taps(ChannelRealization(h_los=1.0), 16, 17)


class TestPdpTemplate:
    def test_paper_templates_tail_ordering(self):
        assert (PAPER_HDS_TEMPLATE.tail > PAPER_LDS_TEMPLATE.tail).all()

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            PdpTemplate(tail=np.array([1e-5, 0.0]))

    def test_rejects_increasing(self):
        with pytest.raises(ValueError):
            PdpTemplate(tail=np.array([1e-6, 2e-6]))


class TestLabelClass:
    def _taps(self, tail):
        return np.concatenate([[1e-4], tail])

    def test_zero_tail_is_lds(self):
        taps = self._taps(np.zeros(4))
        assert label_class(taps, PAPER_LDS_TEMPLATE, PAPER_HDS_TEMPLATE) == DelayClass.LDS

    def test_tail_equal_to_hds_is_hds(self):
        taps = self._taps(PAPER_HDS_TEMPLATE.tail)
        assert label_class(taps, PAPER_LDS_TEMPLATE, PAPER_HDS_TEMPLATE) == DelayClass.HDS

    def test_midpoint_tail_is_mds(self):
        mid = (PAPER_LDS_TEMPLATE.tail + PAPER_HDS_TEMPLATE.tail) / 2.0
        taps = self._taps(mid)
        assert label_class(taps, PAPER_LDS_TEMPLATE, PAPER_HDS_TEMPLATE) == DelayClass.MDS

    def test_scale_consistency(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            tail = np.abs(rng.normal(0, 2e-5, 4))
            taps = self._taps(tail)
            base = label_class(taps, PAPER_LDS_TEMPLATE, PAPER_HDS_TEMPLATE)
            c = rng.uniform(0.1, 10.0)
            scaled = label_class(
                taps * c,
                PAPER_LDS_TEMPLATE.scaled(c),
                PAPER_HDS_TEMPLATE.scaled(c),
            )
            assert base == scaled

    def test_short_tap_vector_rejected(self):
        with pytest.raises(ValueError):
            label_class(np.ones(3), PAPER_LDS_TEMPLATE, PAPER_HDS_TEMPLATE)
