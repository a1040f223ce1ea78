import math

import numpy as np
import pytest

from qkdperf.hardware import (
    ChannelSpec,
    DegenerateConfigurationError,
    DetectorSpec,
    HardwareConfig,
    PhotonSource,
    ProtocolKind,
    ProtocolSpec,
    SourceKind,
    entangled_link_quantities,
    link_quantities,
    system_transmittance,
    yield_n,
)


def gys_hardware(length_km: float = 0.0) -> HardwareConfig:
    return HardwareConfig(
        channel=ChannelSpec(attenuation_db_per_km=0.21, length_km=length_km),
        detector=DetectorSpec(efficiency=0.045, dark_prob=8e-7, misalignment=0.03),
    )


class TestSpecs:
    def test_channel_needs_exactly_one_loss_mode(self):
        with pytest.raises(ValueError):
            ChannelSpec()
        with pytest.raises(ValueError):
            ChannelSpec(attenuation_db_per_km=0.2, fixed_loss_db=10.0)

    def test_channel_transmittance_in_unit_interval(self):
        assert 0.0 < ChannelSpec(fixed_loss_db=35.0).transmittance <= 1.0
        assert ChannelSpec(attenuation_db_per_km=0.2, length_km=0.0).transmittance == 1.0

    def test_fixed_loss_channel_has_no_length(self):
        with pytest.raises(ValueError):
            ChannelSpec(fixed_loss_db=35.0).with_length(10.0)

    def test_detector_field_ranges(self):
        with pytest.raises(ValueError):
            DetectorSpec(efficiency=1.5)
        with pytest.raises(ValueError):
            DetectorSpec(efficiency=0.5, dark_prob=-1e-9)

    def test_protocol_decoy_means_iff_active(self):
        with pytest.raises(ValueError):
            ProtocolSpec(kind=ProtocolKind.BB84_DECOY_ACTIVE, decoy_means=())
        with pytest.raises(ValueError):
            ProtocolSpec(kind=ProtocolKind.BB84, decoy_means=(0.05,))

    def test_protocol_sifting_range(self):
        with pytest.raises(ValueError):
            ProtocolSpec(sifting_q=0.0)
        with pytest.raises(ValueError):
            ProtocolSpec(ec_efficiency=0.9)

    def test_single_photon_source_distribution(self):
        src = PhotonSource(kind=SourceKind.SINGLE_PHOTON, mean_photons=3.0)
        dist = src.distribution()
        assert dist[1] == 1.0
        assert dist.sum() == 1.0

    @pytest.mark.parametrize("kind", [SourceKind.POISSON, SourceKind.THERMAL])
    @pytest.mark.parametrize("mean", [0.0, 0.1, 0.48, 1.0, 2.0, 8.0])
    def test_source_truncation_tail(self, kind, mean):
        src = PhotonSource(kind=kind, mean_photons=mean)
        assert src.distribution().sum() == pytest.approx(1.0, abs=1e-9)

    def test_heralding_removes_vacuum(self):
        src = PhotonSource(
            kind=SourceKind.HERALDED_PDC, mean_photons=0.2, trigger_efficiency=0.7
        )
        dist = src.distribution()
        assert dist[0] == 0.0
        assert dist.sum() == pytest.approx(1.0, abs=1e-12)
        assert 0.0 < src.trigger_probability() < 1.0
        assert src.effective_rep_rate() == pytest.approx(
            src.rep_rate * src.trigger_probability()
        )


class TestSystemTransmittance:
    def test_zero_length(self):
        hw = ChannelSpec(attenuation_db_per_km=0.21, length_km=0.0)
        assert system_transmittance(hw, DetectorSpec(efficiency=1.0)) == 1.0

    def test_hundred_km_fibre(self):
        hw = ChannelSpec(attenuation_db_per_km=0.21, length_km=100.0)
        eta = system_transmittance(hw, DetectorSpec(efficiency=1.0))
        assert abs(eta - 7.943e-3) < 1e-6

    def test_satellite_budget(self):
        hw = ChannelSpec(fixed_loss_db=35.0)
        eta = system_transmittance(hw, DetectorSpec(efficiency=0.10))
        assert abs(eta - 3.162e-5) < 1e-8


class TestYieldN:
    def test_vacuum_is_dark_counts(self):
        hw = HardwareConfig(
            channel=ChannelSpec(attenuation_db_per_km=0.21, length_km=10.0),
            detector=DetectorSpec(efficiency=0.045, dark_prob=3e-5),
        )
        assert yield_n(hw, 0) == 3e-5

    def test_single_photon_half_transmittance(self):
        hw = HardwareConfig(
            channel=ChannelSpec(fixed_loss_db=-10.0 * math.log10(0.5)),
            detector=DetectorSpec(efficiency=1.0, dark_prob=0.0),
        )
        assert yield_n(hw, 1) == pytest.approx(0.5, abs=1e-12)

    def test_two_photons_with_dark_counts(self):
        hw = HardwareConfig(
            channel=ChannelSpec(fixed_loss_db=-10.0 * math.log10(0.5)),
            detector=DetectorSpec(efficiency=1.0, dark_prob=0.01),
        )
        # Y_2 = Y_0 + eta_2 - Y_0 eta_2 with eta_2 = 0.75
        assert yield_n(hw, 2) == pytest.approx(0.7525, abs=1e-6)

    def test_two_photons_monte_carlo_oracle(self):
        rng = np.random.default_rng(42)
        n = 1_000_000
        survived = rng.random((n, 2)) < 0.5
        dark = rng.random(n) < 0.01
        clicked = survived.any(axis=1) | dark
        estimate = clicked.mean()
        sigma = math.sqrt(0.7525 * (1 - 0.7525) / n)
        assert abs(estimate - 0.7525) < 3 * sigma


class TestLinkQuantities:
    def test_vacuum_source(self):
        hw = gys_hardware()
        lq = link_quantities(PhotonSource(mean_photons=0.0), hw)
        assert lq.gain == pytest.approx(8e-7, rel=1e-9)
        assert lq.qber == pytest.approx(0.5, abs=1e-12)

    def test_gys_reference_point(self):
        lq = link_quantities(PhotonSource(mean_photons=0.48), gys_hardware())
        assert lq.gain == pytest.approx(0.02137, abs=1e-4)
        assert lq.qber == pytest.approx(0.030, abs=0.002)

    def test_perfect_single_photon_link(self):
        hw = HardwareConfig(
            channel=ChannelSpec(attenuation_db_per_km=0.0, length_km=0.0),
            detector=DetectorSpec(efficiency=1.0),
        )
        lq = link_quantities(PhotonSource(kind=SourceKind.SINGLE_PHOTON), hw)
        assert lq.gain == 1.0
        assert lq.qber == 0.0
        assert lq.omega == 1.0
        assert lq.single_error == 0.0

    def test_omega_is_single_gain_over_gain(self):
        for length in (0.0, 25.0, 80.0):
            lq = link_quantities(PhotonSource(mean_photons=0.48), gys_hardware(length))
            assert abs(lq.omega - lq.single_gain / lq.gain) <= 1e-12

    def test_degenerate_configuration(self):
        hw = HardwareConfig(
            channel=ChannelSpec(fixed_loss_db=300.0),
            detector=DetectorSpec(efficiency=1e-12, dark_prob=0.0),
        )
        with pytest.raises(DegenerateConfigurationError):
            link_quantities(PhotonSource(mean_photons=0.0), hw)

    def test_qber_override(self):
        hw = HardwareConfig(
            channel=ChannelSpec(attenuation_db_per_km=0.21, length_km=10.0),
            detector=DetectorSpec(efficiency=0.045, dark_prob=8e-7, misalignment=0.03),
            qber_override=0.041,
        )
        lq = link_quantities(PhotonSource(mean_photons=0.48), hw)
        assert lq.qber == 0.041

    def test_monotone_in_length(self):
        lengths = np.linspace(0.0, 180.0, 50)
        source = PhotonSource(mean_photons=0.48)
        gains, qbers = [], []
        for length in lengths:
            lq = link_quantities(source, gys_hardware(float(length)))
            gains.append(lq.gain)
            qbers.append(lq.qber)
        assert all(b <= a + 1e-15 for a, b in zip(gains, gains[1:]))
        assert all(b >= a - 1e-15 for a, b in zip(qbers, qbers[1:]))

    def test_gain_floor_and_qber_cap(self):
        source = PhotonSource(mean_photons=0.48)
        for length in np.linspace(0.0, 300.0, 40):
            hw = gys_hardware(float(length))
            lq = link_quantities(source, hw)
            assert lq.gain >= hw.detector.dark_prob
            assert 0.0 <= lq.qber <= 0.5

    @pytest.mark.parametrize("mean", [0.05, 0.2, 0.48, 1.0])
    def test_poisson_closed_form_shortcut(self, mean):
        # Q ~= Y0 + 1 - exp(-eta mu), valid for Y0 << 1.
        for length in (0.0, 40.0, 120.0):
            hw = HardwareConfig(
                channel=ChannelSpec(attenuation_db_per_km=0.21, length_km=length),
                detector=DetectorSpec(efficiency=0.045, dark_prob=1e-9,
                                      misalignment=0.03),
            )
            lq = link_quantities(PhotonSource(mean_photons=mean), hw)
            eta = system_transmittance(hw.channel, hw.detector)
            shortcut = hw.detector.dark_prob + 1.0 - math.exp(-eta * mean)
            assert abs(lq.gain - shortcut) / shortcut < 1e-8

    def test_monte_carlo_pulse_oracle(self):
        # Sample the physical pulse process and compare Q and E.
        hw = gys_hardware(20.0)
        source = PhotonSource(mean_photons=0.48)
        lq = link_quantities(source, hw)
        rng = np.random.default_rng(11)
        n = 1_000_000
        photons = rng.poisson(0.48, n)
        eta = system_transmittance(hw.channel, hw.detector)
        survived = rng.binomial(photons, eta) > 0
        dark = rng.random(n) < hw.detector.dark_prob
        click = survived | dark
        gain_hat = click.mean()
        assert abs(gain_hat - lq.gain) < 3 * math.sqrt(lq.gain * (1 - lq.gain) / n)

        flip = rng.random(n) < hw.detector.misalignment
        error = np.where(survived, flip, rng.random(n) < 0.5) & click
        qber_hat = error.sum() / click.sum()
        sigma_e = math.sqrt(lq.qber * (1 - lq.qber) / click.sum())
        assert abs(qber_hat - lq.qber) < 3 * sigma_e


class TestEntangledLink:
    def arm(self, loss_db: float, dark: float = 0.0, e_det: float = 0.0) -> HardwareConfig:
        return HardwareConfig(
            channel=ChannelSpec(fixed_loss_db=loss_db),
            detector=DetectorSpec(efficiency=1.0, dark_prob=dark, misalignment=e_det),
        )

    def test_single_pair_perfect_arms(self):
        source = PhotonSource(kind=SourceKind.SINGLE_PHOTON)
        lq = entangled_link_quantities(
            source, self.arm(0.0, e_det=0.02), self.arm(0.0, e_det=0.02)
        )
        assert lq.gain == pytest.approx(1.0, abs=1e-12)
        assert lq.qber == pytest.approx(0.02, abs=1e-12)

    def test_vacuum_pairs_background_only(self):
        source = PhotonSource(kind=SourceKind.HERALDED_PDC, mean_photons=0.0)
        lq = entangled_link_quantities(
            source, self.arm(10.0, dark=1e-6), self.arm(10.0, dark=1e-6)
        )
        assert lq.gain == pytest.approx(1e-12, rel=1e-9)
        assert lq.qber == pytest.approx(0.5, abs=1e-12)

    def test_symmetric_35db_monte_carlo_oracle(self):
        # Pair source in the middle of a 35 dB link, 17.5 dB per arm.
        source = PhotonSource(kind=SourceKind.HERALDED_PDC, mean_photons=0.1)
        arm = HardwareConfig(
            channel=ChannelSpec(fixed_loss_db=17.5),
            detector=DetectorSpec(efficiency=0.10, dark_prob=1e-6, misalignment=0.03),
        )
        lq = entangled_link_quantities(source, arm, arm)

        rng = np.random.default_rng(5)
        n = 10_000_000
        pairs = rng.geometric(1.0 / 1.1, n) - 1
        eta = 0.10 * 10 ** (-17.5 / 10.0)
        sig_a = rng.binomial(pairs, eta) > 0
        sig_b = rng.binomial(pairs, eta) > 0
        click_a = sig_a | (rng.random(n) < 1e-6)
        click_b = sig_b | (rng.random(n) < 1e-6)
        coincidence = click_a & click_b
        gain_hat = coincidence.mean()
        sigma_q = math.sqrt(lq.gain * (1 - lq.gain) / n)
        assert abs(gain_hat - lq.gain) < 3 * sigma_q

        signal_pair = sig_a & sig_b
        err = np.where(
            signal_pair, rng.random(n) < 0.03, rng.random(n) < 0.5
        ) & coincidence
        qber_hat = err.sum() / coincidence.sum()
        sigma_e = math.sqrt(lq.qber * (1 - lq.qber) / coincidence.sum())
        assert abs(qber_hat - lq.qber) < 3 * sigma_e

    def test_degenerate_when_dead(self):
        source = PhotonSource(kind=SourceKind.HERALDED_PDC, mean_photons=0.0)
        with pytest.raises(DegenerateConfigurationError):
            entangled_link_quantities(source, self.arm(10.0), self.arm(10.0))
