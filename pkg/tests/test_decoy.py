import math

import numpy as np
import pytest

from qkdperf.decoy import (
    DecoyObservation,
    EmptySubsetError,
    InconsistentObservationError,
    TmdConfig,
    convolution_matrix,
    estimate_from_decoys,
    invert_statistics,
    loss_matrix,
    read_click_records,
    select_passive_decoys,
)
from qkdperf.hardware import (
    ChannelSpec,
    DetectorSpec,
    HardwareConfig,
    PhotonSource,
    link_quantities,
)
from qkdperf.numerics import DistributionVec, poisson_distribution, poisson_pn
from qkdperf.rates import rate_one_way


def observe(mean: float, hw: HardwareConfig) -> DecoyObservation:
    lq = link_quantities(PhotonSource(mean_photons=mean), hw)
    return DecoyObservation(intensity=mean, gain=lq.gain, qber=lq.qber)


def gys20() -> HardwareConfig:
    return HardwareConfig(
        channel=ChannelSpec(attenuation_db_per_km=0.21, length_km=20.0),
        detector=DetectorSpec(efficiency=0.045, dark_prob=8e-7, misalignment=0.03),
    )


class TestEstimateFromDecoys:
    def test_bounds_close_to_truth_on_gys(self):
        hw = gys20()
        truth = link_quantities(PhotonSource(mean_photons=0.48), hw)
        vacuum = DecoyObservation(intensity=0.0, gain=hw.detector.dark_prob, qber=0.5)
        est = estimate_from_decoys(observe(0.48, hw), [vacuum, observe(0.05, hw)])

        y1_true = truth.yields[1]
        e1_true = truth.single_error
        assert est.y1_lower <= y1_true
        assert est.y1_lower > 0.9 * y1_true
        assert est.e1_upper >= e1_true
        assert est.e1_upper < 1.15 * e1_true
        assert est.omega_lower <= truth.omega
        assert est.y0_used == hw.detector.dark_prob

    def test_lossless_noiseless_channel(self):
        hw = HardwareConfig(
            channel=ChannelSpec(attenuation_db_per_km=0.0, length_km=0.0),
            detector=DetectorSpec(efficiency=1.0, dark_prob=0.0, misalignment=0.0),
        )
        truth = link_quantities(PhotonSource(mean_photons=0.5), hw)
        est = estimate_from_decoys(
            observe(0.5, hw), [observe(0.1, hw)], dark_prob=0.0
        )
        assert est.y1_lower <= 1.0
        assert est.omega_lower <= truth.omega
        assert est.omega_lower > 0.95 * truth.omega

    def test_equal_gains_are_inconsistent(self):
        hw = gys20()
        signal = observe(0.48, hw)
        fake_decoy = DecoyObservation(
            intensity=0.05, gain=signal.gain, qber=signal.qber
        )
        with pytest.raises(InconsistentObservationError):
            estimate_from_decoys(signal, [fake_decoy], dark_prob=8e-7)

    def test_requires_weak_decoy_or_y0(self):
        hw = gys20()
        with pytest.raises(ValueError):
            estimate_from_decoys(observe(0.48, hw), [])
        with pytest.raises(ValueError):
            estimate_from_decoys(observe(0.48, hw), [observe(0.05, hw)])

    def test_conservative_over_random_configs(self):
        rng = np.random.default_rng(123)
        for _ in range(100):
            eta_sys = 10 ** rng.uniform(-4, 0)
            p_dark = 10 ** rng.uniform(-8, -4)
            e_det = rng.uniform(0.0, 0.1)
            hw = HardwareConfig(
                channel=ChannelSpec(attenuation_db_per_km=0.0, length_km=0.0),
                detector=DetectorSpec(efficiency=eta_sys, dark_prob=p_dark,
                                      misalignment=e_det),
            )
            truth = link_quantities(PhotonSource(mean_photons=0.48), hw)
            decoys = [observe(0.05, hw)]
            if rng.random() < 0.5:
                decoys.insert(0, DecoyObservation(0.0, p_dark, 0.5))
            est = estimate_from_decoys(observe(0.48, hw), decoys, dark_prob=p_dark)
            assert est.y1_lower <= truth.yields[1] + 1e-12
            assert est.e1_upper >= truth.single_error - 1e-12
            assert est.omega_lower <= truth.omega + 1e-12
            # Estimation can only cost rate, never gain it.
            estimated = rate_one_way(1.0, truth, 1.0, est.omega_lower, est.e1_upper)
            oracle = rate_one_way(1.0, truth, 1.0, truth.omega, truth.single_error)
            assert estimated <= oracle + 1e-15


class TestLossMatrix:
    def test_unit_efficiency_is_identity(self):
        np.testing.assert_allclose(loss_matrix(1.0, 6), np.eye(7), atol=1e-15)

    def test_half_efficiency_columns(self):
        mat = loss_matrix(0.5, 4)
        np.testing.assert_allclose(mat[:3, 1], [0.5, 0.5, 0.0], atol=1e-15)
        np.testing.assert_allclose(mat[:3, 2], [0.25, 0.5, 0.25], atol=1e-15)

    @pytest.mark.parametrize("eta", [0.1, 0.5, 0.7, 1.0])
    def test_column_stochastic(self, eta):
        mat = loss_matrix(eta, 10)
        np.testing.assert_allclose(mat.sum(axis=0), np.ones(11), atol=1e-12)

    def test_rejects_zero_eta(self):
        with pytest.raises(ValueError):
            loss_matrix(0.0, 4)


class TestConvolutionMatrix:
    def test_vacuum_and_single_photon_columns(self):
        mat = convolution_matrix(TmdConfig(bins=8, n_max=4))
        np.testing.assert_allclose(mat[:, 0], [1, 0, 0, 0, 0], atol=1e-15)
        np.testing.assert_allclose(mat[:, 1], [0, 1, 0, 0, 0], atol=1e-15)

    def test_two_photons_two_bins(self):
        # Photon pair in two bins: 4 routings, half bunch into one bin.
        mat = convolution_matrix(TmdConfig(bins=2, n_max=2))
        np.testing.assert_allclose(mat[:, 2], [0.0, 0.5, 0.5], atol=1e-15)

    @pytest.mark.parametrize("bins,n_max", [(4, 2), (8, 4), (16, 6), (16, 8), (32, 12)])
    def test_column_stochastic_and_invertible(self, bins, n_max):
        cfg = TmdConfig(bins=bins, n_max=n_max)
        conv = convolution_matrix(cfg)
        np.testing.assert_allclose(conv.sum(axis=0), np.ones(n_max + 1), atol=1e-12)
        system = conv @ loss_matrix(0.7, n_max)
        assert np.linalg.matrix_rank(system) == n_max + 1

    def test_bins_must_be_power_of_two(self):
        with pytest.raises(ValueError):
            TmdConfig(bins=6)


class TestInvertStatistics:
    def test_near_identity_system(self):
        cfg = TmdConfig(bins=64, tmd_efficiency=1.0, n_max=6)
        p = DistributionVec(poisson_distribution(0.5, 6)).normalized()
        system = convolution_matrix(cfg) @ loss_matrix(1.0, 6)
        measured = DistributionVec(system @ p.entries)
        result = invert_statistics(measured, cfg)
        np.testing.assert_allclose(result.distribution.entries, p.entries, atol=1e-8)

    def test_round_trip_poisson(self):
        cfg = TmdConfig(bins=8, tmd_efficiency=0.7, n_max=8)
        p = DistributionVec(poisson_distribution(0.5, 8)).normalized()
        system = convolution_matrix(cfg) @ loss_matrix(0.7, 8)
        measured = DistributionVec(system @ p.entries)
        result = invert_statistics(measured, cfg)
        assert np.abs(result.distribution.entries - p.entries).max() < 1e-6
        assert result.residual < 1e-9

    def test_perturbed_input_stays_valid(self):
        cfg = TmdConfig(bins=8, tmd_efficiency=0.7, n_max=8)
        p = DistributionVec(poisson_distribution(0.5, 8)).normalized()
        system = convolution_matrix(cfg) @ loss_matrix(0.7, 8)
        rng = np.random.default_rng(99)
        noisy = system @ p.entries + rng.uniform(-1e-3, 1e-3, 9)
        noisy = np.clip(noisy, 0.0, None)
        result = invert_statistics(DistributionVec(noisy / noisy.sum()), cfg)
        recovered = result.distribution.entries
        assert np.all(recovered >= 0.0)
        assert recovered.sum() == pytest.approx(1.0, abs=1e-9)


class TestSelectPassiveDecoys:
    @staticmethod
    def click_stream(n: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return rng.poisson(0.5, n)

    def test_unbiased_split_matches_global_histogram(self):
        clicks = self.click_stream(200_000, seed=1)
        rng = np.random.default_rng(2)
        signal, decoy, labels = select_passive_decoys(clicks, {}, rng)
        global_hist = np.bincount(clicks, minlength=signal.entries.size)
        global_dist = global_hist / global_hist.sum()
        for subset, count in ((signal, (~labels).sum()), (decoy, labels.sum())):
            for k, p in enumerate(global_dist):
                if p == 0.0:
                    continue
                se = math.sqrt(p * (1 - p) / count)
                assert abs(subset.entries[k] - p) < 4 * se + 1e-12

    def test_reweighting_shifts_the_mean(self):
        clicks = self.click_stream(100_000, seed=3)
        rng = np.random.default_rng(4)
        weights = {0: 0.1, 1: 0.9}
        signal, decoy, _ = select_passive_decoys(
            clicks, weights, rng, default_weight=0.5
        )
        # Analytic reweighting: decoy subset ~ w(k) p(k), up-weighting k=1.
        probs = np.bincount(clicks, minlength=decoy.entries.size).astype(float)
        probs /= probs.sum()
        w = np.array([weights.get(k, 0.5) for k in range(probs.size)])
        expected_decoy = probs * w / (probs * w).sum()
        expected_signal = probs * (1 - w) / (probs * (1 - w)).sum()
        exp_gap = (
            np.arange(probs.size) @ expected_decoy
            - np.arange(probs.size) @ expected_signal
        )
        assert exp_gap > 0
        assert decoy.mean() - signal.mean() > 0.5 * exp_gap

    def test_all_zero_weights_empty_subset(self):
        clicks = self.click_stream(5_000, seed=5)
        with pytest.raises(EmptySubsetError):
            select_passive_decoys(clicks, {}, np.random.default_rng(6),
                                  default_weight=0.0)

    def test_labels_never_alter_records(self):
        clicks = self.click_stream(5_000, seed=7)
        before = clicks.copy()
        select_passive_decoys(clicks, {}, np.random.default_rng(8), min_records=10)
        np.testing.assert_array_equal(clicks, before)

    def test_fixed_seed_reproducible(self):
        clicks = self.click_stream(20_000, seed=9)
        a = select_passive_decoys(clicks, {0: 0.2}, np.random.default_rng(10))
        b = select_passive_decoys(clicks, {0: 0.2}, np.random.default_rng(10))
        np.testing.assert_array_equal(a[2], b[2])


class TestSubsetInversionDirection:
    def test_inverted_subsets_order_by_mean(self):
        # TMD click records sampled from a known Poisson input; subsets
        # reweighted toward high click counts must invert to a higher mean
        # photon number than their complement.
        cfg = TmdConfig(bins=8, tmd_efficiency=0.7, n_max=8)
        rng = np.random.default_rng(20)
        n_records = 150_000
        photons = np.minimum(rng.poisson(0.6, n_records), cfg.n_max)
        survivors = rng.binomial(photons, cfg.tmd_efficiency)
        clicks = np.array(
            [len(set(rng.integers(0, cfg.bins, k))) if k else 0 for k in survivors]
        )
        weights = {0: 0.2, 1: 0.5, 2: 0.9, 3: 0.9}
        signal, decoy, _ = select_passive_decoys(
            clicks, weights, rng, default_weight=0.9, n_max=cfg.n_max
        )
        inv_signal = invert_statistics(signal, cfg).distribution
        inv_decoy = invert_statistics(decoy, cfg).distribution
        assert inv_decoy.mean() > inv_signal.mean()


class TestClickRecordParsing:
    def test_parses_and_skips_blanks(self):
        clicks = read_click_records(["1\n", "\n", "0\n", "3\n"])
        np.testing.assert_array_equal(clicks, [1, 0, 3])

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            read_click_records(["1\n", "two\n"])
