import warnings

import numpy as np
import pytest

from neurograph.bands import band_by_name
from neurograph.features import (
    ConnectivityMatrix,
    DegenerateSeriesWarning,
    FeatureError,
    WelchConfig,
    band_power,
    connectivity_matrix,
    pcc,
    pcc_matrix,
    plv,
    plv_matrix,
    psd_feature,
    quantile_bins,
    te_matrix,
    te_surrogates,
    transfer_entropy,
    welch_psd,
)

FS = 128.0


def brute_force_te_bits(y, x, bins):
    """Direct evaluation of the directed-information sum over the exhaustive
    joint histogram: sum over triples of p(x1,x0,y0) * log2 of the conditional
    probability ratio. Shares only the bin assignment with the estimator."""
    xb = quantile_bins(np.asarray(x, dtype=float), bins)
    yb = quantile_bins(np.asarray(y, dtype=float), bins)
    triples = {}
    pair_xx = {}
    pair_xy = {}
    single_x = {}
    n = len(xb) - 1
    for i in range(n):
        t = (int(xb[i + 1]), int(xb[i]), int(yb[i]))
        triples[t] = triples.get(t, 0) + 1
        pair_xx[(t[0], t[1])] = pair_xx.get((t[0], t[1]), 0) + 1
        pair_xy[(t[1], t[2])] = pair_xy.get((t[1], t[2]), 0) + 1
        single_x[t[1]] = single_x.get(t[1], 0) + 1
    total = 0.0
    for (x1, x0, y0), c in triples.items():
        p_joint = c / n
        p_cond_full = c / pair_xy[(x0, y0)]
        p_cond_hist = pair_xx[(x1, x0)] / single_x[x0]
        total += p_joint * np.log2(p_cond_full / p_cond_hist)
    return total


class TestWelchPsd:
    def test_tone_peak_at_nearest_grid_frequency(self):
        t = np.arange(0, 3, 1 / FS)
        freqs, psd = welch_psd(np.sin(2 * np.pi * 10 * t), FS)
        assert freqs[np.argmax(psd)] == 10.0

    def test_zero_signal_zero_spectrum(self):
        _, psd = welch_psd(np.zeros(int(3 * FS)), FS)
        assert np.all(psd == 0)

    def test_white_noise_integrated_power_matches_variance(self):
        rng = np.random.default_rng(1)
        ratios = []
        for _ in range(120):
            x = rng.standard_normal(int(3 * FS))
            freqs, psd = welch_psd(x, FS)
            ratios.append(np.sum(psd) * (freqs[1] - freqs[0]) / np.var(x))
        assert 0.9 <= np.mean(ratios) <= 1.1

    def test_nonnegative_everywhere(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            x = rng.standard_normal(int(3 * FS)) * rng.uniform(0.1, 50)
            _, psd = welch_psd(x, FS)
            assert np.all(psd >= 0)

    def test_subwindow_longer_than_segment_rejected(self):
        with pytest.raises(FeatureError, match="shorter"):
            welch_psd(np.zeros(64), FS, WelchConfig(subwin_s=1.0))

    def test_matches_scipy_reference(self):
        from scipy.signal import welch as scipy_welch

        rng = np.random.default_rng(3)
        x = rng.standard_normal(int(3 * FS))
        freqs, psd = welch_psd(x, FS)
        f_ref, p_ref = scipy_welch(
            x, fs=FS, nperseg=int(FS), noverlap=int(FS) // 2, window="hann", detrend=False
        )
        np.testing.assert_allclose(freqs, f_ref)
        np.testing.assert_allclose(psd, p_ref, rtol=1e-10)


class TestBandPower:
    def test_flat_spectrum_gives_its_value(self):
        freqs = np.arange(0, 65.0)
        psd = np.full(65, 4.2)
        assert band_power(freqs, psd, band_by_name("alpha")) == pytest.approx(4.2)

    def test_tone_band_ratio(self):
        t = np.arange(0, 3, 1 / FS)
        freqs, psd = welch_psd(np.sin(2 * np.pi * 10 * t), FS)
        ratio = band_power(freqs, psd, band_by_name("alpha")) / band_power(
            freqs, psd, band_by_name("gamma")
        )
        assert ratio >= 100

    def test_delta_band_uses_positive_bins_only(self):
        # 1 Hz grid: the delta (0-3 Hz) band must average bins 1, 2, 3 and
        # never the DC bin.
        freqs = np.arange(0, 65.0)
        psd = np.zeros(65)
        psd[0] = 99.0
        psd[1:4] = 6.0
        assert band_power(freqs, psd, band_by_name("delta")) == pytest.approx(6.0)

    def test_empty_band_rejected(self):
        freqs = np.arange(0, 65.0)
        from neurograph.bands import BandDefinition

        with pytest.raises(FeatureError, match="no spectral bins"):
            band_power(freqs, np.ones(65), BandDefinition("sliver", 10.2, 10.8))


class TestPsdFeature:
    def test_matched_baseline_gives_near_zero(self):
        rng = np.random.default_rng(4)
        trial = rng.standard_normal((2, int(3 * FS)))
        baselines = [rng.standard_normal((2, int(3 * FS))) for _ in range(20)]
        band = band_by_name("alpha")
        base_powers = []
        for seg in baselines:
            freqs, psd = welch_psd(seg[0], FS)
            base_powers.append(band_power(freqs, psd, band))
        feat = psd_feature(trial, baselines, band, FS)
        assert abs(feat[0]) <= 2 * np.std(base_powers) + 1e-12

    def test_zero_baseline_equals_raw_band_power(self):
        rng = np.random.default_rng(5)
        trial = rng.standard_normal((2, int(3 * FS)))
        zero_base = [np.zeros_like(trial)]
        band = band_by_name("alpha")
        feat = psd_feature(trial, zero_base, band, FS)
        freqs, psd = welch_psd(trial[0], FS)
        assert feat[0] == pytest.approx(band_power(freqs, psd, band))

    def test_missing_baseline_rejected(self):
        with pytest.raises(FeatureError, match="baseline"):
            psd_feature(np.zeros((2, 384)), [], band_by_name("alpha"), FS)

    def test_planted_alpha_burst_detected_on_right_channel(self):
        rng = np.random.default_rng(6)
        t = np.arange(0, 3, 1 / FS)
        noise = 0.1
        trial = noise * rng.standard_normal((2, len(t)))
        trial[0] += np.sin(2 * np.pi * 10 * t)
        baselines = [noise * rng.standard_normal((2, len(t))) for _ in range(5)]
        alpha = psd_feature(trial, baselines, band_by_name("alpha"), FS)
        gamma = psd_feature(trial, baselines, band_by_name("gamma"), FS)
        assert alpha[0] > 10 * abs(alpha[1])
        assert alpha[0] > 10 * abs(gamma[0])


class TestPcc:
    def test_perfect_positive(self):
        assert pcc([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)

    def test_perfect_negative(self):
        assert pcc([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_four_point_case(self):
        assert pcc([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)

    def test_zero_variance_rejected(self):
        with pytest.raises(FeatureError, match="zero-variance"):
            pcc([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_symmetry_and_affine_equivariance(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            x = rng.standard_normal(40)
            y = rng.standard_normal(40)
            a = rng.uniform(-5, 5)
            if a == 0:
                continue
            b = rng.uniform(-5, 5)
            assert pcc(x, y) == pytest.approx(pcc(y, x), abs=1e-12)
            assert pcc(a * x + b, y) == pytest.approx(np.sign(a) * pcc(x, y), abs=1e-10)


class TestPlv:
    def test_identical_phases(self):
        ph = np.linspace(0, 20, 500)
        assert plv(ph, ph) == pytest.approx(1.0, abs=1e-9)

    def test_constant_lag(self):
        ph = np.linspace(0, 20, 500)
        assert plv(ph, ph - np.pi / 3) == pytest.approx(1.0, abs=1e-9)

    def test_uniform_random_phases_near_zero(self):
        rng = np.random.default_rng(8)
        a = rng.uniform(-np.pi, np.pi, 10_000)
        b = rng.uniform(-np.pi, np.pi, 10_000)
        assert plv(a, b) <= 0.05

    def test_length_mismatch_rejected(self):
        with pytest.raises(FeatureError):
            plv(np.zeros(10), np.zeros(11))

    def test_constant_offset_invariance(self):
        rng = np.random.default_rng(9)
        a = rng.uniform(-np.pi, np.pi, 300)
        b = rng.uniform(-np.pi, np.pi, 300)
        for c in (0.3, -2.0, 7.7):
            assert plv(a + c, b) == pytest.approx(plv(a, b), abs=1e-12)
            assert plv(a, b + c) == pytest.approx(plv(a, b), abs=1e-12)

    def test_subwindow_variant_on_constant_lag(self):
        ph = np.linspace(0, 40, 384)
        assert plv(ph, ph - 0.4, subwindow=64) == pytest.approx(1.0, abs=1e-9)


class TestTransferEntropy:
    def test_binary_copy_chain_is_one_bit(self):
        rng = np.random.default_rng(10)
        n = 10_000
        y = rng.integers(0, 2, n).astype(float)
        x = np.empty(n)
        x[0] = 0.0
        x[1:] = y[:-1]
        assert transfer_entropy(y, x, bins=2) == pytest.approx(1.0, abs=0.02)

    def test_matches_brute_force_evaluation(self):
        rng = np.random.default_rng(11)
        for trial in range(200):
            n = int(rng.integers(40, 51))
            if trial % 3 == 0:
                y = rng.integers(0, 2, n).astype(float)
                x = np.roll(y, 1)
            elif trial % 3 == 1:
                y = rng.integers(0, 2, n).astype(float)
                x = rng.integers(0, 2, n).astype(float)
            else:
                y = rng.standard_normal(n)
                x = 0.5 * np.roll(y, 1) + 0.5 * rng.standard_normal(n)
            if np.all(x == x[0]) or np.all(y == y[0]):
                continue
            est = transfer_entropy(y, x, bins=2)
            ref = brute_force_te_bits(y, x, bins=2)
            assert est == pytest.approx(max(ref, 0.0), abs=1e-12)

    def test_independent_series_vs_surrogates(self):
        rng = np.random.default_rng(12)
        a = rng.standard_normal(10_000)
        b = rng.standard_normal(10_000)
        est = transfer_entropy(a, b, bins=8)
        sur = te_surrogates(a, b, bins=8, n_surrogates=100, seed=0)
        # the raw plug-in estimate carries finite-sample bias; the surrogate
        # distribution measures exactly that bias
        assert abs(est - sur.mean()) <= 0.02
        assert est <= sur.mean() + 4 * sur.std()

    def test_nonnegative_always(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            n = int(rng.integers(200, 400))
            a = rng.standard_normal(n)
            b = rng.standard_normal(n)
            assert transfer_entropy(a, b, bins=4) >= 0.0

    def test_monotone_rescale_invariance(self):
        rng = np.random.default_rng(14)
        a = rng.standard_normal(2000)
        b = rng.standard_normal(2000)
        base = transfer_entropy(a, b, bins=8)
        assert transfer_entropy(np.exp(a), b, bins=8) == pytest.approx(base, abs=1e-12)
        assert transfer_entropy(a, 3 * b + 1, bins=8) == pytest.approx(base, abs=1e-12)

    def test_constant_series_flagged_not_raised(self):
        with pytest.warns(DegenerateSeriesWarning):
            value = transfer_entropy(np.ones(1000), np.arange(1000.0), bins=2)
        assert value == 0.0

    def test_undersampled_rejected(self):
        with pytest.raises(FeatureError, match="undersampled"):
            transfer_entropy(np.arange(100.0), np.arange(100.0), bins=8)

    def test_history_order_pinned_to_one(self):
        with pytest.raises(FeatureError, match="history"):
            transfer_entropy(np.arange(100.0), np.arange(100.0), bins=2, history=2)

    def test_directionality_on_lagged_copy(self):
        rng = np.random.default_rng(15)
        src = rng.standard_normal(4000)
        snk = np.roll(src, 1) + 0.1 * rng.standard_normal(4000)
        forward = transfer_entropy(src, snk, bins=4)
        backward = transfer_entropy(snk, src, bins=4)
        assert forward > 2 * backward


class TestConnectivityMatrix:
    def test_duplicated_channel_pcc_all_ones(self):
        rng = np.random.default_rng(16)
        x = rng.standard_normal(384)
        m = connectivity_matrix(np.stack([x, x]), "pcc")
        np.testing.assert_allclose(m.values, np.ones((2, 2)), atol=1e-12)

    def test_independent_noise_plv_small(self):
        rng = np.random.default_rng(17)
        data = rng.standard_normal((4, int(3 * FS)))
        m = connectivity_matrix(data, "plv")
        off = m.values[~np.eye(4, dtype=bool)]
        assert np.all(off <= 0.1)

    def test_te_directionality_between_channels(self):
        rng = np.random.default_rng(18)
        a = rng.standard_normal(4000)
        b = np.roll(a, 1) + 0.05 * rng.standard_normal(4000)
        m = te_matrix(np.stack([a, b]), bins=4)
        # entry (i, j) is flow j -> i; channel 1 lags channel 0
        assert m[1, 0] > m[0, 1]
        assert m[0, 0] == 0.0 and m[1, 1] == 0.0

    def test_pcc_plv_symmetric_unit_diagonal(self):
        rng = np.random.default_rng(19)
        data = rng.standard_normal((5, 600))
        for kind in ("pcc", "plv"):
            m = connectivity_matrix(data, kind).values
            np.testing.assert_array_equal(m, m.T)
            np.testing.assert_allclose(np.diag(m), 1.0)

    def test_te_asymmetric_on_lag_coupled_inputs(self):
        rng = np.random.default_rng(20)
        a = rng.standard_normal(3000)
        data = np.stack([a, 0.8 * np.roll(a, 1) + 0.2 * rng.standard_normal(3000)])
        m = te_matrix(data, bins=4)
        assert not np.allclose(m, m.T)

    def test_estimator_error_names_channel_pair(self):
        data = np.vstack([np.ones(400), np.arange(400.0)])
        with pytest.raises(FeatureError, match=r"sink=|source="):
            te_matrix(data, bins=16)  # undersampled for 16 bins

    def test_zero_variance_channel_named(self):
        data = np.vstack([np.ones(400), np.arange(400.0)])
        with pytest.raises(FeatureError, match=r"\[0\]"):
            pcc_matrix(data)

    def test_matrix_estimators_match_scalar_estimators(self):
        rng = np.random.default_rng(21)
        data = rng.standard_normal((3, 500))
        m = pcc_matrix(data)
        for i in range(3):
            for j in range(i + 1, 3):
                assert m[i, j] == pytest.approx(pcc(data[i], data[j]), abs=1e-10)
        from neurograph.signals import analytic_phases

        phases = analytic_phases(data)
        p = plv_matrix(phases)
        for i in range(3):
            for j in range(i + 1, 3):
                assert p[i, j] == pytest.approx(plv(phases[i], phases[j]), abs=1e-10)

    def test_kind_validation(self):
        with pytest.raises(FeatureError, match="kind"):
            connectivity_matrix(np.zeros((2, 100)), "coherence")
        with pytest.raises(FeatureError):
            ConnectivityMatrix(values=np.zeros((2, 3)), kind="pcc")
