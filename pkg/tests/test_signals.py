import numpy as np
import pytest
from scipy.signal import freqz

from neurograph.bands import DEFAULT_BANDS, BandDefinition, band_by_name
from neurograph.signals import (
    MultichannelRecording,
    SignalError,
    analytic_phases,
    bandpass,
    filter_taps,
    instantaneous_phase,
    segment,
    segment_baseline,
    segment_bounds,
)

FS = 128.0


def make_recording(trial_s=60.0, baseline_s=5.0, fs=FS, n_channels=2, seed=0):
    rng = np.random.default_rng(seed)
    n = int(round((trial_s + baseline_s) * fs))
    return MultichannelRecording(
        data=rng.standard_normal((n_channels, n)),
        fs=fs,
        baseline_samples=int(round(baseline_s * fs)),
    )


class TestSegmentation:
    def test_60s_trial_gives_115_segments(self):
        rec = make_recording(trial_s=60.0)
        assert len(segment(rec, 3.0, 0.5)) == 115

    def test_exactly_one_window(self):
        rec = make_recording(trial_s=3.0)
        assert len(segment(rec, 3.0, 0.5)) == 1

    def test_4s_trial_gives_3_segments(self):
        # start times 0.0, 0.5, 1.0 s are the only ones that fit
        rec = make_recording(trial_s=4.0)
        bounds = segment(rec, 3.0, 0.5)
        assert len(bounds) == 3
        starts = [a - rec.baseline_samples for a, _ in bounds]
        assert starts == [0, 64, 128]

    def test_too_short_raises(self):
        rec = make_recording(trial_s=2.0)
        with pytest.raises(SignalError, match="too short"):
            segment(rec, 3.0, 0.5)

    def test_hop_spacing_and_coverage(self):
        rec = make_recording(trial_s=10.0)
        bounds = segment(rec, 3.0, 0.5)
        starts = np.array([a for a, _ in bounds])
        assert np.all(np.diff(starts) == round(0.5 * FS))
        assert all(a >= rec.baseline_samples and b <= rec.n_samples for a, b in bounds)

    def test_count_formula_matches_brute_enumeration(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            fs = rng.choice([100.0, 128.0, 250.0, 256.0, 500.0])
            win = rng.uniform(0.5, 5.0)
            hop = rng.uniform(0.1, win)
            total_s = win + rng.uniform(0, 30.0)
            n = int(round(total_s * fs))
            win_n, hop_n = int(round(win * fs)), int(round(hop * fs))
            if hop_n == 0 or n < win_n:
                continue
            bounds = segment_bounds(n, fs, win, hop)
            brute = sum(1 for s in range(0, n, hop_n) if s % hop_n == 0 and s + win_n <= n)
            assert len(bounds) == brute

    def test_baseline_segmented_separately(self):
        rec = make_recording(trial_s=60.0, baseline_s=5.0)
        base = segment_baseline(rec, 3.0, 0.5)
        assert len(base) == 5  # floor((5-3)/0.5)+1
        assert all(b <= rec.baseline_samples for _, b in base)


class TestRecordingInvariants:
    def test_rejects_single_channel(self):
        with pytest.raises(SignalError):
            MultichannelRecording(np.zeros((1, 100)), fs=FS, baseline_samples=0)

    def test_rejects_duplicate_names(self):
        with pytest.raises(SignalError, match="unique"):
            MultichannelRecording(
                np.zeros((2, 100)), fs=FS, baseline_samples=0, channel_names=["a", "a"]
            )

    def test_rejects_baseline_past_end(self):
        with pytest.raises(SignalError):
            MultichannelRecording(np.zeros((2, 100)), fs=FS, baseline_samples=100)


class TestBandpass:
    def test_passband_tone_amplitude_preserved(self):
        t = np.arange(0, 60, 1 / FS)
        y = bandpass(np.sin(2 * np.pi * 10 * t), band_by_name("alpha"), FS)
        amp = np.max(np.abs(y[int(2 * FS) : -int(2 * FS)]))
        assert 0.95 <= amp <= 1.05

    def test_stopband_tone_suppressed(self):
        t = np.arange(0, 60, 1 / FS)
        y = bandpass(np.sin(2 * np.pi * 10 * t), band_by_name("gamma"), FS)
        assert np.sqrt(np.mean(y**2)) <= 0.01

    def test_disjoint_band_outputs_decorrelated(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(int(60 * FS))
        x -= x.mean()
        pairs = [("delta", "gamma"), ("theta", "beta"), ("alpha", "gamma")]
        for lo_name, hi_name in pairs:
            a = bandpass(x, band_by_name(lo_name), FS)
            b = bandpass(x, band_by_name(hi_name), FS)
            r = np.corrcoef(a, b)[0, 1]
            assert abs(r) <= 0.1, (lo_name, hi_name, r)

    def test_linearity(self):
        rng = np.random.default_rng(5)
        u = rng.standard_normal(int(10 * FS))
        v = rng.standard_normal(int(10 * FS))
        band = band_by_name("beta")
        lhs = bandpass(2.5 * u - 0.7 * v, band, FS)
        rhs = 2.5 * bandpass(u, band, FS) - 0.7 * bandpass(v, band, FS)
        rel = np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs))
        assert rel <= 1e-9

    def test_zero_phase(self):
        t = np.arange(0, 30, 1 / FS)
        x = np.cos(2 * np.pi * 10 * t)
        y = bandpass(x, band_by_name("alpha"), FS)
        sl = slice(int(2 * FS), int(4 * FS))
        d = np.angle(np.exp(1j * (instantaneous_phase(y)[sl] - instantaneous_phase(x)[sl])))
        assert np.abs(d).max() <= 0.05

    def test_stopband_attenuation_spec(self):
        from neurograph.signals import _transition_width

        for band in DEFAULT_BANDS:
            taps = filter_taps(band, FS)
            w, h = freqz(taps, worN=16384, fs=FS)
            df = _transition_width(band, FS)
            probes = [band.hi + df]
            if band.lo > 0:
                probes.append(band.lo - df)
            for p in probes:
                if 0 < p < FS / 2:
                    atten = -20 * np.log10(np.abs(h[np.argmin(np.abs(w - p))]) + 1e-300)
                    assert atten >= 40, (band.name, p, atten)

    def test_delta_is_lowpass_with_mean_removed(self):
        x = np.full(1024, 3.0) + np.sin(2 * np.pi * 1.5 * np.arange(1024) / FS)
        y = bandpass(x, band_by_name("delta"), FS)
        # DC removed, the 1.5 Hz component preserved
        assert abs(np.mean(y)) < 0.05
        amp = np.max(np.abs(y[256:-256]))
        assert 0.9 <= amp <= 1.1

    def test_band_above_nyquist_rejected(self):
        with pytest.raises(ValueError, match="Nyquist"):
            bandpass(np.zeros(512), BandDefinition("bad", 30.0, 64.0), FS)

    def test_matrix_input_filters_each_channel(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((3, int(10 * FS)))
        band = band_by_name("alpha")
        out = bandpass(x, band, FS)
        assert out.shape == x.shape
        for ch in range(3):
            np.testing.assert_allclose(out[ch], bandpass(x[ch], band, FS), atol=1e-12)


class TestInstantaneousPhase:
    def test_cosine_constant_increment(self):
        t = np.arange(0, 3, 1 / FS)
        ph = instantaneous_phase(np.cos(2 * np.pi * 5 * t))
        inc = np.angle(np.exp(1j * np.diff(ph)))
        expected = 2 * np.pi * 5 / FS
        assert np.abs(inc[5:-5] - expected).max() <= 0.01

    def test_sine_is_quadrature_of_cosine(self):
        t = np.arange(0, 3, 1 / FS)
        ph_c = instantaneous_phase(np.cos(2 * np.pi * 5 * t))
        ph_s = instantaneous_phase(np.sin(2 * np.pi * 5 * t))
        off = np.angle(np.exp(1j * (ph_s - ph_c)))
        assert np.abs(off[10:-10] + np.pi / 2).max() <= 0.02

    def test_chirp_frequency_rises_monotonically(self):
        # 5 -> 10 Hz linear chirp; the block-averaged phase-difference
        # estimate must rise strictly and track the analytic derivative.
        t = np.arange(0, 3, 1 / FS)
        k = (10 - 5) / 3.0
        ph = instantaneous_phase(np.cos(2 * np.pi * (5 * t + k / 2 * t**2)))
        inst = np.diff(np.unwrap(ph)) * FS / (2 * np.pi)
        interior = inst[16:-16]
        blocks = interior[: len(interior) // 32 * 32].reshape(-1, 32).mean(axis=1)
        assert np.all(np.diff(blocks) > 0)
        t_mid = (t[1:] + t[:-1]) / 2
        truth = (5 + k * t_mid)[16:-16]
        truth_blocks = truth[: len(interior) // 32 * 32].reshape(-1, 32).mean(axis=1)
        assert np.abs(blocks - truth_blocks).max() <= 0.05

    def test_negation_shifts_phase_by_pi(self):
        rng = np.random.default_rng(2)
        x = bandpass(rng.standard_normal(1024), band_by_name("alpha"), FS)
        d = instantaneous_phase(x)[10:-10] - instantaneous_phase(-x)[10:-10]
        dev = np.abs(np.angle(np.exp(1j * (d - np.pi))))
        assert dev.max() <= 1e-8

    def test_phases_in_half_open_interval(self):
        rng = np.random.default_rng(4)
        ph = instantaneous_phase(rng.standard_normal(512))
        assert np.all(ph > -np.pi) and np.all(ph <= np.pi)

    def test_zero_signal_rejected(self):
        with pytest.raises(SignalError, match="zero"):
            instantaneous_phase(np.zeros(64))

    def test_too_short_rejected(self):
        with pytest.raises(SignalError):
            instantaneous_phase(np.ones(4))

    def test_multichannel_matches_single(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((3, 256))
        ph = analytic_phases(x)
        for ch in range(3):
            np.testing.assert_allclose(ph[ch], instantaneous_phase(x[ch]), atol=1e-12)
