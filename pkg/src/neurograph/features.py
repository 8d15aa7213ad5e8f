"""Per-band feature estimators: Welch PSD, correlation, phase locking, transfer entropy.

Scalar estimators operate on single series; :func:`connectivity_matrix` lifts
the pairwise ones to full channels-by-channels matrices.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .signals import SignalError, analytic_phases


class FeatureError(ValueError):
    """Invalid input to a feature estimator."""


class DegenerateSeriesWarning(UserWarning):
    """A constant (zero-information) series was passed to an estimator."""


@dataclass(frozen=True)
class WelchConfig:
    """Averaged-periodogram settings.

    subwin_s : sub-window length in seconds (1 s gives a 1 Hz grid)
    overlap_frac : fractional overlap between sub-windows, in [0, 1)
    window_fn : taper name ('hann', 'hamming', or 'boxcar')
    """

    subwin_s: float = 1.0
    overlap_frac: float = 0.5
    window_fn: str = "hann"

    def __post_init__(self):
        if self.subwin_s <= 0:
            raise FeatureError(f"subwin_s must be positive, got {self.subwin_s}")
        if not 0 <= self.overlap_frac < 1:
            raise FeatureError(f"overlap_frac must be in [0, 1), got {self.overlap_frac}")
        if self.window_fn not in ("hann", "hamming", "boxcar"):
            raise FeatureError(f"unknown window_fn {self.window_fn!r}")


def _taper(name, n):
    # Periodic tapers, appropriate for spectral averaging.
    if name == "hann":
        return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    if name == "hamming":
        return 0.54 - 0.46 * np.cos(2 * np.pi * np.arange(n) / n)
    return np.ones(n)


def welch_psd(x, fs, cfg=None):
    """One-sided power spectral density of a single-channel segment.

    Periodograms of tapered sub-windows are normalized by the taper power and
    averaged; the result is scaled to power per Hz, so summing PSD * df over
    the grid recovers the signal power.

    Returns (freqs, psd), both 1-D with len = subwindow//2 + 1.
    """
    cfg = cfg or WelchConfig()
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise FeatureError(f"expected a 1-D segment, got {x.ndim}-D")
    n = int(round(cfg.subwin_s * fs))
    if n < 2:
        raise FeatureError(f"sub-window of {cfg.subwin_s} s is below 2 samples at fs={fs}")
    if len(x) < n:
        raise FeatureError(f"segment ({len(x)} samples) shorter than sub-window ({n})")
    step = max(1, int(round(n * (1 - cfg.overlap_frac))))
    w = _taper(cfg.window_fn, n)
    w_power = np.mean(w**2)
    starts = range(0, len(x) - n + 1, step)
    acc = np.zeros(n // 2 + 1)
    for s in starts:
        spec = np.fft.rfft(x[s : s + n] * w)
        acc += np.abs(spec) ** 2
    psd = acc / (len(list(starts)) * n * w_power * fs)
    # One-sided: double everything except DC and (for even n) Nyquist.
    psd[1:] *= 2
    if n % 2 == 0:
        psd[-1] /= 2
    freqs = np.arange(n // 2 + 1) * fs / n
    return freqs, psd


def band_power(freqs, psd, band):
    """Mean PSD over the bins whose center frequency lies inside the band.

    The DC bin never counts: a lo == 0 band starts at the first positive bin.
    """
    mask = (freqs >= band.lo) & (freqs <= band.hi) & (freqs > 0)
    if not np.any(mask):
        raise FeatureError(
            f"band {band.name} [{band.lo}, {band.hi}] Hz covers no spectral bins"
        )
    return float(np.mean(psd[mask]))


def psd_feature(trial_segment, baseline_segments, band, fs, cfg=None):
    """Baseline-subtracted band power, one value per channel.

    trial_segment : (n_channels, n_samples)
    baseline_segments : non-empty list of (n_channels, n_samples) arrays from
        the pre-stimulus span; their mean band power is subtracted per channel.
    """
    if baseline_segments is None or len(baseline_segments) == 0:
        raise FeatureError("baseline segments are required; refusing a zero-baseline fallback")
    trial_segment = np.atleast_2d(np.asarray(trial_segment, dtype=float))
    out = np.empty(trial_segment.shape[0])
    for ch in range(trial_segment.shape[0]):
        freqs, psd = welch_psd(trial_segment[ch], fs, cfg)
        trial_bp = band_power(freqs, psd, band)
        base_bp = 0.0
        for seg in baseline_segments:
            seg = np.atleast_2d(np.asarray(seg, dtype=float))
            freqs_b, psd_b = welch_psd(seg[ch], fs, cfg)
            base_bp += band_power(freqs_b, psd_b, band)
        out[ch] = trial_bp - base_bp / len(baseline_segments)
    return out


def pcc(x, y):
    """Pearson correlation coefficient between two equal-length series."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FeatureError("pcc needs two 1-D series of equal length")
    if len(x) < 2:
        raise FeatureError("pcc needs at least 2 samples")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = np.sqrt(np.mean(xd**2))
    sy = np.sqrt(np.mean(yd**2))
    if sx == 0 or sy == 0:
        raise FeatureError("pcc undefined for a zero-variance series")
    r = float(np.mean(xd * yd) / (sx * sy))
    return min(1.0, max(-1.0, r))


def plv(phase_x, phase_y, subwindow=None):
    """Phase-locking value of two phase series, in [0, 1].

    The magnitude of the mean unit phasor of the phase difference. With
    ``subwindow`` set (samples), phase differences are first circularly
    averaged within consecutive non-overlapping sub-windows and the phasor
    mean is taken over those, one value per sub-window.
    """
    phase_x = np.asarray(phase_x, dtype=float)
    phase_y = np.asarray(phase_y, dtype=float)
    if phase_x.shape != phase_y.shape or phase_x.ndim != 1:
        raise FeatureError("plv needs two 1-D phase series of equal length")
    if len(phase_x) < 1:
        raise FeatureError("plv needs at least one sample")
    phasors = np.exp(1j * (phase_x - phase_y))
    if subwindow is not None:
        if subwindow < 1 or subwindow > len(phasors):
            raise FeatureError(f"subwindow {subwindow} out of range")
        m = len(phasors) // subwindow
        means = phasors[: m * subwindow].reshape(m, subwindow).mean(axis=1)
        degenerate = np.abs(means) == 0
        if np.any(degenerate):
            raise FeatureError("sub-window circular mean vanished; phase difference undefined")
        phasors = means / np.abs(means)
    return float(np.abs(np.mean(phasors)))


def quantile_bins(x, bins):
    """Assign each sample of ``x`` to one of ``bins`` equiprobable bins.

    Rank-based (left empirical CDF), so ties always share a bin and any
    strictly monotone rescaling of ``x`` leaves the assignment unchanged.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    ranks = np.searchsorted(np.sort(x), x, side="left")
    return np.minimum((ranks * bins) // n, bins - 1)


def transfer_entropy(y, x, bins=8, history=1):
    """Directed information flow from series ``y`` into series ``x``, in bits.

    Plug-in estimate over the joint histogram of (x_next, x_prev, y_prev),
    with equiprobable (quantile) binning per series, so any strictly monotone
    rescaling of the raw data leaves the estimate unchanged. Nonnegative by
    construction. Constant input yields 0 with a DegenerateSeriesWarning.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FeatureError("transfer_entropy needs two 1-D series of equal length")
    if history != 1:
        raise FeatureError(f"only history order 1 is supported, got {history}")
    if bins < 2:
        raise FeatureError(f"bins must be >= 2, got {bins}")
    if len(x) < 10 * bins**2:
        raise FeatureError(
            f"series of length {len(x)} is hopelessly undersampled for {bins} bins "
            f"(need >= {10 * bins**2})"
        )
    if np.all(x == x[0]) or np.all(y == y[0]):
        warnings.warn("constant series carries no information", DegenerateSeriesWarning)
        return 0.0
    xb = quantile_bins(x, bins)
    yb = quantile_bins(y, bins)
    return _te_from_codes(xb[1:], xb[:-1], yb[:-1], bins)


def _te_from_codes(x_next, x_prev, y_prev, bins):
    """Plug-in TE (bits) from pre-binned integer code triples."""
    n = len(x_next)
    code = (x_next * bins + x_prev) * bins + y_prev
    c_xxy = np.bincount(code, minlength=bins**3).reshape(bins, bins, bins)
    p_xxy = c_xxy / n
    p_xy = p_xxy.sum(axis=0)  # (x_prev, y_prev)
    p_xx = p_xxy.sum(axis=2)  # (x_next, x_prev)
    p_x = p_xxy.sum(axis=(0, 2))  # (x_prev,)
    with np.errstate(divide="ignore", invalid="ignore"):
        num = p_xxy * p_x[np.newaxis, :, np.newaxis]
        den = p_xx[:, :, np.newaxis] * p_xy[np.newaxis, :, :]
        ratio = np.where(p_xxy > 0, num / den, 1.0)
        te = np.sum(np.where(p_xxy > 0, p_xxy * np.log2(ratio), 0.0))
    return max(float(te), 0.0)


def te_surrogates(y, x, bins=8, n_surrogates=100, seed=0, method="permute"):
    """Transfer-entropy null distribution from resampled sources.

    'permute' shuffles the source outright (right for i.i.d.-like data);
    'shift' applies random circular time shifts, preserving the source's
    autocorrelation while destroying its alignment with the target, which is
    the appropriate null for band-limited signals.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if method not in ("permute", "shift"):
        raise FeatureError(f"unknown surrogate method {method!r}")
    rng = np.random.default_rng(seed)
    out = np.empty(n_surrogates)
    n = len(y)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSeriesWarning)
        for i in range(n_surrogates):
            if method == "permute":
                y_s = rng.permutation(y)
            else:
                y_s = np.roll(y, int(rng.integers(n // 10, n - n // 10)))
            out[i] = transfer_entropy(y_s, x, bins=bins)
    return out


VALID_KINDS = ("pcc", "plv", "te")


@dataclass
class ConnectivityMatrix:
    """Pairwise feature matrix for one band.

    PCC/PLV are symmetric with unit diagonal; TE is directed, zero diagonal,
    with entry (i, j) = flow from channel j into channel i.
    """

    values: np.ndarray
    kind: str
    band: object = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise FeatureError("connectivity values must be square")
        if self.kind not in VALID_KINDS:
            raise FeatureError(f"kind must be one of {VALID_KINDS}, got {self.kind!r}")


def pcc_matrix(data):
    """Pearson correlation between all channel pairs of (channels x samples)."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise FeatureError("need at least 2 channels")
    sd = data.std(axis=1)
    dead = np.flatnonzero(sd == 0)
    if dead.size:
        raise FeatureError(f"zero-variance channel(s) {dead.tolist()}: pcc undefined")
    m = np.corrcoef(data)
    m = np.clip((m + m.T) / 2, -1.0, 1.0)
    np.fill_diagonal(m, 1.0)
    return m


def plv_matrix(phases, subwindow=None):
    """Phase-locking value between all channel pairs of (channels x samples) phases."""
    phases = np.asarray(phases, dtype=float)
    if phases.ndim != 2 or phases.shape[0] < 2:
        raise FeatureError("need at least 2 channels")
    z = np.exp(1j * phases)
    if subwindow is None:
        m = np.abs(z @ z.conj().T) / phases.shape[1]
    else:
        n_ch = phases.shape[0]
        m = np.empty((n_ch, n_ch))
        for i in range(n_ch):
            m[i, i] = 1.0
            for j in range(i + 1, n_ch):
                m[i, j] = m[j, i] = plv(phases[i], phases[j], subwindow=subwindow)
    m = np.clip((m + m.T) / 2, 0.0, 1.0)
    np.fill_diagonal(m, 1.0)
    return m


def te_matrix(data, bins=8, history=1):
    """Directed transfer entropy for all ordered channel pairs.

    Entry (i, j) is the flow from channel j into channel i; the diagonal is 0
    by convention. Estimator errors are re-raised with the channel pair
    attached.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise FeatureError("need at least 2 channels")
    n_ch = data.shape[0]
    m = np.zeros((n_ch, n_ch))
    for i in range(n_ch):
        for j in range(n_ch):
            if i == j:
                continue
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", DegenerateSeriesWarning)
                    m[i, j] = transfer_entropy(data[j], data[i], bins=bins, history=history)
            except FeatureError as exc:
                raise FeatureError(f"te entry (sink={i}, source={j}): {exc}") from exc
    return m


def connectivity_matrix(segment, kind, bins=8, plv_subwindow=None):
    """Pairwise connectivity of a band-filtered segment, as a ConnectivityMatrix.

    ``segment`` is a BandSegment or a bare (channels x samples) array. PLV
    extracts per-channel phases internally via the analytic signal.
    """
    data = segment.data if hasattr(segment, "data") else np.asarray(segment, dtype=float)
    band = getattr(segment, "band", None)
    if kind == "pcc":
        values = pcc_matrix(data)
    elif kind == "plv":
        try:
            phases = analytic_phases(data)
        except SignalError as exc:
            raise FeatureError(str(exc)) from exc
        values = plv_matrix(phases, subwindow=plv_subwindow)
    elif kind == "te":
        values = te_matrix(data, bins=bins)
    else:
        raise FeatureError(f"kind must be one of {VALID_KINDS}, got {kind!r}")
    return ConnectivityMatrix(values=values, kind=kind, band=band)
