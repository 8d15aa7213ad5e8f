"""Time-series primitives: recordings, segmentation, band-pass filtering, phase.

All filtering is zero-phase: a symmetric (type-I) windowed-sinc FIR is applied
with reflection padding and exact group-delay compensation, so band-limited
content keeps both its amplitude and its phase. This matters because the
phase-locking estimator downstream is only meaningful on phase-faithful
signals.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sp_signal

from .bands import BandDefinition


class SignalError(ValueError):
    """Invalid signal input (too short, degenerate, out of range)."""


@dataclass
class MultichannelRecording:
    """One trial of multichannel EEG.

    data : (n_channels, n_samples) float array, microvolt scale
    fs : sampling rate in Hz
    baseline_samples : leading samples that belong to the pre-stimulus baseline
    channel_names : one unique label per channel
    """

    data: np.ndarray
    fs: float
    baseline_samples: int
    channel_names: list = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise SignalError(f"data must be 2-D (channels x samples), got {self.data.ndim}-D")
        n_ch, n_samp = self.data.shape
        if n_ch < 2:
            raise SignalError(f"need at least 2 channels, got {n_ch}")
        if self.fs <= 0:
            raise SignalError(f"fs must be positive, got {self.fs}")
        if not 0 <= self.baseline_samples < n_samp:
            raise SignalError(
                f"baseline_samples={self.baseline_samples} out of range for {n_samp} samples"
            )
        if not self.channel_names:
            self.channel_names = [f"ch{i}" for i in range(n_ch)]
        if len(self.channel_names) != n_ch:
            raise SignalError("channel_names length must equal n_channels")
        if len(set(self.channel_names)) != n_ch:
            raise SignalError("channel_names must be unique")

    @property
    def n_channels(self):
        return self.data.shape[0]

    @property
    def n_samples(self):
        return self.data.shape[1]

    def baseline(self):
        """The pre-stimulus portion, (n_channels, baseline_samples)."""
        return self.data[:, : self.baseline_samples]

    def stimulus(self):
        """The post-baseline portion."""
        return self.data[:, self.baseline_samples :]


@dataclass
class BandSegment:
    """One band-filtered window of a trial, (n_channels, n_samples)."""

    data: np.ndarray
    band: BandDefinition
    fs: float
    origin: tuple = (None, None)  # (trial id, segment index)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if not np.all(np.isfinite(self.data)):
            raise SignalError("segment contains non-finite values")


def segment_bounds(n_samples, fs, win_s, hop_s, offset=0):
    """Start/stop sample pairs for sliding windows over ``n_samples`` samples.

    Returns [(start, stop), ...] with starts spaced round(hop_s*fs) samples
    apart, beginning at ``offset``. Raises SignalError if not even one window
    fits.
    """
    if win_s <= 0:
        raise SignalError(f"win_s must be positive, got {win_s}")
    if not 0 < hop_s <= win_s:
        raise SignalError(f"need 0 < hop_s <= win_s, got hop_s={hop_s}, win_s={win_s}")
    win_n = int(round(win_s * fs))
    hop_n = int(round(hop_s * fs))
    if n_samples < win_n:
        raise SignalError(
            f"too short: {n_samples} samples < one {win_s} s window ({win_n} samples)"
        )
    count = (n_samples - win_n) // hop_n + 1
    return [(offset + k * hop_n, offset + k * hop_n + win_n) for k in range(count)]


def segment(rec, win_s=3.0, hop_s=0.5):
    """Sliding-window sample ranges over the post-baseline portion of a trial.

    Windows cover only the stimulus span; the baseline is segmented separately
    (see :func:`segment_baseline`). Returns a list of (start, stop) sample
    index pairs into ``rec.data``.
    """
    n_post = rec.n_samples - rec.baseline_samples
    return segment_bounds(n_post, rec.fs, win_s, hop_s, offset=rec.baseline_samples)


def segment_baseline(rec, win_s=3.0, hop_s=0.5):
    """Sliding-window sample ranges over the pre-stimulus baseline."""
    if rec.baseline_samples == 0:
        raise SignalError("recording has no baseline span")
    return segment_bounds(rec.baseline_samples, rec.fs, win_s, hop_s, offset=0)


def _transition_width(band, fs):
    """Transition width (Hz) for a band's filter edges.

    Narrow bands and low edges need proportionally sharp transitions so that
    the passband keeps a flat region; 1 Hz is the sharpest we ever ask for.
    """
    width = band.hi - band.lo
    if band.lo <= 0:
        return max(1.0, band.hi / 2)
    return max(1.0, min(band.lo, width) / 2)


def filter_taps(band, fs):
    """Design the symmetric FIR taps for one band at sampling rate fs.

    Hamming windowed-sinc; the tap count scales inversely with the band's
    transition width and is forced odd so the group delay is an integer.
    """
    band.validate_for_rate(fs)
    delta_f = _transition_width(band, fs)
    numtaps = int(np.ceil(3.3 * fs / delta_f))
    numtaps = min(numtaps, int(round(3.5 * fs)))
    if numtaps % 2 == 0:
        numtaps += 1
    numtaps = max(numtaps, 9)
    if band.lo <= 0:
        return sp_signal.firwin(numtaps, band.hi, window="hamming", fs=fs)
    return sp_signal.firwin(
        numtaps, [band.lo, band.hi], window="hamming", pass_zero=False, fs=fs
    )


def filter_half_length(band, fs):
    """Half-length of the band's FIR in samples; the edge-transient guard."""
    return len(filter_taps(band, fs)) // 2


def bandpass(x, band, fs):
    """Zero-phase band-pass of ``x`` (1-D, or channels x samples) into ``band``.

    The signal is reflect-padded by the filter half-length, convolved with the
    symmetric FIR, and cropped back with the group delay removed, so the output
    has the same shape as the input and no phase distortion. A band with
    lo == 0 is treated as a low-pass after mean removal (DC is artifact, not
    signal).
    """
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[np.newaxis, :]
    if x.ndim != 2:
        raise SignalError(f"expected 1-D or 2-D input, got {x.ndim}-D")
    taps = filter_taps(band, fs)
    half = len(taps) // 2
    if x.shape[1] <= half:
        raise SignalError(
            f"signal too short ({x.shape[1]} samples) for the {band.name} filter "
            f"(half-length {half})"
        )
    if band.lo <= 0:
        x = x - x.mean(axis=1, keepdims=True)
    # Odd reflection about the end points suppresses startup transients.
    left = 2 * x[:, :1] - x[:, half:0:-1]
    right = 2 * x[:, -1:] - x[:, -2 : -half - 2 : -1]
    padded = np.concatenate([left, x, right], axis=1)
    out = sp_signal.fftconvolve(padded, taps[np.newaxis, :], mode="valid", axes=1)
    return out[0] if squeeze else out


def instantaneous_phase(x):
    """Instantaneous phase of a band-limited 1-D signal, in (-pi, pi].

    The angle of the analytic signal (negative frequencies removed). No
    unwrapping is applied. Raises on all-zero input, whose phase is undefined.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise SignalError(f"expected a single-channel 1-D signal, got {x.ndim}-D")
    if len(x) < 8:
        raise SignalError(f"signal too short for phase extraction ({len(x)} < 8 samples)")
    if not np.any(x):
        raise SignalError("all-zero signal has undefined phase")
    return np.angle(sp_signal.hilbert(x))


def analytic_phases(data):
    """Per-channel instantaneous phase for a (channels x samples) array."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise SignalError(f"expected channels x samples, got {data.ndim}-D")
    if data.shape[1] < 8:
        raise SignalError("signals too short for phase extraction")
    zero = ~np.any(data, axis=1)
    if np.any(zero):
        raise SignalError(f"all-zero channel(s) {np.flatnonzero(zero).tolist()}: phase undefined")
    return np.angle(sp_signal.hilbert(data, axis=1))
