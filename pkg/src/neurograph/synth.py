"""Synthetic EEG with planted, estimator-verifiable connectivity structure.

Every channel carries a narrowband oscillator over 1/f background noise, with
identical marginal statistics in both classes, so band powers carry no class
information. What differs is the cross-channel structure on a designated
electrode subset:

* 'like' trials: the subset shares one common phase (random-walk carrier)
  with small per-channel jitter sized to hit the planted phase-locking level,
  a common slow amplitude modulator, and a lag-1 directed drive from a source
  channel into a sink channel.
* 'dislike' trials: the same oscillator process per channel, but with
  independent carriers (random frequency offsets and independent phase
  walks), so the subset is incoherent.

The regression variant ties the coupling level monotonically to the trial's
preference score instead of its class.
"""

from dataclasses import dataclass, field

import numpy as np

from .bands import BandDefinition, band_by_name
from .corpus import DISLIKE_MAX_SCORE, TrialRecord, label
from .signals import MultichannelRecording

# Default coupled subset in the 32-channel montage order: a mix of frontal,
# central, and parietal sites on both hemispheres.
DEFAULT_COUPLED_CHANNELS = (2, 6, 10, 13, 18, 24, 28, 31)


class SynthesisError(ValueError):
    """Unrealizable synthesis plan."""


@dataclass
class SynthesisPlan:
    """Knobs for the synthetic corpus.

    plv_target is the planted phase-locking level of the coupled subset in
    'like' trials (infeasible above 0.98); pcc_mix scales the common amplitude
    modulation; te_gain the lag-1 source-to-sink drive; noise_floor the 1/f
    background amplitude relative to the oscillators.
    """

    n_subjects: int = 32
    n_videos: int = 40
    trial_s: float = 60.0
    baseline_s: float = 5.0
    fs: float = 128.0
    carrier_band: BandDefinition = field(default_factory=lambda: band_by_name("alpha"))
    plv_target: float = 0.9
    pcc_mix: float = 0.5
    te_gain: float = 0.5
    noise_floor: float = 0.4
    dislike_fraction: float = 0.3352
    coupled_channels: tuple = DEFAULT_COUPLED_CHANNELS
    n_channels: int = 32
    phase_linewidth_hz: float = 0.8
    freq_spread_hz: float = 1.5
    score_coupled: bool = False  # regression corpus: coupling follows the score
    seed: int = 0

    def __post_init__(self):
        if self.n_subjects < 1 or self.n_videos < 1:
            raise SynthesisError("need at least one subject and one video")
        if self.plv_target > 0.98:
            raise SynthesisError(
                f"plv_target {self.plv_target} is infeasible (max 0.98): residual "
                "estimator noise alone costs a couple of percent"
            )
        for name in ("plv_target", "pcc_mix", "te_gain"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise SynthesisError(f"{name} must lie in [0, 1], got {v}")
        if self.carrier_band.hi >= self.fs / 2:
            raise SynthesisError("carrier band exceeds Nyquist")
        if len(self.coupled_channels) < 2:
            raise SynthesisError("need at least two coupled channels")
        if max(self.coupled_channels) >= self.n_channels:
            raise SynthesisError("coupled channel index out of range")
        if not 0 < self.dislike_fraction < 1:
            raise SynthesisError("dislike_fraction must be in (0, 1)")

    @property
    def carrier_hz(self):
        return (self.carrier_band.lo + self.carrier_band.hi) / 2

    @property
    def n_trials(self):
        return self.n_subjects * self.n_videos


def pink_noise(rng, n_channels, n_samples, fs):
    """1/f-power noise, independent per channel, unit standard deviation."""
    freqs = np.fft.rfftfreq(n_samples, d=1 / fs)
    shaping = 1.0 / np.sqrt(np.maximum(freqs, 1.0))
    shaping[0] = 0.0
    spectrum = (
        rng.standard_normal((n_channels, len(freqs)))
        + 1j * rng.standard_normal((n_channels, len(freqs)))
    ) * shaping
    x = np.fft.irfft(spectrum, n=n_samples, axis=1)
    sd = x.std(axis=1, keepdims=True)
    return x / np.where(sd > 0, sd, 1.0)


def _slow_noise(rng, n, fs, cutoff_hz, std):
    """Low-passed Gaussian noise with the requested standard deviation."""
    freqs = np.fft.rfftfreq(n, d=1 / fs)
    spectrum = rng.standard_normal(len(freqs)) + 1j * rng.standard_normal(len(freqs))
    spectrum[freqs > cutoff_hz] = 0.0
    spectrum[0] = 0.0
    x = np.fft.irfft(spectrum, n=n)
    sd = x.std()
    return x * (std / sd) if sd > 0 else x


def _phase_walk(rng, n, fs, linewidth_hz, f_hz):
    """Carrier phase: 2*pi*f*t plus a random walk with the given linewidth."""
    step_sd = np.sqrt(2 * np.pi * linewidth_hz / fs)
    t = np.arange(n) / fs
    return 2 * np.pi * f_hz * t + np.cumsum(rng.standard_normal(n) * step_sd)

def jitter_sd_for_plv(plv_level):
    """Phase-jitter standard deviation that plants a given pairwise PLV.

    For independent Gaussian jitter of variance s^2 on each channel, the mean
    phasor of the pairwise difference has magnitude exp(-s^2).
    """
    plv_level = min(max(plv_level, 1e-3), 0.999)
    return np.sqrt(-np.log(plv_level))


def _trial_scores(plan, rng):
    """Preference scores for all trials.

    Classification corpora get a deterministic dislike count (rounded from
    the plan fraction, randomly placed) so realized class proportions match
    the plan; scores are then uniform within each class range. Regression
    corpora draw scores uniformly over the full scale.
    """
    n = plan.n_trials
    if plan.score_coupled:
        return rng.uniform(1.0, 9.0, n)
    n_dislike = int(round(plan.dislike_fraction * n))
    scores = np.empty(n)
    scores[:n_dislike] = rng.uniform(1.0, DISLIKE_MAX_SCORE, n_dislike)
    scores[n_dislike:] = rng.uniform(np.nextafter(DISLIKE_MAX_SCORE, 9.0), 9.0, n - n_dislike)
    rng.shuffle(scores)
    return scores


def _coupling_level(plan, score):
    """Planted PLV level for one trial."""
    if plan.score_coupled:
        lo, hi = 0.15, min(plan.plv_target + 0.05, 0.95)
        return lo + (hi - lo) * (score - 1.0) / 8.0
    return plan.plv_target if label(score) == 1 else 0.0


def _synthesize_trial(plan, rng, score):
    n = int(round((plan.baseline_s + plan.trial_s) * plan.fs))
    n_base = int(round(plan.baseline_s * plan.fs))
    n_ch = plan.n_channels
    fs = plan.fs
    coupling = _coupling_level(plan, score)
    coupled_set = set(plan.coupled_channels)

    data = plan.noise_floor * pink_noise(rng, n_ch, n, fs)

    n_stim = n - n_base
    # The coupled group shares one carrier, but its frequency is drawn per
    # trial from the same spread as the independent channels, so per-band
    # power stays class-independent.
    f_group = plan.carrier_hz + rng.uniform(-plan.freq_spread_hz, plan.freq_spread_hz)
    common_phase = _phase_walk(rng, n_stim, fs, plan.phase_linewidth_hz, f_group)
    common_amp = 1.0 + plan.pcc_mix * np.clip(_slow_noise(rng, n_stim, fs, 1.0, 1.0), -1.8, 1.8) / 2

    # Every channel's oscillator has the same marginal process: a carrier from
    # the spread, a phase walk, slow jitter, slow amplitude modulation. The
    # classes differ only in whether the coupled subset SHARES those phase and
    # amplitude sources or draws them independently.
    sd_ref = jitter_sd_for_plv(plan.plv_target)
    sd_coupled = jitter_sd_for_plv(coupling) if coupling > 0 else sd_ref
    osc = np.empty((n_ch, n_stim))
    for ch in range(n_ch):
        if ch in coupled_set and coupling > 0:
            jitter = _slow_noise(rng, n_stim, fs, 2.0, sd_coupled)
            phase = common_phase + jitter
            amp = common_amp
        else:
            f_ch = plan.carrier_hz + rng.uniform(-plan.freq_spread_hz, plan.freq_spread_hz)
            phase = _phase_walk(rng, n_stim, fs, plan.phase_linewidth_hz, f_ch)
            phase = phase + _slow_noise(rng, n_stim, fs, 2.0, sd_ref)
            amp = 1.0 + plan.pcc_mix * np.clip(_slow_noise(rng, n_stim, fs, 1.0, 1.0), -1.8, 1.8) / 2
        osc[ch] = amp * np.cos(phase)

    if plan.te_gain > 0:
        # Directed lag-1 drive into the sink when coupled; an identical
        # self-lag mix otherwise, so the sink sees the same linear shaping in
        # both classes and only the information flow differs.
        src, snk = plan.coupled_channels[0], plan.coupled_channels[1]
        driver = osc[src] if coupling > 0 else osc[snk]
        lagged = np.empty(n_stim)
        lagged[0] = driver[0]
        lagged[1:] = driver[:-1]
        mixed = (1 - plan.te_gain) * osc[snk] + plan.te_gain * lagged
        rms_before = np.sqrt(np.mean(osc[snk] ** 2))
        rms_mixed = np.sqrt(np.mean(mixed**2))
        osc[snk] = mixed * (rms_before / rms_mixed if rms_mixed > 0 else 1.0)

    data[:, n_base:] += osc
    return data, n_base


def synthesize(plan, channel_names=None):
    """Generate the full corpus as a list of TrialRecord.

    Each trial draws from its own rng stream split off the plan seed, so
    generation is reproducible and order-independent.
    """
    if channel_names is None:
        channel_names = [f"ch{i}" for i in range(plan.n_channels)]
    if len(channel_names) != plan.n_channels:
        raise SynthesisError(
            f"{len(channel_names)} channel names for {plan.n_channels} channels"
        )
    root = np.random.default_rng(plan.seed)
    scores = _trial_scores(plan, root)
    streams = root.spawn(plan.n_trials)
    trials = []
    idx = 0
    for subject in range(plan.n_subjects):
        for video in range(plan.n_videos):
            score = float(scores[idx])
            data, n_base = _synthesize_trial(plan, streams[idx], score)
            rec = MultichannelRecording(
                data=data, fs=plan.fs, baseline_samples=n_base, channel_names=list(channel_names)
            )
            # Valence/arousal mirror preference with independent spread, so the
            # failure analyses have full score tables to work with.
            meta_rng = streams[idx]
            trials.append(
                TrialRecord(
                    recording=rec,
                    subject_id=subject,
                    video_id=video,
                    preference=score,
                    valence=float(np.clip(score + meta_rng.normal(0, 1.0), 1.0, 9.0)),
                    arousal=float(np.clip(10 - score + meta_rng.normal(0, 1.0), 1.0, 9.0)),
                )
            )
            idx += 1
    return trials
