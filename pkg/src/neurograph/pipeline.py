"""Trial-to-tensor extraction: the glue between signals, features, and layout.

One trial yields one 32x32x10 tensor per 3-second segment: topography stacks
for the power feature, ordered connectivity stacks for the pairwise features.
Connectivity features filter the whole trial once per band (the pre-stimulus
baseline absorbs the filter's leading edge transient) and then slice segments
out of the filtered signal, which keeps phase estimates clean and the cost
linear in trial length.
"""

from dataclasses import dataclass, field

import numpy as np

from .bands import DEFAULT_BANDS
from .corpus import label
from .features import (
    WelchConfig,
    band_power,
    pcc_matrix,
    plv_matrix,
    te_matrix,
    welch_psd,
)
from .layout import apply_ordering, identity_ordering, render_topography, stack_bands
from .signals import analytic_phases, bandpass, segment, segment_baseline

FEATURE_KINDS = ("psd", "pcc", "plv", "te")


class PipelineError(ValueError):
    """Invalid extraction configuration."""


@dataclass
class FeatureConfig:
    """What to extract and how.

    ordering applies only to connectivity kinds; the power feature is a
    topography and ignores it.
    """

    kind: str = "plv"
    bands: tuple = DEFAULT_BANDS
    win_s: float = 3.0
    hop_s: float = 0.5
    welch: WelchConfig = field(default_factory=WelchConfig)
    te_bins: int = 8
    plv_subwindow: int = None
    resolution: int = 32

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise PipelineError(f"kind must be one of {FEATURE_KINDS}, got {self.kind!r}")


def connectivity_kind(kind):
    return kind in ("pcc", "plv", "te")


def extract_trial(trial, montage, config, ordering=None):
    """Feature tensors for every segment of one trial.

    Returns (tensors, n_segments): tensors is float32 of shape
    (n_segments, res, res, n_bands) for psd, or
    (n_segments, n_channels, n_channels, n_bands) for connectivity kinds.
    """
    rec = trial.recording
    bounds = segment(rec, config.win_s, config.hop_s)
    n_seg = len(bounds)
    if config.kind == "psd":
        planes = _psd_planes(rec, montage, config, bounds)
    else:
        planes = _connectivity_planes(rec, config, bounds)
        if ordering is not None:
            planes = [
                [apply_ordering(m, ordering) for m in band_planes] for band_planes in planes
            ]
    tensors = np.empty(
        (n_seg, planes[0][0].shape[0], planes[0][0].shape[1], len(config.bands)),
        dtype=np.float32,
    )
    for s in range(n_seg):
        tensors[s] = stack_bands(
            [planes[b][s] for b in range(len(config.bands))],
            band_names=tuple(b.name for b in config.bands),
        )
    return tensors, n_seg


def _psd_planes(rec, montage, config, bounds):
    """Per-band lists of topography planes, one per segment."""
    if montage.n_electrodes != rec.n_channels:
        raise PipelineError(
            f"montage has {montage.n_electrodes} electrodes, recording {rec.n_channels} channels"
        )
    base_bounds = segment_baseline(rec, config.win_s, config.hop_s)
    base_power = np.zeros((rec.n_channels, len(config.bands)))
    for a, b in base_bounds:
        for ch in range(rec.n_channels):
            freqs, psd = welch_psd(rec.data[ch, a:b], rec.fs, config.welch)
            for bi, band in enumerate(config.bands):
                base_power[ch, bi] += band_power(freqs, psd, band)
    base_power /= len(base_bounds)

    planes = [[] for _ in config.bands]
    for a, b in bounds:
        feat = np.empty((rec.n_channels, len(config.bands)))
        for ch in range(rec.n_channels):
            freqs, psd = welch_psd(rec.data[ch, a:b], rec.fs, config.welch)
            for bi, band in enumerate(config.bands):
                feat[ch, bi] = band_power(freqs, psd, band)
        feat -= base_power
        for bi in range(len(config.bands)):
            planes[bi].append(render_topography(feat[:, bi], montage, config.resolution))
    return planes


def _connectivity_planes(rec, config, bounds):
    """Per-band lists of connectivity matrices, one per segment."""
    planes = []
    for band in config.bands:
        filtered = bandpass(rec.data, band, rec.fs)
        band_planes = []
        if config.kind == "plv":
            phases = analytic_phases(filtered)
            for a, b in bounds:
                band_planes.append(plv_matrix(phases[:, a:b], subwindow=config.plv_subwindow))
        elif config.kind == "pcc":
            for a, b in bounds:
                band_planes.append(pcc_matrix(filtered[:, a:b]))
        else:
            for a, b in bounds:
                band_planes.append(te_matrix(filtered[:, a:b], bins=config.te_bins))
        planes.append(band_planes)
    return planes


@dataclass
class ExtractedDataset:
    """Flat arrays over all segments of a corpus, ready for training."""

    tensors: np.ndarray  # (n, res, res, n_bands) float32
    labels: np.ndarray  # int class per segment
    scores: np.ndarray  # float preference per segment
    subject_ids: np.ndarray
    video_ids: np.ndarray
    segment_indices: np.ndarray
    folds: np.ndarray = None
    valence: np.ndarray = None
    arousal: np.ndarray = None

    def __len__(self):
        return len(self.tensors)


def extract_corpus(trials, montage, config, ordering=None, progress=None):
    """Extract every trial of a corpus into one ExtractedDataset.

    ``progress`` is an optional callable(trial_index, n_trials) hook.
    """
    tensor_blocks, rows = [], []
    for t_idx, trial in enumerate(trials):
        if progress is not None:
            progress(t_idx, len(trials))
        tensors, n_seg = extract_trial(trial, montage, config, ordering=ordering)
        tensor_blocks.append(tensors)
        for s in range(n_seg):
            rows.append(
                (
                    label(trial.preference),
                    trial.preference,
                    trial.subject_id,
                    trial.video_id,
                    s,
                    trial.valence if trial.valence is not None else np.nan,
                    trial.arousal if trial.arousal is not None else np.nan,
                )
            )
    rows = np.asarray(rows, dtype=float)
    return ExtractedDataset(
        tensors=np.concatenate(tensor_blocks, axis=0),
        labels=rows[:, 0].astype(int),
        scores=rows[:, 1],
        subject_ids=rows[:, 2].astype(int),
        video_ids=rows[:, 3].astype(int),
        segment_indices=rows[:, 4].astype(int),
        valence=rows[:, 5],
        arousal=rows[:, 6],
    )
