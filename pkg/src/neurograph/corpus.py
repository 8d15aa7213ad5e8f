"""Trial records, labeling, fold assignment, and the portable CSV trial layout.

A corpus directory holds one pair of files per (subject, video) trial:

    s<subject>_v<video>_eeg.csv    rows = samples, columns = channels,
                                   header row = channel names
    s<subject>_v<video>_meta.csv   key,value rows (preference, fs,
                                   baseline_samples, optionally valence,
                                   arousal)
"""

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .signals import MultichannelRecording

DISLIKE = 0
LIKE = 1
CLASS_NAMES = {DISLIKE: "dislike", LIKE: "like"}

# Scores at or below this value are the disliking class.
DISLIKE_MAX_SCORE = 5.0


class CorpusError(ValueError):
    """Invalid trial metadata or corpus layout."""


@dataclass
class TrialRecord:
    """One recorded trial with its subjective ratings."""

    recording: MultichannelRecording
    subject_id: int
    video_id: int
    preference: float
    valence: float = None
    arousal: float = None

    def __post_init__(self):
        if self.subject_id < 0 or self.video_id < 0:
            raise CorpusError("subject and video ids must be non-negative")
        _check_score(self.preference)


def _check_score(score):
    if not np.isfinite(score) or not 1.0 <= score <= 9.0:
        raise CorpusError(f"preference score {score} outside the 9-point scale [1, 9]")


def label(score):
    """Binary class for a 9-point preference score: <= 5 dislike, > 5 like."""
    _check_score(score)
    return DISLIKE if score <= DISLIKE_MAX_SCORE else LIKE


def assign_folds(n_examples, k=5, seed=0):
    """Random fold id per example; sizes differ by at most one.

    Returns an int array of length ``n_examples`` with values in 0..k-1,
    reproducible per seed.
    """
    if n_examples < k:
        raise CorpusError(f"cannot split {n_examples} examples into {k} folds")
    rng = np.random.default_rng(seed)
    folds = np.arange(n_examples) % k
    rng.shuffle(folds)
    return folds


@dataclass
class LabeledExample:
    """One CNN input with its labels and bookkeeping ids."""

    tensor: np.ndarray
    cls: int
    score: float
    subject_id: int
    video_id: int
    segment_index: int
    fold: int = -1

    def __post_init__(self):
        if self.cls != label(self.score):
            raise CorpusError(
                f"class {self.cls} contradicts score {self.score} "
                f"(threshold {DISLIKE_MAX_SCORE})"
            )


def trial_basename(subject_id, video_id):
    return f"s{subject_id:02d}_v{video_id:02d}"


def write_trial(directory, trial):
    """Write one TrialRecord as the CSV pair; returns the two paths."""
    directory = Path(directory)
    base = trial_basename(trial.subject_id, trial.video_id)
    eeg_path = directory / f"{base}_eeg.csv"
    meta_path = directory / f"{base}_meta.csv"
    rec = trial.recording
    with open(eeg_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(rec.channel_names)
        for row in rec.data.T:
            writer.writerow([f"{v:.6f}" for v in row])
    meta = [
        ("preference", trial.preference),
        ("fs", rec.fs),
        ("baseline_samples", rec.baseline_samples),
    ]
    if trial.valence is not None:
        meta.append(("valence", trial.valence))
    if trial.arousal is not None:
        meta.append(("arousal", trial.arousal))
    with open(meta_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for key, value in meta:
            writer.writerow([key, value])
    return eeg_path, meta_path


_TRIAL_RE = re.compile(r"^s(\d+)_v(\d+)_eeg\.csv$")


def _read_meta(path):
    meta = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if len(row) >= 2:
                meta[row[0].strip()] = row[1].strip()
    return meta


def import_csv_trials(directory, channel_names=None):
    """Load every trial pair under ``directory``.

    Returns (trials, failures): failures is a list of (path, message) for
    files that could not be imported; the rest of the import continues.
    ``channel_names`` optionally pins the expected channel order (e.g. from a
    montage); a mismatching file is a per-file failure.
    """
    directory = Path(directory)
    trials, failures = [], []
    for eeg_path in sorted(directory.glob("s*_v*_eeg.csv")):
        match = _TRIAL_RE.match(eeg_path.name)
        if not match:
            continue
        subject_id, video_id = int(match.group(1)), int(match.group(2))
        meta_path = eeg_path.with_name(eeg_path.name.replace("_eeg.csv", "_meta.csv"))
        try:
            if not meta_path.exists():
                raise CorpusError(f"missing metadata file {meta_path.name}")
            meta = _read_meta(meta_path)
            if "preference" not in meta:
                raise CorpusError("metadata lacks the preference row")
            with open(eeg_path, newline="") as fh:
                reader = csv.reader(fh)
                header = next(reader)
                rows = [[float(v) for v in row] for row in reader if row]
            data = np.asarray(rows, dtype=float).T
            if channel_names is not None:
                if list(header) != list(channel_names):
                    raise CorpusError(
                        f"channel mismatch: file has {len(header)} "
                        f"({header[:3]}...), expected {len(channel_names)}"
                    )
            rec = MultichannelRecording(
                data=data,
                fs=float(meta.get("fs", 128.0)),
                baseline_samples=int(meta.get("baseline_samples", 0)),
                channel_names=list(header),
            )
            trials.append(
                TrialRecord(
                    recording=rec,
                    subject_id=subject_id,
                    video_id=video_id,
                    preference=float(meta["preference"]),
                    valence=float(meta["valence"]) if "valence" in meta else None,
                    arousal=float(meta["arousal"]) if "arousal" in meta else None,
                )
            )
        except (CorpusError, ValueError, OSError) as exc:
            failures.append((str(eeg_path), str(exc)))
    return trials, failures
