"""Metrics, the cross-validation driver, and failure analyses.

``cross_validate`` is model-agnostic: it takes a factory returning anything
with fit/predict, so oracle models can be injected in tests and the CNN
wrapper is just one implementation.
"""

from dataclasses import dataclass, field

import numpy as np

from .corpus import DISLIKE, LIKE


class EvalError(ValueError):
    """Invalid evaluation input."""


def confusion_counts(truths, preds, n_classes=2):
    """Counts[t][p] = number of examples with true class t predicted as p."""
    truths = np.asarray(truths, dtype=int)
    preds = np.asarray(preds, dtype=int)
    if truths.shape != preds.shape:
        raise EvalError("truths and predictions must have equal length")
    counts = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(counts, (truths, preds), 1)
    return counts


def f1(counts, positive):
    """F1 of one class from a confusion matrix; 0 when precision+recall is 0."""
    counts = np.asarray(counts)
    if np.any(counts < 0):
        raise EvalError("confusion counts must be non-negative")
    tp = counts[positive, positive]
    fp = counts[:, positive].sum() - tp
    fn = counts[positive, :].sum() - tp
    if 2 * tp + fp + fn == 0:
        return 0.0
    return 2 * tp / (2 * tp + fp + fn)


def macro_f1(counts):
    """Unweighted mean of the per-class F1 scores."""
    return float(np.mean([f1(counts, c) for c in range(counts.shape[0])]))


def rmse(predictions, truths):
    """Root-mean-square error between two equal-length score vectors."""
    predictions = np.asarray(predictions, dtype=float)
    truths = np.asarray(truths, dtype=float)
    if predictions.shape != truths.shape or predictions.ndim != 1:
        raise EvalError("predictions and truths must be 1-D and equal length")
    if len(predictions) == 0:
        raise EvalError("rmse of an empty set is undefined")
    return float(np.sqrt(np.mean((predictions - truths) ** 2)))


@dataclass
class FoldResult:
    fold: int
    counts: np.ndarray = None  # classify
    rmse: float = None  # regress
    n_examples: int = 0


@dataclass
class EvalReport:
    """Per-fold and pooled evaluation results plus per-example bookkeeping."""

    mode: str
    folds: list = field(default_factory=list)
    pooled_counts: np.ndarray = None
    pooled_rmse: float = None
    truths: np.ndarray = None
    predictions: np.ndarray = None
    subject_ids: np.ndarray = None
    video_ids: np.ndarray = None
    scores: np.ndarray = None

    @property
    def pooled_macro_f1(self):
        return macro_f1(self.pooled_counts) if self.pooled_counts is not None else None

    def per_class_f1(self):
        return {c: f1(self.pooled_counts, c) for c in range(self.pooled_counts.shape[0])}

    def to_text(self):
        lines = [f"mode {self.mode}"]
        for fr in self.folds:
            if self.mode == "classify":
                lines.append(
                    f"fold {fr.fold} n {fr.n_examples} macro_f1 {macro_f1(fr.counts):.6f}"
                )
            else:
                lines.append(f"fold {fr.fold} n {fr.n_examples} rmse {fr.rmse:.6f}")
        if self.mode == "classify":
            per_class = self.per_class_f1()
            lines.append(f"pooled macro_f1 {self.pooled_macro_f1:.6f}")
            lines.append(f"pooled f1_dislike {per_class[DISLIKE]:.6f}")
            lines.append(f"pooled f1_like {per_class[LIKE]:.6f}")
            lines.append("pooled confusion " + " ".join(str(v) for v in self.pooled_counts.ravel()))
        else:
            lines.append(f"pooled rmse {self.pooled_rmse:.6f}")
        return "\n".join(lines) + "\n"


def cross_validate(tensors, targets, folds, model_factory, mode="classify", metadata=None):
    """Five-fold (or k-fold) leave-one-cluster-out evaluation.

    tensors : (n, ...) array of model inputs
    targets : class labels (classify) or scores (regress)
    folds : per-example fold ids
    model_factory : fold index -> model with fit(x, y) and predict(x)

    Each fold is held out once, the model trains on the remainder, and pooled
    metrics are computed over the concatenated held-out predictions. Training
    and test index sets are asserted disjoint.
    """
    tensors = np.asarray(tensors)
    targets = np.asarray(targets)
    folds = np.asarray(folds, dtype=int)
    if not (len(tensors) == len(targets) == len(folds)):
        raise EvalError("tensors, targets, folds must align")
    fold_ids = np.unique(folds)
    report = EvalReport(mode=mode)
    all_pred = np.empty(len(targets), dtype=float)
    indices = np.arange(len(targets))
    for fold in fold_ids:
        test_mask = folds == fold
        if not np.any(test_mask) or np.all(test_mask):
            raise EvalError(f"fold {fold} leaves an empty train or test split")
        train_idx = indices[~test_mask]
        test_idx = indices[test_mask]
        assert not set(train_idx) & set(test_idx)
        model = model_factory(int(fold))
        model.fit(tensors[train_idx], targets[train_idx])
        preds = np.asarray(model.predict(tensors[test_idx]))
        all_pred[test_idx] = preds
        if mode == "classify":
            counts = confusion_counts(targets[test_idx], preds.astype(int))
            report.folds.append(
                FoldResult(fold=int(fold), counts=counts, n_examples=int(test_mask.sum()))
            )
        else:
            report.folds.append(
                FoldResult(
                    fold=int(fold),
                    rmse=rmse(preds, targets[test_idx]),
                    n_examples=int(test_mask.sum()),
                )
            )
    report.truths = targets
    report.predictions = all_pred if mode == "regress" else all_pred.astype(int)
    if mode == "classify":
        report.pooled_counts = sum(fr.counts for fr in report.folds)
    else:
        report.pooled_rmse = rmse(all_pred, targets)
    if metadata is not None:
        report.subject_ids = np.asarray(metadata.get("subject_ids"))
        report.video_ids = np.asarray(metadata.get("video_ids"))
        if "scores" in metadata:
            report.scores = np.asarray(metadata.get("scores"))
    return report


def _sorted_counts(ids, mask):
    """(id, count) pairs of mask hits per id, sorted by descending count."""
    ids = np.asarray(ids)
    uniq = np.unique(ids)
    rows = [(int(u), int(np.sum(mask & (ids == u)))) for u in uniq]
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows


@dataclass
class FailureAnalysis:
    per_subject: list  # (subject, failures) descending
    per_video: list  # (video, failures) descending
    video_table: list  # dicts: video, failures, mean preference/valence/arousal
    regression_table: list = None  # dicts: video, abs_residual_sum, bottom_quintile


def failure_analysis(report, valence=None, arousal=None):
    """Per-subject and per-video failure breakdowns of an EvalReport.

    Classification failures are misclassified examples; regression reports
    per-video summed absolute residuals and flags the worst quintile. The
    optional per-example valence/arousal arrays feed the per-video score table.
    """
    if report.subject_ids is None or report.video_ids is None:
        raise EvalError("failure analysis needs per-example subject and video ids")
    if report.mode == "classify":
        failures = report.predictions != report.truths
        per_subject = _sorted_counts(report.subject_ids, failures)
        per_video = _sorted_counts(report.video_ids, failures)
    else:
        # Regression has no discrete failures; rank by summed absolute residual.
        resid_all = np.abs(report.predictions - report.truths)

        def _sorted_sums(ids):
            ids = np.asarray(ids)
            rows = [(int(u), float(resid_all[ids == u].sum())) for u in np.unique(ids)]
            rows.sort(key=lambda r: (-r[1], r[0]))
            return rows

        per_subject = _sorted_sums(report.subject_ids)
        per_video = _sorted_sums(report.video_ids)
    video_table = []
    vids = np.asarray(report.video_ids)
    for video, count in per_video:
        sel = vids == video
        row = {"video": video, "failures": count}
        if report.scores is not None:
            row["mean_preference"] = float(np.mean(np.asarray(report.scores)[sel]))
        if valence is not None:
            row["mean_valence"] = float(np.mean(np.asarray(valence)[sel]))
        if arousal is not None:
            row["mean_arousal"] = float(np.mean(np.asarray(arousal)[sel]))
        video_table.append(row)
    regression_table = None
    if report.mode == "regress":
        resid = np.abs(report.predictions - report.truths)
        sums = [(int(v), float(resid[vids == v].sum())) for v in np.unique(vids)]
        sums.sort(key=lambda r: (-r[1], r[0]))
        n_worst = max(1, int(np.ceil(0.2 * len(sums))))
        regression_table = [
            {"video": v, "abs_residual_sum": s, "bottom_quintile": i < n_worst}
            for i, (v, s) in enumerate(sums)
        ]
    return FailureAnalysis(
        per_subject=per_subject,
        per_video=per_video,
        video_table=video_table,
        regression_table=regression_table,
    )


class ConstantPredictor:
    """Best constant model: majority class or mean score. A useful floor."""

    def __init__(self, mode="classify"):
        self.mode = mode
        self.value = None

    def fit(self, x, y):
        y = np.asarray(y)
        if self.mode == "classify":
            vals, counts = np.unique(y.astype(int), return_counts=True)
            self.value = int(vals[np.argmax(counts)])
        else:
            self.value = float(np.mean(y))
        return self

    def predict(self, x):
        return np.full(len(x), self.value)
