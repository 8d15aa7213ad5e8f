"""Command-line surface: synthesize, extract, train, evaluate, cross-validate, render.

Configuration is layered: an INI-style config file (section headers, flat
key=value entries) supplies defaults, command-line flags win. Exit codes are
scriptable: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

import argparse
import configparser
import csv
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import etns
from .bands import DEFAULT_BANDS
from .corpus import CorpusError, assign_folds, import_csv_trials, label, write_trial
from .evaluate import (
    EvalError,
    confusion_counts,
    cross_validate,
    failure_analysis,
    macro_f1,
    rmse,
)
from .features import FeatureError
from .layout import (
    LayoutError,
    distance_ordering,
    head_mask,
    load_montage,
    random_ordering,
    render_topography,
)
from .models import CnnModel
from .nn import (
    AdamConfig,
    DivergenceError,
    NnError,
    TrainConfig,
    build_cnn,
    init_state,
    predict,
    spec_from_metadata,
    spec_metadata,
    train,
)
from .pipeline import FEATURE_KINDS, FeatureConfig, PipelineError, extract_trial
from .signals import SignalError
from .synth import SynthesisError, SynthesisPlan, synthesize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

DATA_ERRORS = (
    CorpusError,
    EvalError,
    FeatureError,
    LayoutError,
    PipelineError,
    SignalError,
    SynthesisError,
    etns.EtnsError,
    FileNotFoundError,
    FileExistsError,
    NotADirectoryError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class PipelineConfig:
    corpus_dir: str = None
    out_dir: str = None
    montage_path: str = None
    feature: str = "plv"
    ordering: str = "distance"  # 'distance', 'random:<seed>', or 'none'
    network: str = "cnn1"
    mode: str = "classify"
    batch_size: int = 256
    epochs: int = 8
    learning_rate: float = 1e-3
    seed: int = 0
    folds: int = 5
    fold_seed: int = 0
    eval_fold: int = 0
    jobs: int = 1
    force: bool = False
    te_bins: int = 8
    random_repeats: int = 3

    def validate(self):
        if self.feature not in FEATURE_KINDS:
            raise UsageError(f"unknown feature {self.feature!r}")
        if self.network not in ("cnn1", "cnn2", "cnn3"):
            raise UsageError(f"unknown network {self.network!r}")
        if self.mode not in ("classify", "regress"):
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.feature == "psd":
            pass  # topographies have no electrode ordering
        elif not (self.ordering == "distance" or self.ordering.startswith("random")):
            raise UsageError(f"unknown ordering {self.ordering!r}")


_CONFIG_KEYS = {
    ("paths", "corpus"): ("corpus_dir", str),
    ("paths", "out"): ("out_dir", str),
    ("paths", "montage"): ("montage_path", str),
    ("feature", "kind"): ("feature", str),
    ("feature", "ordering"): ("ordering", str),
    ("feature", "te_bins"): ("te_bins", int),
    ("train", "network"): ("network", str),
    ("train", "mode"): ("mode", str),
    ("train", "batch_size"): ("batch_size", int),
    ("train", "epochs"): ("epochs", int),
    ("train", "learning_rate"): ("learning_rate", float),
    ("train", "seed"): ("seed", int),
    ("cv", "folds"): ("folds", int),
    ("cv", "fold_seed"): ("fold_seed", int),
    ("cv", "eval_fold"): ("eval_fold", int),
    ("cv", "random_repeats"): ("random_repeats", int),
}


def load_config(path):
    """PipelineConfig from an INI file; unknown keys are a usage error."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file {path} not found")
    cfg = PipelineConfig()
    for section in parser.sections():
        for key, value in parser[section].items():
            if (section, key) not in _CONFIG_KEYS:
                raise UsageError(f"unknown config entry [{section}] {key}")
            attr, conv = _CONFIG_KEYS[(section, key)]
            setattr(cfg, attr, conv(value))
    return cfg


def _apply_flags(cfg, args):
    """Command-line flags override config-file values (flag wins)."""
    mapping = {
        "feature": "feature",
        "ordering": "ordering",
        "network": "network",
        "mode": "mode",
        "seed": "seed",
        "out": "out_dir",
        "jobs": "jobs",
        "corpus": "corpus_dir",
        "montage": "montage_path",
        "epochs": "epochs",
        "batch_size": "batch_size",
        "fold": "eval_fold",
    }
    for flag, attr in mapping.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, attr, value)
    if getattr(args, "force", False):
        cfg.force = True
    return cfg


def parse_ordering(spec_str, n, default_seed=0):
    """'distance', 'random[:seed]', or 'none' -> ordering object or None."""
    if spec_str in (None, "none"):
        return None
    if spec_str == "distance":
        return "distance"
    if spec_str == "random":
        return random_ordering(n, default_seed)
    if spec_str.startswith("random:"):
        return random_ordering(n, int(spec_str.split(":", 1)[1]))
    raise UsageError(f"unknown ordering {spec_str!r}")


def _resolve_ordering(cfg, montage):
    if cfg.feature == "psd":
        return None
    ordered = parse_ordering(cfg.ordering, montage.n_electrodes)
    if ordered == "distance":
        return distance_ordering(montage)
    return ordered


def _montage(cfg):
    return load_montage(cfg.montage_path)


# ---------------------------------------------------------------------------
# synth


def load_plan(path):
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise FileNotFoundError(f"plan file {path} not found")
    sec = parser["plan"] if parser.has_section("plan") else parser["DEFAULT"]
    kwargs = {}
    casts = {
        "n_subjects": int, "n_videos": int, "trial_s": float, "baseline_s": float,
        "fs": float, "plv_target": float, "pcc_mix": float, "te_gain": float,
        "noise_floor": float, "dislike_fraction": float, "n_channels": int,
        "phase_linewidth_hz": float, "freq_spread_hz": float, "seed": int,
        "score_coupled": lambda v: v.lower() in ("1", "true", "yes"),
    }
    for key, value in sec.items():
        if key not in casts:
            raise UsageError(f"unknown plan entry {key!r}")
        kwargs[key] = casts[key](value)
    return SynthesisPlan(**kwargs)


def cmd_synth(args):
    plan = load_plan(args.plan) if args.plan else SynthesisPlan()
    if args.seed is not None:
        plan = replace(plan, seed=args.seed)
    out = Path(args.out if args.out else "corpus")
    if out.exists() and any(out.iterdir()) and not args.force:
        raise FileExistsError(f"output directory {out} is not empty (use --force)")
    out.mkdir(parents=True, exist_ok=True)
    montage = load_montage(args.montage)
    if montage.n_electrodes != plan.n_channels:
        raise CorpusError(
            f"montage has {montage.n_electrodes} electrodes, plan wants {plan.n_channels}"
        )
    trials = synthesize(plan, channel_names=montage.names)
    for trial in trials:
        write_trial(out, trial)
    _write_manifest(out / "manifest.txt", plan, len(trials))
    print(f"wrote {len(trials)} trials to {out}")
    return EXIT_OK


def _write_manifest(path, plan, n_trials):
    import time

    lines = [
        f"n_trials {n_trials}",
        f"n_subjects {plan.n_subjects}",
        f"n_videos {plan.n_videos}",
        f"fs {plan.fs}",
        f"seed {plan.seed}",
        f"score_coupled {plan.score_coupled}",
        # The one timestamped field; everything else is byte-stable per seed.
        f"generated_at {time.strftime('%Y-%m-%dT%H:%M:%S')}",
    ]
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# extract


def _tensor_file(out, subject, video, cfg):
    tag = cfg.feature if cfg.feature == "psd" else f"{cfg.feature}_{cfg.ordering.replace(':', '-')}"
    return out / f"s{subject:02d}_v{video:02d}_{tag}.etns"


def cmd_extract(args):
    cfg = _apply_flags(load_config(args.config) if args.config else PipelineConfig(), args)
    cfg.validate()
    if not cfg.corpus_dir:
        raise UsageError("extract needs a corpus directory (--corpus or [paths] corpus)")
    out = Path(cfg.out_dir or "extracted")
    out.mkdir(parents=True, exist_ok=True)
    montage = _montage(cfg)
    trials, failures = import_csv_trials(cfg.corpus_dir, channel_names=montage.names)
    for path, message in failures:
        print(f"import failure: {path}: {message}", file=sys.stderr)
    if not trials:
        raise CorpusError(f"no importable trials in {cfg.corpus_dir}")
    ordering = _resolve_ordering(cfg, montage)
    feat_cfg = FeatureConfig(kind=cfg.feature, te_bins=cfg.te_bins)

    index_rows = []
    extract_failures = 0
    for trial in trials:
        path = _tensor_file(out, trial.subject_id, trial.video_id, cfg)
        if path.exists():
            tensors = etns.read_tensors(path)  # resumable: reuse existing output
            n_seg = len(tensors)
        else:
            try:
                block, n_seg = extract_trial(trial, montage, feat_cfg, ordering=ordering)
            except (FeatureError, SignalError, PipelineError, LayoutError) as exc:
                print(
                    f"extract failure: s{trial.subject_id} v{trial.video_id}: {exc}",
                    file=sys.stderr,
                )
                extract_failures += 1
                continue
            etns.write_tensors(path, {f"seg{j:03d}": block[j] for j in range(n_seg)})
        for j in range(n_seg):
            index_rows.append(
                [
                    path.name,
                    f"seg{j:03d}",
                    trial.subject_id,
                    trial.video_id,
                    j,
                    f"{trial.preference:.6f}",
                    label(trial.preference),
                    f"{trial.valence:.6f}" if trial.valence is not None else "",
                    f"{trial.arousal:.6f}" if trial.arousal is not None else "",
                ]
            )
    folds = assign_folds(len(index_rows), k=cfg.folds, seed=cfg.fold_seed)
    with open(out / "index.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["file", "entry", "subject", "video", "segment", "score", "label",
             "valence", "arousal", "fold"]
        )
        for row, fold in zip(index_rows, folds):
            writer.writerow(row + [int(fold)])
    print(f"extracted {len(index_rows)} segments from {len(trials)} trials")
    if extract_failures:
        print(f"{extract_failures} trial(s) failed", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def load_extracted(directory):
    """Read an extraction directory back into arrays (tensors + index columns)."""
    directory = Path(directory)
    index_path = directory / "index.csv"
    if not index_path.exists():
        raise FileNotFoundError(f"{index_path} not found; run extract first")
    rows = list(csv.DictReader(open(index_path, newline="")))
    if not rows:
        raise CorpusError("index.csv is empty")
    cache = {}
    tensors = []
    for row in rows:
        name = row["file"]
        if name not in cache:
            cache[name] = etns.read_tensors(directory / name)
        tensors.append(cache[name][row["entry"]])
    data = {
        "tensors": np.stack(tensors),
        "labels": np.array([int(r["label"]) for r in rows]),
        "scores": np.array([float(r["score"]) for r in rows]),
        "subjects": np.array([int(r["subject"]) for r in rows]),
        "videos": np.array([int(r["video"]) for r in rows]),
        "folds": np.array([int(r["fold"]) for r in rows]),
        "valence": np.array([float(r["valence"]) if r["valence"] else np.nan for r in rows]),
        "arousal": np.array([float(r["arousal"]) if r["arousal"] else np.nan for r in rows]),
    }
    return data


# ---------------------------------------------------------------------------
# train / eval


def _train_config(cfg):
    return TrainConfig(
        batch_size=cfg.batch_size,
        epochs=cfg.epochs,
        adam=AdamConfig(learning_rate=cfg.learning_rate),
        mode=cfg.mode,
        seed=cfg.seed,
    )


def save_checkpoint(path, spec, state):
    tensors = {f"{i}.{name}": arr for (i, name), arr in state.params.items()}
    tensors.update({f"running.{i}.{name}": arr for (i, name), arr in state.running.items()})
    etns.write_tensors(path, tensors)
    Path(str(path) + ".meta").write_text(spec_metadata(spec, step=state.step))


def load_checkpoint(path):
    from .nn import NetworkState

    tensors = etns.read_tensors(path)
    meta_path = Path(str(path) + ".meta")
    if not meta_path.exists():
        raise FileNotFoundError(f"checkpoint metadata {meta_path} not found")
    spec, step = spec_from_metadata(meta_path.read_text())
    params, running = {}, {}
    for name, arr in tensors.items():
        parts = name.split(".")
        if parts[0] == "running":
            running[(int(parts[1]), parts[2])] = arr.astype(float)
        else:
            params[(int(parts[0]), parts[1])] = arr.astype(float)
    state = NetworkState(params=params, running=running, step=step)
    return spec, state


def cmd_train(args):
    cfg = _apply_flags(load_config(args.config) if args.config else PipelineConfig(), args)
    cfg.validate()
    if not cfg.corpus_dir:
        raise UsageError("train needs an extracted directory (--corpus or [paths] corpus)")
    data = load_extracted(cfg.corpus_dir)
    out = Path(cfg.out_dir or "trained")
    out.mkdir(parents=True, exist_ok=True)
    targets = data["labels"] if cfg.mode == "classify" else data["scores"]
    holdout = data["folds"] == cfg.eval_fold
    x_train, y_train = data["tensors"][~holdout], targets[~holdout]
    rng = np.random.default_rng(cfg.seed)
    n_val = max(1, int(round(0.1 * len(x_train))))
    order = rng.permutation(len(x_train))
    val_idx, fit_idx = order[:n_val], order[n_val:]
    spec = build_cnn(cfg.network, cfg.mode)
    state = init_state(spec, seed=cfg.seed, mode=cfg.mode)
    state, trace = train(
        spec, state, x_train[fit_idx], y_train[fit_idx], _train_config(cfg),
        x_val=x_train[val_idx], y_val=y_train[val_idx],
    )
    save_checkpoint(out / "checkpoint.etns", spec, state)
    with open(out / "trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_metric"])
        for entry in trace:
            writer.writerow([entry["epoch"], f"{entry['train_loss']:.8f}",
                             f"{entry.get('val_metric', float('nan')):.8f}"])
    print(f"trained {cfg.network} ({cfg.mode}); checkpoint in {out}")
    return EXIT_OK


def _write_report_files(out, report, analysis):
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(report.to_text())
    with open(out / "failures_by_subject.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject", "failures"])
        writer.writerows(analysis.per_subject)
    with open(out / "failures_by_video.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video", "failures"])
        writer.writerows(analysis.per_video)
    if analysis.video_table:
        keys = list(analysis.video_table[0].keys())
        with open(out / "video_table.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            writer.writerows(analysis.video_table)
    if analysis.regression_table:
        with open(out / "regression_table.csv", "w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["video", "abs_residual_sum", "bottom_quintile"]
            )
            writer.writeheader()
            writer.writerows(analysis.regression_table)


def cmd_eval(args):
    cfg = _apply_flags(load_config(args.config) if args.config else PipelineConfig(), args)
    cfg.validate()
    if not cfg.corpus_dir:
        raise UsageError("eval needs an extracted directory (--corpus or [paths] corpus)")
    spec, state = load_checkpoint(args.checkpoint)
    data = load_extracted(cfg.corpus_dir)
    mask = data["folds"] == cfg.eval_fold
    if not np.any(mask):
        raise EvalError(f"fold {cfg.eval_fold} holds no examples")
    targets = data["labels"] if cfg.mode == "classify" else data["scores"]
    preds = predict(spec, state, data["tensors"][mask], cfg.mode)
    from .evaluate import EvalReport, FoldResult

    report = EvalReport(mode=cfg.mode)
    if cfg.mode == "classify":
        counts = confusion_counts(targets[mask], preds)
        report.folds = [FoldResult(fold=cfg.eval_fold, counts=counts, n_examples=int(mask.sum()))]
        report.pooled_counts = counts
        report.predictions = preds.astype(int)
    else:
        report.folds = [
            FoldResult(fold=cfg.eval_fold, rmse=rmse(preds, targets[mask]),
                       n_examples=int(mask.sum()))
        ]
        report.pooled_rmse = rmse(preds, targets[mask])
        report.predictions = preds
    report.truths = targets[mask]
    report.subject_ids = data["subjects"][mask]
    report.video_ids = data["videos"][mask]
    report.scores = data["scores"][mask]
    analysis = failure_analysis(
        report, valence=data["valence"][mask], arousal=data["arousal"][mask]
    )
    out = Path(cfg.out_dir or "evaluated")
    _write_report_files(out, report, analysis)
    headline = (
        f"macro_f1 {report.pooled_macro_f1:.4f}" if cfg.mode == "classify"
        else f"rmse {report.pooled_rmse:.4f}"
    )
    print(f"fold {cfg.eval_fold}: {headline}; report in {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# cv (the full grid runner)


def _grid_cells(cfg):
    """(network, feature, ordering) cells; psd collapses the ordering axis."""
    networks = cfg.network.split(",")
    features = cfg.feature.split(",")
    orderings = cfg.ordering.split(",")
    cells = []
    for net in networks:
        for feat in features:
            if feat == "psd":
                cells.append((net, feat, "none"))
            else:
                for order in orderings:
                    cells.append((net, feat, order))
    return cells


def _run_cell(cfg, trials, montage, net, feat, order_spec):
    """Five-fold CV for one (network, feature, ordering) cell.

    The random ordering averages the headline metric over random_repeats
    differently seeded orderings.
    """
    feat_cfg = FeatureConfig(kind=feat, te_bins=cfg.te_bins)
    if feat != "psd" and order_spec.startswith("random") and ":" not in order_spec:
        seeds = range(cfg.random_repeats)
        specs = [f"random:{s}" for s in seeds]
    else:
        specs = [order_spec]
    metrics = []
    for one_spec in specs:
        ordering = None
        if feat != "psd":
            ordering = parse_ordering(one_spec, montage.n_electrodes)
            if ordering == "distance":
                ordering = distance_ordering(montage)
        from .pipeline import extract_corpus

        data = extract_corpus(trials, montage, feat_cfg, ordering=ordering)
        folds = assign_folds(len(data), k=cfg.folds, seed=cfg.fold_seed)
        targets = data.labels if cfg.mode == "classify" else data.scores
        report = cross_validate(
            data.tensors,
            targets,
            folds,
            lambda fold: CnnModel(net, cfg.mode, config=_train_config(cfg), seed=cfg.seed),
            mode=cfg.mode,
        )
        metrics.append(
            report.pooled_macro_f1 if cfg.mode == "classify" else report.pooled_rmse
        )
    return float(np.mean(metrics))


def cmd_cv(args):
    cfg = _apply_flags(load_config(args.config) if args.config else PipelineConfig(), args)
    if not cfg.corpus_dir:
        raise UsageError("cv needs a corpus directory (--corpus or [paths] corpus)")
    montage = _montage(cfg)
    trials, failures = import_csv_trials(cfg.corpus_dir, channel_names=montage.names)
    for path, message in failures:
        print(f"import failure: {path}: {message}", file=sys.stderr)
    if not trials:
        raise CorpusError(f"no importable trials in {cfg.corpus_dir}")
    cells = _grid_cells(cfg)
    for net, feat, order_spec in cells:
        probe = replace(cfg, network=net, feature=feat,
                        ordering=order_spec if feat != "psd" else "distance")
        probe.validate()
    out = Path(cfg.out_dir or "cv_report")
    out.mkdir(parents=True, exist_ok=True)
    metric_name = "macro_f1" if cfg.mode == "classify" else "rmse"
    rows = []
    for net, feat, order_spec in cells:
        value = _run_cell(cfg, trials, montage, net, feat, order_spec)
        rows.append([net, order_spec, feat, f"{value:.6f}"])
        print(f"{net} {order_spec} {feat}: {metric_name} {value:.4f}")
    with open(out / "grid.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["network", "ordering", "feature", metric_name])
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {out / 'grid.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# topo


def _read_values(path, montage):
    lines = [
        ln.split("#", 1)[0].strip()
        for ln in Path(path).read_text().splitlines()
    ]
    lines = [ln for ln in lines if ln]
    values = np.full(montage.n_electrodes, np.nan)
    if all(len(ln.split()) == 1 for ln in lines):
        if len(lines) != montage.n_electrodes:
            raise LayoutError(
                f"{len(lines)} values for {montage.n_electrodes} electrodes"
            )
        values = np.array([float(ln) for ln in lines])
    else:
        for ln in lines:
            name, value = ln.split()[:2]
            values[montage.index_of(name)] = float(value)
        if np.any(np.isnan(values)):
            missing = [montage.names[i] for i in np.flatnonzero(np.isnan(values))]
            raise LayoutError(f"missing values for electrodes: {missing}")
    return values


def write_pgm(path, img):
    """Plain-text PGM (P2), 0..255, zero outside the head."""
    scale = np.max(np.abs(img))
    gray = np.zeros_like(img) if scale == 0 else (img / scale + 1) / 2 * 255
    with open(path, "w") as fh:
        fh.write(f"P2\n{img.shape[1]} {img.shape[0]}\n255\n")
        for row in gray.astype(int):
            fh.write(" ".join(str(v) for v in row) + "\n")


def write_ppm(path, img, mask):
    """Plain-text PPM (P3): positive red, negative blue, zero green, black outside."""
    scale = np.max(np.abs(img[mask])) if np.any(mask) else 0.0
    norm = img / scale if scale > 0 else np.zeros_like(img)
    with open(path, "w") as fh:
        fh.write(f"P3\n{img.shape[1]} {img.shape[0]}\n255\n")
        for i in range(img.shape[0]):
            row = []
            for j in range(img.shape[1]):
                if not mask[i, j]:
                    row += ["0", "0", "0"]
                else:
                    v = norm[i, j]
                    red = int(255 * max(v, 0.0))
                    blue = int(255 * max(-v, 0.0))
                    green = int(255 * (1 - abs(v)))
                    row += [str(red), str(green), str(blue)]
            fh.write(" ".join(row) + "\n")


def cmd_topo(args):
    montage = load_montage(args.montage)
    values = _read_values(args.values, montage)
    img = render_topography(values, montage, res=args.res)
    out = Path(args.out if args.out else "topography.pgm")
    if args.color:
        write_ppm(out, img, head_mask(args.res))
    else:
        write_pgm(out, img)
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="neurograph", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, montage=True):
        p.add_argument("--config", help="INI config file; flags override it")
        p.add_argument("--feature", choices=FEATURE_KINDS)
        p.add_argument("--ordering", help="distance | random[:seed] | none")
        p.add_argument("--network", help="cnn1 | cnn2 | cnn3 (commas allowed for cv)")
        p.add_argument("--mode", choices=("classify", "regress"))
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--force", action="store_true")
        p.add_argument(
            "--jobs", type=int, default=int(os.environ.get("NEUROGRAPH_JOBS", "1"))
        )
        p.add_argument("--corpus", help="corpus or extracted-data directory")
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        if montage:
            p.add_argument("--montage", help="montage file (default: packaged 32-electrode)")

    p_synth = sub.add_parser("synth", help="write a synthetic corpus")
    p_synth.add_argument("--plan", help="INI plan file")
    common(p_synth)
    p_synth.set_defaults(func=cmd_synth)

    p_extract = sub.add_parser("extract", help="corpus -> feature tensors + index")
    common(p_extract)
    p_extract.set_defaults(func=cmd_extract)

    p_train = sub.add_parser("train", help="train one network on extracted tensors")
    common(p_train)
    p_train.add_argument("--fold", type=int, help="held-out fold (excluded from training)")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on one fold")
    p_eval.add_argument("checkpoint")
    common(p_eval)
    p_eval.add_argument("--fold", type=int, help="fold to evaluate")
    p_eval.set_defaults(func=cmd_eval)

    p_cv = sub.add_parser("cv", help="full k-fold report over a config grid")
    common(p_cv)
    p_cv.set_defaults(func=cmd_cv)

    p_topo = sub.add_parser("topo", help="render per-electrode values to an image")
    p_topo.add_argument("values", help="text file: one value per line, or 'label value' rows")
    p_topo.add_argument("--montage")
    p_topo.add_argument("--out")
    p_topo.add_argument("--res", type=int, default=32)
    p_topo.add_argument("--color", action="store_true", help="red-blue PPM instead of PGM")
    p_topo.set_defaults(func=cmd_topo)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NnError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
