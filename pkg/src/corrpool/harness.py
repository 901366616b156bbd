"""Training loop, metrics, leave-one-session-out CV, and hyperparameter sweeps.

Utterances are variable-length, so there is no padding anywhere: batches
are lists of (stack, label) items, pooling runs per utterance, and
gradients are averaged over the batch. Every fold derives its random
stream from (master seed, session id), which makes single-threaded runs
bit-reproducible and lets folds run on worker threads without sharing
state.
"""

import csv
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import TrainConfig
from .data import Fold, Manifest, flip_labels, load_features, split_folds
from .errors import ConfigurationError, CorrPoolError, InputError, MetricError, TrainingError
from .grad import backward, clip_gradients, init_adam, optimizer_step, utterance_forward
from .head import HeadParams, init_head_params, smooth_label_index

FoldItems = list[tuple[np.ndarray, int]]


@dataclass
class FoldData:
    """Materialized train/val/test items for one fold; labels are class indices."""

    session: int
    class_names: tuple[str, ...]
    train: FoldItems
    val: FoldItems
    test: FoldItems


@dataclass
class FoldResult:
    session: int
    ua: float
    accuracy: float
    best_epoch: int
    confusion: np.ndarray  # (K, K), rows = true class

    def to_dict(self) -> dict:
        return {
            "fold": self.session,
            "ua": self.ua,
            "accuracy": self.accuracy,
            "best_epoch": self.best_epoch,
            "confusion": self.confusion.tolist(),
        }


@dataclass
class CVResult:
    config: dict
    folds: list[FoldResult]
    mean_ua: float
    std_ua: float
    mean_accuracy: float
    std_accuracy: float

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "folds": [f.to_dict() for f in self.folds],
            "mean_ua": self.mean_ua,
            "std_ua": self.std_ua,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
        }


@dataclass
class CellResult:
    """One sweep grid cell; error is set (and metrics None) when the cell failed."""

    coords: dict
    folds: list[FoldResult] = field(default_factory=list)
    mean_ua: float | None = None
    std_ua: float | None = None
    mean_accuracy: float | None = None
    std_accuracy: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "coords": self.coords,
            "folds": [f.to_dict() for f in self.folds],
            "mean_ua": self.mean_ua,
            "std_ua": self.std_ua,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "error": self.error,
        }


@dataclass
class SweepResult:
    config: dict
    axes: list[str]
    cells: list[CellResult]

    def to_dict(self) -> dict:
        return {"config": self.config, "axes": self.axes, "cells": [c.to_dict() for c in self.cells]}


def unweighted_accuracy(preds: np.ndarray, labels: np.ndarray, n_classes: int) -> float:
    """Macro-averaged recall; undefined (MetricError) if a class has no examples."""
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.shape != labels.shape:
        raise InputError(f"predictions {preds.shape} and labels {labels.shape} differ in length")
    recalls = []
    for c in range(n_classes):
        mask = labels == c
        total = int(mask.sum())
        if total == 0:
            raise MetricError(f"class {c} has no examples; unweighted accuracy is undefined")
        recalls.append(float(np.sum(preds[mask] == c)) / total)
    return float(np.mean(recalls))


def confusion_matrix(preds: np.ndarray, labels: np.ndarray, n_classes: int) -> np.ndarray:
    """(K, K) counts with true classes as rows, predictions as columns."""
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    for p, t in zip(np.asarray(preds), np.asarray(labels)):
        m[int(t), int(p)] += 1
    return m


def predict_items(items: FoldItems, params: HeadParams, cfg: TrainConfig) -> np.ndarray:
    """Eval-mode predictions (no dropout) for a list of (stack, label) items."""
    return np.array([int(np.argmax(utterance_forward(stack, params, cfg)[0])) for stack, _ in items])


def evaluate(items: FoldItems, params: HeadParams, cfg: TrainConfig) -> tuple[float, float, np.ndarray]:
    """(unweighted accuracy, overall accuracy, confusion matrix) on items."""
    preds = predict_items(items, params, cfg)
    labels = np.array([label for _, label in items])
    n_classes = params.clf_b.shape[0]
    ua = unweighted_accuracy(preds, labels, n_classes)
    return ua, float(np.mean(preds == labels)), confusion_matrix(preds, labels, n_classes)


def train_fold(
    data: FoldData,
    cfg: TrainConfig,
    rng: np.random.Generator | None = None,
    label_noise: float = 0.0,
) -> tuple[HeadParams, FoldResult]:
    """Train on one fold, select the best-validation-UA epoch, score the test set.

    Epoch 0 is the untrained initialization, so a zero-epoch config returns
    an initialization-time evaluation. Ties in validation UA keep the
    earlier epoch. label_noise flips that fraction of training labels
    (test and validation stay clean).
    """
    for name, split in (("train", data.train), ("val", data.val), ("test", data.test)):
        if not split:
            raise ConfigurationError(f"fold {data.session} has an empty {name} split")
    cfg.validate()
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, data.session]))
    n_layers, _, d = data.train[0][0].shape
    for stack, _ in itertools.chain(data.train, data.val, data.test):
        if stack.ndim != 3 or stack.shape[0] != n_layers or stack.shape[2] != d:
            raise ConfigurationError(
                f"inconsistent feature shapes in fold {data.session}: "
                f"expected ({n_layers}, *, {d}), got {stack.shape}"
            )
    k = len(data.class_names)
    params = init_head_params(cfg.pooling, n_layers, d, cfg.dv, cfg.heads, k, rng)
    adam = init_adam(params, cfg)

    train_labels = np.array([label for _, label in data.train])
    if label_noise > 0.0:
        train_labels = flip_labels(train_labels, label_noise, k, rng)
    targets = [smooth_label_index(c, cfg.label_smoothing, k) for c in range(k)]
    stacks = [stack for stack, _ in data.train]

    best_ua, _, _ = evaluate(data.val, params, cfg)
    best_epoch = 0
    best_params = params.copy()
    try:
        for epoch in range(1, cfg.epochs + 1):
            order = rng.permutation(len(stacks))
            for lo in range(0, len(order), cfg.batch_size):
                batch = [(stacks[i], targets[train_labels[i]]) for i in order[lo:lo + cfg.batch_size]]
                loss, grads = backward(batch, params, cfg, rng)
                if not np.isfinite(loss):
                    raise TrainingError("loss became non-finite")
                if cfg.grad_clip > 0.0:
                    clip_gradients(grads, cfg.grad_clip)
                optimizer_step(params, grads, adam)
            val_ua, _, _ = evaluate(data.val, params, cfg)
            if val_ua > best_ua:
                best_ua, best_epoch, best_params = val_ua, epoch, params.copy()
    except TrainingError as e:
        raise TrainingError(f"{e} [config: {json.dumps(cfg.asdict(), sort_keys=True)}]") from e
    ua, acc, conf = evaluate(data.test, best_params, cfg)
    return best_params, FoldResult(data.session, ua, acc, best_epoch, conf)


def make_fold_data(manifest: Manifest, fold: Fold, features: dict[str, np.ndarray]) -> FoldData:
    by_id = {r.id: r for r in manifest.records}

    def items(ids):
        return [(features[i], manifest.label_index(by_id[i].label)) for i in ids]

    return FoldData(fold.session, manifest.class_names,
                    items(fold.train_ids), items(fold.val_ids), items(fold.test_ids))


def cross_validate(
    manifest: Manifest,
    cfg: TrainConfig,
    features: dict[str, np.ndarray] | None = None,
    val_fraction: float = 0.1,
    label_noise: float = 0.0,
    threads: int = 1,
) -> CVResult:
    """Leave-one-session-out CV; reports mean and population std over folds."""
    cfg.validate()
    if features is None:
        features = load_features(manifest)
    folds = split_folds(manifest, val_fraction, cfg.seed)
    datas = [make_fold_data(manifest, f, features) for f in folds]

    def run(fd: FoldData) -> FoldResult:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, fd.session]))
        return train_fold(fd, cfg, rng, label_noise)[1]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, datas))
    else:
        results = [run(fd) for fd in datas]
    results.sort(key=lambda r: r.session)
    mean_ua, std_ua, mean_acc, std_acc = aggregate_folds(results)
    return CVResult(cfg.asdict(), results, mean_ua, std_ua, mean_acc, std_acc)


def aggregate_folds(results: list[FoldResult]) -> tuple[float, float, float, float]:
    """Mean and population std of UA and accuracy over a complete fold set."""
    uas = np.array([r.ua for r in results])
    accs = np.array([r.accuracy for r in results])
    return float(uas.mean()), float(uas.std()), float(accs.mean()), float(accs.std())


def single_fold(
    manifest: Manifest,
    cfg: TrainConfig,
    session: int,
    features: dict[str, np.ndarray] | None = None,
    val_fraction: float = 0.1,
    label_noise: float = 0.0,
) -> tuple[HeadParams, FoldResult]:
    """Run exactly one leave-one-session-out fold (held-out session given)."""
    cfg.validate()
    if features is None:
        features = load_features(manifest)
    folds = [f for f in split_folds(manifest, val_fraction, cfg.seed) if f.session == session]
    if not folds:
        raise ConfigurationError(f"no session {session} in manifest (has {manifest.sessions()})")
    fd = make_fold_data(manifest, folds[0], features)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, session]))
    return train_fold(fd, cfg, rng, label_noise)


def sweep(
    manifest: Manifest,
    base_cfg: TrainConfig,
    grid: dict[str, list],
    features: dict[str, np.ndarray] | None = None,
    fold: int | None = None,
    val_fraction: float = 0.1,
    threads: int = 1,
) -> SweepResult:
    """Grid sweep: one full CV (or one designated fold) per grid cell.

    A failing cell is recorded with its error and the sweep continues; cell
    order follows the product of the axes as given.
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ConfigurationError("sweep grid must have at least one axis and no empty axis")
    valid = set(TrainConfig().asdict())
    unknown = set(grid) - valid
    if unknown:
        raise ConfigurationError(f"unknown sweep axes {sorted(unknown)}; valid keys: {sorted(valid)}")
    if features is None:
        features = load_features(manifest)
    axes = list(grid.keys())
    cells = []
    for combo in itertools.product(*grid.values()):
        coords = dict(zip(axes, combo))
        cell = CellResult(coords=coords)
        try:
            cfg = base_cfg.updated(**coords)
            if fold is None:
                cv = cross_validate(manifest, cfg, features, val_fraction, threads=threads)
                cell.folds = cv.folds
                cell.mean_ua, cell.std_ua = cv.mean_ua, cv.std_ua
                cell.mean_accuracy, cell.std_accuracy = cv.mean_accuracy, cv.std_accuracy
            else:
                _, fr = single_fold(manifest, cfg, fold, features, val_fraction)
                cell.folds = [fr]
                cell.mean_ua, cell.std_ua = fr.ua, 0.0
                cell.mean_accuracy, cell.std_accuracy = fr.accuracy, 0.0
        except CorrPoolError as e:
            cell.error = str(e)
        cells.append(cell)
    return SweepResult(config=base_cfg.asdict(), axes=axes, cells=cells)


def write_json(obj: dict, path) -> None:
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def write_cv_csv(result: CVResult, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["fold", "ua", "accuracy", "best_epoch"])
        for r in result.folds:
            w.writerow([r.session, repr(r.ua), repr(r.accuracy), r.best_epoch])


def write_sweep_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(result.axes + ["mean_ua", "std_ua", "mean_accuracy", "std_accuracy", "error"])
        for c in result.cells:
            stats = [("" if v is None else repr(v))
                     for v in (c.mean_ua, c.std_ua, c.mean_accuracy, c.std_accuracy)]
            w.writerow([c.coords[a] for a in result.axes] + stats + [c.error or ""])


def write_confusions(result: CVResult, class_names: tuple[str, ...], out_dir) -> None:
    """One confusion CSV per fold: true classes as rows, predictions as columns."""
    out_dir = Path(out_dir)
    for r in result.folds:
        with open(out_dir / f"confusion_fold{r.session}.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["true\\pred"] + list(class_names))
            for name, row in zip(class_names, r.confusion):
                w.writerow([name] + [int(x) for x in row])
