"""Dataset ingestion, standardization, the split protocol, and metrics.

The experiment protocol: per repeat, shuffle and cut a 60% pool / 40% test
split, draw a small (stratified) training set from the pool, and use the
pool remainder for validation.  Standardization statistics come from the
pool only, so nothing leaks from the test set.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .svm import TrainingSet


@dataclass
class Dataset:
    """Feature matrix with +/-1 labels."""

    samples: np.ndarray
    labels: np.ndarray
    feature_names: list[str] | None = None

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if self.samples.shape[0] != self.labels.shape[0]:
            raise ValueError("sample count does not match label count")
        if not np.isin(self.labels, (-1, 1)).all():
            raise ValueError("labels must be -1 or +1")
        if not np.isfinite(self.samples).all():
            raise ValueError("features must be finite")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_features(self) -> int:
        return self.samples.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.samples[idx], self.labels[idx], self.feature_names)

    def to_training_set(self) -> TrainingSet:
        return TrainingSet(self.samples, self.labels)


def load_csv(path: str | Path, label_column: str, positive_label: str) -> Dataset:
    """Parse a headered CSV into features and +/-1 labels.

    Rows with missing or non-numeric feature values are collected and
    reported together, indexed by data-row number (header excluded).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = list(reader)
    if label_column not in header:
        raise ValueError(f"{path}: missing label column {label_column!r}")
    label_idx = header.index(label_column)
    feature_names = [h for i, h in enumerate(header) if i != label_idx]

    samples, labels, bad_rows = [], [], []
    for r, row in enumerate(rows):
        if len(row) != len(header):
            bad_rows.append((r, "wrong field count"))
            continue
        feats = []
        ok = True
        for i, value in enumerate(row):
            if i == label_idx:
                continue
            value = value.strip()
            if value == "":
                bad_rows.append((r, f"missing value in {header[i]!r}"))
                ok = False
                break
            try:
                feats.append(float(value))
            except ValueError:
                bad_rows.append((r, f"non-numeric value {value!r} in {header[i]!r}"))
                ok = False
                break
        if ok:
            samples.append(feats)
            labels.append(1 if row[label_idx].strip() == positive_label else -1)
    if bad_rows:
        listing = "; ".join(f"row {r}: {why}" for r, why in bad_rows[:20])
        raise ValueError(f"{path}: {len(bad_rows)} bad rows ({listing})")
    if not samples:
        raise ValueError(f"{path}: no data rows")
    return Dataset(np.array(samples), np.array(labels), feature_names)


def standardize(train_pool: Dataset, others: list[Dataset]) -> tuple[Dataset, list[Dataset]]:
    """Z-score every dataset with per-feature statistics from the pool only.

    Zero-variance features map to 0 everywhere (with a warning).
    """
    mu = train_pool.samples.mean(axis=0)
    sigma = train_pool.samples.std(axis=0)
    dead = sigma == 0
    if dead.any():
        names = (
            [train_pool.feature_names[i] for i in np.where(dead)[0]]
            if train_pool.feature_names
            else list(np.where(dead)[0])
        )
        warnings.warn(f"zero-variance features mapped to 0: {names}")
    safe_sigma = np.where(dead, 1.0, sigma)

    def transform(ds: Dataset) -> Dataset:
        z = (ds.samples - mu) / safe_sigma
        z[:, dead] = 0.0
        return Dataset(z, ds.labels, ds.feature_names)

    return transform(train_pool), [transform(ds) for ds in others]


@dataclass
class SplitSpec:
    """Pool/test cut plus the small-training-draw protocol."""

    pool_fraction: float = 0.6
    train_size: int = 6
    repeats: int = 10
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.pool_fraction < 1.0:
            raise ValueError("pool_fraction must be in (0, 1)")
        if self.train_size < 2:
            raise ValueError("train_size must be >= 2")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


def make_splits(data: Dataset, spec: SplitSpec) -> list[tuple[Dataset, Dataset, Dataset]]:
    """(train, validation, test) triples, one per repeat.

    Pool size is round(pool_fraction * M); the remainder is the test set.
    Stratified draws take ceil(train_size / 2) positives.  Each repeat is a
    pure function of (seed, repeat index).
    """
    m = data.n_samples
    pool_size = int(round(spec.pool_fraction * m))
    if spec.train_size > pool_size:
        raise ValueError("train_size exceeds pool size")
    out = []
    for r in range(spec.repeats):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, r]))
        perm = rng.permutation(m)
        pool, test = perm[:pool_size], perm[pool_size:]
        if spec.stratified:
            n_pos = int(np.ceil(spec.train_size / 2))
            n_neg = spec.train_size - n_pos
            pos_pool = pool[data.labels[pool] == 1]
            neg_pool = pool[data.labels[pool] == -1]
            if len(pos_pool) < n_pos or len(neg_pool) < n_neg:
                raise ValueError(
                    f"repeat {r}: pool has {len(pos_pool)} positives / "
                    f"{len(neg_pool)} negatives, need {n_pos}/{n_neg}"
                )
            train_idx = np.concatenate([pos_pool[:n_pos], neg_pool[:n_neg]])
        else:
            train_idx = pool[: spec.train_size]
        train_set = set(train_idx.tolist())
        val_idx = np.array([i for i in pool if i not in train_set], dtype=np.int64)
        out.append((data.subset(train_idx), data.subset(val_idx), data.subset(test)))
    return out


def confusion(y_true, y_pred) -> tuple[int, int, int, int]:
    """(TP, FP, TN, FN) with positive label +1."""
    y_true = np.asarray(y_true).ravel()
    y_pred = np.asarray(y_pred).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError("label arrays differ in length")
    tp = int(((y_true == 1) & (y_pred == 1)).sum())
    fp = int(((y_true == -1) & (y_pred == 1)).sum())
    tn = int(((y_true == -1) & (y_pred == -1)).sum())
    fn = int(((y_true == 1) & (y_pred == -1)).sum())
    return tp, fp, tn, fn


def metrics_from_confusion(conf: tuple[int, int, int, int]) -> dict[str, float]:
    """Accuracy, precision, recall, F1; zero-denominator cases map to 0."""
    tp, fp, tn, fn = conf
    total = tp + fp + tn + fn
    if total == 0:
        raise ValueError("empty confusion")
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn > 0 else 0.0
    return {
        "accuracy": (tp + tn) / total,
        "precision": precision,
        "recall": recall,
        "f1": f1,
    }


METRIC_NAMES = ("accuracy", "precision", "recall", "f1")


@dataclass
class MetricsReport:
    """Per-split metric dicts plus their mean and population std."""

    per_split: list[dict]
    mean: dict[str, float]
    std: dict[str, float]

    def to_json(self) -> dict:
        return {"per_split": self.per_split, "mean": self.mean, "std": self.std}


def aggregate(per_split: list[dict]) -> MetricsReport:
    """Mean and population (divisor-n) standard deviation per metric."""
    if not per_split:
        raise ValueError("no split reports to aggregate")
    mean, std = {}, {}
    for name in METRIC_NAMES:
        values = np.array([s[name] for s in per_split], dtype=np.float64)
        mean[name] = float(values.mean())
        std[name] = float(values.std())
    return MetricsReport(per_split=list(per_split), mean=mean, std=std)


def evaluate_predictions(y_true, y_pred) -> dict:
    """Confusion plus derived metrics for one split."""
    conf = confusion(y_true, y_pred)
    out = metrics_from_confusion(conf)
    out["confusion"] = {"tp": conf[0], "fp": conf[1], "tn": conf[2], "fn": conf[3]}
    return out
