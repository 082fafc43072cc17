"""Euclidean k-NN with deterministic tie rules and stratified k-fold CV."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


class EmptyTrainingSet(ValueError):
    pass


class KTooLarge(ValueError):
    pass


class TooFewSamplesPerClass(ValueError):
    pass


@dataclass
class FeatureTable:
    sample_ids: list[str]
    labels: list[str]
    features: np.ndarray  # (n_samples, n_features)
    source_tag: str = "f"

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2D, got shape {self.features.shape}")
        n = self.features.shape[0]
        if len(self.sample_ids) != n or len(self.labels) != n:
            raise ValueError("sample_ids, labels and feature rows differ in length")

    def __len__(self):
        return len(self.labels)

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.labels))

    def subset(self, idx) -> "FeatureTable":
        idx = np.asarray(idx, dtype=np.intp)
        return FeatureTable(
            [self.sample_ids[i] for i in idx],
            [self.labels[i] for i in idx],
            self.features[idx],
            self.source_tag,
        )


@dataclass(frozen=True)
class CvConfig:
    folds: int = 10
    k_nn: int = 5
    seed: int = 0
    normalize: bool = True

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        if self.k_nn < 1:
            raise ValueError(f"k_nn must be >= 1, got {self.k_nn}")


@dataclass
class CvReport:
    classes: list[str]
    fold_accuracies: np.ndarray
    fold_sizes: np.ndarray
    confusion: np.ndarray  # rows = true class, cols = predicted
    config: CvConfig = field(default_factory=CvConfig)

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_accuracies, ddof=1))

    @property
    def accuracy(self) -> float:
        """Pooled accuracy over all held-out predictions."""
        return float(np.trace(self.confusion) / self.confusion.sum())


def _vote(order: np.ndarray, dists: np.ndarray, labels: list[str], k: int) -> str:
    """Majority among the first ``k`` of ``order`` (already sorted by distance, index).

    Vote ties go to the tied class whose nearest member is closest, then
    to the lexicographically smallest class name.
    """
    counts: dict[str, int] = {}
    nearest: dict[str, float] = {}
    for i in order[:k]:
        lab = labels[i]
        counts[lab] = counts.get(lab, 0) + 1
        nearest.setdefault(lab, dists[i])
    top = max(counts.values())
    tied = [lab for lab, c in counts.items() if c == top]
    return min(tied, key=lambda lab: (nearest[lab], lab))


def _sq_dists(train: np.ndarray, queries: np.ndarray) -> np.ndarray:
    diff = queries[:, None, :] - train[None, :, :]
    return np.einsum("qnd,qnd->qn", diff, diff)


def _predict(train_x: np.ndarray, train_labels: list[str], queries: np.ndarray, k: int) -> list[str]:
    d = _sq_dists(train_x, queries)
    out = []
    for row in d:
        order = np.argsort(row, kind="stable")  # equal distances keep index order
        out.append(_vote(order, row, train_labels, k))
    return out


def knn_predict(train: FeatureTable, query, k_nn: int) -> str:
    if len(train) == 0:
        raise EmptyTrainingSet("training table is empty")
    if k_nn > len(train):
        raise KTooLarge(f"k_nn={k_nn} exceeds {len(train)} training samples")
    q = np.asarray(getattr(query, "energies", query), dtype=np.float64).reshape(1, -1)
    return _predict(train.features, train.labels, q, k_nn)[0]


def stratified_folds(labels: list[str], folds: int, seed: int) -> np.ndarray:
    """Fold index per sample: seeded shuffle within each class, then round-robin.

    The round-robin counter carries over between classes (sorted by name)
    so fold sizes differ by at most one overall, not just per class.
    """
    labels_arr = np.asarray(labels)
    assignment = np.empty(len(labels), dtype=np.intp)
    rng = np.random.default_rng(seed)
    slot = 0
    for cls in sorted(set(labels)):
        members = np.flatnonzero(labels_arr == cls)
        if len(members) < folds:
            raise TooFewSamplesPerClass(
                f"class {cls!r} has {len(members)} samples, fewer than {folds} folds"
            )
        members = members[rng.permutation(len(members))]
        assignment[members] = (slot + np.arange(len(members))) % folds
        slot = (slot + len(members)) % folds
    return assignment


def _zscore(train: np.ndarray, test: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd[sd == 0] = 1.0
    return (train - mu) / sd, (test - mu) / sd


def cross_validate(table: FeatureTable, cfg: CvConfig = CvConfig()) -> CvReport:
    if len(set(table.labels)) < 2:
        raise ValueError("cross-validation needs at least two classes")
    classes = table.classes
    index = {c: i for i, c in enumerate(classes)}
    fold_of = stratified_folds(table.labels, cfg.folds, cfg.seed)

    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    accs, sizes = [], []
    for k in range(cfg.folds):
        test = np.flatnonzero(fold_of == k)
        train = np.flatnonzero(fold_of != k)
        if cfg.k_nn > len(train):
            raise KTooLarge(f"k_nn={cfg.k_nn} exceeds {len(train)} training samples")
        xtr, xte = table.features[train], table.features[test]
        if cfg.normalize:
            xtr, xte = _zscore(xtr, xte)
        pred = _predict(xtr, [table.labels[i] for i in train], xte, cfg.k_nn)
        hits = 0
        for i, p in zip(test, pred):
            confusion[index[table.labels[i]], index[p]] += 1
            hits += table.labels[i] == p
        accs.append(hits / len(test))
        sizes.append(len(test))
    return CvReport(classes, np.array(accs), np.array(sizes), confusion, cfg)


def write_cv_report(report: CvReport, path) -> None:
    """Per-fold rows ``fold,n_test,accuracy`` followed by a ``mean`` and ``std`` row."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fold", "n_test", "accuracy"])
        for i, (n, a) in enumerate(zip(report.fold_sizes, report.fold_accuracies)):
            w.writerow([i, int(n), repr(float(a))])
        w.writerow(["mean", int(report.fold_sizes.sum()), repr(report.mean)])
        w.writerow(["std", "", repr(report.std)])


def write_confusion(report: CvReport, path) -> None:
    """Square matrix with a ``true\\pred`` header row; rows are true classes."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["true\\pred"] + report.classes)
        for cls, row in zip(report.classes, report.confusion):
            w.writerow([cls] + [int(x) for x in row])
