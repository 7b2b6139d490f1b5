"""Dataset container, splits, k-NN and Gaussian Naive Bayes baselines, metrics.

k-NN runs on z-scored features with Euclidean distance. Tie-breaks are fixed
for reproducibility: equal distances prefer the lower training-row index,
vote ties prefer the smallest class index.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .features import FEATURE_COLUMNS, FeatureVector
from .signalsim import StructureClass, _apportion


@dataclass
class LabeledDataset:
    """Feature rows with integer class labels and optional per-row metadata."""

    rows: np.ndarray  # (n, n_features) float
    labels: np.ndarray  # (n,) int, indices into classes
    classes: list[StructureClass] = field(default_factory=lambda: list(StructureClass))
    meta: list[dict] | None = None

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if len(self.rows) != len(self.labels):
            raise ValueError("rows and labels must have equal length")
        if len(self.rows) == 0:
            raise ValueError("dataset must hold at least one row")

    def __len__(self):
        return len(self.rows)

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=int)
        meta = [self.meta[i] for i in idx] if self.meta is not None else None
        return LabeledDataset(self.rows[idx], self.labels[idx], self.classes, meta)

    def select_columns(self, mask) -> "LabeledDataset":
        return LabeledDataset(self.rows[:, np.asarray(mask)], self.labels, self.classes, self.meta)

    @classmethod
    def from_vectors(cls, vectors: list[FeatureVector], labels: list[StructureClass], meta=None):
        rows = np.stack([v.as_array() for v in vectors])
        classes = list(StructureClass)
        idx = np.array([classes.index(lbl) for lbl in labels])
        return cls(rows, idx, classes, meta)


def split(
    ds: LabeledDataset,
    ratios,
    seed: int = 0,
    stratified: bool = False,
) -> list[LabeledDataset]:
    """Partition a dataset by ``ratios`` (must sum to 1), deterministically.

    Part sizes come from largest-remainder rounding (floor every part, then
    hand out leftovers by descending fractional share). Stratified mode
    applies the same rule within each class, keeping class proportions within
    one row of exact.
    """
    ratios = list(ratios)
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    rng = np.random.default_rng(seed)

    if not stratified:
        order = rng.permutation(len(ds))
        counts = _apportion(len(ds), ratios)
        return [ds.subset(np.sort(chunk)) for chunk in _consume(order, counts)]

    part_indices: list[list[int]] = [[] for _ in ratios]
    for cls_idx in np.unique(ds.labels):
        members = np.flatnonzero(ds.labels == cls_idx)
        members = members[rng.permutation(len(members))]
        counts = _apportion(len(members), ratios)
        if any(c == 0 for c in counts):
            raise ValueError(
                f"class index {cls_idx} has too few rows ({len(members)}) to stratify"
            )
        for part, chunk in zip(part_indices, _consume(members, counts)):
            part.extend(chunk)
    return [ds.subset(np.sort(part)) for part in part_indices]


def _consume(order, counts):
    pos = 0
    for c in counts:
        yield order[pos : pos + c]
        pos += c


class Normalizer:
    """Per-feature z-scoring fit on a training split.

    Constant features (zero std) are dropped with a warning and excluded
    from the transformed output.
    """

    def __init__(self, rows: np.ndarray):
        rows = np.asarray(rows, dtype=float)
        self.mean = rows.mean(axis=0)
        self.std = rows.std(axis=0)
        self.keep = self.std > 0
        if not self.keep.all():
            dropped = np.flatnonzero(~self.keep).tolist()
            warnings.warn(f"dropping constant feature columns {dropped}", stacklevel=2)
        if not self.keep.any():
            raise ValueError("all features are constant; nothing to normalize")

    def transform(self, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        return (rows[:, self.keep] - self.mean[self.keep]) / self.std[self.keep]


@dataclass
class KnnModel:
    train_rows: np.ndarray  # normalized
    train_labels: np.ndarray
    normalizer: Normalizer
    n_classes: int


def knn_fit(ds: LabeledDataset) -> KnnModel:
    norm = Normalizer(ds.rows)
    return KnnModel(norm.transform(ds.rows), ds.labels, norm, len(ds.classes))


def knn_predict(model: KnnModel, query, k: int) -> int:
    """Majority label among the k nearest training rows of one query row."""
    return int(knn_predict_batch(model, np.atleast_2d(query), k)[0])


def knn_predict_batch(model: KnnModel, queries: np.ndarray, k: int) -> np.ndarray:
    if not 1 <= k <= len(model.train_rows):
        raise ValueError(f"k must be in [1, {len(model.train_rows)}], got {k}")
    q = model.normalizer.transform(queries)
    d2 = (
        np.sum(q**2, axis=1)[:, None]
        + np.sum(model.train_rows**2, axis=1)[None, :]
        - 2.0 * q @ model.train_rows.T
    )
    # stable sort keeps the lower row index first on distance ties
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
    votes = model.train_labels[nearest]
    out = np.empty(len(q), dtype=int)
    for i, row in enumerate(votes):
        out[i] = np.bincount(row, minlength=model.n_classes).argmax()
    return out


def sweep_k(
    ds: LabeledDataset,
    k_range=range(1, 31),
    folds: int = 10,
    seed: int = 0,
) -> tuple[int, dict[int, float]]:
    """Mean cross-validated accuracy per k; best k breaks ties downward."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    assignments = _fold_assignments(ds, folds, seed)
    curve = {int(k): 0.0 for k in k_range}
    for fold in range(folds):
        train = ds.subset(np.flatnonzero(assignments != fold))
        val = ds.subset(np.flatnonzero(assignments == fold))
        model = knn_fit(train)
        for k in curve:
            if k > len(train):
                continue
            preds = knn_predict_batch(model, val.rows, k)
            curve[k] += float(np.mean(preds == val.labels)) / folds
    best_k = max(curve, key=lambda k: (curve[k], -k))
    return best_k, curve


def _fold_assignments(ds: LabeledDataset, folds: int, seed: int) -> np.ndarray:
    """Stratified fold index per row, deterministic in seed."""
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(ds), dtype=int)
    for cls_idx in np.unique(ds.labels):
        members = np.flatnonzero(ds.labels == cls_idx)
        members = members[rng.permutation(len(members))]
        assignment[members] = np.arange(len(members)) % folds
    return assignment


@dataclass
class GnbModel:
    class_log_prior: np.ndarray  # (C,)
    mean: np.ndarray  # (C, F)
    var: np.ndarray  # (C, F), floored
    classes: list[StructureClass]


def gnb_train(ds: LabeledDataset, var_floor: float = 1e-9) -> GnbModel:
    """Gaussian class-conditional fit with training-frequency priors."""
    n_classes = len(ds.classes)
    n_feat = ds.rows.shape[1]
    mean = np.zeros((n_classes, n_feat))
    var = np.full((n_classes, n_feat), var_floor)
    counts = np.bincount(ds.labels, minlength=n_classes)
    present = np.flatnonzero(counts)
    if any(0 < counts[c] < 2 for c in present):
        raise ValueError("every class present needs >= 2 samples")
    for c in present:
        rows = ds.rows[ds.labels == c]
        mean[c] = rows.mean(axis=0)
        var[c] = np.maximum(rows.var(axis=0), var_floor)
    with np.errstate(divide="ignore"):
        log_prior = np.where(counts > 0, np.log(counts / len(ds)), -np.inf)
    return GnbModel(log_prior, mean, var, ds.classes)


def gnb_log_posterior(model: GnbModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    ll = -0.5 * np.sum(
        np.log(2 * np.pi * model.var) + (x[None, :] - model.mean) ** 2 / model.var,
        axis=1,
    )
    return model.class_log_prior + ll


def gnb_predict(model: GnbModel, x) -> int:
    return int(np.argmax(gnb_log_posterior(model, x)))  # argmax ties -> smallest index


@dataclass
class Metrics:
    accuracy: float
    precision: np.ndarray  # per class
    recall: np.ndarray
    f1: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: np.ndarray  # (C, C) counts, rows = true class

    def normalized_confusion(self) -> np.ndarray:
        totals = self.confusion.sum(axis=1, keepdims=True)
        return np.divide(
            self.confusion, totals, out=np.zeros_like(self.confusion, dtype=float),
            where=totals > 0,
        )


def evaluate(predictions, labels, n_classes: int = 5) -> Metrics:
    """Confusion counts and precision/recall/F1 with the 0/0 -> 0 convention."""
    preds = np.asarray(predictions, dtype=int)
    labels = np.asarray(labels, dtype=int)
    if preds.shape != labels.shape:
        raise ValueError("predictions and labels must have equal length")
    confusion = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(confusion, (labels, preds), 1)

    tp = np.diag(confusion).astype(float)
    pred_totals = confusion.sum(axis=0).astype(float)
    true_totals = confusion.sum(axis=1).astype(float)
    precision = _safe_div(tp, pred_totals)
    recall = _safe_div(tp, true_totals)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return Metrics(
        accuracy=float(tp.sum() / len(labels)),
        precision=precision,
        recall=recall,
        f1=f1,
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        confusion=confusion,
    )


def _safe_div(num, den):
    return np.divide(num, den, out=np.zeros_like(num, dtype=float), where=den > 0)
