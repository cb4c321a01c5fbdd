"""Sentiment regression and binary classification metrics.

Binary accuracy on continuous scores comes in two conventions:

* ``nonneg``: negative vs non-negative, every example counts, classes split at ``>= 0``;
* ``pos``: negative vs positive, examples labelled exactly 0 are dropped, classes split at ``> 0``.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np


@dataclass
class MetricBundle:
    mae: float = float("nan")
    corr: float = float("nan")
    acc7: float = float("nan")
    acc2_nonneg: float = float("nan")
    acc2_pos: float = float("nan")
    f_nonneg: float = float("nan")
    f_pos: float = float("nan")
    acc2: float = float("nan")  # binary classification tasks
    f1: float = float("nan")
    accuracy: float = float("nan")  # multi-class tasks
    f1_per_class_nonneg: tuple = ()
    f1_per_class_pos: tuple = ()
    f1_per_class: tuple = ()

    def as_dict(self):
        out = {}
        for key, value in asdict(self).items():
            if isinstance(value, (tuple, list)):
                for i, v in enumerate(value):
                    out[f"{key}_{i}"] = v
            elif not np.isnan(value):
                out[key] = value
        return out


def _pair(preds, labels):
    preds = np.asarray(preds, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if preds.shape != labels.shape:
        raise ValueError(f"got {preds.size} predictions for {labels.size} labels")
    if preds.size == 0:
        raise ValueError("metrics need at least one example")
    return preds, labels


def mae(preds, labels):
    preds, labels = _pair(preds, labels)
    return float(np.mean(np.abs(preds - labels)))


def pearson(preds, labels):
    """Pearson correlation; 0.0 (with a warning) when either side has zero variance."""
    preds, labels = _pair(preds, labels)
    dp, dl = preds - preds.mean(), labels - labels.mean()
    denom = np.sqrt(np.sum(dp * dp) * np.sum(dl * dl))
    if denom == 0:
        warnings.warn("Pearson correlation undefined for constant input; returning 0", stacklevel=2)
        return 0.0
    return float(np.clip(np.sum(dp * dl) / denom, -1.0, 1.0))


def regression_metrics(preds, labels):
    return mae(preds, labels), pearson(preds, labels)


def f1_scores(pred_pos, true_pos):
    """Per-class F1 for (negative, positive) and their support-weighted mean."""
    pred_pos, true_pos = np.asarray(pred_pos, bool), np.asarray(true_pos, bool)
    per_class, support = [], []
    for cls in (False, True):
        tp = np.sum((pred_pos == cls) & (true_pos == cls))
        fp = np.sum((pred_pos == cls) & (true_pos != cls))
        fn = np.sum((pred_pos != cls) & (true_pos == cls))
        denom = 2 * tp + fp + fn
        per_class.append(float(2 * tp / denom) if denom else 0.0)
        support.append(int(np.sum(true_pos == cls)))
    total = sum(support)
    weighted = sum(f * s for f, s in zip(per_class, support)) / total if total else 0.0
    return float(weighted), tuple(per_class)


def binarize(preds, labels, convention):
    """Boolean (pred_positive, label_positive) arrays under a binary-accuracy convention."""
    preds, labels = _pair(preds, labels)
    if convention == "nonneg":
        return preds >= 0, labels >= 0
    if convention == "pos":
        keep = labels != 0
        if not keep.any():
            raise ValueError("neg/pos accuracy: every label is zero, nothing to evaluate")
        return preds[keep] > 0, labels[keep] > 0
    raise ValueError(f"unknown binary convention {convention!r}")


def acc2_fscore(preds, labels, convention="nonneg"):
    """(accuracy, weighted F1) for binary sentiment under ``convention``."""
    pred_pos, true_pos = binarize(preds, labels, convention)
    acc = float(np.mean(pred_pos == true_pos))
    return acc, f1_scores(pred_pos, true_pos)[0]


def round_half_away(x):
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def acc7(preds, labels):
    """Seven-class accuracy: clamp to [-3, 3], round half away from zero, compare classes."""
    preds, labels = _pair(preds, labels)
    p = round_half_away(np.clip(preds, -3.0, 3.0))
    y = round_half_away(np.clip(labels, -3.0, 3.0))
    return float(np.mean(p == y))


def binary_accuracy(logits, labels):
    """Argmax accuracy for two-class logits; ties go to class 0."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels).reshape(-1)
    if logits.ndim != 2 or logits.shape[1] != 2:
        raise ValueError(f"binary accuracy needs (N, 2) logits, got shape {logits.shape}")
    if logits.shape[0] != labels.size or labels.size == 0:
        raise ValueError(f"got {logits.shape[0]} predictions for {labels.size} labels")
    pred = np.where(logits[:, 1] > logits[:, 0], 1, 0)
    return float(np.mean(pred == labels))


def regression_bundle(preds, labels):
    m, c = regression_metrics(preds, labels)
    nn_pred, nn_true = binarize(preds, labels, "nonneg")
    pos_pred, pos_true = binarize(preds, labels, "pos")
    f_nn, per_nn = f1_scores(nn_pred, nn_true)
    f_pos, per_pos = f1_scores(pos_pred, pos_true)
    return MetricBundle(
        mae=m, corr=c, acc7=acc7(preds, labels),
        acc2_nonneg=float(np.mean(nn_pred == nn_true)), acc2_pos=float(np.mean(pos_pred == pos_true)),
        f_nonneg=f_nn, f_pos=f_pos, f1_per_class_nonneg=per_nn, f1_per_class_pos=per_pos,
    )


def classification_bundle(logits, labels):
    logits = np.asarray(logits)
    labels = np.asarray(labels).astype(np.int64)
    if logits.shape[1] == 2:
        pred = np.where(logits[:, 1] > logits[:, 0], 1, 0)
        f, per = f1_scores(pred == 1, labels == 1)
        return MetricBundle(acc2=binary_accuracy(logits, labels), f1=f, f1_per_class=per)
    return MetricBundle(accuracy=float(np.mean(np.argmax(logits, axis=1) == labels)))


def format_report(values):
    """Flat ``key = value`` text, one metric per line."""
    return "".join(f"{k} = {v!r}\n" for k, v in values.items())
