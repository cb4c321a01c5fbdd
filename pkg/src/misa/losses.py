"""Similarity (CMD), difference (soft orthogonality), reconstruction and task losses."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .config import MODALITIES, CmdConfig
from .tensor import Tensor


class NumericalError(FloatingPointError):
    """A loss component became non-finite."""


@dataclass
class BatchRepresentations:
    """Per-modality (N, d_h) tensors for one batch; absent subspaces are simply missing keys."""

    utterance: dict = field(default_factory=dict)  # u_m
    shared: dict = field(default_factory=dict)  # h^c_m
    private: dict = field(default_factory=dict)  # h^p_m
    reconstruction: dict = field(default_factory=dict)  # decoder output

    def batch_size(self):
        for group in (self.utterance, self.shared, self.private):
            for t in group.values():
                return t.shape[0]
        return 0


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _pairs(keys):
    ordered = [m for m in MODALITIES if m in keys] + sorted(k for k in keys if k not in MODALITIES)
    return list(itertools.combinations(ordered, 2))


def cmd(x, y, cfg=None):
    """Central moment discrepancy between two samples (rows) on the bounded interval.

    ``||E(x) - E(y)|| / |b-a| + sum_{k=2..K} ||C_k(x) - C_k(y)|| / |b-a|^k`` with
    ``C_k`` the vector of k-th order central moments of each coordinate.
    """
    cfg = cfg or CmdConfig()
    x, y = _as_tensor(x), _as_tensor(y)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
        raise T.ShapeError(f"cmd: need (N, d) and (M, d) samples, got {x.shape} and {y.shape}")
    if x.shape[0] < 1 or y.shape[0] < 1:
        raise ValueError("cmd: both samples need at least one row")
    a, b = cfg.interval
    for name, s in (("x", x), ("y", y)):
        if s.data.min() < a - 1e-6 or s.data.max() > b + 1e-6:
            raise ValueError(f"cmd: sample {name} leaves the interval [{a}, {b}]")
    width = abs(b - a) if cfg.scale_by_interval else 1.0
    mx, my = x.mean(axis=0), y.mean(axis=0)
    total = T.l2_norm(mx - my) * (1.0 / width)
    cx, cy = x - mx, y - my
    for k in range(2, cfg.K + 1):
        diff = (cx ** k).mean(axis=0) - (cy ** k).mean(axis=0)
        total = total + T.l2_norm(diff) * (1.0 / width ** k)
    return total


def similarity_loss(shared, cfg=None):
    """Mean CMD over every pair of modality-invariant matrices."""
    pairs = _pairs(shared)
    if not pairs:
        return Tensor(np.zeros((), dtype=_dtype(shared)))
    total = None
    for m1, m2 in pairs:
        term = cmd(shared[m1], shared[m2], cfg)
        total = term if total is None else total + term
    return total * (1.0 / len(pairs))


def _dtype(group):
    for t in group.values():
        return t.dtype
    return np.float32


def normalize_rows(h):
    """Subtract the per-column batch mean, then scale each row to unit l2 norm (zero rows stay zero)."""
    h = _as_tensor(h)
    centered = h - h.mean(axis=0, keepdims=True)
    norms = T.l2_norm(centered, axis=1, keepdims=True)
    # rows at rounding level (e.g. a constant column minus its mean) count as zero
    scale = float(np.abs(h.data).max(initial=0.0))
    tiny = 16 * np.finfo(h.dtype).eps * scale * np.sqrt(h.shape[1])
    zero = (norms.data <= tiny).astype(norms.dtype)
    return centered * (1 - zero) / (norms + zero)


def orthogonality(h1, h2):
    """Squared Frobenius norm of h1^T h2 after normalizing both."""
    return T.frobenius_sq(T.transpose(normalize_rows(h1)) @ normalize_rows(h2))


def difference_loss(shared, private):
    """Soft orthogonality between each shared/private pair and between private pairs."""
    n = next(iter(private.values())).shape[0] if private else 0
    if n < 2:
        warnings.warn("difference loss with batch size < 2: mean-centering zeroes every matrix", stacklevel=2)
    total = None
    for m in MODALITIES:
        if m in shared and m in private:
            term = orthogonality(shared[m], private[m])
            total = term if total is None else total + term
    for m1, m2 in _pairs(private):
        term = orthogonality(private[m1], private[m2])
        total = term if total is None else total + term
    if total is None:
        return Tensor(np.zeros((), dtype=_dtype(private) if private else _dtype(shared)))
    return total


def reconstruction_loss(utterance, reconstruction, hidden=None):
    """Average over modalities of the per-example squared error divided by d_h, averaged over the batch."""
    terms = []
    for m, u in utterance.items():
        if m not in reconstruction:
            continue
        u, u_hat = _as_tensor(u), _as_tensor(reconstruction[m])
        if u.shape != u_hat.shape:
            raise T.ShapeError(f"reconstruction: shapes {u.shape} and {u_hat.shape} differ for modality {m!r}")
        d = hidden or u.shape[-1]
        terms.append(((u - u_hat) ** 2).sum(axis=1).mean() * (1.0 / d))
    if not terms:
        return Tensor(np.zeros((), dtype=_dtype(utterance)))
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total * (1.0 / len(terms))


def task_loss(predictions, labels, kind="regression"):
    """Mean squared error for regression, mean cross-entropy over softmax(logits) for classification."""
    predictions = _as_tensor(predictions)
    labels = np.asarray(labels)
    n = predictions.shape[0]
    if labels.shape[0] != n:
        raise T.ShapeError(f"task loss: {n} predictions but {labels.shape[0]} labels")
    if kind == "regression":
        pred = predictions.reshape(n) if predictions.ndim > 1 else predictions
        y = Tensor(labels.astype(predictions.dtype).reshape(n))
        return ((y - pred) ** 2).mean()
    if kind == "classification":
        c = predictions.shape[-1]
        if not np.all((labels >= 0) & (labels < c) & (labels == np.round(labels))):
            raise ValueError(f"task loss: class labels must be integers in [0, {c})")
        logp = T.log_softmax(predictions, axis=-1)
        picked = logp[np.arange(n), labels.astype(np.int64)]
        return -picked.mean()
    raise ValueError(f"unknown task kind {kind!r}")


@dataclass
class LossReport:
    task: float
    sim: float
    diff: float
    recon: float
    total: float
    tensor: Tensor = field(default=None, repr=False, compare=False)

    def as_dict(self):
        return {"task": self.task, "sim": self.sim, "diff": self.diff, "recon": self.recon, "total": self.total}


def total_loss(components, weights):
    """Combine components as task + alpha*sim + beta*diff + gamma*recon.

    Missing components count as exactly zero. Raises :class:`NumericalError`
    naming the first non-finite component.
    """
    parts = {}
    like = components["task"]
    for name in ("task", "sim", "diff", "recon"):
        value = components.get(name)
        if value is None:
            value = Tensor(np.zeros((), dtype=like.dtype))
        value = _as_tensor(value) if not isinstance(value, Tensor) else value
        if not np.all(np.isfinite(value.data)):
            raise NumericalError(f"loss component {name!r} is not finite ({float(value.data)})")
        parts[name] = value
    total = (parts["task"] + parts["sim"] * weights.alpha + parts["diff"] * weights.beta
             + parts["recon"] * weights.gamma)
    if not math.isfinite(float(total.data)):
        raise NumericalError("total loss is not finite")
    return LossReport(*(float(parts[k].data) for k in ("task", "sim", "diff", "recon")), float(total.data),
                      tensor=total)
