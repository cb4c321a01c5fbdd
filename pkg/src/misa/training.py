"""Optimization loop: Adam, global-norm clipping, per-epoch exponential decay, early stopping."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import metrics as M
from .config import TrainConfig
from .data import batch_iter
from .losses import LossReport, NumericalError

log = logging.getLogger(__name__)

COMPONENTS = ("task", "sim", "diff", "recon", "total")


# -- optimizer ------------------------------------------------------------------
@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state, lr, betas=(0.9, 0.999), eps=1e-8):
    """One bias-corrected Adam update, in place on the ``params`` arrays (name -> ndarray)."""
    for name, g in grads.items():
        if g is not None and not np.all(np.isfinite(g)):
            raise NumericalError(f"gradient of {name!r} is not finite")
    b1, b2 = betas
    state.step += 1
    c1 = 1 - b1 ** state.step
    c2 = 1 - b2 ** state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= (lr * (m / c1) / (np.sqrt(v / c2) + eps)).astype(p.dtype)
    return params, state


def clip_grad_norm(params, max_norm):
    """Scale all gradients so their joint l2 norm is at most ``max_norm``; returns the pre-clip norm."""
    grads = [p.grad for p in params if p.grad is not None]
    total = math.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads))
    if max_norm is not None and max_norm > 0 and total > max_norm:
        scale = max_norm / (total + 1e-6)
        for p in params:
            if p.grad is not None:
                p.grad = (p.grad * scale).astype(p.grad.dtype)
    return total


# -- training -------------------------------------------------------------------
@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train: dict
    val: dict

    def to_json(self):
        return {"epoch": self.epoch, "lr": self.lr, "train": self.train, "val": self.val}


@dataclass
class TrainState:
    epoch: int = 0
    best_val_total: float = math.inf
    best_val_task: float = math.inf
    best_epoch: int = 0
    since_improvement: int = 0
    lr: float = 0.0
    adam: AdamState = field(default_factory=AdamState)


@dataclass
class TrainResult:
    history: list
    best_state: dict
    best_epoch: int
    state: TrainState


def _average(reports):
    """Batch-size weighted mean of LossReports; ``reports`` is a list of (report, n)."""
    n_total = sum(n for _, n in reports)
    return {k: float(sum(getattr(r, k) * n for r, n in reports) / n_total) for k in COMPONENTS}


def split_losses(model, split, cfg, batch_size=None):
    """Eval-mode loss components averaged over a split."""
    if not split:
        raise ValueError("cannot compute losses on an empty split")
    reports = []
    for batch in batch_iter(split, batch_size or cfg.batch_size, cfg.seed, 0, model.config.modalities,
                            model.config.task, shuffle=False):
        result = model.forward(batch, training=False)
        reports.append((model.losses(result, batch.labels, cfg.weights, cfg.cmd), len(batch)))
    return _average(reports)


def train(model, data, cfg: TrainConfig, on_epoch=None):
    """Train ``model`` on ``data.train``, selecting and stopping on ``data.dev``.

    The checkpoint with the lowest validation task loss is kept and loaded back
    into ``model`` at the end. The patience counter tracks the validation total
    loss; training stops once it has not improved for ``cfg.patience`` epochs.
    """
    if not data.train or not data.dev:
        raise ValueError("training needs non-empty train and dev splits")
    params = dict(model.named_parameters())
    state = TrainState(lr=cfg.learning_rate)
    history = []
    best_state = model.state_dict()
    for epoch in range(1, cfg.max_epochs + 1):
        state.epoch = epoch
        state.lr = cfg.learning_rate * cfg.lr_decay ** (epoch - 1)
        reports = []
        for batch in batch_iter(data.train, cfg.batch_size, cfg.seed, epoch, model.config.modalities,
                                model.config.task):
            model.zero_grad()
            result = model.forward(batch, training=True)
            report = model.losses(result, batch.labels, cfg.weights, cfg.cmd)
            report.tensor.backward()
            clip_grad_norm(params.values(), cfg.grad_clip)
            adam_step({k: p.data for k, p in params.items()}, {k: p.grad for k, p in params.items()},
                      state.adam, state.lr)
            reports.append((report, len(batch)))
        model.zero_grad()
        val = split_losses(model, data.dev, cfg)
        record = EpochRecord(epoch, state.lr, _average(reports), val)
        history.append(record)
        if val["task"] < state.best_val_task:
            state.best_val_task = val["task"]
            state.best_epoch = epoch
            best_state = model.state_dict()
        if val["total"] < state.best_val_total:
            state.best_val_total = val["total"]
            state.since_improvement = 0
        else:
            state.since_improvement += 1
        log.info("epoch %d lr %.3g train %.4f val %.4f", epoch, state.lr, record.train["total"], val["total"])
        if on_epoch is not None:
            on_epoch(record)
        if state.since_improvement >= cfg.patience:
            break
    model.load_state_dict(best_state)
    return TrainResult(history, best_state, state.best_epoch, state)


# -- evaluation -----------------------------------------------------------------
@dataclass
class EvalResult:
    metrics: M.MetricBundle
    ids: list
    labels: np.ndarray
    outputs: np.ndarray
    rows: list
    attention: np.ndarray  # (N, R, R), averaged over heads
    shared: dict = field(default_factory=dict)  # modality -> (N, d_h)
    private: dict = field(default_factory=dict)


def evaluate(model, split, batch_size=64):
    """Eval-mode predictions, metric bundle, embeddings and attention maps for a split."""
    if not split:
        raise ValueError("cannot evaluate an empty split")
    ids, labels, outputs, attention = [], [], [], []
    shared, private = {}, {}
    for batch in batch_iter(split, batch_size, 0, 0, model.config.modalities, model.config.task, shuffle=False):
        result = model.forward(batch, training=False)
        ids.extend(batch.ids)
        labels.append(batch.labels)
        outputs.append(result.output.data)
        attention.append(result.attention.mean(axis=1))
        for m, t in result.reps.shared.items():
            shared.setdefault(m, []).append(t.data)
        for m, t in result.reps.private.items():
            private.setdefault(m, []).append(t.data)
    labels = np.concatenate(labels)
    outputs = np.concatenate(outputs)
    if model.config.task == "regression":
        if outputs.shape[1] != 1:
            raise ValueError("regression evaluation needs a single output per example")
        bundle = M.regression_bundle(outputs[:, 0], labels)
    else:
        if not np.issubdtype(labels.dtype, np.integer):
            raise ValueError("classification evaluation needs integer class labels")
        bundle = M.classification_bundle(outputs, labels)
    return EvalResult(
        bundle, ids, labels, outputs, list(model.config.fusion_rows), np.concatenate(attention),
        {m: np.concatenate(v) for m, v in shared.items()}, {m: np.concatenate(v) for m, v in private.items()},
    )


def report_from_dict(values):
    return LossReport(**{k: values[k] for k in COMPONENTS})
