"""Multimodal utterance datasets: a synthetic generator, a text interchange format, batching.

A dataset directory holds ``manifest.json`` and one JSON-lines file per split
(``train.jsonl``, ``dev.jsonl``, ``test.jsonl``). Each line is one example::

    {"id": "train-0", "label": 0.73, "l": [[...], ...], "v": [[...]], "a": [[...]]}

where every modality is a list of ``T_m`` timesteps of ``d_m`` floats.
"""

from __future__ import annotations

import json
import math
import os
import queue
import threading
from dataclasses import dataclass, field

import numpy as np

from .config import MODALITIES, ConfigError

SPLITS = ("train", "dev", "test")
FORMAT_NAME = "misa-dataset"
FORMAT_VERSION = 1


class DatasetError(ValueError):
    """Malformed or inconsistent dataset contents."""


@dataclass
class MultimodalExample:
    id: str
    label: float  # class index for classification
    sequences: dict  # modality -> (T_m, d_m) float32 array


@dataclass
class Manifest:
    dims: dict
    task: str = "regression"
    n_classes: int = 2
    label_range: tuple = (-3.0, 3.0)
    modalities: tuple = MODALITIES

    def to_json(self):
        return {
            "format": FORMAT_NAME, "version": FORMAT_VERSION, "task": self.task, "n_classes": self.n_classes,
            "label_range": list(self.label_range), "modalities": list(self.modalities),
            "dims": {m: int(self.dims[m]) for m in self.modalities},
        }

    @classmethod
    def from_json(cls, obj):
        if obj.get("format") != FORMAT_NAME:
            raise DatasetError(f"manifest format must be {FORMAT_NAME!r}, got {obj.get('format')!r}")
        if obj.get("version") != FORMAT_VERSION:
            raise DatasetError(f"unsupported manifest version {obj.get('version')!r}")
        try:
            return cls(
                dims={m: int(d) for m, d in obj["dims"].items()}, task=obj["task"],
                n_classes=int(obj.get("n_classes", 2)), label_range=tuple(obj.get("label_range", (-3.0, 3.0))),
                modalities=tuple(obj.get("modalities", MODALITIES)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"malformed manifest: {exc}") from None


@dataclass
class DatasetSplits:
    train: list
    dev: list
    test: list
    manifest: Manifest

    def split(self, name):
        if name not in SPLITS:
            raise KeyError(f"unknown split {name!r}")
        return getattr(self, name)

    def validate(self):
        seen = set()
        for name in SPLITS:
            for ex in self.split(name):
                if ex.id in seen:
                    raise DatasetError(f"example id {ex.id!r} appears in more than one split")
                seen.add(ex.id)
                validate_example(ex, self.manifest)
        return self


def validate_example(ex, manifest, where=""):
    for m in manifest.modalities:
        if m not in ex.sequences:
            raise DatasetError(f"{where}example {ex.id!r}: missing modality {m!r}")
        seq = ex.sequences[m]
        if seq.ndim != 2 or seq.shape[0] < 1:
            raise DatasetError(f"{where}example {ex.id!r}: modality {m!r} needs T >= 1 timesteps, got shape {seq.shape}")
        if seq.shape[1] != manifest.dims[m]:
            raise DatasetError(
                f"{where}example {ex.id!r}: modality {m!r} has d={seq.shape[1]}, manifest says {manifest.dims[m]}")
        if not np.all(np.isfinite(seq)):
            raise DatasetError(f"{where}example {ex.id!r}: modality {m!r} contains non-finite values")
    if manifest.task == "classification":
        if float(ex.label) != int(ex.label) or not 0 <= int(ex.label) < manifest.n_classes:
            raise DatasetError(f"{where}example {ex.id!r}: label {ex.label!r} is not a class in [0, {manifest.n_classes})")
    elif not math.isfinite(ex.label):
        raise DatasetError(f"{where}example {ex.id!r}: label is not finite")


# -- synthetic generator ------------------------------------------------------
@dataclass
class SynthConfig:
    n_train: int = 256
    n_dev: int = 64
    n_test: int = 64
    dims: dict = field(default_factory=lambda: {"l": 16, "v": 8, "a": 8})
    t_range: tuple = (3, 8)
    shared_strength: dict = field(default_factory=lambda: {"l": 1.0, "v": 1.0, "a": 1.0})
    private_strength: dict = field(default_factory=lambda: {"l": 1.0, "v": 1.0, "a": 1.0})
    private_dim: int = 3
    noise: float = 0.1
    jitter: float = 0.1
    task: str = "regression"
    n_classes: int = 2
    label_range: tuple = (-3.0, 3.0)
    seed: int = 0

    def __post_init__(self):
        if min(self.dims.values()) < 1 or self.private_dim < 1:
            raise ConfigError("synthetic dims must be >= 1")
        if min(self.shared_strength.values()) < 0 or min(self.private_strength.values()) < 0 or self.noise < 0:
            raise ConfigError("synthetic strengths and noise must be >= 0")
        lo, hi = self.t_range
        if lo < 1 or hi < lo:
            raise ConfigError(f"invalid sequence length range {self.t_range}")


def generate_synthetic(cfg):
    """Draw train/dev/test splits from a shared-plus-private latent factor model.

    Each example gets a latent affect score ``z`` uniform on the label range and a
    private style vector per modality. A modality's frames are a fixed affine map of
    ``[shared_strength * z, private_strength * style * (1 + jitter_t)]`` plus
    Gaussian noise. The label is ``z`` for regression; for classification ``z`` is
    cut into ``n_classes`` equal-width bins.
    """
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.label_range
    k = cfg.private_dim
    mixing, offset = {}, {}
    for m in MODALITIES:
        mixing[m] = rng.normal(size=(1 + k, cfg.dims[m])) / math.sqrt(1 + k)
        offset[m] = rng.normal(scale=0.1, size=cfg.dims[m])
    splits = {}
    for split, n in (("train", cfg.n_train), ("dev", cfg.n_dev), ("test", cfg.n_test)):
        examples = []
        for i in range(n):
            z = rng.uniform(lo, hi)
            scaled = (z - lo) / (hi - lo) * 2 - 1  # shared factor on [-1, 1]
            seqs = {}
            for m in MODALITIES:
                t = int(rng.integers(cfg.t_range[0], cfg.t_range[1] + 1))
                style = rng.normal(size=k)
                jitter = 1 + cfg.jitter * rng.normal(size=(t, 1))
                latent = np.concatenate([
                    np.full((t, 1), cfg.shared_strength[m] * scaled),
                    cfg.private_strength[m] * style[None, :] * jitter,
                ], axis=1)
                frames = latent @ mixing[m] + offset[m] + cfg.noise * rng.normal(size=(t, cfg.dims[m]))
                seqs[m] = frames.astype(np.float32)
            if cfg.task == "classification":
                label = float(min(int((z - lo) / (hi - lo) * cfg.n_classes), cfg.n_classes - 1))
            else:
                label = float(np.float32(z))
            examples.append(MultimodalExample(f"{split}-{i}", label, seqs))
        splits[split] = examples
    manifest = Manifest(dims=dict(cfg.dims), task=cfg.task, n_classes=cfg.n_classes,
                        label_range=tuple(cfg.label_range))
    return DatasetSplits(manifest=manifest, **splits)


# -- interchange format --------------------------------------------------------
def _atomic_write(path, text):
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _record(ex, modalities):
    rec = {"id": ex.id, "label": ex.label}
    for m in modalities:
        rec[m] = ex.sequences[m].astype(np.float64).tolist()
    return json.dumps(rec)


def save_dataset(splits, path):
    os.makedirs(path, exist_ok=True)
    _atomic_write(os.path.join(path, "manifest.json"), json.dumps(splits.manifest.to_json(), indent=2) + "\n")
    for name in SPLITS:
        lines = [_record(ex, splits.manifest.modalities) for ex in splits.split(name)]
        _atomic_write(os.path.join(path, f"{name}.jsonl"), "".join(line + "\n" for line in lines))


def load_dataset(path):
    try:
        with open(os.path.join(path, "manifest.json"), encoding="utf-8") as fh:
            manifest = Manifest.from_json(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot read manifest in {path}: {exc}") from None
    loaded = {}
    for name in SPLITS:
        fname = os.path.join(path, f"{name}.jsonl")
        examples = []
        with open(fname, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                where = f"{name}.jsonl line {lineno}: "
                try:
                    rec = json.loads(line)
                    seqs = {m: np.asarray(rec[m], dtype=np.float32) for m in manifest.modalities}
                    ex = MultimodalExample(str(rec["id"]), float(rec["label"]), seqs)
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise DatasetError(f"{where}malformed record ({exc})") from None
                for m, seq in seqs.items():
                    if seq.ndim == 1 and seq.size == 0:
                        raise DatasetError(f"{where}example {ex.id!r}: modality {m!r} needs T >= 1 timesteps")
                validate_example(ex, manifest, where)
                examples.append(ex)
        loaded[name] = examples
    return DatasetSplits(manifest=manifest, **loaded).validate()


# -- batching -------------------------------------------------------------------
@dataclass
class UtteranceBatch:
    ids: list
    labels: np.ndarray  # (N,) float32, or int64 class indices
    features: dict  # modality -> (N, T_max, d_m) float32, zero padded
    lengths: dict  # modality -> (N,) int

    def __len__(self):
        return len(self.ids)

    def mask(self, m):
        t = self.features[m].shape[1]
        return (np.arange(t)[None, :] < self.lengths[m][:, None]).astype(np.float32)


def collate(examples, modalities, task="regression"):
    feats, lengths = {}, {}
    for m in modalities:
        seqs = [ex.sequences[m] for ex in examples]
        lens = np.array([s.shape[0] for s in seqs])
        out = np.zeros((len(seqs), int(lens.max()), seqs[0].shape[1]), dtype=np.float32)
        for i, s in enumerate(seqs):
            out[i, : s.shape[0]] = s
        feats[m], lengths[m] = out, lens
    dtype = np.int64 if task == "classification" else np.float32
    labels = np.array([ex.label for ex in examples], dtype=dtype)
    return UtteranceBatch([ex.id for ex in examples], labels, feats, lengths)


def batch_order(n, batch_size, seed, epoch, shuffle=True):
    if batch_size < 1:
        raise ConfigError("batch_size must be >= 1")
    idx = np.arange(n)
    if shuffle:
        idx = np.random.default_rng([seed, epoch]).permutation(n)
    return [idx[i: i + batch_size] for i in range(0, n, batch_size)]


def batch_iter(split, batch_size, seed=0, epoch=0, modalities=MODALITIES, task="regression", shuffle=True,
               threads=None):
    """Yield padded batches; the shuffle depends only on ``(seed, epoch)``.

    With ``threads > 1`` (default from ``MISA_THREADS``) batches are prepared on a
    background thread; output order is unchanged.
    """
    order = batch_order(len(split), batch_size, seed, epoch, shuffle)
    make = (lambda idx: collate([split[i] for i in idx], modalities, task))
    threads = int(os.environ.get("MISA_THREADS", "1")) if threads is None else threads
    if threads <= 1:
        for idx in order:
            yield make(idx)
        return
    q = queue.Queue(maxsize=threads)
    done = object()

    def producer():
        for idx in order:
            q.put(make(idx))
        q.put(done)

    worker = threading.Thread(target=producer, daemon=True)
    worker.start()
    while (item := q.get()) is not done:
        yield item
    worker.join()
