"""Configuration dataclasses, dataset presets, and the flat key-value config format."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields

MODALITIES = ("l", "v", "a")
VARIANTS = ("full", "base", "inv", "sFusion", "iFusion")
TASKS = ("regression", "classification")


class ConfigError(ValueError):
    """Invalid or unresolvable configuration."""


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 1.0  # similarity
    beta: float = 0.3  # difference
    gamma: float = 1.0  # reconstruction

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"loss weight {name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class CmdConfig:
    K: int = 5
    interval: tuple = (0.0, 1.0)
    scale_by_interval: bool = True

    def __post_init__(self):
        if self.K < 1:
            raise ConfigError(f"CMD order K must be >= 1, got {self.K}")
        a, b = self.interval
        if not b > a:
            raise ConfigError(f"CMD interval must satisfy a < b, got {self.interval}")


@dataclass(frozen=True)
class ModelConfig:
    input_dims: dict
    hidden: int = 128
    n_heads: int = 2
    activation: str = "relu"
    dropout: float = 0.5
    task: str = "regression"
    n_classes: int = 2  # ignored for regression
    lstm_layers: int = 2
    pooled_language: bool = False
    variant: str = "full"
    modalities: tuple = MODALITIES

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if not self.modalities or any(m not in MODALITIES for m in self.modalities):
            raise ConfigError(f"modalities must be a non-empty subset of {MODALITIES}, got {self.modalities}")
        missing = [m for m in self.modalities if m not in self.input_dims]
        if missing:
            raise ConfigError(f"no input dimension given for modalities {missing}")
        if self.hidden < 1 or self.n_heads < 1 or self.lstm_layers < 1:
            raise ConfigError("hidden, n_heads and lstm_layers must be >= 1")
        if not 0 <= self.dropout < 1:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.task == "classification" and self.n_classes < 2:
            raise ConfigError("classification needs n_classes >= 2")

    @property
    def output_dim(self):
        return 1 if self.task == "regression" else self.n_classes

    @property
    def fusion_rows(self):
        """Row labels of the fusion matrix, in canonical order."""
        shared = [f"hc_{m}" for m in MODALITIES if m in self.modalities]
        private = [f"hp_{m}" for m in MODALITIES if m in self.modalities]
        if self.variant == "full":
            return shared + private
        if self.variant in ("inv", "iFusion"):
            return shared
        return private  # base, sFusion


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 64
    grad_clip: float = 1.0
    patience: int = 6
    max_epochs: int = 100
    lr_decay: float = 0.96
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)
    cmd: CmdConfig = field(default_factory=CmdConfig)

    def __post_init__(self):
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not 0 < self.lr_decay <= 1:
            raise ConfigError("lr_decay must be in (0, 1]")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")


# Final hyper-parameters per dataset (cmd K, activation, batch size, gradient
# clip, alpha, beta, gamma, dropout, d_h, learning rate).
PRESETS = {
    "mosi": dict(cmd_k=5, activation="relu", batch_size=64, gradient_clip=1.0, alpha=1.0, beta=0.3,
                 gamma=1.0, dropout=0.5, d_h=128, learning_rate=1e-4, task="regression"),
    "mosei": dict(cmd_k=5, activation="leaky_relu", batch_size=16, gradient_clip=1.0, alpha=0.7, beta=0.3,
                  gamma=0.7, dropout=0.1, d_h=128, learning_rate=1e-4, task="regression"),
    "urfunny": dict(cmd_k=5, activation="tanh", batch_size=32, gradient_clip=1.0, alpha=0.7, beta=1.0,
                    gamma=1.0, dropout=0.1, d_h=128, learning_rate=1e-4, task="classification",
                    n_classes=2),
}
TABLE_KEYS = ("cmd_k", "activation", "batch_size", "gradient_clip", "alpha", "beta", "gamma",
              "dropout", "d_h", "learning_rate")


@dataclass
class RunConfig:
    """Everything needed to reproduce one run, as flat keys."""

    preset: str = "none"
    # preset-controlled keys
    cmd_k: int = 5
    activation: str = "relu"
    batch_size: int = 64
    gradient_clip: float = 1.0
    alpha: float = 1.0
    beta: float = 0.3
    gamma: float = 1.0
    dropout: float = 0.5
    d_h: int = 128
    learning_rate: float = 1e-4
    # model
    task: str = "regression"
    n_classes: int = 2
    heads: int = 2
    lstm_layers: int = 2
    pooled_language: bool = False
    variant: str = "full"
    drop_modality: str = ""
    # training
    seed: int = 0
    max_epochs: int = 30
    patience: int = 6
    lr_decay: float = 0.96
    # data
    dataset: str = ""
    synthetic: bool = False
    synth_n_train: int = 256
    synth_n_dev: int = 64
    synth_n_test: int = 64
    synth_dim_l: int = 16
    synth_dim_v: int = 8
    synth_dim_a: int = 8
    synth_t_min: int = 3
    synth_t_max: int = 8
    synth_shared_l: float = 1.0
    synth_shared_v: float = 1.0
    synth_shared_a: float = 1.0
    synth_private: float = 1.0
    synth_noise: float = 0.1
    synth_seed: int = -1  # -1: reuse ``seed``

    @classmethod
    def from_preset(cls, name, **overrides):
        name = (name or "none").lower()
        if name != "none" and name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS) + ['none']}")
        values = dict(PRESETS.get(name, {}))
        values.update(overrides)
        if name == "none":
            missing = [k for k in TABLE_KEYS if k not in overrides]
            if missing:
                raise ConfigError(f"preset 'none' needs explicit values for {missing}")
        return cls.from_dict({"preset": name, **values})

    @classmethod
    def from_dict(cls, values):
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        kwargs = {}
        for key, raw in values.items():
            kwargs[key] = _coerce(raw, known[key].type, key)
        return cls(**kwargs)

    def to_dict(self):
        return dataclasses.asdict(self)

    @property
    def modalities(self):
        dropped = set(self.drop_modality.replace(",", "")) if self.drop_modality else set()
        bad = dropped - set(MODALITIES)
        if bad:
            raise ConfigError(f"cannot drop unknown modalities {sorted(bad)}")
        kept = tuple(m for m in MODALITIES if m not in dropped)
        if not kept:
            raise ConfigError("every modality was dropped")
        return kept

    def model_config(self, input_dims):
        return ModelConfig(
            input_dims=dict(input_dims), hidden=self.d_h, n_heads=self.heads, activation=self.activation,
            dropout=self.dropout, task=self.task, n_classes=self.n_classes, lstm_layers=self.lstm_layers,
            pooled_language=self.pooled_language, variant=self.variant, modalities=self.modalities,
        )

    def train_config(self):
        return TrainConfig(
            learning_rate=self.learning_rate, batch_size=self.batch_size, grad_clip=self.gradient_clip,
            patience=self.patience, max_epochs=self.max_epochs, lr_decay=self.lr_decay, seed=self.seed,
            weights=LossWeights(self.alpha, self.beta, self.gamma), cmd=CmdConfig(K=self.cmd_k),
        )

    def synth_config(self):
        from .data import SynthConfig

        return SynthConfig(
            n_train=self.synth_n_train, n_dev=self.synth_n_dev, n_test=self.synth_n_test,
            dims={"l": self.synth_dim_l, "v": self.synth_dim_v, "a": self.synth_dim_a},
            t_range=(self.synth_t_min, self.synth_t_max),
            shared_strength={"l": self.synth_shared_l, "v": self.synth_shared_v, "a": self.synth_shared_a},
            private_strength={m: self.synth_private for m in MODALITIES},
            noise=self.synth_noise, task=self.task, n_classes=self.n_classes,
            seed=self.seed if self.synth_seed < 0 else self.synth_seed,
        )


def _coerce(raw, type_name, key):
    type_name = type_name if isinstance(type_name, str) else type_name.__name__
    try:
        if type_name == "bool":
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text in ("1", "true", "yes", "on"):
                return True
            if text in ("0", "false", "no", "off", ""):
                return False
            raise ValueError(text)
        if type_name == "int":
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(raw)
            return int(float(raw)) if isinstance(raw, str) and "e" in raw.lower() else int(raw)
        if type_name == "float":
            return float(raw)
        return str(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r}: cannot read {raw!r} as {type_name}") from None


def parse_config_text(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


def format_config(cfg):
    lines = ["# resolved run configuration"]
    for key, value in cfg.to_dict().items():
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return "\n".join(lines) + "\n"
