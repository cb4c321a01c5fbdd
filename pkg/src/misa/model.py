"""The full model and its ablation variants.

Variants (all share the utterance encoders and the attention fusion):

``full``     shared + private encoders, six fused rows, every loss
``base``     one private encoder per modality only; no similarity, difference or reconstruction
``inv``      shared encoder only; no difference loss
``sFusion``  same representation learning as ``full``; only private rows are fused
``iFusion``  same representation learning as ``full``; only shared rows are fused
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .config import MODALITIES, ModelConfig
from .encoders import Decoder, PooledEncoder, PredictionHead, PrivateEncoder, SequenceEncoder, SharedEncoder
from .fusion import MultiHeadSelfAttention, fuse, stack_rows
from .layers import Module
from .losses import BatchRepresentations, difference_loss, reconstruction_loss, similarity_loss, task_loss, \
    total_loss


@dataclass
class ForwardResult:
    reps: BatchRepresentations
    rows: list  # fusion row labels
    attention: np.ndarray  # (N, heads, R, R)
    joint: T.Tensor  # (N, R * d_h)
    output: T.Tensor  # (N, 1) or (N, C)


class MISA(Module):
    def __init__(self, config: ModelConfig, seed=0):
        self.config = config
        rng = np.random.default_rng(seed)
        self.rng = np.random.default_rng([seed, 1])  # dropout masks
        d_h = config.hidden
        self.utterance = {}
        for m in config.modalities:
            if m == "l" and config.pooled_language:
                enc = PooledEncoder(config.input_dims[m], d_h, rng, config.activation, config.dropout)
            else:
                enc = SequenceEncoder(config.input_dims[m], d_h, rng, config.lstm_layers, config.activation,
                                      config.dropout)
            self.utterance[m] = enc
        if self.uses_shared:
            self.shared = SharedEncoder(d_h, rng)
        if self.uses_private:
            self.private = {m: PrivateEncoder(d_h, rng, config.activation, config.dropout)
                            for m in config.modalities}
        if config.variant != "base":
            self.decoder = Decoder(d_h, rng)
        self.fusion = MultiHeadSelfAttention(d_h, config.n_heads, rng)
        self.head = PredictionHead(len(config.fusion_rows) * d_h, d_h, config.output_dim, rng,
                                   config.activation, config.dropout)

    @property
    def uses_shared(self):
        return self.config.variant != "base"

    @property
    def uses_private(self):
        return self.config.variant != "inv"

    @property
    def active_losses(self):
        v = self.config.variant
        if v == "base":
            return ("task",)
        if v == "inv":
            return ("task", "sim", "recon")
        return ("task", "sim", "diff", "recon")

    @property
    def dtype(self):
        return self.head.out.weight.dtype

    def encode(self, batch, training=False):
        """Utterance vectors and subspace representations for every active modality."""
        reps = BatchRepresentations()
        rng = self.rng if training else None
        for m in self.config.modalities:
            feats = batch.features[m].astype(self.dtype, copy=False)
            u = self.utterance[m](feats, batch.lengths[m], training, rng)
            reps.utterance[m] = u
            if self.uses_shared:
                reps.shared[m] = self.shared(u)
            if self.uses_private:
                reps.private[m] = self.private[m](u, training, rng)
            if hasattr(self, "decoder"):
                reps.reconstruction[m] = self.decoder(reps.shared.get(m), reps.private.get(m))
        return reps

    def forward(self, batch, training=False):
        reps = self.encode(batch, training)
        rows = self.config.fusion_rows
        vectors = [(reps.shared if r.startswith("hc") else reps.private)[r[-1]] for r in rows]
        attended, weights = self.fusion(stack_rows(vectors))
        joint = fuse(attended)
        output = self.head(joint, training, self.rng if training else None)
        return ForwardResult(reps, rows, weights.data, joint, output)

    __call__ = forward

    def losses(self, result, labels, weights, cmd_cfg=None):
        """LossReport for one forward pass; components the variant lacks are exactly zero."""
        reps, active = result.reps, self.active_losses
        comps = {"task": task_loss(result.output, labels, self.config.task)}
        if "sim" in active:
            comps["sim"] = similarity_loss(reps.shared, cmd_cfg)
        if "diff" in active:
            comps["diff"] = difference_loss(reps.shared, reps.private)
        if "recon" in active:
            comps["recon"] = reconstruction_loss(reps.utterance, reps.reconstruction, self.config.hidden)
        return total_loss(comps, weights)

    def parameter_groups(self):
        """Parameter counts per component (utterance, shared, private, decoder, fusion, head)."""
        groups = {}
        for name, p in self.named_parameters():
            key = name.split(".")[0]
            groups[key] = groups.get(key, 0) + p.data.size
        return groups


def build_variant(config: ModelConfig, seed=0):
    return MISA(config, seed)



__all__ = ["MISA", "ForwardResult", "build_variant", "MODALITIES"]
