"""Utterance encoders, subspace projections, the shared decoder and the prediction head."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .layers import BiLSTMStack, Linear, Module
from .tensor import Tensor


class SequenceEncoder(Module):
    """Stacked bidirectional LSTM over one modality, end states -> dense -> activation -> dropout."""

    def __init__(self, d_in, hidden, rng, layers=2, activation="relu", dropout=0.0):
        self.d_in, self.hidden = d_in, hidden
        self.rnn = BiLSTMStack(d_in, hidden, layers, rng)
        self.proj = Linear(2 * hidden, hidden, rng)
        self.act = T.activation(activation)
        self.p = dropout

    def __call__(self, features, lengths, training=False, rng=None):
        features = np.asarray(features)
        if features.ndim != 3 or features.shape[-1] != self.d_in:
            raise T.ShapeError(f"sequence encoder: expected (N, T, {self.d_in}) features, got {features.shape}")
        lengths = np.asarray(lengths)
        if np.any(lengths < 1):
            raise ValueError("sequence encoder: every sequence needs at least one timestep")
        mask = (np.arange(features.shape[1])[None, :] < lengths[:, None]).astype(features.dtype)
        ends = self.rnn(Tensor(features), mask)
        return T.dropout(self.act(self.proj(ends)), self.p, rng, training)


class PooledEncoder(Module):
    """Dense projection of an already aggregated feature vector (e.g. averaged token features)."""

    def __init__(self, d_in, hidden, rng, activation="relu", dropout=0.0):
        self.d_in, self.hidden = d_in, hidden
        self.proj = Linear(d_in, hidden, rng)
        self.act = T.activation(activation)
        self.p = dropout

    def __call__(self, features, lengths=None, training=False, rng=None):
        features = np.asarray(features)
        if features.shape[-1] != self.d_in:
            raise T.ShapeError(f"pooled encoder: expected last dim {self.d_in}, got {features.shape}")
        if features.ndim == 3:
            # average over the valid timesteps only
            lengths = np.full(features.shape[0], features.shape[1]) if lengths is None else np.asarray(lengths)
            mask = (np.arange(features.shape[1])[None, :] < lengths[:, None]).astype(features.dtype)
            features = (features * mask[..., None]).sum(axis=1) / lengths[:, None].astype(features.dtype)
        return T.dropout(self.act(self.proj(Tensor(features))), self.p, rng, training)


class SharedEncoder(Module):
    """Modality-invariant projection; the sigmoid keeps every coordinate in [0, 1]."""

    def __init__(self, hidden, rng):
        self.proj = Linear(hidden, hidden, rng)

    def __call__(self, u):
        return T.sigmoid(self.proj(u))


class PrivateEncoder(Module):
    def __init__(self, hidden, rng, activation="relu", dropout=0.0):
        self.proj = Linear(hidden, hidden, rng)
        self.act = T.activation(activation)
        self.p = dropout

    def __call__(self, u, training=False, rng=None):
        return T.dropout(self.act(self.proj(u)), self.p, rng, training)


class Decoder(Module):
    """Linear map from the summed subspace pair back to the utterance vector."""

    def __init__(self, hidden, rng):
        self.proj = Linear(hidden, hidden, rng)

    def __call__(self, shared=None, private=None):
        if shared is None and private is None:
            raise ValueError("decoder needs at least one subspace vector")
        if shared is None:
            return self.proj(private)
        if private is None:
            return self.proj(shared)
        return self.proj(shared + private)


class PredictionHead(Module):
    def __init__(self, d_in, hidden, d_out, rng, activation="relu", dropout=0.0):
        self.d_in, self.d_out = d_in, d_out
        self.hidden = Linear(d_in, hidden, rng)
        self.out = Linear(hidden, d_out, rng)
        self.act = T.activation(activation)
        self.p = dropout

    def __call__(self, joint, training=False, rng=None):
        if joint.shape[-1] != self.d_in:
            raise T.ShapeError(f"prediction head: expected joint vector of length {self.d_in}, got {joint.shape}")
        return self.out(T.dropout(self.act(self.hidden(joint)), self.p, rng, training))
