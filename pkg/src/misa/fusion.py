"""Multi-head self-attention over the stacked subspace vectors, and concatenation into the joint vector."""

from __future__ import annotations

import math

import numpy as np

from . import tensor as T
from .layers import Module, uniform


def scaled_dot_attention(q, k, v):
    """softmax(q k^T / sqrt(d)) v over the last two axes. Returns (output, weights)."""
    if q.shape[-1] != k.shape[-1] or k.shape[-2] != v.shape[-2]:
        raise T.ShapeError(f"attention: incompatible shapes q={q.shape} k={k.shape} v={v.shape}")
    d = q.shape[-1]
    scores = (q @ T.transpose(k)) * (1.0 / math.sqrt(d))
    weights = T.softmax(scores, axis=-1)
    return weights @ v, weights


class MultiHeadSelfAttention(Module):
    """Self-attention with Q = K = V = M and full-width (d x d) projections per head.

    Heads are concatenated along features and mapped back to width d by the
    output projection, so the output has the same shape as the input.
    """

    def __init__(self, hidden, n_heads, rng):
        self.hidden, self.n_heads = hidden, n_heads
        bound = 1 / math.sqrt(hidden)
        self.w_query = uniform(rng, (n_heads, hidden, hidden), bound)
        self.w_key = uniform(rng, (n_heads, hidden, hidden), bound)
        self.w_value = uniform(rng, (n_heads, hidden, hidden), bound)
        self.w_out = uniform(rng, (n_heads * hidden, hidden), 1 / math.sqrt(n_heads * hidden))

    def check(self):
        n, d = self.n_heads, self.hidden
        for name in ("w_query", "w_key", "w_value"):
            if getattr(self, name).shape != (n, d, d):
                raise T.ShapeError(f"{name} must have shape {(n, d, d)}, got {getattr(self, name).shape}")
        if self.w_out.shape != (n * d, d):
            raise T.ShapeError(f"w_out must have shape {(n * d, d)}, got {self.w_out.shape}")

    def __call__(self, m):
        """``m``: (N, R, d) -> (output (N, R, d), attention weights (N, heads, R, R))."""
        self.check()
        if m.ndim != 3 or m.shape[-1] != self.hidden:
            raise T.ShapeError(f"fusion input must be (N, rows, {self.hidden}), got {m.shape}")
        n_b, rows, d = m.shape
        x = T.reshape(m, (n_b, 1, rows, d))
        heads, weights = scaled_dot_attention(x @ self.w_query, x @ self.w_key, x @ self.w_value)
        # (N, heads, R, d) -> (N, R, heads * d)
        joined = T.reshape(T.transpose(heads, (0, 2, 1, 3)), (n_b, rows, self.n_heads * d))
        return joined @ self.w_out, weights


def stack_rows(vectors):
    """Stack a list of (N, d) tensors into the (N, R, d) fusion matrix."""
    return T.stack(vectors, axis=1)


def fuse(m_bar):
    """Concatenate the attended rows, in order, into one (N, R * d) joint vector."""
    n_b, rows, d = m_bar.shape
    return T.reshape(m_bar, (n_b, rows * d))


def mean_attention(weights):
    """Average per-head weights: (N, heads, R, R) -> (N, R, R)."""
    return np.asarray(weights).mean(axis=1)
