"""Parameter containers and the dense / recurrent building blocks."""

from __future__ import annotations

import math

import numpy as np

from . import tensor as T
from .tensor import Tensor


class Module:
    """Collects :class:`Tensor` parameters from attributes, sub-modules and dicts of sub-modules."""

    def named_parameters(self, prefix=""):
        for name, value in vars(self).items():
            if isinstance(value, Tensor) and value.requires_grad:
                yield prefix + name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{name}.")
            elif isinstance(value, dict):
                for key, sub in value.items():
                    if isinstance(sub, Module):
                        yield from sub.named_parameters(f"{prefix}{name}.{key}.")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def state_dict(self):
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state, strict=True):
        own = dict(self.named_parameters())
        if strict and set(own) != set(state):
            missing, extra = sorted(set(own) - set(state)), sorted(set(state) - set(own))
            raise KeyError(f"state mismatch: missing {missing}, unexpected {extra}")
        for name, value in state.items():
            if name not in own:
                continue
            if own[name].shape != np.shape(value):
                raise ValueError(f"parameter {name}: shape {np.shape(value)} != {own[name].shape}")
            own[name].data = np.array(value, dtype=own[name].dtype)

    def num_parameters(self):
        return sum(p.data.size for p in self.parameters())

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def astype(self, dtype):
        for p in self.parameters():
            p.data = p.data.astype(dtype)
        return self


def uniform(rng, shape, bound, dtype=np.float32):
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(dtype), requires_grad=True)


class Linear(Module):
    def __init__(self, d_in, d_out, rng, bias=True):
        bound = 1 / math.sqrt(d_in)
        self.weight = uniform(rng, (d_in, d_out), bound)
        if bias:
            self.bias = uniform(rng, (d_out,), bound)
        self.d_in, self.d_out = d_in, d_out

    def __call__(self, x):
        if x.shape[-1] != self.d_in:
            raise T.ShapeError(f"linear: expected last dim {self.d_in}, got {x.shape}")
        out = x @ self.weight
        return out + self.bias if hasattr(self, "bias") else out


class LSTM(Module):
    """One direction of a single LSTM layer. Gates are packed as [input, forget, output, cell]."""

    def __init__(self, d_in, hidden, rng):
        self.hidden = hidden
        self.w_input = uniform(rng, (d_in, 4 * hidden), 1 / math.sqrt(d_in))
        self.w_hidden = uniform(rng, (hidden, 4 * hidden), 1 / math.sqrt(hidden))
        bias = rng.uniform(-1, 1, size=4 * hidden) / math.sqrt(hidden)
        bias[hidden: 2 * hidden] += 1.0
        self.bias = Tensor(bias.astype(np.float32), requires_grad=True)

    def __call__(self, x, mask, reverse=False, keep_outputs=True):
        """Run over ``x`` (N, T, d) with a 0/1 ``mask`` (N, T).

        Masked steps carry the previous state forward unchanged, so trailing
        padding never reaches the final state in either direction. Returns the
        per-step outputs (list, time order) and the final hidden state.
        """
        n, steps, _ = x.shape
        H = self.hidden
        proj = x @ self.w_input + self.bias  # (N, T, 4H), one matmul for all steps
        h = Tensor(np.zeros((n, H), dtype=x.dtype))
        c = Tensor(np.zeros((n, H), dtype=x.dtype))
        outputs = [None] * steps
        for t in (range(steps - 1, -1, -1) if reverse else range(steps)):
            z = proj[:, t, :] + h @ self.w_hidden
            gates = T.sigmoid(z[:, : 3 * H])
            cell = T.tanh(z[:, 3 * H:])
            c_new = gates[:, H: 2 * H] * c + gates[:, :H] * cell
            h_new = gates[:, 2 * H:] * T.tanh(c_new)
            m = mask[:, t: t + 1]
            if m.all():
                h, c = h_new, c_new
            else:
                keep = 1 - m
                h = h_new * m + h * keep
                c = c_new * m + c * keep
            if keep_outputs:
                outputs[t] = h
        return outputs, h


class BiLSTMStack(Module):
    """Stacked bidirectional LSTM returning the top layer's final forward and backward states."""

    def __init__(self, d_in, hidden, layers, rng):
        self.layers = {}
        for i in range(layers):
            size = d_in if i == 0 else 2 * hidden
            self.layers[str(i)] = _BiLayer(size, hidden, rng)

    def __call__(self, x, mask):
        layers = list(self.layers.values())
        for i, layer in enumerate(layers):
            top = i == len(layers) - 1
            fwd_out, fwd_h = layer.forward(x, mask, reverse=False, keep_outputs=not top)
            bwd_out, bwd_h = layer.backward(x, mask, reverse=True, keep_outputs=not top)
            if not top:
                x = T.stack([T.concat([f, b], axis=-1) for f, b in zip(fwd_out, bwd_out)], axis=1)
        return T.concat([fwd_h, bwd_h], axis=-1)


class _BiLayer(Module):
    def __init__(self, d_in, hidden, rng):
        self.forward = LSTM(d_in, hidden, rng)
        self.backward = LSTM(d_in, hidden, rng)
