"""Central finite-difference gradient checks against the autodiff engine."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


@dataclass
class GradCheckReport:
    tol: float
    errors: dict = field(default_factory=dict)  # name -> max relative error
    checked: dict = field(default_factory=dict)  # name -> number of entries probed

    @property
    def passed(self):
        return all(np.isfinite(e) and e < self.tol for e in self.errors.values())

    @property
    def failures(self):
        return {k: e for k, e in self.errors.items() if not (np.isfinite(e) and e < self.tol)}

    @property
    def max_error(self):
        return max(self.errors.values(), default=0.0)

    def __str__(self):
        lines = [f"grad_check tol={self.tol:g}: {'PASS' if self.passed else 'FAIL'}"]
        for name, err in self.errors.items():
            lines.append(f"  {name:<40s} {err:.3e}  ({self.checked[name]} entries)")
        return "\n".join(lines)


def relative_error(analytic, numeric, floor=1e-6):
    """Elementwise |a - n| / max(|a|, |n|, floor); non-finite entries map to inf."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    err = np.abs(analytic - numeric) / denom
    return np.where(np.isfinite(err), err, np.inf)


def numeric_gradient(f, param, step=1e-6, indices=None):
    """Central differences of the scalar ``f()`` w.r.t. the entries of ``param``."""
    flat = param.data.reshape(-1)
    indices = range(flat.size) if indices is None else indices
    out = {}
    for i in indices:
        orig = flat[i]
        flat[i] = orig + step
        up = float(f().data)
        flat[i] = orig - step
        down = float(f().data)
        flat[i] = orig
        out[i] = (up - down) / (2 * step)
    return out


def grad_check(f, params, step=1e-4, tol=1e-3, max_entries=None, seed=0, floor=1e-6):
    """Compare autodiff gradients of ``f`` with central finite differences.

    ``f`` takes no arguments and returns a scalar :class:`Tensor` built from
    ``params`` (a mapping name -> Tensor, or a sequence of Tensors). It must be
    deterministic, so disable dropout first. Parameters should be float64 for
    the differences to be meaningful.

    ``max_entries`` caps how many coordinates of each parameter are probed
    (chosen at random with ``seed``); ``None`` probes all of them.
    """
    if not isinstance(params, dict):
        params = {f"param{i}": p for i, p in enumerate(params)}
    for p in params.values():
        p.grad = None
    loss = f()
    loss.backward()
    report = GradCheckReport(tol=tol)
    rng = np.random.default_rng(seed)
    for name, p in params.items():
        analytic = np.zeros(p.data.size) if p.grad is None else p.grad.reshape(-1).astype(np.float64)
        n = p.data.size
        if max_entries is not None and n > max_entries:
            idx = np.sort(rng.choice(n, size=max_entries, replace=False))
        else:
            idx = np.arange(n)
        numeric = numeric_gradient(f, p, step, idx)
        errs = relative_error(analytic[idx], [numeric[i] for i in idx], floor)
        report.errors[name] = float(errs.max()) if errs.size else 0.0
        report.checked[name] = int(len(idx))
    return report
