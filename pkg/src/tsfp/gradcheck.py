"""Central finite-difference gradient checking."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def gradient_check(f: Callable[..., Tensor], inputs: Sequence[Tensor], eps: float = 1e-5) -> float:
    """Max relative error between reverse-mode and numeric gradients.

    ``f(*inputs)`` must return a single-element tensor.  Inputs must be
    float64.  Per coordinate the error is
    ``|analytic - numeric| / max(1e-8, |analytic| + |numeric|)``.
    """
    for t in inputs:
        if t.dtype != np.float64:
            raise TypeError("gradient_check needs float64 inputs")
        t.requires_grad = True
        t.grad = None

    out = f(*inputs)
    if not np.all(np.isfinite(out.data)):
        raise FloatingPointError("f is not finite at the base point")
    if out.requires_grad:
        out.backward()
    analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in inputs]

    worst = 0.0
    for t, a in zip(inputs, analytic):
        flat = t.data.reshape(-1)
        a_flat = a.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            fp = _value(f, inputs)
            flat[i] = orig - eps
            fm = _value(f, inputs)
            flat[i] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise FloatingPointError(f"f is not finite at probe point {i}")
            numeric = (fp - fm) / (2.0 * eps)
            err = abs(a_flat[i] - numeric) / max(1e-8, abs(a_flat[i]) + abs(numeric))
            worst = max(worst, err)
    for t in inputs:
        t.grad = None
    return float(worst)


def _value(f, inputs) -> float:
    with np.errstate(all="ignore"):
        return float(f(*inputs).data.reshape(-1)[0])
