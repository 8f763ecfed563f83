"""KL / CC / NSS saliency losses and their weighted combination.

All losses take a predicted map ``S`` as a :class:`Tensor` and ground truth
as plain arrays.  Degenerate inputs (a constant map) never produce NaN: the
standard deviation is floored at ``EPS`` and the result carries
``flags["degenerate"] = True``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import LOSS_MODES
from .tensor import Tensor, clamp_min, log, mean, mul, scalar_mul, sqrt, sub, tsum

EPS = 1e-8


@dataclass(frozen=True)
class LossWeights:
    alpha1: float = 0.5
    alpha2: float = 0.1
    mode: str = "combined"

    def __post_init__(self):
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise ValueError("alpha1 and alpha2 must be nonnegative")
        if self.mode not in LOSS_MODES:
            raise ValueError(f"mode must be one of {LOSS_MODES}")


@dataclass
class LossTerms:
    total: Tensor
    kl: Tensor
    cc: Tensor | None
    nss: Tensor | None


def _as_pred(S) -> Tensor:
    return S if isinstance(S, Tensor) else Tensor(np.asarray(S))


def _target(arr, like: Tensor) -> Tensor:
    return Tensor(np.asarray(arr, dtype=like.dtype).reshape(like.shape), dtype=like.dtype)


def _std(centered: Tensor) -> Tensor:
    # sqrt(max(var, EPS^2)) floors sigma at EPS and keeps the gradient finite
    return sqrt(clamp_min(mean(mul(centered, centered)), EPS * EPS))


def _flag(t: Tensor, degenerate: bool) -> Tensor:
    t.flags = {"degenerate": bool(degenerate)}
    return t


def _normalize_np(g: np.ndarray) -> np.ndarray:
    return g / max(g.sum(), EPS)


def loss_kl(S, G) -> Tensor:
    """sum_x G ln(G / S) over sum-normalised maps, with 0 ln 0 = 0."""
    S = _as_pred(S)
    g = np.asarray(G, dtype=S.dtype).reshape(S.shape)
    if np.any(g < 0):
        raise ValueError("density map must be nonnegative")
    g = _normalize_np(g)
    s = S / clamp_min(tsum(S), EPS)
    log_g = np.log(np.maximum(g, EPS))
    terms = mul(_target(g, S), sub(_target(log_g, S), log(clamp_min(s, EPS))))
    return _flag(tsum(terms), False)


def loss_cc(S, G) -> Tensor:
    """Negative Pearson correlation with population statistics."""
    S = _as_pred(S)
    g = np.asarray(G, dtype=S.dtype).reshape(S.shape)
    gc = g - g.mean()
    sd_g = max(float(np.sqrt(np.mean(gc * gc))), EPS)
    sc = sub(S, mean(S))
    sd_s = _std(sc)
    cov = mean(mul(sc, _target(gc, S)))
    out = scalar_mul(cov / sd_s, -1.0 / sd_g)
    degenerate = float(sd_s.data) <= EPS or sd_g <= EPS
    if degenerate:
        out = scalar_mul(out, 0.0)
    return _flag(out, degenerate)


def loss_nss(S, F) -> Tensor:
    """Negative mean standardised saliency over fixated pixels."""
    S = _as_pred(S)
    f = (np.asarray(F).reshape(S.shape) != 0).astype(S.dtype)
    n_fix = float(f.sum())
    if n_fix == 0:
        raise ValueError("NSS is undefined for a fixation map with no fixations")
    sc = sub(S, mean(S))
    sd = _std(sc)
    standardized = sc / sd
    out = scalar_mul(tsum(mul(standardized, _target(f, S))), -1.0 / n_fix)
    degenerate = float(sd.data) <= EPS
    if degenerate:
        out = scalar_mul(out, 0.0)
    return _flag(out, degenerate)


def loss_terms(S, F, G, weights: LossWeights = LossWeights()) -> LossTerms:
    kl = loss_kl(S, G)
    if weights.mode == "kl_only":
        return LossTerms(kl, kl, None, None)
    cc = loss_cc(S, G)
    nss = loss_nss(S, F)
    total = kl + scalar_mul(cc, weights.alpha1) + scalar_mul(nss, weights.alpha2)
    return LossTerms(total, kl, cc, nss)


def loss_total(S, F, G, weights: LossWeights = LossWeights()) -> Tensor:
    """L_KL + alpha1 L_CC + alpha2 L_NSS, or L_KL alone in ``kl_only`` mode."""
    return loss_terms(S, F, G, weights).total
