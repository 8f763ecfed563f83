"""Brute-force reference implementations.

Deliberately naive scalar loops, independent of the vectorised code paths.
They back the test suite and the ``selftest`` command.
"""

from __future__ import annotations

import math

import numpy as np


def conv3d_naive(x, w, b, stride, padding) -> np.ndarray:
    """7-loop cross-correlation of (C,T,H,W) input with (O,C,kt,kh,kw) weights."""
    C, T, H, W = x.shape
    O, _, kt, kh, kw = w.shape
    st, sh, sw = stride
    pt, ph, pw = padding
    To = (T + 2 * pt - kt) // st + 1
    Ho = (H + 2 * ph - kh) // sh + 1
    Wo = (W + 2 * pw - kw) // sw + 1
    out = np.zeros((O, To, Ho, Wo), dtype=np.float64)
    for o in range(O):
        for t in range(To):
            for i in range(Ho):
                for j in range(Wo):
                    acc = 0.0 if b is None else float(b[o])
                    for c in range(C):
                        for a in range(kt):
                            ti = t * st + a - pt
                            if ti < 0 or ti >= T:
                                continue
                            for p in range(kh):
                                hi = i * sh + p - ph
                                if hi < 0 or hi >= H:
                                    continue
                                for q in range(kw):
                                    wi = j * sw + q - pw
                                    if 0 <= wi < W:
                                        acc += float(w[o, c, a, p, q]) * float(x[c, ti, hi, wi])
                    out[o, t, i, j] = acc
    return out


def maxpool3d_naive(x, kernel, stride) -> np.ndarray:
    C, T, H, W = x.shape
    kt, kh, kw = kernel
    st, sh, sw = stride
    To, Ho, Wo = (T - kt) // st + 1, (H - kh) // sh + 1, (W - kw) // sw + 1
    out = np.empty((C, To, Ho, Wo), dtype=np.float64)
    for c in range(C):
        for t in range(To):
            for i in range(Ho):
                for j in range(Wo):
                    best = -math.inf
                    for a in range(kt):
                        for p in range(kh):
                            for q in range(kw):
                                v = float(x[c, t * st + a, i * sh + p, j * sw + q])
                                if v > best:
                                    best = v
                    out[c, t, i, j] = best
    return out


def _interp_scalar(values, coords, sizes):
    """Value of a grid at fractional per-axis coordinates (multi-linear)."""
    result = 0.0
    ndim = len(sizes)
    for corner in range(1 << ndim):
        weight = 1.0
        idx = []
        for axis in range(ndim):
            c = coords[axis]
            lo = int(math.floor(c))
            frac = c - lo
            hi = min(lo + 1, sizes[axis] - 1)
            if corner >> axis & 1:
                weight *= frac
                idx.append(hi)
            else:
                weight *= 1.0 - frac
                idx.append(lo)
        if weight:
            result += weight * float(values[tuple(idx)])
    return result


def resize_naive(x, target) -> np.ndarray:
    """Per-output-voxel half-pixel linear resize of the trailing ``len(target)`` axes."""
    x = np.asarray(x, dtype=np.float64)
    k = len(target)
    lead = x.shape[:-k]
    sizes = x.shape[-k:]
    out = np.empty(lead + tuple(target), dtype=np.float64)
    for li in np.ndindex(*lead) if lead else [()]:
        grid = x[li]
        for oi in np.ndindex(*target):
            coords = []
            for d, n_in, n_out in zip(oi, sizes, target):
                c = (d + 0.5) * n_in / n_out - 0.5
                coords.append(min(max(c, 0.0), n_in - 1))
            out[li + oi] = _interp_scalar(grid, coords, sizes)
    return out


def two_pass_stats(values) -> tuple[float, float, float]:
    vals = [float(v) for v in np.ravel(values)]
    n = len(vals)
    total = 0.0
    for v in vals:
        total += v
    mu = total / n
    ss = 0.0
    for v in vals:
        ss += (v - mu) ** 2
    return total, mu, math.sqrt(ss / n)


def nss_naive(s, fix) -> float:
    _, mu, sd = two_pass_stats(s)
    vals = np.ravel(s)
    f = np.ravel(fix)
    num, cnt = 0.0, 0
    for v, m in zip(vals, f):
        if m:
            num += (float(v) - mu) / sd
            cnt += 1
    return num / cnt


def cc_naive(s, g) -> float:
    _, ms, ss = two_pass_stats(s)
    _, mg, sg = two_pass_stats(g)
    a, b = np.ravel(s), np.ravel(g)
    cov = 0.0
    for u, v in zip(a, b):
        cov += (float(u) - ms) * (float(v) - mg)
    cov /= len(a)
    return cov / (ss * sg)


def sim_naive(s, g) -> float:
    a, b = np.ravel(s), np.ravel(g)
    sa = sum(float(v) for v in a)
    sb = sum(float(v) for v in b)
    total = 0.0
    for u, v in zip(a, b):
        total += min(float(u) / sa, float(v) / sb)
    return total


def _sweep_auc(pos, neg, thresholds) -> float:
    xs, ys = [0.0], [0.0]
    for th in sorted(set(thresholds), reverse=True):
        tp = sum(1 for v in pos if v >= th) / len(pos)
        fp = sum(1 for v in neg if v >= th) / len(neg)
        xs.append(fp)
        ys.append(tp)
    xs.append(1.0)
    ys.append(1.0)
    area = 0.0
    for i in range(1, len(xs)):
        area += (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]) / 2.0
    return area


def auc_judd_naive(s, fix) -> float:
    """Exhaustive sweep over every distinct saliency value at fixated pixels."""
    vals = [float(v) for v in np.ravel(s)]
    mask = [bool(m) for m in np.ravel(fix)]
    pos = [v for v, m in zip(vals, mask) if m]
    neg = [v for v, m in zip(vals, mask) if not m]
    return _sweep_auc(pos, neg, pos)


def auc_shuffled_naive(s, fix, negatives) -> float:
    vals = [float(v) for v in np.ravel(s)]
    pos = [v for v, m in zip(vals, np.ravel(fix)) if m]
    neg = []
    for nm in negatives:
        for v, m in zip(vals, np.ravel(nm)):
            if m:
                neg.append(v)
    return _sweep_auc(pos, neg, pos)
