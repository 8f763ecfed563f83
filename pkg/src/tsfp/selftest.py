"""Gradient-check and brute-force oracle suites.

Used by the ``gradcheck`` and ``selftest`` commands and by the acceptance
tests.  Each suite returns rows of ``(name, value, passed)``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import oracles
from .audio import apply_audio_attention, audio_encode, audio_specs, bilinear_fuse
from .config import AudioConfig
from .functional import channel_dot, conv3d, maxpool3d, upsample_bilinear, upsample_trilinear
from .gradcheck import gradient_check
from .losses import loss_cc, loss_kl, loss_nss, loss_total
from .metrics import metric_auc_judd, metric_cc, metric_nss, metric_sauc, metric_sim
from .tensor import Tensor, add, mul, precision, reduce_stats, relu, scalar_mul, sigmoid, tsum

GRAD_TOL = 1e-4
Row = tuple[str, float, bool]


def _t(rng, *shape, low=-1.0, high=1.0) -> Tensor:
    return Tensor(rng.uniform(low, high, size=shape), dtype=np.float64)


def _project(fn: Callable[..., Tensor], rng) -> Callable[..., Tensor]:
    """Wrap an op as sum(op(x) * R) with a fixed random R (avoids symmetric sums)."""
    cache: dict = {}

    def f(*xs):
        y = fn(*xs)
        if "R" not in cache:
            cache["R"] = Tensor(rng.uniform(0.5, 1.5, size=y.shape), dtype=np.float64)
        return tsum(mul(y, cache["R"]))

    return f


def _positive_map(rng, shape) -> np.ndarray:
    return rng.uniform(0.05, 0.95, size=shape)


def gradient_cases(seed: int = 0) -> dict[str, tuple[Callable, list[Tensor]]]:
    rng = np.random.default_rng(seed)
    small_audio = AudioConfig(channels=(3, 4), kernel=4, stride=2, padding=1)
    aud_w = {}
    cin = 1
    for name, spec in audio_specs(small_audio).items():
        aud_w[f"{name}.w"] = _t(rng, spec.out_channels, cin, 1, 1, spec.kernel[2])
        aud_w[f"{name}.b"] = _t(rng, spec.out_channels)
        cin = spec.out_channels
    aud_keys = list(aud_w)

    def audio_fn(wave, *ws):
        return audio_encode(wave, dict(zip(aud_keys, ws)), small_audio)

    G = _positive_map(rng, (6, 6))
    G /= G.sum()
    F = np.zeros((6, 6), dtype=bool)
    F[[1, 3, 4], [2, 0, 5]] = True

    cases = {
        "conv3d": (
            _project(lambda x, w, b: conv3d(x, w, b, (1, 2, 1), (1, 1, 0)), rng),
            [_t(rng, 2, 3, 4, 4), _t(rng, 2, 2, 2, 3, 2), _t(rng, 2)],
        ),
        "maxpool3d": (
            _project(lambda x: maxpool3d(x, (2, 2, 2), (1, 2, 2)), rng),
            [Tensor(rng.permutation(96).reshape(2, 3, 4, 4) / 10.0, dtype=np.float64)],
        ),
        "upsample_trilinear": (
            _project(lambda x: upsample_trilinear(x, (4, 5, 6)), rng),
            [_t(rng, 2, 2, 3, 3)],
        ),
        "upsample_bilinear": (
            _project(lambda x: upsample_bilinear(x, (7, 8)), rng),
            [_t(rng, 2, 1, 3, 4)],
        ),
        "relu": (_project(relu, rng), [Tensor(_away_from_zero(rng, 40), dtype=np.float64)]),
        "sigmoid": (_project(sigmoid, rng), [_t(rng, 40, low=-3, high=3)]),
        "add": (_project(add, rng), [_t(rng, 5, 6), _t(rng, 5, 6)]),
        "mul": (_project(mul, rng), [_t(rng, 5, 6), _t(rng, 5, 6)]),
        "scalar_mul": (_project(lambda x: scalar_mul(x, -2.5), rng), [_t(rng, 30)]),
        "channel_dot": (_project(channel_dot, rng), [_t(rng, 4, 2, 2, 2), _t(rng, 4)]),
        "audio_encode": (_project(audio_fn, rng), [_t(rng, 40)] + [aud_w[k] for k in aud_keys]),
        "bilinear_fuse": (
            _project(lambda v, a, w: bilinear_fuse(v, a, w, (3, 4, 4)), rng),
            [_t(rng, 4, 2, 2, 2), _t(rng, 3), _t(rng, 4, 3)],
        ),
        "audio_attention": (
            _project(apply_audio_attention, rng),
            [_t(rng, 3, 2, 2, 2), _t(rng, 1, 2, 2, 2, low=0.1, high=0.9)],
        ),
        "loss_kl": (lambda s: loss_kl(s, G), [Tensor(_positive_map(rng, (6, 6)), dtype=np.float64)]),
        "loss_cc": (lambda s: loss_cc(s, G), [Tensor(_positive_map(rng, (6, 6)), dtype=np.float64)]),
        "loss_nss": (lambda s: loss_nss(s, F), [Tensor(_positive_map(rng, (6, 6)), dtype=np.float64)]),
        "loss_total": (lambda s: loss_total(s, F, G), [Tensor(_positive_map(rng, (6, 6)), dtype=np.float64)]),
    }
    return cases


def _away_from_zero(rng, n) -> np.ndarray:
    x = rng.uniform(0.1, 1.0, size=n)
    return x * rng.choice([-1.0, 1.0], size=n)


def gradient_suite(seed: int = 0, eps: float = 1e-5) -> list[Row]:
    rows = []
    with precision("float64"):
        for name, (fn, inputs) in gradient_cases(seed).items():
            err = gradient_check(fn, inputs, eps)
            rows.append((name, err, err < GRAD_TOL))
    return rows


# -- brute-force oracles ------------------------------------------------------

def random_conv_case(rng):
    C, O = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    dims = [int(rng.integers(1, 9)) for _ in range(3)]
    kernel, stride, pad = [], [], []
    for n in dims:
        p = int(rng.integers(0, 2))
        k = int(rng.integers(1, min(3, n + 2 * p) + 1))
        kernel.append(k)
        stride.append(int(rng.integers(1, 3)))
        pad.append(p)
    x = rng.standard_normal((C, *dims))
    w = rng.standard_normal((O, C, *kernel))
    b = rng.standard_normal(O)
    return x, w, b, tuple(stride), tuple(pad)


def conv_oracle_error(n_trials: int, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    with precision("float64"):
        for _ in range(n_trials):
            x, w, b, stride, pad = random_conv_case(rng)
            got = conv3d(Tensor(x), Tensor(w), Tensor(b), stride, pad).data
            ref = oracles.conv3d_naive(x, w, b, stride, pad)
            if got.shape != ref.shape:
                return float("inf")
            worst = max(worst, float(np.max(np.abs(got - ref))))
    return worst


def random_pool_case(rng):
    C = int(rng.integers(1, 4))
    dims = [int(rng.integers(1, 9)) for _ in range(3)]
    kernel = [int(rng.integers(1, min(3, n) + 1)) for n in dims]
    stride = [int(rng.integers(1, 3)) for _ in dims]
    return rng.standard_normal((C, *dims)), tuple(kernel), tuple(stride)


def pool_oracle_error(n_trials: int, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    with precision("float64"):
        for _ in range(n_trials):
            x, kernel, stride = random_pool_case(rng)
            got = maxpool3d(Tensor(x), kernel, stride).data
            ref = oracles.maxpool3d_naive(x, kernel, stride)
            if got.shape != ref.shape:
                return float("inf")
            worst = max(worst, float(np.max(np.abs(got - ref))))
    return worst


def upsample_oracle_error(n_trials: int, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    with precision("float64"):
        for _ in range(n_trials):
            dims = tuple(int(rng.integers(1, 5)) for _ in range(3))
            target = tuple(int(rng.integers(1, 9)) for _ in range(3))
            x = rng.standard_normal((2, *dims))
            got = upsample_trilinear(Tensor(x), target).data
            worst = max(worst, float(np.max(np.abs(got - oracles.resize_naive(x, target)))))
    return worst


def random_map_case(rng):
    """Map of <= 16 pixels with ties, a fixation map, and shuffled negatives."""
    h, w = int(rng.integers(1, 5)), int(rng.integers(1, 5))
    while h * w < 2:
        h, w = int(rng.integers(1, 5)), int(rng.integers(1, 5))
    if rng.random() < 0.5:
        S = rng.integers(0, 4, size=(h, w)).astype(np.float64) / 3.0  # many ties
    else:
        S = rng.random((h, w))
    n = h * w
    k = int(rng.integers(1, n))
    F = np.zeros(n, dtype=bool)
    F[rng.choice(n, size=k, replace=False)] = True
    negatives = []
    for _ in range(int(rng.integers(1, 4))):
        m = rng.random(n) < 0.4
        m[int(rng.integers(n))] = True
        negatives.append(m.reshape(h, w))
    return S, F.reshape(h, w), negatives


def auc_oracle_error(n_trials: int, seed: int = 0) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    judd = sauc = 0.0
    for _ in range(n_trials):
        S, F, negs = random_map_case(rng)
        judd = max(judd, abs(metric_auc_judd(S, F) - oracles.auc_judd_naive(S, F)))
        sauc = max(sauc, abs(metric_sauc(S, F, negs) - oracles.auc_shuffled_naive(S, F, negs)))
    return judd, sauc


def scalar_metric_error(n_trials: int, seed: int = 0) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    worst = {"nss": 0.0, "cc": 0.0, "sim": 0.0, "stats": 0.0}
    for _ in range(n_trials):
        n = int(rng.integers(2, 17))
        S = rng.random(n) + 0.01
        G = rng.random(n) + 0.01
        F = rng.random(n) < 0.4
        F[int(rng.integers(n))] = True
        worst["nss"] = max(worst["nss"], abs(metric_nss(S, F) - oracles.nss_naive(S, F)))
        worst["cc"] = max(worst["cc"], abs(metric_cc(S, G) - oracles.cc_naive(S, G)))
        worst["sim"] = max(worst["sim"], abs(metric_sim(S, G) - oracles.sim_naive(S, G)))
        with precision("float64"):
            got = reduce_stats(Tensor(S))
        ref = oracles.two_pass_stats(S)
        worst["stats"] = max(worst["stats"], max(abs(a - b) for a, b in zip(got, ref)))
    return worst


def oracle_suite(trials: int = 100, seed: int = 0) -> list[Row]:
    rows: list[Row] = []
    e = conv_oracle_error(trials, seed)
    rows.append(("conv3d vs naive loops", e, e <= 1e-10))
    e = pool_oracle_error(trials, seed)
    rows.append(("maxpool3d vs window scan", e, e <= 1e-10))
    e = upsample_oracle_error(max(trials // 5, 1), seed)
    rows.append(("upsample vs per-voxel interpolation", e, e <= 1e-10))
    judd, sauc = auc_oracle_error(trials, seed)
    rows.append(("AUC-J vs threshold sweep", judd, judd <= 1e-9))
    rows.append(("s-AUC vs threshold sweep", sauc, sauc <= 1e-9))
    for name, e in scalar_metric_error(trials, seed).items():
        rows.append((f"{name} vs two-pass scalar", e, e <= 1e-12))
    return rows


def format_rows(rows: list[Row], header: str) -> str:
    width = max(len(r[0]) for r in rows)
    lines = [f"{header:<{width}}  {'value':>12}  status"]
    for name, value, ok in rows:
        lines.append(f"{name:<{width}}  {value:12.3e}  {'PASS' if ok else 'FAIL'}")
    return "\n".join(lines)
