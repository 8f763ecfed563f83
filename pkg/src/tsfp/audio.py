"""Audio encoder stand-in and bilinear audio-visual attention."""

from __future__ import annotations

import numpy as np

from .config import AudioConfig
from .encoder import init_conv
from .functional import ConvSpec, channel_dot, conv3d, upsample_trilinear
from .tensor import ShapeError, Tensor, add, broadcast_to, get_default_dtype, matvec, mean, mul, relu, sigmoid


def audio_specs(config: AudioConfig) -> dict[str, ConvSpec]:
    """Strided 1-D convs, expressed as (1, 1, k) 3D convs over a (C,1,1,L) layout."""
    specs = {}
    cin = 1
    for j, cout in enumerate(config.channels, start=1):
        specs[f"aud.block{j}"] = ConvSpec(cin, cout, (1, 1, config.kernel), (1, 1, config.stride), (0, 0, config.padding))
        cin = cout
    return specs


def min_samples(config: AudioConfig) -> int:
    """Smallest waveform length for which every conv block yields >= 1 sample."""
    n = 1
    for _ in config.channels:
        # invert floor((L + 2p - k) / s) + 1 >= n
        n = max((n - 1) * config.stride + config.kernel - 2 * config.padding, 1)
    return n


def audio_init(config: AudioConfig, visual_channels: int, rng: np.random.Generator) -> dict[str, Tensor]:
    params: dict[str, Tensor] = {}
    for name, spec in audio_specs(config).items():
        init_conv(params, name, spec, rng)
    bound = 1.0 / np.sqrt(visual_channels * config.feature_dim)
    w = rng.uniform(-bound, bound, size=(visual_channels, config.feature_dim)).astype(get_default_dtype())
    params["fuse.W"] = Tensor(w, requires_grad=True)
    return params


def prepare_waveform(samples, config: AudioConfig) -> tuple[Tensor, bool]:
    """Shape a waveform (L,) or batch (N, L) for the encoder; zero-pad short input.

    Returns the tensor and whether padding was applied.
    """
    t = samples if isinstance(samples, Tensor) else Tensor(np.asarray(samples))
    if t.ndim not in (1, 2) or t.shape[-1] == 0:
        raise ShapeError(f"waveform must be a nonempty (L,) or (N, L) array, got {t.shape}")
    need = min_samples(config)
    padded = t.shape[-1] < need
    if padded:
        pad = np.zeros(t.shape[:-1] + (need - t.shape[-1],), dtype=t.dtype)
        t = _concat_last(t, Tensor(pad, dtype=t.dtype))
    if t.ndim == 1:
        return t.reshape(1, 1, 1, t.shape[0]), padded
    return t.reshape(t.shape[0], 1, 1, 1, t.shape[1]), padded


def _concat_last(a: Tensor, b: Tensor) -> Tensor:
    n = a.shape[-1]
    out = np.concatenate([a.data, b.data], axis=-1)
    return Tensor._make(out, (a, b), lambda g: (g[..., :n], g[..., n:]))


def audio_encode(samples, weights: dict[str, Tensor], config: AudioConfig) -> Tensor:
    """D_a-dimensional clip descriptor: conv stack + global average pool.

    The returned tensor has ``flags["padded"]`` set when the waveform was
    shorter than the encoder's receptive field.
    """
    x, padded = prepare_waveform(samples, config)
    for name, spec in audio_specs(config).items():
        w, b = weights[f"{name}.w"], weights[f"{name}.b"]
        x = relu(conv3d(x, w, b, spec.stride, spec.padding))
    axes = (-3, -2, -1)
    feat = mean(x, axis=tuple(a % x.ndim for a in axes))
    feat.flags = {"padded": padded}
    return feat


def bilinear_fuse(v3: Tensor, audio_feat: Tensor, w_bilinear: Tensor, target) -> Tensor:
    """Attention in (0, 1) of shape (1, T_d, H/4, W/4) (or batched).

    The per-location logit is the bilinear form ``f(t,h,w)^T W a`` between the
    stage-3 visual feature and the audio descriptor.
    """
    c3 = v3.shape[-4]
    if w_bilinear.shape != (c3, audio_feat.shape[-1]):
        raise ShapeError(f"bilinear weight {w_bilinear.shape} does not match ({c3}, {audio_feat.shape[-1]})")
    projected = matvec(w_bilinear, audio_feat)  # (C3,) or (N, C3)
    logits = channel_dot(v3, projected)
    attn = sigmoid(logits)
    return upsample_trilinear(attn, target)


def apply_audio_attention(v: Tensor, attn: Tensor) -> Tensor:
    """``v * attn + v`` with attention broadcast over channels."""
    if attn.shape[-4] != 1 or attn.shape[-3:] != v.shape[-3:] or attn.ndim != v.ndim:
        raise ShapeError(f"attention {attn.shape} incompatible with features {v.shape}")
    return add(mul(v, broadcast_to(attn, v.shape)), v)
