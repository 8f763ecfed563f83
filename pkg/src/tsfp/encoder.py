"""Four-stage separable 3D convolutional encoder.

Parameter names follow ``enc.stem.*`` and
``enc.stage{i}.block{j}.{spatial|temporal}.{w|b}`` (1-based i, j).
"""

from __future__ import annotations

import numpy as np

from . import checkpoint
from .config import EncoderConfig
from .functional import ConvSpec, conv3d_spec, maxpool3d
from .tensor import ShapeError, Tensor, get_default_dtype, relu

STEM_POOL = (1, 2, 2)


def stem_spec(config: EncoderConfig) -> ConvSpec:
    return ConvSpec(3, config.stem_channels, (3, 3, 3), (1, 2, 2), (1, 1, 1), separable=config.separable)


def block_specs(config: EncoderConfig) -> list[list[ConvSpec]]:
    """Conv specs per stage; the first block of a stage carries its strides."""
    stages = []
    cin = config.stem_channels
    for i in range(4):
        cout = config.stage_channels[i]
        blocks = []
        for j in range(config.blocks_per_stage[i]):
            if j == 0:
                stride = (config.stage_temporal_stride[i], config.stage_spatial_stride[i], config.stage_spatial_stride[i])
            else:
                stride = (1, 1, 1)
            blocks.append(ConvSpec(cin, cout, (3, 3, 3), stride, (1, 1, 1), separable=config.separable))
            cin = cout
        stages.append(blocks)
    return stages


def named_specs(config: EncoderConfig) -> dict[str, ConvSpec]:
    out = {"enc.stem": stem_spec(config)}
    for i, blocks in enumerate(block_specs(config), start=1):
        for j, spec in enumerate(blocks, start=1):
            out[f"enc.stage{i}.block{j}"] = spec
    return out


def init_conv(params: dict, prefix: str, spec: ConvSpec, rng: np.random.Generator, gain: float = 6.0) -> None:
    """Uniform(-b, b) weights with b = sqrt(gain / fan_in); zero biases."""
    dtype = get_default_dtype()
    for name, shape in spec.weight_shapes().items():
        if name.endswith("b"):
            arr = np.zeros(shape, dtype=dtype)
        else:
            fan_in = int(np.prod(shape[1:]))
            bound = np.sqrt(gain / fan_in)
            arr = rng.uniform(-bound, bound, size=shape).astype(dtype)
        params[f"{prefix}.{name}"] = Tensor(arr, requires_grad=True)


def load_into(params: dict[str, Tensor], path) -> None:
    """Overwrite ``params`` from a checkpoint; names and shapes must match."""
    stored, _ = checkpoint.load(path)
    missing = sorted(set(params) - set(stored))
    extra = sorted(set(stored) - set(params))
    if missing or extra:
        raise checkpoint.CheckpointError(f"checkpoint names differ: missing {missing}, unexpected {extra}")
    for name, t in params.items():
        if stored[name].shape != t.shape:
            raise checkpoint.CheckpointError(f"{name}: checkpoint shape {stored[name].shape} != {t.shape}")
        t.data = stored[name].astype(t.dtype)


def encoder_init(config: EncoderConfig, seed: int, checkpoint_path=None) -> dict[str, Tensor]:
    rng = np.random.default_rng(seed)
    params: dict[str, Tensor] = {}
    for prefix, spec in named_specs(config).items():
        init_conv(params, prefix, spec, rng)
    if checkpoint_path is not None:
        load_into(params, checkpoint_path)
    return params


def _subweights(params: dict[str, Tensor], prefix: str) -> dict[str, Tensor]:
    n = len(prefix) + 1
    return {k[n:]: v for k, v in params.items() if k.startswith(prefix + ".")}


def check_clip(clip: Tensor, config: EncoderConfig) -> None:
    if clip.ndim not in (4, 5) or clip.shape[-4] != 3:
        raise ShapeError(f"clip must be (3,T,H,W) or (N,3,T,H,W), got {clip.shape}", axis="channel")
    T, H, W = clip.shape[-3:]
    if T % config.temporal_divisor:
        raise ShapeError(f"time axis: T={T} not divisible by {config.temporal_divisor}", axis="time")
    if H % config.spatial_divisor:
        raise ShapeError(f"height axis: H={H} not divisible by {config.spatial_divisor}", axis="height")
    if W % config.spatial_divisor:
        raise ShapeError(f"width axis: W={W} not divisible by {config.spatial_divisor}", axis="width")


def encoder_forward(clip: Tensor, weights: dict[str, Tensor], config: EncoderConfig) -> list[Tensor]:
    """Return the four stage outputs, shallow to deep."""
    check_clip(clip, config)
    x = conv3d_spec(clip, stem_spec(config), _subweights(weights, "enc.stem"), relu)
    x = maxpool3d(x, STEM_POOL, STEM_POOL)
    levels = []
    for i, blocks in enumerate(block_specs(config), start=1):
        for j, spec in enumerate(blocks, start=1):
            x = conv3d_spec(x, spec, _subweights(weights, f"enc.stage{i}.block{j}"), relu)
        levels.append(x)
    return levels


def level_shapes(config: EncoderConfig, clip_dims) -> list[tuple[int, int, int, int]]:
    """(C, T, H, W) of each level for an input of ``clip_dims`` = (T, H, W)."""
    T, H, W = clip_dims
    t, h, w = T, H // 4, W // 4
    shapes = []
    for i in range(4):
        t //= config.stage_temporal_stride[i]
        h //= config.stage_spatial_stride[i]
        w //= config.stage_spatial_stride[i]
        shapes.append((config.stage_channels[i], t, h, w))
    return shapes


def _layer_ledger(config: EncoderConfig):
    """(kernel, stride) per axis for every conv/pool in order, tagged by level."""
    layers = []

    def add(spec: ConvSpec, level: int):
        parts = spec.factor() if spec.separable else (spec,)
        for p in parts:
            layers.append((p.kernel, p.stride, level))

    add(stem_spec(config), 0)
    layers.append((STEM_POOL, STEM_POOL, 0))
    for i, blocks in enumerate(block_specs(config), start=1):
        for spec in blocks:
            add(spec, i)
    return layers


def receptive_field(config: EncoderConfig, level: int) -> tuple[int, int, int]:
    """Receptive field (t, h, w) in input voxels of a level-``level`` unit (1..4)."""
    if not 1 <= level <= 4:
        raise ValueError("level must be in 1..4")
    rf = [1, 1, 1]
    jump = [1, 1, 1]
    for kernel, stride, lv in _layer_ledger(config):
        if lv > level:
            break
        for a in range(3):
            rf[a] += (kernel[a] - 1) * jump[a]
            jump[a] *= stride[a]
    return tuple(rf)
