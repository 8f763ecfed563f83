"""Temporal-spatial feature pyramid, hierarchical decoder and output head."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import ConfigError, ModelConfig
from .functional import ConvSpec, conv3d_spec, upsample_bilinear, upsample_trilinear
from .tensor import ShapeError, Tensor, add, relu, sigmoid


@dataclass(frozen=True)
class BranchPlan:
    """Decode branch of one pyramid level.

    ``time_steps`` > 0 means the level must be halved in time that many
    times (strided temporal conv), < 0 means doubled (upsampling).
    """

    level: int
    n_blocks: int
    spatial_doublings: int
    time_steps: int


def _log2_exact(ratio, what: str) -> int:
    k = round(math.log2(ratio))
    if ratio <= 0 or not math.isclose(2.0**k, ratio):
        raise ConfigError(f"{what}: ratio {ratio} is not a power of two, decode target unreachable")
    return k


def active_levels(variant: str) -> tuple[int, ...]:
    return (4,) if variant == "only_final_level" else (1, 2, 3, 4)


def branch_plans(config: ModelConfig) -> dict[int, BranchPlan]:
    enc = config.encoder
    plans = {}
    spatial = 1
    temporal = 1
    for i in range(1, 5):
        spatial *= enc.stage_spatial_stride[i - 1]
        temporal *= enc.stage_temporal_stride[i - 1]
        doublings = _log2_exact(spatial, f"level {i} spatial")
        # level time = T / temporal, decode time = T / divisor
        time_steps = _log2_exact(config.pyramid.decode_time_divisor / temporal, f"level {i} temporal")
        n = max(doublings, abs(time_steps), 1)
        plans[i] = BranchPlan(i, n, doublings, time_steps)
    return plans


def head_blocks(config: ModelConfig) -> int:
    return int(round(math.log2(config.decode_time)))


def named_specs(config: ModelConfig) -> dict[str, ConvSpec]:
    cp = config.pyramid.pyramid_channels
    levels = active_levels(config.pyramid.variant)
    plans = branch_plans(config)
    out: dict[str, ConvSpec] = {}
    for i in levels:
        out[f"pyr.lateral{i}"] = ConvSpec(config.encoder.stage_channels[i - 1], cp, (1, 1, 1))
    for i in levels:
        plan = plans[i]
        remaining = plan.time_steps
        for j in range(1, plan.n_blocks + 1):
            st = 2 if remaining > 0 else 1
            remaining -= 1 if remaining > 0 else 0
            out[f"pyr.branch{i}.block{j}"] = ConvSpec(cp, cp, (3, 3, 3), (st, 1, 1), (1, 1, 1), separable=True)
    for j in range(1, head_blocks(config) + 1):
        out[f"head.block{j}"] = ConvSpec(cp, cp, (3, 3, 3), (2, 1, 1), (1, 1, 1))
    out["head.out"] = ConvSpec(cp, 1, (1, 1, 1))
    return out


def _sub(weights: dict[str, Tensor], prefix: str) -> dict[str, Tensor]:
    n = len(prefix) + 1
    return {k[n:]: v for k, v in weights.items() if k.startswith(prefix + ".")}


def lateral(feats: list[Tensor], weights: dict[str, Tensor], config: ModelConfig) -> dict[int, Tensor]:
    """1x1x1 projections of the active encoder levels to the pyramid width."""
    if len(feats) != 4:
        raise ShapeError(f"expected 4 encoder levels, got {len(feats)}")
    specs = named_specs(config)
    return {
        i: conv3d_spec(feats[i - 1], specs[f"pyr.lateral{i}"], _sub(weights, f"pyr.lateral{i}"))
        for i in active_levels(config.pyramid.variant)
    }


def build_pyramid(feats: list[Tensor], weights: dict[str, Tensor], config: ModelConfig) -> list[Tensor]:
    """Top-down path: each level is its lateral projection plus the upsampled
    deeper pyramid level; the deepest is its projection alone."""
    lat = lateral(feats, weights, config)
    if sorted(lat) != [1, 2, 3, 4]:
        raise ConfigError("build_pyramid needs all four levels (variant full or only_multi_level)")
    pyr = {4: lat[4]}
    for i in (3, 2, 1):
        target = lat[i].shape[-3:]
        pyr[i] = add(lat[i], upsample_trilinear(pyr[i + 1], target))
    return [pyr[i] for i in (1, 2, 3, 4)]


def decode_branch(x: Tensor, level: int, weights: dict[str, Tensor], config: ModelConfig) -> Tensor:
    plan = branch_plans(config)[level]
    specs = named_specs(config)
    td = config.decode_time
    h_target = config.height // 4
    w_target = config.width // 4
    for j in range(1, plan.n_blocks + 1):
        name = f"pyr.branch{level}.block{j}"
        x = conv3d_spec(x, specs[name], _sub(weights, name), relu)
        t, h, w = x.shape[-3:]
        target = (t * 2 if t < td else t, h * 2 if h < h_target else h, w * 2 if w < w_target else w)
        if target != (t, h, w):
            x = upsample_trilinear(x, target)
    if x.shape[-3:] != (td, h_target, w_target):
        raise ShapeError(f"branch {level} ended at {x.shape[-3:]}, expected {(td, h_target, w_target)}")
    return x


def hierarchical_decode(pyr: dict[int, Tensor] | list[Tensor], weights: dict[str, Tensor], config: ModelConfig) -> Tensor:
    """Decode every level by its own branch and sum the results."""
    if isinstance(pyr, list):
        pyr = dict(zip(active_levels(config.pyramid.variant), pyr)) if len(pyr) != 4 else dict(zip((1, 2, 3, 4), pyr))
    fused = None
    for i in sorted(pyr):
        y = decode_branch(pyr[i], i, weights, config)
        fused = y if fused is None else add(fused, y)
    return fused


def output_head(fused: Tensor, weights: dict[str, Tensor], config: ModelConfig) -> Tensor:
    """Collapse time with stride-2 convs, project to one channel, sigmoid, x4 bilinear.

    Returns (H, W), or (N, H, W) for batched input.
    """
    specs = named_specs(config)
    x = fused
    for j in range(1, head_blocks(config) + 1):
        name = f"head.block{j}"
        x = conv3d_spec(x, specs[name], _sub(weights, name), relu)
    if x.shape[-3] != 1:
        raise ShapeError(f"time axis: head left {x.shape[-3]} steps, expected 1", axis="time")
    x = sigmoid(conv3d_spec(x, specs["head.out"], _sub(weights, "head.out")))
    x = upsample_bilinear(x, (config.height, config.width))
    if x.ndim == 5:
        return x.reshape(x.shape[0], config.height, config.width)
    return x.reshape(config.height, config.width)


def visual_fused(feats: list[Tensor], weights: dict[str, Tensor], config: ModelConfig) -> Tensor:
    """Encoder levels -> fused decoder features, per the configured variant."""
    variant = config.pyramid.variant
    if variant == "full":
        pyr = dict(zip((1, 2, 3, 4), build_pyramid(feats, weights, config)))
    else:
        pyr = lateral(feats, weights, config)
    return hierarchical_decode(pyr, weights, config)
