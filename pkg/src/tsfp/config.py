"""Configuration dataclasses with strict dict/JSON loading."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any

VARIANTS = ("full", "only_final_level", "only_multi_level")
LOSS_MODES = ("combined", "kl_only")


class ConfigError(ValueError):
    pass


def _build(cls, data: dict[str, Any] | None, where: str):
    data = dict(data or {})
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        sub = _NESTED.get((cls, key))
        if sub is not None:
            value = None if value is None else _build(sub, value, f"{where}.{key}")
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass(frozen=True)
class EncoderConfig:
    stage_channels: tuple[int, ...] = (16, 32, 64, 96)
    stage_spatial_stride: tuple[int, ...] = (1, 2, 2, 2)
    stage_temporal_stride: tuple[int, ...] = (1, 2, 2, 1)
    blocks_per_stage: tuple[int, ...] = (1, 1, 2, 2)
    stem_channels: int = 16
    separable: bool = True

    def __post_init__(self):
        for name in ("stage_channels", "stage_spatial_stride", "stage_temporal_stride", "blocks_per_stage"):
            value = tuple(int(v) for v in getattr(self, name))
            object.__setattr__(self, name, value)
            if len(value) != 4:
                raise ConfigError(f"{name} must have exactly 4 entries, got {len(value)}")
            if min(value) < 1:
                raise ConfigError(f"{name} entries must be positive")
        if self.stem_channels < 1:
            raise ConfigError("stem_channels must be positive")

    @property
    def temporal_divisor(self) -> int:
        out = 1
        for s in self.stage_temporal_stride:
            out *= s
        return out

    @property
    def spatial_divisor(self) -> int:
        out = 4
        for s in self.stage_spatial_stride:
            out *= s
        return out


@dataclass(frozen=True)
class PyramidConfig:
    pyramid_channels: int = 32
    variant: str = "full"
    # decode time length = clip_len // decode_time_divisor
    decode_time_divisor: int = 4

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.pyramid_channels < 1 or self.decode_time_divisor < 1:
            raise ConfigError("pyramid_channels and decode_time_divisor must be positive")


@dataclass(frozen=True)
class AudioConfig:
    channels: tuple[int, ...] = (16, 32, 32, 64, 64)
    kernel: int = 8
    stride: int = 4
    padding: int = 2
    sample_rate: int = 16000

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        if not self.channels or min(self.channels) < 1:
            raise ConfigError("audio channels must be a nonempty list of positive ints")
        if self.kernel < 1 or self.stride < 1 or self.padding < 0:
            raise ConfigError("invalid audio kernel/stride/padding")

    @property
    def feature_dim(self) -> int:
        return self.channels[-1]


@dataclass(frozen=True)
class ModelConfig:
    clip_len: int = 32
    height: int = 192
    width: int = 352
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    pyramid: PyramidConfig = field(default_factory=PyramidConfig)
    audio: AudioConfig | None = None

    def __post_init__(self):
        if self.clip_len % self.encoder.temporal_divisor:
            raise ConfigError(
                f"clip_len {self.clip_len} not divisible by temporal stride product {self.encoder.temporal_divisor}"
            )
        for name in ("height", "width"):
            if getattr(self, name) % self.encoder.spatial_divisor:
                raise ConfigError(f"{name} {getattr(self, name)} not divisible by {self.encoder.spatial_divisor}")
        if self.clip_len % self.pyramid.decode_time_divisor:
            raise ConfigError("clip_len not divisible by decode_time_divisor")
        td = self.decode_time
        if td & (td - 1):
            raise ConfigError(f"decode time length {td} must be a power of two")
        from .pyramid import branch_plans

        branch_plans(self)  # every level must reach the decode target by doublings

    @property
    def decode_time(self) -> int:
        return self.clip_len // self.pyramid.decode_time_divisor

    def with_variant(self, variant: str) -> "ModelConfig":
        return dataclasses.replace(self, pyramid=dataclasses.replace(self.pyramid, variant=variant))

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict | None) -> "ModelConfig":
        return _build(cls, data, "model")

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TrainConfig:
    clip_len: int = 32
    batch_videos: int = 16
    micro_batch: int = 4
    accumulation_steps: int = 4
    lr: float = 1e-4
    lr_milestones: tuple[int, ...] = (22, 25, 26)
    lr_decay: float = 0.1
    epochs: int = 26
    max_steps: int | None = None
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    val_frames_per_video: int = 80
    alpha1: float = 0.5
    alpha2: float = 0.1
    loss_mode: str = "combined"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lr_milestones", tuple(int(m) for m in self.lr_milestones))
        if self.micro_batch * self.accumulation_steps != self.batch_videos:
            raise ConfigError(
                f"micro_batch ({self.micro_batch}) * accumulation_steps ({self.accumulation_steps})"
                f" != batch_videos ({self.batch_videos})"
            )
        if self.loss_mode not in LOSS_MODES:
            raise ConfigError(f"loss_mode must be one of {LOSS_MODES}")
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise ConfigError("alpha1 and alpha2 must be nonnegative")
        if self.clip_len < 1 or self.epochs < 0 or self.val_frames_per_video < 1:
            raise ConfigError("clip_len, epochs, val_frames_per_video out of range")

    def lr_at(self, epoch: int) -> float:
        """Learning rate at a 1-indexed epoch; decays at every reached milestone."""
        drops = sum(1 for m in self.lr_milestones if epoch >= m)
        return self.lr * self.lr_decay**drops

    @classmethod
    def from_dict(cls, data: dict | None) -> "TrainConfig":
        return _build(cls, data, "train")


_NESTED = {
    (ModelConfig, "encoder"): EncoderConfig,
    (ModelConfig, "pyramid"): PyramidConfig,
    (ModelConfig, "audio"): AudioConfig,
}


def toy_model_config(**overrides) -> ModelConfig:
    """The desk-scale T=8, 32x64 configuration used by the smoke tests."""
    base = dict(clip_len=8, height=32, width=64)
    base.update(overrides)
    return ModelConfig(**base)
