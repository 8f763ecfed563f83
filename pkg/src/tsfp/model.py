"""The assembled saliency network."""

from __future__ import annotations

import numpy as np

from . import checkpoint, pyramid
from .audio import apply_audio_attention, audio_encode, audio_init, bilinear_fuse
from .config import ModelConfig
from .encoder import encoder_forward, encoder_init, init_conv
from .tensor import Tensor

AUDIO_STAGE = 3  # the encoder stage fused with audio


class TSFPNet:
    """Weights plus configuration; ``forward`` maps a clip to the saliency
    map of its last frame."""

    def __init__(self, config: ModelConfig, params: dict[str, Tensor]):
        self.config = config
        self.params = params

    @classmethod
    def init(cls, config: ModelConfig, seed: int = 0) -> "TSFPNet":
        rng = np.random.default_rng(seed)
        params = encoder_init(config.encoder, int(rng.integers(2**31)))
        for name, spec in pyramid.named_specs(config).items():
            gain = 1.0 if name == "head.out" else 6.0
            init_conv(params, name, spec, rng, gain=gain)
        if config.audio is not None:
            c3 = config.encoder.stage_channels[AUDIO_STAGE - 1]
            params.update(audio_init(config.audio, c3, rng))
        return cls(config, params)

    # -- parameters ------------------------------------------------------
    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def parameter_count(self) -> int:
        return sum(t.size for t in self.params.values())

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        if set(state) != set(self.params):
            raise checkpoint.CheckpointError("state names do not match the model")
        for k, t in self.params.items():
            if state[k].shape != t.shape:
                raise checkpoint.CheckpointError(f"{k}: shape {state[k].shape} != {t.shape}")
            t.data = np.array(state[k], dtype=t.dtype)

    def save(self, path) -> None:
        checkpoint.save(path, self.state_dict(), header=self.config.to_json())

    @classmethod
    def load(cls, path) -> "TSFPNet":
        tensors, header = checkpoint.load(path)
        if not header:
            raise checkpoint.CheckpointError("checkpoint has no model config header")
        model = cls.init(ModelConfig.from_json(header))
        model.load_state_dict(tensors)
        return model

    # -- forward ---------------------------------------------------------
    def features(self, clip: Tensor, audio=None, variant: str | None = None) -> Tensor:
        """Fused decoder features (after audio attention when audio is given)."""
        config = self.config if variant is None else self.config.with_variant(variant)
        if variant is not None and variant != self.config.pyramid.variant:
            needed = {
                f"{prefix}.{name}"
                for prefix, spec in pyramid.named_specs(config).items()
                for name in spec.weight_shapes()
            }
            if not needed <= set(self.params):
                raise ValueError(f"model built for {self.config.pyramid.variant!r} lacks weights for {variant!r}")
        feats = encoder_forward(clip, self.params, config.encoder)
        fused = pyramid.visual_fused(feats, self.params, config)
        if audio is not None:
            if config.audio is None:
                raise ValueError("audio given to a model without an audio branch")
            a = audio_encode(audio, {k: v for k, v in self.params.items() if k.startswith("aud.")}, config.audio)
            attn = bilinear_fuse(feats[AUDIO_STAGE - 1], a, self.params["fuse.W"], fused.shape[-3:])
            fused = apply_audio_attention(fused, attn)
        return fused

    def head(self, fused: Tensor, variant: str | None = None) -> Tensor:
        config = self.config if variant is None else self.config.with_variant(variant)
        return pyramid.output_head(fused, self.params, config)

    def forward(self, clip, audio=None, variant: str | None = None) -> Tensor:
        clip = clip if isinstance(clip, Tensor) else Tensor(clip)
        return self.head(self.features(clip, audio, variant), variant)

    __call__ = forward


def model_forward(clip, model: TSFPNet, variant: str | None = None, audio=None) -> Tensor:
    return model.forward(clip, audio=audio, variant=variant)
