"""Training: Adam, gradient accumulation, LR milestones, early stopping on NSS."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import TrainConfig
from .data import DatasetIndex, Sample, sample_clip
from .inference import predict_dataset_video
from .losses import LossWeights, loss_terms
from .metrics import metric_nss
from .model import TSFPNet
from .tensor import Tensor, scalar_mul, stack


class Adam:
    def __init__(self, params: dict[str, Tensor], lr: float = 1e-4, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data, dtype=np.float64) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data, dtype=np.float64) for k, p in params.items()}

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for k, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad.astype(np.float64)
            self.m[k] = b1 * self.m[k] + (1.0 - b1) * g
            self.v[k] = b2 * self.v[k] + (1.0 - b2) * g * g
            update = self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
            p.data = (p.data - update).astype(p.dtype)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None


def loss_weights(cfg: TrainConfig) -> LossWeights:
    return LossWeights(cfg.alpha1, cfg.alpha2, cfg.loss_mode)


def micro_batch_backward(model: TSFPNet, samples: Sequence[Sample], denom: int, weights: LossWeights) -> dict[str, float]:
    """Forward a micro-batch, back-propagate ``sum(clip losses) / denom``.

    Returns the summed (not averaged) loss components of the micro-batch.
    """
    clips = Tensor(np.stack([s.clip for s in samples]))
    audio = None
    if model.config.audio is not None and all(s.audio is not None for s in samples):
        audio = Tensor(np.stack([s.audio for s in samples]))
    maps = model.forward(clips, audio=audio)
    totals, sums = [], {"loss": 0.0, "kl": 0.0, "cc": 0.0, "nss": 0.0}
    for n, s in enumerate(samples):
        terms = loss_terms(maps[n], s.fixation, s.density, weights)
        for name in ("kl", "cc", "nss"):
            t = getattr(terms, name)
            value = float(t.data) if t is not None else 0.0
            if not math.isfinite(value):
                raise FloatingPointError(f"non-finite {name} loss ({value}) on a training clip")
            sums[name] += value
        if not math.isfinite(float(terms.total.data)):
            raise FloatingPointError("non-finite total loss on a training clip")
        sums["loss"] += float(terms.total.data)
        totals.append(terms.total)
    scalar_mul(stack(totals).sum(), 1.0 / denom).backward()
    return sums


def accumulated_update(model: TSFPNet, optimizer: Adam, batch: Sequence[Sample], micro_batch: int,
                       weights: LossWeights) -> tuple[dict[str, float], int]:
    """Accumulate gradients over micro-batches of ``batch`` and apply one
    optimizer step, so the update matches one step on the batch-mean loss.

    Returns mean loss components and the number of micro-batches used.
    """
    optimizer.zero_grad()
    sums = {"loss": 0.0, "kl": 0.0, "cc": 0.0, "nss": 0.0}
    n_micro = 0
    for start in range(0, len(batch), micro_batch):
        part = micro_batch_backward(model, batch[start : start + micro_batch], len(batch), weights)
        for k in sums:
            sums[k] += part[k]
        n_micro += 1
    optimizer.step()
    return {k: v / len(batch) for k, v in sums.items()}, n_micro


def validation_nss(model: TSFPNet, dataset: DatasetIndex, max_frames: int) -> float:
    """Mean over videos of the per-frame NSS mean on the first ``max_frames`` frames."""
    per_video = []
    for v in dataset.videos:
        if not v.has_labels:
            continue
        maps = predict_dataset_video(model, v, dataset.size, max_frames)
        vals = []
        for k, S in enumerate(maps):
            F = v.fixation(k, dataset.size)
            if F.any():
                vals.append(metric_nss(S, F))
        if vals:
            per_video.append(float(np.mean(vals)))
    return float(np.mean(per_video)) if per_video else math.nan


@dataclass
class TrainResult:
    best_state: dict[str, np.ndarray] | None
    best_val_nss: float
    best_epoch: int
    updates: int
    log: list[str] = field(default_factory=list)
    val_history: list[float] = field(default_factory=list)
    loss_history: list[float] = field(default_factory=list)


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def train(
    model: TSFPNet,
    train_set: DatasetIndex,
    val_set: DatasetIndex,
    cfg: TrainConfig,
    out_dir=None,
) -> TrainResult:
    """Train in place; the best-validation-NSS weights are returned and,
    when ``out_dir`` is given, written to ``out_dir/best.tsfpw`` along with
    ``train.log``."""
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError("need at least one training and one validation video")
    if cfg.clip_len != model.config.clip_len:
        raise ValueError(f"train clip_len {cfg.clip_len} != model clip_len {model.config.clip_len}")
    rng = np.random.default_rng(cfg.seed)
    optimizer = Adam(model.params, cfg.lr, (cfg.adam_beta1, cfg.adam_beta2), cfg.adam_eps)
    weights = loss_weights(cfg)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    result = TrainResult(None, -math.inf, 0, 0)
    log = result.log

    def emit(line: str) -> None:
        log.append(line)
        if out is not None:
            with open(out / "train.log", "a") as fh:
                fh.write(line + "\n")

    if out is not None:
        (out / "train.log").write_text("")
    done = False
    for epoch in range(1, cfg.epochs + 1):
        optimizer.lr = cfg.lr_at(epoch)
        order = rng.permutation(len(train_set))
        for start in range(0, len(order), cfg.batch_videos):
            batch = [sample_clip(train_set, train_set[int(i)], rng, cfg.clip_len)
                     for i in order[start : start + cfg.batch_videos]]
            losses, _ = accumulated_update(model, optimizer, batch, cfg.micro_batch, weights)
            result.updates += 1
            result.loss_history.append(losses["loss"])
            emit(
                f"epoch={epoch} step={result.updates} loss={_fmt(losses['loss'])} kl={_fmt(losses['kl'])}"
                f" cc={_fmt(losses['cc'])} nss={_fmt(losses['nss'])} lr={optimizer.lr:.3e}"
            )
            if cfg.max_steps is not None and result.updates >= cfg.max_steps:
                done = True
                break
        val = validation_nss(model, val_set, cfg.val_frames_per_video)
        result.val_history.append(val)
        improved = val > result.best_val_nss
        emit(f"epoch={epoch} val_nss={_fmt(val)} lr={optimizer.lr:.3e} best={'yes' if improved else 'no'}")
        if improved:
            result.best_val_nss = val
            result.best_epoch = epoch
            result.best_state = model.state_dict()
            if out is not None:
                model.save(out / "best.tsfpw")
        if done:
            break
    return result
