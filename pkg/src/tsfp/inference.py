"""Sliding-window prediction and dataset evaluation."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .data import DatasetIndex, Video, audio_length
from .metrics import EvalRecord, frame_record
from .model import TSFPNet
from .tensor import Tensor


def window_indices(k: int, L: int, T: int) -> list[int]:
    """0-based frame indices of the window that predicts frame ``k``.

    From the T-th frame on, the window is the trailing T frames. Earlier
    frames use the video played backwards: frames k+T-1, ..., k, so that k is
    last. Indices past the end repeat the last frame.
    """
    if not 0 <= k < L:
        raise IndexError(f"frame {k} outside video of length {L}")
    if k >= T - 1:
        return list(range(k - T + 1, k + 1))
    return [min(j, L - 1) for j in range(k + T - 1, k - 1, -1)]


def predict_video(
    model: TSFPNet,
    frames: Sequence[np.ndarray],
    T: int | None = None,
    audio_windows: Sequence[np.ndarray] | None = None,
) -> list[np.ndarray]:
    """One saliency map per frame; ``frames`` are normalised (3, H, W) arrays."""
    T = T or model.config.clip_len
    L = len(frames)
    stacked = np.stack([np.asarray(f) for f in frames], axis=1)  # (3, L, H, W)
    maps = []
    for k in range(L):
        clip = Tensor(stacked[:, window_indices(k, L, T)])
        audio = None if audio_windows is None else audio_windows[k]
        maps.append(model.forward(clip, audio=audio).data.copy())
    return maps


def predict_dataset_video(model: TSFPNet, video: Video, size=None, max_frames: int | None = None) -> list[np.ndarray]:
    T = model.config.clip_len
    n = len(video) if max_frames is None else min(len(video), max_frames)
    frames = [video.frame(k, size) for k in range(n)]
    audio_windows = None
    if model.config.audio is not None and video.waveform() is not None:
        length = audio_length(T, video.fps, video.sample_rate)
        audio_windows = [video.audio_for(window_indices(k, n, T), length) for k in range(n)]
    return predict_video(model, frames, T, audio_windows)


def evaluate(model: TSFPNet, dataset: DatasetIndex, max_frames: int | None = None) -> tuple[list[EvalRecord], list[str]]:
    """Per-frame metrics for every labelled video.

    Shuffled-AUC negatives for a video are the fixation maps of all other
    videos.  Returns the records and notes on skipped videos or frames.
    """
    notes = []
    labelled = [v for v in dataset.videos if v.has_labels]
    for v in dataset.videos:
        if not v.has_labels:
            notes.append(f"{v.id}: missing labels, skipped")
    fixations = {
        v.id: [v.fixation(k, dataset.size) for k in range(len(v) if max_frames is None else min(len(v), max_frames))]
        for v in labelled
    }
    records = []
    for v in labelled:
        maps = predict_dataset_video(model, v, dataset.size, max_frames)
        negatives = [m for other, ms in fixations.items() if other != v.id for m in ms]
        for k, S in enumerate(maps):
            F = fixations[v.id][k]
            if not F.any():
                notes.append(f"{v.id}: frame {k + 1} has no fixations, skipped")
                continue
            G = v.density(k, dataset.size)
            records.append(frame_record(v.id, k + 1, S, F, G, negatives or None))
    return records, notes
