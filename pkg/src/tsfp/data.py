"""Datasets on disk or in memory, clip sampling, and synthetic videos.

On-disk layout, one directory per video::

    <root>/<video_id>/frames/%06d.ppm      binary P6
    <root>/<video_id>/fixation/%06d.pgm    binary P5, nonzero = fixation
    <root>/<video_id>/maps/%06d.pgm        binary P5 density
    <root>/<video_id>/audio.pcm            optional, 16-bit LE mono
    <root>/<video_id>/audio.meta           "sample_rate=<int>" (+ optional "fps=<float>")

Frame numbers start at 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io

FRAME_MEAN = 0.5
FRAME_STD = 0.25
DEFAULT_FPS = 30.0


def normalize_frame(rgb: np.ndarray, size: tuple[int, int] | None = None) -> np.ndarray:
    """uint8 (H, W, 3) -> float32 (3, H, W), scaled to [0, 1] then standardised."""
    x = np.asarray(rgb, dtype=np.float64) / 255.0
    if size is not None and x.shape[:2] != tuple(size):
        x = io.resize_bilinear(x, size)
    x = (x - FRAME_MEAN) / FRAME_STD
    return np.ascontiguousarray(np.moveaxis(x, -1, 0), dtype=np.float32)


def _load(item, reader):
    return reader(item) if isinstance(item, (str, Path)) else np.asarray(item)


@dataclass
class Video:
    """A video's frames and labels, each entry a path or an in-memory array."""

    id: str
    frames: Sequence
    fixations: Sequence | None = None
    densities: Sequence | None = None
    fps: float = DEFAULT_FPS
    audio: np.ndarray | None = None
    sample_rate: int | None = None
    audio_path: Path | None = None

    def __post_init__(self):
        n = len(self.frames)
        if n == 0:
            raise ValueError(f"video {self.id!r} has no frames")
        for name in ("fixations", "densities"):
            labels = getattr(self, name)
            if labels is not None and len(labels) != n:
                raise ValueError(f"video {self.id!r}: {len(labels)} {name} for {n} frames")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def has_labels(self) -> bool:
        return self.fixations is not None and self.densities is not None

    def frame(self, k: int, size=None) -> np.ndarray:
        return normalize_frame(_load(self.frames[k], io.read_ppm), size)

    def fixation(self, k: int, size=None) -> np.ndarray:
        fix = _load(self.fixations[k], io.read_pgm) != 0
        if size is not None and fix.shape != tuple(size):
            fix = io.resize_fixations(fix, size)
        return fix

    def density(self, k: int, size=None) -> np.ndarray:
        d = _load(self.densities[k], io.read_pgm).astype(np.float64)
        if size is not None and d.shape != tuple(size):
            d = np.maximum(io.resize_bilinear(d, size), 0.0)
        total = d.sum()
        return d / total if total > 0 else d

    def waveform(self) -> np.ndarray | None:
        if self.audio is None and self.audio_path is not None:
            self.audio = io.read_pcm(self.audio_path)
        return self.audio

    def audio_for(self, indices: Sequence[int], length: int | None = None) -> np.ndarray | None:
        """Samples for a window of (0-based) frame indices, concatenated per
        frame in window order; a reversed window plays each chunk backwards."""
        wave = self.waveform()
        if wave is None:
            return None
        rate = self.sample_rate / self.fps
        chunks = []
        for pos, k in enumerate(indices):
            lo, hi = int(round(k * rate)), int(round((k + 1) * rate))
            chunk = wave[lo:hi]
            if chunk.size < hi - lo:
                chunk = np.concatenate([chunk, np.zeros(hi - lo - chunk.size)])
            reverse = pos > 0 and indices[pos - 1] > k
            chunks.append(chunk[::-1] if reverse else chunk)
        out = np.concatenate(chunks)
        if length is not None:
            out = out[:length] if out.size >= length else np.concatenate([out, np.zeros(length - out.size)])
        return out


@dataclass
class DatasetIndex:
    videos: list[Video]
    size: tuple[int, int] | None = None  # frames/labels are resized to this (H, W)
    notes: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.videos)

    def __getitem__(self, key) -> Video:
        if isinstance(key, str):
            for v in self.videos:
                if v.id == key:
                    return v
            raise KeyError(key)
        return self.videos[key]

    @property
    def ids(self) -> list[str]:
        return [v.id for v in self.videos]


def _numbered(directory: Path, suffix: str) -> list[Path]:
    if not directory.is_dir():
        return []
    return sorted(p for p in directory.iterdir() if p.suffix == suffix and p.stem.isdigit())


def load_index(root, size: tuple[int, int] | None = None) -> DatasetIndex:
    """Scan a dataset directory; videos with inconsistent labels are skipped
    with a note."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist")
    videos, notes = [], []
    for vdir in sorted(p for p in root.iterdir() if p.is_dir()):
        frames = _numbered(vdir / "frames", ".ppm")
        if not frames:
            notes.append(f"{vdir.name}: no frames, skipped")
            continue
        fix = _numbered(vdir / "fixation", ".pgm") or None
        maps = _numbered(vdir / "maps", ".pgm") or None
        if (fix and len(fix) != len(frames)) or (maps and len(maps) != len(frames)):
            notes.append(f"{vdir.name}: label count differs from frame count, labels ignored")
            fix = maps = None
        if (fix is None) != (maps is None):
            notes.append(f"{vdir.name}: incomplete labels, labels ignored")
            fix = maps = None
        fps, rate, audio_path = DEFAULT_FPS, None, None
        if (vdir / "audio.pcm").exists() and (vdir / "audio.meta").exists():
            meta = io.read_audio_meta(vdir / "audio.meta")
            rate = meta["sample_rate"]
            fps = meta.get("fps", DEFAULT_FPS)
            audio_path = vdir / "audio.pcm"
        videos.append(Video(vdir.name, frames, fix, maps, fps=fps, sample_rate=rate, audio_path=audio_path))
    return DatasetIndex(videos, size, notes)


def write_video(root, video: Video, frames_rgb, fixations, densities_u8) -> None:
    """Write one video in the on-disk layout."""
    vdir = Path(root) / video.id
    for sub in ("frames", "fixation", "maps"):
        (vdir / sub).mkdir(parents=True, exist_ok=True)
    for k, (rgb, fix, den) in enumerate(zip(frames_rgb, fixations, densities_u8), start=1):
        io.write_pnm(vdir / "frames" / f"{k:06d}.ppm", np.asarray(rgb, dtype=np.uint8))
        io.write_pnm(vdir / "fixation" / f"{k:06d}.pgm", (np.asarray(fix) != 0).astype(np.uint8) * 255)
        io.write_pnm(vdir / "maps" / f"{k:06d}.pgm", np.asarray(den, dtype=np.uint8))
    if video.audio is not None:
        io.write_pcm(vdir / "audio.pcm", video.audio)
        io.write_audio_meta(vdir / "audio.meta", video.sample_rate, video.fps)


# -- clips ---------------------------------------------------------------

@dataclass
class Sample:
    clip: np.ndarray  # (3, T, H, W)
    fixation: np.ndarray  # (H, W) bool, last frame
    density: np.ndarray  # (H, W) sums to 1, last frame
    audio: np.ndarray | None
    indices: list[int]


def clip_indices(frame_count: int, T: int, rng: np.random.Generator) -> list[int]:
    """0-based frame indices of a random T-clip.

    Short videos are front-padded with repeats of the first frame.
    """
    if frame_count < 1:
        raise ValueError("empty video")
    if frame_count < T:
        return [0] * (T - frame_count) + list(range(frame_count))
    start = int(rng.integers(0, frame_count - T + 1))
    return list(range(start, start + T))


def audio_length(T: int, fps: float, sample_rate: int) -> int:
    return int(round(T / fps * sample_rate))


def assemble(video: Video, indices: Sequence[int], size=None) -> np.ndarray:
    return np.stack([video.frame(k, size) for k in indices], axis=1)


def sample_clip(index: DatasetIndex, video: Video | str | int, rng: np.random.Generator, T: int) -> Sample:
    """Random clip and the labels of its last frame."""
    if not isinstance(video, Video):
        video = index[video]
    if not video.has_labels:
        raise ValueError(f"video {video.id!r} has no labels")
    idx = clip_indices(len(video), T, rng)
    last = idx[-1]
    audio = None
    if video.waveform() is not None:
        audio = video.audio_for(idx, audio_length(T, video.fps, video.sample_rate))
    return Sample(
        assemble(video, idx, index.size),
        video.fixation(last, index.size),
        video.density(last, index.size),
        audio,
        idx,
    )


# -- synthetic data --------------------------------------------------------

def moving_blob_video(
    video_id: str,
    n_frames: int,
    height: int,
    width: int,
    rng: np.random.Generator,
    sigma: float | None = None,
    n_fixations: int = 4,
    sample_rate: int | None = None,
    fps: float = DEFAULT_FPS,
) -> tuple[Video, dict[str, np.ndarray]]:
    """A bright Gaussian blob drifting over a noisy background.

    Ground truth follows the blob: the density is a Gaussian at its centre and
    the fixations are drawn around it.  Returns the in-memory video and the
    raw uint8 rasters (``frames``, ``fixations``, ``densities``) for writing.
    """
    sigma = sigma or max(height, width) / 10.0
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    start = np.array([rng.uniform(0.25, 0.75) * height, rng.uniform(0.2, 0.8) * width])
    velocity = rng.uniform(-1.0, 1.0, size=2) * np.array([height, width]) / (4.0 * max(n_frames, 1))
    base = rng.uniform(0.1, 0.3)
    tint = rng.uniform(0.6, 1.0, size=3)
    frames, fixations, densities = [], [], []
    for k in range(n_frames):
        cy, cx = start + k * velocity
        cy = float(np.clip(cy, 0, height - 1))
        cx = float(np.clip(cx, 0, width - 1))
        g = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sigma**2))
        noise = rng.uniform(-0.05, 0.05, size=(height, width, 3))
        rgb = base + 0.7 * g[..., None] * tint + noise
        frames.append(np.clip(np.rint(rgb * 255), 0, 255).astype(np.uint8))
        density = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * (0.6 * sigma) ** 2))
        densities.append(np.clip(np.rint(density * 255), 0, 255).astype(np.uint8))
        fix = np.zeros((height, width), dtype=bool)
        pts = rng.normal([cy, cx], 0.3 * sigma, size=(n_fixations, 2))
        py = np.clip(np.rint(pts[:, 0]), 0, height - 1).astype(int)
        px = np.clip(np.rint(pts[:, 1]), 0, width - 1).astype(int)
        fix[py, px] = True
        fixations.append(fix)
    audio = None
    if sample_rate is not None:
        n = audio_length(n_frames, fps, sample_rate)
        audio = np.clip(np.rint(rng.normal(0, 0.1, size=n) * 32768), -32768, 32767) / 32768.0
    video = Video(video_id, frames, fixations, densities, fps=fps, audio=audio, sample_rate=sample_rate)
    return video, {"frames": np.stack(frames), "fixations": np.stack(fixations), "densities": np.stack(densities)}


def synthetic_dataset(
    n_videos: int, n_frames: int, height: int, width: int, seed: int = 0, sample_rate: int | None = None
) -> DatasetIndex:
    rng = np.random.default_rng(seed)
    videos = [
        moving_blob_video(f"v{i + 1:02d}", n_frames, height, width, rng, sample_rate=sample_rate)[0]
        for i in range(n_videos)
    ]
    return DatasetIndex(videos, (height, width))


def write_synthetic_dataset(root, n_videos: int, n_frames: int, height: int, width: int, seed: int = 0,
                            sample_rate: int | None = None) -> None:
    rng = np.random.default_rng(seed)
    for i in range(n_videos):
        video, raw = moving_blob_video(f"v{i + 1:02d}", n_frames, height, width, rng, sample_rate=sample_rate)
        write_video(root, video, raw["frames"], raw["fixations"], raw["densities"])
