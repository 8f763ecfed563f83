"""Binary PGM/PPM images, 16-bit PCM audio, and resizing helpers."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .functional import resize_axis


class FormatError(ValueError):
    pass


def _read_tokens(blob: bytes, count: int, pos: int) -> tuple[list[int], int]:
    """Read ``count`` whitespace-separated header integers, skipping comments."""
    tokens: list[int] = []
    n = len(blob)
    while len(tokens) < count:
        while pos < n and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < n and blob[pos : pos + 1] == b"#":
            while pos < n and blob[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and blob[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise FormatError("malformed PNM header")
        tokens.append(int(blob[start:pos]))
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def decode_pnm(blob: bytes) -> np.ndarray:
    """Decode binary P5 (H, W) or P6 (H, W, 3) data; 8- or 16-bit."""
    magic = blob[:2]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"unsupported PNM magic {magic!r}; only binary P5/P6")
    (width, height, maxval), pos = _read_tokens(blob, 3, 2)
    if not 0 < maxval < 65536:
        raise FormatError(f"invalid maxval {maxval}")
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    count = width * height * channels
    raster = np.frombuffer(blob, dtype=dtype, count=count, offset=pos)
    shape = (height, width, 3) if channels == 3 else (height, width)
    return raster.reshape(shape).astype(np.uint16 if maxval > 255 else np.uint8)


def encode_pnm(image: np.ndarray, maxval: int = 255) -> bytes:
    image = np.asarray(image)
    if image.ndim == 2:
        magic = b"P5"
    elif image.ndim == 3 and image.shape[2] == 3:
        magic = b"P6"
    else:
        raise FormatError(f"cannot encode image of shape {image.shape}")
    height, width = image.shape[:2]
    header = b"%s\n%d %d\n%d\n" % (magic, width, height, maxval)
    dtype = ">u2" if maxval > 255 else np.uint8
    if image.min(initial=0) < 0 or image.max(initial=0) > maxval:
        raise FormatError("pixel values out of range")
    return header + np.ascontiguousarray(image, dtype=dtype).tobytes()


def read_pgm(path) -> np.ndarray:
    img = decode_pnm(Path(path).read_bytes())
    if img.ndim != 2:
        raise FormatError(f"{path}: expected P5 grayscale")
    return img


def read_ppm(path) -> np.ndarray:
    img = decode_pnm(Path(path).read_bytes())
    if img.ndim != 3:
        raise FormatError(f"{path}: expected P6 colour")
    return img


def write_pnm(path, image: np.ndarray, maxval: int = 255) -> None:
    Path(path).write_bytes(encode_pnm(image, maxval))


def saliency_to_pgm(S) -> np.ndarray:
    """8-bit raster of a map in [0, 1]: round(255 * S)."""
    return np.clip(np.rint(255.0 * np.asarray(S, dtype=np.float64)), 0, 255).astype(np.uint8)


def write_saliency(path, S) -> None:
    write_pnm(path, saliency_to_pgm(S))


# -- audio ---------------------------------------------------------------

def read_pcm(path) -> np.ndarray:
    """Headerless 16-bit little-endian PCM, scaled to [-1, 1)."""
    raw = np.frombuffer(Path(path).read_bytes(), dtype="<i2")
    return raw.astype(np.float64) / 32768.0


def write_pcm(path, samples) -> None:
    ints = np.clip(np.rint(np.asarray(samples, dtype=np.float64) * 32768.0), -32768, 32767)
    Path(path).write_bytes(ints.astype("<i2").tobytes())


def read_audio_meta(path) -> dict[str, float]:
    """Parse ``key=value`` lines; ``sample_rate`` is required."""
    meta: dict[str, float] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"{path}: malformed line {line!r}")
        meta[key.strip()] = float(value)
    if "sample_rate" not in meta:
        raise FormatError(f"{path}: missing sample_rate")
    meta["sample_rate"] = int(meta["sample_rate"])
    return meta


def write_audio_meta(path, sample_rate: int, fps: float | None = None) -> None:
    text = f"sample_rate={int(sample_rate)}\n"
    if fps is not None:
        text += f"fps={fps:g}\n"
    Path(path).write_text(text)


# -- resizing --------------------------------------------------------------

def resize_bilinear(image: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Half-pixel bilinear resize of the first two axes; returns float64."""
    out = np.asarray(image, dtype=np.float64)
    out = resize_axis(out, 0, size[0])
    return resize_axis(out, 1, size[1])


def resize_fixations(fix: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbour resize that maps every fixation to its target pixel,
    so no fixation is lost when downscaling."""
    fix = np.asarray(fix) != 0
    H, W = fix.shape
    out = np.zeros(size, dtype=bool)
    ys, xs = np.nonzero(fix)
    ty = np.minimum(((ys + 0.5) * size[0] / H).astype(int), size[0] - 1)
    tx = np.minimum(((xs + 0.5) * size[1] / W).astype(int), size[1] - 1)
    out[ty, tx] = True
    return out
