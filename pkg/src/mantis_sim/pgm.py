"""Binary PGM (P5, maxval 255) read/write, the only image format used."""

from __future__ import annotations

from pathlib import Path

import numpy as np


class PgmError(ValueError):
    pass


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < 4:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise PgmError(f"{path}: truncated header")
        tokens.append(data[start:i])
    if tokens[0] != b"P5":
        raise PgmError(f"{path}: not a binary PGM (P5)")
    width, height, maxval = (int(t) for t in tokens[1:4])
    if maxval != 255:
        raise PgmError(f"{path}: only maxval 255 supported, got {maxval}")
    i += 1  # single whitespace after maxval
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=i)
    if pixels.size != width * height:
        raise PgmError(f"{path}: truncated pixel data")
    return pixels.reshape(height, width).copy()


def write_pgm(path, image: np.ndarray, comment: str | None = None) -> None:
    img = np.asarray(image)
    if img.ndim != 2:
        raise PgmError("image must be 2-D")
    img = np.clip(np.round(img), 0, 255).astype(np.uint8)
    header = b"P5\n"
    if comment:
        header += b"# " + comment.encode() + b"\n"
    header += f"{img.shape[1]} {img.shape[0]}\n255\n".encode()
    Path(path).write_bytes(header + img.tobytes())


def render_to_pgm(values: np.ndarray) -> np.ndarray:
    """Min-max scale an arbitrary grid to 8b for eyeballing (lossy)."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.full(v.shape, 128, dtype=np.uint8)
    return np.round((v - lo) / (hi - lo) * 255).astype(np.uint8)
