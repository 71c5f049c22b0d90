"""Binary PGM (P5) / PPM (P6) reading and mask writing, maxval 255 only.

PGM fills the luma plane and leaves chroma at zero; PPM converts RGB to YUV
with BT.601 full-range coefficients:

    Y = 0.299 R + 0.587 G + 0.114 B
    U = 0.492 (B - Y)
    V = 0.877 (R - Y)
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .covariance import ImageRegion


class ImageFormatError(ValueError):
    pass


def _read_header_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Parse `count` whitespace-separated integers after the magic, skipping
    '#' comments; returns the values and the offset of the binary payload."""
    tokens: list[int] = []
    pos = 2  # past the 2-byte magic
    while len(tokens) < count:
        if pos >= len(data):
            raise ImageFormatError("truncated header")
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            end = data.find(b"\n", pos)
            if end == -1:
                raise ImageFormatError("unterminated comment in header")
            pos = end + 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            token = data[pos:end]
            if not token.isdigit():
                raise ImageFormatError(f"non-numeric header token {token!r}")
            tokens.append(int(token))
            pos = end
    # exactly one whitespace byte separates the header from the payload
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise ImageFormatError("missing separator before pixel data")
    return tokens, pos + 1


def load_image(path) -> ImageRegion:
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    elif magic in (b"P1", b"P2", b"P3", b"P4"):
        raise ImageFormatError(f"unsupported format {magic.decode()} (binary P5/P6 only)")
    else:
        raise ImageFormatError("not a PGM/PPM file")
    (width, height, maxval), offset = _read_header_tokens(data, 3)
    if maxval != 255:
        raise ImageFormatError(f"unsupported maxval {maxval} (255 only)")
    expected = width * height * channels
    payload = data[offset : offset + expected]
    if len(payload) < expected:
        raise ImageFormatError(
            f"truncated payload: expected {expected} bytes, got {len(payload)}"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    if channels == 1:
        y = pixels.reshape(height, width)
        zeros = np.zeros_like(y)
        return ImageRegion(y=y, u=zeros, v=zeros)
    rgb = pixels.reshape(height, width, 3)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    u = 0.492 * (b - y)
    v = 0.877 * (r - y)
    return ImageRegion(y=y, u=u, v=v)


def load_mask(path) -> np.ndarray:
    """Boolean mask from a PGM: nonzero pixels are True."""
    region = load_image(path)
    return region.y > 0


def save_mask(mask: np.ndarray, path) -> None:
    """Write a boolean mask as binary PGM with values 0/255."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ImageFormatError("mask must be 2-d")
    h, w = mask.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + (mask.astype(np.uint8) * 255).tobytes())
