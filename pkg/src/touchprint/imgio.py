"""Image file I/O: PNG via Pillow, binary PGM/PPM parsed directly."""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .errors import ParseError


def read_image(path: str) -> np.ndarray:
    """Load an image file as uint8 HxW (gray) or HxWx3 (RGB)."""
    ext = os.path.splitext(path)[1].lower()
    if ext in (".pgm", ".ppm"):
        return _read_netpbm(path)
    with Image.open(path) as im:
        if im.mode in ("1", "L", "I;16", "I"):
            return np.asarray(im.convert("L"), dtype=np.uint8)
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_image(path: str, img: np.ndarray) -> None:
    """Write uint8 gray or RGB arrays; format chosen by extension."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".pgm":
        _write_netpbm(path, img, color=False)
        return
    if ext == ".ppm":
        _write_netpbm(path, img, color=True)
        return
    mode = "L" if img.ndim == 2 else "RGB"
    Image.fromarray(np.ascontiguousarray(img), mode=mode).save(path)


def read_mask(path: str) -> np.ndarray:
    """Load a mask image; any nonzero luma counts as foreground."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return arr > 127


def write_mask(path: str, mask: np.ndarray) -> None:
    """Write a boolean mask as a 1-bit PNG."""
    im = Image.fromarray((mask.astype(np.uint8) * 255), mode="L").convert("1", dither=Image.NONE)
    im.save(path)


def _read_netpbm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    tokens: list[bytes] = []
    i = 0
    # header: magic, width, height, maxval, separated by whitespace/comments
    while len(tokens) < 4:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise ParseError(f"truncated netpbm header in {path}")
        tokens.append(data[start:i])
    i += 1
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval <= 0 or maxval > 255:
        raise ParseError(f"unsupported netpbm maxval {maxval}")
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise ParseError(f"unsupported netpbm magic {magic!r}")
    need = w * h * channels
    raw = data[i : i + need]
    if len(raw) != need:
        raise ParseError(f"netpbm pixel data truncated in {path}")
    arr = np.frombuffer(raw, dtype=np.uint8)
    if channels == 1:
        return arr.reshape(h, w).copy()
    return arr.reshape(h, w, 3).copy()


def _write_netpbm(path: str, img: np.ndarray, color: bool) -> None:
    if color and img.ndim == 2:
        img = np.stack([img] * 3, axis=-1)
    if not color and img.ndim == 3:
        raise ValueError("PGM output requires a single-channel image")
    h, w = img.shape[:2]
    magic = b"P6" if color else b"P5"
    header = magic + f"\n{w} {h}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(img, dtype=np.uint8).tobytes())
