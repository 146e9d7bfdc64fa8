"""Pixel-level primitives shared by every pipeline stage.

Images are numpy arrays: uint8 HxW (single channel) or HxWx3 (RGB), masks are
bool HxW. All functions are pure and return new arrays.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .errors import GrayInput

# BT.601 luma weights, also used for the Cr chroma plane
GRAY_WEIGHTS = (0.299, 0.587, 0.114)
CR_WEIGHTS = (0.5, -0.418688, -0.081312)

CHANNEL_CR = "cr"
CHANNEL_HUE = "hue"


def _split_rgb(img: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r = img[..., 0].astype(np.float64)
    g = img[..., 1].astype(np.float64)
    b = img[..., 2].astype(np.float64)
    return r, g, b


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """BT.601 luma conversion; single-channel input is returned unchanged."""
    if img.ndim == 2:
        return img
    r, g, b = _split_rgb(img)
    np.multiply(r, GRAY_WEIGHTS[0], out=r)
    np.multiply(g, GRAY_WEIGHTS[1], out=g)
    r += g
    np.multiply(b, GRAY_WEIGHTS[2], out=b)
    r += b
    np.rint(r, out=r)
    np.clip(r, 0, 255, out=r)
    return r.astype(np.uint8)


def extract_channel(img: np.ndarray, kind: str) -> np.ndarray:
    """Extract the Cr (BT.601) or Hue (HSV, scaled to 0-255) plane of an RGB image.

    Hue of achromatic pixels is defined as 0 so downstream masks stay
    deterministic.
    """
    if img.ndim != 3 or img.shape[2] != 3:
        raise GrayInput("channel extraction requires a 3-channel image")
    r, g, b = _split_rgb(img)
    if kind == CHANNEL_CR:
        # in-place chain; addition order matches 128 + w0*r + w1*g + w2*b
        np.multiply(r, CR_WEIGHTS[0], out=r)
        r += 128.0
        np.multiply(g, CR_WEIGHTS[1], out=g)
        r += g
        np.multiply(b, CR_WEIGHTS[2], out=b)
        r += b
        np.rint(r, out=r)
        np.clip(r, 0, 255, out=r)
        return r.astype(np.uint8)
    if kind == CHANNEL_HUE:
        mx = np.maximum(r, g)
        np.maximum(mx, b, out=mx)
        delta = np.minimum(r, g)
        np.minimum(delta, b, out=delta)
        np.subtract(mx, delta, out=delta)
        achroma = delta == 0
        is_r = mx == r
        is_g = mx == g
        safe = np.where(achroma, 1.0, delta)
        h_r = g - b
        h_r /= safe
        np.mod(h_r, 6.0, out=h_r)
        h_g = b - r
        h_g /= safe
        h_g += 2.0
        hue6 = np.subtract(r, g, out=r)
        hue6 /= safe
        hue6 += 4.0
        # priority: achromatic -> 0, then max==r, then max==g, else max==b
        np.copyto(hue6, h_g, where=is_g)
        np.copyto(hue6, h_r, where=is_r)
        hue6[achroma] = 0.0
        hue6 *= 60.0
        hue6 *= 255.0 / 360.0
        np.rint(hue6, out=hue6)
        np.clip(hue6, 0, 255, out=hue6)
        return hue6.astype(np.uint8)
    raise ValueError(f"unknown channel kind {kind!r}")


def stretch_histogram(ch: np.ndarray) -> np.ndarray:
    """Linear stretch of [min, max] to [0, 255]; constant images pass through."""
    mn = int(ch.min())
    mx = int(ch.max())
    if mn == mx:
        return ch.copy()
    out = (ch.astype(np.float64) - mn) * (255.0 / (mx - mn))
    return np.rint(out).astype(np.uint8)


def _rotated_canvas(w: int, h: int, cos_t: float, sin_t: float) -> tuple[int, int]:
    out_w = int(math.ceil(w * abs(cos_t) + h * abs(sin_t) - 1e-9))
    out_h = int(math.ceil(w * abs(sin_t) + h * abs(cos_t) - 1e-9))
    return max(out_w, 1), max(out_h, 1)


def rotate_image(img: np.ndarray, angle_ccw: float, interp: str = "bilinear") -> np.ndarray:
    """Rotate counter-clockwise (on screen, y axis pointing down) about the center.

    The output canvas is the bounding box of the rotated extent; pixels with
    no source are 0. Boolean masks always use nearest interpolation. Multiples
    of 90 degrees take a lossless index-permutation path.
    """
    if not math.isfinite(angle_ccw):
        raise ValueError("rotation angle must be finite")
    is_mask = img.dtype == bool
    a = angle_ccw % 360.0
    if a % 90.0 == 0.0:
        return np.ascontiguousarray(np.rot90(img, int(a // 90)))
    theta = math.radians(a)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    h, w = img.shape[:2]
    out_w, out_h = _rotated_canvas(w, h, cos_t, sin_t)
    # inverse map: output pixel centers back into source coordinates
    ox = np.arange(out_w, dtype=np.float64) - (out_w - 1) / 2.0
    oy = np.arange(out_h, dtype=np.float64) - (out_h - 1) / 2.0
    oxg, oyg = np.meshgrid(ox, oy)
    src_x = cos_t * oxg - sin_t * oyg + (w - 1) / 2.0
    src_y = sin_t * oxg + cos_t * oyg + (h - 1) / 2.0
    if is_mask or interp == "nearest":
        xi = np.rint(src_x).astype(np.int64)
        yi = np.rint(src_y).astype(np.int64)
        inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
        xi = np.clip(xi, 0, w - 1)
        yi = np.clip(yi, 0, h - 1)
        out = img[yi, xi]
        if is_mask:
            return np.where(inside, out, False)
        if out.ndim == 3:
            inside = inside[..., None]
        return np.where(inside, out, 0).astype(img.dtype)
    return _bilinear_gather(img, src_x, src_y)


def _bilinear_gather(img: np.ndarray, src_x: np.ndarray, src_y: np.ndarray) -> np.ndarray:
    # edge-clamped bilinear; only samples whose center falls within half a
    # pixel of the source extent survive, the rest become 0
    h, w = img.shape[:2]
    inside = (src_x >= -0.5) & (src_x <= w - 0.5) & (src_y >= -0.5) & (src_y <= h - 0.5)
    coords = [src_y, src_x]
    if img.ndim == 3:
        planes = [
            ndimage.map_coordinates(img[..., c].astype(np.float64), coords,
                                    order=1, mode="nearest")
            for c in range(img.shape[2])
        ]
        out = np.stack(planes, axis=-1)
        inside = inside[..., None]
    else:
        out = ndimage.map_coordinates(img.astype(np.float64), coords,
                                      order=1, mode="nearest")
    out = np.where(inside, out, 0.0)
    return np.clip(np.rint(out), 0, 255).astype(img.dtype)


def resize_to_width(img: np.ndarray, target_width: int) -> np.ndarray:
    """Bilinear aspect-preserving resample to an exact output width.

    Output height is round(H * target / W), floored at 1. Boolean masks are
    resampled with nearest neighbor.
    """
    if target_width < 1:
        raise ValueError("target_width must be >= 1")
    h, w = img.shape[:2]
    if w == target_width:
        return img.copy()
    out_w = int(target_width)
    out_h = max(1, int(round(h * target_width / w)))
    return resize_bilinear(img, out_w, out_h)


def resize_bilinear(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Resample to an explicit size with pixel-center alignment."""
    h, w = img.shape[:2]
    src_x = np.clip((np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5, 0, w - 1)
    src_y = np.clip((np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5, 0, h - 1)
    if img.dtype == bool:
        xi = np.rint(src_x).astype(np.int64)
        yi = np.rint(src_y).astype(np.int64)
        return img[yi[:, None], xi[None, :]]
    x0 = np.floor(src_x).astype(np.int64)
    y0 = np.floor(src_y).astype(np.int64)
    fx = src_x - x0
    fy = src_y - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    vals = img.astype(np.float64)
    if vals.ndim == 3:
        fxr = fx[None, :, None]
        fyr = fy[:, None, None]
    else:
        fxr = fx[None, :]
        fyr = fy[:, None]
    top = vals[y0[:, None], x0[None, :]] * (1.0 - fxr) + vals[y0[:, None], x1[None, :]] * fxr
    bot = vals[y1[:, None], x0[None, :]] * (1.0 - fxr) + vals[y1[:, None], x1[None, :]] * fxr
    out = top * (1.0 - fyr) + bot * fyr
    return np.clip(np.rint(out), 0, 255).astype(img.dtype)
