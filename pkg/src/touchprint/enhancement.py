"""Contrast enhancement and touch-equivalent fingerprint rendering.

CLAHE runs on a tile grid with clipped histograms and midpoint-CDF lookup
tables, bilinearly interpolated between tile centers. Rendering zeroes the
image outside a border-eroded ROI, crops to the ROI box, caps the box at
twice its width, and resizes to a fixed output width.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import distance_transform_edt

from .config import PipelineConfig
from .errors import EmptyROI
from .geometry import FingerCrop
from .raster import resize_bilinear, to_grayscale


@dataclass(frozen=True)
class FingerprintImage:
    gray: np.ndarray
    roi: np.ndarray
    source_finger_id: int
    roi_size: tuple[int, int]  # pre-normalization (height, width)
    roi_area: int  # pre-normalization ROI pixel count


def tile_lut(hist: np.ndarray, clip: float) -> np.ndarray:
    """Midpoint-CDF equalization LUT for one tile histogram.

    Bins above clip*pixels/256 are clipped and the excess is spread
    uniformly over all bins in one pass. A tile with a single distinct
    value maps through unchanged, which keeps constant images fixed.
    """
    h = np.asarray(hist, dtype=np.float64)
    total = h.sum()
    if total <= 0 or np.count_nonzero(h) <= 1:
        return np.arange(256, dtype=np.uint8)
    limit = clip * total / 256.0
    excess = np.maximum(h - limit, 0.0).sum()
    h = np.minimum(h, limit) + excess / 256.0
    cdf = np.cumsum(h)
    mid = cdf - h / 2.0
    lut = np.rint(255.0 * mid / total)
    return np.clip(lut, 0, 255).astype(np.uint8)


def _tile_edges(n: int, size: int) -> np.ndarray:
    return (np.arange(n + 1) * size) // n


def apply_clahe(gray: np.ndarray, clip_limit: float = 2.0, tiles: int = 8) -> np.ndarray:
    """Contrast-limited adaptive equalization of a uint8 grayscale image."""
    if tiles < 1:
        raise ValueError("tile grid must be at least 1x1")
    if clip_limit < 1.0:
        raise ValueError("clip limit below 1.0 would invert the equalization")
    n = tiles
    clip = clip_limit
    img = np.asarray(gray)
    h, w = img.shape
    ny = min(n, h)
    nx = min(n, w)
    ye = _tile_edges(ny, h)
    xe = _tile_edges(nx, w)

    luts = np.empty((ny, nx, 256), dtype=np.uint8)
    for i in range(ny):
        for j in range(nx):
            tile = img[ye[i] : ye[i + 1], xe[j] : xe[j + 1]]
            hist = np.bincount(tile.ravel(), minlength=256)
            luts[i, j] = tile_lut(hist, clip)

    cy = (ye[:-1] + ye[1:] - 1) / 2.0
    cx = (xe[:-1] + xe[1:] - 1) / 2.0
    ty = np.interp(np.arange(h), cy, np.arange(ny, dtype=np.float64))
    tx = np.interp(np.arange(w), cx, np.arange(nx, dtype=np.float64))
    iy0 = np.minimum(ty.astype(np.int64), ny - 1)
    ix0 = np.minimum(tx.astype(np.int64), nx - 1)
    iy1 = np.minimum(iy0 + 1, ny - 1)
    ix1 = np.minimum(ix0 + 1, nx - 1)
    fy = (ty - iy0)[:, None]
    fx = (tx - ix0)[None, :]

    r0 = iy0[:, None]
    r1 = iy1[:, None]
    c0 = ix0[None, :]
    c1 = ix1[None, :]
    v00 = luts[r0, c0, img].astype(np.float64)
    v01 = luts[r0, c1, img].astype(np.float64)
    v10 = luts[r1, c0, img].astype(np.float64)
    v11 = luts[r1, c1, img].astype(np.float64)
    top = v00 * (1.0 - fx) + v01 * fx
    bot = v10 * (1.0 - fx) + v11 * fx
    out = top * (1.0 - fy) + bot * fy
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def erode_mask_border(mask: np.ndarray, px: int) -> np.ndarray:
    """Keep mask pixels farther than px from the background or the frame edge."""
    if px <= 0:
        return mask.copy()
    padded = np.pad(mask, 1)
    dist = distance_transform_edt(padded)
    return dist[1:-1, 1:-1] > px


def render_fingerprint(
    crop: FingerCrop, cfg: PipelineConfig, finger_id: int
) -> FingerprintImage:
    """Normalized fingerprint: enhanced grayscale under an eroded ROI at fixed width."""
    gray = to_grayscale(crop.image)
    enhanced = apply_clahe(
        gray, cfg.enhancement.clahe_clip, cfg.enhancement.clahe_tiles
    )
    roi = erode_mask_border(crop.mask, cfg.enhancement.border_px)
    if not roi.any():
        raise EmptyROI("mask vanished under border erosion")
    rows = np.nonzero(roi.any(axis=1))[0]
    cols = np.nonzero(roi.any(axis=0))[0]
    y0, y1 = int(rows[0]), int(rows[-1]) + 1
    x0, x1 = int(cols[0]), int(cols[-1]) + 1
    # cap at twice the width so the normalized output stays at most 2:1
    limit = 2 * (x1 - x0)
    if y1 - y0 > limit:
        y1 = y0 + limit
    sub = np.where(roi, enhanced, 0)[y0:y1, x0:x1]
    sub_roi = roi[y0:y1, x0:x1]
    roi_size = (y1 - y0, x1 - x0)
    roi_area = int(sub_roi.sum())

    width = cfg.enhancement.norm_width
    out_h = max(1, int(round(roi_size[0] * width / roi_size[1])))
    gray_out = resize_bilinear(sub, width, out_h)
    roi_out = resize_bilinear(sub_roi, width, out_h)
    return FingerprintImage(
        gray=gray_out,
        roi=roi_out,
        source_finger_id=finger_id,
        roi_size=roi_size,
        roi_area=roi_area,
    )
