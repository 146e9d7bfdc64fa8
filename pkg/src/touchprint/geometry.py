"""Rotation correction, finger separation, fingertip cropping, finger IDs.

Coarse rotation puts the hand's entry border at the bottom (quadrant steps
only); finger separation trims palm rows off the bottom until the expected
number of dominant components appears; fine rotation uprights each finger
using its minimum-area enclosing rectangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from .config import PipelineConfig
from .errors import DiscardFrame, EmptyMask, SeparationFailed, WrongFingerCount
from .segmentation import connected_components, dominant_components


class HandSide(Enum):
    LEFT = "left"
    RIGHT = "right"


# ISO/IEC 19794-4 finger positions, palm toward the camera, left-to-right crops
FINGER_IDS_RIGHT = (2, 3, 4, 5)
FINGER_IDS_LEFT = (10, 9, 8, 7)


@dataclass(frozen=True)
class FingerCrop:
    image: np.ndarray
    mask: np.ndarray
    order_index: int


def coarse_rotation_angle(mask: np.ndarray) -> int:
    """CCW rotation in {0, 90, 180, 270} that maps the busiest border to the bottom.

    Ties break in the order bottom, left, top, right.
    """
    if not mask.any():
        raise EmptyMask("coarse rotation needs a nonempty mask")
    counts = (
        int(mask[-1, :].sum()),  # bottom -> already upright
        int(mask[:, 0].sum()),  # left   -> CCW 90 brings it down
        int(mask[0, :].sum()),  # top    -> 180
        int(mask[:, -1].sum()),  # right  -> 270
    )
    best = max(range(4), key=lambda i: (counts[i], -i))
    return best * 90


_STRUCT_8 = np.ones((3, 3), dtype=bool)


def _dominant_count(mask: np.ndarray, cfg: PipelineConfig) -> int:
    # label-and-count only; the full component set is built on the final pass
    labels, count = ndimage.label(mask, structure=_STRUCT_8)
    if count == 0:
        return 0
    areas = np.bincount(labels.ravel(), minlength=count + 1)[1:]
    cut = cfg.segmentation.min_component_fraction * mask.size
    return int((areas >= cut).sum())


def separate_fingers(
    img: np.ndarray, mask: np.ndarray, expected: int, cfg: PipelineConfig
) -> list[FingerCrop]:
    """Trim rows off the bottom until exactly `expected` dominant components remain.

    Returns per-component bbox crops ordered left-to-right by centroid x.
    Raises DiscardFrame if more than `expected` dominant components ever
    appear, SeparationFailed once the trim budget is exhausted.
    """
    height = mask.shape[0]
    step = max(1, int(round(cfg.geometry.trim_step * height)))
    budget = int(math.floor(cfg.geometry.max_trim * height))
    trimmed = 0
    while True:
        cur_img = img[: height - trimmed]
        cur_mask = mask[: height - trimmed]
        n_dom = _dominant_count(cur_mask, cfg)
        if n_dom > expected:
            raise DiscardFrame(f"{n_dom} dominant components, expected {expected}")
        if n_dom == expected:
            cs = connected_components(cur_mask)
            dom = dominant_components(cs, cfg)
            ordered = sorted(dom, key=lambda c: c.centroid[0])
            crops = []
            for idx, comp in enumerate(ordered):
                x0, y0, x1, y1 = comp.bbox
                crops.append(
                    FingerCrop(
                        image=np.ascontiguousarray(cur_img[y0:y1, x0:x1]),
                        mask=cs.labels[y0:y1, x0:x1] == comp.id,
                        order_index=idx,
                    )
                )
            return crops
        trimmed += step
        if trimmed > budget:
            raise SeparationFailed(
                f"trim budget {budget}px exhausted before {expected} fingers appeared"
            )


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull, robust to collinear input; points are (x, y) floats."""
    pts = np.unique(points, axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def _boundary_points(mask: np.ndarray) -> np.ndarray:
    """Foreground pixels with a 4-neighbor background (or border) pixel."""
    padded = np.pad(mask, 1)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    edge = mask & ~interior
    ys, xs = np.nonzero(edge)
    return np.column_stack([xs, ys]).astype(np.float64)


def min_area_rect_direction(points: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Direction of one side of the min-area enclosing rectangle plus its extents.

    Returns (unit direction, extent along direction, extent along normal).
    """
    hull = _convex_hull(points)
    if len(hull) == 1:
        return np.array([0.0, 1.0]), 0.0, 0.0
    if len(hull) == 2:
        d = hull[1] - hull[0]
        n = float(np.hypot(*d))
        return d / n, n, 0.0
    edges = np.roll(hull, -1, axis=0) - hull
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    keep = lengths > 1e-12
    dirs = edges[keep] / lengths[keep, None]
    best = None
    for d in dirs:
        n = np.array([-d[1], d[0]])
        proj_d = hull @ d
        proj_n = hull @ n
        ext_d = float(proj_d.max() - proj_d.min())
        ext_n = float(proj_n.max() - proj_n.min())
        area = ext_d * ext_n
        if best is None or area < best[0] - 1e-12:
            best = (area, d, ext_d, ext_n)
    _, d, ext_d, ext_n = best
    return d, ext_d, ext_n


def fine_rotation_angle(finger_mask: np.ndarray) -> float:
    """CCW angle in (-90, 90] that makes the component's long axis vertical.

    Exact square ties return 0.
    """
    if not finger_mask.any():
        raise EmptyMask("fine rotation needs a nonempty mask")
    pts = _boundary_points(finger_mask)
    d, ext_d, ext_n = min_area_rect_direction(pts)
    if abs(ext_d - ext_n) < 1e-9:
        return 0.0
    if ext_d >= ext_n:
        long_dir = d
    else:
        long_dir = np.array([-d[1], d[0]])
    angle = math.degrees(math.atan2(-long_dir[0], long_dir[1]))
    while angle <= -90.0:
        angle += 180.0
    while angle > 90.0:
        angle -= 180.0
    return angle


def crop_fingertip(finger: FingerCrop) -> FingerCrop:
    """Cap the crop height at twice its width, keeping the top rows."""
    h, w = finger.mask.shape
    limit = 2 * w
    if h <= limit:
        return finger
    return FingerCrop(
        image=finger.image[:limit],
        mask=finger.mask[:limit],
        order_index=finger.order_index,
    )


def assign_finger_ids(crops: list[FingerCrop], hand: HandSide) -> list[int]:
    """ISO finger positions for 4 left-to-right crops, palm toward the camera."""
    if len(crops) != 4:
        raise WrongFingerCount(f"expected 4 crops, got {len(crops)}")
    ids = FINGER_IDS_RIGHT if hand is HandSide.RIGHT else FINGER_IDS_LEFT
    return list(ids)
