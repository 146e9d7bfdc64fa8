"""Hand segmentation: skin masks from Cr/Hue channels, components, plausibility.

The color frame is reduced to the Cr and Hue planes, each histogram-stretched
and thresholded with Otsu, the two masks ANDed, then a 3x3 open+close removes
speckle. A verdict stage rejects masks whose dominant components have an
implausible count, shape, size or border position before any geometry runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from .config import PipelineConfig
from .errors import EmptyHistogram, GrayInput
from .raster import CHANNEL_CR, CHANNEL_HUE, extract_channel, stretch_histogram

HUE_CENTER_SHIFT = 128  # moves the red/skin wrap-around to mid-histogram

_STRUCT_8 = np.ones((3, 3), dtype=bool)


class MaskReason(Enum):
    OK = "ok"
    TOO_MANY_COMPONENTS = "too_many_components"
    NO_COMPONENT = "no_component"
    BAD_SHAPE = "bad_shape"
    BAD_SIZE = "bad_size"
    BAD_POSITION = "bad_position"


@dataclass(frozen=True)
class Component:
    id: int
    area: int
    bbox: tuple[int, int, int, int]  # x0, y0, x1, y1 (exclusive end)
    centroid: tuple[float, float]  # (cx, cy)
    border_touch: frozenset


@dataclass(frozen=True)
class ComponentSet:
    labels: np.ndarray
    components: tuple

    @property
    def frame_area(self) -> int:
        return int(self.labels.size)


@dataclass(frozen=True)
class MaskVerdict:
    passed: bool
    reason: MaskReason


def otsu_threshold(hist: np.ndarray) -> int:
    """Threshold maximizing between-class variance, class A = bins <= t.

    Comparison is done in exact integer arithmetic so ties are broken by the
    smallest t deterministically:  maximize (S0*W1 - S1*W0)^2 / (W0*W1).
    """
    h = [int(v) for v in hist]
    if len(h) != 256:
        raise ValueError("histogram must have 256 bins")
    if any(v < 0 for v in h):
        raise ValueError("histogram counts must be >= 0")
    total = sum(h)
    if total == 0:
        raise EmptyHistogram("histogram has no samples")
    s_total = sum(i * v for i, v in enumerate(h))
    best_t = 0
    best_num = -1  # numerator (S0*W1 - S1*W0)^2
    best_den = 1
    w0 = 0
    s0 = 0
    for t in range(256):
        w0 += h[t]
        s0 += t * h[t]
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            num, den = 0, 1
        else:
            d = s0 * w1 - (s_total - s0) * w0
            num, den = d * d, w0 * w1
        # exact fraction comparison: num/den > best_num/best_den
        if num * best_den > best_num * den:
            best_num, best_den, best_t = num, den, t
    return best_t


def _channel_histogram(ch: np.ndarray) -> np.ndarray:
    return np.bincount(ch.ravel(), minlength=256)


def _cr_mask(cr: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    s = stretch_histogram(cr)
    if s.min() == s.max():
        # no contrast to split; fall back to the absolute skin prior
        v = int(cr.flat[0])
        on = cfg.segmentation.cr_skin_min <= v <= cfg.segmentation.cr_skin_max
        return np.full(cr.shape, on, dtype=bool)
    t = otsu_threshold(_channel_histogram(s))
    return s > t


def _hue_mask(hue: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    shifted = ((hue.astype(np.int16) + HUE_CENTER_SHIFT) % 256).astype(np.uint8)
    mn = int(shifted.min())
    mx = int(shifted.max())
    if mn == mx:
        d = abs(mn - HUE_CENTER_SHIFT)
        on = min(d, 256 - d) <= cfg.segmentation.hue_skin_halfwidth
        return np.full(hue.shape, on, dtype=bool)
    s = stretch_histogram(shifted)
    t = otsu_threshold(_channel_histogram(s))
    # the skin band is the Otsu class containing the (stretched) red center
    center = int(np.clip(round((HUE_CENTER_SHIFT - mn) * 255.0 / (mx - mn)), 0, 255))
    if center > t:
        return s > t
    return s <= t


def _erode3(m: np.ndarray) -> np.ndarray:
    # separable 3x3 min; out-of-frame counts as foreground
    p = np.pad(m, ((0, 0), (1, 1)), constant_values=True)
    row = p[:, :-2] & p[:, 1:-1] & p[:, 2:]
    p = np.pad(row, ((1, 1), (0, 0)), constant_values=True)
    return p[:-2] & p[1:-1] & p[2:]


def _dilate3(m: np.ndarray) -> np.ndarray:
    # separable 3x3 max; out-of-frame counts as background
    p = np.pad(m, ((0, 0), (1, 1)), constant_values=False)
    row = p[:, :-2] | p[:, 1:-1] | p[:, 2:]
    p = np.pad(row, ((1, 1), (0, 0)), constant_values=False)
    return p[:-2] | p[1:-1] | p[2:]


def segment_hand(img: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    """Binary skin mask from the AND of the Cr and Hue channel masks."""
    if img.ndim != 3:
        raise GrayInput("segmentation requires a color frame")
    cr = extract_channel(img, CHANNEL_CR)
    hue = extract_channel(img, CHANNEL_HUE)
    mask = _cr_mask(cr, cfg) & _hue_mask(hue, cfg)
    # open then close; border handling chosen so border contact survives
    return _erode3(_dilate3(_dilate3(_erode3(mask))))


def connected_components(mask: np.ndarray) -> ComponentSet:
    """8-connected labeling with ids assigned by area, then top-left bbox corner."""
    labels, count = ndimage.label(mask, structure=_STRUCT_8)
    if count == 0:
        return ComponentSet(labels=labels.astype(np.int32), components=())
    areas = np.bincount(labels.ravel())[1:]
    slices = ndimage.find_objects(labels)
    h, w = mask.shape
    flat = labels.ravel()
    idx = np.nonzero(flat)[0]
    vals = flat[idx]
    sums_y = np.bincount(vals, weights=idx // w, minlength=count + 1)
    sums_x = np.bincount(vals, weights=idx % w, minlength=count + 1)

    def touches(idx: int, sl) -> frozenset:
        sides = set()
        if sl[0].start == 0 and np.any(labels[0, sl[1]] == idx):
            sides.add("top")
        if sl[0].stop == h and np.any(labels[h - 1, sl[1]] == idx):
            sides.add("bottom")
        if sl[1].start == 0 and np.any(labels[sl[0], 0] == idx):
            sides.add("left")
        if sl[1].stop == w and np.any(labels[sl[0], w - 1] == idx):
            sides.add("right")
        return frozenset(sides)

    order = sorted(
        range(1, count + 1),
        key=lambda i: (-int(areas[i - 1]), slices[i - 1][0].start, slices[i - 1][1].start),
    )
    relabel = np.zeros(count + 1, dtype=np.int32)
    comps = []
    for new_id, old in enumerate(order, start=1):
        relabel[old] = new_id
        sl = slices[old - 1]
        area = int(areas[old - 1])
        comps.append(
            Component(
                id=new_id,
                area=area,
                bbox=(sl[1].start, sl[0].start, sl[1].stop, sl[0].stop),
                centroid=(float(sums_x[old] / area), float(sums_y[old] / area)),
                border_touch=touches(old, sl),
            )
        )
    return ComponentSet(labels=relabel[labels], components=tuple(comps))


def dominant_components(cs: ComponentSet, cfg: PipelineConfig) -> list:
    cut = cfg.segmentation.min_component_fraction * cs.frame_area
    return [c for c in cs.components if c.area >= cut]


def check_mask_plausibility(cs: ComponentSet, cfg: PipelineConfig) -> MaskVerdict:
    """Vet dominant components: count, per-component shape, total size, position."""
    s = cfg.segmentation
    dom = dominant_components(cs, cfg)
    if len(dom) > 4:
        return MaskVerdict(False, MaskReason.TOO_MANY_COMPONENTS)
    if not dom:
        return MaskVerdict(False, MaskReason.NO_COMPONENT)
    for c in dom:
        x0, y0, x1, y1 = c.bbox
        bw, bh = x1 - x0, y1 - y0
        aspect = bw / bh
        fill = c.area / (bw * bh)
        if not (s.aspect_min <= aspect <= s.aspect_max) or fill < s.fill_ratio_min:
            return MaskVerdict(False, MaskReason.BAD_SHAPE)
    combined = sum(c.area for c in dom)
    if not (s.min_fill * cs.frame_area <= combined <= s.max_fill * cs.frame_area):
        return MaskVerdict(False, MaskReason.BAD_SIZE)
    common = frozenset.intersection(*[c.border_touch for c in dom])
    if not common:
        return MaskVerdict(False, MaskReason.BAD_POSITION)
    return MaskVerdict(True, MaskReason.OK)
