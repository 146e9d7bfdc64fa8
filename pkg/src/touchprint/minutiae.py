"""Minutiae extraction and the binary template format.

The chain is classical: block orientation field from Sobel tensor sums,
a short mean filter along the local ridge direction, tile-mean adaptive
binarization, Zhang-Suen thinning, then crossing-number detection on the
skeleton. Templates store pixel positions and a 16-bit quantized angle.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace

import numpy as np
from scipy.ndimage import sobel

from .config import PipelineConfig
from .enhancement import FingerprintImage, erode_mask_border
from .errors import NotThin, ParseError

MAGIC = b"MTFT"
VERSION = 1
ANGLE_TICK = 2.0 * math.pi / 65536.0
VALID_FINGER_IDS = frozenset(range(1, 11))

SMOOTH_TAPS = range(-3, 4)
SMOOTH_BINS = 16
WALK_STEPS = 5


@dataclass(frozen=True)
class Minutia:
    x: int
    y: int
    angle: float  # radians in [0, 2*pi), quantized to ANGLE_TICK


@dataclass(frozen=True)
class MinutiaTemplate:
    finger_id: int
    width: int
    height: int
    minutiae: tuple[Minutia, ...]


@dataclass(frozen=True)
class OrientationField:
    angles: np.ndarray  # radians in [0, pi), one per block
    coherence: np.ndarray
    block_size: int


def orientation_field(fp: FingerprintImage, cfg: PipelineConfig) -> OrientationField:
    """Ridge direction per block from summed gradient tensor components.

    The grid covers the whole image: ceil(dim / block_size) blocks per
    axis, edge blocks possibly partial.
    """
    bs = cfg.minutiae.block_size
    g = np.asarray(fp.gray, dtype=np.float64)
    gx = sobel(g, axis=1, mode="reflect")
    gy = sobel(g, axis=0, mode="reflect")
    h, w = g.shape
    row_starts = np.arange(0, h, bs)
    col_starts = np.arange(0, w, bs)

    def block_sum(a: np.ndarray) -> np.ndarray:
        part = np.add.reduceat(a, row_starts, axis=0)
        return np.add.reduceat(part, col_starts, axis=1)

    vx = block_sum(2.0 * gx * gy)
    vy = block_sum(gx * gx - gy * gy)
    power = block_sum(gx * gx + gy * gy)
    theta = 0.5 * np.arctan2(vx, vy) + np.pi / 2.0
    theta = np.mod(theta, np.pi)
    coherence = np.hypot(vx, vy) / (power + 1e-12)
    return OrientationField(angles=theta, coherence=coherence, block_size=bs)


def _field_angle_per_pixel(field: OrientationField, shape: tuple[int, int]) -> np.ndarray:
    h, w = shape
    ny, nx = field.angles.shape
    by = np.minimum(np.arange(h) // field.block_size, ny - 1)
    bx = np.minimum(np.arange(w) // field.block_size, nx - 1)
    return field.angles[np.ix_(by, bx)]


def _smooth_offsets() -> tuple[np.ndarray, np.ndarray]:
    """Per-bin tap offsets; bins 8..15 are exact 90-degree turns of 0..7."""
    ks = np.array(list(SMOOTH_TAPS), dtype=np.float64)
    dx = np.zeros((SMOOTH_BINS, len(ks)), dtype=np.int64)
    dy = np.zeros((SMOOTH_BINS, len(ks)), dtype=np.int64)
    for b in range(SMOOTH_BINS // 2):
        phi = (b + 0.5) * np.pi / SMOOTH_BINS
        dx[b] = np.rint(ks * np.cos(phi)).astype(np.int64)
        dy[b] = np.rint(ks * np.sin(phi)).astype(np.int64)
        dx[b + 8] = -dy[b]
        dy[b + 8] = dx[b]
    return dx, dy


def oriented_smooth(
    gray: np.ndarray, field: OrientationField, cfg: PipelineConfig
) -> np.ndarray:
    """Mean filter along the local ridge direction, 7 taps, 16 direction bins."""
    img = np.asarray(gray, dtype=np.float64)
    h, w = img.shape
    angles = _field_angle_per_pixel(field, (h, w))
    bins = (np.floor(angles * SMOOTH_BINS / np.pi).astype(np.int64)) % SMOOTH_BINS
    dx, dy = _smooth_offsets()
    yy, xx = np.indices((h, w))
    out = np.empty_like(img)
    for b in np.unique(bins):
        sel = bins == b
        ys = yy[sel]
        xs = xx[sel]
        acc = np.zeros(ys.shape, dtype=np.float64)
        for k in range(dx.shape[1]):
            py = np.clip(ys + dy[b, k], 0, h - 1)
            px = np.clip(xs + dx[b, k], 0, w - 1)
            acc += img[py, px]
        out[sel] = acc / dx.shape[1]
    return out


def adaptive_binarize(
    img: np.ndarray, roi: np.ndarray, cfg: PipelineConfig
) -> np.ndarray:
    """Pixel vs its tile's mean; exact ties go to foreground iff >= 128."""
    a = np.asarray(img, dtype=np.float64)
    h, w = a.shape
    bs = cfg.minutiae.block_size
    means = np.empty_like(a)
    for y0 in range(0, h, bs):
        for x0 in range(0, w, bs):
            tile = a[y0 : y0 + bs, x0 : x0 + bs]
            means[y0 : y0 + bs, x0 : x0 + bs] = tile.mean()
    diff = a - means
    fg = (diff > 1e-6) | ((np.abs(diff) <= 1e-6) & (a >= 128.0))
    return fg & roi


def _neighbors(padded: np.ndarray) -> list[np.ndarray]:
    """P2..P9: N, NE, E, SE, S, SW, W, NW of every pixel."""
    return [
        padded[:-2, 1:-1],
        padded[:-2, 2:],
        padded[1:-1, 2:],
        padded[2:, 2:],
        padded[2:, 1:-1],
        padded[2:, :-2],
        padded[1:-1, :-2],
        padded[:-2, :-2],
    ]


def crossing_number(skeleton: np.ndarray) -> np.ndarray:
    """Half the sign changes around each pixel's 8-neighborhood."""
    n = _neighbors(np.pad(skeleton, 1))
    total = np.zeros(skeleton.shape, dtype=np.uint8)
    for i in range(8):
        total += (n[i] ^ n[(i + 1) % 8]).astype(np.uint8)
    return total // 2


def _transitions(n: list[np.ndarray]) -> np.ndarray:
    t = np.zeros(n[0].shape, dtype=np.uint8)
    for i in range(8):
        t += (~n[i] & n[(i + 1) % 8]).astype(np.uint8)
    return t


def zhang_suen(fg: np.ndarray) -> np.ndarray:
    """Iterative two-subpass thinning to a (mostly) unit-width skeleton."""
    img = fg.astype(bool).copy()
    while True:
        changed = False
        for step in (0, 1):
            n = _neighbors(np.pad(img, 1))
            b = np.zeros(img.shape, dtype=np.uint8)
            for v in n:
                b += v.astype(np.uint8)
            a = _transitions(n)
            p2, p4, p6, p8 = n[0], n[2], n[4], n[6]
            if step == 0:
                cond = ~(p2 & p4 & p6) & ~(p4 & p6 & p8)
            else:
                cond = ~(p2 & p4 & p8) & ~(p2 & p6 & p8)
            kill = img & (b >= 2) & (b <= 6) & (a == 1) & cond
            if kill.any():
                img &= ~kill
                changed = True
        if not changed:
            return img


def _square_map(img: np.ndarray) -> np.ndarray:
    return img[:-1, :-1] & img[:-1, 1:] & img[1:, :-1] & img[1:, 1:]


def _pixel_transitions(img: np.ndarray, y: int, x: int) -> int:
    h, w = img.shape
    offs = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]
    vals = []
    for dy, dx in offs:
        py, px = y + dy, x + dx
        vals.append(bool(img[py, px]) if 0 <= py < h and 0 <= px < w else False)
    return sum((not vals[i]) and vals[(i + 1) % 8] for i in range(8))


def clean_staircases(skeleton: np.ndarray) -> np.ndarray:
    """Break leftover 2x2 foreground squares, one removable pixel at a time."""
    img = skeleton.copy()
    while True:
        squares = _square_map(img)
        ys, xs = np.nonzero(squares)
        if len(ys) == 0:
            return img
        y, x = int(ys[0]), int(xs[0])
        cells = [(y, x), (y, x + 1), (y + 1, x), (y + 1, x + 1)]
        removable = [c for c in cells if _pixel_transitions(img, *c) == 1]
        target = removable[0] if removable else cells[0]
        img[target] = False


def thin_skeleton(fg: np.ndarray) -> np.ndarray:
    return clean_staircases(zhang_suen(fg))


def binarize_and_thin(
    fp: FingerprintImage, field: OrientationField, cfg: PipelineConfig
) -> np.ndarray:
    """Oriented smoothing, adaptive tile-mean threshold, then thinning."""
    smoothed = oriented_smooth(fp.gray, field, cfg)
    fg = adaptive_binarize(smoothed, fp.roi, cfg)
    return thin_skeleton(fg)


_WALK_OFFS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _walk_direction(skel: np.ndarray, y: int, x: int) -> tuple[float, float]:
    """Short traced direction away from a ridge ending."""
    h, w = skel.shape
    visited = {(y, x)}
    cy, cx = y, x
    for _ in range(WALK_STEPS):
        nxt = [
            (cy + dy, cx + dx)
            for dy, dx in _WALK_OFFS
            if 0 <= cy + dy < h
            and 0 <= cx + dx < w
            and skel[cy + dy, cx + dx]
            and (cy + dy, cx + dx) not in visited
        ]
        if len(nxt) != 1:
            break
        cy, cx = nxt[0]
        visited.add((cy, cx))
    return float(cx - x), float(cy - y)


def _branch_direction(skel: np.ndarray, y: int, x: int) -> tuple[float, float]:
    h, w = skel.shape
    vx = vy = 0.0
    for dy, dx in _WALK_OFFS:
        py, px = y + dy, x + dx
        if 0 <= py < h and 0 <= px < w and skel[py, px]:
            n = math.hypot(dx, dy)
            vx += dx / n
            vy += dy / n
    return vx, vy


def _disambiguate(theta: float, vx: float, vy: float) -> float:
    """Lift a [0, pi) ridge orientation to [0, 2*pi) using a traced hint."""
    if vx == 0.0 and vy == 0.0:
        return theta % (2.0 * math.pi)
    hint = math.atan2(vy, vx)
    d = (theta - hint) % (2.0 * math.pi)
    if d > math.pi / 2.0 and d < 3.0 * math.pi / 2.0:
        theta += math.pi
    return theta % (2.0 * math.pi)


def extract_minutiae(skel: np.ndarray, field: OrientationField) -> list[Minutia]:
    """Crossing-number endings and bifurcations with lifted angles."""
    if _square_map(skel).any():
        raise NotThin("skeleton contains a 2x2 foreground square")
    cn = crossing_number(skel)
    interesting = skel & ((cn == 1) | (cn == 3))
    ys, xs = np.nonzero(interesting)
    ny, nx = field.angles.shape
    out = []
    for y, x in zip(ys.tolist(), xs.tolist()):
        by = min(y // field.block_size, ny - 1)
        bx = min(x // field.block_size, nx - 1)
        theta = float(field.angles[by, bx])
        if cn[y, x] == 1:
            vx, vy = _walk_direction(skel, y, x)
        else:
            vx, vy = _branch_direction(skel, y, x)
        out.append(Minutia(x=x, y=y, angle=_disambiguate(theta, vx, vy)))
    return out


def quantize_angle(angle: float) -> float:
    tick = int(round(angle / ANGLE_TICK)) % 65536
    return tick * ANGLE_TICK


def prune_minutiae(
    minutiae: list[Minutia], roi: np.ndarray, cfg: PipelineConfig
) -> list[Minutia]:
    """Drop border artifacts, enforce spacing, cap the count.

    Candidates are taken nearest to the ROI centroid first, so merges keep
    the more central of a close pair and the cap keeps the most central
    minutiae overall.
    """
    interior = erode_mask_border(roi, cfg.minutiae.border_px)
    kept = [m for m in minutiae if interior[m.y, m.x]]
    if not kept:
        return []
    ys, xs = np.nonzero(roi)
    centroid = (float(xs.mean()), float(ys.mean()))
    pts = np.array([[m.x, m.y] for m in kept], dtype=np.float64)
    dist = np.hypot(pts[:, 0] - centroid[0], pts[:, 1] - centroid[1])
    order = sorted(range(len(kept)), key=lambda i: (dist[i], kept[i].y, kept[i].x))
    accepted: list[int] = []
    for i in order:
        p = pts[i]
        ok = True
        for j in accepted:
            q = pts[j]
            if math.hypot(p[0] - q[0], p[1] - q[1]) < cfg.minutiae.merge_px:
                ok = False
                break
        if ok:
            accepted.append(i)
            if len(accepted) >= cfg.minutiae.max_count:
                break
    result = [kept[i] for i in accepted]
    result.sort(key=lambda m: (m.y, m.x))
    return result


def build_template(fp: FingerprintImage, cfg: PipelineConfig) -> MinutiaTemplate:
    """Full extraction chain from a rendered fingerprint to a template."""
    field = orientation_field(fp, cfg)
    skel = binarize_and_thin(fp, field, cfg)
    mins = prune_minutiae(extract_minutiae(skel, field), fp.roi, cfg)
    mins = [replace(m, angle=quantize_angle(m.angle)) for m in mins]
    h, w = fp.gray.shape
    return MinutiaTemplate(
        finger_id=fp.source_finger_id, width=w, height=h, minutiae=tuple(mins)
    )


def encode_template(t: MinutiaTemplate) -> bytes:
    if t.finger_id not in VALID_FINGER_IDS:
        raise ParseError(f"finger id {t.finger_id} outside 1..10")
    if not (0 < t.width <= 65535 and 0 < t.height <= 65535):
        raise ParseError("template dimensions must fit in uint16")
    parts = [
        struct.pack(
            "<4sBBHHH", MAGIC, VERSION, t.finger_id, t.width, t.height, len(t.minutiae)
        )
    ]
    for m in t.minutiae:
        if not (0 <= m.x < t.width and 0 <= m.y < t.height):
            raise ParseError("minutia position outside the template frame")
        tick = int(round(m.angle / ANGLE_TICK)) % 65536
        parts.append(struct.pack("<HHH", m.x, m.y, tick))
    return b"".join(parts)


def decode_template(data: bytes) -> MinutiaTemplate:
    if len(data) < 12:
        raise ParseError("template shorter than its fixed header")
    magic, version, finger_id, width, height, count = struct.unpack(
        "<4sBBHHH", data[:12]
    )
    if magic != MAGIC:
        raise ParseError("bad magic")
    if version != VERSION:
        raise ParseError(f"unsupported version {version}")
    if finger_id not in VALID_FINGER_IDS:
        raise ParseError(f"finger id {finger_id} outside 1..10")
    if len(data) != 12 + 6 * count:
        raise ParseError(
            f"expected {12 + 6 * count} bytes for {count} minutiae, got {len(data)}"
        )
    mins = []
    for i in range(count):
        x, y, tick = struct.unpack_from("<HHH", data, 12 + 6 * i)
        mins.append(Minutia(x=x, y=y, angle=tick * ANGLE_TICK))
    return MinutiaTemplate(
        finger_id=finger_id, width=width, height=height, minutiae=tuple(mins)
    )
