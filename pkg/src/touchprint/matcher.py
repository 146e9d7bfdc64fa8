"""Template comparison and multi-finger score fusion.

Alignment roots come from the most similar descriptor pairs (3 nearest
neighbors: distance, relative azimuth, relative angle). Each root fixes a
rigid transform; matings are counted greedily one-to-one in a global,
deterministic pair order and scored as 2m / (|A| + |B|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import PipelineConfig
from .errors import ConfigError, EmptyScores, EmptyTemplate
from .minutiae import MinutiaTemplate, encode_template

NEIGHBOR_COUNT = 3
SENTINEL_DIST = 1e4
ANGLE_WEIGHT = 8.0
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MatchScore:
    value: float
    mated_count: int


def _circdiff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = np.mod(a - b, TWO_PI)
    return np.pi - np.abs(d - np.pi)


def _unpack(t: MinutiaTemplate) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xs = np.array([m.x for m in t.minutiae], dtype=np.float64)
    ys = np.array([m.y for m in t.minutiae], dtype=np.float64)
    angles = np.array([m.angle for m in t.minutiae], dtype=np.float64)
    return xs, ys, angles


def _descriptors(
    xs: np.ndarray, ys: np.ndarray, angles: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = len(xs)
    dd = np.full((n, NEIGHBOR_COUNT), SENTINEL_DIST)
    az = np.zeros((n, NEIGHBOR_COUNT))
    ra = np.zeros((n, NEIGHBOR_COUNT))
    take = min(NEIGHBOR_COUNT, n - 1)
    if take <= 0:
        return dd, az, ra
    dx = xs[:, None] - xs[None, :]
    dy = ys[:, None] - ys[None, :]
    d = np.hypot(dx, dy)
    np.fill_diagonal(d, np.inf)
    idx = np.argsort(d, axis=1, kind="stable")[:, :take]
    rows = np.arange(n)[:, None]
    dd[:, :take] = d[rows, idx]
    raw_az = np.arctan2(ys[idx] - ys[:, None], xs[idx] - xs[:, None])
    az[:, :take] = np.mod(raw_az - angles[:, None], TWO_PI)
    ra[:, :take] = np.mod(angles[idx] - angles[:, None], TWO_PI)
    return dd, az, ra


def _pair_costs(ta, tb) -> np.ndarray:
    dd_a, az_a, ra_a = _descriptors(*ta)
    dd_b, az_b, ra_b = _descriptors(*tb)
    cost = np.abs(dd_a[:, None, :] - dd_b[None, :, :]).sum(axis=2)
    cost += ANGLE_WEIGHT * _circdiff(az_a[:, None, :], az_b[None, :, :]).sum(axis=2)
    cost += ANGLE_WEIGHT * _circdiff(ra_a[:, None, :], ra_b[None, :, :]).sum(axis=2)
    return cost


def compare_templates(
    a: MinutiaTemplate, b: MinutiaTemplate, cfg: PipelineConfig
) -> MatchScore:
    """Best alignment score in [0, 1]; symmetric in its arguments."""
    if not a.minutiae or not b.minutiae:
        raise EmptyTemplate("cannot compare a template with no minutiae")
    if encode_template(b) < encode_template(a):
        a, b = b, a
    xa, ya, aa = _unpack(a)
    xb, yb, ab = _unpack(b)
    na, nb = len(xa), len(xb)

    cost = _pair_costs((xa, ya, aa), (xb, yb, ab))
    ya_f = np.repeat(ya, nb)
    xa_f = np.repeat(xa, nb)
    yb_f = np.tile(yb, na)
    xb_f = np.tile(xb, na)
    order = np.lexsort((xb_f, yb_f, xa_f, ya_f, cost.ravel()))
    roots = order[: min(cfg.matcher.root_limit, len(order))]

    tol2 = cfg.matcher.dist_tol**2
    best = MatchScore(value=0.0, mated_count=0)
    for flat in roots:
        i = int(flat) // nb
        j = int(flat) % nb
        delta = ab[j] - aa[i]
        c, s = math.cos(delta), math.sin(delta)
        ox = xa - xa[i]
        oy = ya - ya[i]
        px = c * ox - s * oy + xb[j]
        py = s * ox + c * oy + yb[j]
        angs = np.mod(aa + delta, TWO_PI)
        d2 = (px[:, None] - xb[None, :]) ** 2 + (py[:, None] - yb[None, :]) ** 2
        mask = (d2 <= tol2) & (
            _circdiff(angs[:, None], ab[None, :]) <= cfg.matcher.angle_tol
        )
        cand = order[mask.ravel()[order]]
        used_a = np.zeros(na, dtype=bool)
        used_b = np.zeros(nb, dtype=bool)
        mated = 0
        for f in cand:
            ci = int(f) // nb
            cj = int(f) % nb
            if used_a[ci] or used_b[cj]:
                continue
            used_a[ci] = True
            used_b[cj] = True
            mated += 1
        score = 2.0 * mated / (na + nb)
        if score > best.value:
            best = MatchScore(value=score, mated_count=mated)
            if best.value >= 1.0:
                break
    return best


def fuse_scores(scores: Sequence[float], rule: str = "mean") -> float:
    """Combine per-finger scores into one hand-level score."""
    vals = [float(s) for s in scores]
    if not vals:
        raise EmptyScores("no scores to fuse")
    if rule in ("mean", "sum-normalized"):
        return float(np.mean(vals))
    if rule == "max":
        return float(np.max(vals))
    raise ConfigError(f"unknown fusion rule {rule!r}")
