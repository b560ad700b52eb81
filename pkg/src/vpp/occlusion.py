"""Sparse-hint occlusion classification on a warped disparity grid.

Every hint is forward-warped into the target view. A warped point is
considered occluded when some nearby warped point is sufficiently closer to
the camera, with "sufficiently" growing linearly with the spatial offset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .imgio import HintSet
from ._validation import check_hints


@dataclass(frozen=True)
class OcclusionParams:
    lam: float = 2.0
    gamma: float = 0.4375
    t: float = 1.0
    rx: int = 9
    ry: int = 7

    def __post_init__(self):
        for name in ("rx", "ry"):
            v = getattr(self, name)
            if int(v) != v or v < 1 or v % 2 == 0:
                raise ValueError(f"{name} must be an odd integer >= 1, got {v}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


@dataclass
class WarpGrid:
    """Disparities forward-warped into the target frame.

    ``origin`` holds the index (into the hint set) of the hint that won each
    cell and -1 on empty cells.
    """

    values: np.ndarray
    origin: np.ndarray

    @property
    def filled(self):
        return self.origin >= 0

    @property
    def shape(self):
        return self.values.shape


def warp_columns(hints: HintSet):
    """Target columns for each hint (round half to even) and the out-of-target flag."""
    x_prime = hints.x.astype(np.float64) - hints.d
    out = x_prime < 0
    cols = np.rint(x_prime).astype(np.int64)
    return cols, out


def build_warp_grid(hints: HintSet, width, height) -> WarpGrid:
    """Warp hints to ``(round(x - d), y)``; the largest disparity wins collisions.

    Equal disparities at one cell keep the hint with the smallest source
    column. Sets ``hints.out_of_target`` in place for hints that land left of
    the target image.
    """
    hints.check_bounds(width, height)
    values = np.zeros((height, width), dtype=np.float64)
    origin = np.full((height, width), -1, dtype=np.int64)
    cols, out = warp_columns(hints)
    hints.out_of_target[:] = out
    idx = np.flatnonzero(~out)
    if idx.size == 0:
        return WarpGrid(values, origin)
    # largest d first, then smallest source x: first hit per cell wins
    order = idx[np.lexsort((hints.x[idx], -hints.d[idx]))]
    cells = hints.y[order] * width + cols[order]
    _, first = np.unique(cells, return_index=True)
    winners = order[first]
    origin[hints.y[winners], cols[winners]] = winners
    values[hints.y[winners], cols[winners]] = hints.d[winners]
    return WarpGrid(values, origin)


def occluded_cells(grid: WarpGrid, params: OcclusionParams) -> np.ndarray:
    """Boolean grid of filled cells for which some neighbor satisfies the test.

    The center cell is not its own neighbor.
    """
    values, filled = grid.values, grid.filled
    h, w = values.shape
    hx, hy = params.rx // 2, params.ry // 2
    pad_v = np.pad(values, ((hy, hy), (hx, hx)))
    pad_f = np.pad(filled, ((hy, hy), (hx, hx)))
    result = np.zeros((h, w), dtype=bool)
    for dy in range(-hy, hy + 1):
        for dx in range(-hx, hx + 1):
            if dx == 0 and dy == 0:
                continue
            penalty = params.lam * (params.gamma * abs(dx) + (1.0 - params.gamma) * abs(dy))
            nb_v = pad_v[hy + dy:hy + dy + h, hx + dx:hx + dx + w]
            nb_f = pad_f[hy + dy:hy + dy + h, hx + dx:hx + dx + w]
            result |= nb_f & (nb_v - values - penalty > params.t)
    return result & filled


def classify_occlusions(hints: HintSet, grid: WarpGrid, params: OcclusionParams) -> HintSet:
    """Write occlusion flags back onto the hints that built ``grid``.

    Hints that lost a collision are flagged when the winning disparity
    exceeds theirs by more than ``t`` (the test at zero offset). Out-of-target
    hints are never flagged.
    """
    occ = occluded_cells(grid, params)
    flags = np.zeros(len(hints), dtype=bool)
    flags[grid.origin[occ]] = True
    cols, out = warp_columns(hints)
    inside = np.flatnonzero(~out)
    if inside.size:
        cell_d = grid.values[hints.y[inside], cols[inside]]
        won = grid.origin[hints.y[inside], cols[inside]] == inside
        flags[inside[~won & (cell_d - hints.d[inside] > params.t)]] = True
    result = hints.copy()
    result.occluded = flags
    result.out_of_target = out
    return result


class OcclusionDetector(BaseEstimator):
    """Flag hints whose match in the target view is hidden by a nearer point.

    Parameters
    ----------
    lam : float
        Slope of the distance penalty.
    gamma : float
        Weight of the horizontal offset in the penalty; ``1 - gamma`` weights
        the vertical offset.
    t : float
        Disparity margin in pixels.
    rx, ry : int
        Odd neighborhood width and height in the warped grid.
    """

    def __init__(self, lam=2.0, gamma=0.4375, t=1.0, rx=9, ry=7):
        self.lam = lam
        self.gamma = gamma
        self.t = t
        self.rx = rx
        self.ry = ry

    def _params(self):
        return OcclusionParams(self.lam, self.gamma, self.t, self.rx, self.ry)

    def fit(self, hints, image_shape):
        params = self._params()
        height, width = image_shape[:2]
        hints = check_hints(hints, image_shape).copy()
        self.warp_grid_ = build_warp_grid(hints, width, height)
        self.hints_ = classify_occlusions(hints, self.warp_grid_, params)
        self.occluded_ = self.hints_.occluded.copy()
        return self

    def fit_predict(self, hints, image_shape):
        return self.fit(hints, image_shape).occluded_

    def fit_transform(self, hints, image_shape):
        """Return a copy of ``hints`` with occlusion flags set."""
        return self.fit(hints, image_shape).hints_
