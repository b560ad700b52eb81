"""Census / semi-global matching stereo with adaptive P2 and post-filtering.

The pipeline is: census cost volume, optional hint guidance of the raw
costs, path aggregation, winner-takes-all with parabolic sub-pixel
refinement, left-right check, speckle removal, background hole filling.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numba
import numpy as np
from sklearn.base import BaseEstimator

from .imgio import INVALID, HintSet
from ._validation import check_hints, check_image_pair, to_gray

_DIRECTIONS_4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
_DIRECTIONS_8 = _DIRECTIONS_4 + ((1, 1), (-1, 1), (1, -1), (-1, -1))


@dataclass
class SgmParams:
    max_disparity: int = 192
    census_window: int = 5
    p1: int = 11
    p2_min: int = 17
    p2_alpha: float = 0.5
    p2_gamma: int = 35
    paths: int = 8
    subpixel: bool = True
    lr_threshold: float = 1.0
    speckle_max_diff: float = 1.0
    speckle_min_region: int = 200

    def __post_init__(self):
        if self.paths not in (4, 8):
            raise ValueError(f"paths must be 4 or 8, got {self.paths}")
        if not self.p1 < self.p2_min:
            raise ValueError("p1 must be smaller than p2_min")
        if self.census_window < 3 or self.census_window % 2 == 0:
            raise ValueError("census_window must be odd and >= 3")
        if self.census_window**2 - 1 > 64:
            raise ValueError("census windows above 8x8 bits are not supported")
        if self.max_disparity < 1:
            raise ValueError("max_disparity must be >= 1")


@dataclass
class CostVolume:
    """Matching costs laid out as ``cost[y, x, d]``."""

    cost: np.ndarray

    @property
    def height(self):
        return self.cost.shape[0]

    @property
    def width(self):
        return self.cost.shape[1]

    @property
    def dmax(self):
        return self.cost.shape[2]


def _thread_cap():
    cap = os.environ.get("VPP_THREADS")
    if cap:
        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))


# ---------------------------------------------------------------- census


@numba.njit(cache=True)
def _census(gray, window):
    h, w = gray.shape
    r = window // 2
    out = np.zeros((h, w), dtype=np.uint64)
    for y in range(h):
        for x in range(w):
            center = gray[y, x]
            code = np.uint64(0)
            for dy in range(-r, r + 1):
                yy = min(max(y + dy, 0), h - 1)
                for dx in range(-r, r + 1):
                    if dx == 0 and dy == 0:
                        continue
                    xx = min(max(x + dx, 0), w - 1)
                    code = code << np.uint64(1)
                    if gray[yy, xx] < center:
                        code = code | np.uint64(1)
            out[y, x] = code
    return out


@numba.njit(cache=True)
def _popcount(v):
    c = 0
    while v:
        v &= v - np.uint64(1)
        c += 1
    return c


@numba.njit(parallel=True, cache=True)
def _hamming_volume(cl, cr, dmax, max_cost):
    h, w = cl.shape
    cost = np.empty((h, w, dmax), dtype=np.uint16)
    for y in numba.prange(h):
        for x in range(w):
            for d in range(dmax):
                if x - d < 0:
                    cost[y, x, d] = max_cost
                else:
                    cost[y, x, d] = _popcount(cl[y, x] ^ cr[y, x - d])
    return cost


def census_transform(image, window=5):
    """Per-pixel census bit strings (neighbor darker than center sets a bit)."""
    return _census(to_gray(image), int(window))


def census_cost(img_left, img_right, dmax=192, window=5) -> CostVolume:
    """Hamming distance between left census at x and right census at x - d."""
    img_left, img_right = check_image_pair(img_left, img_right)
    _thread_cap()
    cl = census_transform(img_left, window)
    cr = census_transform(img_right, window)
    return CostVolume(_hamming_volume(cl, cr, int(dmax), window * window - 1))


# ---------------------------------------------------------------- aggregation


def adaptive_p2(delta_intensity, p2_min=17, p2_alpha=0.5, p2_gamma=35):
    """P2 shrinking linearly with the intensity step, clamped below at ``p2_min``."""
    return np.maximum(p2_min, p2_gamma - p2_alpha * np.abs(delta_intensity))


@numba.njit(cache=True)
def _aggregate_path(cost, gray, total, dx, dy, p1, p2_min, p2_alpha, p2_gamma):
    h, w, nd = cost.shape
    prev = np.zeros((w, nd), dtype=np.int32)
    cur = np.zeros((w, nd), dtype=np.int32)
    prev_min = np.zeros(w, dtype=np.int32)
    cur_min = np.zeros(w, dtype=np.int32)
    y0, y1, ys = (0, h, 1) if dy >= 0 else (h - 1, -1, -1)
    x0, x1, xs = (0, w, 1) if dx >= 0 else (w - 1, -1, -1)
    for y in range(y0, y1, ys):
        for x in range(x0, x1, xs):
            px = x - dx
            py = y - dy
            if px < 0 or px >= w or py < 0 or py >= h:
                m = np.int32(1 << 30)
                for d in range(nd):
                    c = np.int32(cost[y, x, d])
                    cur[x, d] = c
                    if c < m:
                        m = c
                cur_min[x] = m
                continue
            if dy == 0:
                lp = cur[px]
                lmin = cur_min[px]
            else:
                lp = prev[px]
                lmin = prev_min[px]
            p2 = p2_gamma - p2_alpha * abs(gray[y, x] - gray[py, px])
            if p2 < p2_min:
                p2 = p2_min
            p2i = np.int32(np.floor(p2 + 0.5))
            m = np.int32(1 << 30)
            for d in range(nd):
                best = lp[d]
                if d > 0 and lp[d - 1] + p1 < best:
                    best = lp[d - 1] + p1
                if d < nd - 1 and lp[d + 1] + p1 < best:
                    best = lp[d + 1] + p1
                if lmin + p2i < best:
                    best = lmin + p2i
                v = np.int32(cost[y, x, d]) + best - lmin
                cur[x, d] = v
                if v < m:
                    m = v
            cur_min[x] = m
        for x in range(w):
            for d in range(nd):
                total[y, x, d] += cur[x, d]
        prev, cur = cur, prev
        prev_min, cur_min = cur_min, prev_min


def sgm_aggregate(vol: CostVolume, img_left, params: SgmParams) -> CostVolume:
    """Sum of the SGM path recurrences over 4 or 8 directions."""
    gray = to_gray(np.asarray(img_left)).astype(np.float64)
    cost = vol.cost
    if gray.shape != cost.shape[:2]:
        raise ValueError("image and cost volume sizes differ")
    bound = params.paths * (int(cost.max(initial=0)) + max(params.p2_gamma, params.p2_min) + 1)
    total = np.zeros(cost.shape, dtype=np.uint16 if bound < 65535 else np.uint32)
    directions = _DIRECTIONS_8 if params.paths == 8 else _DIRECTIONS_4
    for dx, dy in directions:
        _aggregate_path(cost, gray, total, dx, dy, np.int32(params.p1),
                        float(params.p2_min), float(params.p2_alpha), float(params.p2_gamma))
    return CostVolume(total)


# ---------------------------------------------------------------- disparity selection


@numba.njit(parallel=True, cache=True)
def _wta(cost, subpixel):
    h, w, nd = cost.shape
    out = np.empty((h, w), dtype=np.float32)
    for y in numba.prange(h):
        for x in range(w):
            best = 0
            for d in range(1, nd):
                if cost[y, x, d] < cost[y, x, best]:
                    best = d
            disp = np.float64(best)
            if subpixel and 0 < best < nd - 1:
                cm = np.float64(cost[y, x, best - 1])
                c0 = np.float64(cost[y, x, best])
                cp = np.float64(cost[y, x, best + 1])
                denom = 2.0 * (cm - 2.0 * c0 + cp)
                if denom > 0:
                    disp += (cm - cp) / denom
            out[y, x] = disp
    return out


def wta_subpixel(vol: CostVolume, subpixel=True) -> np.ndarray:
    """Lowest-cost disparity per pixel, refined by a parabola through its neighbors."""
    return _wta(vol.cost, subpixel)


def parabola_offset(c_minus, c0, c_plus):
    denom = 2.0 * (c_minus - 2.0 * c0 + c_plus)
    return 0.0 if denom <= 0 else (c_minus - c_plus) / denom


@numba.njit(parallel=True, cache=True)
def _wta_right(cost):
    h, w, nd = cost.shape
    out = np.empty((h, w), dtype=np.float32)
    for y in numba.prange(h):
        for x in range(w):
            best = 0
            bc = cost[y, x, 0]
            for d in range(1, nd):
                if x + d >= w:
                    break
                c = cost[y, x + d, d]
                if c < bc:
                    bc = c
                    best = d
            out[y, x] = best
    return out


def right_disparity(vol: CostVolume) -> np.ndarray:
    """Integer right-view disparities read diagonally from the left volume."""
    return _wta_right(vol.cost)


# ---------------------------------------------------------------- post-processing


@numba.njit(cache=True)
def _lr_check(disp_l, disp_r, threshold):
    h, w = disp_l.shape
    out = disp_l.copy()
    for y in range(h):
        for x in range(w):
            d = disp_l[y, x]
            if not np.isfinite(d):
                continue
            xr = x - np.int64(np.floor(d + 0.5))
            if xr < 0 or xr >= w or not np.isfinite(disp_r[y, xr]) \
                    or abs(d - disp_r[y, xr]) > threshold:
                out[y, x] = np.inf
    return out


@numba.njit(cache=True)
def _speckle(disp, max_diff, min_region):
    h, w = disp.shape
    out = disp.copy()
    label = np.full((h, w), -1, dtype=np.int64)
    stack = np.empty(h * w, dtype=np.int64)
    members = np.empty(h * w, dtype=np.int64)
    next_label = 0
    for sy in range(h):
        for sx in range(w):
            if label[sy, sx] >= 0 or not np.isfinite(disp[sy, sx]):
                continue
            label[sy, sx] = next_label
            top = 0
            stack[top] = sy * w + sx
            top += 1
            count = 0
            while top > 0:
                top -= 1
                p = stack[top]
                members[count] = p
                count += 1
                y = p // w
                x = p - y * w
                v = disp[y, x]
                for k in range(4):
                    ny, nx = y, x
                    if k == 0:
                        nx = x + 1
                    elif k == 1:
                        nx = x - 1
                    elif k == 2:
                        ny = y + 1
                    else:
                        ny = y - 1
                    if nx < 0 or nx >= w or ny < 0 or ny >= h:
                        continue
                    if label[ny, nx] >= 0:
                        continue
                    nv = disp[ny, nx]
                    if not np.isfinite(nv) or abs(nv - v) > max_diff:
                        continue
                    label[ny, nx] = next_label
                    stack[top] = ny * w + nx
                    top += 1
            if count < min_region:
                for i in range(count):
                    p = members[i]
                    out[p // w, p - (p // w) * w] = np.inf
            next_label += 1
    return out


@numba.njit(cache=True)
def _fill_background(disp):
    h, w = disp.shape
    out = disp.copy()
    row_ok = np.zeros(h, dtype=np.bool_)
    left = np.empty(w, dtype=np.float32)
    for y in range(h):
        last = np.float32(np.inf)
        for x in range(w):
            if np.isfinite(disp[y, x]):
                last = disp[y, x]
                row_ok[y] = True
            left[x] = last
        if not row_ok[y]:
            continue
        nxt = np.float32(np.inf)
        for x in range(w - 1, -1, -1):
            if np.isfinite(disp[y, x]):
                nxt = disp[y, x]
            else:
                out[y, x] = min(left[x], nxt)
    if not row_ok.any():
        return out
    # rows without a single valid pixel copy the nearest valid row, upper on ties
    for y in range(h):
        if row_ok[y]:
            continue
        best = -1
        for dist in range(1, h):
            if y - dist >= 0 and row_ok[y - dist]:
                best = y - dist
                break
            if y + dist < h and row_ok[y + dist]:
                best = y + dist
                break
        for x in range(w):
            out[y, x] = out[best, x]
    return out


def lr_check(disp_left, disp_right, threshold=1.0):
    return _lr_check(np.asarray(disp_left, dtype=np.float32),
                     np.asarray(disp_right, dtype=np.float32), float(threshold))


def remove_speckles(disp, max_diff=1.0, min_region=200):
    """Invalidate 4-connected regions smaller than ``min_region`` pixels."""
    return _speckle(np.asarray(disp, dtype=np.float32), float(max_diff), int(min_region))


def fill_background(disp):
    """Fill invalid pixels with the smaller of the nearest valid values on the row."""
    return _fill_background(np.asarray(disp, dtype=np.float32))


def lr_check_speckle_fill(disp_left, disp_right, params: SgmParams) -> np.ndarray:
    checked = lr_check(disp_left, disp_right, params.lr_threshold)
    cleaned = remove_speckles(checked, params.speckle_max_diff, params.speckle_min_region)
    return fill_background(cleaned)


# ---------------------------------------------------------------- guidance


def guide_cost_volume(vol: CostVolume, hints: HintSet, k=10.0, w=10.0) -> CostVolume:
    """Raise costs away from the hinted disparity at hinted pixels.

    ``cost'(d) = cost(d) * (1 + k * (1 - exp(-(d - hint)^2 / (2 w^2))))``,
    rounded back to integers.
    """
    cost = vol.cost
    if len(hints) == 0 or k == 0:
        return CostVolume(cost.copy())
    hints.check_bounds(cost.shape[1], cost.shape[0])
    levels = np.arange(cost.shape[2], dtype=np.float64)
    gauss = np.exp(-((levels[None, :] - hints.d[:, None]) ** 2) / (2.0 * w * w))
    factor = 1.0 + k * (1.0 - gauss)
    modulated = np.rint(cost[hints.y, hints.x, :].astype(np.float64) * factor)
    out_dtype = np.uint16 if modulated.max(initial=0) <= 65535 else np.uint32
    out = cost.astype(out_dtype, copy=True)
    out[hints.y, hints.x, :] = modulated.astype(out_dtype)
    return CostVolume(out)


# ---------------------------------------------------------------- estimator


class SemiGlobalMatcher(BaseEstimator):
    """Census + semi-global matching with adaptive P2.

    When hints are passed to :meth:`predict` the raw matching costs are
    modulated around the hinted disparities before aggregation.
    """

    def __init__(self, max_disparity=192, census_window=5, p1=11, p2_min=17,
                 p2_alpha=0.5, p2_gamma=35, paths=8, subpixel=True,
                 lr_threshold=1.0, speckle_max_diff=1.0, speckle_min_region=200,
                 guide_k=10.0, guide_w=10.0):
        self.max_disparity = max_disparity
        self.census_window = census_window
        self.p1 = p1
        self.p2_min = p2_min
        self.p2_alpha = p2_alpha
        self.p2_gamma = p2_gamma
        self.paths = paths
        self.subpixel = subpixel
        self.lr_threshold = lr_threshold
        self.speckle_max_diff = speckle_max_diff
        self.speckle_min_region = speckle_min_region
        self.guide_k = guide_k
        self.guide_w = guide_w

    def sgm_params(self):
        return SgmParams(
            self.max_disparity, self.census_window, self.p1, self.p2_min,
            self.p2_alpha, self.p2_gamma, self.paths, self.subpixel,
            self.lr_threshold, self.speckle_max_diff, self.speckle_min_region,
        )

    def fit(self, left=None, right=None, hints=None):
        """Validate parameters. Matching has no learned state."""
        self.params_ = self.sgm_params()
        return self

    def predict(self, left, right, hints=None, postprocess=True):
        """Dense left-view disparity map for the pair."""
        params = self.sgm_params()
        left, right = check_image_pair(left, right)
        vol = census_cost(left, right, params.max_disparity, params.census_window)
        if hints is not None:
            hints = check_hints(hints, left.shape)
            vol = guide_cost_volume(vol, hints, self.guide_k, self.guide_w)
        agg = sgm_aggregate(vol, left, params)
        disp = wta_subpixel(agg, params.subpixel)
        if not postprocess:
            return disp
        return lr_check_speckle_fill(disp, right_disparity(agg), params)
