"""Independent reference computations used by the tests."""

import numpy as np


def brute_hdist(hist):
    """Exhaustive evaluation of all 256 candidate colors."""
    filled = [i for i in range(256) if hist[i] > 0]
    if not filled:
        return 0
    if len(filled) == 256:
        counts = [int(hist[i]) for i in range(256)]
        return counts.index(min(counts))
    best, best_score = 0, -1
    for i in range(256):
        score = min(abs(i - j) for j in filled)
        if score > best_score:
            best, best_score = i, score
    return best


def brute_hdist_score(hist, i):
    filled = [j for j in range(256) if hist[j] > 0]
    return min(abs(i - j) for j in filled) if filled else 256


def geometric_occlusion(gt):
    """Per-pixel occlusion from dense left ground truth.

    Forward-warps every valid pixel to the right view keeping the nearest
    surface, then marks left pixels whose warped target is owned by a larger
    disparity. Also returns which pixels warp outside the right image.
    """
    h, w = gt.shape
    right = np.full((h, w), -np.inf)
    for y in range(h):
        for x in range(w):
            d = gt[y, x]
            if not np.isfinite(d):
                continue
            xr = int(round(x - d))
            if 0 <= xr < w and d > right[y, xr]:
                right[y, xr] = d
    occluded = np.zeros((h, w), dtype=bool)
    outside = np.zeros((h, w), dtype=bool)
    for y in range(h):
        for x in range(w):
            d = gt[y, x]
            if not np.isfinite(d):
                continue
            xr = int(round(x - d))
            if xr < 0:
                outside[y, x] = True
            elif right[y, xr] > d:
                occluded[y, x] = True
    return occluded, outside


def f1_score(pred, truth):
    tp = np.count_nonzero(pred & truth)
    fp = np.count_nonzero(pred & ~truth)
    fn = np.count_nonzero(~pred & truth)
    return 2 * tp / (2 * tp + fp + fn) if tp else 0.0


def brute_census_cost(left, right, x, y, d, window):
    r = window // 2
    h, w = left.shape

    def bits(img, cx):
        out = []
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                if dx == 0 and dy == 0:
                    continue
                yy = min(max(y + dy, 0), h - 1)
                xx = min(max(cx + dx, 0), w - 1)
                out.append(img[yy, xx] < img[y, cx])
        return out

    if x - d < 0:
        return window * window - 1
    return sum(a != b for a, b in zip(bits(left, x), bits(right, x - d)))
