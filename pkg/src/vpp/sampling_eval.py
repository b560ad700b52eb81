"""Hint sampling from ground truth and bad-pixel evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgio import HintSet
from ._validation import check_disparity

THRESHOLDS = (1, 2, 3, 4)


@dataclass
class MetricsReport:
    bad1: float
    bad2: float
    bad3: float
    bad4: float
    avg_px: float
    evaluated_count: int
    coverage: float

    def to_dict(self):
        return {
            "bad1": round(self.bad1, 6),
            "bad2": round(self.bad2, 6),
            "bad3": round(self.bad3, 6),
            "bad4": round(self.bad4, 6),
            "avg_px": round(self.avg_px, 6),
            "evaluated_count": int(self.evaluated_count),
            "coverage": round(self.coverage, 6),
        }


def valid_mask(disp):
    disp = np.asarray(disp)
    return np.isfinite(disp) & (disp >= 0)


def sample_hints(gt, density, seed=0) -> HintSet:
    """Draw ``round(density * n_valid)`` distinct valid ground-truth pixels."""
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {density}")
    gt = check_disparity(gt, name="gt")
    idx = np.flatnonzero(valid_mask(gt))
    n = int(np.floor(density * idx.size + 0.5))
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(idx, size=n, replace=False)) if n else idx[:0]
    y, x = np.divmod(chosen, gt.shape[1])
    return HintSet(x, y, gt.ravel()[chosen].astype(np.float64))


def evaluate(disp, gt, mask=None) -> MetricsReport:
    """Bad-pixel rates for thresholds 1..4 px and mean absolute error.

    Pixels with invalid ground truth are ignored. Invalid predictions count
    as bad at every threshold and are left out of the mean error.
    """
    gt = check_disparity(gt, name="gt")
    disp = check_disparity(disp, gt.shape)
    region = valid_mask(gt)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != gt.shape:
            raise ValueError("mask shape does not match the ground truth")
        region &= mask
    n = int(region.sum())
    if n == 0:
        return MetricsReport(0.0, 0.0, 0.0, 0.0, 0.0, 0, 0.0)
    pred = disp[region].astype(np.float64)
    ok = np.isfinite(pred)
    err = np.abs(pred - gt[region].astype(np.float64))
    bad = [100.0 * np.count_nonzero(~ok | (err > tau)) / n for tau in THRESHOLDS]
    avg = float(err[ok].mean()) if ok.any() else 0.0
    return MetricsReport(*bad, avg, n, float(ok.mean()))
