"""Depth/disparity conversion and epipolar correspondence on rectified pairs."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .imgio import Calibration


class Correspondence(NamedTuple):
    x: int
    y: int
    x_prime: float
    beta: float
    out_of_target: bool


def depth_to_disparity(z, calib: Calibration):
    """Convert metric depth to disparity in pixels.

    Uses ``d = b*f/z - doffs`` clamped at zero. Accepts scalars or arrays.
    """
    z = np.asarray(z, dtype=np.float64)
    if np.any(~(z > 0)):
        raise ValueError("depth must be strictly positive")
    d = calib.baseline * calib.focal_length_px / z - calib.disparity_offset
    d = np.maximum(d, 0.0)
    return float(d) if d.ndim == 0 else d


def disparity_to_depth(d, calib: Calibration):
    d = np.asarray(d, dtype=np.float64)
    denom = d + calib.disparity_offset
    if np.any(~(denom > 0)):
        raise ValueError("disparity + offset must be strictly positive")
    z = calib.baseline * calib.focal_length_px / denom
    return float(z) if z.ndim == 0 else z


def correspondence(x, y, d) -> Correspondence:
    """Locate the target-image match of reference pixel ``(x, y)``.

    ``out_of_target`` is set when the match lies left of column 0; the
    caller decides what to do with such points.
    """
    if d < 0:
        raise ValueError("disparity must be nonnegative")
    x_prime = float(x) - float(d)
    beta = x_prime - math.floor(x_prime)
    return Correspondence(int(x), int(y), x_prime, beta, x_prime < 0)
