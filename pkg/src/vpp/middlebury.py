"""Loading Middlebury 2014 scenes at reduced resolution."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .imgio import INVALID, Calibration, read_calibration, read_image, read_pfm


@dataclass
class StereoSample:
    name: str
    left: np.ndarray
    right: np.ndarray
    gt: np.ndarray
    calib: Calibration = None


def downscale_image(image, factor):
    if factor == 1:
        return image
    return np.array(Image.fromarray(image).reduce(factor))


def downscale_disparity(disp, factor):
    """Nearest-neighbor subsampling with disparities divided by ``factor``."""
    if factor == 1:
        return disp
    h, w = disp.shape
    off = factor // 2
    small = disp[off::factor, off::factor][: h // factor, : w // factor]
    out = small / np.float32(factor)
    out[~np.isfinite(small)] = INVALID
    return out.astype(np.float32)


def load_scene(scene_dir, factor=4) -> StereoSample:
    """Read ``im0.png``, ``im1.png``, ``disp0.pfm`` and ``calib.txt`` from a scene."""
    scene_dir = Path(scene_dir)
    left = downscale_image(read_image(scene_dir / "im0.png"), factor)
    right = downscale_image(read_image(scene_dir / "im1.png"), factor)
    gt = downscale_disparity(read_pfm(scene_dir / "disp0.pfm"), factor)
    h = min(left.shape[0], gt.shape[0])
    w = min(left.shape[1], gt.shape[1])
    calib_path = scene_dir / "calib.txt"
    calib = read_calibration(calib_path) if calib_path.exists() else None
    return StereoSample(scene_dir.name, left[:h, :w], right[:h, :w], gt[:h, :w], calib)


def find_scenes(root):
    root = Path(root)
    return sorted(p for p in root.iterdir() if (p / "im0.png").exists() and (p / "disp0.pfm").exists())
