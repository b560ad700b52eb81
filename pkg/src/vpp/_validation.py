"""Input validation helpers shared by the estimators."""

import numpy as np

from .imgio import HintSet


def check_image(image, name="image"):
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise TypeError(f"{name} must be uint8, got {image.dtype}")
    if image.ndim == 3 and image.shape[2] == 1:
        image = image[:, :, 0]
    if image.ndim not in (2, 3) or (image.ndim == 3 and image.shape[2] != 3):
        raise ValueError(f"{name} must be HxW or HxWx3, got shape {image.shape}")
    if image.shape[0] == 0 or image.shape[1] == 0:
        raise ValueError(f"{name} is empty")
    return image


def check_image_pair(left, right):
    left = check_image(left, "left")
    right = check_image(right, "right")
    if left.shape != right.shape:
        raise ValueError(
            f"left and right images differ in shape: {left.shape} vs {right.shape}"
        )
    return left, right


def check_disparity(disp, shape=None, name="disparity"):
    disp = np.asarray(disp, dtype=np.float32)
    if disp.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {disp.shape}")
    if shape is not None and disp.shape != tuple(shape[:2]):
        raise ValueError(f"{name} shape {disp.shape} does not match {tuple(shape[:2])}")
    return disp


def check_hints(hints, shape):
    if hints is None:
        return HintSet.empty()
    if not isinstance(hints, HintSet):
        arr = np.asarray(hints, dtype=np.float64)
        if arr.size == 0:
            return HintSet.empty()
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError("hints must be a HintSet or an (n, 3) array of x, y, d")
        if np.any(arr[:, :2] != np.round(arr[:, :2])):
            raise ValueError("hint coordinates must be integers")
        hints = HintSet(arr[:, 0], arr[:, 1], arr[:, 2])
    hints.check_bounds(shape[1], shape[0])
    return hints


def to_gray(image):
    """BT.601 luma as float32; grayscale input passes through."""
    image = np.asarray(image)
    if image.ndim == 2:
        return image.astype(np.float32)
    rgb = image.astype(np.float32)
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
