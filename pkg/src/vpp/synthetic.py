"""Synthetic rectified scenes with exact dense ground truth.

Scenes are fronto-parallel layers (a background plus rectangles), each with
a constant disparity and its own texture function defined in left-image
coordinates. Both views are rendered by ray casting the layers, so
occlusions are exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_PAD = 256


@dataclass
class Layer:
    disparity: float
    box: tuple = None  # (x0, y0, x1, y1) in the left image, None = whole plane
    texture: np.ndarray = None  # (H, W) or (H, W, 3) uint8, indexed by left coords


@dataclass
class Scene:
    left: np.ndarray
    right: np.ndarray
    gt: np.ndarray
    gt_right: np.ndarray


def render(layers, height, width) -> Scene:
    """Ray-cast integer-disparity layers into a stereo pair.

    Textures may be wider than the image so that right-view pixels near the
    right border, which see left-frame columns beyond ``width``, get content.
    """
    order = sorted(range(len(layers)), key=lambda i: layers[i].disparity)
    first = layers[0].texture
    shape = (height, width) + first.shape[2:]
    left = np.zeros(shape, dtype=np.uint8)
    right = np.zeros(shape, dtype=np.uint8)
    gt = np.full((height, width), np.inf, dtype=np.float32)
    gt_r = np.full((height, width), np.inf, dtype=np.float32)
    cols = np.arange(width)
    for i in order:
        layer = layers[i]
        d = int(layer.disparity)
        if d != layer.disparity:
            raise ValueError("layers must have integer disparity")
        x0, y0, x1, y1 = layer.box if layer.box is not None else (0, 0, width, height)
        rows = slice(max(y0, 0), min(y1, height))
        # left view: pixel x sees the layer when x is inside its box
        lmask = (cols >= x0) & (cols < x1)
        left[rows, lmask] = layer.texture[rows, :width][:, lmask]
        gt[rows, lmask] = d
        # right view: pixel xr sees left-frame point xr + d
        src = cols + d
        tex_w = layer.texture.shape[1]
        rmask = (src >= x0) & (src < x1) & (src < tex_w)
        src_c = np.clip(src, 0, tex_w - 1)
        right[rows, rmask] = layer.texture[rows][:, src_c[rmask]]
        gt_r[rows, rmask] = d
    return Scene(left, right, gt, gt_r)


def random_dot_stereogram(width=320, height=240, disparity=10, seed=0, density=0.5):
    """Binary random-dot pair with a constant disparity."""
    rng = np.random.default_rng(seed)
    tex = np.where(rng.random((height, width + disparity)) < density, 255, 0).astype(np.uint8)
    # left(x) == right(x - disparity)
    left = np.ascontiguousarray(tex[:, :width])
    right = np.ascontiguousarray(tex[:, disparity:])
    gt = np.full((height, width), disparity, dtype=np.float32)
    return Scene(left, right, gt, gt.copy())


def _flat(height, width, level, seed, noise):
    rng = np.random.default_rng(seed)
    tex = np.full((height, width + _PAD), float(level))
    if noise:
        tex += rng.normal(0.0, noise, size=tex.shape)
    return np.clip(np.rint(tex), 0, 255).astype(np.uint8)


def textureless_two_plane(width=320, height=240, bg_disparity=8, fg_disparity=40,
                          box=None, seed=0, noise=0.0):
    """Nearly uniform background with a nearly uniform nearer rectangle."""
    if box is None:
        box = (width // 3, height // 4, width // 3 + width // 4, 3 * height // 4)
    layers = [
        Layer(bg_disparity, None, _flat(height, width, 90, seed, noise)),
        Layer(fg_disparity, box, _flat(height, width, 160, seed + 1, noise)),
    ]
    return render(layers, height, width)


def two_rectangle_scene(width=320, height=240, bg_disparity=6,
                        fg_disparities=(38, 26), seed=0):
    """Textured background with two nearer textured rectangles."""
    rng = np.random.default_rng(seed)
    boxes = [
        (width // 4, height // 6, width // 4 + 48, height // 6 + 150),
        (width // 2 + 40, height // 4, width // 2 + 90, height // 4 + 130),
    ]
    size = (height, width + _PAD)
    layers = [Layer(bg_disparity, None, rng.integers(0, 256, size, dtype=np.uint8))]
    for d, box in zip(fg_disparities, boxes):
        layers.append(Layer(d, box, rng.integers(0, 256, size, dtype=np.uint8)))
    return render(layers, height, width)


def _smooth(height, width, rng, level, amp):
    yy, xx = np.mgrid[0:height, 0 : width + _PAD]
    tex = np.full(yy.shape, float(level))
    for _ in range(4):
        fx, fy = rng.uniform(0.005, 0.04, 2)
        tex += amp * np.sin(fx * xx + fy * yy + rng.uniform(0, 6.3))
    return np.clip(tex, 0, 255).astype(np.uint8)


def low_texture_scene(width=320, height=240, seed=0, noise=2.0):
    """Three slowly shaded layers with independent sensor noise per view.

    Census matching has little to lock onto here, which makes it a cheap
    stand-in for the weakly textured regions of real indoor scenes.
    """
    rng = np.random.default_rng(seed)
    layers = [
        Layer(8, None, _smooth(height, width, rng, 100, 6)),
        Layer(40, (100, 60, 180, 180), _smooth(height, width, rng, 150, 6)),
        Layer(24, (220, 40, 280, 140), _smooth(height, width, rng, 60, 6)),
    ]
    scene = render(layers, height, width)
    for view in ("left", "right"):
        img = getattr(scene, view) + rng.normal(0.0, noise, scene.left.shape)
        setattr(scene, view, np.clip(img, 0, 255).astype(np.uint8))
    return scene
