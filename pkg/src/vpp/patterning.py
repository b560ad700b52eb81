"""Virtual pattern projection onto a rectified stereo pair.

Each hint ``(x, y, d)`` fixes a correspondence ``(x, y) <-> (x - d, y)``. The
projector paints the same synthetic intensities at both ends, splatting the
target side across the two columns that bracket ``x - d`` and blending with
the original content. Hints are processed in ascending ``(y, x)`` order
because histogram-based patterns look at what earlier hints already painted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .imgio import HintSet
from .occlusion import OcclusionDetector
from ._validation import check_hints, check_image_pair

VARIANTS = {
    "ii-random-point": ("random", "point"),
    "iii-hist-point": ("hist", "point"),
    "iv-random-uniform-patch": ("random", "uniform"),
    "v-hist-uniform-patch": ("hist", "uniform"),
    "vi-random-perpixel-patch": ("random", "perpixel"),
    "vii-hist-perpixel-patch": ("hist", "perpixel"),
}
_SHORT = {name.split("-")[0]: name for name in VARIANTS}

OCCLUSION_STRATEGIES = ("no", "bkgd", "fgd")
_STRATEGY_CODE = {"no": 0, "bkgd": 1, "fgd": 2}


def resolve_variant(variant):
    """Accept a full variant name or its roman numeral (``"vi"``)."""
    key = str(variant).lower()
    if key in VARIANTS:
        return key
    if key in _SHORT:
        return _SHORT[key]
    raise ValueError(f"unknown pattern variant {variant!r}")


def variant_from_flags(pattern="random", patch=3, uniform_patch=False):
    """Map CLI-style flags onto a variant name."""
    if pattern not in ("random", "hist"):
        raise ValueError(f"pattern must be 'random' or 'hist', got {pattern!r}")
    if patch == 1:
        return "ii-random-point" if pattern == "random" else "iii-hist-point"
    if uniform_patch:
        return "iv-random-uniform-patch" if pattern == "random" else "v-hist-uniform-patch"
    return "vi-random-perpixel-patch" if pattern == "random" else "vii-hist-perpixel-patch"


@dataclass
class VppConfig:
    variant: str = "vi-random-perpixel-patch"
    patch: int = 3
    alpha: float = 0.4
    occlusion_strategy: str = "fgd"
    window_length: int = 64
    rng_seed: int = 0

    def __post_init__(self):
        self.variant = resolve_variant(self.variant)
        if VARIANTS[self.variant][1] == "point":
            self.patch = 1
        if int(self.patch) != self.patch or self.patch < 1 or self.patch % 2 == 0:
            raise ValueError(f"patch must be an odd integer >= 1, got {self.patch}")
        self.patch = int(self.patch)
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        strategy = str(self.occlusion_strategy).lower()
        if strategy not in OCCLUSION_STRATEGIES:
            raise ValueError(f"occlusion_strategy must be one of {OCCLUSION_STRATEGIES}")
        self.occlusion_strategy = strategy
        if self.window_length < self.patch:
            raise ValueError("window_length must be >= patch")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must fit in 64 unsigned bits")

    @property
    def pattern(self):
        return VARIANTS[self.variant][0]

    @property
    def locality(self):
        return VARIANTS[self.variant][1]


# ---------------------------------------------------------------- primitives


def random_color(rng, channels=1):
    """Draw one uniform integer intensity in [0, 255] per channel."""
    return rng.integers(0, 256, size=channels, dtype=np.uint8)


@numba.njit(cache=True)
def _hdist_choice(hist):
    n = hist.shape[0]
    any_filled = False
    all_filled = True
    for i in range(n):
        if hist[i] > 0:
            any_filled = True
        else:
            all_filled = False
    if not any_filled:
        return 0
    if all_filled:
        best = 0
        for i in range(1, n):
            if hist[i] < hist[best]:
                best = i
        return best
    big = 1 << 20
    dist = np.empty(n, dtype=np.int64)
    last = -big
    for i in range(n):
        if hist[i] > 0:
            last = i
        dist[i] = i - last
    last = big
    for i in range(n - 1, -1, -1):
        if hist[i] > 0:
            last = i
        if last - i < dist[i]:
            dist[i] = last - i
    best = 0
    for i in range(1, n):
        if dist[i] > dist[best]:
            best = i
    return best


def hdist_color(hist):
    """Color farthest from every filled histogram bin.

    Filled bins have distance zero. Ties go to the smallest intensity. If all
    256 bins are filled, the least frequent intensity is returned instead.
    """
    hist = np.ascontiguousarray(hist, dtype=np.int64)
    if hist.shape != (256,):
        raise ValueError("histogram must have 256 bins")
    return int(_hdist_choice(hist))


@numba.njit(cache=True)
def _round_u8(v):
    r = np.floor(v + 0.5)
    if r < 0.0:
        return np.uint8(0)
    if r > 255.0:
        return np.uint8(255)
    return np.uint8(r)


@numba.njit(cache=True)
def blend_value(original, value, alpha):
    """``(1 - alpha) * original + alpha * value`` rounded half up to 8 bits."""
    return _round_u8((1.0 - alpha) * original + alpha * value)


@numba.njit(cache=True)
def _gather(left, right, x, x_prime, y, length, out):
    # out: (C, 256), zeroed here
    h, w, nc = left.shape
    out[:, :] = 0
    half = length // 2
    xr = np.int64(np.floor(x_prime + 0.5))
    for yy in range(max(y - 1, 0), min(y + 2, h)):
        for xx in range(max(x - half, 0), min(x - half + length, w)):
            for c in range(nc):
                out[c, left[yy, xx, c]] += 1
        for xx in range(max(xr - half, 0), min(xr - half + length, w)):
            for c in range(nc):
                out[c, right[yy, xx, c]] += 1


def gather_histogram(img_left, img_right, x, x_prime, y, length):
    """Summed per-channel histograms of two 3-row windows of length ``length``.

    Windows are centered on ``(x, y)`` in the left image and on
    ``(round(x_prime), y)`` in the right image and clipped at the borders.
    Returns an array of shape ``(channels, 256)``.
    """
    left, right = _as_hwc(img_left), _as_hwc(img_right)
    out = np.zeros((left.shape[2], 256), dtype=np.int64)
    _gather(left, right, int(x), float(x_prime), int(y), int(length), out)
    return out


@numba.njit(cache=True)
def splat_values(r_floor, r_ceil, beta, value, alpha=1.0):
    """Blended, splatted intensities for the two target columns, unrounded.

    ``beta == 0`` writes the floor column only; the returned ceil value then
    equals ``r_ceil``.
    """
    w0 = alpha * (1.0 - beta)
    w1 = alpha * beta
    v0 = (1.0 - w0) * r_floor + w0 * value
    if beta == 0.0:
        return v0, r_ceil * 1.0
    v1 = (1.0 - w1) * r_ceil + w1 * value
    return v0, v1


@numba.njit(cache=True)
def _splat(right, x_prime, y, values, alpha):
    w = right.shape[1]
    f = np.int64(np.floor(x_prime))
    beta = x_prime - f
    for c in range(right.shape[2]):
        r0 = right[y, f, c] if 0 <= f < w else 0
        r1 = right[y, f + 1, c] if 0 <= f + 1 < w else 0
        v0, v1 = splat_values(r0 * 1.0, r1 * 1.0, beta, values[c] * 1.0, alpha)
        if 0 <= f < w:
            right[y, f, c] = _round_u8(v0)
        if beta != 0.0 and 0 <= f + 1 < w:
            right[y, f + 1, c] = _round_u8(v1)


def splat_right(img_right, x_prime, y, value, alpha=1.0):
    """Splat ``value`` at fractional column ``x_prime`` of row ``y`` in place."""
    if x_prime < 0:
        raise ValueError("x_prime must be >= 0")
    right = _as_hwc(img_right)
    values = np.broadcast_to(np.asarray(value, dtype=np.float64), (right.shape[2],)).copy()
    _splat(right, float(x_prime), int(y), values, float(alpha))
    return img_right


# ---------------------------------------------------------------- engine


@numba.njit(cache=True)
def _project(left, right, xs, ys, ds, occluded, out_of_target, randoms,
             patch, use_hist, per_pixel, alpha, strategy, length):
    h, w, nc = left.shape
    r = patch // 2
    hist = np.zeros((nc, 256), dtype=np.int64)
    value = np.zeros(nc, dtype=np.float64)
    for i in range(xs.shape[0]):
        x = xs[i]
        y = ys[i]
        x_prime = x - ds[i]
        if occluded[i]:
            if strategy == 0:
                continue
            if strategy == 2:
                # copy target content at the correspondence into the reference
                for dy in range(-r, r + 1):
                    ly = y + dy
                    if ly < 0 or ly >= h:
                        continue
                    for dx in range(-r, r + 1):
                        lx = x + dx
                        xr = x_prime + dx
                        if lx < 0 or lx >= w or xr < 0.0 or xr > w - 1:
                            continue
                        f = np.int64(np.floor(xr))
                        b = xr - f
                        for c in range(nc):
                            v = right[ly, f, c] * 1.0
                            if b > 0.0:
                                v = (1.0 - b) * v + b * right[ly, f + 1, c]
                            left[ly, lx, c] = _round_u8(v)
                continue
        if use_hist and not per_pixel:
            _gather(left, right, x, x_prime, y, length, hist)
            for c in range(nc):
                value[c] = _hdist_choice(hist[c])
        k = -1
        for dy in range(-r, r + 1):
            ly = y + dy
            for dx in range(-r, r + 1):
                k += 1
                if ly < 0 or ly >= h:
                    continue
                lx = x + dx
                xr = x_prime + dx
                if use_hist:
                    if per_pixel:
                        _gather(left, right, lx, xr, ly, length, hist)
                        for c in range(nc):
                            value[c] = _hdist_choice(hist[c])
                else:
                    kk = k if per_pixel else 0
                    for c in range(nc):
                        value[c] = randoms[i, kk, c]
                if 0 <= lx < w:
                    for c in range(nc):
                        left[ly, lx, c] = blend_value(left[ly, lx, c] * 1.0, value[c], alpha)
                if not out_of_target[i] and xr > -1.0:
                    _splat(right, xr, ly, value, alpha)


def _as_hwc(image):
    return image[:, :, None] if image.ndim == 2 else image


def apply_vpp(img_left, img_right, hints: HintSet, config: VppConfig):
    """Paint virtual patterns for every hint and return the augmented pair.

    ``hints`` must already carry occlusion and out-of-target flags (see
    :mod:`vpp.occlusion`). Inputs are not modified.
    """
    img_left, img_right = check_image_pair(img_left, img_right)
    hints = check_hints(hints, img_left.shape).sorted()
    left = np.ascontiguousarray(_as_hwc(img_left).copy())
    right = np.ascontiguousarray(_as_hwc(img_right).copy())
    n, nc = len(hints), left.shape[2]
    out = hints.out_of_target | (hints.x - hints.d < 0)
    rng = np.random.default_rng(int(config.rng_seed))
    if config.pattern == "random":
        per_hint = config.patch**2 if config.locality == "perpixel" else 1
        randoms = rng.integers(0, 256, size=(n, per_hint, nc), dtype=np.uint8)
    else:
        randoms = np.zeros((n, 1, nc), dtype=np.uint8)
    if n:
        _project(
            left, right,
            hints.x, hints.y, hints.d, hints.occluded, out, randoms,
            config.patch, config.pattern == "hist", config.locality == "perpixel",
            float(config.alpha), _STRATEGY_CODE[config.occlusion_strategy],
            int(config.window_length),
        )
    return left.reshape(img_left.shape), right.reshape(img_right.shape)


class VirtualPatternProjector(TransformerMixin, BaseEstimator):
    """Augment a stereo pair with coherent virtual patterns from sparse hints.

    ``fit`` classifies hint occlusions; ``transform`` paints the patterns.

    Parameters
    ----------
    variant : str
        Pattern variant, full name or roman numeral (``"ii"`` .. ``"vii"``).
    patch : int
        Odd patch side; forced to 1 for the pointwise variants.
    alpha : float
        Blend weight of the pattern against the original content.
    occlusion : {"no", "bkgd", "fgd"}
        Handling of hints classified as occluded.
    window_length : int
        Scanline window length used by the histogram variants.
    lam, gamma, t, rx, ry :
        Occlusion heuristic parameters, see :class:`OcclusionDetector`.
    random_state : int
        Seed for the random variants.
    """

    def __init__(self, variant="vi", patch=3, alpha=0.4, occlusion="fgd",
                 window_length=64, lam=2.0, gamma=0.4375, t=1.0, rx=9, ry=7,
                 random_state=0):
        self.variant = variant
        self.patch = patch
        self.alpha = alpha
        self.occlusion = occlusion
        self.window_length = window_length
        self.lam = lam
        self.gamma = gamma
        self.t = t
        self.rx = rx
        self.ry = ry
        self.random_state = random_state

    def config(self):
        return VppConfig(self.variant, self.patch, self.alpha, self.occlusion,
                         self.window_length, self.random_state)

    def fit(self, left, right, hints):
        left, right = check_image_pair(left, right)
        self.config_ = self.config()
        detector = OcclusionDetector(self.lam, self.gamma, self.t, self.rx, self.ry)
        self.hints_ = detector.fit_transform(hints, left.shape)
        self.warp_grid_ = detector.warp_grid_
        self.image_shape_ = left.shape
        return self

    def transform(self, left, right):
        if not hasattr(self, "hints_"):
            from sklearn.exceptions import NotFittedError
            raise NotFittedError("call fit with the hints before transform")
        left, right = check_image_pair(left, right)
        if left.shape[:2] != self.image_shape_[:2]:
            raise ValueError("images differ in size from those seen in fit")
        return apply_vpp(left, right, self.hints_, self.config_)

    def fit_transform(self, left, right, hints):
        return self.fit(left, right, hints).transform(left, right)
