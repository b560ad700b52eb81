"""Readers and writers for images, disparity maps, calibration, hints and metrics.

Images are ``uint8`` arrays shaped ``(H, W)`` or ``(H, W, 3)``. Disparity maps
are ``float32`` arrays shaped ``(H, W)`` where invalid pixels hold ``INVALID``.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

INVALID = np.float32(np.inf)


class FormatError(ValueError):
    """Raised when a file does not follow the expected on-disk format."""


@dataclass
class Calibration:
    focal_length_px: float
    baseline: float
    disparity_offset: float = 0.0

    def __post_init__(self):
        if not self.focal_length_px > 0:
            raise ValueError(f"focal_length_px must be > 0, got {self.focal_length_px}")
        if not self.baseline > 0:
            raise ValueError(f"baseline must be > 0, got {self.baseline}")


@dataclass
class HintSet:
    """Sparse disparity seeds in the reference (left) image plane.

    ``out_of_target`` is filled by the occlusion stage for hints whose
    correspondence falls left of the target image.
    """

    x: np.ndarray
    y: np.ndarray
    d: np.ndarray
    occluded: np.ndarray = None
    out_of_target: np.ndarray = field(default=None)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.int64).ravel()
        self.y = np.asarray(self.y, dtype=np.int64).ravel()
        self.d = np.asarray(self.d, dtype=np.float64).ravel()
        n = self.x.size
        if self.y.size != n or self.d.size != n:
            raise ValueError("x, y and d must have the same length")
        if self.occluded is None:
            self.occluded = np.zeros(n, dtype=bool)
        if self.out_of_target is None:
            self.out_of_target = np.zeros(n, dtype=bool)
        self.occluded = np.asarray(self.occluded, dtype=bool).ravel()
        self.out_of_target = np.asarray(self.out_of_target, dtype=bool).ravel()
        if self.occluded.size != n or self.out_of_target.size != n:
            raise ValueError("flag arrays must match the number of hints")
        if n:
            if not np.all(np.isfinite(self.d)) or np.any(self.d < 0):
                raise ValueError("hint disparities must be finite and >= 0")
            if np.any(self.x < 0) or np.any(self.y < 0):
                raise ValueError("hint coordinates must be nonnegative")
            keys = self.y * (int(self.x.max()) + 1) + self.x
            if np.unique(keys).size != n:
                raise ValueError("duplicate (x, y) hint coordinates")

    def __len__(self):
        return int(self.x.size)

    @classmethod
    def empty(cls):
        return cls(np.zeros(0), np.zeros(0), np.zeros(0))

    def copy(self):
        return HintSet(
            self.x.copy(), self.y.copy(), self.d.copy(),
            self.occluded.copy(), self.out_of_target.copy(),
        )

    def sorted(self):
        """Return a copy ordered by ascending (y, x)."""
        order = np.lexsort((self.x, self.y))
        return HintSet(
            self.x[order], self.y[order], self.d[order],
            self.occluded[order], self.out_of_target[order],
        )

    def check_bounds(self, width, height):
        if len(self) and (self.x.max() >= width or self.y.max() >= height):
            raise ValueError(
                f"hint coordinates exceed image bounds {width}x{height}"
            )

    def to_disparity_map(self, width, height):
        out = np.full((height, width), INVALID, dtype=np.float32)
        out[self.y, self.x] = self.d
        return out


# ---------------------------------------------------------------- PFM


def _read_header_line(f):
    line = f.readline()
    if not line:
        raise FormatError("unexpected end of file in PFM header")
    return line.decode("latin-1").strip()


def read_pfm(path) -> np.ndarray:
    """Read a single-channel ``Pf`` file into a top-down float32 map.

    Nonfinite samples become ``INVALID``.
    """
    with open(path, "rb") as f:
        magic = _read_header_line(f)
        if magic == "PF":
            raise FormatError("color PFM ('PF') cannot be read as a disparity map")
        if magic != "Pf":
            raise FormatError(f"bad PFM magic {magic!r}")
        dims = _read_header_line(f)
        m = re.fullmatch(r"(\d+)\s+(\d+)", dims)
        if not m:
            raise FormatError(f"bad PFM dimensions line {dims!r}")
        width, height = int(m.group(1)), int(m.group(2))
        try:
            scale = float(_read_header_line(f))
        except ValueError as exc:
            raise FormatError("bad PFM scale line") from exc
        if scale == 0:
            raise FormatError("PFM scale must be nonzero")
        dtype = "<f4" if scale < 0 else ">f4"
        count = width * height
        payload = f.read(4 * count)
    if len(payload) != 4 * count:
        raise OSError(
            f"truncated PFM payload: expected {4 * count} bytes, got {len(payload)}"
        )
    data = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    data = np.flipud(data).astype(np.float32)
    data[~np.isfinite(data)] = INVALID
    return data


def write_pfm(path, disparity):
    disparity = np.asarray(disparity, dtype=np.float32)
    if disparity.ndim != 2:
        raise ValueError("write_pfm expects a 2-D map")
    height, width = disparity.shape
    with open(path, "wb") as f:
        f.write(f"Pf\n{width} {height}\n-1.0\n".encode("ascii"))
        f.write(np.flipud(disparity).astype("<f4").tobytes())


# ---------------------------------------------------------------- PNG


def read_disparity_png16(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("I;16", "I;16B", "I;16L", "I"):
            raise FormatError(f"expected a 16-bit PNG, got mode {im.mode}")
        raw = np.array(im)
    if im.mode == "I" and (raw.min() < 0 or raw.max() > 65535):
        raise FormatError("PNG values exceed the 16-bit range")
    raw = raw.astype(np.uint16)
    out = raw.astype(np.float32) / np.float32(256.0)
    out[raw == 0] = INVALID
    return out


def write_disparity_png16(path, disparity):
    disparity = np.asarray(disparity, dtype=np.float64)
    valid = np.isfinite(disparity)
    raw = np.zeros(disparity.shape, dtype=np.uint16)
    raw[valid] = np.clip(np.floor(disparity[valid] * 256.0 + 0.5), 1, 65535)
    Image.fromarray(raw).save(path)


def read_image(path) -> np.ndarray:
    """Load an 8-bit grayscale or RGB image."""
    with Image.open(path) as im:
        if im.mode in ("L", "RGB"):
            return np.array(im)
        if im.mode in ("RGBA", "P", "CMYK", "YCbCr", "LA"):
            return np.array(im.convert("RGB" if im.mode != "LA" else "L"))
        raise FormatError(f"unsupported image mode {im.mode}")


def write_image(path, image):
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise ValueError("write_image expects uint8 data")
    # no compression metadata, so identical arrays give identical bytes
    Image.fromarray(image).save(path, format="PNG", optimize=False)


# ---------------------------------------------------------------- hints


def read_hints(path) -> HintSet:
    xs, ys, ds = [], [], []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "y", "d"]:
            raise FormatError("hints file must start with header 'x,y,d'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise FormatError(f"line {lineno}: expected 3 fields, got {len(row)}")
            try:
                xs.append(int(row[0]))
                ys.append(int(row[1]))
                ds.append(float(row[2]))
            except ValueError as exc:
                raise FormatError(f"line {lineno}: {exc}") from exc
    return HintSet(xs, ys, ds)


def write_hints(hints: HintSet, path):
    with open(path, "w", newline="") as f:
        f.write("x,y,d\n")
        for x, y, d in zip(hints.x.tolist(), hints.y.tolist(), hints.d.tolist()):
            f.write(f"{x},{y},{d!r}\n")


# ---------------------------------------------------------------- calibration


def read_calibration(path) -> Calibration:
    """Parse a Middlebury ``calib.txt`` (``key=value`` per line)."""
    values = {}
    with open(path) as f:
        for line in f:
            if "=" in line:
                key, _, val = line.partition("=")
                values[key.strip()] = val.strip()
    try:
        cam0 = values["cam0"].strip("[]").replace(";", " ").split()
        focal = float(cam0[0])
        baseline = float(values["baseline"])
    except (KeyError, IndexError, ValueError) as exc:
        raise FormatError(f"incomplete calibration file: {exc}") from exc
    doffs = float(values.get("doffs", 0.0))
    return Calibration(focal, baseline, doffs)


# ---------------------------------------------------------------- metrics


def write_metrics(path, document: dict):
    """Write a JSON document; keys keep insertion order for stable diffs."""
    text = json.dumps(document, indent=2, sort_keys=False, allow_nan=False)
    with open(path, "w") as f:
        f.write(text + "\n")


def read_metrics(path) -> dict:
    with open(path) as f:
        return json.load(f)
