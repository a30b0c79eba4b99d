"""Grayscale image primitives shared by the whole pipeline.

Images are 2-D float64 arrays. Preprocessed document images live in [0, 1];
correlation response maps reuse the same array type but are unclamped.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from PIL import Image

from stampkit.kernels import correlate_bank

# ITU-R BT.601 luma weights.
_LUMA_R, _LUMA_G, _LUMA_B = 0.299, 0.587, 0.114

DEFAULT_RESIZE = (64, 96)  # (height, width) for verification crops


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel rectangle; (x1, y1) are exclusive."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x0 >= self.x1 or self.y0 >= self.y1:
            raise ValueError(f"degenerate box {(self.x0, self.y0, self.x1, self.y1)}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """Convert an 8-bit RGB image to a [0, 1] grayscale array (BT.601 luma)."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.shape[0] == 0 or rgb.shape[1] == 0:
        raise ValueError(f"expected non-empty HxWx3 image, got shape {rgb.shape}")
    scaled = rgb.astype(np.float64) / 255.0
    gray = _LUMA_R * scaled[..., 0] + _LUMA_G * scaled[..., 1] + _LUMA_B * scaled[..., 2]
    return np.clip(gray, 0.0, 1.0)


def resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with center-aligned sampling; output stays in [0, 1]."""
    img = np.asarray(img, dtype=np.float64)
    if out_h <= 0 or out_w <= 0:
        raise ValueError(f"target size must be positive, got {(out_h, out_w)}")
    in_h, in_w = img.shape
    if (in_h, in_w) == (out_h, out_w):
        return img.copy()
    rows = np.clip((np.arange(out_h) + 0.5) * in_h / out_h - 0.5, 0.0, in_h - 1.0)
    cols = np.clip((np.arange(out_w) + 0.5) * in_w / out_w - 0.5, 0.0, in_w - 1.0)
    r0 = np.floor(rows).astype(np.intp)
    c0 = np.floor(cols).astype(np.intp)
    r1 = np.minimum(r0 + 1, in_h - 1)
    c1 = np.minimum(c0 + 1, in_w - 1)
    wr = (rows - r0)[:, None]
    wc = (cols - c0)[None, :]
    top = img[np.ix_(r0, c0)] * (1.0 - wc) + img[np.ix_(r0, c1)] * wc
    bottom = img[np.ix_(r1, c0)] * (1.0 - wc) + img[np.ix_(r1, c1)] * wc
    out = top * (1.0 - wr) + bottom * wr
    return np.clip(out, 0.0, 1.0)


def normalize(img: np.ndarray) -> np.ndarray:
    """Per-image min-max normalization; a constant image maps to all zeros."""
    img = np.asarray(img, dtype=np.float64)
    if img.size == 0:
        raise ValueError("cannot normalize an empty image")
    lo = img.min()
    hi = img.max()
    if hi == lo:
        return np.zeros_like(img)
    return (img - lo) / (hi - lo)


def sample_patches(img: np.ndarray, m: int, count: int, rng_seed: int) -> np.ndarray:
    """Sample `count` m x m patches at uniform random positions; seeded."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    if m <= 0 or m > h or m > w:
        raise ValueError(f"patch side {m} does not fit image {img.shape}")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    rows = rng.integers(0, h - m + 1, size=count)
    cols = rng.integers(0, w - m + 1, size=count)
    out = np.empty((count, m, m), dtype=np.float64)
    for i, (r, c) in enumerate(zip(rows, cols)):
        out[i] = img[r : r + m, c : c + m]
    return out


def dense_patches(img: np.ndarray, m: int):
    """All stride-1 m x m windows in row-major scan order.

    Returns (patches, centers, positions): patches has shape (n, m, m),
    centers holds the raw intensity at each window's center pixel
    (index m // 2 on both axes) and positions the (row, col) top-left corners.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    if m <= 0 or m > h or m > w:
        raise ValueError(f"patch side {m} does not fit image {img.shape}")
    windows = sliding_window_view(img, (m, m))
    out_h, out_w = windows.shape[:2]
    patches = windows.reshape(out_h * out_w, m, m).copy()
    c = m // 2
    centers = img[c : c + out_h, c : c + out_w].reshape(-1).copy()
    rr, cc = np.meshgrid(np.arange(out_h), np.arange(out_w), indexing="ij")
    positions = np.stack([rr.reshape(-1), cc.reshape(-1)], axis=1)
    return patches, centers, positions


def xcorr_valid(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Valid-mode 2-D cross-correlation (no kernel flip); output unclamped."""
    img = np.asarray(img, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.shape[0] != kernel.shape[1]:
        raise ValueError(f"kernel must be square, got {kernel.shape}")
    if kernel.shape[0] > img.shape[0] or kernel.shape[1] > img.shape[1]:
        raise ValueError(f"kernel {kernel.shape} larger than image {img.shape}")
    return correlate_bank(img, kernel[None])[0]


def preprocess(img: np.ndarray, out_h: int = DEFAULT_RESIZE[0], out_w: int = DEFAULT_RESIZE[1]) -> np.ndarray:
    """Grayscale (if RGB), resize to a fixed dimension, min-max normalize."""
    img = np.asarray(img)
    if img.ndim == 3:
        img = to_grayscale(img)
    return normalize(resize(img, out_h, out_w))


def read_image(path) -> np.ndarray:
    """Read a PNG or PGM file as a [0, 1] grayscale array (8-bit assumed)."""
    with Image.open(path) as im:
        if im.mode in ("RGB", "RGBA", "P"):
            arr = np.asarray(im.convert("RGB"))
            return to_grayscale(arr)
        arr = np.asarray(im.convert("L"))
    return arr.astype(np.float64) / 255.0


def write_image(path, img: np.ndarray) -> None:
    """Write a [0, 1] grayscale array as an 8-bit PNG or PGM file."""
    arr = np.round(np.clip(np.asarray(img), 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path)
