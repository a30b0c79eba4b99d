"""Verification features: correlate, 1-of-K max-assignment encode, pool.

Encoding keeps the raw winning response at each position (no rectification);
ties go to the lowest filter index. Pooling splits each map into a 4x4 grid
of near-equal cells, remainder pixels going to the trailing cells, and takes
per-cell maxima. The final vector concatenates maps in filter order, cells in
row-major order, for a length of 16 * v.
"""

import numpy as np

from stampkit.dictionary import RankedDictionary, composed_filters
from stampkit.kernels import correlate_bank

POOL_GRID = 4


def encode(img: np.ndarray, rd: RankedDictionary) -> np.ndarray:
    """Encoded response maps of shape (v, H-m+1, W-m+1), one-hot per position."""
    img = np.asarray(img, dtype=np.float64)
    m = rd.atom_side
    if m > img.shape[0] or m > img.shape[1]:
        raise ValueError(f"image {img.shape} smaller than filter side {m}")
    filters, offsets = composed_filters(rd)
    resp = correlate_bank(img, filters) + offsets[:, None, None]
    winners = np.argmax(resp, axis=0)
    mask = np.arange(resp.shape[0])[:, None, None] == winners[None]
    return np.where(mask, resp, 0.0)


def _cell_edges(n: int) -> np.ndarray:
    base, rem = divmod(n, POOL_GRID)
    sizes = [base] * (POOL_GRID - rem) + [base + 1] * rem
    return np.concatenate([[0], np.cumsum(sizes)])


def quadrant_max_pool(maps: np.ndarray) -> np.ndarray:
    """Per-cell maxima over a 4x4 split of every map, concatenated."""
    maps = np.asarray(maps, dtype=np.float64)
    if maps.ndim != 3:
        raise ValueError(f"expected (v, h, w) maps, got shape {maps.shape}")
    v, h, w = maps.shape
    if h < POOL_GRID or w < POOL_GRID:
        raise ValueError(f"maps of {h}x{w} too small for a {POOL_GRID}x{POOL_GRID} grid")
    re = _cell_edges(h)
    ce = _cell_edges(w)
    out = np.empty((v, POOL_GRID, POOL_GRID), dtype=np.float64)
    for i in range(POOL_GRID):
        for j in range(POOL_GRID):
            out[:, i, j] = maps[:, re[i] : re[i + 1], ce[j] : ce[j + 1]].max(axis=(1, 2))
    return out.reshape(v * POOL_GRID * POOL_GRID)


def extract(img: np.ndarray, rd: RankedDictionary) -> np.ndarray:
    """Feature vector of length 16 * v for a preprocessed image."""
    return quadrant_max_pool(encode(img, rd))
