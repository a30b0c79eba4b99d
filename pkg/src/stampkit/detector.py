"""Stamp localization on full document pages.

The page is correlated with the selected filters, responses are rectified and
ink-weighted, and the per-filter maps are averaged. A moving-window sum over
the averaged map (via a summed-area table) locates the stamp region, and a
local threshold inside that window tightens it to a bounding box.
"""

from dataclasses import dataclass

import numpy as np

from stampkit.dictionary import RankedDictionary, atom_response_maps
from stampkit.imaging import BoundingBox


@dataclass(frozen=True)
class DetectionResult:
    box: BoundingBox
    response_peak: float
    window_origin: tuple[int, int]  # (row, col) of the search window, page coords


def response_map(img: np.ndarray, rd: RankedDictionary) -> np.ndarray:
    """Average ink-weighted rectified response of the top-v filters."""
    maps = atom_response_maps(rd.selected_atoms(), rd.whitening, rd.atom_side, img)
    return maps.mean(axis=0)


def locate_window(rmap: np.ndarray, win_h: int, win_w: int):
    """Origin of the window with maximal response sum, plus that sum.

    Uses a summed-area table so cost does not depend on the window size.
    Ties resolve to the topmost, then leftmost origin.
    """
    rmap = np.asarray(rmap, dtype=np.float64)
    h, w = rmap.shape
    if win_h <= 0 or win_w <= 0 or win_h > h or win_w > w:
        raise ValueError(f"window {(win_h, win_w)} does not fit map {rmap.shape}")
    sat = np.zeros((h + 1, w + 1), dtype=np.float64)
    sat[1:, 1:] = np.cumsum(np.cumsum(rmap, axis=0), axis=1)
    n_r = h - win_h + 1
    n_c = w - win_w + 1
    sums = sat[win_h:, win_w:] - sat[:n_r, win_w:] - sat[win_h:, :n_c] + sat[:n_r, :n_c]
    flat = int(np.argmax(sums))
    origin = (flat // sums.shape[1], flat % sums.shape[1])
    return origin, float(sums[origin])


def refine_box(
    rmap: np.ndarray,
    origin: tuple[int, int],
    win_h: int,
    win_w: int,
    theta: float = 0.3,
    patch_side: int = 16,
    image_shape=None,
) -> BoundingBox:
    """Tight box around super-threshold response inside the located window.

    Thresholds at theta times the in-window maximum and maps the result back
    to page coordinates through the valid-correlation center offset. An empty
    super-threshold set returns the window itself.
    """
    rmap = np.asarray(rmap, dtype=np.float64)
    r, c = origin
    if not (0.0 < theta < 1.0):
        raise ValueError(f"theta must be in (0, 1), got {theta}")
    if r < 0 or c < 0 or r + win_h > rmap.shape[0] or c + win_w > rmap.shape[1]:
        raise ValueError("window falls outside the response map")
    sub = rmap[r : r + win_h, c : c + win_w]
    peak = sub.max()
    off = patch_side // 2
    if peak > 0:
        mask = sub >= theta * peak
        rows = np.flatnonzero(mask.any(axis=1))
        cols = np.flatnonzero(mask.any(axis=0))
        y0, y1 = r + rows[0], r + rows[-1] + 1
        x0, x1 = c + cols[0], c + cols[-1] + 1
    else:
        y0, y1, x0, x1 = r, r + win_h, c, c + win_w
    box = BoundingBox(x0=int(x0 + off), y0=int(y0 + off), x1=int(x1 + off), y1=int(y1 + off))
    if image_shape is not None:
        h, w = image_shape
        box = BoundingBox(
            x0=min(box.x0, w - 1),
            y0=min(box.y0, h - 1),
            x1=min(box.x1, w),
            y1=min(box.y1, h),
        )
    return box


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; disjoint boxes give 0."""
    ix = max(0, min(a.x1, b.x1) - max(a.x0, b.x0))
    iy = max(0, min(a.y1, b.y1) - max(a.y0, b.y0))
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union if union > 0 else 0.0


def detect(
    img: np.ndarray,
    rd: RankedDictionary,
    window_frac: tuple[float, float] = (0.45, 0.55),
    theta: float = 0.3,
    lower_half_only: bool = False,
) -> DetectionResult:
    """Full localization pipeline for one page.

    A response peak of 0 means no stamp-like structure was found; the box then
    degenerates to the tie-break window. window_frac gives the moving-window
    size as (height, width) fractions of the page.
    """
    img = np.asarray(img, dtype=np.float64)
    rmap = response_map(img, rd)
    h, w = img.shape
    m = rd.atom_side
    search = rmap
    row_shift = 0
    if lower_half_only:
        row_shift = max(0, h // 2 - m // 2)
        row_shift = min(row_shift, rmap.shape[0] - 1)
        search = rmap[row_shift:]
    win_h = min(max(1, int(round(window_frac[0] * h))), search.shape[0])
    win_w = min(max(1, int(round(window_frac[1] * w))), search.shape[1])
    (r, c), _ = locate_window(search, win_h, win_w)
    r += row_shift
    box = refine_box(rmap, (r, c), win_h, win_w, theta=theta, patch_side=m, image_shape=img.shape)
    peak = float(rmap[r : r + win_h, c : c + win_w].max())
    return DetectionResult(box=box, response_peak=peak, window_origin=(r + m // 2, c + m // 2))
