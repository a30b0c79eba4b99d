"""Seeded synthetic document pages with exact stamp ground truth.

Pages imitate scanned certificates: a light background, gray simulated text
lines, and a dark ring-shaped stamp (with an emblem blob and arced dots) in
the lower half. Degradations cover fading, additive Gaussian noise, and a
downscale-upscale pass for low-resolution scans. Every sample is a pure
function of its spec, so a seed pins the page bit-exactly.
"""

import csv
import hashlib
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from stampkit.imaging import BoundingBox, resize, write_image

SHAPES = ("circle", "ellipse", "double-ring")


@dataclass(frozen=True)
class SynthSpec:
    page_h: int = 300
    page_w: int = 200
    shape: str = "random"  # one of SHAPES or "random"
    ink_range: tuple = (0.15, 0.45)
    background_range: tuple = (0.90, 0.98)
    text_density: float = 0.5
    noise: float = 0.03
    fade: float = 0.2
    lowres_factor: float = 1.0
    radius_range: tuple = (30.0, 45.0)
    placement: str = "lower"  # "lower" or "full"
    rng_seed: int = 0

    def __post_init__(self):
        if self.ink_range[1] >= self.background_range[0]:
            raise ValueError("ink intensity must stay below the background intensity")
        if not (0.0 <= self.fade <= 1.0):
            raise ValueError("fade must be in [0, 1]")
        if self.noise < 0:
            raise ValueError("noise must be non-negative")
        if not (0.0 < self.lowres_factor <= 1.0):
            raise ValueError("lowres_factor must be in (0, 1]")
        if self.shape != "random" and self.shape not in SHAPES:
            raise ValueError(f"unknown stamp shape {self.shape!r}")
        if self.placement not in ("lower", "full"):
            raise ValueError(f"unknown placement {self.placement!r}")


@dataclass(frozen=True)
class SynthSample:
    page: np.ndarray
    box: BoundingBox | None
    label: str


def _draw_text_lines(page, rng, density, top, bottom):
    h, w = page.shape
    y = top
    while y < bottom - 2:
        if rng.uniform() < density:
            level = rng.uniform(0.45, 0.65)
            x = int(rng.integers(6, 16))
            while x < w - 10:
                word = int(rng.integers(8, 28))
                end = min(x + word, w - 6)
                page[y : y + 2, x:end] = level
                x = end + int(rng.integers(3, 10))
        y += int(rng.integers(10, 14))


def _stamp_mask(shape, h, w, cy, cx, radius, rng):
    yy, xx = np.ogrid[:h, :w]
    dy = yy - cy
    dx = xx - cx
    thick = float(rng.uniform(3.0, 6.0))

    def ellipse_inside(a, b):
        return (dx / a) ** 2 + (dy / b) ** 2 <= 1.0

    if shape == "ellipse":
        a, b = radius, radius * float(rng.uniform(0.65, 0.9))
    else:
        a = b = radius
    mask = ellipse_inside(a, b) & ~ellipse_inside(max(a - thick, 1.0), max(b - thick, 1.0))
    if shape == "double-ring":
        a2, b2 = 0.78 * a, 0.78 * b
        mask |= ellipse_inside(a2, b2) & ~ellipse_inside(max(a2 - thick, 1.0), max(b2 - thick, 1.0))
    # Central emblem blob.
    emblem = 0.22 * min(a, b)
    mask |= dx * dx + dy * dy <= emblem * emblem
    # Arced dots standing in for circular text between emblem and ring.
    n_dots = int(rng.integers(10, 18))
    angles = rng.uniform(0.0, 2.0 * np.pi, n_dots)
    dot_r = rng.uniform(1.0, 2.2, n_dots)
    for ang, dr in zip(angles, dot_r):
        dcy = cy + 0.55 * b * np.sin(ang)
        dcx = cx + 0.55 * a * np.cos(ang)
        mask |= (yy - dcy) ** 2 + (xx - dcx) ** 2 <= dr * dr
    return mask


def gen_stamp_page(spec: SynthSpec) -> SynthSample:
    """Render one page with a stamp; the returned box tightly bounds its ink."""
    rng = np.random.default_rng(spec.rng_seed)
    h, w = spec.page_h, spec.page_w
    bg = float(rng.uniform(*spec.background_range))
    ink = float(rng.uniform(*spec.ink_range))
    page = np.full((h, w), bg, dtype=np.float64)
    _draw_text_lines(page, rng, spec.text_density, top=10, bottom=h - 10)

    shape = spec.shape
    if shape == "random":
        shape = SHAPES[int(rng.integers(len(SHAPES)))]
    radius = float(rng.uniform(*spec.radius_range))
    pad = 8
    row_lo = h // 2 if spec.placement == "lower" else 0
    cy_min = row_lo + int(np.ceil(radius)) + pad
    cy_max = h - int(np.ceil(radius)) - pad
    cx_min = int(np.ceil(radius)) + pad
    cx_max = w - int(np.ceil(radius)) - pad
    if cy_min > cy_max or cx_min > cx_max:
        raise ValueError("stamp does not fit inside the placement region")
    cy = int(rng.integers(cy_min, cy_max + 1))
    cx = int(rng.integers(cx_min, cx_max + 1))

    mask = _stamp_mask(shape, h, w, cy, cx, radius, rng)
    ink_eff = (1.0 - spec.fade) * ink + spec.fade * bg
    page[mask] = ink_eff

    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    box = BoundingBox(x0=int(cols[0]), y0=int(rows[0]), x1=int(cols[-1] + 1), y1=int(rows[-1] + 1))

    page = _degrade(page, spec, rng)
    return SynthSample(page=page, box=box, label="stamp")


def _degrade(page, spec, rng):
    if spec.lowres_factor < 1.0:
        h, w = page.shape
        small_h = max(4, int(round(h * spec.lowres_factor)))
        small_w = max(4, int(round(w * spec.lowres_factor)))
        page = resize(resize(page, small_h, small_w), h, w)
    if spec.noise > 0:
        page = page + rng.normal(0.0, spec.noise, page.shape)
    return np.clip(page, 0.0, 1.0)


def gen_negative(spec: SynthSpec) -> SynthSample:
    """Crop a non-stamp sample: text, plain background, or a document border."""
    rng = np.random.default_rng(spec.rng_seed)
    h, w = spec.page_h, spec.page_w
    bg = float(rng.uniform(*spec.background_range))
    page = np.full((h, w), bg, dtype=np.float64)
    kind = ("text", "background", "border")[int(rng.integers(3))]
    if kind == "text":
        _draw_text_lines(page, rng, max(spec.text_density, 0.5), top=10, bottom=h // 2)
    elif kind == "border":
        inset = int(rng.integers(4, 10))
        level = float(rng.uniform(*spec.ink_range))
        t = 2
        page[inset : inset + t, inset : w - inset] = level
        page[inset : h // 2, inset : inset + t] = level
        page[inset : h // 2, w - inset - t : w - inset] = level

    ch = int(rng.integers(50, min(90, h // 2 - 12) + 1))
    cw = int(rng.integers(60, min(110, w - 12) + 1))
    if kind == "border":
        r0, c0 = 0, 0
    else:
        r0 = int(rng.integers(4, max(5, h // 2 - ch)))
        c0 = int(rng.integers(4, max(5, w - cw - 4)))
    crop = page[r0 : r0 + ch, c0 : c0 + cw]
    crop = _degrade(crop, spec, rng)
    return SynthSample(page=crop, box=None, label="non-stamp")


def _child_seed(*parts) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _jitter_box(box: BoundingBox, page_h: int, page_w: int, jitter: int, rng) -> BoundingBox:
    if jitter <= 0:
        return box
    d = rng.integers(-jitter, jitter + 1, size=4)
    x0 = max(0, box.x0 + int(d[0]))
    y0 = max(0, box.y0 + int(d[1]))
    x1 = min(page_w, box.x1 + int(d[2]))
    y1 = min(page_h, box.y1 + int(d[3]))
    if x1 - x0 < 8 or y1 - y0 < 8:
        return box
    return BoundingBox(x0=x0, y0=y0, x1=x1, y1=y1)


def gen_dataset(
    n_pos: int,
    n_neg: int,
    template: SynthSpec,
    rng_seed: int,
    out_dir,
    box_jitter: int = 4,
) -> Path:
    """Write n_pos stamp pages and n_neg non-stamp crops plus a CSV manifest.

    Positive rows carry the stamp box (optionally jittered to mimic loose
    human markings); negative rows leave the box columns empty. Returns the
    manifest path. Paths inside the manifest are relative to its directory.
    """
    if n_pos < 1 or n_neg < 1:
        raise ValueError("need at least one sample of each class")
    out_dir = Path(out_dir)
    img_dir = out_dir / "images"
    img_dir.mkdir(parents=True, exist_ok=True)
    mark_rng = np.random.default_rng(_child_seed(rng_seed, 99))
    rows = []
    for i in range(n_pos):
        spec = replace(template, rng_seed=_child_seed(rng_seed, 0, i))
        sample = gen_stamp_page(spec)
        name = f"images/stamp_{i:05d}.png"
        write_image(out_dir / name, sample.page)
        box = _jitter_box(sample.box, spec.page_h, spec.page_w, box_jitter, mark_rng)
        rows.append((name, "stamp", box.x0, box.y0, box.x1, box.y1))
    for i in range(n_neg):
        spec = replace(template, rng_seed=_child_seed(rng_seed, 1, i))
        sample = gen_negative(spec)
        name = f"images/nonstamp_{i:05d}.png"
        write_image(out_dir / name, sample.page)
        rows.append((name, "non-stamp", "", "", "", ""))
    manifest = out_dir / "manifest.csv"
    write_manifest(manifest, rows)
    return manifest


@dataclass(frozen=True)
class ManifestRow:
    path: Path
    label: str
    box: BoundingBox | None


def write_manifest(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "label", "x0", "y0", "x1", "y1"])
        writer.writerows(rows)


def read_manifest(path) -> list[ManifestRow]:
    """Parse a manifest CSV; image paths resolve relative to the manifest."""
    path = Path(path)
    base = path.parent
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            box = None
            if rec["x0"] not in ("", None):
                box = BoundingBox(
                    x0=int(rec["x0"]), y0=int(rec["y0"]), x1=int(rec["x1"]), y1=int(rec["y1"])
                )
            out.append(ManifestRow(path=base / rec["path"], label=rec["label"], box=box))
    if not out:
        raise ValueError(f"manifest {path} has no rows")
    return out


def manifest_sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()
