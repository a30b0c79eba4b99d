"""Dictionary learning over whitened patches, atom ranking, subset selection.

Atoms are K-means centroids in whitened patch space. Ranking scores each atom
by its maximum rectified response on a stamp image, weighted toward dark ink:
response = (1 - center intensity) * max(0, atom . whitened window). The score
is computed convolutionally: atoms are pulled back to raw pixel space through
the whitening matrix so a single valid correlation over the raw image yields
the whitened-space dot products.
"""

from dataclasses import dataclass

import numpy as np

from stampkit.kernels import correlate_bank
from stampkit.whitening import WhiteningTransform


@dataclass(frozen=True)
class Dictionary:
    """K learned atoms, unit-norm rows of shape (k, atom_side**2)."""

    atom_side: int
    atoms: np.ndarray

    @property
    def k(self) -> int:
        return self.atoms.shape[0]


@dataclass(frozen=True)
class AtomScores:
    """Per-atom peak responses plus the descending-order permutation."""

    scores: np.ndarray
    rank: np.ndarray


@dataclass(frozen=True)
class RankedDictionary:
    """Dictionary + scores + selected subset size + the whitening it lives in."""

    dictionary: Dictionary
    scores: AtomScores
    v: int
    whitening: WhiteningTransform

    def __post_init__(self):
        if not (1 <= self.v <= self.dictionary.k):
            raise ValueError(f"v={self.v} out of range for k={self.dictionary.k}")

    @property
    def atom_side(self) -> int:
        return self.dictionary.atom_side

    def selected_atoms(self) -> np.ndarray:
        return self.dictionary.atoms[self.scores.rank[: self.v]]


def _plus_plus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    return centers


def _assign(x: np.ndarray, centers: np.ndarray):
    # Squared distances via the expansion ||x||^2 - 2 x.c + ||c||^2.
    d2 = (
        np.sum(x * x, axis=1)[:, None]
        - 2.0 * (x @ centers.T)
        + np.sum(centers * centers, axis=1)[None, :]
    )
    labels = np.argmin(d2, axis=1)
    return labels, np.maximum(d2[np.arange(x.shape[0]), labels], 0.0)


def _lloyd(x: np.ndarray, k: int, max_iters: int, rng: np.random.Generator):
    """K-means++ seeded Lloyd iterations; returns (centers, sse history)."""
    centers = _plus_plus_init(x, k, rng)
    history = []
    prev = None
    for _ in range(max_iters):
        labels, d2 = _assign(x, centers)
        history.append(float(d2.sum()))
        if prev is not None and np.array_equal(labels, prev):
            break
        for j in range(k):
            members = labels == j
            if members.any():
                centers[j] = x[members].mean(axis=0)
        # Empty clusters grab the point currently farthest from its centroid.
        _, d2_new = _assign(x, centers)
        for j in range(k):
            if not (labels == j).any():
                far = int(np.argmax(d2_new))
                centers[j] = x[far]
                d2_new[far] = 0.0
        prev = labels
    _, d2 = _assign(x, centers)
    history.append(float(d2.sum()))
    return centers, history


def kmeans(patches, k: int, max_iters: int = 100, rng_seed: int = 0) -> Dictionary:
    """Cluster whitened patches into k unit-norm dictionary atoms."""
    x = np.asarray(patches, dtype=np.float64)
    side = None
    if x.ndim == 3:
        side = x.shape[1]
        x = x.reshape(x.shape[0], -1)
    if x.ndim != 2:
        raise ValueError(f"expected (n, d) or (n, m, m) patches, got {x.shape}")
    if side is None:
        side = int(round(np.sqrt(x.shape[1])))
        if side * side != x.shape[1]:
            raise ValueError(f"patch length {x.shape[1]} is not a square")
    if k < 1 or k > x.shape[0]:
        raise ValueError(f"k={k} invalid for {x.shape[0]} patches")
    rng = np.random.default_rng(rng_seed)
    centers, _ = _lloyd(x, k, max_iters, rng)
    norms = np.linalg.norm(centers, axis=1)
    centers = centers / np.where(norms > 0, norms, 1.0)[:, None]
    return Dictionary(atom_side=side, atoms=centers)


def compose_filters(atoms: np.ndarray, t: WhiteningTransform, side: int):
    """Pull atoms back into raw pixel space.

    Returns (filters, offsets) with filters of shape (n, side, side). For a raw
    window y, correlate(y, filter_j) + offset_j equals atom_j . whiten(y), so
    downstream code correlates raw images directly.
    """
    flat = atoms @ t.matrix  # matrix is symmetric: W^T D_j rows
    offsets = -flat @ t.mean
    return flat.reshape(atoms.shape[0], side, side), offsets


def composed_filters(rd: RankedDictionary):
    """Raw-space filters and offsets for the selected top-v atoms."""
    return compose_filters(rd.selected_atoms(), rd.whitening, rd.atom_side)


def atom_response_maps(atoms: np.ndarray, t: WhiteningTransform, side: int, img: np.ndarray) -> np.ndarray:
    """Ink-weighted rectified response of each atom at every window position.

    map[j, p] = (1 - img[center of window p]) * max(0, atom_j . whiten(window p)),
    computed as correlation + ReLU + pixel-wise multiply by the inverted image
    sampled on the valid-response grid.
    """
    img = np.asarray(img, dtype=np.float64)
    if side > img.shape[0] or side > img.shape[1]:
        raise ValueError(f"image {img.shape} smaller than atom side {side}")
    filters, offsets = compose_filters(atoms, t, side)
    resp = correlate_bank(img, filters) + offsets[:, None, None]
    np.maximum(resp, 0.0, out=resp)
    c = side // 2
    out_h, out_w = resp.shape[1:]
    centers = img[c : c + out_h, c : c + out_w]
    resp *= (1.0 - centers)[None]
    return resp


def rank_atoms(d: Dictionary, t: WhiteningTransform, ranking_images) -> AtomScores:
    """Score atoms by peak weighted response, averaged over the ranking images.

    Accepts a single image or a sequence; one image matches the usual setup.
    Ties in the descending rank break toward the lower atom index.
    """
    if isinstance(ranking_images, np.ndarray) and ranking_images.ndim == 2:
        ranking_images = [ranking_images]
    if len(ranking_images) == 0:
        raise ValueError("need at least one ranking image")
    totals = np.zeros(d.k, dtype=np.float64)
    for img in ranking_images:
        maps = atom_response_maps(d.atoms, t, d.atom_side, img)
        totals += maps.reshape(d.k, -1).max(axis=1)
    scores = totals / len(ranking_images)
    rank = np.argsort(-scores, kind="stable")
    return AtomScores(scores=scores, rank=rank)


def select_subset(scores: AtomScores, tau: float = 0.33) -> int:
    """Number of atoms whose score reaches tau times the best score."""
    s = scores.scores
    if s.size == 0:
        raise ValueError("empty score vector")
    if not (0.0 < tau <= 1.0):
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    v = int(np.count_nonzero(s >= tau * s.max()))
    return max(v, 1)
