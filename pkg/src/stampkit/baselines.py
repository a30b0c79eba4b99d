"""Off-the-shelf filter banks used as comparison points: Gabor and random.

A bank plugs into the same extraction path as a learned dictionary by wrapping
it in a RankedDictionary with an identity whitening transform.
"""

from dataclasses import dataclass, field

import numpy as np

from stampkit import whitening
from stampkit.dictionary import AtomScores, Dictionary, RankedDictionary


@dataclass(frozen=True)
class FilterBank:
    """Unit-norm filters of shape (n, side**2) plus provenance."""

    side: int
    filters: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return self.filters.shape[0]

    def as_ranked_dictionary(self) -> RankedDictionary:
        """Expose the bank through the dictionary interface with v = count."""
        n = self.count
        return RankedDictionary(
            dictionary=Dictionary(atom_side=self.side, atoms=self.filters),
            scores=AtomScores(scores=np.zeros(n), rank=np.arange(n)),
            v=n,
            whitening=whitening.identity(self.side * self.side),
        )


def _finalize(kernels: np.ndarray) -> np.ndarray:
    flat = kernels.reshape(kernels.shape[0], -1)
    flat = flat - flat.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(flat, axis=1)
    return flat / np.where(norms > 0, norms, 1.0)[:, None]


def gabor_bank(m: int, n_scales: int = 8, n_orientations: int = 8) -> FilterBank:
    """Real cosine-phase Gabor kernels on an m x m grid.

    Orientations are uniform over [0, pi); wavelengths run geometrically from
    4 px up to the kernel side; the Gaussian envelope follows a one-octave
    bandwidth with unit aspect ratio. Kernels are zero-meaned and unit-normed.
    """
    if m < 3:
        raise ValueError("kernel side must be at least 3")
    if n_scales < 1 or n_orientations < 1:
        raise ValueError("scale and orientation counts must be >= 1")
    coords = np.arange(m) - (m - 1) / 2.0
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    wavelengths = np.geomspace(4.0, float(m), n_scales)
    thetas = np.arange(n_orientations) * np.pi / n_orientations
    # One-octave bandwidth: sigma/lambda = sqrt(ln 2 / 2) * 3 / pi.
    sigma_ratio = np.sqrt(np.log(2.0) / 2.0) * 3.0 / np.pi
    kernels = np.empty((n_scales * n_orientations, m, m), dtype=np.float64)
    idx = 0
    for lam in wavelengths:
        sigma = sigma_ratio * lam
        envelope_denom = 2.0 * sigma * sigma
        for theta in thetas:
            xr = xx * np.cos(theta) + yy * np.sin(theta)
            yr = -xx * np.sin(theta) + yy * np.cos(theta)
            kernels[idx] = np.exp(-(xr * xr + yr * yr) / envelope_denom) * np.cos(
                2.0 * np.pi * xr / lam
            )
            idx += 1
    return FilterBank(
        side=m,
        filters=_finalize(kernels),
        kind="gabor",
        params={"n_scales": n_scales, "n_orientations": n_orientations},
    )


def random_bank(m: int, count: int, rng_seed: int = 0) -> FilterBank:
    """Seeded standard-normal filters, zero-meaned and unit-normed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    kernels = rng.standard_normal((count, m, m))
    return FilterBank(
        side=m,
        filters=_finalize(kernels),
        kind="random",
        params={"rng_seed": rng_seed},
    )
