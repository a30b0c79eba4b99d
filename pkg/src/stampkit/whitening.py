"""ZCA whitening of training patches."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WhiteningTransform:
    """Mean vector plus symmetric ZCA matrix; maps raw patches to whitened space."""

    mean: np.ndarray
    matrix: np.ndarray
    epsilon: float

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _as_rows(patches) -> np.ndarray:
    arr = np.asarray(patches, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr.reshape(arr.shape[0], -1)
    if arr.ndim != 2:
        raise ValueError(f"expected (n, d) or (n, m, m) patches, got shape {arr.shape}")
    return arr


def fit_zca(patches, epsilon: float = 0.01) -> WhiteningTransform:
    """Fit a ZCA transform on flattened patches.

    The matrix is U (L + eps I)^(-1/2) U^T from the eigendecomposition of the
    1/(n-1)-normalized covariance of mean-centered patches. Eigenvalues below
    1e-12 are treated as zero, so near-null directions are scaled by
    1/sqrt(eps) rather than dropped.
    """
    x = _as_rows(patches)
    if x.shape[0] < 2:
        raise ValueError("need at least 2 patches to fit whitening")
    if not np.all(np.isfinite(x)):
        raise ValueError("patches contain non-finite values")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    eigvals = np.where(eigvals < 1e-12, 0.0, eigvals)
    scale = 1.0 / np.sqrt(eigvals + epsilon)
    matrix = (eigvecs * scale) @ eigvecs.T
    return WhiteningTransform(mean=mean, matrix=matrix, epsilon=float(epsilon))


def apply(t: WhiteningTransform, patch: np.ndarray) -> np.ndarray:
    """Whiten one patch: matrix @ (patch - mean). Output keeps the input shape."""
    arr = np.asarray(patch, dtype=np.float64)
    flat = arr.reshape(-1)
    if flat.shape[0] != t.dim:
        raise ValueError(f"patch has {flat.shape[0]} values, transform expects {t.dim}")
    out = t.matrix @ (flat - t.mean)
    return out.reshape(arr.shape)


def apply_batch(t: WhiteningTransform, patches) -> np.ndarray:
    """Whiten a stack of patches; returns a (n, d) array."""
    x = _as_rows(patches)
    if x.shape[1] != t.dim:
        raise ValueError(f"patches have {x.shape[1]} values, transform expects {t.dim}")
    return (x - t.mean) @ t.matrix.T


def identity(dim: int) -> WhiteningTransform:
    """No-op transform used when filters already live in raw pixel space."""
    return WhiteningTransform(mean=np.zeros(dim), matrix=np.eye(dim), epsilon=1.0)
