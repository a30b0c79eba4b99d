"""Backend selection for the correlation hot loop.

The compiled Cython kernel is preferred when the extension built; otherwise
the numpy path (window view + matmul) is used. Both produce the same maps up
to float summation order.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

try:
    from stampkit._corekernels import correlate_bank as _correlate_bank_compiled
except ImportError:
    _correlate_bank_compiled = None

BACKEND = "compiled" if _correlate_bank_compiled is not None else "numpy"


def correlate_bank_numpy(img: np.ndarray, filters: np.ndarray) -> np.ndarray:
    """Valid-mode correlation of a filter bank, numpy fallback.

    img: (H, W); filters: (n, m, m). Returns (n, H-m+1, W-m+1).
    """
    m = filters.shape[1]
    windows = sliding_window_view(img, (m, m))
    out_h, out_w = windows.shape[:2]
    mat = windows.reshape(out_h * out_w, m * m)
    flat = filters.reshape(filters.shape[0], m * m)
    out = mat @ flat.T
    return np.ascontiguousarray(out.T.reshape(filters.shape[0], out_h, out_w))


def correlate_bank_compiled(img: np.ndarray, filters: np.ndarray) -> np.ndarray:
    """Valid-mode correlation via the compiled kernel. Raises if not built."""
    if _correlate_bank_compiled is None:
        raise RuntimeError("compiled correlation kernel is not available")
    m = filters.shape[1]
    img = np.ascontiguousarray(img, dtype=np.float64)
    flat = np.ascontiguousarray(filters.reshape(filters.shape[0], m * m), dtype=np.float64)
    return _correlate_bank_compiled(img, flat, m)


if BACKEND == "compiled":
    correlate_bank = correlate_bank_compiled
else:
    correlate_bank = correlate_bank_numpy
