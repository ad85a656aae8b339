"""Sparsemax: Euclidean projection onto the probability simplex.

Unlike softmax, the projection can assign exactly zero to low entries,
which is what lets downstream phrase extraction treat the support set as
"the important neighbors".
"""

from __future__ import annotations

import numpy as np


def sparsemax(scores) -> np.ndarray:
    """Project a score vector onto the simplex {p : p >= 0, sum(p) = 1}.

    Uses the sort-and-threshold algorithm: find the largest support size
    k such that the top-k entries stay positive after subtracting the
    common threshold tau = (sum(top k) - 1) / k, then clip at zero.
    """
    z = np.asarray(scores, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("sparsemax expects a non-empty 1-d vector")
    if not np.all(np.isfinite(z)):
        raise ValueError("sparsemax expects finite scores")

    z_sorted = np.sort(z)[::-1]
    cumsum = np.cumsum(z_sorted)
    ks = np.arange(1, z.size + 1)
    in_support = 1.0 + ks * z_sorted > cumsum
    k = int(ks[in_support][-1])
    tau = (cumsum[k - 1] - 1.0) / k
    return np.maximum(z - tau, 0.0)
