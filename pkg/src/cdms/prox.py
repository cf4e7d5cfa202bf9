"""Column-wise proximal and projection operators."""

from typing import NamedTuple

import numpy as np


class ProxResult(NamedTuple):
    value: np.ndarray
    shrunk_columns: int


def prox_l21(G, t):
    """Proximal map of ``t * ||.||_{2,1}``: group soft-thresholding of columns.

    Columns with norm at most ``t`` become exactly zero; the rest are scaled
    by ``1 - t / ||g_j||``.
    """
    if not t > 0:
        raise ValueError(f"threshold must be positive, got {t}")
    G = np.asarray(G, dtype=np.float64)
    norms = np.sqrt(np.sum(G * G, axis=0))
    keep = norms > t
    scale = np.zeros_like(norms)
    scale[keep] = 1.0 - t / norms[keep]
    return ProxResult(G * scale, int(np.count_nonzero(~keep)))


def project_columns_simplex(Z):
    """Euclidean projection of each column onto ``{v >= 0, sum(v) = 1}``.

    Sort-and-threshold: with ``u`` the column sorted in decreasing order, the
    threshold is ``(sum(u[:r]) - 1) / r`` for the largest ``r`` that keeps
    ``u[r-1]`` above it.
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim == 1:
        return project_columns_simplex(Z[:, None])[:, 0]
    d = Z.shape[0]
    U = -np.sort(-Z, axis=0, kind="stable")
    css = np.cumsum(U, axis=0) - 1.0
    ranks = np.arange(1, d + 1, dtype=np.float64)[:, None]
    cond = U - css / ranks > 0
    # cond is true on a prefix, so the count gives the active size
    r = np.count_nonzero(cond, axis=0)
    theta = css[r - 1, np.arange(Z.shape[1])] / r
    return np.maximum(Z - theta, 0.0)
