"""Affinity fusion over layers and normalized spectral clustering."""

import numpy as np
from sklearn.cluster import KMeans

NORM_FLOOR = 1e-12


def layer_cosine(Z_t):
    """Pairwise cosine similarity between columns; zero columns give 0."""
    norms = np.linalg.norm(Z_t, axis=0)
    ok = norms >= NORM_FLOOR
    U = np.zeros_like(Z_t)
    U[:, ok] = Z_t[:, ok] / norms[ok]
    G = U.T @ U
    return 0.5 * (G + G.T)


def fuse_affinity(Zs, n_s):
    """Layer-averaged cosine affinity between target coefficient columns.

    The target block of each ``Z`` is its columns from ``n_s`` on. The
    diagonal is set to 1.
    """
    if not Zs:
        raise ValueError("need at least one coefficient matrix")
    shape = Zs[0].shape
    if any(Z.shape != shape for Z in Zs):
        raise ValueError("coefficient matrices must share one shape")
    if not 0 <= n_s < shape[1]:
        raise ValueError(f"n_s={n_s} leaves no target columns in a {shape} matrix")
    A = np.zeros((shape[1] - n_s, shape[1] - n_s))
    for Z in Zs:
        A += layer_cosine(np.asarray(Z)[:, n_s:])
    A /= len(Zs)
    np.fill_diagonal(A, 1.0)
    return A


def spectral_embedding(A, k):
    """Bottom-``k`` eigenpairs of ``I - D^-1/2 A D^-1/2``, rows normalized."""
    deg = np.maximum(A.sum(axis=1), NORM_FLOOR)
    inv_sqrt = 1.0 / np.sqrt(deg)
    L_sym = np.eye(A.shape[0]) - inv_sqrt[:, None] * A * inv_sqrt[None, :]
    L_sym = 0.5 * (L_sym + L_sym.T)
    vals, vecs = np.linalg.eigh(L_sym)
    V = vecs[:, :k]
    norms = np.linalg.norm(V, axis=1)
    nz = norms > 0
    V[nz] /= norms[nz, None]
    return V, vals[:k]


def normalized_cuts(A, k, seed=0):
    """Normalized spectral clustering of a symmetric nonnegative affinity."""
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if not 2 <= k <= n:
        raise ValueError(f"cluster count k={k} must lie in [2, {n}]")
    V, _ = spectral_embedding(A, k)
    km = KMeans(n_clusters=k, init="k-means++", n_init=10, max_iter=100, random_state=seed)
    return km.fit_predict(V).astype(np.int64)
