"""Layer-wise NMF pretraining of a deep factorization ``X ~ D1 D2 ... DL HL``."""

from dataclasses import dataclass

import numpy as np

EPS_DENOM = 1e-12


@dataclass
class LayerStack:
    """Per-layer bases ``D[l]`` (dims[l-1] x dims[l]) and codes ``H[l]``."""

    D: list
    H: list
    dims: tuple

    @property
    def n_layers(self):
        return len(self.dims)

    def copy(self):
        return LayerStack([d.copy() for d in self.D], [h.copy() for h in self.H], self.dims)

    def reconstruct(self, upto=None):
        """``D[0] @ ... @ D[upto-1] @ H[upto-1]``; the full stack by default."""
        upto = self.n_layers if upto is None else upto
        out = self.H[upto - 1]
        for D in reversed(self.D[:upto]):
            out = D @ out
        return out


def nmf_objective(X, D, H):
    R = X - D @ H
    return float(np.sum(R * R))


def nmf_factorize(X, r, iters, seed, *, trace=False):
    """Lee-Seung multiplicative updates for ``min ||X - D H||_F^2``, D, H >= 0.

    Initial factors are uniform on [0.1, 1.1). With ``trace=True`` also returns
    the objective before the first and after every iteration.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a matrix")
    if np.any(X < 0):
        raise ValueError("NMF input must be nonnegative")
    d, n = X.shape
    if not 1 <= r <= min(d, n):
        raise ValueError(f"rank {r} out of range [1, {min(d, n)}]")
    rng = np.random.default_rng(seed)
    D = rng.uniform(0.1, 1.1, size=(d, r))
    H = rng.uniform(0.1, 1.1, size=(r, n))
    history = [nmf_objective(X, D, H)] if trace else None
    for _ in range(iters):
        H *= (D.T @ X) / np.maximum(D.T @ D @ H, EPS_DENOM)
        D *= (X @ H.T) / np.maximum(D @ (H @ H.T), EPS_DENOM)
        if trace:
            history.append(nmf_objective(X, D, H))
    if trace:
        return D, H, history
    return D, H


def pretrain_stack(X, dims, iters, seed):
    """Factorize ``X`` then each successive code matrix, one layer at a time.

    Layer ``l`` is seeded with ``seed + l`` so a one-layer stack equals a plain
    :func:`nmf_factorize` call.
    """
    dims = tuple(int(v) for v in dims)
    Ds, Hs = [], []
    current = np.asarray(X, dtype=np.float64)
    for l, r in enumerate(dims):
        D, H = nmf_factorize(current, r, iters, seed + l)
        Ds.append(D)
        Hs.append(H)
        current = H
    return LayerStack(Ds, Hs, dims)
