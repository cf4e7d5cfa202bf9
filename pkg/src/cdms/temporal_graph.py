"""Sequential-neighbour graph over the concatenated source/target frames."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TemporalGraph:
    """Weights ``S``, degrees ``C`` and Laplacian ``L = C - S``.

    Frame order is all source frames followed by all target frames.
    """

    S: np.ndarray
    C: np.ndarray
    L: np.ndarray
    n_s: int
    n_t: int

    @property
    def n(self):
        return self.n_s + self.n_t

    @property
    def L_s(self):
        return self.L[: self.n_s, : self.n_s]


def _band(n, tau):
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    return (gap > 0) & (gap <= tau)


def build_weight_matrix(n_s, n_t, source_labels, tau):
    """Connect frames at most ``tau`` apart within each domain.

    Source frames are only linked when they share an action label; target
    frames are linked by distance alone. Source and target are never linked.
    """
    if n_s <= 0 or n_t <= 0:
        raise ValueError("both source and target must contain at least one frame")
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    source_labels = np.asarray(source_labels)
    if source_labels.shape != (n_s,):
        raise ValueError(
            f"source_labels has length {source_labels.size}, expected n_s={n_s}"
        )
    n = n_s + n_t
    S = np.zeros((n, n))
    same = source_labels[:, None] == source_labels[None, :]
    S[:n_s, :n_s] = _band(n_s, tau) & same
    S[n_s:, n_s:] = _band(n_t, tau)
    deg = S.sum(axis=1)
    C = np.diag(deg)
    L = C - S
    return TemporalGraph(S=S, C=C, L=L, n_s=n_s, n_t=n_t)


def laplacian_quadratic(M, Lap):
    """``trace(M @ Lap @ M.T)``."""
    M = np.atleast_2d(M)
    if Lap.shape != (M.shape[1], M.shape[1]):
        raise ValueError(
            f"M has {M.shape[1]} columns but Laplacian is {Lap.shape[0]}x{Lap.shape[1]}"
        )
    return float(np.einsum("ij,ij->", M @ Lap, M))
