"""Empirical HSIC with the linear (inner-product) kernel."""

import numpy as np


def centering_matrix(n):
    """``I - 11^T / n``."""
    if n < 2:
        raise ValueError(f"centering matrix needs n >= 2, got {n}")
    return np.eye(n) - np.full((n, n), 1.0 / n)


def _check_same_columns(mats):
    n = mats[0].shape[1]
    for m in mats[1:]:
        if m.shape[1] != n:
            raise ValueError(f"column count mismatch: {n} vs {m.shape[1]}")
    return n


def _center_gram(Z):
    # M (Z^T Z) M without forming M: center the columns of Z first.
    Zc = Z - Z.mean(axis=1, keepdims=True)
    return Zc.T @ Zc


def hsic_linear(Za, Zb):
    """Biased HSIC estimate ``(n-1)^-2 tr(Ka M Kb M)`` with ``K = Z^T Z``.

    The ``(n-1)^-2`` factor is kept here; :func:`diversity_kernel` drops it.
    """
    Za, Zb = np.atleast_2d(Za), np.atleast_2d(Zb)
    n = _check_same_columns([Za, Zb])
    if n < 2:
        raise ValueError("HSIC needs at least two samples")
    # tr(Ka M Kb M) = ||Za M Zb^T||_F^2
    Za_c = Za - Za.mean(axis=1, keepdims=True)
    Zb_c = Zb - Zb.mean(axis=1, keepdims=True)
    cross = Za_c @ Zb_c.T
    return float(np.sum(cross * cross)) / (n - 1) ** 2


def diversity_kernel(layer, Zs):
    """Sum of centred Gram matrices of every layer except ``layer``.

    ``trace(Z K Z^T)`` with this kernel equals the sum of unscaled linear HSIC
    values between ``Z`` and the other layers; no ``(n-1)^-2`` factor.
    """
    Zs = [np.atleast_2d(Z) for Z in Zs]
    n = _check_same_columns(Zs)
    K = np.zeros((n, n))
    for m, Z in enumerate(Zs):
        if m != layer:
            K += _center_gram(Z)
    return 0.5 * (K + K.T)


def mean_pairwise_diversity(Zs):
    """Mean of ``tr(Z_l M K_m M Z_l^T)`` over ordered layer pairs ``l != m``."""
    L = len(Zs)
    if L < 2:
        return 0.0
    total = 0.0
    n = Zs[0].shape[1]
    for l in range(L):
        for m in range(L):
            if l != m:
                total += hsic_linear(Zs[l], Zs[m]) * (n - 1) ** 2
    return total / (L * (L - 1))
