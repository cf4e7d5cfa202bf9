import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdms.hsic import centering_matrix, diversity_kernel, hsic_linear, mean_pairwise_diversity


def literal_hsic(Za, Zb):
    """Element-wise (n-1)^-2 tr(K1 H K2 H) with explicit loops."""
    n = Za.shape[1]
    K1 = np.array([[Za[:, i] @ Za[:, j] for j in range(n)] for i in range(n)])
    K2 = np.array([[Zb[:, i] @ Zb[:, j] for j in range(n)] for i in range(n)])
    H = np.array([[(1.0 if i == j else 0.0) - 1.0 / n for j in range(n)] for i in range(n)])
    total = 0.0
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    total += K1[a, b] * H[b, c] * K2[c, d] * H[d, a]
    return total / (n - 1) ** 2


def test_centering_n2():
    np.testing.assert_array_equal(centering_matrix(2), [[0.5, -0.5], [-0.5, 0.5]])


@pytest.mark.parametrize("n", [2, 3, 7, 50])
def test_centering_properties(n):
    M = centering_matrix(n)
    assert np.abs(M @ np.ones(n)).max() < 1e-12
    assert np.abs(M @ M - M).max() < 1e-12
    assert np.array_equal(M, M.T)


def test_centering_rejects_small_n():
    with pytest.raises(ValueError):
        centering_matrix(1)


def test_hsic_identity_pair():
    I = np.eye(2)
    assert hsic_linear(I, I) == pytest.approx(1.0, abs=1e-15)


def test_hsic_constant_columns(rng):
    Za = rng.standard_normal((3, 6))
    Zb = np.tile(rng.standard_normal((4, 1)), (1, 6))
    assert abs(hsic_linear(Za, Zb)) < 1e-12


def test_hsic_mismatch():
    with pytest.raises(ValueError):
        hsic_linear(np.ones((2, 3)), np.ones((2, 4)))


def test_hsic_matches_literal(rng):
    for _ in range(10):
        Za, Zb = rng.random((3, 6)), rng.random((4, 6))
        assert hsic_linear(Za, Zb) == pytest.approx(literal_hsic(Za, Zb), rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_hsic_symmetry_and_sign(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 12))
    Za = rng.standard_normal((int(rng.integers(1, 6)), n))
    Zb = rng.standard_normal((int(rng.integers(1, 6)), n))
    ab, ba = hsic_linear(Za, Zb), hsic_linear(Zb, Za)
    assert ab == pytest.approx(ba, rel=1e-12, abs=1e-300)
    scale = np.sum(Za * Za) ** 2 + 1.0
    assert hsic_linear(Za, Za) >= -1e-12 * scale


def test_diversity_kernel_single_layer(rng):
    K = diversity_kernel(0, [rng.random((3, 5))])
    np.testing.assert_array_equal(K, np.zeros((5, 5)))


def test_diversity_kernel_two_layers(rng):
    Z0, Z1 = rng.random((3, 5)), rng.random((4, 5))
    M = centering_matrix(5)
    np.testing.assert_allclose(diversity_kernel(0, [Z0, Z1]), M @ Z1.T @ Z1 @ M, atol=1e-12)


def test_diversity_kernel_additive(rng):
    Zs = [rng.random((3, 7)), rng.random((4, 7)), rng.random((2, 7))]
    M = centering_matrix(7)
    expected = M @ Zs[0].T @ Zs[0] @ M + M @ Zs[2].T @ Zs[2] @ M
    K = diversity_kernel(1, Zs)
    np.testing.assert_allclose(K, expected, atol=1e-12)
    assert np.array_equal(K, K.T)
    assert np.linalg.eigvalsh(K).min() > -1e-10


def test_diversity_trace_equals_hsic_sum(rng):
    Zs = [rng.random((5, 9)) for _ in range(3)]
    for l in range(3):
        K = diversity_kernel(l, Zs)
        lhs = np.trace(Zs[l] @ K @ Zs[l].T) / 8**2
        rhs = sum(hsic_linear(Zs[l], Zs[m]) for m in range(3) if m != l)
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_mean_pairwise_diversity(rng):
    Zs = [rng.random((4, 6)) for _ in range(3)]
    M = np.eye(6) - np.ones((6, 6)) / 6
    pairs = [
        np.trace(Zs[l] @ M @ Zs[m].T @ Zs[m] @ M @ Zs[l].T)
        for l in range(3)
        for m in range(3)
        if l != m
    ]
    assert mean_pairwise_diversity(Zs) == pytest.approx(np.mean(pairs), rel=1e-10)
    assert mean_pairwise_diversity(Zs[:1]) == 0.0


def test_diversity_kernel_mismatch():
    with pytest.raises(ValueError):
        diversity_kernel(0, [np.ones((2, 3)), np.ones((2, 4))])
