import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from splitgibbs.errors import DimensionError
from splitgibbs.operators import (
    CirculantOperator,
    DiagonalOperator,
    GradientOperator,
    IdentityOperator,
    MaskOperator,
    adjoint_apply,
    apply,
    densify,
    divergence,
    gaussian_kernel,
    gradient,
    laplacian_kernel,
)


def brute_circulant(psf):
    """Dense periodic convolution matrix built entry by entry."""
    r, c = psf.shape
    n = r * c
    A = np.zeros((n, n))
    for i in range(r):
        for j in range(c):
            for k in range(r):
                for l in range(c):
                    A[i * c + j, k * c + l] = psf[(i - k) % r, (j - l) % c]
    return A


def brute_gradient_matrix(r, c):
    n = r * c
    D = np.zeros((2 * n, n))
    for i in range(r):
        for j in range(c):
            row = i * c + j
            if j < c - 1:
                D[row, row] = -1.0
                D[row, i * c + j + 1] = 1.0
            if i < r - 1:
                D[n + row, row] = -1.0
                D[n + row, (i + 1) * c + j] = 1.0
    return D


def test_two_point_dft_example():
    a, b = 3.0, -1.5
    H = CirculantOperator(np.array([[a], [b]]))
    np.testing.assert_allclose(H.eigenvalues.ravel(), [a + b, a - b], atol=1e-14)
    np.testing.assert_allclose(H.apply(np.array([[1.0], [0.0]])).ravel(), [a, b], atol=1e-14)


def test_identity_kernel_is_identity():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((5, 7))
    H = CirculantOperator.from_kernel(np.ones((1, 1)), x.shape)
    np.testing.assert_allclose(H.apply(x), x, atol=1e-13)


def test_circulant_matches_brute_force_dense():
    rng = np.random.default_rng(1)
    psf = rng.standard_normal((4, 5))
    H = CirculantOperator(psf)
    A = brute_circulant(psf)
    x = rng.standard_normal((4, 5))
    y = rng.standard_normal((4, 5))
    np.testing.assert_allclose(H.apply(x).ravel(), A @ x.ravel(), rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(H.adjoint(y).ravel(), A.T @ y.ravel(), rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(densify(H), A, atol=1e-12)


def test_adjoint_eigenvalues_are_conjugates():
    rng = np.random.default_rng(2)
    H = CirculantOperator(rng.standard_normal((4, 4)))
    y = rng.standard_normal((4, 4))
    expected = np.real(np.fft.ifft2(np.conj(H.eigenvalues) * np.fft.fft2(y)))
    np.testing.assert_allclose(H.adjoint(y), expected, atol=1e-12)


def test_symmetric_kernel_is_self_adjoint():
    H = CirculantOperator.from_kernel(gaussian_kernel(3, 1.0), (6, 6))
    A = densify(H)
    np.testing.assert_allclose(A, A.T, atol=1e-14)


def test_random_4x4_inner_product_identity():
    rng = np.random.default_rng(3)
    H = CirculantOperator.from_kernel(rng.standard_normal((3, 3)), (4, 4))
    x, y = rng.standard_normal((2, 4, 4))
    assert abs(np.sum(H.apply(x) * y) - np.sum(x * H.adjoint(y))) < 1e-10


def test_translation_equivariance():
    rng = np.random.default_rng(4)
    H = CirculantOperator.from_kernel(rng.standard_normal((3, 3)), (6, 8))
    x = rng.standard_normal((6, 8))
    shifted = np.roll(x, (2, -3), axis=(0, 1))
    np.testing.assert_allclose(H.apply(shifted), np.roll(H.apply(x), (2, -3), axis=(0, 1)), atol=1e-12)


def test_laplacian_annihilates_constants():
    L = CirculantOperator.from_kernel(laplacian_kernel(), (5, 5))
    np.testing.assert_allclose(L.apply(np.full((5, 5), 3.0)), 0.0, atol=1e-12)
    assert abs(L.eigenvalues[0, 0]) < 1e-12


def test_mask_full_is_identity_and_hht():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((3, 4))
    full = MaskOperator(np.arange(12), (3, 4))
    np.testing.assert_array_equal(full.apply(x), x.ravel())
    m = MaskOperator([1, 5, 6, 11], (3, 4))
    y = rng.standard_normal(4)
    np.testing.assert_array_equal(m.apply(m.adjoint(y)), y)
    back = m.adjoint(y).ravel()
    assert np.all(back[[0, 2, 3, 4, 7, 8, 9, 10]] == 0.0)
    D = densify(m)
    np.testing.assert_array_equal(D.T @ D, np.diag(m.diag.ravel()))
    assert set(np.unique(m.diag)) <= {0.0, 1.0}


def test_mask_rejects_duplicates_and_range():
    with pytest.raises(ValueError):
        MaskOperator([1, 1], (2, 2))
    with pytest.raises(ValueError):
        MaskOperator([4], (2, 2))


def test_shape_mismatch_raises():
    H = CirculantOperator.from_kernel(np.ones((1, 1)), (4, 4))
    with pytest.raises(DimensionError):
        apply(H, np.zeros((3, 4)))
    with pytest.raises(DimensionError):
        adjoint_apply(MaskOperator([0], (2, 2)), np.zeros(2))


def test_gradient_examples():
    np.testing.assert_array_equal(gradient(np.full((3, 3), 2.0)), 0.0)
    g = gradient(np.array([[0.0, 1.0], [0.0, 1.0]]))
    np.testing.assert_array_equal(g[0], [[1.0, 0.0], [1.0, 0.0]])
    np.testing.assert_array_equal(g[1], [[0.0, 0.0], [0.0, 0.0]])


def test_gradient_matches_dense_and_divergence_is_negative_adjoint():
    rng = np.random.default_rng(6)
    D = brute_gradient_matrix(3, 3)
    x = rng.standard_normal((3, 3))
    p = rng.standard_normal((2, 3, 3))
    np.testing.assert_allclose(gradient(x).reshape(-1), D @ x.ravel(), atol=1e-14)
    np.testing.assert_allclose(-divergence(p).ravel(), D.T @ p.reshape(-1), atol=1e-12)
    assert abs(np.sum(gradient(x) * p) + np.sum(x * divergence(p))) < 1e-12


@pytest.mark.parametrize("shape", [(1, 5), (5, 1), (1, 1), (2, 3)])
def test_gradient_adjoint_degenerate_lattices(shape):
    rng = np.random.default_rng(7)
    G = GradientOperator(shape)
    D = densify(G)
    np.testing.assert_allclose(D, brute_gradient_matrix(*shape), atol=1e-14)
    p = rng.standard_normal((2,) + shape)
    x = rng.standard_normal(shape)
    assert abs(np.sum(G.apply(x) * p) - np.sum(x * G.adjoint(p))) < 1e-12


@pytest.mark.parametrize("make", [
    lambda rng: CirculantOperator.from_kernel(rng.standard_normal((3, 3)), (4, 4)),
    lambda rng: MaskOperator(np.sort(rng.choice(16, 9, replace=False)), (4, 4)),
    lambda rng: DiagonalOperator(rng.standard_normal((4, 4))),
    lambda rng: IdentityOperator((4, 4)),
    lambda rng: GradientOperator((4, 4)),
])
def test_densified_matrix_reproduces_apply_and_adjoint(make):
    rng = np.random.default_rng(8)
    op = make(rng)
    A = densify(op)
    x = rng.standard_normal(op.in_shape)
    y = rng.standard_normal(op.out_shape)
    np.testing.assert_allclose(np.ravel(apply(op, x)), A @ x.ravel(), atol=1e-10)
    np.testing.assert_allclose(np.ravel(adjoint_apply(op, y)), A.T @ y.ravel(), atol=1e-10)


small_fields = arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)),
                      elements=st.floats(-1e3, 1e3))


@settings(max_examples=50, deadline=None)
@given(small_fields, st.integers(0, 2**32 - 1))
def test_property_gradient_adjoint(x, seed):
    p = np.random.default_rng(seed).standard_normal((2,) + x.shape)
    lhs = np.sum(gradient(x) * p)
    rhs = -np.sum(x * divergence(p))
    assert abs(lhs - rhs) <= 1e-9 * (1.0 + np.abs(x).sum() * np.abs(p).sum())


@settings(max_examples=40, deadline=None)
@given(small_fields, st.integers(0, 2**32 - 1))
def test_property_circulant_linearity_and_finite(x, seed):
    rng = np.random.default_rng(seed)
    H = CirculantOperator(rng.standard_normal(x.shape))
    w = rng.standard_normal(x.shape)
    out = H.apply(2.0 * x - w)
    assert np.all(np.isfinite(out))
    np.testing.assert_allclose(out, 2.0 * H.apply(x) - H.apply(w), atol=1e-8 * (1 + np.abs(x).max()))
