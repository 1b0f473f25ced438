"""Jacobi eigensolver checked against numpy.linalg.eigh."""

import numpy as np
import numpy.testing as npt
import pytest

from fcgrasp.symeig import jacobi_eigh, min_eigpair


def random_symmetric(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) * scale
    return 0.5 * (a + a.T)


class TestJacobiEigh:
    def test_diagonal(self):
        w, v = jacobi_eigh(np.diag([3.0, 1.0, 2.0]))
        npt.assert_allclose(w, [1.0, 2.0, 3.0])
        npt.assert_allclose(np.abs(v), np.eye(3)[:, [1, 2, 0]], atol=1e-12)

    def test_zero_matrix(self):
        w, v = jacobi_eigh(np.zeros((4, 4)))
        npt.assert_array_equal(w, np.zeros(4))
        npt.assert_array_equal(v, np.eye(4))

    @pytest.mark.parametrize("n", [2, 3, 6, 8])
    def test_matches_lapack(self, n):
        rng = np.random.default_rng(100 + n)
        for _ in range(50):
            a = random_symmetric(rng, n, scale=rng.uniform(0.1, 10))
            w, v = jacobi_eigh(a)
            w_ref = np.linalg.eigvalsh(a)
            npt.assert_allclose(w, w_ref, rtol=1e-10, atol=1e-10)
            # Eigenvector residuals and orthonormality.
            npt.assert_allclose(a @ v, v * w, atol=1e-9)
            npt.assert_allclose(v.T @ v, np.eye(n), atol=1e-10)

    def test_psd_gram(self):
        rng = np.random.default_rng(77)
        g = rng.normal(size=(6, 9))
        a = g @ g.T
        w, _ = jacobi_eigh(a)
        assert np.all(w >= -1e-10)
        npt.assert_allclose(w, np.linalg.eigvalsh(a), atol=1e-9)

    def test_min_eigpair(self):
        a = np.diag([5.0, -2.0, 7.0])
        lam, vec = min_eigpair(a)
        assert lam == pytest.approx(-2.0)
        npt.assert_allclose(np.abs(vec), [0, 1, 0], atol=1e-12)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            jacobi_eigh(np.zeros((2, 3)))
