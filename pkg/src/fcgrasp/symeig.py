"""Cyclic Jacobi eigendecomposition for small dense symmetric matrices.

The grasp-matrix Gram products handled here are 6x6, far below the size
where LAPACK wins; scalar Python on nested lists beats numpy dispatch
overhead at this scale and keeps the eigenvectors available for the
analytic rank-penalty gradient.
"""

from __future__ import annotations

import math

import numpy as np


def jacobi_eigh(mat, tol: float = 1e-12, max_sweeps: int = 60):
    """Eigenvalues and eigenvectors of a symmetric matrix via cyclic Jacobi.

    Sweeps over all off-diagonal pairs, rotating each entry whose magnitude
    exceeds ``tol`` times the Frobenius norm of the input, until every
    off-diagonal entry is below that threshold.

    Returns ``(w, V)`` with eigenvalues ``w`` ascending and ``V[:, i]`` the
    unit eigenvector for ``w[i]``.
    """
    a_in = np.asarray(mat, dtype=float)
    n = a_in.shape[0]
    if a_in.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {a_in.shape}")
    a = [[float(a_in[i, k]) for k in range(n)] for i in range(n)]
    v = [[1.0 if i == k else 0.0 for k in range(n)] for i in range(n)]

    frob = math.sqrt(sum(x * x for row in a for x in row))
    thresh = tol * frob
    if frob == 0.0:
        return np.zeros(n), np.eye(n)

    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            ap = a[p]
            for q in range(p + 1, n):
                apq = ap[q]
                if -apq > off or apq > off:
                    off = abs(apq)
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if abs(apq) <= thresh:
                    continue
                # Stable rotation angle (Golub & Van Loan 8.4).
                theta = (a[q][q] - a[p][p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                app = a[p][p]
                aqq = a[q][q]
                a[p][p] = app - t * apq
                a[q][q] = aqq + t * apq
                a[p][q] = 0.0
                a[q][p] = 0.0
                for k in range(n):
                    if k != p and k != q:
                        akp = a[k][p]
                        akq = a[k][q]
                        a[k][p] = c * akp - s * akq
                        a[p][k] = a[k][p]
                        a[k][q] = s * akp + c * akq
                        a[q][k] = a[k][q]
                for k in range(n):
                    vkp = v[k][p]
                    vkq = v[k][q]
                    v[k][p] = c * vkp - s * vkq
                    v[k][q] = s * vkp + c * vkq
    else:
        raise RuntimeError("Jacobi eigensolver failed to converge")

    w = np.array([a[i][i] for i in range(n)])
    vecs = np.array(v)
    order = np.argsort(w, kind="stable")
    return w[order], vecs[:, order]


def min_eigpair(mat, tol: float = 1e-12):
    """Smallest eigenvalue of a symmetric matrix and its unit eigenvector."""
    w, vecs = jacobi_eigh(mat, tol=tol)
    return float(w[0]), vecs[:, 0]
