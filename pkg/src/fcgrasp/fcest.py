"""Differentiable force-closure estimator.

Scores a set of contact points on an object by how badly they violate a
relaxed force-closure condition, using the object's inward surface normals
in place of contact forces (zero-friction, equal-magnitude relaxation):

* a rank penalty ``max(0, eps - lambda_min(G G'))`` keeping the grasp
  matrix well conditioned,
* the residual ``||G c||_2`` measuring how far the normals are from
  cancelling as a wrench,
* a weighted sum of absolute surface distances of the contacts.

All three terms are differentiable in the contact positions; the analytic
gradient (including the curvature term through the normals) is exposed
alongside the value.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .symeig import jacobi_eigh

# Below this residual norm the residual term's direction is undefined; the
# gradient uses the zero subgradient there.
_RESIDUAL_EPS = 1e-12
# Contacts within this band of the surface use the zero subgradient of |d|,
# so points that are on the surface up to rounding produce no distance pull.
_SURFACE_EPS = 1e-12


@dataclass(frozen=True)
class FcConfig:
    """Estimator knobs.

    ``epsilon``: rank-penalty floor on the smallest eigenvalue of G G'.
    ``dist_weight``: weight of the contact-to-surface distance term.
    ``delta``: residual threshold carried for reporting only; enforcement
    happens in the sampler's empirical filter, never here.
    """

    epsilon: float = 0.01
    dist_weight: float = 1.0
    delta: float = 0.5

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.dist_weight < 0:
            raise ValueError("dist_weight must be nonnegative")


@dataclass(frozen=True)
class FcBreakdown:
    """Force-closure energy and its three nonnegative components."""

    rank_penalty: float
    residual: float
    dist_sum: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)


class ContactSet:
    """Contact points with friction-cone axes, for oracle interchange."""

    def __init__(self, points, cone_axes, friction: float = 0.5):
        self.points = np.asarray(points, float)
        self.cone_axes = np.asarray(cone_axes, float)
        self.friction = float(friction)
        n = self.points.shape[0]
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError("points must have shape (n, 3)")
        if not 2 <= n <= 1000:
            raise ValueError(f"contact count must be in [2, 1000], got {n}")
        if self.cone_axes.shape != self.points.shape:
            raise ValueError("cone_axes must match points in shape")
        norms = np.linalg.norm(self.cone_axes, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("cone axes must be unit vectors (within 1e-9)")
        if self.friction < 0:
            raise ValueError("friction must be nonnegative")

    def to_json(self) -> str:
        return json.dumps(
            {
                "points": self.points.tolist(),
                "axes": self.cone_axes.tolist(),
                "mu": self.friction,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ContactSet":
        doc = json.loads(text)
        return cls(doc["points"], doc["axes"], doc.get("mu", 0.5))


# ---------------------------------------------------------------------------
# Grasp-matrix algebra
# ---------------------------------------------------------------------------

def skew(x) -> np.ndarray:
    """Antisymmetric matrix of the cross product: skew(x) @ f == cross(x, f)."""
    x = np.asarray(x, float)
    out = np.zeros(x.shape[:-1] + (3, 3))
    out[..., 0, 1] = -x[..., 2]
    out[..., 0, 2] = x[..., 1]
    out[..., 1, 0] = x[..., 2]
    out[..., 1, 2] = -x[..., 0]
    out[..., 2, 0] = -x[..., 1]
    out[..., 2, 1] = x[..., 0]
    return out


def grasp_matrix(points) -> np.ndarray:
    """6 x 3n map from stacked contact forces to the net wrench."""
    pts = np.atleast_2d(np.asarray(points, float))
    n = pts.shape[0]
    g = np.zeros((6, 3 * n))
    for i in range(3):
        g[i, i::3] = 1.0
    g[3:, :] = np.transpose(skew(pts), (1, 0, 2)).reshape(3, 3 * n)
    return g


def rank_penalty(g_matrix: np.ndarray, epsilon: float) -> float:
    """Negative-part smallest eigenvalue of (G G' - eps I), by cyclic Jacobi."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    gram = g_matrix @ g_matrix.T
    w, _ = jacobi_eigh(gram)
    return max(0.0, epsilon - float(w[0]))


def gc_residual(points, cone_axes) -> float:
    """Wrench-space residual ||G c||_2 of the stacked cone axes."""
    pts = np.atleast_2d(np.asarray(points, float))
    axes = np.atleast_2d(np.asarray(cone_axes, float))
    y = _wrench_of(pts, axes)
    return float(np.linalg.norm(y))


def _wrench_of(pts: np.ndarray, axes: np.ndarray) -> np.ndarray:
    return np.concatenate([axes.sum(axis=0), np.cross(pts, axes).sum(axis=0)])


def contact_normals(points, shape):
    """Inward surface normals c_i = -grad d / |grad d| at the given points."""
    pts = np.atleast_2d(np.asarray(points, float))
    g = shape.gradient(pts)
    return -g / np.linalg.norm(g, axis=1, keepdims=True), g


# ---------------------------------------------------------------------------
# Soft-constraint energy and gradient
# ---------------------------------------------------------------------------

def fc_energy(points, shape, cfg: FcConfig = FcConfig()) -> FcBreakdown:
    """Force-closure energy of contact points on an SDF shape.

    Cone axes are the inward normals (pushing direction) computed from the
    shape; the distance term penalizes |d| so contacts off the surface on
    either side are charged.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    c, _ = contact_normals(pts, shape)
    d = np.atleast_1d(shape.distance(pts))
    g_mat = grasp_matrix(pts)
    gram = g_mat @ g_mat.T
    w, _ = jacobi_eigh(gram)
    rank_pen = max(0.0, cfg.epsilon - float(w[0]))
    residual = float(np.linalg.norm(_wrench_of(pts, c)))
    dist_sum = float(np.sum(np.abs(d)))
    total = rank_pen + residual + cfg.dist_weight * dist_sum
    return FcBreakdown(rank_pen, residual, dist_sum, total)


def fc_energy_and_grad(points, shape, cfg: FcConfig = FcConfig()):
    """Energy breakdown plus its analytic gradient wrt each contact point.

    Shares one eigendecomposition between the value and the gradient. The
    gradient composes three pieces:

    * distance term: ``w * sign(d) * grad d`` (zero subgradient on the surface),
    * residual term: d||Gc||/dx through both the grasp matrix and the
      normals, the latter needing the SDF Hessian,
    * rank term: eigenvalue perturbation ``v0' d(GG') v0`` through the
      smallest eigenpair, zero when the penalty is inactive. At eigenvalue
      degeneracy the returned eigenvector defines the subgradient.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    n = pts.shape[0]
    c, g_raw = contact_normals(pts, shape)
    d = np.atleast_1d(shape.distance(pts))
    g_mat = grasp_matrix(pts)
    gram = g_mat @ g_mat.T
    w, vecs = jacobi_eigh(gram)
    rank_pen = max(0.0, cfg.epsilon - float(w[0]))
    y = _wrench_of(pts, c)
    residual = float(np.linalg.norm(y))
    dist_sum = float(np.sum(np.abs(d)))
    total = rank_pen + residual + cfg.dist_weight * dist_sum

    sign_d = np.where(np.abs(d) < _SURFACE_EPS, 0.0, np.sign(d))
    grad = cfg.dist_weight * sign_d[:, None] * g_raw

    if residual > _RESIDUAL_EPS:
        y_f, y_t = y[:3], y[3:]
        norms = np.linalg.norm(g_raw, axis=1)
        nhat = g_raw / norms[:, None]
        hess = shape.hessian(pts)
        proj = np.eye(3) - nhat[:, :, None] * nhat[:, None, :]
        # dc/dx = -(I - n n') H / |grad d|
        c_jac = -np.einsum("nij,njk->nik", proj, hess) / norms[:, None, None]
        lever = y_f - np.cross(pts, np.broadcast_to(y_t, (n, 3)))
        grad += (
            np.einsum("nji,nj->ni", c_jac, lever) + np.cross(c, np.broadcast_to(y_t, (n, 3)))
        ) / residual

    if rank_pen > 0.0:
        v0 = vecs[:, 0]
        u, wv = v0[:3], v0[3:]
        # d(lambda_min)/dx_i = -2 w x (u + w x x_i); penalty = eps - lambda_min.
        grad += 2.0 * np.cross(
            np.broadcast_to(wv, (n, 3)), u + np.cross(np.broadcast_to(wv, (n, 3)), pts)
        )

    return FcBreakdown(rank_pen, residual, dist_sum, total), grad


def fc_energy_grad(points, shape, cfg: FcConfig = FcConfig()) -> np.ndarray:
    """Gradient of :func:`fc_energy` wrt the contact positions, shape (n, 3)."""
    return fc_energy_and_grad(points, shape, cfg)[1]
