"""Classic force-closure ground truth.

Discretizes each friction cone into a pyramid of unit force edges, stacks
the resulting primitive wrenches, and tests positive spanning of wrench
space: the contacts are force closure iff the wrench matrix has rank 6 and
admits a strictly positive null combination (found by a small LP). A
bisection over the friction coefficient recovers the minimum friction a
contact set needs, the quantity the differentiable estimator is validated
against.

The pyramid is an inner approximation, so a positive verdict is sound and
refining the edge count can only widen the accepted set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import simplex
from .fcest import ContactSet, gc_residual
from .simplex import LpResult
from .symeig import jacobi_eigh

DEFAULT_CONE_EDGES = 16
RANK_TOL = 1e-8
LP_EPS = 1e-9


@dataclass(frozen=True)
class WrenchSet:
    """Primitive unit-contact-force wrenches, one column per cone edge."""

    wrenches: np.ndarray  # (6, n * k)
    k: int

    def __post_init__(self):
        if self.k < 4:
            raise ValueError("cone discretization needs k >= 4")
        if self.wrenches.ndim != 2 or self.wrenches.shape[0] != 6:
            raise ValueError("wrenches must be a 6 x (n*k) matrix")


def _tangent_basis(axes: np.ndarray):
    """Deterministic orthonormal tangents via the smallest-component rule."""
    axes = np.atleast_2d(axes)
    smallest = np.argmin(np.abs(axes), axis=1)
    helper = np.zeros_like(axes)
    helper[np.arange(axes.shape[0]), smallest] = 1.0
    t1 = np.cross(axes, helper)
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(axes, t1)
    return t1, t2


def discretize_cone(axis, mu: float, k: int) -> np.ndarray:
    """k unit force directions on the boundary of the friction cone.

    Edges are ``normalize(axis + mu * (cos(theta_j) t1 + sin(theta_j) t2))``
    at equally spaced angles; for mu = 0 the cone degenerates to the axis.
    """
    if mu < 0:
        raise ValueError("friction coefficient must be nonnegative")
    if k < 4:
        raise ValueError("cone discretization needs k >= 4")
    axis = np.asarray(axis, float)
    t1, t2 = _tangent_basis(axis[None, :])
    theta = 2.0 * np.pi * np.arange(k) / k
    edges = axis + mu * (np.cos(theta)[:, None] * t1 + np.sin(theta)[:, None] * t2)
    return edges / np.linalg.norm(edges, axis=1, keepdims=True)


def wrench_set(contacts: ContactSet, k: int = DEFAULT_CONE_EDGES,
               mu: float | None = None) -> WrenchSet:
    """Stack the primitive wrenches of all discretized contact cones."""
    mu = contacts.friction if mu is None else mu
    w = _wrench_columns(contacts.points, contacts.cone_axes, mu, k)
    return WrenchSet(w, k)


def _wrench_columns(points: np.ndarray, axes: np.ndarray, mu: float, k: int) -> np.ndarray:
    t1, t2 = _tangent_basis(axes)
    theta = 2.0 * np.pi * np.arange(k) / k
    # edges[i, j] = axis_i tilted by angle theta_j; shape (n, k, 3)
    edges = axes[:, None, :] + mu * (
        np.cos(theta)[None, :, None] * t1[:, None, :]
        + np.sin(theta)[None, :, None] * t2[:, None, :]
    )
    edges /= np.linalg.norm(edges, axis=2, keepdims=True)
    torques = np.cross(points[:, None, :], edges)
    w = np.concatenate([edges, torques], axis=2)  # (n, k, 6)
    return w.reshape(-1, 6).T


def lp_max_min_weight(ws: WrenchSet) -> LpResult:
    """Max-min-weight positive spanning LP over the wrench columns."""
    return simplex.lp_max_min_weight(ws.wrenches)


def _wrench_rank(w: np.ndarray) -> int:
    gram = w @ w.T
    eig, _ = jacobi_eigh(gram)
    sv = np.sqrt(np.maximum(eig, 0.0))
    top = sv[-1]
    if top == 0.0:
        return 0
    return int(np.sum(sv > RANK_TOL * top))


def _fc_test(points: np.ndarray, axes: np.ndarray, mu: float, k: int) -> bool:
    w = _wrench_columns(points, axes, mu, k)
    if _wrench_rank(w) < 6:
        return False
    res = simplex.lp_max_min_weight(w)
    if res.status != simplex.OPTIMAL:
        return False
    return res.objective > LP_EPS


def is_force_closure(contacts: ContactSet, k: int = DEFAULT_CONE_EDGES) -> bool:
    """True iff the wrench set spans rank 6 with a strictly positive null
    combination, i.e. the contacts can resist arbitrary external wrenches."""
    if k < 8:
        raise ValueError("force-closure test needs k >= 8")
    return _fc_test(contacts.points, contacts.cone_axes, contacts.friction, k)


def min_friction(contacts: ContactSet, k: int = DEFAULT_CONE_EDGES,
                 tol: float = 1e-3, mu_cap: float = 2.0) -> float:
    """Minimum friction coefficient at which the contacts are force closure.

    Bisects the monotone force-closure predicate on ``[0, mu_cap]``: wider
    cones only enlarge the wrench set. Returns 0.0 for frictionless force
    closure and ``math.inf`` when the contacts are not force closure even
    at ``mu_cap``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not 0 < mu_cap <= 4:
        raise ValueError("mu_cap must be in (0, 4]")
    pts, axes = contacts.points, contacts.cone_axes
    if _fc_test(pts, axes, 0.0, k):
        return 0.0
    if not _fc_test(pts, axes, mu_cap, k):
        return math.inf
    lo, hi = 0.0, mu_cap
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if _fc_test(pts, axes, mid, k):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Correlation study sampling (one sample per RNG stream)
# ---------------------------------------------------------------------------

def sample_sphere_tripod(base_seed: int, index: int) -> np.ndarray:
    """Three points drawn uniformly on the unit sphere, per-sample stream."""
    rng = np.random.default_rng(np.random.SeedSequence((base_seed, index)))
    pts = rng.normal(size=(3, 3))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def correlation_sample(base_seed: int, index: int, k: int = DEFAULT_CONE_EDGES,
                       tol: float = 1e-3, mu_cap: float = 2.0):
    """One (mu0, residual) pair for a random unit-sphere tripod.

    The estimator residual uses the inward normals as cone axes; mu0 comes
    from the classic oracle. Returns ``(mu0, residual)`` with ``mu0`` set
    to ``inf`` for tripods that are not force closure at the cap.
    """
    pts = sample_sphere_tripod(base_seed, index)
    axes = -pts
    residual = gc_residual(pts, axes)
    mu0 = min_friction(ContactSet(pts, axes), k=k, tol=tol, mu_cap=mu_cap)
    return mu0, residual
