"""Signed-distance-field object shapes with first and second derivatives.

Sign convention: negative strictly inside, positive strictly outside, zero
on the surface. All shapes are immutable after construction and safe to
share across threads or processes. Every query accepts a single point of
shape ``(3,)`` or a batch ``(..., 3)`` and broadcasts accordingly.

Shapes are trees of primitives (sphere, box, capsule, cylinder, torus)
combined by rigid transforms and union / smooth-union operators, loadable
from JSON documents (see :func:`shape_from_dict`).
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

# Deterministic gradient at distance-field singularities (e.g. sphere center).
_FALLBACK_DIRECTION = np.array([0.0, 0.0, 1.0])
_SINGULAR_EPS = 1e-12


class NonConvergent(RuntimeError):
    """Surface projection failed to reach the requested tolerance."""


class SamplingExhausted(RuntimeError):
    """Surface rejection sampling exceeded its attempt budget."""


def quaternion_to_matrix(q) -> np.ndarray:
    """Rotation matrix from a unit quaternion ``[w, x, y, z]``."""
    w, x, y, z = (float(v) for v in q)
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n == 0.0:
        raise ValueError("zero quaternion")
    w, x, y, z = w / n, x / n, y / n, z / n
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


# ---------------------------------------------------------------------------
# Shape tree
# ---------------------------------------------------------------------------

class Shape:
    """Base class: a signed distance field with an optional rigid transform."""

    def __init__(self, translation=None, rotation=None):
        self._t = np.zeros(3) if translation is None else np.asarray(translation, float)
        if rotation is None:
            self._R = np.eye(3)
        elif np.asarray(rotation).shape == (3, 3):
            self._R = np.asarray(rotation, float)
        else:
            self._R = quaternion_to_matrix(rotation)
        self._identity_tf = np.all(self._t == 0.0) and np.array_equal(self._R, np.eye(3))

    # -- frame changes ------------------------------------------------------

    def _to_local(self, p: np.ndarray) -> np.ndarray:
        if self._identity_tf:
            return p
        return (p - self._t) @ self._R

    def _to_world_dir(self, v: np.ndarray) -> np.ndarray:
        if self._identity_tf:
            return v
        return v @ self._R.T

    # -- public queries -----------------------------------------------------

    def distance(self, p) -> np.ndarray | float:
        """Signed distance from ``p`` to the surface."""
        p = np.asarray(p, float)
        d = self._local_distance(self._to_local(p))
        return float(d) if p.ndim == 1 else d

    def gradient(self, p) -> np.ndarray:
        """Spatial gradient of the distance field at ``p``.

        Unit-norm for exact primitives; for smooth unions a convex blend of
        child gradients with norm in (0, 1]. At singular points (where the
        raw gradient vanishes) returns the fixed fallback direction (0,0,1).
        """
        p = np.asarray(p, float)
        g = self._to_world_dir(self._local_gradient(self._to_local(p)))
        norms = np.linalg.norm(g, axis=-1, keepdims=True)
        g = np.where(norms < _SINGULAR_EPS, _FALLBACK_DIRECTION, g)
        return g

    def hessian(self, p, h: float = 1e-5) -> np.ndarray:
        """Symmetric 3x3 second-derivative matrix of the distance field.

        Central finite differences of the analytic gradient (step ``h``),
        symmetrized; the sphere overrides this with its closed form. At
        singular points returns the zero matrix.
        """
        p = np.asarray(p, float)
        offsets = h * np.eye(3)
        gp = self.gradient(p[..., None, :] + offsets)
        gm = self.gradient(p[..., None, :] - offsets)
        d = (gp - gm) / (2.0 * h)  # d[..., j, i] = d g_i / d x_j
        hess = 0.5 * (d + np.swapaxes(d, -1, -2))
        raw = self._to_world_dir(self._local_gradient(self._to_local(p)))
        singular = np.linalg.norm(raw, axis=-1) < _SINGULAR_EPS
        return np.where(singular[..., None, None], 0.0, hess)

    def bounding_radius(self) -> float:
        """Radius of a sphere centered at the origin containing the surface."""
        return float(np.linalg.norm(self._t) + self._local_bounding_radius())

    # -- subclass hooks -----------------------------------------------------

    def _local_distance(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _local_gradient(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _local_bounding_radius(self) -> float:
        raise NotImplementedError

    def _params_dict(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        d = self._params_dict()
        if not self._identity_tf:
            d["transform"] = {
                "translation": [float(v) for v in self._t],
                "rotation": _matrix_to_quaternion(self._R),
            }
        return d


class Sphere(Shape):
    def __init__(self, radius: float, **tf):
        super().__init__(**tf)
        self.radius = float(radius)
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")

    def _local_distance(self, q):
        return np.linalg.norm(q, axis=-1) - self.radius

    def _local_gradient(self, q):
        n = np.linalg.norm(q, axis=-1, keepdims=True)
        return np.divide(q, n, out=np.zeros_like(q), where=n > 0)

    def hessian(self, p, h: float = 1e-5):
        # Closed form (I - n n^T) / |q|, mapped through the rigid transform.
        p = np.asarray(p, float)
        q = self._to_local(p)
        r = np.linalg.norm(q, axis=-1)
        safe = np.maximum(r, _SINGULAR_EPS)
        n = q / safe[..., None]
        hess = (np.eye(3) - n[..., :, None] * n[..., None, :]) / safe[..., None, None]
        hess = np.where((r < _SINGULAR_EPS)[..., None, None], 0.0, hess)
        if self._identity_tf:
            return hess
        return np.einsum("ab,...bc,dc->...ad", self._R, hess, self._R)

    def _local_bounding_radius(self):
        return self.radius

    def _params_dict(self):
        return {"type": "sphere", "radius": self.radius}


class Box(Shape):
    def __init__(self, half_extents, **tf):
        super().__init__(**tf)
        self.half_extents = np.asarray(half_extents, float)
        if self.half_extents.shape != (3,) or np.any(self.half_extents <= 0):
            raise ValueError("box half_extents must be three positive lengths")

    def _local_distance(self, q):
        s = np.abs(q) - self.half_extents
        outside = np.linalg.norm(np.maximum(s, 0.0), axis=-1)
        inside = np.minimum(np.max(s, axis=-1), 0.0)
        return outside + inside

    def _local_gradient(self, q):
        s = np.abs(q) - self.half_extents
        v = np.maximum(s, 0.0)
        vn = np.linalg.norm(v, axis=-1, keepdims=True)
        g_out = np.sign(q) * np.divide(v, vn, out=np.zeros_like(v), where=vn > 0)
        # Inside: steepest face, first index on ties.
        axis = np.argmax(s, axis=-1)
        g_in = np.zeros_like(q)
        idx = np.indices(axis.shape)
        g_in[(*idx, axis)] = np.sign(np.take_along_axis(q, axis[..., None], -1))[..., 0]
        return np.where(vn > 0, g_out, g_in)

    def _local_bounding_radius(self):
        return float(np.linalg.norm(self.half_extents))

    def _params_dict(self):
        return {"type": "box", "half_extents": [float(v) for v in self.half_extents]}


class Capsule(Shape):
    """Capsule along the local z axis: half-length of the segment plus radius."""

    def __init__(self, half_length: float, radius: float, **tf):
        super().__init__(**tf)
        self.half_length = float(half_length)
        self.radius = float(radius)
        if self.half_length <= 0 or self.radius <= 0:
            raise ValueError("capsule dimensions must be positive")

    def _core(self, q):
        w = q.copy()
        w[..., 2] -= np.clip(q[..., 2], -self.half_length, self.half_length)
        return w

    def _local_distance(self, q):
        return np.linalg.norm(self._core(q), axis=-1) - self.radius

    def _local_gradient(self, q):
        w = self._core(q)
        n = np.linalg.norm(w, axis=-1, keepdims=True)
        return np.divide(w, n, out=np.zeros_like(w), where=n > 0)

    def _local_bounding_radius(self):
        return self.half_length + self.radius

    def _params_dict(self):
        return {"type": "capsule", "half_length": self.half_length, "radius": self.radius}


class Cylinder(Shape):
    """Capped cylinder along the local z axis."""

    def __init__(self, half_length: float, radius: float, **tf):
        super().__init__(**tf)
        self.half_length = float(half_length)
        self.radius = float(radius)
        if self.half_length <= 0 or self.radius <= 0:
            raise ValueError("cylinder dimensions must be positive")

    def _local_distance(self, q):
        a = np.linalg.norm(q[..., :2], axis=-1) - self.radius
        b = np.abs(q[..., 2]) - self.half_length
        outside = np.hypot(np.maximum(a, 0.0), np.maximum(b, 0.0))
        return np.minimum(np.maximum(a, b), 0.0) + outside

    def _local_gradient(self, q):
        rho = np.linalg.norm(q[..., :2], axis=-1, keepdims=True)
        radial = np.concatenate(
            [np.divide(q[..., :2], rho, out=np.zeros_like(q[..., :2]), where=rho > 0),
             np.zeros_like(rho)],
            axis=-1,
        )
        axial = np.zeros_like(q)
        axial[..., 2] = np.sign(q[..., 2])
        a = rho[..., 0] - self.radius
        b = np.abs(q[..., 2]) - self.half_length
        vo = np.maximum(a, 0.0)[..., None] * radial + np.maximum(b, 0.0)[..., None] * axial
        von = np.linalg.norm(vo, axis=-1, keepdims=True)
        g_out = np.divide(vo, von, out=np.zeros_like(vo), where=von > 0)
        g_in = np.where((a >= b)[..., None], radial, axial)
        return np.where(von > 0, g_out, g_in)

    def _local_bounding_radius(self):
        return math.hypot(self.half_length, self.radius)

    def _params_dict(self):
        return {"type": "cylinder", "half_length": self.half_length, "radius": self.radius}


class Torus(Shape):
    """Torus around the local z axis; the ring lies in the xy plane."""

    def __init__(self, major_radius: float, minor_radius: float, **tf):
        super().__init__(**tf)
        self.major_radius = float(major_radius)
        self.minor_radius = float(minor_radius)
        if not 0 < self.minor_radius < self.major_radius:
            raise ValueError("torus requires 0 < minor_radius < major_radius")

    def _local_distance(self, q):
        rho = np.linalg.norm(q[..., :2], axis=-1)
        return np.hypot(rho - self.major_radius, q[..., 2]) - self.minor_radius

    def _local_gradient(self, q):
        rho = np.linalg.norm(q[..., :2], axis=-1, keepdims=True)
        u = rho[..., 0] - self.major_radius
        m = np.hypot(u, q[..., 2])
        radial = np.divide(q[..., :2], rho, out=np.zeros_like(q[..., :2]), where=rho > 0)
        g = np.zeros_like(q)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(m > 0, u / np.maximum(m, _SINGULAR_EPS), 0.0)
            g[..., :2] = radial * scale[..., None]
            g[..., 2] = np.where(m > 0, q[..., 2] / np.maximum(m, _SINGULAR_EPS), 0.0)
        return g

    def _local_bounding_radius(self):
        return self.major_radius + self.minor_radius

    def _params_dict(self):
        return {
            "type": "torus",
            "major_radius": self.major_radius,
            "minor_radius": self.minor_radius,
        }


class Union(Shape):
    """Hard union: pointwise minimum of the children's fields."""

    def __init__(self, children, **tf):
        super().__init__(**tf)
        if not children:
            raise ValueError("union requires at least one child")
        self.children = tuple(children)

    def _child_distances(self, q):
        return np.stack([c.distance(q) for c in self.children], axis=0)

    def _local_distance(self, q):
        return np.min(self._child_distances(q), axis=0)

    def _local_gradient(self, q):
        ds = self._child_distances(q)
        winner = np.argmin(ds, axis=0)
        gs = np.stack([c.gradient(q) for c in self.children], axis=0)
        return np.take_along_axis(gs, winner[None, ..., None], axis=0)[0]

    def _local_bounding_radius(self):
        return max(c.bounding_radius() for c in self.children)

    def _params_dict(self):
        return {"type": "union", "children": [c.to_dict() for c in self.children]}


class SmoothUnion(Shape):
    """Exponential smooth minimum of the children's fields.

    ``d = -k * log(sum_i exp(-d_i / k))`` with ``k`` the blend length; only
    approximately eikonal, so gradients are normalized before use as normals.
    """

    def __init__(self, children, k: float, **tf):
        super().__init__(**tf)
        if not children:
            raise ValueError("smooth_union requires at least one child")
        if k <= 0:
            raise ValueError("smooth_union blend parameter k must be positive")
        self.children = tuple(children)
        self.k = float(k)

    def _weights(self, q):
        ds = np.stack([c.distance(q) for c in self.children], axis=0)
        m = np.min(ds, axis=0)
        e = np.exp(-(ds - m) / self.k)
        return ds, m, e, np.sum(e, axis=0)

    def _local_distance(self, q):
        _, m, _, tot = self._weights(q)
        return m - self.k * np.log(tot)

    def _local_gradient(self, q):
        _, _, e, tot = self._weights(q)
        gs = np.stack([c.gradient(q) for c in self.children], axis=0)
        w = e / tot
        return np.sum(w[..., None] * gs, axis=0)

    def _local_bounding_radius(self):
        # The blended field sits at most k*log(n) below the hard minimum.
        pad = self.k * math.log(len(self.children))
        return max(c.bounding_radius() for c in self.children) + pad

    def _params_dict(self):
        return {
            "type": "smooth_union",
            "k": self.k,
            "children": [c.to_dict() for c in self.children],
        }


# ---------------------------------------------------------------------------
# Surface utilities
# ---------------------------------------------------------------------------

def _project(shape: Shape, p: np.ndarray, tol: float, max_iters: int):
    q = np.array(p, float, copy=True)
    flat = q.reshape(-1, 3)
    active = np.arange(flat.shape[0])
    for _ in range(max_iters):
        d = np.atleast_1d(shape.distance(flat[active]))
        pending = np.abs(d) >= tol
        active = active[pending]
        if active.size == 0:
            break
        flat[active] -= d[pending][:, None] * shape.gradient(flat[active])
    ok = np.abs(np.atleast_1d(shape.distance(flat))) < tol
    return q, ok.reshape(q.shape[:-1] or (1,))


def project_to_surface(shape: Shape, p, tol: float = 1e-8, max_iters: int = 50):
    """Project ``p`` onto the zero level set by iterating ``p -= d * grad``.

    Raises :class:`NonConvergent` if any point still has ``|d| >= tol``
    after ``max_iters`` iterations.
    """
    q, ok = _project(shape, np.asarray(p, float), tol, max_iters)
    if not ok.all():
        raise NonConvergent(f"{int((~ok).sum())} point(s) failed to reach |d| < {tol}")
    return q


def sample_surface(shape: Shape, count: int, seed: int, max_attempts: int = 1_000_000):
    """Draw ``count`` points on the surface, deterministically for a fixed seed.

    Rejection-samples the bounding box for points with ``|d| < 0.05``, then
    projects them onto the surface; every returned point has ``|d| < 1e-6``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    half = shape.bounding_radius() + 0.1
    accepted = []
    n_accepted = 0
    attempts = 0
    while n_accepted < count:
        if attempts >= max_attempts:
            raise SamplingExhausted(
                f"accepted {n_accepted}/{count} points after {attempts} attempts"
            )
        chunk = min(4096, max_attempts - attempts)
        cand = rng.uniform(-half, half, size=(chunk, 3))
        attempts += chunk
        near = cand[np.abs(shape.distance(cand)) < 0.05]
        if near.shape[0] == 0:
            continue
        proj, ok = _project(shape, near, tol=1e-9, max_iters=50)
        good = proj[ok & (np.abs(shape.distance(proj)) < 1e-6)]
        if good.shape[0]:
            accepted.append(good)
            n_accepted += good.shape[0]
    return np.concatenate(accepted, axis=0)[:count]


def save_obj_points(path, points) -> None:
    """Write a point cloud as OBJ ``v x y z`` lines."""
    pts = np.asarray(points, float).reshape(-1, 3)
    with open(path, "w") as fh:
        for x, y, z in pts:
            fh.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")


# ---------------------------------------------------------------------------
# JSON loading and the built-in shape library
# ---------------------------------------------------------------------------

_PRIMITIVES = {
    "sphere": (Sphere, ("radius",)),
    "box": (Box, ("half_extents",)),
    "capsule": (Capsule, ("half_length", "radius")),
    "cylinder": (Cylinder, ("half_length", "radius")),
    "torus": (Torus, ("major_radius", "minor_radius")),
}


def _matrix_to_quaternion(R: np.ndarray) -> list[float]:
    w = math.sqrt(max(0.0, 1.0 + R[0, 0] + R[1, 1] + R[2, 2])) / 2.0
    if w > 1e-8:
        return [
            w,
            (R[2, 1] - R[1, 2]) / (4 * w),
            (R[0, 2] - R[2, 0]) / (4 * w),
            (R[1, 0] - R[0, 1]) / (4 * w),
        ]
    # Fall back to the dominant diagonal axis for half-turn rotations.
    i = int(np.argmax(np.diag(R)))
    j, k = (i + 1) % 3, (i + 2) % 3
    s = math.sqrt(max(0.0, 1.0 + R[i, i] - R[j, j] - R[k, k])) * 2.0
    q = [0.0, 0.0, 0.0, 0.0]
    q[0] = (R[k, j] - R[j, k]) / s
    q[1 + i] = s / 4.0
    q[1 + j] = (R[j, i] + R[i, j]) / s
    q[1 + k] = (R[k, i] + R[i, k]) / s
    return q


def _parse_transform(node: dict) -> dict:
    tf = node.get("transform")
    if tf is None:
        return {}
    out = {}
    if "translation" in tf:
        t = tf["translation"]
        if len(t) != 3:
            raise ValueError("transform.translation must have 3 components")
        out["translation"] = t
    if "rotation" in tf:
        r = tf["rotation"]
        if len(r) != 4:
            raise ValueError("transform.rotation must be a quaternion [w,x,y,z]")
        out["rotation"] = r
    return out


def shape_from_dict(node: dict) -> Shape:
    """Build a shape tree from its JSON dictionary form."""
    if not isinstance(node, dict) or "type" not in node:
        raise ValueError("shape node must be an object with a 'type' field")
    kind = node["type"]
    tf = _parse_transform(node)
    if kind in _PRIMITIVES:
        cls, fields = _PRIMITIVES[kind]
        missing = [f for f in fields if f not in node]
        if missing:
            raise ValueError(f"{kind} node missing field(s): {', '.join(missing)}")
        return cls(*(node[f] for f in fields), **tf)
    if kind in ("union", "smooth_union"):
        children = [shape_from_dict(c) for c in node.get("children", [])]
        if not children:
            raise ValueError(f"{kind} node needs a non-empty 'children' list")
        if kind == "union":
            return Union(children, **tf)
        if "k" not in node:
            raise ValueError("smooth_union node missing field: k")
        return SmoothUnion(children, node["k"], **tf)
    raise ValueError(f"unknown shape type {kind!r}")


def builtin_shape(name: str) -> Shape:
    """Self-contained shape library; all shapes have bounding radius near 1."""
    if name == "sphere":
        return Sphere(1.0)
    if name == "box":
        return Box([0.55, 0.55, 0.55])
    if name == "capsule":
        return Capsule(0.5, 0.35)
    if name == "bottle":
        # Cylindrical body with a spherical neck blended on top.
        return SmoothUnion(
            [
                Cylinder(0.55, 0.35),
                Sphere(0.18, translation=[0.0, 0.0, 0.62]),
            ],
            k=0.05,
        )
    raise ValueError(f"unknown builtin shape {name!r}")


BUILTIN_SHAPES = ("sphere", "box", "capsule", "bottle")


def load_shape(source: str | Path) -> Shape:
    """Load a shape from a JSON file path or a builtin name."""
    if isinstance(source, str) and source in BUILTIN_SHAPES:
        return builtin_shape(source)
    path = Path(source)
    try:
        node = json.loads(path.read_text())
    except OSError as exc:
        raise ValueError(f"cannot read shape file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed JSON in shape file {path}: {exc}") from exc
    return shape_from_dict(node)
