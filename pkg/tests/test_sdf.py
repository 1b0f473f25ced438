"""Tests for the SDF shape library: primitives, combinators, derivatives."""

import json

import numpy as np
import numpy.testing as npt
import pytest

from fcgrasp import sdf


def central_diff_gradient(shape, p, h=1e-5):
    """Independent finite-difference oracle for the distance gradient."""
    p = np.asarray(p, float)
    g = np.zeros(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        g[i] = (shape.distance(p + e) - shape.distance(p - e)) / (2 * h)
    return g


def central_diff_hessian(shape, p, h=1e-4):
    """Finite differences of the distance itself (independent of gradient())."""
    p = np.asarray(p, float)
    H = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            ei = np.zeros(3)
            ej = np.zeros(3)
            ei[i] = h
            ej[j] = h
            H[i, j] = (
                shape.distance(p + ei + ej)
                - shape.distance(p + ei - ej)
                - shape.distance(p - ei + ej)
                + shape.distance(p - ei - ej)
            ) / (4 * h * h)
    return H


def all_primitives():
    return [
        sdf.Sphere(0.8),
        sdf.Box([0.5, 0.6, 0.4]),
        sdf.Capsule(0.5, 0.3),
        sdf.Cylinder(0.5, 0.4),
        sdf.Torus(0.7, 0.2),
    ]


TWO_SPHERE_BLEND = sdf.SmoothUnion(
    [sdf.Sphere(0.5, translation=[-0.4, 0, 0]), sdf.Sphere(0.5, translation=[0.4, 0, 0])],
    k=0.1,
)


class TestDistance:
    def test_unit_sphere_outside(self):
        assert sdf.Sphere(1.0).distance([0.0, 0.0, 2.0]) == pytest.approx(1.0)

    def test_unit_sphere_center(self):
        assert sdf.Sphere(1.0).distance([0.0, 0.0, 0.0]) == pytest.approx(-1.0)

    def test_box_face(self):
        assert sdf.Box([1, 1, 1]).distance([2.0, 0.0, 0.0]) == pytest.approx(1.0)

    def test_capsule_side_and_cap(self):
        c = sdf.Capsule(0.5, 0.2)
        assert c.distance([0.5, 0, 0]) == pytest.approx(0.3)
        assert c.distance([0, 0, 1.0]) == pytest.approx(0.3)

    def test_cylinder_inside_outside(self):
        c = sdf.Cylinder(0.5, 0.4)
        assert c.distance([0, 0, 0]) == pytest.approx(-0.4)
        assert c.distance([1.0, 0, 0]) == pytest.approx(0.6)

    def test_torus_ring(self):
        t = sdf.Torus(0.7, 0.2)
        assert t.distance([0.7, 0, 0]) == pytest.approx(-0.2)
        assert t.distance([1.0, 0, 0]) == pytest.approx(0.1)

    def test_batch_shapes(self):
        s = sdf.Sphere(1.0)
        p = np.zeros((4, 5, 3))
        p[..., 2] = 2.0
        d = s.distance(p)
        assert d.shape == (4, 5)
        npt.assert_allclose(d, 1.0)

    def test_union_is_min(self):
        u = sdf.Union([sdf.Sphere(0.5), sdf.Sphere(0.5, translation=[2, 0, 0])])
        assert u.distance([2.0, 0, 0]) == pytest.approx(-0.5)
        assert u.distance([0.0, 0, 0]) == pytest.approx(-0.5)

    def test_smooth_union_below_min(self):
        rng = np.random.default_rng(3)
        p = rng.uniform(-1.5, 1.5, size=(200, 3))
        d_blend = TWO_SPHERE_BLEND.distance(p)
        d_hard = np.minimum(
            TWO_SPHERE_BLEND.children[0].distance(p),
            TWO_SPHERE_BLEND.children[1].distance(p),
        )
        assert np.all(d_blend <= d_hard + 1e-12)


class TestGradient:
    def test_sphere_radial(self):
        npt.assert_allclose(sdf.Sphere(1.0).gradient([0, 0, 2.0]), [0, 0, 1])
        npt.assert_allclose(
            sdf.Sphere(1.0).gradient(np.array([3, 4, 0.0]) / 5 * 2), [0.6, 0.8, 0]
        )

    def test_sphere_center_fallback(self):
        npt.assert_allclose(sdf.Sphere(1.0).gradient([0.0, 0.0, 0.0]), [0, 0, 1])

    def test_smooth_union_matches_finite_difference(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            p = rng.uniform(-1.2, 1.2, size=3)
            g = TWO_SPHERE_BLEND.gradient(p)
            g_fd = central_diff_gradient(TWO_SPHERE_BLEND, p)
            npt.assert_allclose(g, g_fd, atol=1e-6)

    @pytest.mark.parametrize("shape", all_primitives(), ids=lambda s: type(s).__name__)
    def test_primitive_gradient_against_finite_difference(self, shape):
        # 1000 random points per primitive; unit gradient and FD agreement.
        rng = np.random.default_rng(20250801)
        r = shape.bounding_radius() + 0.4
        checked = 0
        for _ in range(1000):
            p = rng.uniform(-r, r, size=3)
            g = shape.gradient(p)
            g_fd = central_diff_gradient(shape, p)
            # Skip points that straddle a crease of the field (FD invalid there).
            if abs(np.linalg.norm(g_fd) - 1.0) > 1e-6:
                continue
            npt.assert_allclose(g, g_fd, rtol=0, atol=1e-6)
            npt.assert_allclose(np.linalg.norm(g), 1.0, atol=1e-9)
            checked += 1
        assert checked > 900

    def test_gradient_batch_matches_single(self):
        shape = sdf.Box([0.5, 0.6, 0.4])
        rng = np.random.default_rng(5)
        p = rng.uniform(-1, 1, size=(10, 3))
        batch = shape.gradient(p)
        for i in range(10):
            npt.assert_allclose(batch[i], shape.gradient(p[i]))


class TestHessian:
    def test_sphere_analytic(self):
        H = sdf.Sphere(1.0).hessian([2.0, 0, 0])
        npt.assert_allclose(H, np.diag([0.0, 0.5, 0.5]), atol=1e-12)

    def test_box_interior_zero(self):
        H = sdf.Box([1, 1, 1]).hessian([0.2, 0.1, -0.3])
        npt.assert_allclose(H, np.zeros((3, 3)), atol=1e-9)

    def test_torus_matches_distance_finite_difference(self):
        t = sdf.Torus(0.7, 0.2)
        rng = np.random.default_rng(7)
        for _ in range(20):
            p = rng.uniform(-1.0, 1.0, size=3)
            if abs(t.distance(p)) < 0.02:
                continue
            H = t.hessian(p)
            npt.assert_allclose(H, central_diff_hessian(t, p), atol=1e-4)

    @pytest.mark.parametrize("shape", all_primitives() + [TWO_SPHERE_BLEND],
                             ids=lambda s: type(s).__name__)
    def test_symmetric(self, shape):
        rng = np.random.default_rng(13)
        for _ in range(30):
            p = rng.uniform(-1.2, 1.2, size=3)
            H = shape.hessian(p)
            assert np.max(np.abs(H - H.T)) < 1e-9

    def test_transformed_sphere_analytic(self):
        s = sdf.Sphere(0.5, translation=[1, 2, 3], rotation=[0.9, 0.1, 0.3, 0.2])
        p = np.array([1.9, 2.2, 3.1])
        npt.assert_allclose(s.hessian(p), central_diff_hessian(s, p), atol=1e-4)


class TestProjection:
    def test_sphere_pole(self):
        q = sdf.project_to_surface(sdf.Sphere(1.0), [0, 0, 2.0], tol=1e-8)
        npt.assert_allclose(q, [0, 0, 1.0], atol=1e-8)

    def test_sphere_inside(self):
        q = sdf.project_to_surface(sdf.Sphere(1.0), [0.1, 0, 0], tol=1e-8)
        npt.assert_allclose(q, [1.0, 0, 0], atol=1e-8)

    def test_smooth_union_random(self):
        rng = np.random.default_rng(23)
        p = rng.uniform(-1.2, 1.2, size=(50, 3))
        q = sdf.project_to_surface(TWO_SPHERE_BLEND, p, tol=1e-8)
        assert np.max(np.abs(TWO_SPHERE_BLEND.distance(q))) < 1e-8


class TestSampling:
    def test_sphere_on_surface(self):
        pts = sdf.sample_surface(sdf.Sphere(1.0), 100, seed=1)
        assert pts.shape == (100, 3)
        npt.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-6)

    def test_deterministic(self):
        a = sdf.sample_surface(TWO_SPHERE_BLEND, 64, seed=42)
        b = sdf.sample_surface(TWO_SPHERE_BLEND, 64, seed=42)
        npt.assert_array_equal(a, b)

    def test_box_face_counts_area_proportional(self):
        he = np.array([0.5, 0.6, 0.4])
        box = sdf.Box(he)
        n = 10_000
        pts = sdf.sample_surface(box, n, seed=9)
        s = np.abs(pts) - he
        face_axis = np.argmax(s, axis=1)
        areas = np.array([he[1] * he[2], he[0] * he[2], he[0] * he[1]])
        probs = areas / areas.sum()
        for axis in range(3):
            count = int(np.sum(face_axis == axis))
            expect = n * probs[axis]
            sigma = np.sqrt(n * probs[axis] * (1 - probs[axis]))
            assert abs(count - expect) < 5 * sigma, (axis, count, expect)

    def test_exhaustion(self):
        with pytest.raises(sdf.SamplingExhausted):
            sdf.sample_surface(sdf.Sphere(1.0), 10, seed=0, max_attempts=8)


class TestRigidInvariance:
    @pytest.mark.parametrize("shape_cls,args", [
        (sdf.Sphere, (0.7,)),
        (sdf.Box, ([0.5, 0.6, 0.4],)),
        (sdf.Capsule, (0.5, 0.3)),
        (sdf.Torus, (0.7, 0.2)),
    ])
    def test_distance_transforms_rigidly(self, shape_cls, args):
        t = np.array([0.3, -0.2, 0.5])
        quat = np.array([0.8, 0.2, -0.4, 0.1])
        base = shape_cls(*args)
        moved = shape_cls(*args, translation=t, rotation=quat)
        R = sdf.quaternion_to_matrix(quat)
        rng = np.random.default_rng(31)
        p = rng.uniform(-2, 2, size=(100, 3))
        npt.assert_allclose(moved.distance(p), base.distance((p - t) @ R), atol=1e-12)

    def test_gradient_rotates(self):
        quat = [0.9, 0.1, 0.3, 0.2]
        R = sdf.quaternion_to_matrix(quat)
        base = sdf.Box([0.5, 0.6, 0.4])
        moved = sdf.Box([0.5, 0.6, 0.4], rotation=quat)
        p = np.array([1.0, 0.4, -0.2])
        npt.assert_allclose(moved.gradient(p), R @ base.gradient(R.T @ p), atol=1e-12)


class TestJsonAndBuiltins:
    def test_round_trip(self):
        node = {
            "type": "smooth_union",
            "k": 0.1,
            "children": [
                {"type": "sphere", "radius": 1.0,
                 "transform": {"translation": [0.2, 0, 0], "rotation": [1, 0, 0, 0]}},
                {"type": "box", "half_extents": [0.3, 0.3, 0.3]},
            ],
        }
        shape = sdf.shape_from_dict(node)
        again = sdf.shape_from_dict(json.loads(json.dumps(shape.to_dict())))
        rng = np.random.default_rng(2)
        p = rng.uniform(-1.5, 1.5, size=(50, 3))
        npt.assert_allclose(shape.distance(p), again.distance(p), atol=1e-12)

    def test_missing_field_names_it(self):
        with pytest.raises(ValueError, match="radius"):
            sdf.shape_from_dict({"type": "sphere"})

    def test_unknown_type(self):
        with pytest.raises(ValueError, match="unknown shape type"):
            sdf.shape_from_dict({"type": "cone"})

    @pytest.mark.parametrize("name", sdf.BUILTIN_SHAPES)
    def test_builtins_normalized(self, name):
        shape = sdf.builtin_shape(name)
        assert 0.5 < shape.bounding_radius() < 1.3
        # Surface actually exists inside the bounding radius.
        pts = sdf.sample_surface(shape, 16, seed=0)
        assert np.max(np.linalg.norm(pts, axis=1)) <= shape.bounding_radius() + 1e-9

    def test_load_shape_from_file(self, tmp_path):
        path = tmp_path / "shape.json"
        path.write_text(json.dumps({"type": "sphere", "radius": 0.9}))
        shape = sdf.load_shape(path)
        assert shape.distance([0, 0, 1.9]) == pytest.approx(1.0)

    def test_load_shape_malformed(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(ValueError, match="bad.json"):
            sdf.load_shape(path)


class TestObjExport:
    def test_vertex_lines_round_trip(self, tmp_path):
        pts = np.array([[0.25, -1.5, 3.0], [1e-3, 2.0, -0.75]])
        path = tmp_path / "cloud.obj"
        sdf.save_obj_points(path, pts)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 2
        parsed = np.array([[float(v) for v in ln.split()[1:]] for ln in lines])
        npt.assert_array_equal(parsed, pts)
        assert all(ln.startswith("v ") for ln in lines)
