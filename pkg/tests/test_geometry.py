import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from stemfit.errors import DegenerateInputError, FrameMismatchError
from stemfit.geometry import (
    Frame,
    RigidTransform,
    UnitQuaternion,
    Vec3,
    Wrench,
    adjoint_wrench_to_world,
    angle_between,
    transform_point,
)

from conftest import random_transform, random_unit_quaternion


def scipy_rotation(q: UnitQuaternion) -> Rotation:
    # scipy uses scalar-last ordering
    return Rotation.from_quat([q.x, q.y, q.z, q.w])


class TestVec3:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Vec3(1.0, float("nan"), 0.0)
        with pytest.raises(ValueError):
            Vec3(float("inf"), 0.0, 0.0)

    def test_arithmetic(self):
        v = Vec3(1.0, 2.0, 3.0) + Vec3(0.5, -1.0, 0.0)
        assert (v.x, v.y, v.z) == (1.5, 1.0, 3.0)
        assert (2.0 * Vec3(1.0, 0.0, -1.0)).z == -2.0
        assert Vec3(3.0, 4.0, 0.0).norm() == 5.0


class TestUnitQuaternion:
    def test_normalized_on_construction(self, rng):
        for _ in range(20):
            q = rng.normal(size=4) * 3.0
            quat = UnitQuaternion(*q)
            norm = math.sqrt(quat.w**2 + quat.x**2 + quat.y**2 + quat.z**2)
            assert abs(norm - 1.0) < 1e-9

    def test_zero_norm_rejected(self):
        with pytest.raises(ValueError):
            UnitQuaternion(0.0, 0.0, 0.0, 0.0)

    def test_rotation_matrix_matches_reference(self, rng):
        for _ in range(50):
            q = random_unit_quaternion(rng)
            np.testing.assert_allclose(
                q.rotation_matrix(), scipy_rotation(q).as_matrix(), atol=1e-12
            )

    def test_matrix_round_trip(self, rng):
        for _ in range(50):
            q = random_unit_quaternion(rng)
            back = UnitQuaternion.from_rotation_matrix(q.rotation_matrix())
            np.testing.assert_allclose(
                back.rotation_matrix(), q.rotation_matrix(), atol=1e-9
            )

    def test_multiply_matches_matrix_product(self, rng):
        for _ in range(20):
            a, b = random_unit_quaternion(rng), random_unit_quaternion(rng)
            np.testing.assert_allclose(
                a.multiply(b).rotation_matrix(),
                a.rotation_matrix() @ b.rotation_matrix(),
                atol=1e-12,
            )


class TestRigidTransform:
    def test_compose_with_inverse_is_identity(self, rng):
        for _ in range(30):
            t = random_transform(rng)
            ident = t.compose(t.inverse())
            np.testing.assert_allclose(
                ident.rotation.rotation_matrix(), np.eye(3), atol=1e-9
            )
            np.testing.assert_allclose(ident.translation.as_array(), 0.0, atol=1e-9)

    def test_transform_point_composition(self, rng):
        p = Vec3(0.3, -0.2, 0.9)
        for _ in range(30):
            t1, t2 = random_transform(rng), random_transform(rng)
            chained = transform_point(t1, transform_point(t2, p))
            composed = transform_point(t1.compose(t2), p)
            np.testing.assert_allclose(
                composed.as_array(), chained.as_array(), atol=1e-9
            )


class TestTransformPoint:
    def test_identity(self):
        p = transform_point(RigidTransform.identity(), Vec3(1.0, 2.0, 3.0))
        assert (p.x, p.y, p.z) == (1.0, 2.0, 3.0)

    def test_pure_translation(self):
        t = RigidTransform(UnitQuaternion.identity(), Vec3(0.0, 0.0, 0.5))
        p = transform_point(t, Vec3(0.0, 0.0, 0.0))
        assert (p.x, p.y, p.z) == (0.0, 0.0, 0.5)

    def test_quarter_turn_about_z(self):
        q = UnitQuaternion.from_axis_angle(Vec3(0.0, 0.0, 1.0), math.pi / 2.0)
        p = transform_point(RigidTransform(q, Vec3(0.0, 0.0, 0.0)), Vec3(1.0, 0.0, 0.0))
        expected = Rotation.from_euler("z", 90, degrees=True).apply([1.0, 0.0, 0.0])
        np.testing.assert_allclose(p.as_array(), expected, atol=1e-12)
        np.testing.assert_allclose(p.as_array(), [0.0, 1.0, 0.0], atol=1e-12)


class TestAdjointWrench:
    def test_identity_changes_only_the_frame(self):
        w = Wrench(Vec3(1.0, -2.0, 3.0), Vec3(0.1, 0.2, -0.3), Frame.SENSOR)
        out = adjoint_wrench_to_world(RigidTransform.identity(), w)
        assert out.frame is Frame.WORLD
        np.testing.assert_allclose(out.force.as_array(), w.force.as_array())
        np.testing.assert_allclose(out.torque.as_array(), w.torque.as_array())

    def test_translation_adds_moment_arm(self):
        t = RigidTransform(UnitQuaternion.identity(), Vec3(1.0, 0.0, 0.0))
        w = Wrench(Vec3(0.0, 0.0, 1.0), Vec3(0.0, 0.0, 0.0), Frame.SENSOR)
        out = adjoint_wrench_to_world(t, w)
        expected = np.cross([1.0, 0.0, 0.0], [0.0, 0.0, 1.0])
        np.testing.assert_allclose(out.force.as_array(), [0.0, 0.0, 1.0])
        np.testing.assert_allclose(out.torque.as_array(), expected)
        np.testing.assert_allclose(out.torque.as_array(), [0.0, -1.0, 0.0])

    def test_rotation_maps_force(self):
        q = UnitQuaternion.from_axis_angle(Vec3(0.0, 0.0, 1.0), math.pi / 2.0)
        t = RigidTransform(q, Vec3(0.0, 0.0, 0.0))
        w = Wrench(Vec3(1.0, 0.0, 0.0), Vec3(0.0, 0.0, 0.0), Frame.SENSOR)
        out = adjoint_wrench_to_world(t, w)
        expected = Rotation.from_euler("z", 90, degrees=True).apply([1.0, 0.0, 0.0])
        np.testing.assert_allclose(out.force.as_array(), expected, atol=1e-12)
        np.testing.assert_allclose(out.torque.as_array(), [0.0, 0.0, 0.0], atol=1e-12)

    def test_frame_mismatch_rejected(self):
        w = Wrench(Vec3(1.0, 0.0, 0.0), Vec3(0.0, 0.0, 0.0), Frame.WORLD)
        with pytest.raises(FrameMismatchError):
            adjoint_wrench_to_world(RigidTransform.identity(), w)

    def test_force_magnitude_preserved(self, rng):
        for _ in range(50):
            t = random_transform(rng)
            w = Wrench(
                Vec3.from_array(rng.normal(size=3)),
                Vec3.from_array(rng.normal(size=3)),
                Frame.SENSOR,
            )
            out = adjoint_wrench_to_world(t, w)
            assert abs(out.force.norm() - w.force.norm()) < 1e-9


class TestAngleBetween:
    def test_identical_vectors(self):
        assert angle_between(Vec3(1.0, 0.0, 0.0), Vec3(1.0, 0.0, 0.0)) == 0.0

    def test_orthogonal_vectors(self):
        assert angle_between(Vec3(1.0, 0.0, 0.0), Vec3(0.0, 1.0, 0.0)) == 90.0

    def test_45_degrees(self):
        oracle = math.degrees(math.acos(1.0 / math.sqrt(2.0)))
        got = angle_between(Vec3(1.0, 0.0, 0.0), Vec3(1.0, 1.0, 0.0))
        assert abs(got - oracle) < 1e-12
        assert abs(got - 45.0) < 1e-12

    def test_opposite_vectors(self, rng):
        for _ in range(20):
            v = Vec3.from_array(rng.normal(size=3))
            assert abs(angle_between(v, -v) - 180.0) < 1e-9

    def test_symmetric_and_scale_invariant(self, rng):
        for _ in range(50):
            a = Vec3.from_array(rng.normal(size=3))
            b = Vec3.from_array(rng.normal(size=3))
            s = float(rng.uniform(0.1, 50.0))
            assert abs(angle_between(a, b) - angle_between(b, a)) < 1e-9
            assert abs(angle_between(a, b) - angle_between(s * a, b)) < 1e-9
            assert abs(angle_between(a, b) - angle_between(a, s * b)) < 1e-9

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(DegenerateInputError):
            angle_between(Vec3(0.0, 0.0, 0.0), Vec3(1.0, 0.0, 0.0))
        with pytest.raises(DegenerateInputError):
            angle_between(Vec3(1.0, 0.0, 0.0), Vec3(1e-13, 0.0, 0.0))
