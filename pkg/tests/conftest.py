"""Shared builders for synthetic trials and random geometry."""

import numpy as np
import pytest

from stemfit.geometry import Frame, RigidTransform, UnitQuaternion, Vec3, Wrench
from stemfit.spring_model import SpringParams, Trial, TrialSample


def random_unit_quaternion(rng) -> UnitQuaternion:
    q = rng.normal(size=4)
    return UnitQuaternion(q[0], q[1], q[2], q[3])


def random_transform(rng, translation_scale=1.0) -> RigidTransform:
    return RigidTransform(
        rotation=random_unit_quaternion(rng),
        translation=Vec3.from_array(rng.normal(scale=translation_scale, size=3)),
    )


def static_trial(forces, spring=SpringParams(632.0, 0.1), grasp=Vec3(0.0, 0.0, 0.0)):
    """Trial with identity poses and the given sensor-frame forces."""
    samples = tuple(
        TrialSample(
            t=0.002 * i,
            pose=RigidTransform.identity(),
            wrench=Wrench(Vec3.from_array(f), Vec3(0.0, 0.0, 0.0), Frame.SENSOR),
        )
        for i, f in enumerate(forces)
    )
    return Trial(samples=samples, spring=spring, grasp_point=grasp, id="static")


def pull_trial(
    r_o,
    spring=SpringParams(632.0, 0.1),
    n=20,
    direction=(0.0, 0.0, -1.0),
    speed=0.05,
    rng=None,
    noise=0.0,
):
    """Hand-built straight pull consistent with the model: the fruit starts at
    rest-length distance from ``r_o`` and retreats along ``direction``."""
    r_o = np.asarray(r_o, dtype=float)
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    start = r_o + spring.l * direction
    samples = []
    for i in range(n):
        t = 0.002 * i
        pos = start + speed * t * direction
        d = r_o - pos
        dist = float(np.linalg.norm(d))
        force = spring.k * (dist - spring.l) * d / dist
        if noise > 0.0 and rng is not None:
            force = force + rng.normal(0.0, noise, size=3)
        samples.append(
            TrialSample(
                t=t,
                pose=RigidTransform(UnitQuaternion.identity(), Vec3.from_array(pos)),
                wrench=Wrench(Vec3.from_array(force), Vec3(0.0, 0.0, 0.0), Frame.SENSOR),
            )
        )
    return Trial(
        samples=tuple(samples),
        spring=spring,
        grasp_point=Vec3(0.0, 0.0, 0.0),
        ground_truth=Vec3.from_array(r_o),
        id="pull",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
