"""Spring-tether force model: trial containers plus the fit cost, the tension
constraints, and their analytic derivatives.

The stem is modeled as a linear spring of stiffness ``k`` and resting length
``l`` anchored at a fixed world-frame attachment point ``r_o``. With
``d_t = r_o - r_fruit(t)`` the predicted pull on the fruit is
``k * (|d_t| - l) * d_t / |d_t|``. The fit cost is the mean squared residual
between predicted and measured world-frame forces over a trial, and each
sample contributes one tension constraint ``l - |d_t| <= 0``.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import SingularityError
from .geometry import Frame, RigidTransform, Vec3, Wrench, transform_point

SINGULARITY_DISTANCE = 1e-12


class Label(Enum):
    SUCCESS = "success"
    FAILURE = "failure"


@dataclass(frozen=True)
class SpringParams:
    """Stiffness (N/m) and resting length (m) of the stem spring."""

    k: float
    l: float

    def __post_init__(self):
        if not (self.k > 0.0):
            raise ValueError(f"spring stiffness must be positive, got {self.k}")
        if not (self.l > 0.0):
            raise ValueError(f"spring resting length must be positive, got {self.l}")


@dataclass(frozen=True)
class TrialSample:
    """One timestep: pose of the sensor frame and the sensor-frame wrench."""

    t: float
    pose: RigidTransform
    wrench: Wrench


@dataclass(frozen=True)
class Trial:
    """A pull recording: samples, spring parameters, grasp geometry, labels."""

    samples: tuple[TrialSample, ...]
    spring: SpringParams
    grasp_point: Vec3
    label: Label = Label.SUCCESS
    ground_truth: Vec3 | None = None
    id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if len(self.samples) < 2:
            raise ValueError(f"trial needs at least 2 samples, got {len(self.samples)}")
        for i, sample in enumerate(self.samples):
            if sample.wrench.frame is not Frame.SENSOR:
                raise ValueError(f"samples[{i}]: wrench must be in the sensor frame")
            if i > 0 and not sample.t > self.samples[i - 1].t:
                raise ValueError(
                    f"samples[{i}]: timestamp {sample.t} not strictly greater "
                    f"than previous {self.samples[i - 1].t}"
                )
        if self.ground_truth is not None:
            start = apple_position_world(self.samples[0], self.grasp_point)
            dist = (self.ground_truth - start).norm()
            if not (math.isfinite(dist) and dist > 0.0):
                raise ValueError(
                    "ground_truth must lie at a positive distance from the "
                    f"initial fruit position (got {dist})"
                )


@dataclass(frozen=True)
class ModelEval:
    """Cost, gradient, and per-sample tension constraint data at one candidate."""

    cost: float
    gradient: Vec3
    constraint_values: tuple[float, ...]
    constraint_jacobian: tuple[Vec3, ...]


class TrialArrays:
    """Per-trial arrays precomputed for fast repeated model evaluation.

    ``grasp_world`` holds the fruit positions implied by the poses and the
    constant sensor-frame grasp point; ``force_world`` holds the measured
    forces already rotated into the world frame.
    """

    def __init__(self, times, grasp_world, force_world, k, l):
        self.times = times
        self.grasp_world = grasp_world
        self.force_world = force_world
        self.k = float(k)
        self.l = float(l)

    @classmethod
    def from_trial(cls, trial: Trial) -> "TrialArrays":
        n = len(trial.samples)
        times = np.empty(n)
        grasp_world = np.empty((n, 3))
        force_world = np.empty((n, 3))
        grasp = trial.grasp_point.as_array()
        for i, sample in enumerate(trial.samples):
            rot = sample.pose.rotation.rotation_matrix()
            times[i] = sample.t
            grasp_world[i] = rot @ grasp + sample.pose.translation.as_array()
            force_world[i] = rot @ sample.wrench.force.as_array()
        return cls(times, grasp_world, force_world, trial.spring.k, trial.spring.l)

    def __len__(self) -> int:
        return self.times.size


def _displacements(r_o: np.ndarray, arrays: TrialArrays):
    d = r_o[None, :] - arrays.grasp_world
    dist = np.linalg.norm(d, axis=1)
    if np.any(dist <= SINGULARITY_DISTANCE):
        idx = int(np.argmin(dist))
        raise SingularityError(
            f"candidate attachment point coincides with fruit position at "
            f"sample {idx} (distance {dist[idx]:.3e} m)"
        )
    return d, dist


def cost_and_gradient(r_o: np.ndarray, arrays: TrialArrays) -> tuple[float, np.ndarray]:
    """Mean squared force residual and its analytic gradient at ``r_o``."""
    d, dist = _displacements(r_o, arrays)
    unit = d / dist[:, None]
    pred = (arrays.k * (dist - arrays.l))[:, None] * unit
    resid = pred - arrays.force_world
    n = dist.size
    cost = float(np.sum(resid * resid) / n)
    # Force Jacobian wrt r_o is k[(1 - l/|d|) I + (l/|d|) u u^T]; apply its
    # transpose to each residual and average.
    a = arrays.k * (1.0 - arrays.l / dist)
    b = arrays.k * arrays.l / dist
    dot = np.sum(unit * resid, axis=1)
    grad = (2.0 / n) * np.sum(a[:, None] * resid + (b * dot)[:, None] * unit, axis=0)
    return cost, grad


def cost_hessian(r_o: np.ndarray, arrays: TrialArrays) -> np.ndarray:
    """Exact Hessian of the cost (Gauss-Newton part plus residual curvature)."""
    d, dist = _displacements(r_o, arrays)
    unit = d / dist[:, None]
    pred = (arrays.k * (dist - arrays.l))[:, None] * unit
    resid = pred - arrays.force_world
    n = dist.size
    a = arrays.k * (1.0 - arrays.l / dist)
    b = arrays.k * arrays.l / dist
    eye = np.eye(3)
    uu = np.einsum("ti,tj->tij", unit, unit)
    jtj = (a * a)[:, None, None] * eye[None] + (2.0 * a * b + b * b)[:, None, None] * uu
    dot = np.sum(unit * resid, axis=1)
    perp = resid - dot[:, None] * unit
    pu = np.einsum("ti,tj->tij", perp, unit)
    curv = (b / dist)[:, None, None] * (
        pu + pu.transpose(0, 2, 1) + dot[:, None, None] * (eye[None] - uu)
    )
    return (2.0 / n) * np.sum(jtj + curv, axis=0)


def constraint_values_jacobian(
    r_o: np.ndarray, arrays: TrialArrays
) -> tuple[np.ndarray, np.ndarray]:
    """Tension constraints ``l - |d_t|`` (feasible when <= 0) and their rows."""
    d, dist = _displacements(r_o, arrays)
    values = arrays.l - dist
    jac = -d / dist[:, None]
    return values, jac


def min_sample_distance(r_o: np.ndarray, arrays: TrialArrays) -> float:
    d = r_o[None, :] - arrays.grasp_world
    return float(np.linalg.norm(d, axis=1).min())


def apple_position_world(sample: TrialSample, grasp_point: Vec3) -> Vec3:
    """World-frame fruit position at one timestep (grasp point is sensor-fixed)."""
    return transform_point(sample.pose, grasp_point)


def predict_force(r_o: Vec3, r_a_t: Vec3, spring: SpringParams) -> Vec3:
    """Spring force on the fruit for attachment ``r_o`` and fruit at ``r_a_t``.

    Evaluated as written even when ``|d| < l`` (a pushing force): the solver's
    tension constraint excludes that regime at the solution, but keeping the
    function smooth there keeps line searches well behaved.
    """
    d = r_o.as_array() - r_a_t.as_array()
    dist = float(np.linalg.norm(d))
    if dist <= SINGULARITY_DISTANCE:
        raise SingularityError(
            f"attachment point within {SINGULARITY_DISTANCE} m of the fruit position"
        )
    return Vec3.from_array(spring.k * (dist - spring.l) * d / dist)


def evaluate(r_o: Vec3, trial: Trial) -> ModelEval:
    """Cost, gradient, and constraint data for one candidate attachment point."""
    arrays = TrialArrays.from_trial(trial)
    x = r_o.as_array()
    cost, grad = cost_and_gradient(x, arrays)
    values, jac = constraint_values_jacobian(x, arrays)
    return ModelEval(
        cost=cost,
        gradient=Vec3.from_array(grad),
        constraint_values=tuple(float(v) for v in values),
        constraint_jacobian=tuple(Vec3.from_array(row) for row in jac),
    )


def bias_compensate(trial: Trial) -> Trial:
    """Subtract the first sample's wrench from every sample.

    Makes the measured force exactly zero at the start of the pull, matching
    the model's zero force at rest; removes constant sensor offsets and the
    fruit's weight in one step.
    """
    first = trial.samples[0].wrench
    f0 = first.force
    t0 = first.torque
    new_samples = tuple(
        TrialSample(
            t=s.t,
            pose=s.pose,
            wrench=Wrench(s.wrench.force - f0, s.wrench.torque - t0, s.wrench.frame),
        )
        for s in trial.samples
    )
    return replace(trial, samples=new_samples)
