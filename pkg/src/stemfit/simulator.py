"""Synthetic pull-trial generation against the spring-tether model.

Stands in for a physical data-collection rig: each trial draws an attachment
point and a hand orientation, pulls the hand back along the palm normal at
constant speed, and records the sensor-frame wrench the model produces,
optionally with per-axis Gaussian force noise and a compliant-grasp
perturbation that lets the fruit drift inside the hand under load.

The palm normal is the sensor frame's +z axis expressed in the world frame.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import SimulationConfigError
from .geometry import Frame, RigidTransform, UnitQuaternion, Vec3, Wrench
from .spring_model import Label, SpringParams, Trial, TrialSample

_ZERO_COMPLIANCE = ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))


@dataclass(frozen=True)
class SimConfig:
    """Physical and sampling parameters for synthetic trials.

    ``off_axis_angle_deg`` tilts the spring's rest direction away from the
    palm normal; 0 gives a pull straight along the stretch axis, larger
    angles lengthen the window needed to reach ``force_cap``.
    ``grasp_compliance`` is a symmetric PSD matrix (m/N) mapping sensor-frame
    force to fruit drift within the hand; failure-class corpus trials draw a
    random anisotropic compliance with eigenvalues in
    ``failure_compliance_range``.
    """

    k: float = 632.0
    l: float = 0.10
    pull_distance: float = 0.15
    pull_speed: float = 0.33
    sample_rate: float = 500.0
    force_cap: float = 5.0
    noise_sigma: float = 0.1
    grasp_compliance: tuple = _ZERO_COMPLIANCE
    attachment_region: tuple = (Vec3(0.4, -0.3, 0.2), Vec3(0.8, 0.3, 0.6))
    off_axis_angle_deg: float = 0.0
    failure_compliance_range: tuple = (0.002, 0.010)
    grasp_point: Vec3 = Vec3(0.0, 0.0, 0.05)
    seed: int = 0

    def __post_init__(self):
        for name in ("k", "l", "pull_distance", "pull_speed", "sample_rate", "force_cap"):
            if not (getattr(self, name) > 0.0):
                raise ValueError(f"{name} must be positive")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be >= 0")
        comp = np.asarray(self.grasp_compliance, dtype=float)
        if comp.shape != (3, 3):
            raise ValueError("grasp_compliance must be a 3x3 matrix")
        if not np.allclose(comp, comp.T, atol=1e-12):
            raise ValueError("grasp_compliance must be symmetric")
        if np.linalg.eigvalsh(comp).min() < -1e-12:
            raise ValueError("grasp_compliance must be positive semidefinite")
        object.__setattr__(
            self, "grasp_compliance", tuple(tuple(float(v) for v in row) for row in comp)
        )
        lo, hi = self.attachment_region
        if not all(getattr(lo, a) < getattr(hi, a) for a in ("x", "y", "z")):
            raise ValueError("attachment_region must be a box with min < max per axis")
        clo, chi = self.failure_compliance_range
        if not (0.0 < clo <= chi):
            raise ValueError("failure_compliance_range must satisfy 0 < lo <= hi")
        if not (0.0 <= self.off_axis_angle_deg < 90.0):
            raise ValueError("off_axis_angle_deg must lie in [0, 90)")

    @property
    def compliance_matrix(self) -> np.ndarray:
        return np.asarray(self.grasp_compliance, dtype=float)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "l": self.l,
            "pull_distance": self.pull_distance,
            "pull_speed": self.pull_speed,
            "sample_rate": self.sample_rate,
            "force_cap": self.force_cap,
            "noise_sigma": self.noise_sigma,
            "grasp_compliance": [list(row) for row in self.grasp_compliance],
            "attachment_region": {
                "min": [self.attachment_region[0].x, self.attachment_region[0].y, self.attachment_region[0].z],
                "max": [self.attachment_region[1].x, self.attachment_region[1].y, self.attachment_region[1].z],
            },
            "off_axis_angle_deg": self.off_axis_angle_deg,
            "failure_compliance_range": list(self.failure_compliance_range),
            "grasp_point": [self.grasp_point.x, self.grasp_point.y, self.grasp_point.z],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        known = set(cls().to_dict())
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown simulator config fields: {sorted(unknown)}")
        kwargs = dict(data)
        if "grasp_compliance" in kwargs:
            kwargs["grasp_compliance"] = tuple(
                tuple(float(v) for v in row) for row in kwargs["grasp_compliance"]
            )
        if "attachment_region" in kwargs:
            region = kwargs["attachment_region"]
            kwargs["attachment_region"] = (
                Vec3.from_array(region["min"]),
                Vec3.from_array(region["max"]),
            )
        if "failure_compliance_range" in kwargs:
            kwargs["failure_compliance_range"] = tuple(kwargs["failure_compliance_range"])
        if "grasp_point" in kwargs:
            kwargs["grasp_point"] = Vec3.from_array(kwargs["grasp_point"])
        return cls(**kwargs)


@dataclass(frozen=True)
class SimTrialRecord:
    """A generated trial plus the generation facts a consumer may want."""

    trial: Trial
    true_pull_direction: Vec3
    orientation: UnitQuaternion
    compliance_applied: bool


def sample_orientation(rng: np.random.Generator) -> UnitQuaternion:
    """Draw a hand orientation whose palm normal is area-uniform on the
    quarter sphere: elevation in [0, 90] degrees above horizontal (never with
    gravity), azimuth spanning the half-plane around +x, plus a uniform roll
    about the normal."""
    u = rng.uniform(size=3)
    elevation = math.asin(u[0])
    azimuth = -0.5 * math.pi + math.pi * u[1]
    roll = 2.0 * math.pi * u[2]
    normal = np.array(
        [
            math.cos(elevation) * math.cos(azimuth),
            math.cos(elevation) * math.sin(azimuth),
            math.sin(elevation),
        ]
    )
    a, b = _perpendicular_basis(normal)
    col0 = math.cos(roll) * a + math.sin(roll) * b
    col1 = -math.sin(roll) * a + math.cos(roll) * b
    return UnitQuaternion.from_rotation_matrix(np.column_stack([col0, col1, normal]))


def _perpendicular_basis(unit: np.ndarray):
    ref = np.array([0.0, 0.0, 1.0])
    a = np.cross(ref, unit)
    if np.linalg.norm(a) < 1e-9:
        ref = np.array([1.0, 0.0, 0.0])
        a = np.cross(ref, unit)
    a = a / np.linalg.norm(a)
    return a, np.cross(unit, a)


def _rotate_about(vec: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return vec * c + np.cross(axis, vec) * s + axis * np.dot(axis, vec) * (1.0 - c)


def _spring_force(r_o: np.ndarray, fruit: np.ndarray, k: float, l: float) -> np.ndarray:
    d = r_o - fruit
    dist = float(np.linalg.norm(d))
    return k * (dist - l) * d / dist


def _solve_equilibrium(r_o, rigid_pos, comp_world, k, l, x_init):
    """Fruit position where the spring force and the compliant grasp agree.

    Solves x = rigid_pos + C_w f(x) by Newton; plain fixed-point iteration
    diverges whenever k times the compliance exceeds one. Converges to a
    position residual below 1e-13 m, i.e. force consistency well under 1e-9 N.
    """
    eye = np.eye(3)
    x = x_init.copy()
    for _ in range(80):
        d = r_o - x
        dist = float(np.linalg.norm(d))
        unit = d / dist
        f = k * (dist - l) * unit
        h = x - rigid_pos - comp_world @ f
        if float(np.linalg.norm(h)) < 1e-13:
            return x, f
        jd = k * ((1.0 - l / dist) * eye + (l / dist) * np.outer(unit, unit))
        x = x - np.linalg.solve(eye + comp_world @ jd, h)
    raise SimulationConfigError("compliant-grasp equilibrium solve did not converge")


def generate_trial(
    config: SimConfig, rng: np.random.Generator, trial_id: str = "trial-0"
) -> SimTrialRecord:
    """Generate one pull trial.

    The attachment point is drawn from the configured box, the hand
    orientation from the quarter sphere. The fruit starts at rest-length
    distance from the attachment; the hand then retreats along the palm
    normal, and sampling stops just before the noiseless force magnitude
    reaches ``force_cap``.
    """
    lo = config.attachment_region[0].as_array()
    hi = config.attachment_region[1].as_array()
    r_o = rng.uniform(lo, hi)
    orientation = sample_orientation(rng)
    rot = orientation.rotation_matrix()
    normal = rot @ np.array([0.0, 0.0, 1.0])

    spring_axis = normal
    if config.off_axis_angle_deg > 0.0:
        a, b = _perpendicular_basis(normal)
        psi = rng.uniform(0.0, 2.0 * math.pi)
        tilt_axis = math.cos(psi) * a + math.sin(psi) * b
        spring_axis = _rotate_about(normal, tilt_axis, math.radians(config.off_axis_angle_deg))

    fruit_start = r_o - config.l * spring_axis
    grasp_sensor = config.grasp_point.as_array()
    sensor_start = fruit_start - rot @ grasp_sensor

    comp_sensor = config.compliance_matrix
    compliant = bool(np.any(comp_sensor != 0.0))
    comp_world = rot @ comp_sensor @ rot.T if compliant else None

    dt = 1.0 / config.sample_rate
    step_travel = config.pull_speed * dt
    n_max = int(math.floor(config.pull_distance / step_travel))

    times = []
    sensor_positions = []
    forces_world = []
    fruit_true = []
    capped = False
    x_warm = fruit_start.copy()
    for i in range(n_max + 1):
        rigid_pos = fruit_start - (i * step_travel) * normal
        if compliant:
            x_true, f_world = _solve_equilibrium(
                r_o, rigid_pos, comp_world, config.k, config.l, x_warm
            )
            x_warm = x_true
        elif i == 0:
            x_true, f_world = rigid_pos, np.zeros(3)
        else:
            x_true = rigid_pos
            f_world = _spring_force(r_o, rigid_pos, config.k, config.l)
        if float(np.linalg.norm(f_world)) >= config.force_cap:
            capped = True
            break
        times.append(i * dt)
        sensor_positions.append(sensor_start - (i * step_travel) * normal)
        forces_world.append(f_world)
        fruit_true.append(x_true)
    if not capped:
        raise SimulationConfigError(
            f"force cap {config.force_cap} N not reached within pull_distance "
            f"{config.pull_distance} m; lengthen the pull or soften the cap"
        )
    if len(times) < 2:
        raise SimulationConfigError(
            "force cap reached before the second sample; raise sample_rate or "
            "slow the pull"
        )

    n = len(times)
    forces_sensor = np.array([rot.T @ f for f in forces_world])
    forces_sensor = forces_sensor + rng.normal(0.0, config.noise_sigma, size=(n, 3))
    grasp_true_sensor = np.array([rot.T @ (x - p) for x, p in zip(fruit_true, sensor_positions)])
    torques_sensor = np.cross(grasp_true_sensor, forces_sensor)

    samples = tuple(
        TrialSample(
            t=times[i],
            pose=RigidTransform(orientation, Vec3.from_array(sensor_positions[i])),
            wrench=Wrench(
                Vec3.from_array(forces_sensor[i]),
                Vec3.from_array(torques_sensor[i]),
                Frame.SENSOR,
            ),
        )
        for i in range(n)
    )
    trial = Trial(
        samples=samples,
        spring=SpringParams(config.k, config.l),
        grasp_point=config.grasp_point,
        label=Label.FAILURE if compliant else Label.SUCCESS,
        ground_truth=Vec3.from_array(r_o),
        id=trial_id,
    )
    return SimTrialRecord(
        trial=trial,
        true_pull_direction=Vec3.from_array(-normal),
        orientation=orientation,
        compliance_applied=compliant,
    )


def generate_corpus(
    config: SimConfig,
    n_trials: int,
    failure_fraction: float,
    seed: int | None = None,
) -> list[SimTrialRecord]:
    """Generate a labeled corpus: rigid-grasp Success trials first, then
    Failure trials with randomly drawn anisotropic grasp compliance.

    Each trial derives its own generator from the seed and its index, so the
    corpus is reproducible and trials could be generated in any order.
    """
    if not 0.0 <= failure_fraction <= 1.0:
        raise ValueError("failure_fraction must lie in [0, 1]")
    if n_trials < 0:
        raise ValueError("n_trials must be >= 0")
    n_fail = round(n_trials * failure_fraction)
    n_success = n_trials - n_fail
    root = np.random.SeedSequence(config.seed if seed is None else seed)
    children = root.spawn(n_trials)
    width = max(3, len(str(max(n_trials - 1, 1))))
    records = []
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        cfg = config
        if i >= n_success:
            lo, hi = config.failure_compliance_range
            eigenvalues = rng.uniform(lo, hi, size=3)
            q = rng.normal(size=4)
            basis = UnitQuaternion(q[0], q[1], q[2], q[3]).rotation_matrix()
            comp = basis @ np.diag(eigenvalues) @ basis.T
            cfg = replace(
                config,
                grasp_compliance=tuple(tuple(float(v) for v in row) for row in comp),
            )
        records.append(generate_trial(cfg, rng, trial_id=f"trial_{i:0{width}d}"))
    return records
