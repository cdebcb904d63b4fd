"""Constrained least-squares estimation of the attachment point.

Each run has two stages. An SQP stage (scipy's SLSQP with the analytic cost
gradient and constraint Jacobian) finds the basin; an active-set Newton polish
then drives the KKT residual below the convergence gate. Polish steps are
accepted on KKT-residual decrease rather than cost decrease, because cost
differences near the optimum fall below double-precision resolution long
before the gradient does.

``fit`` wraps runs in the reseeding schedule: while the best mean squared
error stays above ``mse_target``, the next run is seeded at the previous
run's output, up to ``max_restarts`` times.
"""

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as _scipy_minimize
from scipy.optimize import nnls

from .errors import EvaluationFailureError, SingularityError
from .geometry import Vec3
from .spring_model import (
    Trial,
    TrialArrays,
    cost_and_gradient,
    cost_hessian,
    constraint_values_jacobian,
    min_sample_distance,
)

# Converged fits certify a projected-gradient norm below this (N^2/m) and a
# constraint violation within SolverConfig.constraint_tolerance.
KKT_GRADIENT_TOL = 1e-6
# Constraints within this of their boundary (m) join multiplier estimation.
_ACTIVE_WIDTH = 1e-6
_SLSQP_FTOL = 1e-12
_POLISH_MAX_ITER = 60
_MAX_HALVINGS = 30


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and schedule limits for a fit.

    ``initial_offset_magnitude`` of ``None`` means "use the trial's resting
    length". SLSQP runs at a fixed internal tolerance; the configured
    relative tolerances govern the polish stage's stagnation checks.
    """

    mse_target: float = 5.0
    max_restarts: int = 5
    max_iterations_per_run: int = 300
    relative_step_tolerance: float = 1e-8
    relative_cost_tolerance: float = 1e-10
    constraint_tolerance: float = 1e-8
    initial_offset_magnitude: float | None = None

    def __post_init__(self):
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be >= 0")
        if self.max_iterations_per_run < 1:
            raise ValueError("max_iterations_per_run must be >= 1")
        for name in (
            "mse_target",
            "relative_step_tolerance",
            "relative_cost_tolerance",
            "constraint_tolerance",
        ):
            if not (getattr(self, name) > 0.0):
                raise ValueError(f"{name} must be positive")
        if self.initial_offset_magnitude is not None and not (
            self.initial_offset_magnitude > 0.0
        ):
            raise ValueError("initial_offset_magnitude must be positive")

    def to_dict(self) -> dict:
        return {
            "mse_target": self.mse_target,
            "max_restarts": self.max_restarts,
            "max_iterations_per_run": self.max_iterations_per_run,
            "relative_step_tolerance": self.relative_step_tolerance,
            "relative_cost_tolerance": self.relative_cost_tolerance,
            "constraint_tolerance": self.constraint_tolerance,
            "initial_offset_magnitude": self.initial_offset_magnitude,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        unknown = set(data) - set(cls().to_dict())
        if unknown:
            raise ValueError(f"unknown solver config fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class FitResult:
    """Outcome of one run or one full reseeding schedule."""

    r_o_hat: Vec3
    final_mse: float
    iterations_total: int
    restarts_used: int
    runtime: float
    converged: bool
    max_constraint_violation: float
    projected_gradient: float
    trace: tuple[tuple[int, Vec3, float], ...] | None = None


class _Iterate:
    """Fully evaluated candidate point."""

    __slots__ = ("x", "cost", "grad", "values", "jac", "kkt", "lam", "active", "viol")

    def __init__(self, x: np.ndarray, arrays: TrialArrays):
        self.x = x
        self.cost, self.grad = cost_and_gradient(x, arrays)
        self.values, self.jac = constraint_values_jacobian(x, arrays)
        self.kkt, self.lam, self.active = _projected_gradient(
            self.grad, self.values, self.jac
        )
        self.viol = max(0.0, float(self.values.max()))

    def meets(self, constraint_tolerance: float, margin: float = 1.0) -> bool:
        return (
            self.kkt <= KKT_GRADIENT_TOL * margin
            and self.viol <= constraint_tolerance * margin
        )

    def merit(self, constraint_tolerance: float) -> float:
        return max(self.kkt / KKT_GRADIENT_TOL, self.viol / constraint_tolerance)


def _projected_gradient(grad, values, jac):
    """KKT stationarity residual: distance from -grad to the cone spanned by
    near-active constraint normals with nonnegative multipliers."""
    active = np.flatnonzero(values >= -_ACTIVE_WIDTH)
    if active.size == 0:
        return float(np.linalg.norm(grad)), np.zeros(0), active
    lam, rnorm = nnls(jac[active].T, -grad)
    return float(rnorm), lam, active


def _better(a: _Iterate | None, b: _Iterate, ctol: float) -> _Iterate:
    """Prefer feasible iterates, then lower cost, then lower KKT residual.

    Costs are compared with a tie band: two points whose constraint
    violations both sit below tolerance can differ in cost by up to the
    gradient norm times that tolerance without either being meaningfully
    better, and inside that band the KKT residual decides. Without the band
    a barely-infeasible stall point beats the true boundary optimum forever.
    """
    if a is None:
        return b
    a_feas = a.viol <= ctol
    b_feas = b.viol <= ctol
    if a_feas != b_feas:
        return a if a_feas else b
    grad_scale = max(float(np.linalg.norm(a.grad)), float(np.linalg.norm(b.grad)))
    tie = 1e-12 * (1.0 + min(a.cost, b.cost)) + ctol * grad_scale
    if abs(a.cost - b.cost) > tie:
        return a if a.cost < b.cost else b
    return a if a.kkt <= b.kkt else b


def _lagrangian_hessian(it: _Iterate, arrays: TrialArrays) -> np.ndarray:
    """Cost Hessian plus the curvature of the active sphere constraints.

    The constraint term matters whenever the multipliers are large (heavily
    model-violating trials): it is negative along the boundary and omitting
    it makes Newton steps two orders of magnitude too timid.
    """
    hess = cost_hessian(it.x, arrays)
    eye = np.eye(3)
    for lam_i, t in zip(it.lam, it.active):
        if lam_i <= 0.0:
            continue
        d = it.x - arrays.grasp_world[t]
        dist = float(np.linalg.norm(d))
        unit = d / dist
        # hessian of (l - |d|) is -(I - u u^T) / |d|
        hess = hess - lam_i * (eye - np.outer(unit, unit)) / dist
    return hess


def _kkt_step(hess, it: _Iterate):
    """Equality-constrained Newton step on the current working set.

    The working set starts from violated constraints plus active ones with a
    positive multiplier estimate; constraints whose solved multiplier comes
    out negative are dropped one at a time.
    """
    work = set(np.flatnonzero(it.values > 0.0).tolist())
    for i, idx in enumerate(it.active):
        if it.lam[i] > 1e-14:
            work.add(int(idx))
    work = sorted(work)
    for _ in range(len(work) + 1):
        m = len(work)
        kkt_mat = np.zeros((3 + m, 3 + m))
        kkt_mat[:3, :3] = hess
        if m:
            rows = it.jac[work]
            kkt_mat[:3, 3:] = rows.T
            kkt_mat[3:, :3] = rows
        rhs = np.concatenate([-it.grad, -it.values[work]])
        try:
            sol = np.linalg.solve(kkt_mat, rhs)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(kkt_mat, rhs, rcond=None)[0]
        if not np.all(np.isfinite(sol)):
            sol = np.linalg.lstsq(kkt_mat, rhs, rcond=None)[0]
        step, lam = sol[:3], sol[3:]
        if m == 0 or lam.min() >= -1e-12:
            return step
        work.pop(int(np.argmin(lam)))
    return step


# polish only refines near-stationary, near-feasible points; far-out iterates
# belong to the SQP stage
_POLISH_KKT_GATE = 1.0
_POLISH_VIOL_GATE = 1e-6


def _polish(start: _Iterate, arrays: TrialArrays, config: SolverConfig, budget: int):
    """Active-set Newton refinement; returns (best iterate, iterations used).

    Steps this close to the optimum are legitimately tiny, so stagnation is
    judged on the merit's decay rate, not on step size. A step is never
    accepted into new constraint violation beyond tolerance.
    """
    ctol = config.constraint_tolerance
    x_scale = max(arrays.l, float(np.linalg.norm(start.x)))
    if start.kkt > _POLISH_KKT_GATE or start.viol > _POLISH_VIOL_GATE:
        return start, 0
    current = start
    mu = 0.0
    iterations = 0
    stalled = 0
    while iterations < budget and current.merit(ctol) > 0.5:
        iterations += 1
        hess = _lagrangian_hessian(current, arrays)
        h_scale = max(abs(float(np.trace(hess))) / 3.0, 1.0)
        step = _kkt_step(hess + mu * h_scale * np.eye(3), current)
        step_norm = float(np.linalg.norm(step))
        if not math.isfinite(step_norm) or step_norm == 0.0:
            break
        accepted = None
        alpha = 1.0
        viol_cap = max(current.viol, ctol)
        for _ in range(_MAX_HALVINGS):
            try:
                trial_it = _Iterate(current.x + alpha * step, arrays)
            except SingularityError:
                alpha *= 0.5
                continue
            if trial_it.merit(ctol) < current.merit(ctol) and trial_it.viol <= viol_cap:
                accepted = trial_it
                break
            alpha *= 0.5
        if accepted is None:
            if step_norm <= config.relative_step_tolerance * x_scale:
                break  # no acceptable step and nothing left to move
            mu = 10.0 * mu if mu > 0.0 else 1e-8
            if mu > 1e6:
                break
            continue
        mu *= 0.25
        previous_merit = current.merit(ctol)
        current = accepted
        if current.merit(ctol) > 0.9 * previous_merit:
            stalled += 1
            if stalled >= 2:
                break
        else:
            stalled = 0
    # acceptance is monotone in merit, so the last iterate is the best one
    return current, iterations


def initial_guess(trial: Trial, offset_magnitude: float | None = None) -> Vec3:
    """Initial fruit position plus an offset along the mean measured force.

    The offset length defaults to the resting length, which puts the guess on
    the first sample's tension-constraint boundary and away from the model
    singularity. Falls back to the world z axis when the forces average out
    to nearly zero.
    """
    arrays = TrialArrays.from_trial(trial)
    offset = trial.spring.l if offset_magnitude is None else offset_magnitude
    return Vec3.from_array(_initial_guess_array(arrays, offset))


def _initial_guess_array(arrays: TrialArrays, offset: float) -> np.ndarray:
    mean_force = arrays.force_world.mean(axis=0)
    norm = float(np.linalg.norm(mean_force))
    direction = mean_force / norm if norm >= 1e-9 else np.array([0.0, 0.0, 1.0])
    return arrays.grasp_world[0] + offset * direction


def minimize(
    trial: Trial,
    x0: Vec3,
    config: SolverConfig = SolverConfig(),
    *,
    collect_trace: bool = False,
) -> FitResult:
    """One constrained minimization run from ``x0``."""
    arrays = TrialArrays.from_trial(trial)
    start = time.perf_counter()
    result = _minimize_arrays(arrays, x0.as_array(), config, collect_trace, 0)
    return _to_fit_result(result, restarts_used=0, runtime=time.perf_counter() - start)


class _RunResult:
    __slots__ = ("iterate", "iterations", "converged", "trace")

    def __init__(self, iterate, iterations, converged, trace):
        self.iterate = iterate
        self.iterations = iterations
        self.converged = converged
        self.trace = trace


def _minimize_arrays(
    arrays: TrialArrays,
    x0: np.ndarray,
    config: SolverConfig,
    collect_trace: bool,
    trace_base: int,
) -> _RunResult:
    if min_sample_distance(x0, arrays) <= 1e-12:
        raise EvaluationFailureError(
            "starting point coincides with a fruit position sample"
        )
    ctol = config.constraint_tolerance
    budget = config.max_iterations_per_run
    used = 0
    trace: list[tuple[int, Vec3, float]] = []

    def note(it: _Iterate):
        if collect_trace:
            trace.append((trace_base + used, Vec3.from_array(it.x.copy()), it.cost))

    current = _Iterate(np.asarray(x0, dtype=float), arrays)
    best = current
    note(current)
    if current.meets(ctol):
        return _RunResult(current, 0, True, tuple(trace) if collect_trace else None)

    def objective(x):
        return cost_and_gradient(x, arrays)

    def cons_fun(x):
        values, _ = constraint_values_jacobian(x, arrays)
        return -values  # scipy wants >= 0 when feasible

    def cons_jac(x):
        _, jac = constraint_values_jacobian(x, arrays)
        return -jac

    # cycle the SQP stage while it makes headway: a restart resets its
    # quasi-Newton model, which is what digs it out of curved valleys
    stagnant = 0
    while used < budget and stagnant < 2:
        cycle_start = current
        try:
            res = _scipy_minimize(
                objective,
                current.x,
                jac=True,
                method="SLSQP",
                constraints=[{"type": "ineq", "fun": cons_fun, "jac": cons_jac}],
                options={
                    "maxiter": budget - used,
                    "ftol": min(config.relative_cost_tolerance, _SLSQP_FTOL),
                },
            )
        except SingularityError:
            break  # keep the best evaluated iterate
        used += max(int(res.nit), 1)
        if np.all(np.isfinite(res.x)) and min_sample_distance(res.x, arrays) > 1e-12:
            current = _Iterate(res.x, arrays)
            best = _better(best, current, ctol)
            note(current)
        if current.meets(ctol):
            break
        if used < budget:
            polished, polish_used = _polish(
                current, arrays, config, min(_POLISH_MAX_ITER, budget - used)
            )
            used += polish_used
            if polished is not current:
                current = polished
                best = _better(best, current, ctol)
                note(current)
            if current.meets(ctol):
                break
        cost_drop = cycle_start.cost - current.cost
        made_progress = (
            cost_drop > config.relative_cost_tolerance * (1.0 + abs(cycle_start.cost))
            or current.kkt < 0.75 * cycle_start.kkt
            or current.viol < 0.75 * cycle_start.viol
        )
        stagnant = 0 if made_progress else stagnant + 1

    final = _better(best, current, ctol)
    converged = final.meets(ctol)
    return _RunResult(final, used, converged, tuple(trace) if collect_trace else None)


def _to_fit_result(run: _RunResult, restarts_used: int, runtime: float) -> FitResult:
    it = run.iterate
    return FitResult(
        r_o_hat=Vec3.from_array(it.x),
        final_mse=it.cost,
        iterations_total=run.iterations,
        restarts_used=restarts_used,
        runtime=runtime,
        converged=run.converged,
        max_constraint_violation=it.viol,
        projected_gradient=it.kkt,
        trace=run.trace,
    )


def fit(
    trial: Trial,
    config: SolverConfig = SolverConfig(),
    *,
    collect_trace: bool = False,
) -> FitResult:
    """Full estimation schedule: initial run plus MSE-target reseeding.

    The returned point is the best iterate seen across runs (feasible ones
    preferred, then lowest cost); iteration counts and runtime aggregate over
    all runs. Runs that die on a model-evaluation failure are recorded and
    the schedule stops early; if no run produced an iterate the failure
    propagates.
    """
    start = time.perf_counter()
    arrays = TrialArrays.from_trial(trial)
    offset = (
        trial.spring.l
        if config.initial_offset_magnitude is None
        else config.initial_offset_magnitude
    )
    x0 = _initial_guess_array(arrays, offset)
    ctol = config.constraint_tolerance

    trace: list[tuple[int, Vec3, float]] = []
    iterations_total = 0
    restarts_used = 0
    best_run: _RunResult | None = None

    def absorb(run: _RunResult):
        nonlocal iterations_total, best_run
        iterations_total += run.iterations
        if collect_trace and run.trace:
            trace.extend(run.trace)
        if best_run is None or _better(best_run.iterate, run.iterate, ctol) is run.iterate:
            best_run = run

    run = _minimize_arrays(arrays, x0, config, collect_trace, 0)
    absorb(run)
    while (
        best_run.iterate.cost > config.mse_target
        and restarts_used < config.max_restarts
    ):
        restarts_used += 1
        try:
            run = _minimize_arrays(
                arrays, run.iterate.x, config, collect_trace, iterations_total
            )
        except EvaluationFailureError:
            break
        absorb(run)

    return FitResult(
        r_o_hat=Vec3.from_array(best_run.iterate.x),
        final_mse=best_run.iterate.cost,
        iterations_total=iterations_total,
        restarts_used=restarts_used,
        runtime=time.perf_counter() - start,
        converged=best_run.converged,
        max_constraint_violation=best_run.iterate.viol,
        projected_gradient=best_run.iterate.kkt,
        trace=tuple(trace) if collect_trace else None,
    )
