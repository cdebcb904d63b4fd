"""Per-trial accuracy metrics, corpus summary statistics, and the
success/failure class comparison."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InsufficientSamplesError
from .geometry import Vec3, angle_between
from .spring_model import Label


@dataclass(frozen=True)
class TrialMetrics:
    """Metrics for one fitted trial; localization and orientation errors are
    absent (None) when the trial carries no ground truth."""

    trial_id: str
    final_mse: float
    localization_error: float | None
    orientation_error: float | None
    runtime: float
    converged: bool
    label: Label


@dataclass(frozen=True)
class SummaryStats:
    """Median, interquartile range, mean, and sample standard deviation."""

    median: float
    iqr: float
    mean: float
    std: float

    def to_dict(self) -> dict:
        return {"median": self.median, "iqr": self.iqr, "mean": self.mean, "std": self.std}


@dataclass(frozen=True)
class WelchResult:
    t_statistic: float
    p_value: float
    degrees_of_freedom: float


@dataclass(frozen=True)
class MetricComparison:
    success: SummaryStats
    failure: SummaryStats
    welch: WelchResult


@dataclass(frozen=True)
class ClassComparison:
    """Success-vs-failure comparison on localization error and final MSE."""

    localization_error: MetricComparison
    final_mse: MetricComparison


def localization_error(r_hat: Vec3, r_true: Vec3) -> float:
    """Euclidean distance between estimated and true attachment points (m)."""
    return (r_hat - r_true).norm()


def orientation_error(r_hat: Vec3, r_true: Vec3, r_a0: Vec3) -> float:
    """Angle (degrees) between the fruit-to-estimate and fruit-to-truth rays,
    both anchored at the initial fruit position."""
    return angle_between(r_true - r_a0, r_hat - r_a0)


def summarize(values) -> SummaryStats:
    """Summary statistics: interpolated quartiles for the IQR, sample (n-1)
    standard deviation. A single value yields zero spread."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ValueError("summarize requires at least one value")
    q1, q3 = np.quantile(arr, [0.25, 0.75])
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return SummaryStats(
        median=float(np.median(arr)),
        iqr=float(q3 - q1),
        mean=float(arr.mean()),
        std=std,
    )


def welch_t_test(sample_a, sample_b) -> WelchResult:
    """Welch's unequal-variance two-sample t-test, two-sided.

    Degrees of freedom follow Welch-Satterthwaite; the p-value comes from the
    Student t CDF. Zero pooled variance degenerates to t=0, p=1 for equal
    means and an infinite statistic otherwise.
    """
    a = np.asarray(list(sample_a), dtype=float)
    b = np.asarray(list(sample_b), dtype=float)
    if a.size < 2 or b.size < 2:
        raise InsufficientSamplesError(
            f"welch_t_test needs >= 2 values per sample, got {a.size} and {b.size}"
        )
    mean_diff = float(a.mean() - b.mean())
    va = float(a.var(ddof=1)) / a.size
    vb = float(b.var(ddof=1)) / b.size
    se2 = va + vb
    if se2 == 0.0:
        if mean_diff == 0.0:
            return WelchResult(0.0, 1.0, float(a.size + b.size - 2))
        return WelchResult(
            math.copysign(math.inf, mean_diff), 0.0, float(a.size + b.size - 2)
        )
    t = mean_diff / math.sqrt(se2)
    df = se2 * se2 / (va * va / (a.size - 1) + vb * vb / (b.size - 1))
    p = 2.0 * float(special.stdtr(df, -abs(t)))
    return WelchResult(float(t), min(p, 1.0), float(df))


def class_comparison(
    success: list[TrialMetrics], failure: list[TrialMetrics]
) -> ClassComparison:
    """Per-class summary statistics plus Welch tests on localization error and
    final MSE. Trials without a localization error are excluded from that
    metric; each class needs at least two usable values per metric."""
    if len(success) < 2 or len(failure) < 2:
        raise InsufficientSamplesError(
            f"class_comparison needs >= 2 trials per class, got "
            f"{len(success)} success and {len(failure)} failure"
        )

    def metric(extract, name):
        a = [extract(m) for m in success if extract(m) is not None]
        b = [extract(m) for m in failure if extract(m) is not None]
        if len(a) < 2 or len(b) < 2:
            raise InsufficientSamplesError(
                f"class_comparison needs >= 2 {name} values per class"
            )
        return MetricComparison(summarize(a), summarize(b), welch_t_test(a, b))

    return ClassComparison(
        localization_error=metric(lambda m: m.localization_error, "localization_error"),
        final_mse=metric(lambda m: m.final_mse, "final_mse"),
    )
