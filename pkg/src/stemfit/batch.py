"""Batch fitting over a corpus, report assembly, and plot-data export.

Reports are deterministic by construction: rows follow manifest order and
every value is recomputable from the trial files and the configuration.
Wall-clock timing is therefore kept out of the report unless explicitly
requested, in a clearly separated ``timing`` section.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import (
    EvaluationFailureError,
    ParseError,
    StemfitError,
    UnknownPlotKindError,
    ValidationError,
)
from .evaluation import (
    TrialMetrics,
    class_comparison,
    localization_error,
    orientation_error,
    summarize,
)
from .solver import SolverConfig, fit
from .spring_model import Label, apple_position_world, bias_compensate
from .trial_io import atomic_write_text, dump_json, load_manifest, load_trial

REPORT_SCHEMA_VERSION = 1

PLOT_KINDS = ("error_vs_mse", "runtime_hist", "joint_locations")


def _fit_entry(args):
    """Load and fit one trial; never raises for per-trial problems."""
    trial_path, entry, solver_config, bias_compensation = args
    try:
        trial = load_trial(trial_path)
        if bias_compensation:
            trial = bias_compensate(trial)
        result = fit(trial, solver_config)
        row = {
            "id": entry["id"],
            "label": trial.label.value,
            "status": "ok",
            "converged": result.converged,
            "final_mse": result.final_mse,
            "iterations": result.iterations_total,
            "restarts": result.restarts_used,
            "max_constraint_violation": result.max_constraint_violation,
            "projected_gradient": result.projected_gradient,
            "r_o_hat": [result.r_o_hat.x, result.r_o_hat.y, result.r_o_hat.z],
            "ground_truth": None,
            "localization_error": None,
            "orientation_error": None,
        }
        if trial.ground_truth is not None:
            gt = trial.ground_truth
            row["ground_truth"] = [gt.x, gt.y, gt.z]
            row["localization_error"] = localization_error(result.r_o_hat, gt)
            r_a0 = apple_position_world(trial.samples[0], trial.grasp_point)
            try:
                row["orientation_error"] = orientation_error(result.r_o_hat, gt, r_a0)
            except StemfitError:
                row["orientation_error"] = None
        return row, result.runtime
    except (ParseError, ValidationError, EvaluationFailureError, OSError) as exc:
        row = {
            "id": entry["id"],
            "label": entry.get("label"),
            "status": f"error: {exc}",
            "converged": False,
            "final_mse": None,
            "iterations": 0,
            "restarts": 0,
            "max_constraint_violation": None,
            "projected_gradient": None,
            "r_o_hat": None,
            "ground_truth": None,
            "localization_error": None,
            "orientation_error": None,
        }
        return row, 0.0


def run_batch(
    corpus_dir,
    solver_config: SolverConfig = SolverConfig(),
    jobs: int = 1,
    *,
    bias_compensation: bool = True,
    include_timing: bool = False,
) -> dict:
    """Fit every trial in a corpus and assemble the report document.

    Per-trial failures are recorded in their row and never abort the batch.
    Output is identical for any ``jobs`` value: work is keyed by manifest
    order, not completion order.
    """
    corpus_dir = Path(corpus_dir)
    manifest = load_manifest(corpus_dir)
    work = [
        (str(corpus_dir / entry["file"]), entry, solver_config, bias_compensation)
        for entry in manifest["trials"]
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_fit_entry, work))
    else:
        outcomes = [_fit_entry(item) for item in work]
    rows = [row for row, _ in outcomes]
    runtimes = {row["id"]: runtime for (row, runtime) in outcomes}

    fitted = [r for r in rows if r["status"] == "ok"]
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "stemfit-report",
        "seed": manifest.get("seed"),
        "corpus": {
            "config_digest": manifest.get("config_digest"),
            "sim_config": manifest.get("sim_config"),
            "n_trials": len(rows),
        },
        "solver_config": solver_config.to_dict(),
        "bias_compensation": bias_compensation,
        "counts": {
            "total": len(rows),
            "fitted": len(fitted),
            "failed": len(rows) - len(fitted),
            "converged": sum(1 for r in fitted if r["converged"]),
            "success": sum(1 for r in fitted if r["label"] == Label.SUCCESS.value),
            "failure": sum(1 for r in fitted if r["label"] == Label.FAILURE.value),
        },
        "per_trial": rows,
        "summary": _summaries(fitted),
        "class_comparison": _comparison(fitted, runtimes),
    }
    if include_timing:
        ok_rt = [runtimes[r["id"]] for r in fitted]
        conv_rt = [runtimes[r["id"]] for r in fitted if r["converged"]]
        report["timing"] = {
            "note": "wall-clock seconds; not reproducible across runs",
            "per_trial": {r["id"]: runtimes[r["id"]] for r in fitted},
            "all": summarize(ok_rt).to_dict() if ok_rt else None,
            "converged_only": summarize(conv_rt).to_dict() if conv_rt else None,
            "total": sum(runtimes.values()),
        }
    return report


def _metric_values(rows, key):
    return [r[key] for r in rows if r[key] is not None]


def _summaries(fitted):
    summary = {}
    for key in ("final_mse", "localization_error", "orientation_error"):
        block = {}
        for scope, subset in (
            ("overall", fitted),
            ("success", [r for r in fitted if r["label"] == Label.SUCCESS.value]),
            ("failure", [r for r in fitted if r["label"] == Label.FAILURE.value]),
        ):
            values = _metric_values(subset, key)
            block[scope] = (
                {"count": len(values), **summarize(values).to_dict()} if values else None
            )
        summary[key] = block
    return summary


def _comparison(fitted, runtimes):
    success = [r for r in fitted if r["label"] == Label.SUCCESS.value]
    failure = [r for r in fitted if r["label"] == Label.FAILURE.value]
    if len(success) < 2 or len(failure) < 2:
        return None
    metrics_s = [_row_metrics(r, runtimes) for r in success]
    metrics_f = [_row_metrics(r, runtimes) for r in failure]
    try:
        comparison = class_comparison(metrics_s, metrics_f)
    except StemfitError:
        return None
    return {
        "localization_error": _comparison_block(comparison.localization_error),
        "final_mse": _comparison_block(comparison.final_mse),
    }


def _row_metrics(row, runtimes):
    return TrialMetrics(
        trial_id=row["id"],
        final_mse=row["final_mse"],
        localization_error=row["localization_error"],
        orientation_error=row["orientation_error"],
        runtime=runtimes[row["id"]],
        converged=row["converged"],
        label=Label(row["label"]),
    )


def _comparison_block(metric):
    return {
        "success": metric.success.to_dict(),
        "failure": metric.failure.to_dict(),
        "t_statistic": metric.welch.t_statistic,
        "p_value": metric.welch.p_value,
        "degrees_of_freedom": metric.welch.degrees_of_freedom,
    }


def save_report(report: dict, path):
    atomic_write_text(path, dump_json(report))


def load_report(path) -> dict:
    path = Path(path)
    try:
        report = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(report, dict) or report.get("kind") != "stemfit-report":
        raise ValidationError(f"{path}: not a stemfit report file")
    return report


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_plot_data(report: dict, kind: str, out_path):
    """Write one of the plot-ready tables: header row plus one row per trial."""
    if kind not in PLOT_KINDS:
        raise UnknownPlotKindError(
            f"unknown plot-data kind {kind!r}; expected one of {', '.join(PLOT_KINDS)}"
        )
    rows = [r for r in report.get("per_trial", []) if r["status"] == "ok"]
    if kind == "error_vs_mse":
        header = ["final_mse", "localization_error", "orientation_error", "label"]
        table = [
            [r["final_mse"], r["localization_error"], r["orientation_error"], r["label"]]
            for r in rows
        ]
    elif kind == "runtime_hist":
        timing = report.get("timing")
        if not timing:
            raise ValidationError(
                "report has no timing section; rerun the batch with timing enabled"
            )
        header = ["trial_id", "runtime", "converged"]
        table = [
            [r["id"], timing["per_trial"].get(r["id"]), r["converged"]]
            for r in rows
            if r["id"] in timing["per_trial"]
        ]
    else:  # joint_locations
        header = ["trial_id", "true_x", "true_y", "true_z", "est_x", "est_y", "est_z", "label"]
        table = [
            [r["id"], *r["ground_truth"], *r["r_o_hat"], r["label"]]
            for r in rows
            if r["ground_truth"] is not None and r["r_o_hat"] is not None
        ]
    lines = [",".join(header)]
    lines.extend(",".join(_csv_cell(cell) for cell in row) for row in table)
    atomic_write_text(out_path, "\n".join(lines) + "\n")
