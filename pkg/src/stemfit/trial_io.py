"""Trial and corpus file formats.

Trials are single JSON documents with an explicit schema version; floats are
serialized at full round-trip precision so save/load is lossless. A corpus is
a directory of trial files plus ``manifest.json`` listing ids, labels, the
generation seed, and a digest of the generating configuration. All writes go
through a temp-file-then-rename step.
"""

import hashlib
import json
import os
import warnings
from pathlib import Path

from .errors import ParseError, ValidationError
from .geometry import Frame, RigidTransform, UnitQuaternion, Vec3, Wrench
from .spring_model import Label, SpringParams, Trial, TrialSample

TRIAL_SCHEMA_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"

_QUAT_WARN_TOL = 1e-6
_QUAT_ERROR_TOL = 1e-3


def atomic_write_text(path, text: str):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def dump_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_digest(config_dict: dict) -> str:
    canonical = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode()).hexdigest()


def _vec(v: Vec3) -> list:
    return [v.x, v.y, v.z]


def _parse_vec(data, where: str) -> Vec3:
    if not isinstance(data, (list, tuple)) or len(data) != 3:
        raise ValidationError(f"{where}: expected a 3-element array")
    try:
        return Vec3(float(data[0]), float(data[1]), float(data[2]))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def _parse_quaternion(data, where: str) -> UnitQuaternion:
    if not isinstance(data, (list, tuple)) or len(data) != 4:
        raise ValidationError(f"{where}: expected a 4-element [w, x, y, z] array")
    try:
        values = [float(v) for v in data]
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: {exc}") from exc
    norm = sum(v * v for v in values) ** 0.5
    if abs(norm - 1.0) > _QUAT_ERROR_TOL:
        raise ValidationError(
            f"{where}: quaternion norm {norm:.6f} deviates from 1 by more than "
            f"{_QUAT_ERROR_TOL}"
        )
    if abs(norm - 1.0) > _QUAT_WARN_TOL:
        warnings.warn(
            f"{where}: quaternion norm {norm:.9f} off unit by more than "
            f"{_QUAT_WARN_TOL}; renormalizing",
            stacklevel=2,
        )
    try:
        return UnitQuaternion(*values)
    except ValueError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def trial_to_dict(trial: Trial) -> dict:
    doc = {
        "schema_version": TRIAL_SCHEMA_VERSION,
        "id": trial.id,
        "label": trial.label.value,
        "spring": {"k": trial.spring.k, "l": trial.spring.l},
        "grasp_point": _vec(trial.grasp_point),
        "samples": [
            {
                "t": s.t,
                "pose": {
                    "translation": _vec(s.pose.translation),
                    "rotation_wxyz": [
                        s.pose.rotation.w,
                        s.pose.rotation.x,
                        s.pose.rotation.y,
                        s.pose.rotation.z,
                    ],
                },
                "wrench": {"force": _vec(s.wrench.force), "torque": _vec(s.wrench.torque)},
            }
            for s in trial.samples
        ],
    }
    if trial.ground_truth is not None:
        doc["ground_truth"] = _vec(trial.ground_truth)
    return doc


def trial_from_dict(doc: dict, source: str = "<memory>") -> Trial:
    if not isinstance(doc, dict):
        raise ValidationError(f"{source}: trial document must be a JSON object")
    version = doc.get("schema_version")
    if version != TRIAL_SCHEMA_VERSION:
        raise ValidationError(
            f"{source}: unsupported schema_version {version!r} "
            f"(expected {TRIAL_SCHEMA_VERSION})"
        )
    for field in ("id", "label", "spring", "grasp_point", "samples"):
        if field not in doc:
            raise ValidationError(f"{source}: missing required field '{field}'")
    try:
        label = Label(doc["label"])
    except ValueError:
        raise ValidationError(
            f"{source}: label must be 'success' or 'failure', got {doc['label']!r}"
        ) from None
    spring_doc = doc["spring"]
    if not isinstance(spring_doc, dict) or "k" not in spring_doc or "l" not in spring_doc:
        raise ValidationError(f"{source}: spring must be an object with 'k' and 'l'")
    try:
        spring = SpringParams(float(spring_doc["k"]), float(spring_doc["l"]))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{source}: spring: {exc}") from exc
    grasp_point = _parse_vec(doc["grasp_point"], f"{source}: grasp_point")
    ground_truth = None
    if doc.get("ground_truth") is not None:
        ground_truth = _parse_vec(doc["ground_truth"], f"{source}: ground_truth")

    raw_samples = doc["samples"]
    if not isinstance(raw_samples, list):
        raise ValidationError(f"{source}: samples must be an array")
    samples = []
    previous_t = None
    for i, raw in enumerate(raw_samples):
        where = f"{source}: samples[{i}]"
        if not isinstance(raw, dict):
            raise ValidationError(f"{where}: expected an object")
        for field in ("t", "pose", "wrench"):
            if field not in raw:
                raise ValidationError(f"{where}: missing '{field}'")
        try:
            t = float(raw["t"])
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{where}: t: {exc}") from exc
        if previous_t is not None and not t > previous_t:
            raise ValidationError(
                f"{where}: timestamp {t} not strictly greater than previous {previous_t}"
            )
        previous_t = t
        pose_doc = raw["pose"]
        if not isinstance(pose_doc, dict) or "translation" not in pose_doc or "rotation_wxyz" not in pose_doc:
            raise ValidationError(
                f"{where}: pose must contain 'translation' and 'rotation_wxyz'"
            )
        pose = RigidTransform(
            rotation=_parse_quaternion(pose_doc["rotation_wxyz"], f"{where}: rotation"),
            translation=_parse_vec(pose_doc["translation"], f"{where}: translation"),
        )
        wrench_doc = raw["wrench"]
        if not isinstance(wrench_doc, dict) or "force" not in wrench_doc or "torque" not in wrench_doc:
            raise ValidationError(f"{where}: wrench must contain 'force' and 'torque'")
        wrench = Wrench(
            force=_parse_vec(wrench_doc["force"], f"{where}: force"),
            torque=_parse_vec(wrench_doc["torque"], f"{where}: torque"),
            frame=Frame.SENSOR,
        )
        samples.append(TrialSample(t=t, pose=pose, wrench=wrench))

    try:
        return Trial(
            samples=tuple(samples),
            spring=spring,
            grasp_point=grasp_point,
            label=label,
            ground_truth=ground_truth,
            id=str(doc["id"]),
        )
    except ValueError as exc:
        raise ValidationError(f"{source}: {exc}") from exc


def save_trial(trial: Trial, path):
    atomic_write_text(path, dump_json(trial_to_dict(trial)))


def load_trial(path) -> Trial:
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return trial_from_dict(doc, source=str(path))


def save_corpus(trials, out_dir, *, sim_config_dict: dict | None = None, seed: int | None = None):
    """Write trials plus a manifest into ``out_dir`` (created if needed)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / MANIFEST_NAME
    if manifest_path.exists():
        raise FileExistsError(f"{manifest_path}: corpus manifest already exists")
    entries = []
    for trial in trials:
        filename = f"{trial.id}.json"
        save_trial(trial, out_dir / filename)
        entries.append({"id": trial.id, "label": trial.label.value, "file": filename})
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "seed": seed,
        "sim_config": sim_config_dict,
        "config_digest": config_digest(sim_config_dict or {}),
        "trials": entries,
    }
    atomic_write_text(manifest_path, dump_json(manifest))


def load_manifest(corpus_dir) -> dict:
    corpus_dir = Path(corpus_dir)
    manifest_path = corpus_dir / MANIFEST_NAME
    if not manifest_path.exists():
        raise ValidationError(f"{corpus_dir}: no {MANIFEST_NAME} found")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{manifest_path}: invalid JSON: {exc}") from exc
    if not isinstance(manifest, dict) or manifest.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise ValidationError(f"{manifest_path}: unsupported or missing schema_version")
    trials = manifest.get("trials")
    if not isinstance(trials, list) or not trials:
        raise ValidationError(f"{manifest_path}: manifest lists no trials")
    for i, entry in enumerate(trials):
        if not isinstance(entry, dict) or not {"id", "label", "file"} <= set(entry):
            raise ValidationError(
                f"{manifest_path}: trials[{i}] must carry 'id', 'label', and 'file'"
            )
    return manifest


def load_corpus(corpus_dir) -> list[Trial]:
    """Load every trial named by the manifest; any bad file aborts the load."""
    corpus_dir = Path(corpus_dir)
    manifest = load_manifest(corpus_dir)
    return [load_trial(corpus_dir / entry["file"]) for entry in manifest["trials"]]
