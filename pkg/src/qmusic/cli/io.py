"""Result files: JSON with schemas, CSV with fixed columns.

Every file is validated when written and again after reading it back.
Complex numbers are stored as ``[re, im]`` pairs.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import jsonschema
import numpy as np

from ..errors import ConfigError

_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_CVEC = {"type": "array", "items": _PAIR}
_CMAT = {"type": "array", "items": _CVEC}
_RVEC = {"type": "array", "items": {"type": "number"}}


def _doc(props: dict, required) -> dict:
    return {"type": "object", "properties": props, "required": list(required)}


SCHEMAS: dict[str, dict] = {
    "snapshots": _doc({"num_elements": {"type": "integer"}, "snapshots": _CMAT,
                       "sample_covariance": _CMAT}, ["num_elements", "snapshots", "sample_covariance"]),
    "observation": _doc(
        {"num_elements": {"type": "integer"}, "spacing_ratio": {"type": "number"},
         "sweep_angles": _RVEC, "powers": _RVEC},
        ["num_elements", "spacing_ratio", "sweep_angles", "powers"],
    ),
    "reconstruction": _doc(
        {"path": {"enum": ["classical", "spectral-emulation", "circuit"]},
         "r_hat": _CVEC, "r_hat_matrix": _CMAT, "rho": _CMAT,
         "success_probability": {"type": "number"},
         "fidelity_to_classical": {"type": ["number", "null"]},
         "transition": {"type": ["object", "null"]}},
        ["path", "r_hat", "r_hat_matrix", "rho", "success_probability"],
    ),
    "vqdme": _doc(
        {"theta_star": _RVEC, "eigenvalue_estimates": _RVEC, "eigenvectors": _CMAT,
         "objective": {"type": "number"}, "upper_bound": {"type": "number"},
         "iterations_used": {"type": "integer"}, "converged": {"type": "boolean"},
         "ansatz": {"type": "object"}, "reference_eigenvalues": _RVEC},
        ["theta_star", "eigenvalue_estimates", "eigenvectors", "iterations_used", "converged", "ansatz"],
    ),
    "estimate": _doc(
        {"music": {"type": "object"}, "labeling": {"type": "object"},
         "true_angles": _RVEC},
        ["music", "labeling"],
    ),
    "manifest": _doc(
        {"config_hash": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
         "version": {"type": "string"}, "seed": {"type": "integer"},
         "timings": {"type": "object", "additionalProperties": {"type": "number"}},
         "files": {"type": "object", "additionalProperties": {"type": "array", "items": {"type": "string"}}}},
        ["config_hash", "version", "seed", "timings", "files"],
    ),
}

CSV_COLUMNS = {
    "powers": ["angle_deg", "power"],
    "spectrum": ["angle_deg", "value"],
    "histogram": ["angle_deg", "count", "probability"],
}


def encode_complex(x) -> list:
    a = np.asarray(x, dtype=np.complex128)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def _validate(doc, kind: str, path: Path) -> None:
    try:
        jsonschema.validate(doc, SCHEMAS[kind])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{path}: {kind} document failed validation: {exc.message}") from exc


def write_json(path: str | Path, doc: dict, kind: str) -> Path:
    path = Path(path)
    _validate(doc, kind, path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1) + "\n")
    read_json(path, kind)
    return path


def read_json(path: str | Path, kind: str) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {kind} file {path}: {exc}") from exc
    _validate(doc, kind, path)
    return doc


def _fmt(column: str, value) -> str:
    if column == "angle_deg":
        return f"{float(value):.6f}"
    if column in ("iteration", "count"):
        return str(int(value))
    return repr(float(value))


def write_csv(path: str | Path, columns: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
            w.writerow([_fmt(c, v) for c, v in zip(columns, row)])
    read_csv(path, columns)
    return path


def read_csv(path: str | Path, columns: list[str]) -> np.ndarray:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != columns:
        raise ConfigError(f"{path}: expected header {columns}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric field: {exc}") from exc
    if data.size and (data.ndim != 2 or data.shape[1] != len(columns)):
        raise ConfigError(f"{path}: ragged rows")
    return data.reshape(-1, len(columns))


def convergence_columns(num_states: int) -> list[str]:
    return ["iteration", "objective"] + [f"lambda_{i + 1}" for i in range(num_states)]
