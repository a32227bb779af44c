"""Pipeline configuration: JSON schema, loading and cross-stage validation."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from ..array_signal import ArrayConfig, BeamSweepPlan, SourceScenario
from ..doa import SearchGrid
from ..errors import ConfigError
from ..recon import RegularizationConfig
from ..recon.walk import MAX_WALK_DIM, next_pow2
from ..qsim.states import MAX_QUBITS
from ..vqdme import AnsatzConfig, VQDMEConfig, WeightVector

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}
_ANGLES = {"type": "array", "items": _NUM, "minItems": 1}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_COUNT_OR_ANGLES = {
    "oneOf": [_obj({"count": _POS_INT}, ["count"]), _obj({"angles": _ANGLES}, ["angles"])]
}

CONFIG_SCHEMA = _obj(
    {
        "array": _obj({"num_elements": _POS_INT, "spacing_ratio": _NUM}, ["num_elements"]),
        "scenario": _obj(
            {
                "angles": _ANGLES,
                "noise_variance": _NUM,
                "num_snapshots": _POS_INT,
                "source_powers": _ANGLES,
            },
            ["angles"],
        ),
        "sweep": _COUNT_OR_ANGLES,
        "regularization": _obj(
            {
                "loading": {"type": ["number", "null"]},
                "phase_bits": _POS_INT,
                "success_constant": {"type": ["number", "null"]},
            }
        ),
        "vqdme": _obj(
            {
                "weights": {"type": ["array", "null"], "items": _NUM},
                "optimizer": {"enum": ["gradient", "spsa", "nelder-mead"]},
                "max_iterations": _POS_INT,
                "tolerance": _NUM,
                "window": _POS_INT,
                "objective": {"enum": ["exact", "swap-test"]},
                "shots": {"type": ["integer", "null"], "minimum": 1},
                "restarts": _POS_INT,
                "depth": {"type": ["integer", "null"], "minimum": 1},
                "entangler": {"enum": ["ring-cz", "ring-cnot"]},
            }
        ),
        "grid": _COUNT_OR_ANGLES,
        "modes": _obj(
            {
                "reconstruction": {"enum": ["classical", "spectral", "circuit"]},
                "labeling": {"enum": ["exact", "sampled"]},
                "shots": _POS_INT,
                "smoothing_deg": {"type": ["number", "null"], "minimum": 0},
            }
        ),
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output": {"type": "string"},
    },
    ["array", "scenario"],
)


@dataclass(frozen=True)
class Modes:
    reconstruction: str = "spectral"
    labeling: str = "sampled"
    shots: int = 100_000
    smoothing_deg: float | None = None


@dataclass(frozen=True)
class PipelineConfig:
    array: ArrayConfig
    scenario: SourceScenario
    sweep: BeamSweepPlan
    regularization: RegularizationConfig
    vqdme: VQDMEConfig
    ansatz: AnsatzConfig
    grid: SearchGrid
    modes: Modes = field(default_factory=Modes)
    seed: int = 0
    output: str = "out"
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def num_sources(self) -> int:
        return self.scenario.num_sources

    def digest(self) -> str:
        """sha256 of the canonical JSON form of the effective configuration."""
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


# -- locating errors ----------------------------------------------------------

_WS = " \t\r\n"


def _skip(text: str, i: int) -> int:
    while i < len(text) and text[i] in _WS:
        i += 1
    return i


def _positions(text: str) -> dict[tuple, int]:
    """Character offset of every value in a JSON document, keyed by its path."""
    decoder = json.JSONDecoder()
    out: dict[tuple, int] = {}

    def walk(i: int, path: tuple) -> int:
        i = _skip(text, i)
        out[path] = i
        ch = text[i]
        if ch == "{":
            i = _skip(text, i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = json.decoder.scanstring(text, _skip(text, i) + 1)
                out[path + (key, "<key>")] = text.rfind('"', 0, i - 1)
                i = _skip(text, i)
                i = walk(i + 1, path + (key,))  # skip ':'
                i = _skip(text, i)
                if text[i] == "}":
                    return i + 1
                i += 1  # ','
        if ch == "[":
            i = _skip(text, i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = _skip(text, walk(i, path + (k,)))
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = decoder.raw_decode(text, i)
        return end

    walk(0, ())
    return out


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def _where(text: str, positions: dict, path: tuple, key: str | None = None) -> str:
    probe = path + (key, "<key>") if key is not None else path
    while probe not in positions and probe:
        probe = probe[:-1]
    line, col = _line_col(text, positions.get(probe, 0))
    return f"line {line}, column {col}"


def _schema_error(text: str, err: jsonschema.ValidationError, source: str) -> ConfigError:
    positions = _positions(text)
    path = tuple(err.absolute_path)
    key = None
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        key = extra[0] if extra else None
    loc = _where(text, positions, path, key)
    dotted = ".".join(str(p) for p in path) or "<root>"
    return ConfigError(f"{source}: {loc}: {dotted}: {err.message}")


# -- building -----------------------------------------------------------------

class _Located(Exception):
    def __init__(self, path: tuple, message: str):
        super().__init__(message)
        self.path = path


def _at(path: tuple, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValueError, TypeError) as exc:
        raise _Located(path, str(exc)) from exc


def _scenario(scen: dict, arr: ArrayConfig) -> SourceScenario:
    scenario = SourceScenario(
        angles=tuple(scen["angles"]),
        noise_variance=scen.get("noise_variance", 0.0),
        num_snapshots=scen.get("num_snapshots", 1000),
        source_powers=tuple(scen["source_powers"]) if "source_powers" in scen else None,
    )
    scenario.validate_for(arr)
    return scenario


def _plan(sweep: dict) -> BeamSweepPlan:
    return BeamSweepPlan.uniform(sweep["count"]) if "count" in sweep else BeamSweepPlan(tuple(sweep["angles"]))


def _grid(g: dict) -> SearchGrid:
    return SearchGrid.uniform(g["count"]) if "count" in g else SearchGrid(g["angles"])


def _vqdme(vq: dict, num_sources: int, num_qubits: int, seed: int) -> tuple[VQDMEConfig, AnsatzConfig]:
    vq = dict(vq)
    depth = vq.pop("depth", None)
    entangler = vq.pop("entangler", "ring-cnot")
    weights = vq.pop("weights", None)
    weights = WeightVector.default(num_sources) if weights is None else WeightVector(tuple(weights))
    if len(weights) != num_sources:
        raise ValueError(f"{len(weights)} weights for {num_sources} sources")
    return VQDMEConfig(weights=weights, seed=seed, **vq), AnsatzConfig(num_qubits, depth, entangler)


def _check_circuit_size(plan: BeamSweepPlan, arr: ArrayConfig, reg: RegularizationConfig) -> None:
    walk_dim = next_pow2(len(plan)) * arr.num_elements**2
    if walk_dim > MAX_WALK_DIM:
        raise ValueError(
            f"circuit reconstruction needs a {walk_dim}-level walk operator, above the dense "
            f"limit of {MAX_WALK_DIM}; use fewer beams or a smaller array"
        )
    needed = walk_dim.bit_length() - 1 + reg.phase_bits
    if needed > MAX_QUBITS:
        raise ValueError(
            f"circuit reconstruction needs {needed} qubits (walk system + {reg.phase_bits} "
            f"phase bits), above the simulator limit of {MAX_QUBITS}"
        )


def _build(data: dict) -> PipelineConfig:
    arr = _at(("array",), ArrayConfig, **data["array"])
    scenario = _at(("scenario",), _scenario, data["scenario"], arr)
    plan = _at(("sweep",), _plan, data.get("sweep", {"count": 64}))
    reg = _at(("regularization",), RegularizationConfig, **data.get("regularization", {}))
    seed = int(data.get("seed", 0))
    vqdme, ansatz = _at(("vqdme",), _vqdme, data.get("vqdme", {}), scenario.num_sources, arr.num_qubits, seed)
    grid = _at(("grid",), _grid, data.get("grid", {"count": 1801}))
    modes = _at(("modes",), Modes, **data.get("modes", {}))
    if modes.reconstruction == "circuit":
        _at(("modes", "reconstruction"), _check_circuit_size, plan, arr, reg)
    return PipelineConfig(
        array=arr, scenario=scenario, sweep=plan, regularization=reg, vqdme=vqdme,
        ansatz=ansatz, grid=grid, modes=modes, seed=seed,
        output=data.get("output", "out"), raw=data,
    )


def parse_config(text: str, source: str = "<config>", overrides: dict | None = None) -> PipelineConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise _schema_error(text, exc, source) from exc
    data = {**data, **(overrides or {})}
    try:
        return _build(data)
    except _Located as exc:
        loc = _where(text, _positions(text), exc.path)
        raise ConfigError(f"{source}: {loc}: {'.'.join(exc.path)}: {exc}") from exc


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path), overrides)
