"""Experiment configuration: schema validation and model construction.

Configs are plain JSON with a fixed, strictly-checked shape; unknown keys
are rejected with the offending path so typos fail loudly before any array
is allocated.  Scalar functions (initial data, potentials, vector fields)
are named forms with parameters, which keeps runs reproducible byte for
byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .grids import Grid, PGrid
from .warp import IntegrateP, PointP, RecoveryMethod

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "parse_function",
    "parse_matrix",
    "parse_vector",
]

MODEL_KINDS = (
    "heat",
    "convection",
    "black_scholes",
    "fokker_planck",
    "boltzmann",
    "liouville",
    "ode",
)

ENGINE_KINDS = ("exact_diagonal", "trotter", "upwind_fd", "dense_expm")


class ConfigError(ValueError):
    """Configuration does not match the schema."""


def _require_keys(obj: dict, path: str, required: tuple, optional: tuple = ()) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(f"{path}: missing keys {sorted(missing)}")


def _number(obj, path: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    return float(obj)


def _integer(obj, path: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ConfigError(f"{path}: expected an integer")
    return obj


# ---------------------------------------------------------------------------
# Named scalar functions.
# ---------------------------------------------------------------------------

FUNCTION_TYPES = ("zero", "constant", "sine", "cosine", "gaussian", "linear", "quadratic")


def parse_function(spec: Any, path: str) -> Callable:
    """Build a callable(*coords) -> array from a named-form spec.

    Multi-dimensional grids receive one coordinate array per axis; `sine`,
    `cosine` and `gaussian` take products across axes, `linear` and
    `quadratic` sum across axes.
    """
    if spec is None:
        return lambda *coords: np.zeros_like(sum(np.broadcast_arrays(*coords)) if len(coords) > 1 else coords[0])
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"{path}: expected an object with a 'type' key")
    kind = spec["type"]
    if kind not in FUNCTION_TYPES:
        raise ConfigError(f"{path}.type: unknown function {kind!r}")
    if kind == "zero":
        _require_keys(spec, path, ("type",))
        return parse_function(None, path)
    if kind == "constant":
        _require_keys(spec, path, ("type", "value"))
        value = _number(spec["value"], f"{path}.value")
        return lambda *coords: np.full_like(np.asarray(coords[0], dtype=float), value) if len(coords) == 1 else value + 0.0 * sum(np.broadcast_arrays(*coords))
    if kind in ("sine", "cosine"):
        _require_keys(spec, path, ("type",), ("k", "amplitude"))
        k = _number(spec.get("k", 1), f"{path}.k")
        amp = _number(spec.get("amplitude", 1.0), f"{path}.amplitude")
        base = np.sin if kind == "sine" else np.cos

        def trig(*coords):
            out = amp
            for c in coords:
                out = out * base(k * np.pi * np.asarray(c, dtype=float))
            return out

        return trig
    if kind == "gaussian":
        _require_keys(spec, path, ("type", "width"), ("center", "amplitude"))
        width = _number(spec["width"], f"{path}.width")
        if width <= 0:
            raise ConfigError(f"{path}.width: must be positive")
        center = spec.get("center", 0.0)
        centers = [float(c) for c in (center if isinstance(center, list) else [center])]
        amp = _number(spec.get("amplitude", 1.0), f"{path}.amplitude")

        def gauss(*coords):
            out = amp
            for i, c in enumerate(coords):
                c0 = centers[i] if i < len(centers) else centers[-1]
                out = out * np.exp(-((np.asarray(c, dtype=float) - c0) ** 2) / (2 * width**2))
            return out

        return gauss
    if kind == "linear":
        _require_keys(spec, path, ("type",), ("rate",))
        rate = _number(spec.get("rate", 1.0), f"{path}.rate")
        return lambda *coords: rate * sum(np.broadcast_arrays(*coords)) if len(coords) > 1 else rate * np.asarray(coords[0], dtype=float)
    if kind == "quadratic":
        _require_keys(spec, path, ("type",), ("coefficient",))
        coeff = _number(spec.get("coefficient", 0.5), f"{path}.coefficient")
        return lambda *coords: coeff * sum(np.asarray(c, dtype=float) ** 2 for c in np.broadcast_arrays(*coords))
    raise ConfigError(f"{path}: unhandled function {kind!r}")


def _entry_to_complex(entry, path: str) -> complex:
    if isinstance(entry, (int, float)) and not isinstance(entry, bool):
        return complex(entry)
    if isinstance(entry, list) and len(entry) == 2:
        return complex(_number(entry[0], path), _number(entry[1], path))
    raise ConfigError(f"{path}: matrix entries are numbers or [re, im] pairs")


def parse_vector(obj, path: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise ConfigError(f"{path}: expected a non-empty list")
    return np.array([_entry_to_complex(e, f"{path}[{i}]") for i, e in enumerate(obj)])


def parse_matrix(obj, path: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise ConfigError(f"{path}: expected a non-empty list of rows")
    rows = [parse_vector(row, f"{path}[{i}]") for i, row in enumerate(obj)]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ConfigError(f"{path}: matrix must be square (row-major rows)")
    return np.array(rows)


# ---------------------------------------------------------------------------
# Schema sections.
# ---------------------------------------------------------------------------


def _parse_grid(obj, path: str) -> Grid:
    _require_keys(obj, path, ("a", "b", "points"), ("dims",))
    try:
        return Grid(
            a=_number(obj["a"], f"{path}.a"),
            b=_number(obj["b"], f"{path}.b"),
            points=_integer(obj["points"], f"{path}.points"),
            dims=_integer(obj.get("dims", 1), f"{path}.dims"),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_pgrid(obj, path: str) -> PGrid:
    _require_keys(obj, path, ("left", "right", "points"), ("alpha_neg", "left_support"))
    try:
        return PGrid(
            left=_number(obj["left"], f"{path}.left"),
            right=_number(obj["right"], f"{path}.right"),
            points=_integer(obj["points"], f"{path}.points"),
            alpha_neg=_number(obj.get("alpha_neg", 10.0), f"{path}.alpha_neg"),
            left_support=_number(obj.get("left_support", -1.0), f"{path}.left_support"),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


_PARAM_KEYS = {
    "heat": (("initial",), ("potential",)),
    "convection": (("initial",), ("variant", "p_points")),
    "black_scholes": (("initial", "r", "sigma"), ()),
    "fokker_planck": (("initial", "potential", "sigma"), ("form",)),
    "boltzmann": (("initial",), ("weights", "ordinates")),
    "liouville": (("field", "q0", "width"), ()),
    "ode": (("a", "u0"), ("b",)),
}


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    grid: Optional[Grid]
    pgrid: Optional[PGrid]
    params: dict


@dataclass(frozen=True)
class EngineConfig:
    kind: str
    dt: Optional[float]
    t_final: float


@dataclass(frozen=True)
class DiagnosticsConfig:
    norm: bool = True
    mass: bool = False
    mode_profile: Optional[str | int] = None
    error_vs_exact: bool = False


@dataclass(frozen=True)
class OutputsConfig:
    snapshots: tuple[float, ...]
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig
    engine: EngineConfig
    recovery: RecoveryMethod
    outputs: OutputsConfig
    out_dir: Optional[str]
    seed: Optional[int]
    raw: dict


def _parse_model(obj, path: str) -> ModelConfig:
    _require_keys(obj, path, ("kind",), ("grid", "pgrid", "params"))
    kind = obj["kind"]
    if kind not in MODEL_KINDS:
        raise ConfigError(f"{path}.kind: unknown model {kind!r}")
    grid = None
    pgrid = None
    if kind == "ode":
        if "grid" in obj:
            raise ConfigError(f"{path}: the ode model has no spatial grid")
    else:
        if "grid" not in obj:
            raise ConfigError(f"{path}: model {kind!r} needs a grid")
        grid = _parse_grid(obj["grid"], f"{path}.grid")
    if kind == "convection":
        if "pgrid" in obj:
            raise ConfigError(f"{path}: model {kind!r} fixes its own p-domain; drop 'pgrid'")
    else:
        if "pgrid" in obj and obj["pgrid"] is not None:
            pgrid = _parse_pgrid(obj["pgrid"], f"{path}.pgrid")
        elif kind not in ("liouville", "ode"):
            raise ConfigError(f"{path}: model {kind!r} needs a pgrid")
    params = obj.get("params", {})
    required, optional = _PARAM_KEYS[kind]
    _require_keys(params, f"{path}.params", required, optional)
    return ModelConfig(kind=kind, grid=grid, pgrid=pgrid, params=params)


def _parse_engine(obj, path: str) -> EngineConfig:
    _require_keys(obj, path, ("kind", "t_final"), ("dt",))
    kind = obj["kind"]
    if kind not in ENGINE_KINDS:
        raise ConfigError(f"{path}.kind: unknown engine {kind!r}")
    t_final = _number(obj["t_final"], f"{path}.t_final")
    if t_final <= 0:
        raise ConfigError(f"{path}.t_final: must be positive")
    dt = None
    if "dt" in obj and obj["dt"] is not None:
        dt = _number(obj["dt"], f"{path}.dt")
        if dt <= 0:
            raise ConfigError(f"{path}.dt: must be positive")
    if kind in ("trotter", "upwind_fd") and dt is None:
        raise ConfigError(f"{path}: engine {kind!r} needs dt")
    return EngineConfig(kind=kind, dt=dt, t_final=t_final)


def _parse_recovery(obj, path: str) -> RecoveryMethod:
    _require_keys(obj, path, ("kind",), ("p_star",))
    kind = obj["kind"]
    if kind == "integrate":
        if "p_star" in obj:
            raise ConfigError(f"{path}: 'p_star' only applies to point recovery")
        return IntegrateP()
    if kind == "point":
        p_star = obj.get("p_star")
        if p_star is not None:
            p_star = _number(p_star, f"{path}.p_star")
        return PointP(p_star=p_star)
    raise ConfigError(f"{path}.kind: unknown recovery {kind!r}")


def _parse_outputs(obj, path: str, t_final: float) -> OutputsConfig:
    _require_keys(obj, path, (), ("snapshots", "diagnostics"))
    snaps = obj.get("snapshots")
    if snaps is None:
        snapshots = (t_final,)
    else:
        if not isinstance(snaps, list) or not snaps:
            raise ConfigError(f"{path}.snapshots: expected a non-empty list of times")
        snapshots = tuple(sorted(_number(t, f"{path}.snapshots[{i}]") for i, t in enumerate(snaps)))
        if snapshots[0] < 0 or snapshots[-1] > t_final * (1 + 1e-12):
            raise ConfigError(f"{path}.snapshots: times must lie in [0, t_final]")
    diag = obj.get("diagnostics", {})
    _require_keys(diag, f"{path}.diagnostics", (), ("norm", "mass", "mode_profile", "error_vs_exact"))
    mode_profile = diag.get("mode_profile")
    if mode_profile is not None and mode_profile != "dominant" and not isinstance(mode_profile, int):
        raise ConfigError(f"{path}.diagnostics.mode_profile: expected 'dominant', an integer, or null")
    return OutputsConfig(
        snapshots=snapshots,
        diagnostics=DiagnosticsConfig(
            norm=bool(diag.get("norm", True)),
            mass=bool(diag.get("mass", False)),
            mode_profile=mode_profile,
            error_vs_exact=bool(diag.get("error_vs_exact", False)),
        ),
    )


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a raw JSON object (or a manifest echoing one) into a config."""
    if isinstance(raw, dict) and "config" in raw and "model" not in raw:
        raw = raw["config"]
    _require_keys(raw, "$", ("model", "engine"), ("recovery", "outputs", "out_dir", "seed"))
    engine = _parse_engine(raw["engine"], "$.engine")
    model = _parse_model(raw["model"], "$.model")
    recovery = _parse_recovery(raw.get("recovery", {"kind": "integrate"}), "$.recovery")
    outputs = _parse_outputs(raw.get("outputs", {}), "$.outputs", engine.t_final)
    out_dir = raw.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("$.out_dir: expected a string path")
    seed = raw.get("seed")
    if seed is not None:
        seed = _integer(seed, "$.seed")
    return ExperimentConfig(
        model=model,
        engine=engine,
        recovery=recovery,
        outputs=outputs,
        out_dir=out_dir,
        seed=seed,
        raw=raw,
    )
