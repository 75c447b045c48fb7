"""Command-line runner.

Subcommands:

* ``run --config cfg.json [--out DIR]``: build the configured model, evolve,
  recover, and emit plot-ready CSVs plus a JSON manifest.  Re-running from a
  manifest reproduces the CSVs byte for byte.
* ``estimate --query q.json``: evaluate one gate-count formula; prints a
  one-row CSV and a human-readable formula line.
* ``validate --config cfg.json``: schema check only.

Exit codes: 0 success, 2 configuration/schema errors (including CFL
violations, with the admissible step in the message), 3 numerical blow-up
(partial outputs are kept).

The environment variable ``SCHRO_THREADS`` caps worker parallelism (it is
exported to the BLAS/OpenMP pools before numerics load).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time


def _cap_threads() -> None:
    cap = os.environ.get("SCHRO_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS"):
        os.environ.setdefault(var, cap)


_cap_threads()

import numpy as np

from .config import ConfigError, ExperimentConfig, parse_config, parse_function, parse_matrix, parse_vector
from .evolvers import CFLError, EvolutionPlan, Trajectory
from .grids import to_modes
from .ode import LinearSystem, augment_inhomogeneous, default_pgrid, hermitian_split, assemble_schrodingerised
from .warp import WarpedState, recover
from . import models as model_builders

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3


class BlowUpError(RuntimeError):
    pass


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if value is None:
        return ""
    return format(float(value), ".17g")


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _write_atomic(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Model assembly from a validated config.
# ---------------------------------------------------------------------------


def _build(cfg: ExperimentConfig):
    """Return (model_like, u0, kind-specific context)."""
    mc = cfg.model
    params = mc.params
    kind = mc.kind
    if kind == "heat":
        model = model_builders.build_heat(
            parse_function(params.get("potential"), "$.model.params.potential"),
            mc.grid,
            mc.pgrid,
        )
        u0 = _sample_initial(params["initial"], mc.grid)
        return model, u0, {}
    if kind == "convection":
        model = model_builders.build_convection(mc.grid, p_points=params.get("p_points", 64))
        u0 = _sample_initial(params["initial"], mc.grid)
        return model, u0, {"variant": params.get("variant", "sin_p")}
    if kind == "black_scholes":
        model = model_builders.build_black_scholes(
            float(params["r"]), float(params["sigma"]), mc.grid, mc.pgrid
        )
        u0 = _sample_initial(params["initial"], mc.grid)
        return model, u0, {}
    if kind == "fokker_planck":
        model = model_builders.build_fokker_planck(
            parse_function(params["potential"], "$.model.params.potential"),
            float(params["sigma"]),
            mc.grid,
            mc.pgrid,
            form=params.get("form", "conservation"),
        )
        u0 = _sample_initial(params["initial"], mc.grid)
        return model, u0, {}
    if kind == "boltzmann":
        if "weights" in params or "ordinates" in params:
            quad = model_builders.QuadratureRule(
                points=np.asarray(params["ordinates"], dtype=float),
                weights=np.asarray(params["weights"], dtype=float),
            )
        else:
            quad = model_builders.default_ordinates()
        model = model_builders.build_boltzmann(quad, mc.grid, mc.pgrid)
        u0 = _sample_initial(params["initial"], mc.grid)
        return model, u0, {}
    if kind == "liouville":
        q0 = params["q0"]
        model = model_builders.build_liouville(
            parse_function(params["field"], "$.model.params.field"),
            mc.grid,
            q0,
            float(params["width"]),
        )
        return model, model.system.u0, {}
    if kind == "ode":
        a = parse_matrix(params["a"], "$.model.params.a")
        b = parse_vector(params["b"], "$.model.params.b") if params.get("b") is not None else None
        u0 = parse_vector(params["u0"], "$.model.params.u0")
        system = augment_inhomogeneous(LinearSystem(a_mat=a, b=b, u0=u0))
        return system, system.u0, {}
    raise ConfigError(f"unhandled model kind {kind!r}")


def _sample_initial(spec, grid) -> np.ndarray:
    f = parse_function(spec, "$.model.params.initial")
    mesh = grid.mesh()
    return np.broadcast_to(np.asarray(f(*mesh), dtype=complex), grid.shape).reshape(-1)


def _exact_solution(cfg: ExperimentConfig, model, u0, t: float):
    kind = cfg.model.kind
    if kind == "heat":
        if np.ptp(model.v_values) == 0:
            return model_builders.exact_heat_solution(u0, model.grid, t, float(model.v_values[0]))
        return None
    if kind == "convection":
        return model_builders.exact_convection_solution(u0, model.grid, t)
    if kind == "black_scholes":
        return model.exact_solution(u0, t)
    return None


def _mass(cfg: ExperimentConfig, model, recovered) -> float | None:
    kind = cfg.model.kind
    if kind in ("fokker_planck", "liouville"):
        grid = cfg.model.grid
        return float(np.real(np.sum(recovered)) * grid.dx**grid.dims)
    if kind == "boltzmann":
        return model.mass(recovered)
    return None


def emit_profile(w: WarpedState, axis_spec: tuple) -> list[list[float]]:
    """Rows (coordinate, |amplitude|) for wave-propagation plots.

    ``("p_at_mode", l)`` profiles |what_l| over the p axis in the x-frequency
    frame; ``("x_at_p", p_star)`` profiles |w| over x at one p node.
    """
    kind, value = axis_spec
    if kind == "p_at_mode":
        if w.grid is None:
            raise ValueError("mode profiles need a spatial grid")
        modes = w.matrix.reshape(w.grid.shape + (w.pgrid.points,))
        for axis in range(w.grid.dims):
            modes = to_modes(modes, axis=axis)
        modes = modes.reshape(-1, w.pgrid.points)
        if not 0 <= value < modes.shape[0]:
            raise ValueError(f"mode index {value} out of range")
        return [[p, a] for p, a in zip(w.pgrid.axis(), np.abs(modes[value]))]
    if kind == "x_at_p":
        j = w.pgrid.index_of(value)
        col = np.abs(w.matrix[:, j])
        if w.grid is not None:
            coords = w.grid.axis()[: len(col)] if w.grid.dims == 1 else range(len(col))
        else:
            coords = range(len(col))
        return [[c, a] for c, a in zip(coords, col)]
    raise ValueError(f"unknown profile axis {kind!r}")


def _dominant_mode_index(u0: np.ndarray, grid) -> int:
    """Flat mode index with the largest speed among non-negligible amplitudes."""
    coeffs = np.asarray(u0, dtype=complex).reshape(grid.shape)
    for axis in range(grid.dims):
        coeffs = to_modes(coeffs, axis=axis)
    amp = np.abs(coeffs).reshape(-1)
    cut = 1e-8 * amp.max()
    mu = grid.mu()
    speed = np.zeros(grid.shape)
    tie = np.zeros(grid.shape)
    for axis in range(grid.dims):
        shape = [1] * grid.dims
        shape[axis] = grid.points
        speed = speed + (mu**2).reshape(shape)
        tie = tie + mu.reshape(shape)
    speed = speed.reshape(-1)
    tie = tie.reshape(-1)
    candidates = np.nonzero(amp > cut)[0]
    best = max(candidates, key=lambda i: (speed[i], tie[i]))
    return int(best)


# ---------------------------------------------------------------------------
# run subcommand.
# ---------------------------------------------------------------------------


def run_experiment(cfg: ExperimentConfig, out_dir: str) -> int:
    started = time.monotonic()
    os.makedirs(out_dir, exist_ok=True)
    model, u0, ctx = _build(cfg)
    kind = cfg.model.kind

    engine = cfg.engine
    dt = engine.dt if engine.dt is not None else engine.t_final
    plan = EvolutionPlan(
        engine=engine.kind,
        dt=dt,
        t_final=engine.t_final,
        snapshot_times=cfg.outputs.snapshots,
    )

    direct_convection = kind == "convection" and ctx.get("variant", "sin_p") == "direct"
    if kind in ("liouville", "ode"):
        if engine.kind != "exact_diagonal":
            raise ConfigError(
                f"model {kind!r} evolves exactly per p frequency; use engine 'exact_diagonal'"
            )
        system = model.system if kind == "liouville" else model
        split = hermitian_split(system.a_mat)
        pgrid = cfg.model.pgrid or default_pgrid(split, engine.t_final)
        schro = assemble_schrodingerised(split, pgrid, system.u0)
        states = schro.evolve(list(plan.snapshot_times))
        traj = Trajectory()
        for st in states:
            traj.add(st.t, st.values)
        wrap = lambda vals, t: WarpedState(values=vals, pgrid=pgrid, t=t, grid=None)
        recover_fn = lambda w: recover(w, cfg.recovery)
    elif direct_convection:
        traj = Trajectory(times=list(plan.snapshot_times), states=[])
        wrap = None
        recover_fn = None
    elif kind == "convection":
        w0 = model.initial_state(u0)
        traj = model.evolve(w0, plan)
        wrap = lambda vals, t: WarpedState(values=vals, pgrid=model.pgrid, t=t, grid=model.grid)
        recover_fn = lambda w: model.recover(w)
    else:
        w0 = model.initial_state(u0)
        traj = model.evolve(w0, plan)
        wrap = model.wrap
        recover_fn = lambda w: model.recover(w, cfg.recovery)

    if direct_convection:
        norm0 = float(np.linalg.norm(u0))
    elif kind in ("liouville", "ode"):
        norm0 = float(np.linalg.norm(schro.w0.values))
    else:
        norm0 = w0.norm()
    norm0 = norm0 if norm0 > 0 else 1.0
    diag_rows = []
    header_coords = _coordinate_header(cfg)
    for idx, t in enumerate(traj.times):
        if direct_convection:
            recovered = model.evolve_direct(u0, t)
            w_state = None
            norm = float(np.linalg.norm(recovered))
        else:
            w_state = wrap(traj.states[idx], t)
            norm = w_state.norm()
            recovered = recover_fn(w_state)
        if norm > 1e6 * norm0:
            _write_csv(
                os.path.join(out_dir, "diagnostics.csv"),
                ["time", "norm2", "error_vs_exact", "mass"],
                diag_rows,
            )
            raise BlowUpError(f"state norm {norm:g} exceeds 1e6 x initial at t = {t:g}")
        _write_csv(
            os.path.join(out_dir, f"snapshot_{idx:03d}.csv"),
            header_coords + ["re", "im", "abs"],
            _snapshot_rows(cfg, recovered),
        )
        err = ""
        if cfg.outputs.diagnostics.error_vs_exact:
            exact = _exact_solution(cfg, model, u0, t)
            if exact is not None:
                scale = np.linalg.norm(exact)
                err = float(np.linalg.norm(recovered - exact) / (scale if scale > 0 else 1.0))
        mass = _mass(cfg, model, recovered) if cfg.outputs.diagnostics.mass else None
        diag_rows.append([t, norm, err, mass])
        mode_req = cfg.outputs.diagnostics.mode_profile
        if mode_req is not None and w_state is not None and w_state.grid is not None:
            l_star = _dominant_mode_index(u0, cfg.model.grid) if mode_req == "dominant" else int(mode_req)
            _write_csv(
                os.path.join(out_dir, f"profile_{idx:03d}.csv"),
                ["p", "abs"],
                emit_profile(w_state, ("p_at_mode", l_star)),
            )
    _write_csv(
        os.path.join(out_dir, "diagnostics.csv"),
        ["time", "norm2", "error_vs_exact", "mass"],
        diag_rows,
    )
    manifest = {
        "config": cfg.raw,
        "engine": cfg.engine.kind,
        "seed": cfg.seed,
        "wall_time_s": time.monotonic() - started,
        "outputs": sorted(
            name for name in os.listdir(out_dir) if name.endswith(".csv")
        ),
    }
    _write_atomic(
        os.path.join(out_dir, "manifest.json"),
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    )
    return EXIT_OK


def _coordinate_header(cfg: ExperimentConfig) -> list[str]:
    kind = cfg.model.kind
    if kind in ("ode",):
        return ["index"]
    if kind == "boltzmann":
        return ["ordinate", "index"]
    grid = cfg.model.grid
    return [f"x{i + 1}" for i in range(grid.dims)]


def _snapshot_rows(cfg: ExperimentConfig, recovered: np.ndarray) -> list[list]:
    kind = cfg.model.kind
    vals = np.asarray(recovered)
    if kind == "ode":
        return [[i, v.real, v.imag, abs(v)] for i, v in enumerate(vals.reshape(-1))]
    if kind == "boltzmann":
        rows = []
        mat = vals.reshape(vals.shape[0], -1)
        for k in range(mat.shape[0]):
            for j, v in enumerate(mat[k]):
                rows.append([k, j, v.real, v.imag, abs(v)])
        return rows
    grid = cfg.model.grid
    flat = vals.reshape(-1)
    rows = []
    from .grids import unflatten_index

    ax = grid.axis()
    for i, v in enumerate(flat):
        multi = unflatten_index(i, grid.points, grid.dims)
        rows.append([*(ax[j] for j in multi), v.real, v.imag, abs(v)])
    return rows


# ---------------------------------------------------------------------------
# estimate subcommand.
# ---------------------------------------------------------------------------

_QUERY_KEYS = {
    "method", "d", "m", "m_p", "t_final", "dt", "dx", "dp",
    "sparsity", "max_norm", "n_ord", "epsilon", "s_arccos",
}


def run_estimate(query_raw: dict, out) -> int:
    from .resources import CostQuery, estimate

    if not isinstance(query_raw, dict):
        raise ConfigError("$: expected an object")
    unknown = set(query_raw) - _QUERY_KEYS
    if unknown:
        raise ConfigError(f"$: unknown keys {sorted(unknown)}")
    if "method" not in query_raw:
        raise ConfigError("$: missing key 'method'")
    try:
        result = estimate(CostQuery(**query_raw))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    out.write("method,count,polylog_factor,total\n")
    out.write(
        f"{result.method},{_fmt(result.count)},{_fmt(result.polylog_factor)},{_fmt(result.total)}\n"
    )
    out.write(f"formula: N = {result.formula}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point.
# ---------------------------------------------------------------------------


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="schrodingerizer",
        description="Hamiltonian emulation of linear PDEs/ODEs via the warped phase transformation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="output directory (overrides config out_dir)")
    p_est = sub.add_parser("estimate", help="evaluate a gate-count formula")
    p_est.add_argument("--query", required=True)
    p_val = sub.add_parser("validate", help="schema-check a config")
    p_val.add_argument("--config", required=True)
    args = parser.parse_args(argv)

    try:
        if args.command == "validate":
            parse_config(_load_json(args.config))
            print("ok")
            return EXIT_OK
        if args.command == "estimate":
            return run_estimate(_load_json(args.query), sys.stdout)
        cfg = parse_config(_load_json(args.config))
        out_dir = args.out or cfg.out_dir
        if not out_dir:
            raise ConfigError("no output directory: set --out or config out_dir")
        return run_experiment(cfg, out_dir)
    except (ConfigError, CFLError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
