"""Command-line front end: ``maxmodgp {fit,predict,sample,bench}``.

Every command reads one JSON configuration (unknown keys are rejected),
writes CSV tables and a JSON run log into the output directory, and exits
with 0 on success, 2 on configuration errors, 3 on data errors, 4 when the
constraints are infeasible and 5 on numerical failures.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import os
import sys
import time
from dataclasses import fields

import numpy as np

from . import __version__
from .basis import CoefficientGrid, Subdivision, Subdivision1D, eval_ambient
from .bench import EnergyMonitor, get_function, maximin_lhd, rect_knots, square_knots
from .constraints import Boundedness, Convexity, Monotonicity, build_system
from .errors import (ConfigError, DataError, InfeasibleError, MaxModError, NumericalError,
                     ParameterError)
from .kernel import Bounds, KernelModel
from .maxmod import MaxMod, MaxModConfig, MaxModState, apply_move
from .sampler import credible_band, posterior_spec, sample

logger = logging.getLogger("maxmodgp")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4, 5
TIMING_KEYS = ("wall_time", "timing")

PRESET_TOLERANCE = {"atan2d": 1e-5, "modatan": 5e-3}

_MAXMOD_KEYS = [f.name for f in fields(MaxModConfig) if f.name != "seed"]

DEFAULTS = {
    "seed": 0,
    "out": "maxmod-out",
    "data": {
        "preset": None, "D": None, "d": None, "n": None, "design_seed": None,
        "csv": None, "inputs": None, "output": None, "rescale": False,
    },
    "constraints": {"monotonicity": True, "lower": None, "upper": None, "convexity": False},
    "kernel": {
        "family": "squared-exponential", "lengthscale": 0.5, "noise": 1e-3,
        "bounds": {"lengthscale": [1e-2, 10.0], "variance": None, "noise": None},
    },
    "maxmod": {k: None for k in _MAXMOD_KEYS},
    "predict": {"points": None},
    "sample": {"count": 100, "level": 0.9, "method": "gibbs", "burn_in": 100, "thin": 10,
               "probe_points": 10},
    "bench": {"square": True, "rect": True, "square_max_knots": 1000},
}


# -- configuration -------------------------------------------------------------

def _merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown configuration key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{where!r} must be an object")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = val
    return out


def load_config(path: str | None = None, overrides: dict | None = None) -> dict:
    """Read, merge with defaults and validate a configuration file."""
    raw: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw, overrides)


def config_from_dict(raw: dict, overrides: dict | None = None) -> dict:
    """Merge `raw` into the defaults, apply non-None `overrides` and validate."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    cfg = _merge(DEFAULTS, raw)
    for key, val in (overrides or {}).items():
        if val is not None:
            cfg[key] = val
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    data = cfg["data"]
    if (data["preset"] is None) == (data["csv"] is None):
        raise ConfigError("give exactly one of data.preset and data.csv")
    if data["preset"] is not None:
        if data["preset"] not in PRESET_TOLERANCE:
            raise ConfigError(f"unknown preset {data['preset']!r}; choose from {sorted(PRESET_TOLERANCE)}")
        if data["preset"] == "modatan" and (data["D"] is None or data["d"] is None):
            raise ConfigError("preset modatan needs data.D and data.d")
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    try:
        maxmod_config(cfg)
        kernel_seed(cfg, 2, 1.0)
        constraint_kind(cfg, None)
    except ConfigError:
        raise
    except (ParameterError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    s = cfg["sample"]
    if s["method"] not in ("gibbs", "rejection"):
        raise ConfigError("sample.method must be 'gibbs' or 'rejection'")
    if not (isinstance(s["count"], int) and s["count"] >= 0):
        raise ConfigError("sample.count must be a non-negative integer")
    if not 0 < float(s["level"]) <= 1:
        raise ConfigError("sample.level must lie in (0, 1]")


def maxmod_config(cfg: dict) -> MaxModConfig:
    given = {k: v for k, v in cfg["maxmod"].items() if v is not None}
    preset = cfg["data"]["preset"]
    if "tolerance" not in given and preset in PRESET_TOLERANCE:
        given["tolerance"] = PRESET_TOLERANCE[preset]
    return MaxModConfig(seed=cfg["seed"], **given)


def kernel_seed(cfg: dict, D: int, var_y: float) -> tuple[KernelModel, Bounds]:
    k = cfg["kernel"]
    exact = bool(cfg["maxmod"].get("exact"))
    model = KernelModel.isotropic(
        D, lengthscale=float(k["lengthscale"]), family=k["family"], variance=var_y,
        noise_variance=0.0 if exact else float(k["noise"]) * var_y,
    )
    b = k["bounds"]
    bounds = Bounds(
        tuple(b["lengthscale"]),
        tuple(b["variance"]) if b["variance"] is not None else None,
        tuple(b["noise"]) if b["noise"] is not None else None,
    )
    return model, bounds


def _variables(spec, D: int | None, name: str):
    if spec is True:
        return None
    if spec is False or spec is None:
        return ()
    if isinstance(spec, list) and all(isinstance(v, int) and not isinstance(v, bool) and v >= 0
                                      and (D is None or v < D) for v in spec):
        return tuple(sorted(set(spec)))
    raise ConfigError(f"constraints.{name} must be true, false or a list of variable indices")


def constraint_kind(cfg: dict, D: int | None) -> list:
    c = cfg["constraints"]
    kinds = []
    if c["lower"] is not None or c["upper"] is not None:
        kinds.append(Boundedness(
            -math.inf if c["lower"] is None else float(c["lower"]),
            math.inf if c["upper"] is None else float(c["upper"]),
        ))
    mono = _variables(c["monotonicity"], D, "monotonicity")
    if mono != ():
        kinds.append(Monotonicity(mono))
    conv = _variables(c["convexity"], D, "convexity")
    if conv != ():
        kinds.append(Convexity(conv))
    return kinds


# -- data ----------------------------------------------------------------------

def _read_rows(path: str) -> list[tuple[int, list[str]]]:
    """Non-blank CSV rows with their 1-based line numbers."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            rows = [(reader.line_num, r) for r in reader if r]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path} is not UTF-8: {exc}") from exc
    return rows


def _numeric(rows, width: int, path: str) -> np.ndarray:
    out = np.empty((len(rows), width))
    for i, (line, row) in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}:{line}: expected {width} cells, found {len(row)}")
        try:
            out[i] = [float(c) for c in row]
        except ValueError as exc:
            raise DataError(f"{path}:{line}: non-numeric cell ({exc})") from exc
        if not np.all(np.isfinite(out[i])):
            raise DataError(f"{path}:{line}: non-finite value")
    return out


def ingest_csv(path: str, inputs=None, output=None, rescale: bool = False):
    """Read a dataset with a header row: input columns, then the response.

    Without `inputs`, the header must read ``x1, ..., xD, <response>``.
    Inputs outside ``[0, 1]`` are an error unless `rescale` maps each column
    affinely by its min and max.

    Returns
    -------
    X : ndarray, shape (n, D)
    y : ndarray, shape (n,)
    """
    rows = _read_rows(path)
    if not rows:
        raise DataError(f"{path} is empty")
    header = [h.strip() for h in rows[0][1]]
    body = rows[1:]
    if inputs is None:
        D = len(header) - 1
        if D < 1 or header[:D] != [f"x{j + 1}" for j in range(D)]:
            raise DataError(f"{path}: header must be x1..xD followed by the response, got {header}")
        cols = list(range(D + 1))
    else:
        out_name = output if output is not None else header[-1]
        missing = [c for c in list(inputs) + [out_name] if c not in header]
        if missing:
            raise DataError(f"{path}: columns {missing} not in header")
        cols = [header.index(c) for c in inputs] + [header.index(out_name)]
    A = _numeric(body, len(header), path)[:, cols]
    if A.shape[0] == 0:
        raise DataError(f"{path} has a header but no data rows")
    X, y = A[:, :-1], A[:, -1]
    if np.any(X < 0) or np.any(X > 1):
        if not rescale:
            raise DataError(f"{path}: inputs outside [0, 1]; set data.rescale to map them")
    if rescale:
        lo, hi = X.min(axis=0), X.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        X = (X - lo) / span
    return X, y


def read_points(path: str, D: int) -> np.ndarray:
    """Points file with header ``x1..xD``; an empty file gives zero points."""
    rows = _read_rows(path)
    if not rows:
        return np.zeros((0, D))
    header = [h.strip() for h in rows[0][1]]
    if len(header) != D:
        raise DataError(f"{path}: {len(header)} columns, the model has D={D} inputs")
    P = _numeric(rows[1:], D, path) if len(rows) > 1 else np.zeros((0, D))
    if np.any(P < 0) or np.any(P > 1):
        raise DataError(f"{path}: points must lie in [0, 1]^{D}")
    return P


def load_data(cfg: dict):
    """``(X, y, oracle)``; the oracle is the analytic target for presets, else None."""
    data = cfg["data"]
    if data["csv"] is not None:
        X, y = ingest_csv(data["csv"], data["inputs"], data["output"], data["rescale"])
        return X, y, None
    preset = data["preset"]
    f = get_function("atan2d") if preset == "atan2d" else get_function("modatan", D=data["D"], d=data["d"])
    n = data["n"] if data["n"] is not None else (40 if preset == "atan2d" else 10 * f.dim)
    seed = data["design_seed"] if data["design_seed"] is not None else cfg["seed"]
    X = maximin_lhd(n, f.dim, seed=seed).points
    return X, f(X), f


# -- artifacts -----------------------------------------------------------------

def write_table(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dump_log(path: str, log: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_json_safe(log), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_log(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            log = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read run log {path}: {exc}") from exc
    if log.get("schema_version") != SCHEMA_VERSION:
        raise DataError(f"{path}: unsupported schema_version {log.get('schema_version')!r}")
    return log


def strip_timing(obj):
    """Copy of a run log without wall-time fields."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def describe_final(state: MaxModState) -> dict:
    sub = state.sub
    return {
        "ambient_dim": sub.ambient_dim,
        "active": list(sub.active),
        "knots": [{"var": v, "knots": list(s.knots)} for v, s in zip(sub.active, sub.per_dim)],
        "shape": list(sub.shape),
        "grid_size": sub.size,
        "coefficients": [float(a) for a in state.coeffs.values],
        "hyperparameters": state.model.as_dict(),
        "objective": state.mode.objective,
        "stop_reason": state.stop_reason,
        "last_score": state.last_score,
        "energy": state.history[-1].energy if state.history else state.initial_energy,
        "initial_variable": state.initial_sub.active[0] if state.initial_sub else None,
        "initial_energy": state.initial_energy,
    }


def subdivision_from_log(final: dict) -> tuple[Subdivision, CoefficientGrid]:
    knots = {int(k["var"]): k["knots"] for k in final["knots"]}
    sub = Subdivision.from_knots(knots, int(final["ambient_dim"]))
    return sub, CoefficientGrid(sub.shape, np.array(final["coefficients"], dtype=float))


def model_from_log(final: dict) -> KernelModel:
    h = final["hyperparameters"]
    return KernelModel(h["family"], h["variance"], tuple(h["lengthscales"]), h["noise_variance"])


def _x_header(D: int) -> list[str]:
    return [f"x{j + 1}" for j in range(D)]


def write_fit_artifacts(out: str, cfg: dict, X, y, state: MaxModState, elapsed: float) -> dict:
    os.makedirs(out, exist_ok=True)
    log = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "config_echo": cfg,
        "iterations": [r.as_dict() for r in state.history],
        "final": describe_final(state),
        "timing": {"total_seconds": elapsed},
    }
    dump_log(os.path.join(out, "run_log.json"), log)
    sub, coeffs = state.sub, state.coeffs
    D = sub.ambient_dim
    T = sub.grid_points()
    write_table(os.path.join(out, "coefficients.csv"),
                ["flat_index"] + [f"x{v + 1}" for v in sub.active] + ["coefficient"],
                [[i, *T[i], coeffs.values[i]] for i in range(sub.size)])
    write_table(os.path.join(out, "knots.csv"), ["variable", "index", "knot"],
                [[f"x{v + 1}", i, t] for v, s in zip(sub.active, sub.per_dim)
                 for i, t in enumerate(s.knots)])
    write_table(os.path.join(out, "data.csv"), _x_header(D) + ["y"],
                [[*x, v] for x, v in zip(X, y)])
    if sub.d <= 2:
        g = np.linspace(0.0, 1.0, 21)
        mesh = np.meshgrid(*([g] * sub.d), indexing="ij")
        Z = np.stack([m.ravel() for m in mesh], axis=1)
        vals = eval_ambient(sub, coeffs, sub.embed(Z))
        write_table(os.path.join(out, "grid_eval.csv"),
                    [f"x{v + 1}" for v in sub.active] + ["mode"],
                    [[*z, v] for z, v in zip(Z, vals)])
    return log


# -- commands ------------------------------------------------------------------

def build_driver(cfg: dict, X, y, oracle) -> MaxMod:
    """MaxMod driver for data ``(X, y)`` configured as the CLI would; `oracle` enables E_n logging."""
    D = X.shape[1]
    vy = float(np.var(y)) if y.size > 1 and np.var(y) > 0 else 1.0
    model, bounds = kernel_seed(cfg, D, vy)
    monitor = EnergyMonitor(oracle, D, seed=cfg["seed"]) if oracle is not None else None
    return MaxMod(X, y, constraint_kind(cfg, D), maxmod_config(cfg), model, bounds, monitor)


def cmd_fit(cfg: dict) -> dict:
    """Run MaxMod and write run_log.json plus coefficient, knot, data and grid tables."""
    X, y, oracle = load_data(cfg)
    t0 = time.perf_counter()
    state = build_driver(cfg, X, y, oracle).run()
    elapsed = time.perf_counter() - t0
    logger.info("fit: active %s, grid %d, stop %s", state.sub.active, state.sub.size, state.stop_reason)
    return write_fit_artifacts(cfg["out"], cfg, X, y, state, elapsed)


def cmd_predict(cfg: dict, points: str | None = None) -> np.ndarray:
    """Evaluate the fitted mode at the points of a CSV file; writes predictions.csv."""
    log = read_log(os.path.join(cfg["out"], "run_log.json"))
    sub, coeffs = subdivision_from_log(log["final"])
    path = points or cfg["predict"]["points"]
    if path is None:
        raise ConfigError("predict needs a points file (--points or predict.points)")
    P = read_points(path, sub.ambient_dim)
    inactive = sorted(set(range(sub.ambient_dim)) - set(sub.active))
    if inactive:
        logger.info("inactive inputs ignored: %s", [f"x{v + 1}" for v in inactive])
    vals = eval_ambient(sub, coeffs, P) if len(P) else np.zeros(0)
    write_table(os.path.join(cfg["out"], "predictions.csv"), _x_header(sub.ambient_dim) + ["prediction"],
                [[*p, v] for p, v in zip(P, vals)])
    return vals


def _load_fit(cfg: dict):
    out = cfg["out"]
    log = read_log(os.path.join(out, "run_log.json"))
    sub, coeffs = subdivision_from_log(log["final"])
    model = model_from_log(log["final"])
    rows = _read_rows(os.path.join(out, "data.csv"))
    A = _numeric(rows[1:], sub.ambient_dim + 1, os.path.join(out, "data.csv"))
    return log, sub, coeffs, model, A[:, :-1], A[:, -1]


def cmd_sample(cfg: dict, count: int | None = None, level: float | None = None) -> dict:
    """Draw constrained realizations around the fitted model; writes draws and band tables."""
    log, sub, coeffs, model, X, y = _load_fit(cfg)
    s = cfg["sample"]
    count = s["count"] if count is None else count
    level = float(s["level"] if level is None else level)
    kind = constraint_kind(log["config_echo"], sub.ambient_dim)
    cons = build_system(kind, sub, X, y)
    noise = model.noise_variance
    if noise <= 0:
        noise = 1e-8 * (float(np.var(y)) or 1.0)
        logger.info("interpolating model: sampling with noise variance %.3g", noise)
    spec = posterior_spec(model, sub, cons, noise)
    t0 = time.perf_counter()
    draws = sample(spec, count, method=s["method"], seed=cfg["seed"], start=coeffs.values,
                   burn_in=s["burn_in"], thin=s["thin"])
    elapsed = time.perf_counter() - t0
    out = cfg["out"]
    write_table(os.path.join(out, "draws.csv"), ["draw"] + [f"alpha_{i}" for i in range(sub.size)],
                [[k, *d.values] for k, d in enumerate(draws)])
    rng = np.random.default_rng(cfg["seed"])
    P = rng.uniform(size=(int(s["probe_points"]), sub.ambient_dim))
    Z = sub.restrict(P)
    mode_vals = eval_ambient(sub, coeffs, P)
    vals = np.array([eval_ambient(sub, d, P) for d in draws]) if draws else np.zeros((0, len(P)))
    write_table(os.path.join(out, "draw_eval.csv"), ["point", "draw", "value"],
                [[i, k, vals[k, i]] for i in range(len(P)) for k in range(len(draws))])
    rows = []
    if len(draws) >= 2:
        band = credible_band(draws, sub, Z, level)
        rows = [[i, *P[i], band.lower[i], band.median[i], band.upper[i], mode_vals[i]]
                for i in range(len(P))]
    write_table(os.path.join(out, "band.csv"),
                ["point"] + _x_header(sub.ambient_dim) + ["lower", "median", "upper", "mode"], rows)
    summary = {"count": len(draws), "level": level, "method": s["method"],
               "grid_size": sub.size, "timing": {"wall_time": elapsed}}
    dump_log(os.path.join(out, "sample_log.json"), {"schema_version": SCHEMA_VERSION, **summary})
    return summary


def _replay(state: MaxModState, cfg: MaxModConfig) -> list[Subdivision]:
    subs = []
    sub = state.initial_sub
    for rec in state.history:
        sub = apply_move(sub, rec.move, cfg.min_separation)
        subs.append(sub)
    return subs


def cmd_bench(cfg: dict) -> list[list]:
    """MaxMod against equispaced layouts; writes bench.csv (one row per iteration and method)."""
    X, y, oracle = load_data(cfg)
    if oracle is None:
        raise ConfigError("bench needs a preset with an analytic target")
    t0 = time.perf_counter()
    mm = build_driver(cfg, X, y, oracle)
    state = mm.run()
    write_fit_artifacts(cfg["out"], cfg, X, y, state, time.perf_counter() - t0)
    D = X.shape[1]
    b = cfg["bench"]
    monitor = mm.monitor
    rows = []

    def baseline(method, sub):
        if sub.size > b["square_max_knots"] and method == "square":
            return [method, sub.size, "x".join(map(str, sub.shape)), "", "refused"]
        model = mm.fit(sub, mm.model0, 0, sub.size)
        mode = mm.mode(sub, model)
        if not mode.optimal:
            return [method, sub.size, "x".join(map(str, sub.shape)), "", mode.status]
        return [method, sub.size, "x".join(map(str, sub.shape)), monitor(sub, mode.alpha), "ok"]

    for rec, sub in zip(state.history, _replay(state, mm.cfg)):
        rows.append([rec.iteration, "maxmod", sub.size, "x".join(map(str, sub.shape)), rec.energy, "ok"])
        if b["rect"]:
            rect = rect_knots(sub.shape, sub.active, D)
            rows.append([rec.iteration, *baseline("rect", rect)])
        if b["square"]:
            k = max(2, int(round(sub.size ** (1.0 / D))))
            # size checked before building: the layout itself can be huge
            if k ** D > b["square_max_knots"]:
                rows.append([rec.iteration, "square", k ** D, "x".join([str(k)] * D), "", "refused"])
            else:
                rows.append([rec.iteration, *baseline("square", square_knots(k, range(D), D))])
    write_table(os.path.join(cfg["out"], "bench.csv"),
                ["iteration", "method", "grid_size", "knots_per_variable", "energy", "status"], rows)
    return rows


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxmodgp", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--out", help="output directory (default from the configuration)")
    p.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", help="run MaxMod and write the model artifacts")
    pr = sub.add_parser("predict", help="evaluate a fitted mode at new points")
    pr.add_argument("--points", help="CSV with header x1..xD")
    sa = sub.add_parser("sample", help="draw constrained realizations of a fitted model")
    sa.add_argument("--count", type=int)
    sa.add_argument("--level", type=float)
    sub.add_parser("bench", help="compare MaxMod with equispaced knot layouts")
    return p


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, InfeasibleError):
        return EXIT_INFEASIBLE
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(exc, ParameterError):
        return EXIT_CONFIG
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, {"seed": args.seed, "out": args.out})
        if args.command == "fit":
            cmd_fit(cfg)
        elif args.command == "predict":
            cmd_predict(cfg, args.points)
        elif args.command == "sample":
            cmd_sample(cfg, args.count, args.level)
        else:
            cmd_bench(cfg)
    except MaxModError as exc:
        code = exit_code(exc)
        print(f"error[{code}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
