"""Command-line experiment runner.

Every run resolves its full configuration (defaults included), validates
it against a versioned schema, and writes artifacts atomically under
<output_root>/<run_id>/ next to config.json and manifest.json.  run_id is
a hash prefix of the resolved config, so a rerun with identical inputs
lands in the same directory with byte-identical CSV/JSON artifacts; the
manifest's runtime field is the one wall-clock value, and its sha256
table covers everything else.

Seeds are explicit everywhere; nothing seeds from the clock.

Exit codes: 0 success, 1 runtime failure or failed recipe, 2 config or
schema violation (reported with field paths).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .core import RngStream
from .counterexample import _scaled_cloud, solve_fixed_point, verify_two_solutions
from .measures import EmpiricalMeasure, MeasureFlow, holder_dual_lb, wasserstein_kappa
from .models import build_model
from .picard import PicardConfig, choose_delta, picard_iterate
from .probes import frac_deriv_decay_probe, grad_decay_probe
from .recipes import RECIPES, run_recipe
from .sde import euler_mckean_particles
from .stable_noise import (
    Convention,
    StableSpec,
    sample_sym_stable,
    stable_density_1d,
)

SCHEMA_VERSION = "1"
OUTPUT_ROOT_ENV = "STABLEMV_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "runs"

_MODELS = ["pure_stable", "stable_ou", "mean_field_eta", "counterexample"]
_CONVENTIONS = [c.value for c in Convention]


class ConfigError(Exception):
    """Validation failure; .errors is a list of (field_path, message)."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.errors))


def _num(exclusive_min=None, exclusive_max=None, minimum=None, maximum=None):
    out = {"type": "number"}
    if exclusive_min is not None:
        out["exclusiveMinimum"] = exclusive_min
    if exclusive_max is not None:
        out["exclusiveMaximum"] = exclusive_max
    if minimum is not None:
        out["minimum"] = minimum
    if maximum is not None:
        out["maximum"] = maximum
    return out


def _int(minimum=None, maximum=None):
    out = {"type": "integer"}
    if minimum is not None:
        out["minimum"] = minimum
    if maximum is not None:
        out["maximum"] = maximum
    return out


def _schema(properties, required):
    props = {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"type": "string"},
    }
    props.update(properties)
    return {
        "type": "object",
        "properties": props,
        "required": ["schema_version"] + required,
        "additionalProperties": False,
    }


SCHEMAS = {
    "sample": _schema(
        {
            "alpha": _num(0.0, 2.0),
            "dim": _int(1),
            "convention": {"enum": _CONVENTIONS},
            "t": _num(0.0),
            "n": _int(1),
            "seed": _int(0),
        },
        ["alpha", "dim", "convention", "t", "n", "seed"],
    ),
    "density": _schema(
        {
            "alpha": _num(0.0, 2.0),
            "convention": {"enum": _CONVENTIONS},
            "t": _num(0.0),
            "x_min": {"type": "number"},
            "x_max": {"type": "number"},
            "n_points": _int(2),
        },
        ["alpha", "convention", "t", "x_min", "x_max", "n_points"],
    ),
    "wass": _schema(
        {
            "mu": {"type": "string"},
            "nu": {"type": "string"},
            "kappa": _num(0.0, maximum=1.0),
        },
        ["mu", "nu", "kappa"],
    ),
    "simulate": _schema(
        {
            "model": {"enum": _MODELS},
            "params": {"type": "object"},
            "t_max": _num(0.0),
            "n_steps": _int(1),
            "n_paths": _int(1),
            "seed": _int(0),
            "paths": {"type": "boolean"},
            "thin": _int(1),
        },
        ["model", "t_max", "n_steps", "n_paths", "seed"],
    ),
    "picard": _schema(
        {
            "model": {"enum": _MODELS},
            "params": {"type": "object"},
            "eta": _num(0.0, 2.0),
            "delta": {"oneOf": [{"const": "auto"}, _num(minimum=0.0)]},
            "tol": _num(0.0),
            "max_iter": _int(1),
            "t_max": _num(0.0),
            "n_steps": _int(1),
            "n_paths": _int(1),
            "seed": _int(0),
        },
        ["model", "delta", "tol", "t_max", "n_steps", "n_paths", "seed"],
    ),
    "probe": _schema(
        {
            "case": {"enum": ["grad", "frac"]},
            "alpha": _num(0.0, 2.0),
            "eta": _num(0.0, 1.0),
            "lags": {
                "type": "array",
                "items": _num(0.0),
                "minItems": 2,
            },
            "n": _int(1),
            "seed": _int(0),
            "x": {"type": "number"},
        },
        ["case", "alpha", "eta", "lags", "n", "seed"],
    ),
    "counterexample": _schema(
        {
            "alpha": _num(0.0, 1.0),
            "rho": _num(0.0),
            "tol": _num(0.0),
            "t_max": _num(0.0),
            "n_steps": _int(1),
            "n_paths": _int(2),
            "seed": _int(0),
        },
        ["alpha", "rho", "tol", "t_max", "n_steps", "n_paths", "seed"],
    ),
    "recipe": _schema(
        {
            "recipe": {"enum": sorted(RECIPES)},
            "seed": {"oneOf": [{"type": "null"}, _int(0)]},
        },
        ["recipe"],
    ),
}


# ------------------------------------------------------------- serialization


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonify(obj), indent=2, sort_keys=True) + "\n")


def _save_csv(path: Path, data: np.ndarray, header: str) -> None:
    np.savetxt(path, np.atleast_2d(data), fmt="%.17g", delimiter=",",
               header=header, comments="")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_cloud(path: str) -> np.ndarray:
    """Point cloud from CSV; tolerates a header row and an index column."""
    with open(path) as fh:
        first = fh.readline().strip()
    cols = [c.strip() for c in first.split(",")]
    try:
        [float(c) for c in cols]
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if cols and cols[0] == "index":
            data = data[:, 1:]
    if data.size == 0:
        raise ValueError(f"{path}: empty point cloud")
    return data


# ---------------------------------------------------------------- validation


def _validate(command: str, config: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMAS[command])
    errors = []
    for err in sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path)):
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        errors.append((path, err.message))
    if errors:
        raise ConfigError(errors)
    # cross-field constraints a JSON schema cannot express
    if command == "density" and config["x_min"] >= config["x_max"]:
        raise ConfigError([("x_max", "x_max must exceed x_min")])
    if command == "probe" and config["eta"] >= config["alpha"]:
        raise ConfigError([("eta", "probe needs eta < alpha")])


# ------------------------------------------------------------------- run dir


def _run(command: str, config: dict, output_root, writer):
    """Validate, execute writer(tmp_dir, config), then atomically publish.

    Returns (final_dir, stdout_payload).  Partial outputs are removed on
    any failure.
    """
    config = dict(config)
    config.setdefault("schema_version", SCHEMA_VERSION)
    config["command"] = command
    _validate(command, config)

    canonical = json.dumps(_jsonify(config), sort_keys=True, separators=(",", ":"))
    run_id = hashlib.sha256(canonical.encode()).hexdigest()[:12]
    root = Path(
        output_root or os.environ.get(OUTPUT_ROOT_ENV) or DEFAULT_OUTPUT_ROOT
    )
    root.mkdir(parents=True, exist_ok=True)
    final = root / run_id
    tmp = root / f".{run_id}.tmp{os.getpid()}"
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir()
    t0 = time.time()
    try:
        payload = writer(tmp, config)
        _dump_json(tmp / "config.json", config)
        files = {
            p.relative_to(tmp).as_posix(): _sha256(p)
            for p in sorted(tmp.rglob("*"))
            if p.is_file()
        }
        manifest = {
            "tool": "stablemv",
            "version": __version__,
            "run_id": run_id,
            "config": config,
            "files": files,
            "runtime_seconds": round(time.time() - t0, 3),
        }
        _dump_json(tmp / "manifest.json", manifest)
        if final.exists():
            shutil.rmtree(final)
        os.replace(tmp, final)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return final, payload


# ------------------------------------------------------------------- writers


def _write_sample(tmp: Path, cfg: dict):
    spec = StableSpec(cfg["alpha"], cfg["dim"], cfg["convention"])
    x = sample_sym_stable(spec, cfg["t"], cfg["n"], RngStream(cfg["seed"]))
    header = "index," + ",".join(f"x_{j + 1}" for j in range(spec.dim))
    _save_csv(tmp / "samples.csv", np.column_stack([np.arange(cfg["n"]), x]), header)
    return None


def _write_density(tmp: Path, cfg: dict):
    x = np.linspace(cfg["x_min"], cfg["x_max"], cfg["n_points"])
    p = stable_density_1d(cfg["alpha"], cfg["convention"], cfg["t"], x)
    _save_csv(tmp / "density.csv", np.column_stack([x, p]), "x,p")
    return None


def _write_wass(tmp: Path, cfg: dict):
    mu = EmpiricalMeasure.from_points(_load_cloud(cfg["mu"]))
    nu = EmpiricalMeasure.from_points(_load_cloud(cfg["nu"]))
    primal = wasserstein_kappa(mu, nu, cfg["kappa"])
    dual = holder_dual_lb(mu, nu, cfg["kappa"])
    result = {"primal": primal, "dual_lb": dual, "gap": primal - dual}
    _dump_json(tmp / "wass.json", result)
    return result


def _model_from(cfg: dict):
    return build_model(cfg["model"], **cfg.get("params", {}))


def _write_simulate(tmp: Path, cfg: dict):
    setup = _model_from(cfg)
    grid = np.linspace(0.0, cfg["t_max"], cfg["n_steps"] + 1)
    bundle, flow = euler_mckean_particles(
        setup.coeffs, setup.init, grid, cfg["n_paths"], RngStream(cfg["seed"])
    )
    _save_csv(tmp / "t_grid.csv", grid[:, None], "t")
    mdir = tmp / "marginals"
    mdir.mkdir()
    coord_header = ",".join(f"x_{j + 1}" for j in range(setup.coeffs.dim))
    for k, m in enumerate(flow.measures):
        _save_csv(mdir / f"node_{k:03d}.csv", m.points, coord_header)
    if cfg.get("paths", True):
        kept = bundle.paths[:: cfg.get("thin", 8)]
        cols = [grid]
        names = ["t"]
        for i in range(kept.shape[0]):
            for j in range(setup.coeffs.dim):
                cols.append(kept[i, :, j])
                tag = f"path_{i * cfg.get('thin', 8)}"
                names.append(tag if setup.coeffs.dim == 1 else f"{tag}_x{j + 1}")
        _save_csv(tmp / "paths.csv", np.column_stack(cols), ",".join(names))
    return None


def _write_picard(tmp: Path, cfg: dict):
    setup = _model_from(cfg)
    coeffs = setup.coeffs
    eta = cfg.get("eta", coeffs.eta)
    if cfg["delta"] == "auto":
        delta = choose_delta(
            coeffs.noise.alpha, eta, 0.5, coeffs.measure_dependent_drift
        )
    else:
        delta = float(cfg["delta"])
    grid = np.linspace(0.0, cfg["t_max"], cfg["n_steps"] + 1)
    pc = PicardConfig(
        delta=delta,
        eta=eta,
        tol=cfg["tol"],
        max_iter=cfg.get("max_iter", 12),
        n_particles=cfg["n_paths"],
        grid=grid,
    )
    mdir = tmp / "marginals"
    mdir.mkdir()
    node_idx = sorted(set(int(round(v)) for v in np.linspace(0, cfg["n_steps"], 5)))
    coord_header = ",".join(f"x_{j + 1}" for j in range(coeffs.dim))

    def on_iteration(k, flow):
        for i in node_idx:
            _save_csv(mdir / f"iter{k:02d}_node{i:03d}.csv",
                      flow.measures[i].points, coord_header)

    _, report = picard_iterate(
        coeffs, setup.init, pc, RngStream(cfg["seed"]), on_iteration=on_iteration
    )
    _dump_json(tmp / "picard_report.json", report.to_dict())
    return None


def _write_probe(tmp: Path, cfg: dict):
    setup = build_model("pure_stable", alpha=cfg["alpha"], eta=cfg["eta"])
    lags = np.asarray(cfg["lags"], dtype=float)
    grid = np.array([0.0, float(lags.max())])
    flow = MeasureFlow.constant(EmpiricalMeasure.from_points(np.zeros(1)), grid)
    eta = cfg["eta"]

    def f(pts):
        return np.linalg.norm(pts, axis=1) ** eta

    # gradient signal vanishes at the symmetry point, so its default base
    # sits at 1 in self-similar coordinates; the frac case peaks at 0
    x = cfg.get("x", 1.0 if cfg["case"] == "grad" else 0.0)
    probe = grad_decay_probe if cfg["case"] == "grad" else frac_deriv_decay_probe
    res = probe(setup.coeffs, flow, f, x, lags, cfg["n"], RngStream(cfg["seed"]))
    _save_csv(
        tmp / "probe.csv",
        np.column_stack([res.lags, res.estimates, res.stderrs]),
        "lag,estimate,stderr",
    )
    _dump_json(tmp / "probe.json", res.to_dict())
    return None


def _write_counterexample(tmp: Path, cfg: dict):
    alpha, rho = cfg["alpha"], cfg["rho"]
    root_report = solve_fixed_point(alpha, rho, tol=cfg["tol"])
    grid = np.linspace(0.0, cfg["t_max"], cfg["n_steps"] + 1)
    verify = verify_two_solutions(
        alpha, root_report.c, rho, grid, cfg["n_paths"], RngStream(cfg["seed"])
    )
    _dump_json(tmp / "root.json", root_report.to_dict())
    _dump_json(tmp / "verify.json", verify.to_dict())
    # both solution laws at the horizon, riding one driving path
    spec = StableSpec(alpha, 1, Convention.UNIT)
    z = sample_sym_stable(spec, 1.0, cfg["n_paths"], RngStream(cfg["seed"], (42,)))[:, 0]
    _save_csv(
        tmp / "laws_t1.csv",
        np.column_stack([
            _scaled_cloud(0.0, rho, alpha, cfg["t_max"], z),
            _scaled_cloud(root_report.c, rho, alpha, cfg["t_max"], z),
        ]),
        "x_sym,x_shift",
    )
    return None


def _write_recipe(tmp: Path, cfg: dict):
    report = run_recipe(cfg["recipe"], seed=cfg.get("seed"))
    _dump_json(tmp / "report.json", report)
    return report


_WRITERS = {
    "sample": _write_sample,
    "density": _write_density,
    "wass": _write_wass,
    "simulate": _write_simulate,
    "picard": _write_picard,
    "probe": _write_probe,
    "counterexample": _write_counterexample,
    "recipe": _write_recipe,
}


# ----------------------------------------------------------------- arg layer


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError([("<config>", f"no such file: {path}")])
    except json.JSONDecodeError as exc:
        raise ConfigError([("<config>", f"invalid JSON: {exc}")])
    if not isinstance(cfg, dict):
        raise ConfigError([("<root>", "config must be a JSON object")])
    return cfg


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablemv",
        description="Stable McKean-Vlasov toolkit experiment runner.",
    )
    parser.add_argument("--recipe", metavar="NAME",
                        help="run a named acceptance recipe")
    parser.add_argument("--list-recipes", action="store_true",
                        help="list acceptance recipes and exit")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the recipe's default seed")
    parser.add_argument("--output-root", default=None,
                        help=f"artifact root (default ${OUTPUT_ROOT_ENV} or ./{DEFAULT_OUTPUT_ROOT})")
    parser.add_argument("--version", action="version", version=f"stablemv {__version__}")
    sub = parser.add_subparsers(dest="command")

    # accept --output-root after the subcommand as well
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-root", default=None, help=argparse.SUPPRESS)

    p = sub.add_parser("sample", parents=[common],
                       help="draw symmetric stable increments to CSV")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--convention", choices=_CONVENTIONS, default="generator_half")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("density", parents=[common], help="tabulate the 1-d stable density")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--convention", choices=_CONVENTIONS, default="generator_half")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--x-min", type=float, default=-10.0)
    p.add_argument("--x-max", type=float, default=10.0)
    p.add_argument("--n-points", type=int, default=401)

    p = sub.add_parser("wass", parents=[common], help="transport distance between two CSV clouds")
    p.add_argument("mu", help="CSV point cloud")
    p.add_argument("nu", help="CSV point cloud")
    p.add_argument("--kappa", type=float, required=True)

    p = sub.add_parser("simulate", parents=[common], help="particle simulation from a config file")
    p.add_argument("config", help="JSON config file")

    p = sub.add_parser("picard", parents=[common], help="fixed-point iteration from a config file")
    p.add_argument("config", help="JSON config file")

    p = sub.add_parser("probe", parents=[common], help="semigroup decay probe")
    p.add_argument("--case", choices=["grad", "frac"], required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--lags", default="0.05:2.0:8",
                   help="comma-separated values, or min:max:count geometric")
    p.add_argument("--n", type=int, default=200_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--x", type=float, default=None,
                   help="base point in self-similar coordinates")

    p = sub.add_parser("counterexample", parents=[common], help="drift fixed point and two-solution check")
    p.add_argument("--alpha", type=float, default=0.75)
    p.add_argument("--rho", type=float, default=0.05)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--n-steps", type=int, default=10)
    p.add_argument("--n-paths", type=int, default=10_000)
    p.add_argument("--seed", type=int, required=True)
    return parser


def _parse_lags(text: str) -> list:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError([("lags", "expected min:max:count")])
        lo, hi, cnt = float(parts[0]), float(parts[1]), int(parts[2])
        return [float(v) for v in np.geomspace(lo, hi, cnt)]
    return [float(v) for v in text.split(",")]


def _config_from_args(args) -> dict:
    cmd = args.command
    if cmd == "sample":
        return {"alpha": args.alpha, "dim": args.dim, "convention": args.convention,
                "t": args.t, "n": args.n, "seed": args.seed}
    if cmd == "density":
        return {"alpha": args.alpha, "convention": args.convention, "t": args.t,
                "x_min": args.x_min, "x_max": args.x_max, "n_points": args.n_points}
    if cmd == "wass":
        return {"mu": args.mu, "nu": args.nu, "kappa": args.kappa}
    if cmd in ("simulate", "picard"):
        return _load_config_file(args.config)
    if cmd == "probe":
        cfg = {"case": args.case, "alpha": args.alpha, "eta": args.eta,
               "lags": _parse_lags(args.lags), "n": args.n, "seed": args.seed}
        if args.x is not None:
            cfg["x"] = args.x
        return cfg
    if cmd == "counterexample":
        return {"alpha": args.alpha, "rho": args.rho, "tol": args.tol,
                "t_max": args.t_max, "n_steps": args.n_steps,
                "n_paths": args.n_paths, "seed": args.seed}
    raise ConfigError([("<root>", f"unknown command {cmd!r}")])


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.list_recipes:
        for name in sorted(RECIPES, key=lambda n: RECIPES[n][0]):
            print(f"{RECIPES[name][0]:3d}  {name}")
        return 0

    try:
        if args.recipe is not None:
            if args.command is not None:
                print("error: --recipe replaces the subcommand", file=sys.stderr)
                return 2
            config = {"recipe": args.recipe, "seed": args.seed}
            final, report = _run("recipe", config, args.output_root, _write_recipe)
            for check in report["checks"]:
                mark = "pass" if check["passed"] else "FAIL"
                print(f"  [{mark}] {check['name']}")
            verdict = "PASS" if report["passed"] else "FAIL"
            print(f"recipe {args.recipe} (criterion {report['criterion']}): "
                  f"{verdict}  [{final}]")
            return 0 if report["passed"] else 1

        if args.command is None:
            parser.print_usage(sys.stderr)
            return 2
        config = _config_from_args(args)
        final, payload = _run(args.command, config, args.output_root,
                              _WRITERS[args.command])
        if payload is not None:
            print(json.dumps(_jsonify(payload), sort_keys=True))
        print(f"artifacts: {final}", file=sys.stderr)
        return 0
    except ConfigError as exc:
        for path, message in exc.errors:
            print(f"config error at {path}: {message}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
