"""Command-line front end: simulate | estimate | risk | sweep | check-membership.

Settings come from an optional JSON config file (``--config``); flags given
on the command line override file values. Exit codes: 0 success, 2 bad
configuration, 3 numeric failure.
"""

import argparse
import json
import os
import sys
from importlib import metadata
from pathlib import Path

import jsonschema
import numpy as np

from . import _kernels
from .estimate import (EstimatorConfig, empirical_coeffs, pinsker_estimate, plug_in_mass,
                       write_estimate)
from .model import (BUILTIN_MODELS, EllipsoidSpec, ModelError, load_model, model_from_dict,
                    validate_model)
from .risk import (NumericalError, convergence_sweep, mise_monte_carlo, resolve_radius,
                   write_json, write_sweep_csv)
from .simulate import read_observations, sample_observations, write_observations

SEED_ENV = "PINSKER_SEED"

_number = {"type": "number"}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {"oneOf": [
            {"type": "string"},
            {"type": "object", "required": ["tau", "theta"],
             "additionalProperties": False,
             "properties": {"tau": _number, "theta": {"type": "array", "items": _number},
                            "S": _number, "name": {"type": "string"}}},
            {"type": "object", "required": ["builtin"], "additionalProperties": False,
             "properties": {"builtin": {"enum": sorted(BUILTIN_MODELS)},
                            "S": _number, "tau": _number}},
        ]},
        "m": {"type": "integer"},
        "R": {"oneOf": [_number, {"const": "boundary"}]},
        "S_override": _number,
        "plug_in_S": {"type": "boolean"},
        "n": {"type": "integer"},
        "n_list": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
        "reps": {"type": "integer"},
        "seed": {"type": "integer", "minimum": 0},
        "mode": {"enum": ["exact", "mc"]},
        "workers": {"type": "integer", "minimum": 1},
        "pooled": {"type": "boolean"},
        "L_max": {"type": "integer", "minimum": 0},
        "grid_size": {"type": "integer", "minimum": 2},
        "observations": {"type": "string"},
        "out_dir": {"type": "string"},
        "prefix": {"type": "string"},
    },
}

DEFAULTS = {
    "model": "raised-cosine",
    "m": 2,
    "R": "boundary",
    "plug_in_S": False,
    "reps": 2000,
    "mode": "exact",
    "workers": 1,
    "pooled": False,
    "grid_size": 4097,
    "out_dir": ".",
    "prefix": "",
}


class ConfigError(ValueError):
    pass


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover
        return "unknown"


def _n_list(text):
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad n list {text!r}") from None


def _radius(text):
    return text if text == "boundary" else float(text)


def _add_common(p):
    g = p.add_argument_group("experiment settings (override --config)")
    g.add_argument("--config", type=Path, help="JSON config file")
    g.add_argument("--model", help="builtin name (%s) or path to a model JSON file"
                   % ", ".join(sorted(BUILTIN_MODELS)))
    g.add_argument("--m", type=int, help="smoothness order, integer >= 2 (default 2)")
    g.add_argument("--R", type=_radius,
                   help='Sobolev radius, or "boundary" for the truth\'s own functional')
    g.add_argument("--S-override", dest="S_override", type=float,
                   help="mass used by the estimator instead of the model's")
    g.add_argument("--plug-in-S", dest="plug_in_S", action="store_const", const=True,
                   help="estimate the mass from the data (exploratory)")
    g.add_argument("--n", type=int, help="number of observed periods")
    g.add_argument("--n-list", dest="n_list", type=_n_list,
                   help="comma-separated ascending sample sizes for sweep")
    g.add_argument("--reps", type=int, help="Monte Carlo replications (default 2000)")
    g.add_argument("--seed", type=int,
                   help=f"master seed (default ${SEED_ENV}, else 0)")
    g.add_argument("--mode", choices=["exact", "mc"], help="sweep mode (default exact)")
    g.add_argument("--workers", type=int, help="parallel worker processes (default 1)")
    g.add_argument("--pooled", action="store_const", const=True,
                   help="Monte Carlo fast path: sample each replication's pooled events in one stream")
    g.add_argument("--L-max", dest="L_max", type=int,
                   help="highest empirical coefficient to write (default: cutoff)")
    g.add_argument("--grid-size", dest="grid_size", type=int,
                   help="nonnegativity grid size (default 4097)")
    g.add_argument("--observations", help="observation CSV (estimate)")
    g.add_argument("--out-dir", dest="out_dir", help="output directory (default .)")
    g.add_argument("--prefix", help="output file name prefix")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="poisson-pinsker",
        description="Simulate periodic Poisson processes and compare empirical and "
                    "Pinsker-shrinkage estimators of the mean function.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("simulate", "sample n periods; write observation CSV + sidecar"),
        ("estimate", "empirical and shrinkage coefficients from an observation file"),
        ("risk", "Monte Carlo MISE report at one n"),
        ("sweep", "normalized second-order excess over a list of n"),
        ("check-membership", "check the model against the smoothness class"),
    ]:
        _add_common(sub.add_parser(name, help=help_, description=help_))
    return parser


def resolve_config(args):
    cfg = dict(DEFAULTS)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    else:
        cfg["seed"] = 0
    if args.config is not None:
        try:
            with open(args.config) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        _validate(from_file)
        cfg.update(from_file)
    flags = {k: v for k, v in vars(args).items()
             if k not in ("config", "command") and v is not None}
    cfg.update(flags)
    _validate(cfg)
    return cfg


def _validate(cfg):
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "config"
        raise ConfigError(f"{where}: {exc.message}") from None


def _model(cfg):
    spec = cfg["model"]
    try:
        if isinstance(spec, dict):
            if "builtin" in spec:
                kw = {k: spec[k] for k in ("S", "tau") if k in spec}
                return BUILTIN_MODELS[spec["builtin"]](**kw)
            return model_from_dict(spec)
        if spec in BUILTIN_MODELS:
            return BUILTIN_MODELS[spec]()
        return load_model(spec)
    except (OSError, json.JSONDecodeError, ModelError) as exc:
        raise ConfigError(f"model: {exc}") from None


def _require(cfg, key, check, message):
    if key not in cfg:
        raise ConfigError(f"{key} is required")
    if not check(cfg[key]):
        raise ConfigError(message)


def _out(cfg, name):
    d = Path(cfg["out_dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d / f"{cfg['prefix']}{name}"


def _provenance(cfg, command):
    return {
        "command": command,
        "config": cfg,
        "versions": {"artifact": _version(), "numpy": np.__version__,
                     "python": sys.version.split()[0]},
        "backend": _kernels.BACKEND,
    }


def _estimator_mass(cfg, model, obs=None):
    if cfg.get("plug_in_S") and obs is not None:
        return plug_in_mass(obs)
    if "S_override" in cfg:
        return float(cfg["S_override"])
    return model.S


def _check_m(cfg):
    _require(cfg, "m", lambda m: m >= 2, "m must be >= 2")


def cmd_simulate(cfg):
    _require(cfg, "n", lambda n: n >= 1, "n must be ≥ 1")
    model = _model(cfg)
    obs = sample_observations(model, cfg["n"], cfg["seed"], workers=cfg["workers"])
    path = write_observations(obs, _out(cfg, "observations.csv"),
                              extra={"provenance": _provenance(cfg, "simulate"),
                                     "model": model.to_dict()})
    return [path]


def cmd_estimate(cfg):
    _check_m(cfg)
    if "observations" not in cfg:
        raise ConfigError("observations is required")
    model = _model(cfg)
    try:
        obs = read_observations(cfg["observations"])
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"observations: {exc}") from None
    if abs(obs.tau - model.tau) > 1e-12 * model.tau:
        raise ConfigError(f"tau mismatch: model {model.tau} vs observations {obs.tau}")
    R = resolve_radius(model, cfg["m"], cfg["R"])
    S = _estimator_mass(cfg, model, obs)
    config = EstimatorConfig.build(cfg["m"], R, S, model.tau, obs.n)
    L_max = cfg.get("L_max", config.last_index)
    emp = empirical_coeffs(obs, max(L_max, config.last_index))
    pin = pinsker_estimate(emp, config)
    if L_max < config.last_index:
        emp = type(emp)(emp.coeffs[: L_max + 1], emp.tau, emp.n, emp.kind)
    prov = _provenance(cfg, "estimate")
    extra = {"provenance": prov, **config.to_dict()}
    return [write_estimate(emp, _out(cfg, "empirical.csv"), extra=extra),
            write_estimate(pin, _out(cfg, "pinsker.csv"), extra=extra)]


def cmd_risk(cfg):
    _check_m(cfg)
    _require(cfg, "n", lambda n: n >= 1, "n must be ≥ 1")
    _require(cfg, "reps", lambda r: r >= 2, "reps must be ≥ 2")
    model = _model(cfg)
    R = resolve_radius(model, cfg["m"], cfg["R"])
    config = EstimatorConfig.build(cfg["m"], R, _estimator_mass(cfg, model), model.tau, cfg["n"])
    report = mise_monte_carlo(model, cfg["n"], cfg["reps"], cfg["seed"], config,
                              workers=cfg["workers"], pooled=cfg["pooled"])
    d = report.to_dict()
    csv_path = _out(cfg, "risk.csv")
    with open(csv_path, "w") as fh:
        keys = list(d)
        fh.write(",".join(keys) + "\n")
        fh.write(",".join(_fmt(d[k]) for k in keys) + "\n")
    json_path = write_json({"report": d, "model": model.to_dict(),
                            "estimator": config.to_dict(),
                            "provenance": _provenance(cfg, "risk")}, _out(cfg, "risk.json"))
    return [csv_path, json_path]


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return "" if v is None else str(v)


def cmd_sweep(cfg):
    _check_m(cfg)
    if "n_list" not in cfg:
        if "n" not in cfg:
            raise ConfigError("n_list is required")
        cfg["n_list"] = [cfg["n"]]
    if any(n < 1 for n in cfg["n_list"]):
        raise ConfigError("n must be ≥ 1")
    if cfg["n_list"] != sorted(cfg["n_list"]):
        raise ConfigError("n_list must be ascending")
    model = _model(cfg)
    S = cfg.get("S_override")
    rows = convergence_sweep(model, cfg["m"], cfg["R"], cfg["n_list"], mode=cfg["mode"],
                             seed=cfg["seed"], reps=cfg["reps"], workers=cfg["workers"],
                             pooled=cfg["pooled"], S=S)
    csv_path = write_sweep_csv(rows, _out(cfg, "sweep.csv"))
    json_path = write_json({"rows": [r.__dict__ for r in rows], "model": model.to_dict(),
                            "R": resolve_radius(model, cfg["m"], cfg["R"]),
                            "provenance": _provenance(cfg, "sweep")}, _out(cfg, "sweep.json"))
    return [csv_path, json_path]


def cmd_check_membership(cfg):
    _check_m(cfg)
    model = _model(cfg)
    R = resolve_radius(model, cfg["m"], cfg["R"])
    S = cfg.get("S_override", model.S)
    try:
        spec = EllipsoidSpec(cfg["m"], R, S, model.tau)
    except ModelError as exc:
        raise ConfigError(str(exc)) from None
    verdict = validate_model(model, spec, cfg["grid_size"])
    out = {"verdict": verdict.to_dict(), "model": model.to_dict(),
           "spec": {"m": spec.m, "R": spec.R, "S": spec.S, "tau": spec.tau},
           "provenance": _provenance(cfg, "check-membership")}
    path = write_json(out, _out(cfg, "membership.json"))
    print(json.dumps(verdict.to_dict(), indent=2))
    return [path]


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "risk": cmd_risk,
    "sweep": cmd_sweep,
    "check-membership": cmd_check_membership,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        paths = COMMANDS[args.command](cfg)
        paths.append(write_json({**cfg, "command": args.command},
                                _out(cfg, "config.resolved.json")))
    except (ConfigError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError, OverflowError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    if args.command != "check-membership":
        # check-membership keeps stdout as a single JSON document
        for p in paths:
            print(p)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
