"""
Scenario runner: ``switchdiff <config> [--workers N] [--out DIR] [--seed S]``.

A config is a JSON object describing one command. Common keys:

==============  ============================================================
key             meaning
==============  ============================================================
command         criterion | simulate | hit | sweep | drift | invariant
model           model description, see ``switchdiff.model.build_model``
dt              Euler step (default 1e-3)
seed            root seed (default 0)
record_stride   keep every k-th grid point in path CSVs (default 1)
out             output directory (default ``switchdiff_out``)
==============  ============================================================

Command keys (``*`` = required):

- criterion: ``eps``
- simulate: ``x0*``, ``z0*``, ``horizon*``, ``n_paths`` (default 1)
- hit: ``x0*``, ``z0*``, ``M1*``, ``n_paths*``, ``max_time``, ``target``
  (``embedded`` or ``m1``), ``horizon`` (censoring time when the criterion
  fails and ``max_time`` is absent)
- sweep: ``starts*`` (list of ``[x0, z0]`` or ``{"x0", "z0", "seed"}``),
  ``M1*``, ``n_paths*``, ``max_time``
- drift: ``x0*``, ``z0*``, ``n_paths*``, ``M1``, ``eps``, ``horizon``
  (censoring time, default 10)
- invariant: ``x0*``, ``z0*``, ``burn_in*``, ``horizon*``, ``bins*``,
  ``box`` or ``M1``, ``radial``, ``by_regime``

``x0`` may be a number when ``dim`` is 1.

Exit codes: 0 ok, 2 config error, 3 criterion refusal, 4 estimation
failure, 5 numerical blowup.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
from dataclasses import dataclass, field
from importlib import metadata

import numpy as np

from .embedded import extract_switch_times
from .errors import (
    ConfigError,
    CriterionUnsatisfiedError,
    EstimationFailureError,
    InsufficientSampleError,
    NumericalBlowupError,
    ParameterRangeError,
    ReliabilityError,
)
from .estimate import (
    estimate_hitting_moment,
    estimate_invariant_histogram,
    lyapunov_drift_check,
    verify_theorem_bound,
)
from .model import build_model, check_recurrence_criterion
from .simulate import (
    SimParams,
    simulate_path,
    write_csv,
    write_events_csv,
    write_path_csv,
)

__all__ = ["ScenarioConfig", "parse_config", "run_scenario", "main", "EXIT"]

EXIT = {
    "ok": 0,
    "parse": 2,
    "criterion": 3,
    "estimation": 4,
    "blowup": 5,
}

COMMANDS = ("criterion", "simulate", "hit", "sweep", "drift", "invariant")

_COMMON = {"command", "model", "dt", "seed", "record_stride", "out"}
_REQUIRED = {
    "criterion": set(),
    "simulate": {"x0", "z0", "horizon"},
    "hit": {"x0", "z0", "M1", "n_paths"},
    "sweep": {"starts", "M1", "n_paths"},
    "drift": {"x0", "z0", "n_paths"},
    "invariant": {"x0", "z0", "burn_in", "horizon", "bins"},
}
_OPTIONAL = {
    "criterion": {"eps"},
    "simulate": {"n_paths"},
    "hit": {"max_time", "target", "horizon"},
    "sweep": {"max_time"},
    "drift": {"M1", "eps", "horizon"},
    "invariant": {"box", "M1", "radial", "by_regime"},
}
_DEFAULTS = {
    "dt": 1e-3,
    "seed": 0,
    "record_stride": 1,
    "out": "switchdiff_out",
    "n_paths": 1,  # simulate only
    "target": "embedded",
    "horizon": 10.0,  # hit/drift censoring
    "radial": None,
    "by_regime": False,
}


@dataclass
class ScenarioConfig:
    """A validated scenario.

    ``params`` holds the command-specific keys after defaults;
    ``defaults_applied`` lists the keys that were filled in (it is not part
    of equality, so a re-parsed manifest compares equal).
    """

    command: str
    model: dict
    dt: float
    seed: int
    record_stride: int
    out: str
    params: dict
    defaults_applied: list = field(default_factory=list, compare=False)

    def sim_params(self, horizon=None):
        h = self.params.get("horizon", 10.0) if horizon is None else horizon
        return SimParams(self.dt, max(h, self.dt), self.seed, self.record_stride)

    def to_dict(self):
        return {
            "command": self.command,
            "model": self.model,
            "dt": self.dt,
            "seed": self.seed,
            "record_stride": self.record_stride,
            "out": self.out,
            **self.params,
        }


def _num(doc, key, kind=float, lo=None, lo_open=True, allow_none=False):
    v = doc[key]
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", key)
    if kind is int:
        if int(v) != v:
            raise ConfigError(f"expected an integer, got {v!r}", key)
        v = int(v)
    else:
        v = float(v)
        if not math.isfinite(v):
            raise ConfigError(f"must be finite, got {v!r}", key)
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(f"must be {'>' if lo_open else '>='} {lo}, got {v!r}", key)
    return v


def _vec(v, dim, key):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v]
    if not isinstance(v, list) or len(v) != dim:
        raise ConfigError(f"expected a list of {dim} numbers, got {v!r}", key)
    out = []
    for i, c in enumerate(v):
        if isinstance(c, bool) or not isinstance(c, (int, float)) or not math.isfinite(c):
            raise ConfigError(f"expected a finite number, got {c!r}", f"{key}[{i}]")
        out.append(float(c))
    return out


def _regime(v, key):
    if v not in (0, 1) or isinstance(v, bool):
        raise ConfigError(f"must be 0 or 1, got {v!r}", key)
    return int(v)


def _starts(v, dim):
    if not isinstance(v, list) or not v:
        raise ConfigError("expected a non-empty list", "starts")
    out = []
    for i, s in enumerate(v):
        key = f"starts[{i}]"
        if isinstance(s, dict):
            extra = set(s) - {"x0", "z0", "seed"}
            if extra:
                raise ConfigError("unknown key", f"{key}.{sorted(extra)[0]}")
            if "x0" not in s or "z0" not in s:
                raise ConfigError("needs x0 and z0", key)
            seed = s.get("seed")
            if seed is not None:
                seed = _num(s, "seed", int, 0, lo_open=False)
            out.append({"x0": _vec(s["x0"], dim, f"{key}.x0"),
                         "z0": _regime(s["z0"], f"{key}.z0"), "seed": seed})
        elif isinstance(s, list) and len(s) in (2, 3):
            seed = None if len(s) == 2 else s[2]
            out.append({"x0": _vec(s[0], dim, f"{key}.x0"),
                         "z0": _regime(s[1], f"{key}.z0"), "seed": seed})
        else:
            raise ConfigError("expected [x0, z0] or {x0, z0, seed}", key)
    return out


def parse_config(text):
    """Parse and validate a scenario document (JSON text or a dict).

    Raises
    ------
    ConfigError
        Malformed JSON, unknown or missing key, bad model family or an
        out-of-range value. ``field`` names the offending entry (model
        fields are prefixed with ``model.``).
    """
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    else:
        doc = dict(text)
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    for key in ("command", "model"):
        if key not in doc:
            raise ConfigError("missing required field", key)
    cmd = doc["command"]
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}; expected one of {list(COMMANDS)}", "command")
    allowed = _COMMON | _REQUIRED[cmd] | _OPTIONAL[cmd]
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"unknown key for command {cmd!r}", key)
    for key in _REQUIRED[cmd]:
        if key not in doc:
            raise ConfigError("missing required field", key)

    try:
        model = build_model(doc["model"])
    except ParameterRangeError as exc:
        name = f"model.{exc.field}" if exc.field else "model"
        raise ConfigError(exc.message, name) from None

    applied = []
    doc = dict(doc)
    defaults = {k: _DEFAULTS[k] for k in ("dt", "seed", "record_stride", "out")}
    if cmd == "simulate":
        defaults["n_paths"] = _DEFAULTS["n_paths"]
    if cmd == "hit":
        defaults.update(target="embedded", horizon=_DEFAULTS["horizon"])
    if cmd == "drift":
        defaults["horizon"] = _DEFAULTS["horizon"]
    if cmd == "invariant":
        defaults.update(radial=model.dim > 1, by_regime=False)
    for key, value in defaults.items():
        if key not in doc:
            doc[key] = value
            applied.append(key)

    dt = _num(doc, "dt", float, 0)
    seed = _num(doc, "seed", int, 0, lo_open=False)
    if seed >= 2**64:
        raise ConfigError("must be below 2**64", "seed")
    stride = _num(doc, "record_stride", int, 1, lo_open=False)
    if not isinstance(doc["out"], str) or not doc["out"]:
        raise ConfigError("expected a directory path", "out")

    p = {}
    dim = model.dim
    if "x0" in doc:
        p["x0"] = _vec(doc["x0"], dim, "x0")
    if "z0" in doc:
        p["z0"] = _regime(doc["z0"], "z0")
    if "starts" in doc:
        p["starts"] = _starts(doc["starts"], dim)
    for key in ("M1", "horizon", "max_time", "box"):
        if key in doc:
            p[key] = _num(doc, key, float, 0)
    if "burn_in" in doc:
        p["burn_in"] = _num(doc, "burn_in", float, 0, lo_open=False)
    if "eps" in doc:
        p["eps"] = _num(doc, "eps", float, 0, allow_none=True)
    if "n_paths" in doc:
        p["n_paths"] = _num(doc, "n_paths", int, 1, lo_open=False)
    if "bins" in doc:
        p["bins"] = _num(doc, "bins", int, 1, lo_open=False)
    for key in ("radial", "by_regime"):
        if key in doc:
            if not isinstance(doc[key], bool):
                raise ConfigError(f"expected true or false, got {doc[key]!r}", key)
            p[key] = doc[key]
    if "target" in doc:
        if doc["target"] not in ("embedded", "m1"):
            raise ConfigError(f"expected 'embedded' or 'm1', got {doc['target']!r}", "target")
        p["target"] = doc["target"]

    if cmd in ("hit", "sweep", "drift") and "n_paths" in p:
        floor = 1000 if cmd == "drift" else 100
        if p["n_paths"] < floor:
            raise ConfigError(f"must be >= {floor}, got {p['n_paths']}", "n_paths")
    if cmd == "invariant":
        if not p["horizon"] > p["burn_in"]:
            raise ConfigError("horizon must exceed burn_in", "horizon")
        if "box" not in p and "M1" not in p:
            raise ConfigError("give box or M1", "box")
    try:
        SimParams(dt, max(p.get("horizon", 10.0), dt), seed, stride)
    except ParameterRangeError as exc:
        raise ConfigError(exc.message, exc.field) from None
    if "horizon" in p and dt > p["horizon"]:
        raise ConfigError(f"dt={dt!r} exceeds horizon={p['horizon']!r}", "dt")

    return ScenarioConfig(cmd, model.to_dict(), dt, seed, stride, doc["out"], p, applied)


# ---------------------------------------------------------------------------
# running


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _write_json(path, doc):
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _versions():
    out = {"python": platform.python_version(), "numpy": np.__version__}
    for pkg in ("switchdiff", "numba", "scipy"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


_EST_HEADER = ["x0", "z0", "seed", "n", "n_censored", "mean", "stderr", "ci_lo", "ci_hi",
               "median", "iqr", "theory_bound", "satisfied"]


def _est_row(x0, z0, seed, est, bound, satisfied):
    return [" ".join(repr(float(c)) for c in x0), z0, seed, est.n_samples, est.n_censored,
            est.mean, est.stderr, est.ci95_lo, est.ci95_hi, est.median, est.iqr, bound,
            satisfied]


def _run_criterion(cfg, model, out):
    rep = check_recurrence_criterion(model, eps=cfg.params.get("eps"))
    d = rep.to_dict()
    keys = ["recurrent", "reason", "A", "B", "eps", "q", "c", "C_z0", "C_z1",
            "eps_is_default", "balance_residual"]
    write_csv(os.path.join(out, "results.csv"), ["quantity", "value"],
              ([k, d[k] if not isinstance(d[k], str) else d[k]] for k in keys))
    return {"criterion": d}


def _run_simulate(cfg, model, out):
    p = cfg.params
    sp = cfg.sim_params()
    rows = []
    for i in range(p["n_paths"]):
        rec = simulate_path(model, p["x0"], p["z0"], sp, path_index=i)
        write_path_csv(os.path.join(out, f"path_{i}.csv"), rec)
        events = extract_switch_times(rec)
        write_events_csv(os.path.join(out, f"events_{i}.csv"), events, model.dim)
        n_sw = sum(1 for e in events if e.time > 0.0)
        rows.append([i, n_sw, rec.times[-1], *rec.xs[-1], int(rec.zs[-1]),
                     rec.min_abs_x_running[-1]])
    header = (["path_index", "n_switches", "t_end"]
              + [f"x_{j + 1}" for j in range(model.dim)] + ["z_end", "min_abs_x"])
    write_csv(os.path.join(out, "results.csv"), header, rows)
    return {}


def _run_hit(cfg, model, out, workers):
    p = cfg.params
    rep = check_recurrence_criterion(model)
    max_time = p.get("max_time")
    if max_time is None and not rep.recurrent:
        max_time = p["horizon"]
    est = estimate_hitting_moment(
        model, p["x0"], p["z0"], p["M1"], p["n_paths"], cfg.sim_params(), max_time,
        target=p["target"], workers=workers,
    )
    bound = rep.theory_bound(np.asarray(p["x0"]), p["z0"]) if rep.recurrent else None
    sat = est.mean + 3 * est.stderr <= bound if bound is not None else None
    write_csv(os.path.join(out, "results.csv"), _EST_HEADER,
              [_est_row(p["x0"], p["z0"], cfg.seed, est, bound, sat)])
    return {"estimate": est.to_dict()}


def _run_sweep(cfg, model, out, workers):
    p = cfg.params
    starts = [(s["x0"], s["z0"], s["seed"]) for s in p["starts"]]
    rep = verify_theorem_bound(model, starts, p["M1"], p["n_paths"], cfg.sim_params(),
                               p.get("max_time"), workers=workers)
    rows = [
        _est_row(x0, z0, seed, e, b, s)
        for (x0, z0), seed, e, b, s in zip(rep.start_points, rep.seeds, rep.estimates,
                                           rep.theory_bound, rep.satisfied)
    ]
    write_csv(os.path.join(out, "results.csv"), _EST_HEADER, rows)
    return {"all_satisfied": rep.all_satisfied}


def _run_drift(cfg, model, out, workers):
    p = cfg.params
    rep = lyapunov_drift_check(model, p["x0"], p["z0"], p["n_paths"], cfg.sim_params(),
                               M1=p.get("M1"), eps=p.get("eps"), workers=workers)
    lhs, ts = rep.empirical_lhs, rep.switch_time
    header = ["x0", "z0", "n", "n_censored", "lhs_mean", "lhs_stderr", "theory_rhs",
              "satisfied", "switch_time_mean", "switch_time_stderr", "eps"]
    row = [" ".join(repr(float(c)) for c in p["x0"]), p["z0"], lhs.n_samples, lhs.n_censored,
           lhs.mean, lhs.stderr, rep.theory_rhs, rep.satisfied, ts.mean, ts.stderr, rep.eps]
    write_csv(os.path.join(out, "results.csv"), header, [row])
    return {}


def _run_invariant(cfg, model, out):
    p = cfg.params
    h = estimate_invariant_histogram(
        model, p["x0"], p["z0"], p["burn_in"], p["horizon"], p["bins"], cfg.sim_params(),
        M1=p.get("M1"), box=p.get("box"), radial=p["radial"], by_regime=p["by_regime"],
    )
    write_csv(os.path.join(out, "histogram.csv"), ["regime", "bin", "bin_lo", "bin_hi", "mass"],
              h.rows())
    out_mass = float(np.sum(h.out_of_range))
    write_csv(os.path.join(out, "results.csv"),
              ["n_steps", "bins", "box_lo", "box_hi", "in_range_mass", "out_of_range_mass"],
              [[h.n_samples, p["bins"], h.bin_edges[0], h.bin_edges[-1],
                float(h.masses.sum()), out_mass]])
    return {}


def run_scenario(cfg: ScenarioConfig, out=None, workers=1, stderr=None):
    """Run one scenario, writing artifacts under ``out`` (default ``cfg.out``).

    Returns the exit status. Errors are reported on ``stderr`` and mapped
    to the documented codes; ``manifest.json`` is written in every case
    past parsing, with ``status`` and ``error`` fields.
    """
    stderr = stderr or sys.stderr
    out = out or cfg.out
    os.makedirs(out, exist_ok=True)
    model = build_model(cfg.model)
    manifest = {
        "config": cfg.to_dict(),
        "defaults_applied": sorted(cfg.defaults_applied),
        "constants": check_recurrence_criterion(model, eps=cfg.params.get("eps")).to_dict(),
        "versions": _versions(),
    }
    status, error = EXIT["ok"], None
    try:
        if cfg.command == "criterion":
            extra = _run_criterion(cfg, model, out)
        elif cfg.command == "simulate":
            extra = _run_simulate(cfg, model, out)
        elif cfg.command == "hit":
            extra = _run_hit(cfg, model, out, workers)
        elif cfg.command == "sweep":
            extra = _run_sweep(cfg, model, out, workers)
        elif cfg.command == "drift":
            extra = _run_drift(cfg, model, out, workers)
        else:
            extra = _run_invariant(cfg, model, out)
        manifest.update(extra)
    except CriterionUnsatisfiedError as exc:
        status, error = EXIT["criterion"], exc
    except (EstimationFailureError, ReliabilityError, InsufficientSampleError) as exc:
        status, error = EXIT["estimation"], exc
    except NumericalBlowupError as exc:
        status, error = EXIT["blowup"], exc
    except ParameterRangeError as exc:
        status, error = EXIT["parse"], exc
    manifest["status"] = status
    manifest["error"] = None if error is None else f"{type(error).__name__}: {error}"
    _write_json(os.path.join(out, "manifest.json"), manifest)
    if error is not None:
        print(f"switchdiff: {manifest['error']}", file=stderr)
    return status


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="switchdiff", description="Run a regime-switching diffusion scenario."
    )
    ap.add_argument("config", help="path to a JSON scenario file")
    ap.add_argument("--workers", type=int, default=1, help="worker threads (default 1)")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--seed", type=int, help="root seed (overrides the config)")
    args = ap.parse_args(argv)
    if args.workers < 1:
        ap.error("--workers must be >= 1")
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
        if args.seed is not None and isinstance(doc, dict):
            doc["seed"] = args.seed
        cfg = parse_config(doc)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"switchdiff: cannot read config: {exc}", file=sys.stderr)
        return EXIT["parse"]
    except ConfigError as exc:
        print(f"switchdiff: config error: {exc}", file=sys.stderr)
        return EXIT["parse"]
    return run_scenario(cfg, out=args.out, workers=args.workers)


if __name__ == "__main__":
    sys.exit(main())
