"""Execute a run configuration and assemble the JSON/CSV report.

Suites draw their random inputs from generators seeded by ``(seed, suite)``,
so the report does not depend on how suites are scheduled across threads.
"""

import copy
import csv
import datetime as _dt
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import bvp
from . import identities as idn
from . import potentials as pot
from .errors import ConfigError, LayerCalcError, ShapeError
from .instances import build_instance, list_builtin_instances, resolve_descriptor, verify_conditions
from .hilbert import Functional
from .problem import Side
from .serialization import decode_complex

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2
SUITES = ("conditions", "identities", "bounds", "equivalence")
MODES = ("verify", "solve", "spectrum")
DEFAULT_TOLERANCES = {
    "coercivity": 1e-6,
    "locality": 1e-12,
    "green": idn.TOL_GREEN,
    "jump": idn.TOL_JUMP,
    "adjoint": idn.TOL_ADJOINT,
    "bounds": idn.TOL_BOUNDS,
    "well_defined": idn.TOL_WELL_DEFINED,
    "invert": bvp.DEFAULT_TOL_INVERT,
    "layer": bvp.TOL_LAYER,
    "slack": 0.1,
}
DEFAULT_OUTPUT = {"dir": "layercalc-report", "json": "report.json", "csv": "report.csv"}


def load_schema(name):
    """One of the shipped schemas: ``"config"`` or ``"report"``."""
    text = resources.files("layercalc").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _validator(name):
    schema = load_schema(name)
    cls = jsonschema.validators.validator_for(schema)
    cls.check_schema(schema)
    return cls(schema)


def validate_report(report):
    """Raise :class:`jsonschema.ValidationError` unless ``report`` matches the schema."""
    _validator("report").validate(report)


# -- configuration ------------------------------------------------------------

def parse_tol_overrides(items):
    """``["name=value", ...]`` to a dict; unknown names and non-positive values are errors."""
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        name = name.strip()
        if not sep or not name:
            raise ConfigError(f"--tol expects name=value, got {item!r}")
        if name not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {name!r}; known: {sorted(DEFAULT_TOLERANCES)}")
        try:
            val = float(value)
        except ValueError:
            raise ConfigError(f"tolerance {name} is not a number: {value!r}") from None
        if not (math.isfinite(val) and val > 0):
            raise ConfigError(f"tolerance {name} must be positive and finite, got {value}")
        out[name] = val
    return out


def load_config(path):
    """Read and schema-validate a config file; return the parsed mapping."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    try:
        _validator("config").validate(cfg)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config does not match the schema at {where}: {exc.message}") from None


def decode_vector(obj, dim=None):
    """A data vector: plain reals, or a list of ``[re, im]`` pairs."""
    arr = np.asarray(obj, dtype=float)
    if arr.ndim == 1:
        vec = arr.astype(complex)
    elif arr.ndim == 2 and arr.shape[1] == 2:
        vec = np.asarray(decode_complex(obj), dtype=complex).reshape(-1)
    else:
        raise ConfigError(f"data must be a vector of reals or [re, im] pairs, got shape {arr.shape}")
    if dim is not None and vec.shape != (dim,):
        raise ConfigError(f"data has length {vec.shape[0]}, expected {dim}")
    return vec


def _threads():
    raw = os.environ.get("LAYERCALC_THREADS", "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"LAYERCALC_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"LAYERCALC_THREADS must be a positive integer, got {raw!r}")
    return n


# -- JSON hygiene ---------------------------------------------------------------

def _clean(obj):
    """Make ``obj`` strict-JSON: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def _error_record(exc):
    rec = {"type": type(exc).__name__, "message": str(exc)}
    for attr in ("sigma_min", "sigma_max", "threshold", "defect", "residual", "lam"):
        if hasattr(exc, attr):
            rec[attr] = getattr(exc, attr)
    if hasattr(exc, "kernel"):
        rec["kernel_dim"] = int(exc.kernel.shape[1])
    return rec


# -- suites ---------------------------------------------------------------------

def _suite_rng(seed, name):
    return np.random.default_rng([seed, SUITES.index(name)])


def run_conditions(p, tol, samples, seed):
    rep = verify_conditions(p, lambda_tol=tol["coercivity"], locality_tol=tol["locality"])
    rows = [{"check": name, "input": None, "value": value if isinstance(value, float) else None,
             "scale": None, "tol": None, "applicable": True, "passed": ok}
            for name, ok, value in rep.conditions()]
    return {"passed": rep.passed, **rep.to_dict()}, rows


def run_identities(p, tol, samples, seed):
    rng = _suite_rng(seed, "identities")
    q = p.adjoint()
    reports = []
    for i in range(samples):
        f = p.random_dirichlet(rng)
        g = p.random_neumann(rng)
        phi = p.random_dirichlet(rng, 1)
        gamma = p.random_neumann(rng, 1)
        batch = []
        for side in Side:
            batch += idn.check_green(p, side, pot.single_layer_on(p, side, g), tol=tol["green"])
            batch += idn.check_green(p, side, pot.double_layer(p, side, f), tol=tol["green"])
        batch += idn.check_jump(p, f, g, tol=tol["jump"])
        for side in Side:
            batch += idn.check_adjoint(p, f, phi, g, gamma, side=side, tol=tol["adjoint"], adjoint=q)
        batch += idn.check_well_defined(p, f, rng, tol=tol["well_defined"])
        reports += [(i, r) for r in batch]
    return _residual_suite(reports)


def run_bounds(p, tol, samples, seed):
    rng = _suite_rng(seed, "bounds")
    return _residual_suite([(None, r) for r in idn.check_bounds(p, samples, rng, tol=tol["bounds"])])


def _residual_suite(pairs):
    checks, rows = [], []
    for i, r in pairs:
        d = r.to_dict()
        d["input"] = i
        checks.append(d)
        rows.append({"check": r.name, "input": i, "value": r.residual, "scale": r.scale, "tol": r.tol,
                     "applicable": r.applicable, "passed": r.passed})
    return {"passed": all(c["passed"] for c in checks), "count": len(checks), "checks": checks}, rows


def run_equivalence(p, tol, samples, seed):
    rng = _suite_rng(seed, "equivalence")
    reps = bvp.verify_equivalence(p, samples=samples, rng=rng, tol_invert=tol["invert"], slack=tol["slack"])
    rows = [{"check": r.direction, "input": None, "value": None, "scale": None, "tol": tol["slack"],
             "applicable": r.applicable, "passed": r.consistent} for r in reps]
    return {"passed": all(r.consistent for r in reps), "reports": [r.to_dict() for r in reps]}, rows


SUITE_RUNNERS = {
    "conditions": run_conditions,
    "identities": run_identities,
    "bounds": run_bounds,
    "equivalence": run_equivalence,
}


# -- solver requests and spectrum --------------------------------------------------

def run_solve(p, request, tol):
    kind = request["kind"]
    method = request.get("method", "layers")
    side = Side.parse(request.get("side", "omega"))
    dim = p.D2.dim if kind == "dirichlet" else p.D1.dim
    data = decode_vector(request["data"], dim)
    scale = p.D2.norm(data) if kind == "dirichlet" else Functional(p.D1, data).norm()
    out = {"kind": kind, "method": method, "side": side.value}
    if "label" in request:
        out["label"] = request["label"]
    try:
        if method == "layers":
            sol = bvp.solve_via_layers(p, side, kind, data, tol_invert=tol["invert"])
            result = sol.to_dict()
            ok = sol.residual <= tol["layer"] * scale or not np.any(data)
        elif kind == "dirichlet":
            sol = bvp.solve_dirichlet_direct(p, side, data)
            result = sol.to_dict()
            ok = sol.trace_residual <= bvp.TOL_TRACE * scale and sol.interior_residual <= 1e-10 * scale
        else:
            sol = bvp.solve_neumann_direct(p, side, data, tol=tol["layer"])
            result = sol.to_dict()
            ok = True
        result["solution"] = sol.u.coeffs
        out.update(status="ok", passed=bool(ok), result=result)
    except LayerCalcError as exc:
        out.update(status="error", passed=False, error=_error_record(exc))
    return out


def run_spectrum(p, tol):
    ops = []
    for kind in ("TrS", "MD"):
        for side in Side:
            try:
                op = bvp.boundary_operator(p, kind, side)
                ops.append({**op.to_dict(), "rank": op.rank(), "invertible":
                            bool(op.sigma_max > 0 and op.sigma_min >= tol["invert"] * op.sigma_max)})
            except LayerCalcError as exc:
                ops.append({"kind": kind, "side": side.value, "error": _error_record(exc)})
    return {"passed": all("error" not in o for o in ops), "operators": ops}


# -- top level ------------------------------------------------------------------

def _instance_summary(p, desc):
    rep = p.infsup
    return {
        "name": p.name,
        "descriptor": desc,
        "dims": {"H1": p.H1.dim, "H2": p.H2.dim, "D1": p.D1.dim, "D2": p.D2.dim,
                 "H2_omega": p.restricted_space(2, Side.OMEGA).dim,
                 "H2_complement": p.restricted_space(2, Side.COMPLEMENT).dim},
        "inf_sup": rep.to_dict(),
    }


def execute(cfg, mode="verify", tol_overrides=None, timestamp=True):
    """Run a validated config; return ``(report, csv_rows, exit_code)``."""
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    cfg = copy.deepcopy(cfg)
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(cfg.get("tolerances", {}))
    tol.update(tol_overrides or {})
    for k, v in tol.items():
        if not (math.isfinite(v) and v > 0):
            raise ConfigError(f"tolerance {k} must be positive, got {v}")
    suites = list(cfg.get("suites", [])) if mode == "verify" else []
    solves = list(cfg.get("solve", [])) if mode in ("verify", "solve") else []
    if mode == "verify" and not suites and not solves:
        raise ConfigError("config requests no suite and no solver")
    if mode == "solve" and not solves:
        raise ConfigError("'solve' needs at least one entry under 'solve' in the config")
    samples = int(cfg.get("samples", 10))
    seed = int(cfg.get("seed", 0))
    desc = resolve_descriptor(cfg["instance"])
    threads = _threads()

    report = {"schema_version": SCHEMA_VERSION, "tool": {"name": "layercalc", "version": __version__},
              "mode": mode, "config": cfg, "tolerances": tol}
    if timestamp:
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    try:
        p = build_instance(desc)
    except ConfigError:
        raise
    except LayerCalcError as exc:
        report.update(instance={"descriptor": desc, "error": _error_record(exc)}, suites={}, solves=[],
                      passed=False, exit_code=EXIT_FAILED)
        return _clean(report), [], EXIT_FAILED
    report["instance"] = _instance_summary(p, desc)

    def one(name):
        try:
            return SUITE_RUNNERS[name](p, tol, samples, seed)
        except LayerCalcError as exc:
            return {"passed": False, "error": _error_record(exc)}, []

    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(one, suites))
    report["suites"] = {}
    rows = []
    for name, (body, suite_rows) in zip(suites, results):
        report["suites"][name] = body
        rows += [{"suite": name, **r} for r in suite_rows]
    report["solves"] = [run_solve(p, req, tol) for req in solves]
    for i, s in enumerate(report["solves"]):
        rows.append({"suite": "solve", "check": f"{s['method']}_{s['kind']}_{s['side']}", "input": i,
                     "value": s.get("result", {}).get("residual", s.get("result", {}).get("trace_residual")),
                     "scale": None, "tol": tol["layer"], "applicable": True, "passed": s["passed"]})
    if mode == "spectrum":
        report["spectrum"] = run_spectrum(p, tol)
    verdicts = [b["passed"] for b in report["suites"].values()] + [s["passed"] for s in report["solves"]]
    if mode == "spectrum":
        verdicts.append(report["spectrum"]["passed"])
    passed = all(verdicts)
    code = EXIT_OK if passed else EXIT_FAILED
    report.update(passed=passed, exit_code=code)
    return _clean(report), rows, code


CSV_FIELDS = ("suite", "check", "input", "value", "scale", "tol", "applicable", "passed")


def render_json(report):
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def render_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else (repr(r[k]) if isinstance(r[k], float) else r[k]))
                    for k in CSV_FIELDS})
    return buf.getvalue()


def run(config_path, mode="verify", out=None, timestamp=True, tol_overrides=None, stderr=None):
    """Run a config file end to end and write ``report.json`` and ``report.csv``.

    Returns the exit code: 0 when every requested check passed, 2 when some
    check failed and 1 for configuration errors (reported on ``stderr``).
    """
    stderr = sys.stderr if stderr is None else stderr
    try:
        cfg = load_config(config_path)
        overrides = parse_tol_overrides(tol_overrides) if isinstance(tol_overrides, (list, tuple)) \
            else (tol_overrides or {})
        report, rows, code = execute(cfg, mode=mode, tol_overrides=overrides, timestamp=timestamp)
        validate_report(report)
        output = {**DEFAULT_OUTPUT, **cfg.get("output", {})}
        outdir = Path(out) if out is not None else Path(output["dir"])
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / output["json"]).write_text(render_json(report))
        (outdir / output["csv"]).write_text(render_csv(rows))
    except (ConfigError, ShapeError) as exc:
        print(f"layercalc: configuration error: {exc}", file=stderr)
        return EXIT_CONFIG
    return code


__all__ = ["run", "execute", "list_builtin_instances", "load_schema", "validate_report", "validate_config"]
