"""Command-line runner.

    hmftempo hmf      --config run.json [--out out.csv] [--format csv|json]
    hmftempo sweep    --config run.json [--jobs 4]
    hmftempo converge --config run.json
    hmftempo polaron  --config run.json
    hmftempo oracle   --config run.json

Exit codes: 0 success, 1 oracle deviation above tolerance, 2 configuration
error, 3 computation error (for sweeps: at least one row failed; the file is
still written with the failure in the ``error`` column).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import config as cfgmod
from .bath import QuadratureError, influence_kernel
from .config import SCHEMA_VERSION, ConfigError
from .ensembles import cross_coherence, expectation, negativity, tauz_projected, tauz_system, trace_distance
from .imtempo import ContractionError, compute_hmf
from .model import pointer_observables
from .oracle import DiscreteBathSpec, OracleCapError, exact_hmf_ed, exact_path_sum
from .polaron import DegenerateSteadyStateError, PolaronConvergenceError, polaron_rates, polaron_steady_state
from .tensor_core import BondDimensionError, SVDError

EXIT_OK, EXIT_DEVIATION, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3

#: failures that become exit code 3 / an entry in the error column
COMPUTE_ERRORS = (
    ContractionError, QuadratureError, BondDimensionError, SVDError,
    PolaronConvergenceError, DegenerateSteadyStateError, ArithmeticError,
    np.linalg.LinAlgError, ValueError,
)

DIAGNOSTIC_COLUMNS = ["max_bond", "truncation_error", "hermiticity_defect", "min_eigenvalue", "valid", "warnings"]
POLARON_COLUMNS = ["gamma_plus", "gamma_minus", "t0", "p_up", "p_down", "tauz_polaron",
                   "ks_residual", "validity_ratio", "valid", "warnings"]
ORACLE_COLUMNS = ["check", "quantity", "tempo", "reference", "abs_deviation", "rel_deviation",
                  "tolerance", "passed"]


def _is_single(cfg) -> bool:
    return "single_qubit" in cfg["model"]


def _rho_columns(d: int):
    return [f"rho_{i}{j}_{part}" for i in range(d) for j in range(d) for part in ("re", "im")]


def hmf_columns(cfg):
    if _is_single(cfg):
        return _rho_columns(2) + ["log_z_ratio", "tauz", "taux"] + DIAGNOSTIC_COLUMNS
    return _rho_columns(4) + ["log_z_ratio", "cross_coherence", "negativity"] + DIAGNOSTIC_COLUMNS


def _warnings_text(caught) -> str:
    return "; ".join(str(w.message) for w in caught)


def hmf_row(cfg) -> dict:
    model, J, beta, n_steps, policy, ct = cfgmod.build(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = compute_hmf(model, J, beta, n_steps, policy, counterterm=ct)
    row = {}
    for (i, j), v in np.ndenumerate(res.rho):
        row[f"rho_{i}{j}_re"] = float(v.real)
        row[f"rho_{i}{j}_im"] = float(v.imag)
    row["log_z_ratio"] = res.log_z_ratio
    if _is_single(cfg):
        tz, tx = pointer_observables(model)
        row["tauz"] = expectation(res.rho, tz)
        row["taux"] = expectation(res.rho, tx)
    else:
        row["cross_coherence"] = cross_coherence(res.rho)
        row["negativity"] = negativity(res.rho)
    row.update(max_bond=res.max_bond, truncation_error=res.truncation_error,
               hermiticity_defect=res.hermiticity_defect, min_eigenvalue=res.min_eigenvalue,
               valid=res.valid, warnings=_warnings_text(caught))
    return row


def polaron_row(cfg) -> dict:
    (_, m), = cfg["model"].items()
    _, J, beta, *_ = cfgmod.build(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rates = polaron_rates(m["omega_q"], m["theta"], J, beta)
        p_up, p_down = polaron_steady_state(rates, beta)
    return dict(gamma_plus=rates.gamma_plus, gamma_minus=rates.gamma_minus, t0=rates.t0,
                p_up=p_up, p_down=p_down, tauz_polaron=p_up - p_down,
                ks_residual=rates.kennard_stepanov_residual(beta),
                validity_ratio=rates.validity_ratio, valid=rates.valid,
                warnings=_warnings_text(caught))


def sweep_row(cfg) -> dict:
    row = hmf_row(cfg)
    if _is_single(cfg):
        (_, m), = cfg["model"].items()
        row["tauz_system"] = tauz_system(m["omega_q"], m["theta"], cfg["beta"])
        row["tauz_projected"] = tauz_projected(m["omega_q"], m["theta"], cfg["beta"])
        try:
            row["polaron_t0"] = polaron_row(cfg)["t0"] if m["theta"] > 0 else math.inf
        except COMPUTE_ERRORS as exc:
            row["polaron_t0"] = None
            row["warnings"] = "; ".join(filter(None, [row["warnings"], f"polaron: {exc}"]))
    return row


def _guarded(task):
    func, cfg, extra = task
    try:
        row = func(cfg)
        row["error"] = ""
    except COMPUTE_ERRORS as exc:
        row = {"error": f"{type(exc).__name__}: {exc}"}
    return {**extra, **row}


def run_rows(tasks, jobs: int):
    """Evaluate ``(func, cfg, extra)`` tasks; results come back in task order."""
    if jobs <= 1 or len(tasks) <= 1:
        return [_guarded(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(_guarded, tasks))


# -- output ---------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _json_value(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def render(command: str, cfg: dict, columns, rows, fmt: str) -> str:
    if fmt == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config": cfg,
            "columns": columns,
            "rows": [{c: _json_value(r.get(c)) for c in columns} for r in rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# schema_version: {SCHEMA_VERSION}\n")
    buf.write(f"# command: {command}\n")
    buf.write(f"# config: {json.dumps(cfg, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _emit(text: str, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# -- subcommands ----------------------------------------------------------------


def cmd_hmf(cfg, jobs):
    rows = run_rows([(hmf_row, cfg, {})], jobs)
    return hmf_columns(cfg) + ["error"], rows, EXIT_COMPUTE if rows[0]["error"] else EXIT_OK


def _sweep_values(cfg):
    if "sweep" not in cfg:
        raise ConfigError("sweep", "required for this subcommand")
    return cfg["sweep"]["parameter"], cfg["sweep"]["values"]


def cmd_sweep(cfg, jobs):
    name, values = _sweep_values(cfg)
    tasks = [(sweep_row, cfgmod.with_value(cfg, name, v), {name: v}) for v in values]
    rows = run_rows(tasks, jobs)
    cols = [name] + hmf_columns(cfg)
    if _is_single(cfg):
        cols += ["tauz_system", "tauz_projected", "polaron_t0"]
    failed = any(r["error"] for r in rows)
    return cols + ["error"], rows, EXIT_COMPUTE if failed else EXIT_OK


def cmd_polaron(cfg, jobs):
    if not _is_single(cfg):
        raise ConfigError("model", "polaron rates need a single_qubit model")
    if "sweep" in cfg:
        name, values = _sweep_values(cfg)
        tasks = [(polaron_row, cfgmod.with_value(cfg, name, v), {name: v}) for v in values]
        lead = [name]
    else:
        tasks, lead = [(polaron_row, cfg, {})], []
    rows = run_rows(tasks, jobs)
    failed = any(r["error"] for r in rows)
    return lead + POLARON_COLUMNS + ["error"], rows, EXIT_COMPUTE if failed else EXIT_OK


def _converge_value(cfg):
    row = hmf_row(cfg)
    return {"value": row[cfg["converge"]["observable"]], "max_bond": row["max_bond"],
            "truncation_error": row["truncation_error"], "warnings": row["warnings"]}


def cmd_converge(cfg, jobs):
    if "converge" not in cfg:
        cfg = cfgmod.validate({**cfg, "converge": {}})
    conv = cfg["converge"]
    tasks = []
    for n in conv["n_steps"]:
        for eps in conv["svd_rel_cutoffs"]:
            c = cfgmod.with_value(cfg, "n_steps", n)
            c = cfgmod.with_value(c, "svd_rel_cutoff", eps)
            tasks.append((_converge_value, c, {"n_steps": n, "svd_rel_cutoff": eps}))
    rows = run_rows(tasks, jobs)
    by_key = {(r["n_steps"], r["svd_rel_cutoff"]): r for r in rows}
    for r in rows:
        n, eps = r["n_steps"], r["svd_rel_cutoff"]
        r["observable"] = conv["observable"]
        i = conv["n_steps"].index(n)
        j = conv["svd_rel_cutoffs"].index(eps)
        prev_n = by_key.get((conv["n_steps"][i - 1], eps)) if i > 0 else None
        prev_e = by_key.get((n, conv["svd_rel_cutoffs"][j - 1])) if j > 0 else None
        for col, prev in (("diff_prev_n", prev_n), ("diff_prev_eps", prev_e)):
            ok = prev is not None and not prev["error"] and not r["error"]
            r[col] = abs(r["value"] - prev["value"]) if ok else None
    cols = ["n_steps", "svd_rel_cutoff", "observable", "value", "diff_prev_n", "diff_prev_eps",
            "max_bond", "truncation_error", "warnings", "error"]
    failed = any(r["error"] for r in rows)
    return cols, rows, EXIT_COMPUTE if failed else EXIT_OK


def _deviation_row(check, quantity, tempo, reference, tol, relative=True):
    dev = abs(tempo - reference)
    rel = float(dev / abs(reference)) if reference != 0 else None
    measure = rel if relative and rel is not None else dev
    return dict(check=check, quantity=quantity, tempo=float(np.real(tempo)),
                reference=float(np.real(reference)), abs_deviation=float(dev),
                rel_deviation=rel, tolerance=tol, passed=bool(measure <= tol))


def cmd_oracle(cfg, jobs):
    if "oracle" not in cfg:
        cfg = cfgmod.validate({**cfg, "oracle": {}})
    orc = cfg["oracle"]
    model, J, beta, n_steps, policy, ct = cfgmod.build(cfg)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if orc["check"] == "path_sum":
            # a cap violation is a configuration problem, so test it before the MPS run
            if model.dim ** (n_steps - 1) > 10**7:
                raise OracleCapError(f"{model.dim ** (n_steps - 1)} interior paths exceed the cap")
            kernel = influence_kernel(J, beta, n_steps)
            res = compute_hmf(model, J, beta, n_steps, policy, kernel=kernel)
            ref = exact_path_sum(model, kernel)
            for (i, j), v in np.ndenumerate(ref):
                rows.append(_deviation_row("path_sum", f"rho_tilde_{i}{j}", res.rho_tilde[i, j], v,
                                           orc["tolerance"]))
        else:
            bath = DiscreteBathSpec(cfg["bath"]["discrete"]["modes"], orc["fock_cutoff"])
            if bath.dimension(model.dim) > 20_000:
                raise OracleCapError(f"ED dimension {bath.dimension(model.dim)} exceeds the cap")
            res = compute_hmf(model, J, beta, n_steps, policy, counterterm=ct)
            rho_ed, logz_ed = exact_hmf_ed(model, bath, beta, counterterm=ct)
            rows.append(_deviation_row("ed", "trace_distance", trace_distance(res.rho, rho_ed), 0.0,
                                       orc["tolerance"], relative=False))
            rows.append(_deviation_row("ed", "log_z_ratio", res.log_z_ratio, logz_ed,
                                       orc["log_z_tolerance"], relative=False))
    for r in rows:
        r["error"] = ""
    code = EXIT_OK if all(r["passed"] for r in rows) else EXIT_DEVIATION
    return ORACLE_COLUMNS + ["error"], rows, code


COMMANDS = {"hmf": cmd_hmf, "sweep": cmd_sweep, "converge": cmd_converge,
            "polaron": cmd_polaron, "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hmftempo", description="Mean-force Gibbs states via imaginary-time TEMPO.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--out", default=None, help="output path (default: output.path, else stdout)")
        s.add_argument("--format", choices=("csv", "json"), default=None)
        s.add_argument("--jobs", type=int, default=None, help="worker processes (default: CPU count)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load(args.config)
        if args.out is not None:
            cfg["output"]["path"] = args.out
        if args.format is not None:
            cfg["output"]["format"] = args.format
        jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
        if jobs < 1:
            raise ConfigError("--jobs", "must be >= 1")
        columns, rows, code = COMMANDS[args.command](cfg, jobs)
    except (ConfigError, OracleCapError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except COMPUTE_ERRORS as exc:
        print(f"computation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    _emit(render(args.command, cfg, columns, rows, cfg["output"]["format"]), cfg["output"]["path"])
    for r in rows:
        if r.get("error"):
            print(f"row failed: {r['error']}", file=sys.stderr)
    if code == EXIT_DEVIATION:
        print("oracle deviation above tolerance", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
