"""Command-line front end: ``boilover <subcommand> [options]``.

Exit codes: 0 success, 2 input error, 3 regime/validity error. Errors are
written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, replace

import numpy as np

from . import datasets, fdoracle, hbi, predict, units
from .corephys import (
    FUEL_DB_ENV,
    FlameEnvironment,
    Scenario,
    characteristic_scales,
    dimensionless_groups,
    flame_feedback,
    flux_balance,
    get_fuel,
    load_fuel_db,
    regression_velocity,
)
from .errors import (
    BoiloverError,
    Instability,
    InvalidRegime,
    NonConvergence,
)

EXIT_OK, EXIT_INPUT, EXIT_REGIME = 0, 2, 3
REGIME_ERRORS = (InvalidRegime, Instability, NonConvergence)
DEFAULT_FUEL = "heating_oil"
# diameter used when --D is omitted; it only enters the flame correlation
# and the lookup of bundled records
DEFAULT_D = 1.0


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


# -- output ---------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = ";".join(json.dumps(x) if isinstance(x, dict) else str(x) for x in v)
        else:
            out[key] = v
    return out


def _fmt_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def emit(out, payload, rows, fmt):
    """Write ``payload`` (JSON) or ``rows`` (CSV/table) to ``out``."""
    if fmt == "json":
        json.dump(_clean(payload), out, indent=2, allow_nan=False)
        out.write("\n")
        return
    rows = [_flatten(_clean(r)) for r in rows]
    fields = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    if fmt == "csv":
        writer = csv.DictWriter(out, fieldnames=fields, lineterminator="\r\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: "" if r.get(k) is None else r.get(k) for k in fields})
        return
    cells = [[_fmt_cell(r.get(k)) for k in fields] for r in rows]
    widths = [max([len(f)] + [len(c[i]) for c in cells]) for i, f in enumerate(fields)]
    out.write("  ".join(f.ljust(w) for f, w in zip(fields, widths)).rstrip() + "\n")
    for c in cells:
        out.write("  ".join(v.ljust(w) for v, w in zip(c, widths)).rstrip() + "\n")


# -- scenario assembly ----------------------------------------------------------

def _add_scenario_args(p, need_theta=False):
    g = p.add_argument_group("scenario")
    g.add_argument("--fuel", default=DEFAULT_FUEL, help="fuel name in the database")
    g.add_argument("--D", type=units.length, default=None, help="pool diameter (e.g. 0.15, 15cm)")
    g.add_argument("--y0", type=units.length, default=None, help="initial layer thickness (e.g. 19mm)")
    g.add_argument("--y-F", dest="y_F", type=units.length, default=None, help="residual depth")
    g.add_argument("--va", type=units.velocity, default=None, help="regression velocity (m/s, mm/s)")
    g.add_argument("--mdot", type=float, default=None, help="burning rate (kg/m^2/s)")
    g.add_argument("--F", type=units.flux, default=None, help="surface heat flux (W/m2, kW/m2)")
    g.add_argument("--flame", action="store_true", help="take F from the flame feedback correlation")
    g.add_argument("--K", type=float, default=1.0, help="flame extinction coefficient (1/m)")
    g.add_argument("--T-inf", dest="T_inf", type=units.temperature, default=293.0,
                   help="initial temperature (K, or C suffix)")
    g.add_argument("--theta-b0", dest="theta_B0", type=float, default=None,
                   help="interface temperature at onset (dimensionless)")


def _bundled_match(fuel_name, D, y0):
    """(exact record or None, nearest-D record with a velocity or None)."""
    recs = [r for r in datasets.load_bundled() if r.fuel_name == fuel_name and r.V_a is not None]
    exact = [r for r in recs if math.isclose(r.y0, y0, rel_tol=1e-9)
             and (D is None or math.isclose(r.D, D, rel_tol=1e-9))]
    if D is None:
        nearest = recs[0] if recs else None
    else:
        nearest = min(recs, key=lambda r: abs(r.D - D), default=None)
    return (exact[0] if exact else None), nearest


def build(args, allow_table=False):
    """Scenario plus optional table-group record and warnings."""
    fuel = get_fuel(args.fuel, getattr(args, "fuel_db", None))
    if args.y0 is None:
        raise CliError("--y0 is required")
    D = args.D if args.D is not None else DEFAULT_D
    warnings, record = [], None
    V_a = args.va
    if V_a is None and args.mdot is None:
        exact, nearest = _bundled_match(fuel.name, args.D, args.y0)
        if exact is not None and allow_table:
            record, V_a = exact, exact.V_a
            D = exact.D
            warnings.append(f"V_a and dimensionless groups taken from bundled {exact.source} record "
                            f"D={exact.D:g} m, y0={exact.y0 * 1e3:g} mm")
        elif nearest is not None:
            V_a = nearest.V_a
            warnings.append(f"V_a={V_a:.4g} m/s taken from bundled {nearest.source} record "
                            f"D={nearest.D:g} m")
        else:
            raise CliError("no regression velocity: give --va or --mdot")
    F = args.F
    if args.flame:
        if F is not None:
            raise CliError("--F and --flame are mutually exclusive")
        F = flame_feedback(FlameEnvironment(K=args.K), D, strict=args.strict_paper_mode)
        warnings.append(f"F={F:.4g} W/m2 from the flame feedback correlation")
    scenario = Scenario(fuel=fuel, D=D, y0=args.y0, T_inf=args.T_inf, V_a=V_a, m_dot=args.mdot,
                        F=F, theta_B0=args.theta_B0, y_F=args.y_F)
    return scenario, record, warnings


def _groups_and_scales(scenario, record):
    if record is not None:
        return datasets.record_groups(record, scenario, "table")
    return dimensionless_groups(scenario), characteristic_scales(scenario)


# -- subcommands ----------------------------------------------------------------

def cmd_groups(args):
    scenario, _, warnings = build(args)
    g = dimensionless_groups(scenario)
    s = characteristic_scales(scenario)
    payload = {
        "fuel": scenario.fuel.name, "D_m": scenario.D, "y0_m": scenario.y0,
        "V_a_m_per_s": regression_velocity(scenario), "F_W_per_m2": scenario.F,
        "groups": {**asdict(g), "B_SA": g.B_SA, "B_F_approx": g.B_F_approx},
        "scales": {**asdict(s), "tau_rad": s.tau_rad},
        "y_crit_m": s.y_p0,
        "warnings": warnings,
    }
    return payload, [payload]


def cmd_profile(args):
    scenario, _, warnings = build(args)
    y_max = args.y_max if args.y_max is not None else scenario.y0
    y = np.linspace(0.0, y_max, args.n)
    t = args.t
    if args.variant in hbi.VARIANTS:
        sample = hbi.ablation_profile(args.variant, scenario, y, t)
        theta, sat = sample.theta, sample.saturated
    elif args.variant == "wave":
        sample = hbi.wave_pulse(scenario, y, t)
        theta, sat = sample.theta, sample.saturated
    else:
        prof = hbi.hbi_quadratic_profile(flux_balance(scenario), scenario.fuel, t,
                                         T_inf=scenario.T_inf, bf_mode=args.bf_mode, B_F=args.bf)
        y = np.linspace(0.0, min(y_max, prof.delta), args.n)
        theta = np.asarray(prof.theta(y))
        sat = theta > 1
    rows = [{"y_m": float(yi), "t_s": float(t), "theta": float(th), "variant": args.variant,
             "saturated": bool(s)} for yi, th, s in zip(y, np.broadcast_to(theta, y.shape),
                                                          np.broadcast_to(sat, y.shape))]
    return {"profile": rows, "warnings": warnings}, rows


def cmd_delta(args):
    scenario, _, warnings = build(args)
    s = characteristic_scales(scenario)
    if args.bf is not None:
        B_F = args.bf
    else:
        g = dimensionless_groups(scenario)
        B_F = g.B_F if args.bf_mode == "exact" else g.B_F_approx
        if B_F is None:
            raise CliError("B_F needs --F (and H_v, rho_F in the fuel record), or give --bf")
    t_max = args.t_max if args.t_max is not None else s.tau0
    t = np.linspace(0.0, t_max, args.steps)
    delta = np.atleast_1d(hbi.penetration_delta(scenario.fuel.a_F, s.V_a, B_F, t,
                                                verbatim=args.strict_paper_mode))
    goodman = np.atleast_1d(hbi.goodman_delta(scenario.fuel.a_F, B_F, t))
    rows = [{"t_s": float(ti), "delta_m": float(d), "goodman_m": float(gm)}
            for ti, d, gm in zip(t, delta, goodman)]
    payload = {"B_F": B_F, "bf_mode": "value" if args.bf is not None else args.bf_mode,
               "verbatim": args.strict_paper_mode, "delta_inf_m": math.sqrt(2 * B_F) * s.y_p0,
               "curve": rows, "warnings": warnings}
    return payload, rows


def _named_prediction(method, scenario, g, s, args):
    if method == "auto":
        return predict.predict_auto(scenario, g, s)
    if method == "conduction":
        return predict.conduction_t_B0(scenario, g, s)
    if method in ("radiation", "radiation_unit_prefactor"):
        return predict.radiation_t_B0(scenario, g, s, "unity")
    if method == "radiation_exact":
        return predict.radiation_t_B0(scenario, g, s, "exact_084")
    if method == "problem_A":
        return predict.predict_problem_A(scenario, g)
    if method == "problem_B":
        if args.fo_e is None:
            raise CliError("problem_B needs --fo-e")
        return predict.predict_problem_B(scenario, g, args.fo_e)
    if method == "scaled_A":
        return predict.scaled_problem_A(scenario, g)
    raise CliError(f"unknown method {method!r}")


PREDICT_CHOICES = ("auto", "conduction", "radiation", "radiation_exact", "problem_A",
                   "problem_B", "scaled_A")


def cmd_predict(args):
    scenario, record, warnings = build(args, allow_table=not args.computed_groups)
    g, s = _groups_and_scales(scenario, record)
    res = _named_prediction(args.method, scenario, g, s, args)
    res = replace(res, warnings=tuple(warnings) + res.warnings)
    payload = res.to_dict()
    return payload, [payload]


def cmd_oracle(args):
    scenario, _, warnings = build(args)
    t_end = args.t_end if args.t_end is not None else scenario.y0 / regression_velocity(scenario)
    cfg = fdoracle.FDConfig(
        t_end=t_end, n_cells=args.n_cells, domain_depth=args.domain_depth, dt=args.dt,
        scheme=args.scheme, theta=args.theta, bc_mode=args.bc, source_on=args.source,
        bottom=args.bottom, advection=args.advection,
    )
    sol = fdoracle.fd_solve(scenario, cfg)
    probe = None
    if scenario.theta_B0 is not None:
        probe = fdoracle.fd_probe_boilover(sol, scenario)
        warnings.extend(probe.warnings)
    steady = fdoracle.fd_steady_check(sol, scenario)
    if args.dump:
        with open(args.dump + ".csv", "w", newline="") as fh:
            fdoracle.write_solution_csv(fh, sol)
        with open(args.dump + ".json", "w") as fh:
            fdoracle.write_config_json(fh, sol, scenario)
    payload = {
        "t_star_s": None if probe is None else probe.t_star,
        "theta_B0": scenario.theta_B0,
        "t_end_s": t_end,
        "surface_theta_final": float(sol.theta[-1, 0]),
        "interface_theta_final": float(sol.probe_theta[-1]),
        "energy_audit_max": float(np.max(sol.energy_audit)),
        "steady": asdict(steady),
        "numerics": sol.meta,
        "warnings": warnings + list(sol.warnings),
    }
    return payload, [payload]


def cmd_compare(args):
    if args.dataset:
        records = []
        for path in args.dataset:
            records.extend(datasets.load_experiments(path, load_fuel_db(args.fuel_db)))
    else:
        records = datasets.load_bundled()
    methods = tuple(m.strip() for m in args.methods.split(",")) if args.methods else datasets.COMPARE_METHODS
    unknown = set(methods) - set(datasets.COMPARE_METHODS)
    if unknown:
        raise CliError(f"unknown method(s) {sorted(unknown)}; choose from {datasets.COMPARE_METHODS}")
    report = datasets.compare_report(records, methods, groups=args.groups,
                                     fuels=load_fuel_db(args.fuel_db), F=args.F,
                                     theta_B0=args.theta_B0)
    payload = datasets.report_to_dict(report)
    return payload, payload["rows"]


SWEEP_PARAMS = {
    "y0": units.length, "D": units.length, "va": units.velocity, "F": units.flux,
    "theta-b0": float, "T-inf": units.temperature,
}


def cmd_sweep(args):
    parse = SWEEP_PARAMS[args.param]
    lo, hi = parse(args.start), parse(args.stop)
    if args.steps < 1:
        raise CliError("--steps must be at least 1")
    if args.log:
        if not (lo > 0 and hi > 0):
            raise CliError("--log needs positive bounds")
        values = np.geomspace(lo, hi, args.steps)
    else:
        values = np.linspace(lo, hi, args.steps)
    attr = {"theta-b0": "theta_B0", "T-inf": "T_inf"}.get(args.param, args.param)
    if args.param != "y0" and args.y0 is None:
        raise CliError("--y0 is required unless sweeping y0")
    rows = []
    for v in values:
        point = argparse.Namespace(**vars(args))
        setattr(point, attr, float(v))
        if args.param == "y0":
            point.y0 = float(v)
        row = {"param": args.param, "value": float(v)}
        try:
            scenario, _, warnings = build(point)
            g, s = dimensionless_groups(scenario), characteristic_scales(scenario)
            res = _named_prediction(args.method, scenario, g, s, point)
            d = res.to_dict()
            row.update({k: d[k] for k in ("method", "t_B0_s", "Fo_e", "regime", "U_T_m_per_s")})
            row.update({"N_DHS": g.N_DHS, "y_crit_m": s.y_p0,
                        "warnings": list(warnings) + d["warnings"]})
        except REGIME_ERRORS as exc:
            row.update({"method": args.method, "t_B0_s": None, "warnings": [str(exc)]})
        rows.append(row)
    return {"param": args.param, "method": args.method, "rows": rows}, rows


# -- parser ---------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # usage errors go through the same structured error path as everything else
    def error(self, message):
        raise CliError(f"{self.prog}: {message}")


def make_parser():
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "table"), default=None,
                        help="output format (default: table on a terminal, json otherwise)")
    common.add_argument("--fuel-db", default=os.environ.get(FUEL_DB_ENV),
                        help=f"fuel database CSV (default: ${FUEL_DB_ENV} or the bundled table)")
    common.add_argument("--strict-paper-mode", action="store_true",
                        help="use the verbatim penetration-depth formula and flame correlation")

    parser = _Parser(prog="boilover", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("groups", parents=[common], help="dimensionless groups and scales")
    _add_scenario_args(p)
    p.set_defaults(func=cmd_groups)

    p = sub.add_parser("profile", parents=[common], help="sample a closed-form profile")
    _add_scenario_args(p)
    p.add_argument("--variant", choices=hbi.VARIANTS + ("wave", "quadratic"), default=hbi.LINEAR_BC)
    p.add_argument("--t", type=units.duration, default=0.0, help="time (s, min, h)")
    p.add_argument("--y-max", dest="y_max", type=units.length, default=None)
    p.add_argument("--n", type=int, default=51, help="number of depths")
    p.add_argument("--bf-mode", choices=("exact", "approx"), default="approx",
                   help="B_F for the quadratic profile (exact is negative whenever net flux is positive)")
    p.add_argument("--bf", type=float, default=None, help="explicit B_F")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("delta", parents=[common], help="HBI penetration depth curve")
    _add_scenario_args(p)
    p.add_argument("--t-max", dest="t_max", type=units.duration, default=None)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--bf-mode", choices=("exact", "approx"), default="approx",
                   help="B_F = 1 - F/phi (exact) or 1 - 1/H_p (approx)")
    p.add_argument("--bf", type=float, default=None, help="explicit B_F")
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("predict", parents=[common], help="time to boilover")
    _add_scenario_args(p)
    p.add_argument("--method", choices=PREDICT_CHOICES, default="auto")
    p.add_argument("--fo-e", dest="fo_e", type=float, default=None, help="Fourier number for problem_B")
    p.add_argument("--computed-groups", action="store_true",
                   help="never substitute tabulated groups from bundled records")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("oracle", parents=[common], help="finite-difference reference solve")
    _add_scenario_args(p)
    p.add_argument("--t-end", dest="t_end", type=units.duration, default=None)
    p.add_argument("--n-cells", dest="n_cells", type=int, default=256)
    p.add_argument("--domain-depth", dest="domain_depth", type=units.length, default=None)
    p.add_argument("--dt", type=units.duration, default=None)
    p.add_argument("--scheme", choices=fdoracle.SCHEMES, default="implicit_theta")
    p.add_argument("--theta", type=float, default=1.0, help="implicit weight in [0.5, 1]")
    p.add_argument("--bc", choices=fdoracle.BC_MODES, default="flux_stefan")
    p.add_argument("--source", action="store_true", help="in-depth radiation absorption")
    p.add_argument("--bottom", choices=fdoracle.BOTTOMS, default="far_field")
    p.add_argument("--advection", choices=fdoracle.ADVECTION, default="hybrid")
    p.add_argument("--dump", default=None, help="write PREFIX.csv and PREFIX.json")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("compare", parents=[common], help="predictions against experiment tables")
    p.add_argument("--dataset", action="append", default=None, help="dataset CSV (repeatable)")
    p.add_argument("--methods", default=None, help="comma-separated methods")
    p.add_argument("--groups", choices=("table", "computed"), default="table")
    p.add_argument("--F", type=units.flux, default=None)
    p.add_argument("--theta-b0", dest="theta_B0", type=float, default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", parents=[common], help="predictions over a parameter range")
    _add_scenario_args(p)
    p.add_argument("--param", choices=tuple(SWEEP_PARAMS), required=True)
    p.add_argument("--from", dest="start", required=True)
    p.add_argument("--to", dest="stop", required=True)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--log", action="store_true", help="geometric spacing")
    p.add_argument("--method", choices=PREDICT_CHOICES, default="auto")
    p.add_argument("--fo-e", dest="fo_e", type=float, default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def _error(stream, exc, code):
    json.dump({"error": type(exc).__name__, "message": str(exc), "exit_code": code}, stream)
    stream.write("\n")
    return code


def run(argv=None, stdout=None, stderr=None):
    """Run one command; returns the exit code."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except CliError as exc:
        return _error(stderr, exc, exc.code)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    fmt = args.format or ("table" if stdout.isatty() else "json")
    try:
        payload, rows = args.func(args)
    except CliError as exc:
        return _error(stderr, exc, exc.code)
    except REGIME_ERRORS as exc:
        return _error(stderr, exc, EXIT_REGIME)
    except (BoiloverError, ValueError, OSError) as exc:
        return _error(stderr, exc, EXIT_INPUT)
    buf = io.StringIO()
    emit(buf, payload, rows, fmt)
    stdout.write(buf.getvalue())
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
