"""Command-line entry point: single runs, parameter sweeps, advance prediction.

Subcommands: simulate, sweep-h, sweep-beta, sweep-ecc, sweep-theta, sweep-dx,
predict-advance.  Every option can also come from a flat key = value config
file (--config); explicit flags override file values, and --dump-config
writes the effective configuration back out so a run can be reproduced
exactly.  Defaults are the reference experiment configuration: h = 0.0002
for the beta/eccentricity sweeps, tolerance 8e-11 and 180 angles for lattice
sweeps, 3 revolutions per shift measurement.

Relative --out paths resolve against $PERILAB_OUT_DIR when it is set.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import harness
from .dynamics import (
    GM_SUN,
    MERCURY,
    RAD_TO_ARCSEC,
    OrbitSpec,
    ReferenceOrbit,
    initial_conditions,
    predicted_advance,
)
from .harness import (
    DEFAULT_MESH_TOL,
    DEFAULT_N_ANGLES,
    DEFAULT_REVOLUTIONS,
    DEFAULT_SWEEP_H,
    RunPoint,
    execute_point,
    write_records_csv,
    write_records_jsonl,
)

__all__ = ["main", "entry", "build_parser", "SUBCOMMANDS"]

_DEFAULT_H_VALUES = "0.1,0.05,0.025,0.0125,0.00625,0.003125,0.0015625"
_DEFAULT_BETA_VALUES = "0.5,1,2,5,10,20,50,100"
_DEFAULT_ECC_VALUES = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"
_DEFAULT_DX_VALUES = "0.001,0.00316,0.01,0.0316,0.1,1"


class ConfigError(ValueError):
    pass


def _parse_opt_float(text: str):
    return None if text.lower() in ("", "none") else float(text)


def _parse_floats(text: str):
    vals = [float(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise ValueError("empty value list")
    return vals


# (dest, kind, default, help); kind in {float, int, str, optfloat, optstr, bool}
# or ("choice", [...]).
_ORBIT = [
    ("beta", "float", 1.0, "relativistic-parameter ratio Upsilon/Upsilon_ref"),
    ("ecc", "optfloat", None, "eccentricity in [0,1) (default: reference orbit's)"),
    ("theta_deg", "float", 0.0, "perihelion angle against the lattice x-axis, degrees"),
    ("gm", "float", GM_SUN, "central GM, Gm^3/Ms^2"),
    ("r_sch", "float", MERCURY.r_sch, "Schwarzschild radius of the central mass, Gm"),
    ("r_per0", "float", MERCURY.r_per, "reference perihelion distance, Gm"),
    ("v_per0", "float", MERCURY.v_per, "reference perihelion speed, Gm/Ms"),
]
_RUN = [
    ("revs", "int", DEFAULT_REVOLUTIONS, "revolutions per shift measurement"),
    ("workers", "int", 1, "parallel worker processes for sweeps"),
    ("out", "optstr", None, "output CSV path (.jsonl for JSON lines)"),
    ("timing", "bool", False, "include per-point runtimes in the output "
                              "(breaks byte-reproducibility)"),
    ("budget_s", "optfloat", None, "per-point wall-clock budget; slower points "
                                   "are marked 'timeout'"),
    ("config", "optstr", None, "flat key = value config file; flags override it"),
    ("dump_config", "optstr", None, "write the effective configuration to this path"),
]
_MESH = [
    ("scheme", ("choice", ["linear", "bilinear"]), None, "lattice force interpolation"),
    ("dx", "optfloat", None, "lattice constant, Gm"),
    ("variant", ("choice", ["symmetric", "as-printed"]), "symmetric",
     "linear-scheme y-component variant"),
    ("offset_x", "float", 0.0, "lattice registration offset, x, in cells"),
    ("offset_y", "float", 0.0, "lattice registration offset, y, in cells"),
]

_SIMULATE = _ORBIT + _RUN + _MESH + [
    ("method", ("choice", ["euler", "leapfrog", "rk2", "rk4", "adaptive"]),
     "adaptive", "time integrator"),
    ("h", "optfloat", None, "fixed step size, Ms (required for fixed-step methods)"),
    ("tol", "float", DEFAULT_MESH_TOL, "adaptive local tolerance"),
    ("relativistic", "bool", False, "use the Schwarzschild-corrected exact force"),
    ("allow_fixed_mesh", "bool", False,
     "permit fixed-step integration of lattice forces"),
    ("trajectory_out", "optstr", None, "also dump the trajectory (t,x,y,vx,vy) CSV"),
    ("precision", ("choice", ["double", "longdouble"]), "double",
     "scalar precision (longdouble: fixed-step exact-force runs only)"),
]
_SWEEP_H = _ORBIT + _RUN + [
    ("methods", "str", "euler,leapfrog,rk2,rk4", "comma-separated methods"),
    ("h_values", "str", _DEFAULT_H_VALUES, "comma-separated step sizes"),
]
_SWEEP_BETA = _ORBIT + _RUN + [
    ("methods", "str", "euler,leapfrog,rk2,rk4", "comma-separated methods"),
    ("beta_values", "str", _DEFAULT_BETA_VALUES, "comma-separated beta values"),
    ("h", "float", DEFAULT_SWEEP_H, "fixed step size, Ms"),
]
_SWEEP_ECC = _ORBIT + _RUN + [
    ("methods", "str", "euler,leapfrog,rk2,rk4", "comma-separated methods"),
    ("ecc_values", "str", _DEFAULT_ECC_VALUES, "comma-separated eccentricities"),
    ("h", "float", DEFAULT_SWEEP_H, "fixed step size, Ms"),
]
_SWEEP_THETA = _ORBIT + _RUN + _MESH + [
    ("angles", "int", DEFAULT_N_ANGLES, "number of initial angles over the full circle"),
    ("tol", "float", DEFAULT_MESH_TOL, "adaptive local tolerance"),
    ("reverse", "bool", False, "flip the initial velocity (clockwise orbits)"),
]
_SWEEP_DX = _ORBIT + _RUN + _MESH + [
    ("dx_values", "str", _DEFAULT_DX_VALUES, "comma-separated lattice constants"),
    ("angles", "int", DEFAULT_N_ANGLES, "number of initial angles per dx"),
    ("tol", "float", DEFAULT_MESH_TOL, "adaptive local tolerance"),
    ("fits_out", "optstr", None, "sidecar JSON with per-dx aggregates and power fit"),
]
_PREDICT = _ORBIT + [
    ("config", "optstr", None, "flat key = value config file; flags override it"),
    ("dump_config", "optstr", None, "write the effective configuration to this path"),
]

SUBCOMMANDS = {
    "simulate": (_SIMULATE, "run one orbit and report its perihelion shift"),
    "sweep-h": (_SWEEP_H, "spurious shift vs step size, per method (exact force)"),
    "sweep-beta": (_SWEEP_BETA, "spurious shift vs relativistic parameter (exact force)"),
    "sweep-ecc": (_SWEEP_ECC, "spurious shift vs eccentricity (exact force)"),
    "sweep-theta": (_SWEEP_THETA, "lattice shift vs initial angle (adaptive)"),
    "sweep-dx": (_SWEEP_DX, "theta sweeps across lattice constants, with scaling fit"),
    "predict-advance": (_PREDICT, "print the relativistic perihelion advance"),
}


def _add_option(parser, dest, kind, default, help_text):
    flag = "--" + dest.replace("_", "-")
    if kind == "bool":
        parser.add_argument(flag, dest=dest, action=argparse.BooleanOptionalAction,
                            default=default, help=help_text)
    elif isinstance(kind, tuple) and kind[0] == "choice":
        parser.add_argument(flag, dest=dest, choices=kind[1], default=default,
                            help=help_text)
    elif kind == "float":
        parser.add_argument(flag, dest=dest, type=float, default=default,
                            help=help_text)
    elif kind == "int":
        parser.add_argument(flag, dest=dest, type=int, default=default,
                            help=help_text)
    elif kind == "optfloat":
        parser.add_argument(flag, dest=dest, type=_parse_opt_float, default=default,
                            help=help_text)
    else:  # str / optstr
        parser.add_argument(flag, dest=dest, default=default, help=help_text)


def build_parser(overrides: dict | None = None) -> argparse.ArgumentParser:
    """Assemble the CLI; `overrides` replaces schema defaults (config files)."""
    overrides = overrides or {}
    parser = argparse.ArgumentParser(
        prog="perilab",
        description="spurious perihelion shift of integrators and lattice forces "
                    "vs. the relativistic advance")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (schema, help_text) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        for dest, kind, default, htext in schema:
            _add_option(p, dest, kind, overrides.get(dest, default), htext)
    return parser


# ---------------------------------------------------------------------------
# config files


def _schema_for(command: str):
    return SUBCOMMANDS[command][0]


def _coerce(kind, text, dest):
    try:
        if kind == "bool":
            if text.lower() in ("true", "1", "yes"):
                return True
            if text.lower() in ("false", "0", "no"):
                return False
            raise ValueError(f"expected true/false, got {text!r}")
        if isinstance(kind, tuple) and kind[0] == "choice":
            if text not in kind[1]:
                raise ValueError(f"must be one of {kind[1]}, got {text!r}")
            return text
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "optfloat":
            return _parse_opt_float(text)
        return None if (kind == "optstr" and text.lower() == "none") else text
    except ValueError as exc:
        raise ConfigError(f"config key {dest!r}: {exc}") from None


def load_config(path: str, command: str) -> dict:
    """Parse a flat key = value file against the subcommand's schema."""
    schema = {dest: kind for dest, kind, _, _ in _schema_for(command)}
    values = {}
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for ln, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected 'key = value', got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        raw = raw.strip()
        if key == "command":
            if raw != command:
                raise ConfigError(f"{path}: config is for command {raw!r}, "
                                  f"not {command!r}")
            continue
        if key in ("config", "dump_config"):
            continue
        if key not in schema:
            raise ConfigError(f"{path}:{ln}: unknown config key {key!r} "
                              f"for command {command!r}")
        values[key] = _coerce(schema[key], raw, key)
    return values


def dump_config(path: str, command: str, args: argparse.Namespace):
    lines = [f"command = {command}"]
    for dest, _, _, _ in _schema_for(command):
        if dest in ("config", "dump_config"):
            continue
        value = getattr(args, dest)
        lines.append(f"{dest} = {'none' if value is None else value}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# helpers


def _orbit_spec(args) -> OrbitSpec:
    ref = ReferenceOrbit(r_per=args.r_per0, v_per=args.v_per0, gm=args.gm,
                         r_sch=args.r_sch)
    return OrbitSpec(beta=args.beta, ecc=args.ecc,
                     theta=math.radians(args.theta_deg), reference=ref)


def _resolve_out(path: str | None) -> str | None:
    if path is None:
        return None
    base = os.environ.get("PERILAB_OUT_DIR")
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    parent = os.path.dirname(path) or "."
    if not os.path.isdir(parent):
        raise ConfigError(f"output directory does not exist: {parent}")
    if not os.access(parent, os.W_OK):
        raise ConfigError(f"output directory is not writable: {parent}")
    return path


def _write_records(records, path, timing: bool):
    if path.endswith(".jsonl"):
        write_records_jsonl(records, path, include_runtime=timing)
    else:
        write_records_csv(records, path, include_runtime=timing)


def _summarize(records, out_path) -> str:
    ok = sum(1 for r in records if r.status == "ok")
    detect = sum(1 for r in records if r.detectable)
    dest = out_path if out_path else "(no --out)"
    return (f"rows={len(records)} ok={ok} detectable={detect} "
            f"out={dest}")


def _require(condition, message):
    if not condition:
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# subcommand runners


def _run_simulate(args) -> int:
    spec = _orbit_spec(args)
    out = _resolve_out(args.out)
    mesh_selected = args.scheme is not None or args.dx is not None
    if mesh_selected:
        _require(args.scheme is not None and args.dx is not None,
                 "mesh runs need both --scheme and --dx")
        _require(not args.relativistic,
                 "lattice forces discretize the Newtonian potential; "
                 "--relativistic applies to exact-force runs only")
        _require(args.method == "adaptive" or args.allow_fixed_mesh,
                 "mesh runs use the adaptive integrator by default; "
                 "pass --allow-fixed-mesh to override")
    if args.method == "adaptive":
        _require(args.h is None, "--h applies to fixed-step methods only")
    else:
        _require(args.h is not None, f"--method {args.method} requires --h")
    _require(args.precision == "double" or
             (args.method != "adaptive" and not mesh_selected),
             "longdouble precision supports fixed-step exact-force runs only")

    if args.precision == "longdouble":
        shift = _simulate_longdouble(args, spec)
        advance = predicted_advance(spec)
        record = None
    else:
        point = RunPoint(
            sweep_id="simulate", spec=spec,
            method=None if args.method == "adaptive" else args.method,
            h=args.h, tol=args.tol, scheme=args.scheme, dx=args.dx,
            variant=args.variant.replace("-", "_"),
            offset=(args.offset_x, args.offset_y), revolutions=args.revs,
            relativistic=args.relativistic, budget_s=args.budget_s)
        record = execute_point(point)
        if record.status not in ("ok", "timeout"):
            print(f"error: simulation failed: {record.status}", file=sys.stderr)
            return 1
        shift = record.shift_rad
        advance = record.predicted_advance_rad

    if args.trajectory_out:
        _dump_trajectory(args, spec, _resolve_out(args.trajectory_out))

    detectable = abs(shift) < advance
    print(f"shift_per_rev={shift:.17g} rad |shift|={abs(shift):.17g} rad "
          f"predicted_advance={advance:.17g} rad detectable={str(detectable).lower()}")
    if out and record is not None:
        _write_records([record], out, args.timing)
    return 0


def _simulate_longdouble(args, spec: OrbitSpec) -> float:
    """Fixed-step exact-force run carried in numpy longdouble."""
    from .dynamics import OrbitState
    from .integrators import FixedStepMethod, integrate_fixed
    from .metrology import measure_fixed_shift

    gm = np.longdouble(spec.gm)

    def accel(t, pos, vel):
        r2 = pos[0] * pos[0] + pos[1] * pos[1]
        return (-gm / (r2 * np.sqrt(r2))) * pos

    s0 = initial_conditions(spec)
    state0 = OrbitState(0.0, np.asarray(s0.pos, dtype=np.longdouble),
                        np.asarray(s0.vel, dtype=np.longdouble))
    n_steps = int(math.ceil((args.revs + 0.2) * spec.period / args.h))
    traj = integrate_fixed(state0, args.h, n_steps, args.method, accel)
    fit_order = harness.DEFAULT_FIT_ORDERS[FixedStepMethod.parse(args.method)]
    return measure_fixed_shift(traj, args.revs, fit_order=fit_order,
                               gm=spec.gm).shift_per_rev


def _dump_trajectory(args, spec: OrbitSpec, path: str):
    """CSV of (t, x, y, vx, vy) samples for plotting orbit galleries."""
    from .integrators import integrate_adaptive, integrate_fixed

    state0 = initial_conditions(spec)
    t_end = (args.revs + 0.02) * spec.period
    if args.method == "adaptive":
        point = RunPoint(sweep_id="traj", spec=spec, tol=args.tol,
                         scheme=args.scheme, dx=args.dx,
                         variant=args.variant.replace("-", "_"),
                         offset=(args.offset_x, args.offset_y),
                         relativistic=args.relativistic)
        sol = integrate_adaptive(state0, t_end, args.tol,
                                 harness._point_force(point))
        ts = np.linspace(sol.t0, sol.t_end, 2000)
        ys = sol.eval_batch(ts)
    else:
        point = RunPoint(sweep_id="traj", spec=spec, scheme=args.scheme, dx=args.dx,
                         variant=args.variant.replace("-", "_"),
                         offset=(args.offset_x, args.offset_y),
                         relativistic=args.relativistic)
        n_steps = int(math.ceil(t_end / args.h))
        traj = integrate_fixed(state0, args.h, n_steps, args.method,
                               harness._point_force(point))
        stride = max(1, n_steps // 2000)
        ts = traj.times[::stride]
        ys = np.column_stack([traj.pos[::stride], traj.vel[::stride]])
    lines = ["t,x,y,vx,vy"]
    for t, row in zip(ts, ys):
        lines.append(",".join(f"{v:.17g}" for v in (t, *row)))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def _methods_list(text: str):
    methods = [m.strip() for m in text.split(",") if m.strip()]
    _require(methods, "empty --methods list")
    return methods


def _run_sweep_h(args) -> int:
    out = _resolve_out(args.out)
    _require(out is not None, "sweep-h requires --out")
    records = harness.sweep_timestep(_methods_list(args.methods),
                                     _parse_floats(args.h_values),
                                     spec=_orbit_spec(args),
                                     revolutions=args.revs, workers=args.workers,
                                     budget_s=args.budget_s)
    _write_records(records, out, args.timing)
    print(_summarize(records, out))
    return 0 if any(r.status == "ok" for r in records) else 1


def _run_sweep_beta(args) -> int:
    out = _resolve_out(args.out)
    _require(out is not None, "sweep-beta requires --out")
    records = []
    for method in _methods_list(args.methods):
        records.extend(harness.sweep_beta(_parse_floats(args.beta_values),
                                          spec=_orbit_spec(args), method=method,
                                          h=args.h, revolutions=args.revs,
                                          workers=args.workers,
                                          budget_s=args.budget_s))
    _write_records(records, out, args.timing)
    print(_summarize(records, out))
    return 0 if any(r.status == "ok" for r in records) else 1


def _run_sweep_ecc(args) -> int:
    out = _resolve_out(args.out)
    _require(out is not None, "sweep-ecc requires --out")
    records = []
    for method in _methods_list(args.methods):
        records.extend(harness.sweep_ecc(_parse_floats(args.ecc_values),
                                         spec=_orbit_spec(args), method=method,
                                         h=args.h, revolutions=args.revs,
                                         workers=args.workers,
                                         budget_s=args.budget_s))
    _write_records(records, out, args.timing)
    print(_summarize(records, out))
    return 0 if any(r.status == "ok" for r in records) else 1


def _run_sweep_theta(args) -> int:
    out = _resolve_out(args.out)
    _require(out is not None, "sweep-theta requires --out")
    _require(args.scheme is not None, "sweep-theta requires --scheme")
    _require(args.dx is not None, "sweep-theta requires --dx")
    records = harness.sweep_theta(args.scheme, args.dx, n_angles=args.angles,
                                  spec=_orbit_spec(args), tol=args.tol,
                                  variant=args.variant.replace("-", "_"),
                                  offset=(args.offset_x, args.offset_y),
                                  revolutions=args.revs, workers=args.workers,
                                  budget_s=args.budget_s, reverse=args.reverse)
    _write_records(records, out, args.timing)
    print(_summarize(records, out))
    return 0 if any(r.status == "ok" for r in records) else 1


def _run_sweep_dx(args) -> int:
    out = _resolve_out(args.out)
    _require(out is not None, "sweep-dx requires --out")
    _require(args.scheme is not None, "sweep-dx requires --scheme")
    records, summaries, power_fit = harness.sweep_dx(
        args.scheme, _parse_floats(args.dx_values), spec=_orbit_spec(args),
        n_angles=args.angles, tol=args.tol,
        variant=args.variant.replace("-", "_"), revolutions=args.revs,
        workers=args.workers, budget_s=args.budget_s)
    _write_records(records, out, args.timing)
    if args.fits_out:
        payload = {
            "per_dx": [{"model": s.model, "coefficients": s.coefficients,
                        "residual_rms": s.residual_rms, "n_samples": s.n_samples,
                        "flags": list(s.flags)} for s in summaries],
            "power_fit": {"model": power_fit.model,
                          "coefficients": power_fit.coefficients,
                          "residual_rms": power_fit.residual_rms,
                          "n_samples": power_fit.n_samples,
                          "flags": list(power_fit.flags)},
        }
        with open(_resolve_out(args.fits_out), "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    exponent = power_fit.coefficients.get("exponent")
    print(_summarize(records, out) + f" power_exponent={exponent:.6g}")
    return 0 if any(r.status == "ok" for r in records) else 1


def _run_predict_advance(args) -> int:
    spec = _orbit_spec(args)
    advance = predicted_advance(spec)
    print(f"predicted_advance={advance:.17g} rad "
          f"({advance * RAD_TO_ARCSEC:.6g} arcsec/period)")
    return 0


_RUNNERS = {
    "simulate": _run_simulate,
    "sweep-h": _run_sweep_h,
    "sweep-beta": _run_sweep_beta,
    "sweep-ecc": _run_sweep_ecc,
    "sweep-theta": _run_sweep_theta,
    "sweep-dx": _run_sweep_dx,
    "predict-advance": _run_predict_advance,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        if getattr(args, "config", None):
            defaults = load_config(args.config, args.command)
            args = build_parser(overrides=defaults).parse_args(argv)
        if getattr(args, "dump_config", None):
            dump_config(args.dump_config, args.command, args)
        return _RUNNERS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure, not a usage error
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def entry():  # console-script hook
    sys.exit(main())


if __name__ == "__main__":
    entry()
