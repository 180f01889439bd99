"""Experiment harness: parameter sweeps, fitting statistics, CSV/JSONL output.

Every sweep is an embarrassingly parallel list of independent orbit runs.
Points are enumerated in a fixed order, executed serially or on a process
pool, and merged back in enumeration order, so a sweep's output is
byte-identical regardless of the worker count.  Per-point failures are
recorded in the row's status and never abort the sweep.

Wall-clock runtimes are always measured and kept on the records; they are
written to CSV/JSONL only on request (`include_runtime=True` / `--timing`),
since timing data is inherently non-reproducible while the result files are
required to be.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats as _stats

from .dynamics import (
    OrbitSpec,
    initial_conditions,
    newtonian_force,
    predicted_advance,
    relativistic_force,
    reverse_velocity,
)
from .integrators import FixedStepMethod, integrate_adaptive, integrate_fixed
from .mesh import InterpolationScheme, LinearVariant, MeshSpec, force_model
from .metrology import (
    InsufficientEventsError,
    measure_dense_shift,
    measure_fixed_shift,
)

__all__ = [
    "SweepRecord",
    "FitResult",
    "RunPoint",
    "CSV_COLUMNS",
    "DEFAULT_FIT_ORDERS",
    "DEFAULT_SWEEP_H",
    "DEFAULT_MESH_TOL",
    "DEFAULT_N_ANGLES",
    "DEFAULT_REVOLUTIONS",
    "execute_point",
    "run_points",
    "sweep_timestep",
    "sweep_beta",
    "sweep_ecc",
    "sweep_theta",
    "sweep_dx",
    "fit_gaussian",
    "fit_cosine",
    "fit_powerlaw",
    "classify_detectability",
    "write_records_csv",
    "write_records_jsonl",
    "records_csv_text",
]

# reference experiment configuration
DEFAULT_SWEEP_H = 0.0002      # step size of the beta/eccentricity sweeps, Ms
DEFAULT_MESH_TOL = 8e-11      # adaptive tolerance for lattice runs
DEFAULT_N_ANGLES = 180        # 2-degree theta grid
DEFAULT_REVOLUTIONS = 3       # turns averaged per shift measurement

#: perihelion fit degree per method: parabola by default, quartic for Runge-Kutta
DEFAULT_FIT_ORDERS = {
    FixedStepMethod.EULER: 2,
    FixedStepMethod.LEAPFROG: 2,
    FixedStepMethod.RK2: 4,
    FixedStepMethod.RK4: 4,
}

#: extra fractions of a period integrated so the k-th perihelion is fully
#: covered; lattice forces can stretch the radial period (strongly at high e),
#: so the margin is widened and the run retried when events fall past the span
_REV_MARGINS = (0.25, 0.6, 1.2)

CSV_COLUMNS = [
    "sweep_id", "scheme", "method", "h", "tol", "dx", "theta_deg", "beta",
    "ecc", "shift_rad", "abs_shift_rad", "predicted_advance_rad",
    "detectable", "status", "runtime_s",
]


@dataclass(frozen=True)
class SweepRecord:
    """One row of a sweep result table (see CSV_COLUMNS for the file order)."""

    sweep_id: str
    scheme: str | None
    method: str | None
    h: float | None
    tol: float | None
    dx: float | None
    theta_deg: float | None
    beta: float | None
    ecc: float | None
    shift_rad: float | None
    abs_shift_rad: float | None
    predicted_advance_rad: float | None
    detectable: bool | None
    status: str
    runtime_s: float | None


@dataclass(frozen=True)
class FitResult:
    """Fitted model summary; coefficients keep a fixed insertion order."""

    model: str
    coefficients: dict
    residual_rms: float
    n_samples: int
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class RunPoint:
    """A single orbit run inside a sweep; picklable for worker processes."""

    sweep_id: str
    spec: OrbitSpec
    method: str | None = None        # fixed-step method name, or None for adaptive
    h: float | None = None
    tol: float | None = None
    scheme: str | None = None        # mesh scheme name, or None for the exact force
    dx: float | None = None
    variant: str = "symmetric"
    offset: tuple[float, float] = (0.0, 0.0)
    revolutions: int = DEFAULT_REVOLUTIONS
    window: int = 7
    fit_order: int | None = None
    reverse: bool = False
    relativistic: bool = False
    budget_s: float | None = None


def _point_force(point: RunPoint):
    if point.scheme is not None:
        mesh = MeshSpec(dx=point.dx, gm=point.spec.gm, offset=point.offset,
                        scheme=InterpolationScheme.parse(point.scheme),
                        linear_variant=LinearVariant.parse(point.variant))
        return force_model(mesh)
    if point.relativistic:
        return relativistic_force(point.spec.gm, point.spec.r_sch)
    return newtonian_force(point.spec.gm)


def run_shift(point: RunPoint):
    """Integrate one configured orbit and measure its perihelion shift."""
    spec = point.spec
    state0 = initial_conditions(spec)
    if point.reverse:
        state0 = reverse_velocity(state0)
    force = _point_force(point)

    for margin in _REV_MARGINS:
        t_end = (point.revolutions + margin) * spec.period
        try:
            if point.method is None:
                sol = integrate_adaptive(state0, t_end, point.tol, force)
                return measure_dense_shift(sol, point.revolutions,
                                           period_hint=spec.period, gm=spec.gm)
            method = FixedStepMethod.parse(point.method)
            n_steps = int(math.ceil(t_end / point.h))
            traj = integrate_fixed(state0, point.h, n_steps, method, force)
            fit_order = point.fit_order
            if fit_order is None:
                fit_order = DEFAULT_FIT_ORDERS[method]
            return measure_fixed_shift(traj, point.revolutions,
                                       window=point.window, fit_order=fit_order,
                                       gm=spec.gm)
        except InsufficientEventsError:
            if margin == _REV_MARGINS[-1]:
                raise
    raise AssertionError("unreachable")


def execute_point(point: RunPoint) -> SweepRecord:
    """Run one sweep point; failures are recorded, not raised."""
    t_start = time.perf_counter()
    advance = predicted_advance(point.spec)
    shift = None
    status = "ok"
    try:
        shift = run_shift(point).shift_per_rev
    except Exception as exc:  # per-point failures stay in the row
        status = f"{type(exc).__name__}: {exc}"
    runtime = time.perf_counter() - t_start
    if point.budget_s is not None and runtime > point.budget_s and status == "ok":
        status = "timeout"

    abs_shift = abs(shift) if shift is not None else None
    return SweepRecord(
        sweep_id=point.sweep_id,
        scheme=point.scheme,
        method=point.method if point.method is not None else "adaptive",
        h=point.h,
        tol=point.tol,
        dx=point.dx,
        theta_deg=math.degrees(point.spec.theta),
        beta=point.spec.beta,
        ecc=point.spec.ecc_effective,
        shift_rad=shift,
        abs_shift_rad=abs_shift,
        predicted_advance_rad=advance,
        detectable=(abs_shift < advance) if abs_shift is not None else None,
        status=status,
        runtime_s=runtime,
    )


def run_points(points: list[RunPoint], workers: int = 1) -> list[SweepRecord]:
    """Execute points, preserving enumeration order in the result list."""
    if workers <= 1:
        return [execute_point(p) for p in points]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(execute_point, points, chunksize=1))


# ---------------------------------------------------------------------------
# sweeps


def sweep_timestep(methods, h_values, spec: OrbitSpec | None = None,
                   revolutions: int = DEFAULT_REVOLUTIONS, workers: int = 1,
                   budget_s: float | None = None) -> list[SweepRecord]:
    """|shift| per revolution vs step size, per method, exact Newtonian force."""
    spec = spec if spec is not None else OrbitSpec()
    points = [
        RunPoint(sweep_id="sweep-h", spec=spec, method=FixedStepMethod.parse(m).value,
                 h=float(h), revolutions=revolutions, budget_s=budget_s)
        for m in methods for h in h_values
    ]
    return run_points(points, workers)


def sweep_beta(beta_values, spec: OrbitSpec | None = None, method="leapfrog",
               h: float = DEFAULT_SWEEP_H, revolutions: int = DEFAULT_REVOLUTIONS,
               workers: int = 1, budget_s: float | None = None) -> list[SweepRecord]:
    """Spurious shift vs the relativistic parameter ratio beta, exact force."""
    spec = spec if spec is not None else OrbitSpec()
    method = FixedStepMethod.parse(method).value
    points = [
        RunPoint(sweep_id="sweep-beta", spec=replace(spec, beta=float(b)),
                 method=method, h=float(h), revolutions=revolutions,
                 budget_s=budget_s)
        for b in beta_values
    ]
    return run_points(points, workers)


def sweep_ecc(ecc_values, spec: OrbitSpec | None = None, method="leapfrog",
              h: float = DEFAULT_SWEEP_H, revolutions: int = DEFAULT_REVOLUTIONS,
              workers: int = 1, budget_s: float | None = None) -> list[SweepRecord]:
    """Spurious shift vs eccentricity at fixed semi-major axis, exact force."""
    spec = spec if spec is not None else OrbitSpec()
    method = FixedStepMethod.parse(method).value
    points = [
        RunPoint(sweep_id="sweep-ecc", spec=replace(spec, ecc=float(e)),
                 method=method, h=float(h), revolutions=revolutions,
                 budget_s=budget_s)
        for e in ecc_values
    ]
    return run_points(points, workers)


def theta_grid(n_angles: int) -> np.ndarray:
    """n_angles initial angles covering the full circle evenly."""
    return np.arange(n_angles) * (2.0 * math.pi / n_angles)


def sweep_theta(scheme, dx: float, n_angles: int = DEFAULT_N_ANGLES,
                spec: OrbitSpec | None = None, tol: float = DEFAULT_MESH_TOL,
                variant="symmetric", offset=(0.0, 0.0),
                revolutions: int = DEFAULT_REVOLUTIONS, workers: int = 1,
                budget_s: float | None = None, reverse: bool = False,
                sweep_id: str = "sweep-theta") -> list[SweepRecord]:
    """Lattice-force shift vs the perihelion angle theta, adaptive integration."""
    spec = spec if spec is not None else OrbitSpec()
    scheme = InterpolationScheme.parse(scheme).value
    variant = LinearVariant.parse(variant).value
    points = [
        RunPoint(sweep_id=sweep_id, spec=replace(spec, theta=float(th)),
                 tol=tol, scheme=scheme, dx=float(dx), variant=variant,
                 offset=offset, revolutions=revolutions, budget_s=budget_s,
                 reverse=reverse)
        for th in theta_grid(n_angles)
    ]
    return run_points(points, workers)


def sweep_dx(scheme, dx_values, spec: OrbitSpec | None = None,
             n_angles: int = DEFAULT_N_ANGLES, tol: float = DEFAULT_MESH_TOL,
             variant="symmetric", revolutions: int = DEFAULT_REVOLUTIONS,
             workers: int = 1, budget_s: float | None = None):
    """Theta sweeps across lattice constants, with per-dx aggregation.

    Returns (records, per_dx_summaries, power_fit):
      * records: every theta-sweep row, concatenated in dx order;
      * per_dx_summaries: one FitResult per dx — cosine amplitude/phase for
        the linear scheme, shift mean/std for the bilinear scheme;
      * power_fit: power law of the per-dx aggregate (amplitude resp. std)
        against dx.  Bilinear rows below dx = 1e-3 are flagged unreliable
        (discretization noise exceeds what this tolerance can resolve).
    """
    scheme = InterpolationScheme.parse(scheme).value
    records: list[SweepRecord] = []
    aggregates: list[tuple[float, float]] = []
    summaries: list[FitResult] = []
    for dx in dx_values:
        rows = sweep_theta(scheme, float(dx), n_angles=n_angles, spec=spec,
                           tol=tol, variant=variant, revolutions=revolutions,
                           workers=workers, budget_s=budget_s,
                           sweep_id="sweep-dx")
        records.extend(rows)
        ok = [r for r in rows if r.status == "ok"]
        thetas = np.array([math.radians(r.theta_deg) for r in ok])
        shifts = np.array([r.shift_rad for r in ok])
        flags = []
        if scheme == "bilinear" and float(dx) <= 1e-3:
            flags.append("unreliable_small_dx")
        if len(ok) < 8:
            summaries.append(FitResult(model="none", coefficients={"dx": float(dx)},
                                       residual_rms=float("nan"), n_samples=len(ok),
                                       flags=tuple(flags) + ("insufficient_ok_rows",)))
            aggregates.append((float(dx), float("nan")))
            continue
        if scheme == "linear":
            fit = fit_cosine(thetas, shifts)
            summary = FitResult(model="cosine", coefficients=dict(fit.coefficients,
                                                                  dx=float(dx)),
                                residual_rms=fit.residual_rms,
                                n_samples=fit.n_samples,
                                flags=tuple(flags) + fit.flags)
            aggregate = fit.coefficients["amplitude"]
        else:
            fit = fit_gaussian(shifts)
            summary = FitResult(model="gaussian", coefficients=dict(fit.coefficients,
                                                                    dx=float(dx)),
                                residual_rms=fit.residual_rms,
                                n_samples=fit.n_samples,
                                flags=tuple(flags) + fit.flags)
            aggregate = fit.coefficients["std"]
        summaries.append(summary)
        aggregates.append((float(dx), float(aggregate)))

    usable = [(d, a) for (d, a), s in zip(aggregates, summaries)
              if a > 0 and not s.flags]
    if len(usable) >= 3:
        power_fit = fit_powerlaw([d for d, _ in usable], [a for _, a in usable])
    else:
        power_fit = FitResult(model="powerlaw", coefficients={"exponent": float("nan"),
                                                              "prefactor": float("nan")},
                              residual_rms=float("nan"), n_samples=len(usable),
                              flags=("insufficient_points",))
    return records, summaries, power_fit


# ---------------------------------------------------------------------------
# fitting statistics


def fit_gaussian(samples) -> FitResult:
    """Sample mean and unbiased standard deviation, with shape moments.

    residual_rms is the RMS deviation from the mean.  Constant samples are
    flagged degenerate (std = 0).
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 8:
        raise ValueError(f"need at least 8 samples for a distribution fit, got {x.size}")
    mean = float(np.mean(x))
    std = float(np.std(x, ddof=1))
    flags = []
    if std == 0.0:
        flags.append("degenerate_constant")
        skew = kurt = 0.0
    else:
        skew = float(_stats.skew(x, bias=False))
        kurt = float(_stats.kurtosis(x, bias=False))
    return FitResult(model="gaussian",
                     coefficients={"mean": mean, "std": std,
                                   "skewness": skew, "kurtosis_excess": kurt},
                     residual_rms=float(np.sqrt(np.mean((x - mean) ** 2))),
                     n_samples=int(x.size), flags=tuple(flags))


def fit_cosine(thetas, values) -> FitResult:
    """Least-squares A cos(theta + phi0) + c on the basis {cos, sin, 1}.

    A = hypot(p, q) >= 0 and phi0 = atan2(-q, p), so the phase is unique
    modulo 2 pi.  Deterministic for a fixed input order.
    """
    th = np.asarray(thetas, dtype=float)
    y = np.asarray(values, dtype=float)
    if th.shape != y.shape:
        raise ValueError("thetas and values must have matching shapes")
    if np.unique(th).size < 4:
        raise ValueError("need at least 4 distinct angles for a cosine fit")
    basis = np.column_stack([np.cos(th), np.sin(th), np.ones_like(th)])
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    p, q, c = (float(v) for v in coef)
    amplitude = math.hypot(p, q)
    phase = math.atan2(-q, p)
    resid = y - basis @ coef
    return FitResult(model="cosine",
                     coefficients={"amplitude": amplitude, "phase": phase,
                                   "offset": c, "p": p, "q": q},
                     residual_rms=float(np.sqrt(np.mean(resid ** 2))),
                     n_samples=int(th.size))


def fit_powerlaw(xs, ys) -> FitResult:
    """prefactor * x^exponent via linear regression in log-log space."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size != y.size:
        raise ValueError("xs and ys must have matching sizes")
    if x.size < 3:
        raise ValueError(f"need at least 3 points for a power-law fit, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit requires strictly positive xs and ys")
    lx, ly = np.log(x), np.log(y)
    basis = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(basis, ly, rcond=None)
    exponent, intercept = (float(v) for v in coef)
    resid = ly - basis @ coef
    return FitResult(model="powerlaw",
                     coefficients={"exponent": exponent,
                                   "prefactor": float(math.exp(intercept))},
                     residual_rms=float(np.sqrt(np.mean(resid ** 2))),
                     n_samples=int(x.size))


def classify_detectability(record: SweepRecord) -> bool:
    """True iff the spurious shift is strictly below the relativistic advance."""
    if record.abs_shift_rad is None or record.predicted_advance_rad is None:
        raise ValueError("record lacks a measured shift or a predicted advance")
    return record.abs_shift_rad < record.predicted_advance_rad


# ---------------------------------------------------------------------------
# serialization (fixed column order, 17 significant digits)


def _fmt(value, include_runtime: bool, column: str) -> str:
    if column == "runtime_s" and not include_runtime:
        return ""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def records_csv_text(records, include_runtime: bool = False) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(",".join(_fmt(getattr(r, c), include_runtime, c)
                              for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def _atomic_write(path: str, text: str):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    os.replace(tmp, path)


def write_records_csv(records, path, include_runtime: bool = False):
    """One row per record, header first; written atomically."""
    _atomic_write(os.fspath(path), records_csv_text(records, include_runtime))


def write_records_jsonl(records, path, include_runtime: bool = False):
    """JSON-lines sink with fields identical to the CSV columns."""
    lines = []
    for r in records:
        row = {}
        for c in CSV_COLUMNS:
            v = getattr(r, c)
            if c == "runtime_s" and not include_runtime:
                v = None
            row[c] = v
        lines.append(json.dumps(row, allow_nan=True))
    _atomic_write(os.fspath(path), "\n".join(lines) + "\n")
