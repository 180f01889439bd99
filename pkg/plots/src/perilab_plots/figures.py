"""Figure renderers for sweep CSV files.

Rendering is a pure function of the input bytes and the figure options:
fixed canvas sizes and fonts, vector (SVG) output with a pinned hash salt
and no timestamp metadata, so re-rendering a file is byte-identical.

Kinds:
  h-sweep      |shift| per revolution vs step size, per method, log-log,
               with the relativistic advance as a horizontal line and
               green/red detectability shading.
  beta         |shift| vs the relativistic-parameter ratio, log-log, with
               the (linear-in-beta) advance line and shading.
  ecc          |shift| vs eccentricity, log-y, with the advance curve.
  theta-cosine lattice shift/dx vs initial angle with the fitted cosine
               overlays, one series per dx.
  theta-hist   distribution of lattice shifts per dx with a Gaussian overlay.
  dx-scaling   per-dx aggregate (cosine amplitude or ensemble std) vs dx,
               log-log, with the fitted power law and a +/-50% band.
  orbits       orbit gallery from trajectory CSVs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .schema import Row, SchemaError, load_rows, load_trajectory

__all__ = ["FigureSpec", "KINDS", "render"]

GREEN = "#caf0c3"
RED = "#f6c8c4"
SERIES = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]

_SVG_SALT = "perilab-plots"


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: figure kind, input path(s), output path, overlays."""

    kind: str
    inputs: tuple[str, ...]
    output: str
    fits: dict | None = None      # optional sidecar aggregates (sweep-dx)
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"choose from {sorted(KINDS)}")
        if not self.inputs:
            raise ValueError("at least one input file is required")


def _figure(width=6.4, height=4.4) -> Figure:
    fig = Figure(figsize=(width, height), dpi=100)
    return fig


def _save(fig: Figure, path: str):
    with matplotlib.rc_context({"svg.hashsalt": _SVG_SALT}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def _ok(rows: list[Row]) -> list[Row]:
    good = [r for r in rows if r.status == "ok" and r.shift_rad is not None]
    if not good:
        raise SchemaError("no usable rows (every point failed)")
    return good


def _advance_level(rows: list[Row]) -> float:
    values = [r.predicted_advance_rad for r in rows
              if r.predicted_advance_rad is not None]
    if not values:
        raise SchemaError("rows carry no predicted advance")
    return float(np.median(values))


def _cosine_fit(thetas, values):
    basis = np.column_stack([np.cos(thetas), np.sin(thetas), np.ones_like(thetas)])
    coef, *_ = np.linalg.lstsq(basis, values, rcond=None)
    p, q, c = (float(v) for v in coef)
    return math.hypot(p, q), math.atan2(-q, p), c


def _powerlaw_fit(xs, ys):
    lx, ly = np.log(xs), np.log(ys)
    coef = np.polyfit(lx, ly, 1)
    return float(coef[0]), float(math.exp(coef[1]))


def _shade_detectability(ax, advance: float, x_span, log_floor: float):
    ax.axhline(advance, color="k", lw=1.2, zorder=3)
    ax.axhspan(log_floor, advance, color=GREEN, zorder=0)
    ax.axhspan(advance, advance * 1e12, color=RED, zorder=0)
    ax.set_xlim(*x_span)


def _marker_colors(rows: list[Row]) -> list[str]:
    return ["#1a7a1a" if r.detectable else "#a51d1d" for r in rows]


def _render_h_sweep(spec: FigureSpec) -> Figure:
    rows = _ok(load_rows(spec.inputs[0]))
    advance = _advance_level(rows)
    methods = sorted({r.method for r in rows})
    fig = _figure()
    ax = fig.add_subplot()
    floor = min(r.abs_shift_rad for r in rows if r.abs_shift_rad > 0) / 1e3
    hs = [r.h for r in rows if r.h]
    _shade_detectability(ax, advance, (min(hs) / 1.5, max(hs) * 1.5),
                         min(floor, advance / 1e3))
    for color, method in zip(SERIES, methods):
        series = sorted((r for r in rows if r.method == method),
                        key=lambda r: r.h)
        ax.plot([r.h for r in series],
                [max(r.abs_shift_rad, floor) for r in series],
                "o-", ms=4, lw=1.2, color=color, label=method, zorder=4)
        for r in series:
            ax.plot([r.h], [max(r.abs_shift_rad, floor)], "o", ms=4,
                    color=_marker_colors([r])[0], zorder=5)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("step size h [Ms]")
    ax.set_ylabel("|perihelion shift| per revolution [rad]")
    ax.set_title(spec.title or "spurious shift vs step size")
    ax.legend(loc="lower right", fontsize=8)
    return fig


def _render_parameter_sweep(spec: FigureSpec, parameter: str) -> Figure:
    rows = _ok(load_rows(spec.inputs[0]))
    methods = sorted({r.method for r in rows})
    fig = _figure()
    ax = fig.add_subplot()
    xs_all = [getattr(r, parameter) for r in rows if getattr(r, parameter)]
    floor = min(r.abs_shift_rad for r in rows if r.abs_shift_rad > 0) / 1e3

    # the advance varies along these sweeps: draw it as a curve and shade
    # between it and the axes
    series0 = sorted(rows, key=lambda r: getattr(r, parameter))
    adv_x = [getattr(r, parameter) for r in series0]
    adv_y = [r.predicted_advance_rad for r in series0]
    ax.plot(adv_x, adv_y, "k-", lw=1.2, zorder=3, label="relativistic advance")
    ax.fill_between(adv_x, floor, adv_y, color=GREEN, zorder=0)
    ax.fill_between(adv_x, adv_y, max(r.abs_shift_rad for r in rows) * 10,
                    color=RED, zorder=0)

    for color, method in zip(SERIES, methods):
        series = sorted((r for r in rows if r.method == method),
                        key=lambda r: getattr(r, parameter))
        ax.plot([getattr(r, parameter) for r in series],
                [max(r.abs_shift_rad, floor) for r in series],
                "o-", ms=4, lw=1.2, color=color, label=method, zorder=4)
    if parameter == "beta":
        ax.set_xscale("log")
        ax.set_xlabel("relativistic parameter ratio beta")
    else:
        ax.set_xlabel("eccentricity e")
    ax.set_yscale("log")
    ax.set_ylabel("|perihelion shift| per revolution [rad]")
    ax.set_title(spec.title or f"detectability vs {parameter}")
    ax.legend(loc="upper left", fontsize=8)
    return fig


def _rows_by_dx(rows: list[Row]) -> dict[float, list[Row]]:
    groups: dict[float, list[Row]] = {}
    for r in rows:
        if r.dx is None:
            raise SchemaError("theta/dx figures need the dx column filled")
        groups.setdefault(r.dx, []).append(r)
    return dict(sorted(groups.items()))


def _render_theta_cosine(spec: FigureSpec) -> Figure:
    rows = _ok(sum((load_rows(p) for p in spec.inputs), []))
    fig = _figure()
    ax = fig.add_subplot()
    grid = np.linspace(0.0, 360.0, 721)
    for color, (dx, group) in zip(SERIES, _rows_by_dx(rows).items()):
        thetas = np.array([math.radians(r.theta_deg) for r in group])
        scaled = np.array([r.shift_rad / dx for r in group])
        amp, phase, offset = _cosine_fit(thetas, scaled)
        order = np.argsort(thetas)
        ax.plot(np.degrees(thetas[order]), scaled[order], "o", ms=3,
                color=color, label=f"dx = {dx:g}")
        ax.plot(grid, amp * np.cos(np.radians(grid) + phase) + offset, "-",
                lw=1.0, color=color,
                label=f"{amp:.3f} cos(th + {phase:.2f})")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("initial perihelion angle theta [deg]")
    ax.set_ylabel("shift / dx [rad/Gm]")
    ax.set_title(spec.title or "lattice shift vs initial angle")
    ax.legend(loc="upper right", fontsize=7)
    return fig


def _render_theta_hist(spec: FigureSpec) -> Figure:
    rows = _ok(sum((load_rows(p) for p in spec.inputs), []))
    fig = _figure()
    ax = fig.add_subplot()
    for color, (dx, group) in zip(SERIES, _rows_by_dx(rows).items()):
        shifts = np.array([r.shift_rad for r in group])
        mean = float(np.mean(shifts))
        std = float(np.std(shifts, ddof=1))
        centered = (shifts - mean) / dx**1.3
        counts, edges = np.histogram(centered, bins=15)
        centers = 0.5 * (edges[:-1] + edges[1:])
        width = edges[1] - edges[0]
        ax.bar(centers, counts, width=width * 0.9, alpha=0.45, color=color,
               label=f"dx = {dx:g} (std {std:.2e})")
        if std > 0:
            grid = np.linspace(edges[0], edges[-1], 400)
            s_scaled = std / dx**1.3
            gauss = counts.sum() * width * np.exp(-0.5 * (grid / s_scaled) ** 2) \
                / (s_scaled * math.sqrt(2 * math.pi))
            ax.plot(grid, gauss, "-", lw=1.2, color=color)
    ax.set_xlabel("(shift - mean) / dx^1.3 [rad/Gm^1.3]")
    ax.set_ylabel("count")
    ax.set_title(spec.title or "lattice shift distributions")
    ax.legend(loc="upper right", fontsize=7)
    return fig


def _render_dx_scaling(spec: FigureSpec) -> Figure:
    rows = _ok(sum((load_rows(p) for p in spec.inputs), []))
    scheme = rows[0].scheme or "linear"
    aggregates: list[tuple[float, float]] = []
    if spec.fits:
        for entry in spec.fits.get("per_dx", []):
            coeff = entry.get("coefficients", {})
            value = coeff.get("amplitude", coeff.get("std"))
            if value and value > 0:
                aggregates.append((float(coeff["dx"]), float(value)))
    if not aggregates:
        for dx, group in _rows_by_dx(rows).items():
            thetas = np.array([math.radians(r.theta_deg) for r in group])
            shifts = np.array([r.shift_rad for r in group])
            if scheme == "linear":
                value, _, _ = _cosine_fit(thetas, shifts)
            else:
                value = float(np.std(shifts, ddof=1))
            if value > 0:
                aggregates.append((dx, value))
    if len(aggregates) < 2:
        raise SchemaError("dx-scaling needs at least two usable dx groups")

    xs = np.array([d for d, _ in aggregates])
    ys = np.array([v for _, v in aggregates])
    exponent, prefactor = _powerlaw_fit(xs, ys)

    fig = _figure()
    ax = fig.add_subplot()
    grid = np.geomspace(xs.min() / 1.3, xs.max() * 1.3, 200)
    central = prefactor * grid**exponent
    ax.fill_between(grid, 0.5 * central, 1.5 * central, color="0.85",
                    label="+/-50% of fit")
    ax.plot(grid, central, "-", lw=1.2, color=SERIES[0],
            label=f"{prefactor:.3g} dx^{exponent:.2f}")
    ax.plot(xs, ys, "o", ms=5, color=SERIES[1], zorder=4, label=f"{scheme} data")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("lattice constant dx [Gm]")
    label = "cosine amplitude" if scheme == "linear" else "ensemble std"
    ax.set_ylabel(f"{label} of shift [rad]")
    ax.set_title(spec.title or f"{scheme} shift scaling with dx")
    ax.legend(loc="upper left", fontsize=8)
    return fig


def _render_orbits(spec: FigureSpec) -> Figure:
    fig = _figure(5.6, 5.6)
    ax = fig.add_subplot()
    for color, path in zip(SERIES, spec.inputs):
        data = load_trajectory(path)
        ax.plot(data[:, 1], data[:, 2], "-", lw=0.8, color=color,
                label=path.rsplit("/", 1)[-1])
    ax.plot([0.0], [0.0], "*", ms=12, color="#c9a227", zorder=5)
    ax.set_aspect("equal")
    ax.set_xlabel("x [Gm]")
    ax.set_ylabel("y [Gm]")
    ax.set_title(spec.title or "orbit gallery")
    ax.legend(loc="upper right", fontsize=7)
    return fig


KINDS = {
    "h-sweep": _render_h_sweep,
    "beta": lambda spec: _render_parameter_sweep(spec, "beta"),
    "ecc": lambda spec: _render_parameter_sweep(spec, "ecc"),
    "theta-cosine": _render_theta_cosine,
    "theta-hist": _render_theta_hist,
    "dx-scaling": _render_dx_scaling,
    "orbits": _render_orbits,
}


def render(spec: FigureSpec) -> str:
    """Render the figure and write the SVG; returns the output path."""
    fig = KINDS[spec.kind](spec)
    _save(fig, spec.output)
    return spec.output
