"""Perihelion detection and per-revolution shift measurement.

Two routes, matched to the two integrator families:

  fixed-step   locate discrete radius minima, least-squares fit a polynomial
               to r(phi) over a window of samples, take its interior minimum
               (degree 2 by default; degree 4 is customary for the
               Runge-Kutta methods).
  dense        bracket sign changes of the radial velocity on a coarse scan
               of the continuous output, then refine each root with the
               Dekker/Brent solver to machine tolerance.

Angles are unwrapped by accumulating atan2 increments so a shift much
smaller than 2 pi cannot alias.  The shift over k revolutions is the total
accumulated perihelion angle minus k full turns, divided by k (not a mean of
successive differences), with the turn direction taken from the motion's
orientation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import OrbitState, diagnostics
from .integrators import DenseSolution, Trajectory
from .rootfind import BracketError, brent

__all__ = [
    "PerihelionEvent",
    "ShiftMeasurement",
    "FitError",
    "InsufficientEventsError",
    "find_perihelion_fixed",
    "perihelion_events_fixed",
    "find_perihelion_dense",
    "perihelion_events_dense",
    "measure_shift",
    "measure_fixed_shift",
    "measure_dense_shift",
]

#: below this eccentricity the perihelion direction is ill-conditioned
DEGENERATE_ECC = 1e-4


class FitError(RuntimeError):
    """Polynomial perihelion fit failed (no minimum or unusable window)."""


class InsufficientEventsError(ValueError):
    """Fewer perihelion passages than the requested revolution count."""


@dataclass(frozen=True)
class PerihelionEvent:
    """One perihelion passage: time, radius, unwrapped polar angle."""

    t: float
    r: float
    phi: float
    revolution_index: int


@dataclass(frozen=True)
class ShiftMeasurement:
    """Per-revolution perihelion drift over `revolutions_used` full turns."""

    shift_per_rev: float
    revolutions_used: int
    method: str
    events: tuple[PerihelionEvent, ...]
    quality: str = "ok"          # "ok" | "degenerate_circular"
    fit_rms: float | None = None  # worst per-event fit residual (fixed route)


def _wrap_pi(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def _event_zero(state: OrbitState) -> PerihelionEvent:
    """The start counts as passage zero: launches are at exact perihelion."""
    return PerihelionEvent(t=state.t, r=state.r, phi=state.phi, revolution_index=0)


# ---------------------------------------------------------------------------
# fixed-step route: polynomial fit of r(phi) around discrete minima


def _unwrapped_angles(traj: Trajectory) -> np.ndarray:
    return np.unwrap(np.arctan2(traj.pos[:, 1], traj.pos[:, 0]))


def _interior_minima(r: np.ndarray) -> np.ndarray:
    return np.nonzero((r[1:-1] < r[:-2]) & (r[1:-1] < r[2:]))[0] + 1


def _fit_minimum(phi_w: np.ndarray, r_w: np.ndarray, fit_order: int):
    """Interior minimum of a least-squares polynomial r(phi); returns (phi*, r*, rms)."""
    span = phi_w.max() - phi_w.min()
    if span <= 0.0:
        raise FitError("fit window has zero angular extent (collinear samples)")
    if (r_w.max() - r_w.min()) <= 1e-13 * abs(r_w.mean()):
        # radius flat to rounding: any sample is a minimum (circular orbit)
        k = len(phi_w) // 2
        return float(phi_w[k]), float(r_w[k]), 0.0

    poly = np.polynomial.Polynomial.fit(phi_w, r_w, fit_order)
    rms = float(np.sqrt(np.mean((poly(phi_w) - r_w) ** 2)))
    crit = poly.deriv().roots()
    crit = crit[np.abs(crit.imag) < 1e-9 * max(1.0, span)].real
    lo, hi = float(phi_w.min()), float(phi_w.max())
    crit = crit[(crit >= lo) & (crit <= hi)]
    minima = [c for c in crit if poly.deriv(2)(c) > 0.0]
    if not minima:
        raise FitError("fitted polynomial has no interior minimum in the window")
    phi_star = min(minima, key=lambda c: float(poly(c)))
    return float(phi_star), float(poly(phi_star)), rms


def perihelion_events_fixed(traj: Trajectory, window: int = 7, fit_order: int = 2,
                            ) -> tuple[list[PerihelionEvent], float]:
    """All perihelion passages of a fixed-step trajectory, plus the worst fit RMS.

    Passage zero is the launch point; later passages come from polynomial
    fits around each discrete radius minimum.
    """
    if window < fit_order + 1:
        raise ValueError(f"window={window} too small for a degree-{fit_order} fit")
    # metrology runs in float64 even for extended-precision trajectories
    r = np.asarray(traj.radii, dtype=np.float64)
    phi = np.asarray(_unwrapped_angles(traj), dtype=np.float64)
    t = np.asarray(traj.times, dtype=np.float64)
    half = window // 2

    events = [_event_zero(traj.state(0))]
    worst_rms = 0.0
    for k, m in enumerate(_interior_minima(r), start=1):
        lo, hi = m - half, m + half + 1
        if lo < 0 or hi > len(r):
            continue  # minimum too close to the trajectory ends for a full window
        phi_star, r_star, rms = _fit_minimum(phi[lo:hi], r[lo:hi], fit_order)
        worst_rms = max(worst_rms, rms)
        t_star = float(np.interp(phi_star, phi[lo:hi], t[lo:hi])) \
            if phi[hi - 1] > phi[lo] else \
            float(np.interp(phi_star, phi[lo:hi][::-1], t[lo:hi][::-1]))
        events.append(PerihelionEvent(t=t_star, r=r_star, phi=phi_star,
                                      revolution_index=k))
    return events, worst_rms


def find_perihelion_fixed(traj: Trajectory, window: int = 7, fit_order: int = 2,
                          ) -> PerihelionEvent:
    """First interior perihelion of the trajectory (degree-2 fit by default)."""
    events, _ = perihelion_events_fixed(traj, window, fit_order)
    if len(events) < 2:
        raise FitError("trajectory does not cover an interior radial minimum")
    return events[1]


# ---------------------------------------------------------------------------
# dense route: radial-velocity roots on the continuous output


def _scan(sol: DenseSolution, n_points: int):
    ts = np.linspace(sol.t0, sol.t_end, n_points)
    ys = sol.eval_batch(ts)
    r = np.hypot(ys[:, 0], ys[:, 1])
    rdot = (ys[:, 0] * ys[:, 2] + ys[:, 1] * ys[:, 3]) / r
    raw = np.arctan2(ys[:, 1], ys[:, 0])
    return ts, r, rdot, raw, np.unwrap(raw)


def _scan_density(sol: DenseSolution, period_hint: float | None) -> int:
    """Enough scan points that the angle advances < pi/4 per sample."""
    span = sol.t_end - sol.t0
    n = max(256, int(40.0 * span / period_hint) + 1) if period_hint else 1024
    y0 = sol.ys[0]
    r0 = math.hypot(y0[0], y0[1])
    phidot = abs(y0[0] * y0[3] - y0[1] * y0[2]) / r0**2  # fastest at perihelion
    if phidot > 0:
        n = max(n, int(span * phidot / (math.pi / 4.0)) + 2)
    return n


def find_perihelion_dense(sol: DenseSolution, bracket: tuple[float, float],
                          revolution_index: int = 0,
                          phase_anchor: tuple[float, float] | None = None,
                          ) -> PerihelionEvent:
    """Perihelion inside `bracket`, located as the root of the radial velocity.

    The bracket must contain exactly one sign change of d|pos|/dt (negative
    at the left end, positive at the right); the root is refined with the
    Brent solver to a relative tolerance of four machine epsilons.
    `phase_anchor = (t_ref, phi_ref)` pins the unwrapped angle; without it
    the returned phi is the raw atan2 value.
    """
    t_lo, t_hi = float(bracket[0]), float(bracket[1])
    if not t_hi > t_lo:
        raise ValueError(f"empty bracket ({t_lo}, {t_hi})")
    probe_t = np.linspace(t_lo, t_hi, 17)
    ys = sol.eval_batch(probe_t)
    rdot = (ys[:, 0] * ys[:, 2] + ys[:, 1] * ys[:, 3]) / np.hypot(ys[:, 0], ys[:, 1])
    signs = np.sign(rdot)
    changes = int(np.sum(signs[1:] * signs[:-1] < 0))
    if changes > 1:
        raise BracketError(f"bracket ({t_lo:.6g}, {t_hi:.6g}) contains {changes} "
                           "radial-velocity sign changes; narrow it")
    if not (rdot[0] < 0.0 < rdot[-1]):
        raise BracketError(f"no perihelion in bracket ({t_lo:.6g}, {t_hi:.6g}): "
                           f"radial velocity runs {rdot[0]:.3g} -> {rdot[-1]:.3g}")

    t_star = brent(sol.radial_velocity, t_lo, t_hi)
    y = sol.eval_batch(np.array([t_star]))[0]
    r_star = math.hypot(y[0], y[1])
    phi_raw = math.atan2(y[1], y[0])
    if phase_anchor is not None:
        _, phi_ref = phase_anchor
        phi_star = phi_ref + _wrap_pi(phi_raw - phi_ref)
    else:
        phi_star = phi_raw
    return PerihelionEvent(t=float(t_star), r=r_star, phi=phi_star,
                           revolution_index=revolution_index)


def perihelion_events_dense(sol: DenseSolution, period_hint: float | None = None,
                            ) -> list[PerihelionEvent]:
    """All perihelion passages in the solution span (passage zero = start).

    Brackets are seeded by a coarse scan of the continuous output, then each
    root is refined to machine tolerance.
    """
    n = _scan_density(sol, period_hint)
    ts, r, rdot, raw, unwrapped = _scan(sol, n)

    events = [_event_zero(OrbitState(sol.t0, sol.ys[0, :2].copy(), sol.ys[0, 2:].copy()))]
    minima = np.nonzero((rdot[:-1] < 0.0) & (rdot[1:] >= 0.0))[0]
    k = 0
    for idx in minima:
        if idx == 0 and sol.t0 == ts[0] and abs(rdot[0]) < 1e-12 * max(1.0, abs(rdot).max()):
            continue  # the launch point itself
        k += 1
        anchor = (float(ts[idx]), float(unwrapped[idx]))
        ev = find_perihelion_dense(sol, (float(ts[idx]), float(ts[idx + 1])),
                                   revolution_index=k, phase_anchor=anchor)
        events.append(ev)
    return events


# ---------------------------------------------------------------------------
# shift measurement


def measure_shift(events, k: int, method: str = "", quality: str = "ok",
                  fit_rms: float | None = None) -> ShiftMeasurement:
    """Shift per revolution from the total angle accumulated over k turns.

    shift = (phi_k - phi_0 - 2 pi k s) / k with s the turn direction, so a
    clockwise (velocity-reversed) orbit reports the sign-flipped drift.
    """
    events = sorted(events, key=lambda e: e.t)
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(events) < k + 1:
        raise InsufficientEventsError(
            f"need {k + 1} perihelion events for {k} revolutions, got {len(events)}")
    total = events[k].phi - events[0].phi
    s = 1.0 if total >= 0 else -1.0
    shift = (total - 2.0 * math.pi * k * s) / k
    return ShiftMeasurement(shift_per_rev=shift, revolutions_used=k, method=method,
                            events=tuple(events[:k + 1]), quality=quality,
                            fit_rms=fit_rms)


def _quality_for(state0: OrbitState, gm: float) -> str:
    return "degenerate_circular" if diagnostics(state0, gm).ecc < DEGENERATE_ECC else "ok"


def measure_fixed_shift(traj: Trajectory, revolutions: int = 3, window: int = 7,
                        fit_order: int = 2, gm: float | None = None) -> ShiftMeasurement:
    """Fixed-step pipeline: events via polynomial fits, then total-angle division."""
    events, fit_rms = perihelion_events_fixed(traj, window, fit_order)
    quality = "ok"
    if gm is not None:
        quality = _quality_for(traj.state(0), gm)
    return measure_shift(events, revolutions,
                         method=f"{traj.method.value}+poly{fit_order}",
                         quality=quality, fit_rms=fit_rms)


def measure_dense_shift(sol: DenseSolution, revolutions: int = 3,
                        period_hint: float | None = None,
                        gm: float | None = None) -> ShiftMeasurement:
    """Dense pipeline: machine-precision events, then total-angle division."""
    events = perihelion_events_dense(sol, period_hint)
    quality = "ok"
    if gm is not None:
        quality = _quality_for(OrbitState(sol.t0, sol.ys[0, :2].copy(),
                                          sol.ys[0, 2:].copy()), gm)
    return measure_shift(events, revolutions, method="dense+brent",
                         quality=quality)
