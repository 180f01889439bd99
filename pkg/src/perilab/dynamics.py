"""Planar two-body dynamics: units, state types, force models, orbit parametrization.

The central mass sits at the coordinate origin and the reduced one-body
problem is solved (test particle, m << M).  All vectors live in R^2.
Working units: length in Gm (1e9 m), time in Ms (1e6 s), mass in Earth
masses; the Sun's gravitational parameter is then GM = 132733 Gm^3/Ms^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "UnitSystem",
    "UNITS",
    "RAD_TO_ARCSEC",
    "GM_SUN",
    "ReferenceOrbit",
    "MERCURY",
    "OrbitState",
    "OrbitSpec",
    "Diagnostics",
    "ForceModel",
    "newtonian_force",
    "relativistic_force",
    "newtonian_acceleration",
    "relativistic_acceleration",
    "initial_conditions",
    "reverse_velocity",
    "diagnostics",
    "relativistic_advance_prediction",
    "predicted_advance",
    "kepler_period",
    "vec2",
]

RAD_TO_ARCSEC = 3600.0 * 180.0 / math.pi

#: Sun's gravitational parameter in Gm^3/Ms^2.
GM_SUN = 132733.0

# force-kernel selector codes, shared with the numba kernels
KIND_NEWTONIAN = 0
KIND_RELATIVISTIC = 1
KIND_MESH_LINEAR = 2
KIND_MESH_LINEAR_PRINTED = 3
KIND_MESH_BILINEAR = 4


@dataclass(frozen=True)
class UnitSystem:
    """Working units of the code: Gm, Ms, Earth masses."""

    length_m: float = 1e9
    time_s: float = 1e6
    mass_kg: float = 5.972e24

    @property
    def speed_m_s(self) -> float:
        return self.length_m / self.time_s

    def to_arcsec(self, angle_rad: float) -> float:
        return angle_rad * RAD_TO_ARCSEC


UNITS = UnitSystem()


def vec2(x, y=None, dtype=np.float64) -> np.ndarray:
    """Validated planar vector: finite components, shape (2,)."""
    v = np.array([x, y], dtype=dtype) if y is not None else np.asarray(x, dtype=dtype)
    if v.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector component: {v}")
    return v


@dataclass(frozen=True)
class OrbitState:
    """Phase-space point (t, pos, vel) of the test particle.

    Arrays are copied and frozen on construction; states are immutable
    values and safe to share between workers.
    """

    t: float
    pos: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        pos = vec2(self.pos, dtype=np.asarray(self.pos).dtype)
        vel = vec2(self.vel, dtype=np.asarray(self.vel).dtype)
        if float(pos[0]) == 0.0 and float(pos[1]) == 0.0:
            raise ValueError("particle at the central singularity (|pos| = 0)")
        pos.setflags(write=False)
        vel.setflags(write=False)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "pos", pos)
        object.__setattr__(self, "vel", vel)

    @property
    def r(self) -> float:
        return float(np.hypot(self.pos[0], self.pos[1]))

    @property
    def phi(self) -> float:
        return float(np.arctan2(self.pos[1], self.pos[0]))

    def as_array(self) -> np.ndarray:
        """Flat (x, y, vx, vy) vector for the integrator kernels."""
        return np.array([self.pos[0], self.pos[1], self.vel[0], self.vel[1]],
                        dtype=np.float64)


@dataclass(frozen=True)
class ReferenceOrbit:
    """Reference orbit constants (Mercury-Sun by default).

    The dynamical eccentricity implied by (r_per, v_per, gm) is 0.2055974...,
    slightly below the catalogue 0.205630 because v_per is rounded to four
    digits; all derived quantities use the self-consistent dynamical value.
    """

    r_per: float = 46.001272        # perihelion distance, Gm
    v_per: float = 58.98            # perihelion speed, Gm/Ms
    gm: float = GM_SUN              # Gm^3/Ms^2
    r_sch: float = 2.95e-6          # Schwarzschild radius of the central mass, Gm

    def __post_init__(self):
        if self.r_per <= 0 or self.v_per <= 0 or self.gm <= 0:
            raise ValueError("reference orbit requires positive r_per, v_per, gm")
        if self.r_sch < 0:
            raise ValueError("r_sch must be non-negative")
        if self.ecc >= 1 or self.ecc < 0:
            raise ValueError(f"reference orbit is not a bound ellipse (e = {self.ecc})")

    @property
    def ecc(self) -> float:
        """Dynamical eccentricity: r v^2/GM - 1 evaluated at perihelion."""
        return self.r_per * self.v_per**2 / self.gm - 1.0

    @property
    def upsilon(self) -> float:
        """Relativistic parameter r_sch / r_per."""
        return self.r_sch / self.r_per

    @property
    def semi_major(self) -> float:
        return self.r_per / (1.0 - self.ecc)

    @property
    def period(self) -> float:
        return kepler_period(self.semi_major, self.gm)


MERCURY = ReferenceOrbit()


@dataclass(frozen=True)
class OrbitSpec:
    """Orbit family parametrized by (beta, e, theta) relative to a reference.

    beta rescales the relativistic parameter (Upsilon = beta * Upsilon_ref)
    at fixed central mass: r_per -> r_per/beta, v_per -> sqrt(beta) v_per,
    which multiplies the period by beta^(-3/2).  ecc then re-shapes the orbit
    at fixed semi-major axis (ecc=None keeps the reference eccentricity).
    theta rotates the perihelion direction against the lattice x-axis; the
    particle starts at perihelion moving counterclockwise.
    """

    beta: float = 1.0
    ecc: float | None = None
    theta: float = 0.0
    reference: ReferenceOrbit = field(default_factory=ReferenceOrbit)

    def __post_init__(self):
        if not (self.beta > 0):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.ecc is not None and not (0.0 <= self.ecc < 1.0):
            raise ValueError(f"ecc must lie in [0, 1), got {self.ecc}")
        if not (0 < self.upsilon < 1):
            raise ValueError(
                f"relativistic parameter Upsilon = {self.upsilon:.3g} outside (0, 1)")
        if self.r_per <= self.r_sch:
            raise ValueError("perihelion inside the Schwarzschild radius")

    @property
    def gm(self) -> float:
        return self.reference.gm

    @property
    def r_sch(self) -> float:
        return self.reference.r_sch

    @property
    def ecc_effective(self) -> float:
        return self.reference.ecc if self.ecc is None else self.ecc

    @property
    def r_per(self) -> float:
        r = self.reference.r_per / self.beta
        if self.ecc is not None:
            # hold the semi-major axis fixed while moving to eccentricity e
            a = r / (1.0 - self.reference.ecc)
            r = a * (1.0 - self.ecc)
        return r

    @property
    def v_per(self) -> float:
        if self.ecc is None:
            return self.reference.v_per * math.sqrt(self.beta)
        # vis-viva at the new perihelion: v^2 = GM (1 + e) / r_per
        return math.sqrt(self.gm * (1.0 + self.ecc) / self.r_per)

    @property
    def upsilon(self) -> float:
        return self.r_sch / self.r_per

    @property
    def semi_major(self) -> float:
        return self.r_per / (1.0 - self.ecc_effective)

    @property
    def period(self) -> float:
        return kepler_period(self.semi_major, self.gm)

    def with_reference(self, **changes) -> "OrbitSpec":
        return replace(self, reference=replace(self.reference, **changes))


@dataclass(frozen=True)
class Diagnostics:
    """Conserved quantities of the exact Kepler problem (per unit mass)."""

    energy: float          # v^2/2 - GM/r
    ang_mom: float         # l = x vy - y vx
    ecc_vector: np.ndarray  # Runge-Lenz direction, points at perihelion

    @property
    def ecc(self) -> float:
        return float(np.hypot(self.ecc_vector[0], self.ecc_vector[1]))


@dataclass(frozen=True)
class ForceModel:
    """Acceleration evaluator a(t, pos, vel), dispatchable inside numba kernels.

    `kind` selects the compiled kernel; `params` carries its constants.
    Instances are immutable and cheap to ship to worker processes.
    """

    kind: int
    params: np.ndarray
    label: str

    def __post_init__(self):
        p = np.ascontiguousarray(self.params, dtype=np.float64)
        p.setflags(write=False)
        object.__setattr__(self, "params", p)

    def acceleration(self, t, pos, vel) -> np.ndarray:
        from ._kernels import accel_eval

        ax, ay = accel_eval(float(pos[0]), float(pos[1]),
                            float(vel[0]), float(vel[1]),
                            self.kind, self.params)
        return np.array([ax, ay])

    def __call__(self, t, pos, vel) -> np.ndarray:
        return self.acceleration(t, pos, vel)


def newtonian_force(gm: float = GM_SUN) -> ForceModel:
    """Exact Newtonian point-mass attraction -GM r / |r|^3."""
    if gm <= 0:
        raise ValueError("gm must be positive")
    return ForceModel(KIND_NEWTONIAN, np.array([gm]), "newtonian")


def relativistic_force(gm: float = GM_SUN, r_sch: float = MERCURY.r_sch) -> ForceModel:
    """Newtonian attraction plus the Schwarzschild orbit correction.

    The planar test-particle orbit obeys u'' + u = GM/l^2 + (3/2) r_sch u^2
    with u = 1/r.  Inverting that orbit equation back to Cartesian form gives
    the central acceleration -(GM/r^2 + (3/2) r_sch l^2 / r^4) r_hat, where
    l = x vy - y vx is evaluated from the instantaneous state (exact, since a
    central force conserves l along the trajectory).  Setting r_sch = 0
    recovers the Newtonian force.
    """
    if gm <= 0:
        raise ValueError("gm must be positive")
    if r_sch < 0:
        raise ValueError("r_sch must be non-negative")
    return ForceModel(KIND_RELATIVISTIC, np.array([gm, r_sch]), "relativistic")


def _check_not_singular(state: OrbitState):
    if state.r == 0.0:
        raise ValueError("acceleration undefined at |pos| = 0")


def newtonian_acceleration(state: OrbitState, gm: float = GM_SUN) -> np.ndarray:
    """-GM pos / |pos|^3 at the given state."""
    _check_not_singular(state)
    r = state.r
    return (-gm / r**3) * np.asarray(state.pos, dtype=float)


def relativistic_acceleration(state: OrbitState, gm: float = GM_SUN,
                              r_sch: float = MERCURY.r_sch) -> np.ndarray:
    """Schwarzschild-corrected central acceleration (see relativistic_force)."""
    _check_not_singular(state)
    x, y = state.pos
    vx, vy = state.vel
    r2 = x * x + y * y
    r = math.sqrt(r2)
    ell = x * vy - y * vx
    mag = gm / r2 + 1.5 * r_sch * ell * ell / (r2 * r2)
    return np.array([-mag * x / r, -mag * y / r])


def initial_conditions(spec: OrbitSpec) -> OrbitState:
    """Start state at perihelion for the (beta, e, theta) orbit family.

    pos = r_per (cos theta, sin theta); vel = v_per (-sin theta, cos theta),
    i.e. velocity perpendicular to the radius, counterclockwise.
    """
    r_per, v_per = spec.r_per, spec.v_per
    c, s = math.cos(spec.theta), math.sin(spec.theta)
    return OrbitState(
        t=0.0,
        pos=np.array([r_per * c, r_per * s]),
        vel=np.array([-v_per * s, v_per * c]),
    )


def reverse_velocity(state: OrbitState) -> OrbitState:
    """Same point with the velocity flipped (time-reversed orbit)."""
    return OrbitState(state.t, state.pos, -np.asarray(state.vel))


def diagnostics(state: OrbitState, gm: float = GM_SUN) -> Diagnostics:
    """Energy, angular momentum and Runge-Lenz vector of the state."""
    _check_not_singular(state)
    x, y = (float(v) for v in state.pos)
    vx, vy = (float(v) for v in state.vel)
    r = math.hypot(x, y)
    v2 = vx * vx + vy * vy
    ell = x * vy - y * vx
    energy = 0.5 * v2 - gm / r
    # (v x l - GM r_hat)/GM restricted to the plane
    e_vec = np.array([(vy * ell) / gm - x / r, (-vx * ell) / gm - y / r])
    return Diagnostics(energy=energy, ang_mom=ell, ecc_vector=e_vec)


def relativistic_advance_prediction(a: float, e: float, r_sch: float) -> float:
    """Relativistic perihelion advance per period: 3 pi r_sch / (a (1 - e^2))."""
    if a <= 0:
        raise ValueError("semi-major axis must be positive")
    if not (0.0 <= e < 1.0):
        raise ValueError(f"eccentricity must lie in [0, 1), got {e}")
    return 3.0 * math.pi * r_sch / (a * (1.0 - e * e))


def predicted_advance(spec: OrbitSpec) -> float:
    """Relativistic advance per period for the spec's transformed orbit."""
    return relativistic_advance_prediction(spec.semi_major, spec.ecc_effective,
                                           spec.r_sch)


def kepler_period(a: float, gm: float = GM_SUN) -> float:
    """Third-law period 2 pi sqrt(a^3 / GM)."""
    if a <= 0 or gm <= 0:
        raise ValueError("a and gm must be positive")
    return 2.0 * math.pi * math.sqrt(a**3 / gm)
