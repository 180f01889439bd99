"""Time integrators: the four fixed-step schemes and an adaptive dense-output core.

Fixed-step methods (with their nominal global orders):

  euler     1  velocity kick first, position drift with the updated velocity
  leapfrog  2  kick-drift-kick
  rk2       2  midpoint rule
  rk4       4  classical four-stage scheme

The adaptive integrator is an embedded 8th-order Runge-Kutta pair with a
7th-order continuous extension; its contract is the local tolerance and the
dense-output guarantees, not the particular scheme.  Near force
discontinuities it survives by shrinking the step, recovering afterwards.

Single steps accept any callable a(t, pos, vel) and preserve the input float
dtype (numpy longdouble works for extended-precision studies).  The whole-run
entry points take a ForceModel and run compiled; `integrate_fixed` falls back
to the generic Python loop when an observer or a plain callable is supplied.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dynamics import ForceModel, OrbitState

__all__ = [
    "FixedStepMethod",
    "Trajectory",
    "DenseSolution",
    "IntegrationError",
    "StepSizeUnderflowError",
    "StepLimitError",
    "CollisionError",
    "step_euler",
    "step_leapfrog",
    "step_rk2",
    "step_rk4",
    "integrate_fixed",
    "integrate_adaptive",
    "dense_eval",
]


class FixedStepMethod(enum.Enum):
    EULER = "euler"
    LEAPFROG = "leapfrog"
    RK2 = "rk2"
    RK4 = "rk4"

    @property
    def nominal_order(self) -> int:
        return {"euler": 1, "leapfrog": 2, "rk2": 2, "rk4": 4}[self.value]

    @property
    def kernel_code(self) -> int:
        return {
            "euler": _kernels.METHOD_EULER,
            "leapfrog": _kernels.METHOD_LEAPFROG,
            "rk2": _kernels.METHOD_RK2,
            "rk4": _kernels.METHOD_RK4,
        }[self.value]

    @classmethod
    def parse(cls, name) -> "FixedStepMethod":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown fixed-step method {name!r}; "
                             f"choose from {[m.value for m in cls]}") from None


class IntegrationError(RuntimeError):
    """Base class for integrator failures."""


class StepSizeUnderflowError(IntegrationError):
    def __init__(self, t: float, h_min: float):
        super().__init__(f"step size fell below h_min={h_min:.3e} at t={t:.9g}")
        self.t = t
        self.h_min = h_min


class StepLimitError(IntegrationError):
    def __init__(self, t: float, max_steps: int):
        super().__init__(f"exceeded max_steps={max_steps} at t={t:.9g}")
        self.t = t
        self.max_steps = max_steps


class CollisionError(IntegrationError):
    def __init__(self, t: float, r: float):
        super().__init__(f"particle fell below the collision radius at t={t:.9g} (r={r:.3e})")
        self.t = t
        self.r = r


@dataclass(frozen=True)
class Trajectory:
    """Uniformly spaced states t0 + n h produced by a fixed-step method."""

    t0: float
    h: float
    method: FixedStepMethod
    pos: np.ndarray   # (n+1, 2)
    vel: np.ndarray   # (n+1, 2)

    def __post_init__(self):
        self.pos.setflags(write=False)
        self.vel.setflags(write=False)

    def __len__(self) -> int:
        return self.pos.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(len(self))

    @property
    def radii(self) -> np.ndarray:
        return np.hypot(self.pos[:, 0], self.pos[:, 1])

    def state(self, i: int) -> OrbitState:
        return OrbitState(self.t0 + self.h * i, self.pos[i].copy(), self.vel[i].copy())


def _eval_accel(accel, t, pos, vel):
    a = np.asarray(accel(t, pos, vel))
    if a.shape != (2,):
        raise ValueError(f"acceleration callable returned shape {a.shape}, expected (2,)")
    return a


def _check_h(h):
    if not (h > 0):
        raise ValueError(f"step size must be positive, got {h}")


def step_euler(state: OrbitState, h: float, accel) -> OrbitState:
    """One kick-then-drift step: v += a(t, x) h, then x += v_new h."""
    _check_h(h)
    a = _eval_accel(accel, state.t, state.pos, state.vel)
    v1 = state.vel + a * h
    x1 = state.pos + v1 * h
    return OrbitState(state.t + h, x1, v1)


def step_leapfrog(state: OrbitState, h: float, accel) -> OrbitState:
    """One kick-drift-kick step.

    The closing kick evaluates the force at the new position with the
    half-step velocity (the scheme is explicit; with velocity-dependent
    forces this is the usual approximation).
    """
    _check_h(h)
    a0 = _eval_accel(accel, state.t, state.pos, state.vel)
    vh = state.vel + a0 * (h / 2)
    x1 = state.pos + vh * h
    a1 = _eval_accel(accel, state.t + h, x1, vh)
    v1 = vh + a1 * (h / 2)
    return OrbitState(state.t + h, x1, v1)


def step_rk2(state: OrbitState, h: float, accel) -> OrbitState:
    """One midpoint step: advance the full step with the half-step stage."""
    _check_h(h)
    k1x = state.vel
    k1v = _eval_accel(accel, state.t, state.pos, state.vel)
    k2x = state.vel + k1v * (h / 2)
    k2v = _eval_accel(accel, state.t + h / 2, state.pos + k1x * (h / 2), k2x)
    return OrbitState(state.t + h, state.pos + k2x * h, state.vel + k2v * h)


def step_rk4(state: OrbitState, h: float, accel) -> OrbitState:
    """One classical RK4 step with weights (1/6, 1/3, 1/3, 1/6)."""
    _check_h(h)
    t, x, v = state.t, state.pos, state.vel
    k1x = v
    k1v = _eval_accel(accel, t, x, v)
    k2x = v + k1v * (h / 2)
    k2v = _eval_accel(accel, t + h / 2, x + k1x * (h / 2), k2x)
    k3x = v + k2v * (h / 2)
    k3v = _eval_accel(accel, t + h / 2, x + k2x * (h / 2), k3x)
    k4x = v + k3v * h
    k4v = _eval_accel(accel, t + h, x + k3x * h, k4x)
    x1 = x + (h / 6) * (k1x + 2 * k2x + 2 * k3x + k4x)
    v1 = v + (h / 6) * (k1v + 2 * k2v + 2 * k3v + k4v)
    return OrbitState(t + h, x1, v1)


_STEPPERS = {
    FixedStepMethod.EULER: step_euler,
    FixedStepMethod.LEAPFROG: step_leapfrog,
    FixedStepMethod.RK2: step_rk2,
    FixedStepMethod.RK4: step_rk4,
}


def integrate_fixed(state0: OrbitState, h: float, n_steps: int, method,
                    accel, observer=None, collision_radius: float | None = None,
                    ) -> Trajectory:
    """Apply the selected stepper n_steps times; returns n_steps + 1 states.

    `accel` is a ForceModel (compiled fast path) or any callable
    a(t, pos, vel).  `observer(i, state)` is invoked on every produced state
    (forcing the Python path).  Aborts with CollisionError if the particle
    sinks below `collision_radius` (default 1e-6 |pos0|).
    """
    method = FixedStepMethod.parse(method)
    _check_h(h)
    if not (isinstance(n_steps, (int, np.integer)) and n_steps >= 1):
        raise ValueError(f"n_steps must be a positive integer, got {n_steps}")
    if collision_radius is None:
        collision_radius = 1e-6 * state0.r

    fast = (isinstance(accel, ForceModel) and observer is None
            and np.asarray(state0.pos).dtype == np.float64)
    if fast:
        ys, status, done = _kernels.fixed_loop(
            state0.as_array(), state0.t, float(h), int(n_steps),
            method.kernel_code, accel.kind, accel.params,
            collision_radius * collision_radius)
        traj = Trajectory(state0.t, float(h), method,
                          np.ascontiguousarray(ys[:, :2]),
                          np.ascontiguousarray(ys[:, 2:]))
        if status == _kernels.COLLISION:
            raise CollisionError(state0.t + done * h, float(np.hypot(*ys[done, :2])))
        if status == _kernels.NOT_FINITE:
            raise IntegrationError(f"state became non-finite at t={state0.t + done * h:.9g}")
        return traj

    stepper = _STEPPERS[method]
    dtype = np.asarray(state0.pos).dtype
    pos = np.empty((n_steps + 1, 2), dtype=dtype)
    vel = np.empty((n_steps + 1, 2), dtype=dtype)
    state = state0
    pos[0], vel[0] = state.pos, state.vel
    if observer is not None:
        observer(0, state)
    for i in range(1, n_steps + 1):
        state = stepper(state, h, accel)
        pos[i], vel[i] = state.pos, state.vel
        if observer is not None:
            observer(i, state)
        if state.r < collision_radius:
            raise CollisionError(state.t, state.r)
    return Trajectory(state0.t, float(h), method, pos, vel)


class DenseSolution:
    """Adaptive-integration result, evaluable at any time in its span.

    Stores the accepted mesh (times and states); per-step interpolation
    tables are rebuilt on demand from the mesh, so memory stays at five
    floats per accepted step.  Immutable after construction; concurrent
    queries are safe.
    """

    def __init__(self, ts: np.ndarray, ys: np.ndarray, force: ForceModel,
                 rtol: float, atol: float):
        self.ts = ts
        self.ys = ys
        self.force = force
        self.rtol = rtol
        self.atol = atol
        ts.setflags(write=False)
        ys.setflags(write=False)

    @property
    def t0(self) -> float:
        return float(self.ts[0])

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    @property
    def n_steps(self) -> int:
        return len(self.ts) - 1

    def _check_span(self, t):
        if np.any(t < self.t0) or np.any(t > self.t_end):
            raise ValueError(
                f"query time outside the solution span [{self.t0:.9g}, {self.t_end:.9g}]")

    def eval(self, t: float) -> OrbitState:
        self._check_span(t)
        out = _kernels.dense_eval_batch(self.ts, self.ys, np.array([float(t)]),
                                        self.force.kind, self.force.params)[0]
        return OrbitState(float(t), out[:2], out[2:])

    def eval_batch(self, times) -> np.ndarray:
        """States at the query times as an (n, 4) array (x, y, vx, vy)."""
        q = np.ascontiguousarray(times, dtype=np.float64)
        self._check_span(q)
        return _kernels.dense_eval_batch(self.ts, self.ys, q,
                                         self.force.kind, self.force.params)

    def radial_velocity(self, t: float) -> float:
        """d|pos|/dt = (pos . vel)/|pos| at time t."""
        y = self.eval_batch(np.array([float(t)]))[0]
        return (y[0] * y[2] + y[1] * y[3]) / math.hypot(y[0], y[1])


def integrate_adaptive(state0: OrbitState, t_end: float, tol: float, accel,
                       *, rtol: float | None = None, atol: float | None = None,
                       h_min: float | None = None,
                       max_steps: int = 6_000_000) -> DenseSolution:
    """Integrate from state0.t to t_end with local error control at `tol`.

    `tol` sets both relative and absolute tolerances unless overridden.
    `h_min` defaults to 1e-14 of the span; running below it raises
    StepSizeUnderflowError with the failure location.
    """
    if not isinstance(accel, ForceModel):
        raise TypeError("integrate_adaptive requires a ForceModel "
                        "(build one with newtonian_force/relativistic_force/mesh.force_model)")
    if not (tol > 0):
        raise ValueError(f"tolerance must be positive, got {tol}")
    if not (t_end > state0.t):
        raise ValueError(f"t_end={t_end} must exceed the start time {state0.t}")
    rtol = tol if rtol is None else rtol
    atol = tol if atol is None else atol
    span = t_end - state0.t
    if h_min is None:
        h_min = 1e-14 * span

    ts, ys, status, t_reached = _kernels.dop853_core(
        state0.as_array(), float(state0.t), float(t_end), float(rtol), float(atol),
        accel.kind, accel.params, float(h_min), int(max_steps))

    if status == _kernels.STEP_UNDERFLOW:
        raise StepSizeUnderflowError(t_reached, h_min)
    if status == _kernels.STEP_LIMIT:
        raise StepLimitError(t_reached, max_steps)
    if status == _kernels.NOT_FINITE:
        raise IntegrationError(f"state became non-finite at t={t_reached:.9g} "
                               "(force singular along the path?)")
    return DenseSolution(ts, ys, accel, rtol, atol)


def dense_eval(solution: DenseSolution, t: float) -> OrbitState:
    """Interpolated state at time t inside the solution span."""
    return solution.eval(t)
