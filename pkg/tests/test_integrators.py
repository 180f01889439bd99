import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

import perilab as pl
from helpers import kepler_exact_states
from perilab import (
    MERCURY,
    FixedStepMethod,
    OrbitSpec,
    OrbitState,
    initial_conditions,
    integrate_adaptive,
    integrate_fixed,
    step_euler,
    step_leapfrog,
    step_rk2,
    step_rk4,
)
from perilab.integrators import (
    CollisionError,
    StepLimitError,
    StepSizeUnderflowError,
    dense_eval,
)

GM = MERCURY.gm
SPEC = OrbitSpec()
T = SPEC.period


def mercury_start():
    return initial_conditions(SPEC)


def newton(t, pos, vel):
    r = np.hypot(pos[0], pos[1])
    return -GM / r**3 * np.asarray(pos, dtype=float)


def free(t, pos, vel):
    return np.zeros(2)


def constant_pull(t, pos, vel):
    return np.array([0.0, -3.0])


# --- single steps -------------------------------------------------------------


def test_steps_with_zero_acceleration_drift():
    s = OrbitState(0.0, [1.0, 2.0], [3.0, -1.0])
    for step in (step_euler, step_leapfrog, step_rk2, step_rk4):
        s1 = step(s, 0.5, free)
        assert s1.pos == pytest.approx([2.5, 1.5], rel=1e-15)
        assert s1.vel == pytest.approx([3.0, -1.0], rel=1e-15)
        assert s1.t == 0.5


def test_constant_acceleration_exact():
    s = OrbitState(0.0, [1.0, 10.0], [2.0, 0.5])
    h = 0.25
    # velocity after n Euler steps telescopes exactly
    sn = s
    for n in range(1, 5):
        sn = step_euler(sn, h, constant_pull)
        assert sn.vel == pytest.approx([2.0, 0.5 - 3.0 * n * h], rel=1e-15)
    # one-step quadratic trajectory is exact for the order-2+ schemes
    for step in (step_leapfrog, step_rk2, step_rk4):
        s1 = step(s, h, constant_pull)
        assert s1.pos == pytest.approx(
            [1.0 + 2.0 * h, 10.0 + 0.5 * h - 1.5 * h * h], rel=1e-14)
        assert s1.vel == pytest.approx([2.0, 0.5 - 3.0 * h], rel=1e-14)


def test_single_steps_match_hand_rolled_arithmetic():
    s = mercury_start()
    h = 0.01
    x = np.asarray(s.pos, dtype=float)
    v = np.asarray(s.vel, dtype=float)

    def a(p, w):
        r = math.hypot(p[0], p[1])
        return -GM / r**3 * p

    # kick, then drift with the updated velocity
    v1 = v + a(x, v) * h
    x1 = x + v1 * h
    got = step_euler(s, h, newton)
    assert got.pos == pytest.approx(x1, rel=1e-15)
    assert got.vel == pytest.approx(v1, rel=1e-15)

    # kick-drift-kick
    vh = v + a(x, v) * h / 2
    xl = x + vh * h
    vl = vh + a(xl, vh) * h / 2
    got = step_leapfrog(s, h, newton)
    assert got.pos == pytest.approx(xl, rel=1e-15)
    assert got.vel == pytest.approx(vl, rel=1e-15)

    # midpoint stages
    k1x, k1v = v, a(x, v)
    k2x = v + k1v * h / 2
    k2v = a(x + k1x * h / 2, k2x)
    got = step_rk2(s, h, newton)
    assert got.pos == pytest.approx(x + k2x * h, rel=1e-15)
    assert got.vel == pytest.approx(v + k2v * h, rel=1e-15)

    # classical four stages
    k1v = a(x, v)
    k2x, k2v = v + h / 2 * k1v, a(x + h / 2 * v, v + h / 2 * k1v)
    k3x, k3v = v + h / 2 * k2v, a(x + h / 2 * k2x, v + h / 2 * k2v)
    k4x, k4v = v + h * k3v, a(x + h * k3x, v + h * k3v)
    xr = x + h / 6 * (v + 2 * k2x + 2 * k3x + k4x)
    vr = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    got = step_rk4(s, h, newton)
    assert got.pos == pytest.approx(xr, rel=1e-15)
    assert got.vel == pytest.approx(vr, rel=1e-15)


def test_leapfrog_time_reversal():
    # run forward, flip the velocity, run forward again: back to the start
    s0 = mercury_start()
    s = s0
    for _ in range(50):
        s = step_leapfrog(s, 0.01, newton)
    s = pl.reverse_velocity(s)
    for _ in range(50):
        s = step_leapfrog(s, 0.01, newton)
    s = pl.reverse_velocity(s)
    assert s.pos == pytest.approx(s0.pos, rel=1e-12)
    assert s.vel == pytest.approx(s0.vel, rel=1e-12)


def test_leapfrog_harmonic_oscillator_energy_bounded():
    # kick-drift-kick on the unit oscillator conserves a modified energy; the
    # true energy oscillates with closed-form amplitude E0 (w h)^2 / 4 and no
    # secular term
    spring = lambda t, pos, vel: -np.asarray(pos, dtype=float)
    s = OrbitState(0.0, [1.0, 0.0], [0.0, 0.0])
    h = 0.1
    amplitude_bound = 1.1 * 0.5 * h * h / 4.0
    deviations = []
    for _ in range(1000):
        s = step_leapfrog(s, h, spring)
        energy = 0.5 * (s.vel @ s.vel) + 0.5 * (s.pos @ s.pos)
        deviations.append(abs(energy - 0.5))
    deviations = np.array(deviations)
    assert deviations.max() < amplitude_bound
    assert deviations[-100:].max() < 2.0 * deviations[:100].max()  # no drift


def test_rk2_local_order_by_richardson():
    # position quadrature of a(t) = t: local error contracts like h^3
    ramp = lambda t, pos, vel: np.array([float(t), 0.0])
    s = OrbitState(0.0, [0.1, 0.0], [0.0, 0.0])
    exact = lambda h: 0.1 + h**3 / 6.0  # x(t) = 0.1 + t^3/6

    errs = []
    for h in (0.4, 0.2, 0.1):
        s1 = step_rk2(s, h, ramp)
        errs.append(abs(s1.pos[0] - exact(h)))
    assert errs[0] / errs[1] == pytest.approx(8.0, rel=0.2)
    assert errs[1] / errs[2] == pytest.approx(8.0, rel=0.2)


def test_step_rejects_nonpositive_h():
    s = mercury_start()
    for step in (step_euler, step_leapfrog, step_rk2, step_rk4):
        with pytest.raises(ValueError):
            step(s, 0.0, newton)
        with pytest.raises(ValueError):
            step(s, -0.1, newton)


# --- fixed-step runs ----------------------------------------------------------


def test_integrate_fixed_rejects_zero_steps():
    with pytest.raises(ValueError):
        integrate_fixed(mercury_start(), 0.01, 0, "rk4", pl.newtonian_force(GM))


def test_integrate_fixed_unknown_method():
    with pytest.raises(ValueError):
        integrate_fixed(mercury_start(), 0.01, 5, "rk5", pl.newtonian_force(GM))


def test_fast_path_matches_python_path():
    force = pl.newtonian_force(GM)
    for method in FixedStepMethod:
        fast = integrate_fixed(mercury_start(), 0.02, 200, method, force)
        slow = integrate_fixed(mercury_start(), 0.02, 200, method, newton)
        assert np.allclose(fast.pos, slow.pos, rtol=1e-12, atol=1e-12)
        assert np.allclose(fast.vel, slow.vel, rtol=1e-12, atol=1e-12)


def test_observer_sees_every_state():
    seen = []
    traj = integrate_fixed(mercury_start(), 0.05, 40, "leapfrog",
                           pl.newtonian_force(GM),
                           observer=lambda i, s: seen.append((i, s.t)))
    assert len(seen) == 41
    assert [i for i, _ in seen] == list(range(41))
    assert seen[-1][1] == pytest.approx(traj.times[-1])


def test_collision_abort():
    # radial plunge must abort with a diagnostic, not run through the origin
    s = OrbitState(0.0, [10.0, 0.0], [-80.0, 0.0])
    with pytest.raises(CollisionError):
        integrate_fixed(s, 1e-4, 10000, "rk4", pl.newtonian_force(GM),
                        collision_radius=0.5)


def test_leapfrog_three_periods_energy_drift():
    h = 1e-4
    n = int(3 * T / h)
    traj = integrate_fixed(mercury_start(), h, n, "leapfrog", pl.newtonian_force(GM))
    energy = 0.5 * np.sum(traj.vel**2, axis=1) - GM / traj.radii
    drift = np.abs(energy / energy[0] - 1.0)
    assert drift.max() < 1e-8


def test_symplectic_energy_bounded_vs_rk2_drift():
    # the kick-drift Euler variant and leapfrog are both symplectic: their
    # energy errors oscillate without secular growth even over 100
    # revolutions.  The midpoint method is not symplectic and its energy
    # error grows steadily at the same step size.
    force = pl.newtonian_force(GM)

    def envelope(method, h):
        traj = integrate_fixed(mercury_start(), h, int(100 * T / h), method, force)
        energy = 0.5 * np.sum(traj.vel**2, axis=1) - GM / traj.radii
        rel = np.abs(energy / energy[0] - 1.0)
        q = len(rel) // 4
        return rel[:q].max(), rel[-q:].max()

    for method in ("euler", "leapfrog"):
        first, last = envelope(method, 5e-3)
        assert last < 1.5 * first, f"{method} energy error grew secularly"

    first, last = envelope("rk2", 1e-2)
    assert last > 3.0 * first, "rk2 energy error should grow secularly"


def test_methods_declare_nominal_orders():
    assert [m.nominal_order for m in FixedStepMethod] == [1, 2, 2, 4]


def test_rk4_global_convergence_order_on_one_revolution():
    # terminal-state error against the closed-form orbit
    errs = []
    for k in (10, 11, 12):
        n = 2**k
        traj = integrate_fixed(mercury_start(), T / n, n, "rk4", pl.newtonian_force(GM))
        exact = kepler_exact_states(SPEC, [traj.times[-1]])[0]
        errs.append(np.linalg.norm(np.concatenate([traj.pos[-1], traj.vel[-1]]) - exact))
    order = np.polyfit(np.log([T / 2**k for k in (10, 11, 12)]), np.log(errs), 1)[0]
    assert 3.7 <= order <= 4.3


# --- adaptive integration and dense output ------------------------------------


def test_adaptive_requires_force_model():
    with pytest.raises(TypeError):
        integrate_adaptive(mercury_start(), T, 1e-9, newton)


def test_adaptive_validates_inputs():
    force = pl.newtonian_force(GM)
    with pytest.raises(ValueError):
        integrate_adaptive(mercury_start(), T, -1e-9, force)
    with pytest.raises(ValueError):
        integrate_adaptive(mercury_start(), -1.0, 1e-9, force)


def test_adaptive_newtonian_closed_orbit():
    sol = integrate_adaptive(mercury_start(), T, 1e-12, pl.newtonian_force(GM))
    end = sol.eval(T)
    assert end.pos == pytest.approx(mercury_start().pos, abs=1e-6)


def test_adaptive_agrees_with_scipy_dop853():
    # independent implementation of the same family, same tolerances
    force = pl.newtonian_force(GM)
    tol = 1e-11
    sol = integrate_adaptive(mercury_start(), 2.0 * T, tol, force)

    def rhs(t, y):
        r = math.hypot(y[0], y[1])
        c = -GM / r**3
        return [y[2], y[3], c * y[0], c * y[1]]

    ref = solve_ivp(rhs, (0.0, 2.0 * T), mercury_start().as_array(),
                    method="DOP853", rtol=tol, atol=tol)
    mine = sol.eval(2.0 * T)
    assert mine.pos == pytest.approx(ref.y[:2, -1], abs=200 * tol * MERCURY.r_per)


def test_tightening_tolerance_never_hurts():
    force = pl.newtonian_force(GM)
    t_end = 2.5 * T
    exact = kepler_exact_states(SPEC, [t_end])[0]
    errs = []
    for tol in (1e-6, 1e-8, 1e-10, 1e-12):
        sol = integrate_adaptive(mercury_start(), t_end, tol, force)
        y = sol.eval_batch(np.array([t_end]))[0]
        errs.append(np.linalg.norm(y - exact))
    for coarse, fine in zip(errs, errs[1:]):
        assert fine <= coarse * 1.05


def test_dense_eval_exact_at_mesh_points():
    sol = integrate_adaptive(mercury_start(), T, 1e-10, pl.newtonian_force(GM))
    for j in (0, 1, sol.n_steps // 2, sol.n_steps - 1, sol.n_steps):
        s = sol.eval(float(sol.ts[j]))
        assert s.pos[0] == sol.ys[j, 0] and s.pos[1] == sol.ys[j, 1]
        assert s.vel[0] == sol.ys[j, 2] and s.vel[1] == sol.ys[j, 3]


def test_dense_eval_midpoint_against_reintegration():
    # re-integrating each step from its own start at tol 1e-13 isolates the
    # interpolant's error from the run's accumulated drift; mid-step values
    # must stay within a small multiple of the (state-relative) tolerance
    tol = 1e-10
    force = pl.newtonian_force(GM)
    sol = integrate_adaptive(mercury_start(), T, tol, force)
    for j in (1, sol.n_steps // 4, sol.n_steps // 2, sol.n_steps - 2):
        t_mid = 0.5 * (sol.ts[j] + sol.ts[j + 1])
        start = OrbitState(float(sol.ts[j]), sol.ys[j, :2].copy(), sol.ys[j, 2:].copy())
        ref = integrate_adaptive(start, t_mid, 1e-13, force)
        r_ref = ref.eval(t_mid).r
        assert sol.eval(t_mid).r == pytest.approx(r_ref, abs=10 * tol * r_ref)


def test_dense_scan_is_continuous():
    tol = 1e-10
    sol = integrate_adaptive(mercury_start(), T, tol, pl.newtonian_force(GM))
    ts = np.linspace(sol.t0, sol.t_end, 20000)
    ys = sol.eval_batch(ts)
    r = np.hypot(ys[:, 0], ys[:, 1])
    assert np.max(np.abs(np.diff(r))) < 0.02  # bounded by the physical slope
    # radius must never jump by more than a tolerance-scale amount beyond
    # what the physical radial velocity allows
    rdot_max = np.max(np.abs((ys[:, 0] * ys[:, 2] + ys[:, 1] * ys[:, 3]) / r))
    dt = ts[1] - ts[0]
    assert np.max(np.abs(np.diff(r))) <= rdot_max * dt + 10 * tol


def test_dense_eval_out_of_span_rejected():
    sol = integrate_adaptive(mercury_start(), T, 1e-9, pl.newtonian_force(GM))
    with pytest.raises(ValueError):
        sol.eval(-0.1)
    with pytest.raises(ValueError):
        sol.eval(T * 1.001)
    assert dense_eval(sol, T / 3).t == pytest.approx(T / 3)


def test_step_underflow_reported_with_location():
    force = pl.newtonian_force(GM)
    with pytest.raises(StepSizeUnderflowError) as err:
        integrate_adaptive(mercury_start(), T, 1e-10, force, h_min=10.0)
    assert err.value.t >= 0.0


def test_step_limit_reported():
    with pytest.raises(StepLimitError):
        integrate_adaptive(mercury_start(), 3 * T, 1e-12, pl.newtonian_force(GM),
                           max_steps=10)


def test_fixed_rk4_matches_adaptive_after_one_period():
    h = 1e-5
    n = int(round(T / h))
    traj = integrate_fixed(mercury_start(), h, n, "rk4", pl.newtonian_force(GM))
    sol = integrate_adaptive(mercury_start(), T, 1e-12, pl.newtonian_force(GM))
    end = sol.eval(traj.times[-1])
    assert np.linalg.norm(traj.pos[-1] - end.pos) < 1e-8


def test_longdouble_python_path_preserves_dtype():
    s0 = OrbitState(0.0, np.array([MERCURY.r_per, 0.0], dtype=np.longdouble),
                    np.array([0.0, MERCURY.v_per], dtype=np.longdouble))
    gm = np.longdouble(GM)

    def accel(t, pos, vel):
        r2 = pos[0] * pos[0] + pos[1] * pos[1]
        return (-gm / (r2 * np.sqrt(r2))) * pos

    traj = integrate_fixed(s0, 0.01, 50, "leapfrog", accel)
    assert traj.pos.dtype == np.longdouble
    assert traj.vel.dtype == np.longdouble
