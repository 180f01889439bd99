"""Compiled numerical kernels (numba).

Everything on the hot path lives here: force evaluation, the embedded
8th-order Runge-Kutta core with step-size control, dense-output
reconstruction, and the fixed-step method loops.  Force models are selected
by an integer code plus a parameter vector so a single compilation covers
every model; lattice runs cross a force discontinuity every fraction of a
plaquette, so the per-evaluation cost here dominates whole experiments.

Mesh parameter layout: params = [GM, dx, offset_x, offset_y].
State layout: y = [x, y, vx, vy].
"""

import numpy as np
from numba import njit

from . import _tableau

# force-kernel selector codes (mirrored in dynamics.py)
KIND_NEWTONIAN = 0
KIND_RELATIVISTIC = 1
KIND_MESH_LINEAR = 2
KIND_MESH_LINEAR_PRINTED = 3
KIND_MESH_BILINEAR = 4

# fixed-step method codes
METHOD_EULER = 0
METHOD_LEAPFROG = 1
METHOD_RK2 = 2
METHOD_RK4 = 3

# step-controller constants
_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ERROR_EXPONENT = -1.0 / 8.0

# integration status codes
OK = 0
STEP_UNDERFLOW = 1
STEP_LIMIT = 2
COLLISION = 3
NOT_FINITE = 4

_C = _tableau.C
_A = _tableau.A
_B = _tableau.B
_E3 = _tableau.E3
_E5 = _tableau.E5
_D = _tableau.D


@njit(cache=True, error_model="numpy", inline="always")
def _phi_node(i, j, gm, dx, ox, oy):
    """Potential -GM/r at lattice node (i, j); -inf on the singular node."""
    px = (i + ox) * dx
    py = (j + oy) * dx
    return -gm / np.sqrt(px * px + py * py)


@njit(cache=True, error_model="numpy", inline="always")
def _plaquette(px, py, dx, ox, oy):
    """Floor decomposition of a point into plaquette (i, j) and (xi, eta) in [0,1)."""
    u = px / dx - ox
    v = py / dx - oy
    fi = np.floor(u)
    fj = np.floor(v)
    xi = u - fi
    eta = v - fj
    # guard the half-open interval against rounding at the upper edge
    if xi >= 1.0:
        fi += 1.0
        xi -= 1.0
    if eta >= 1.0:
        fj += 1.0
        eta -= 1.0
    return np.int64(fi), np.int64(fj), xi, eta


@njit(cache=True, error_model="numpy")
def mesh_bilinear_accel(px, py, gm, dx, ox, oy):
    """Bilinear interpolation of central-difference nodal gradients, negated.

    The nodal force estimate at (i, j) is the two-point central difference
    (Phi_{i+1,j} - Phi_{i-1,j})/(2 dx) and likewise in y; the four corner
    values are blended bilinearly, which is continuous across every
    plaquette edge.  12 distinct potential evaluations per call.
    """
    i, j, xi, eta = _plaquette(px, py, dx, ox, oy)

    p_xm1_0 = _phi_node(i - 1, j, gm, dx, ox, oy)
    p_x0_0 = _phi_node(i, j, gm, dx, ox, oy)
    p_xp1_0 = _phi_node(i + 1, j, gm, dx, ox, oy)
    p_xp2_0 = _phi_node(i + 2, j, gm, dx, ox, oy)
    p_xm1_1 = _phi_node(i - 1, j + 1, gm, dx, ox, oy)
    p_x0_1 = _phi_node(i, j + 1, gm, dx, ox, oy)
    p_xp1_1 = _phi_node(i + 1, j + 1, gm, dx, ox, oy)
    p_xp2_1 = _phi_node(i + 2, j + 1, gm, dx, ox, oy)
    p_x0_m1 = _phi_node(i, j - 1, gm, dx, ox, oy)
    p_xp1_m1 = _phi_node(i + 1, j - 1, gm, dx, ox, oy)
    p_x0_2 = _phi_node(i, j + 2, gm, dx, ox, oy)
    p_xp1_2 = _phi_node(i + 1, j + 2, gm, dx, ox, oy)

    inv2 = 0.5 / dx
    fx_a = (p_xp1_0 - p_xm1_0) * inv2
    fx_b = (p_xp2_0 - p_x0_0) * inv2
    fx_c = (p_xp1_1 - p_xm1_1) * inv2
    fx_d = (p_xp2_1 - p_x0_1) * inv2
    fy_a = (p_x0_1 - p_x0_m1) * inv2
    fy_b = (p_xp1_1 - p_xp1_m1) * inv2
    fy_c = (p_x0_2 - p_x0_0) * inv2
    fy_d = (p_xp1_2 - p_xp1_0) * inv2

    fx = (fx_a * (1.0 - xi) + fx_b * xi) * (1.0 - eta) + \
         (fx_c * (1.0 - xi) + fx_d * xi) * eta
    fy = (fy_a * (1.0 - eta) + fy_c * eta) * (1.0 - xi) + \
         (fy_b * (1.0 - eta) + fy_d * eta) * xi
    return -fx, -fy


@njit(cache=True, error_model="numpy")
def mesh_linear_accel(px, py, gm, dx, ox, oy, as_printed):
    """Staggered forward-difference interpolation, negated.

    Edge gradients g_x = (Phi_{i+1,j} - Phi_{i,j})/dx are blended
    transversally only, so the normal component jumps across edges.  The
    symmetric variant blends g_y between corners a and b; the as-printed
    variant uses corners b and d instead (one extra node).
    """
    i, j, xi, eta = _plaquette(px, py, dx, ox, oy)

    p_a = _phi_node(i, j, gm, dx, ox, oy)
    p_b = _phi_node(i + 1, j, gm, dx, ox, oy)
    p_c = _phi_node(i, j + 1, gm, dx, ox, oy)
    p_d = _phi_node(i + 1, j + 1, gm, dx, ox, oy)

    inv = 1.0 / dx
    gx_a = (p_b - p_a) * inv
    gx_c = (p_d - p_c) * inv
    gx = gx_a * (1.0 - eta) + gx_c * eta

    if as_printed:
        p_b2 = _phi_node(i + 1, j + 2, gm, dx, ox, oy)
        gy_b = (p_d - p_b) * inv
        gy_d = (p_b2 - p_d) * inv
        gy = gy_b * (1.0 - xi) + gy_d * xi
    else:
        gy_a = (p_c - p_a) * inv
        gy_b = (p_d - p_b) * inv
        gy = gy_a * (1.0 - xi) + gy_b * xi
    return -gx, -gy


@njit(cache=True, error_model="numpy")
def accel_eval(px, py, vx, vy, kind, params):
    """Dispatch acceleration for the given force-model code."""
    if kind == KIND_NEWTONIAN:
        gm = params[0]
        r2 = px * px + py * py
        c = -gm / (r2 * np.sqrt(r2))
        return c * px, c * py
    elif kind == KIND_RELATIVISTIC:
        gm = params[0]
        rs = params[1]
        r2 = px * px + py * py
        r = np.sqrt(r2)
        ell = px * vy - py * vx
        mag = gm / r2 + 1.5 * rs * ell * ell / (r2 * r2)
        return -mag * px / r, -mag * py / r
    elif kind == KIND_MESH_LINEAR:
        return mesh_linear_accel(px, py, params[0], params[1], params[2], params[3], False)
    elif kind == KIND_MESH_LINEAR_PRINTED:
        return mesh_linear_accel(px, py, params[0], params[1], params[2], params[3], True)
    else:
        return mesh_bilinear_accel(px, py, params[0], params[1], params[2], params[3])


@njit(cache=True, error_model="numpy", inline="always")
def _rhs(y, kind, params, out):
    ax, ay = accel_eval(y[0], y[1], y[2], y[3], kind, params)
    out[0] = y[2]
    out[1] = y[3]
    out[2] = ax
    out[3] = ay


@njit(cache=True, error_model="numpy")
def _rk_stages(t, y, h, kind, params, K):
    """Fill the 12 integration stages plus f(t+h, y_new); return y_new.

    K[0] must already hold f(t, y).
    """
    y_stage = np.empty(4)
    for s in range(1, 12):
        for m in range(4):
            acc = 0.0
            for q in range(s):
                acc += _A[s, q] * K[q, m]
            y_stage[m] = y[m] + h * acc
        _rhs(y_stage, kind, params, K[s])
    y_new = np.empty(4)
    for m in range(4):
        acc = 0.0
        for q in range(12):
            acc += _B[q] * K[q, m]
        y_new[m] = y[m] + h * acc
    _rhs(y_new, kind, params, K[12])
    return y_new


@njit(cache=True, error_model="numpy")
def _error_norm(K, h, scale):
    """Combined 5th/3rd-order error estimate, scaled (Hairer's dop853 form)."""
    err5_2 = 0.0
    err3_2 = 0.0
    for m in range(4):
        e5 = 0.0
        e3 = 0.0
        for q in range(13):
            e5 += _E5[q] * K[q, m]
            e3 += _E3[q] * K[q, m]
        e5 /= scale[m]
        e3 /= scale[m]
        err5_2 += e5 * e5
        err3_2 += e3 * e3
    if err5_2 == 0.0 and err3_2 == 0.0:
        return 0.0
    denom = err5_2 + 0.01 * err3_2
    return np.abs(h) * err5_2 / np.sqrt(denom * 4.0)


@njit(cache=True, error_model="numpy")
def _initial_step(y0, f0, t_span, rtol, atol, kind, params):
    """Starting step size from the standard two-probe heuristic."""
    d0 = 0.0
    d1 = 0.0
    for m in range(4):
        sc = atol + rtol * np.abs(y0[m])
        d0 += (y0[m] / sc) ** 2
        d1 += (f0[m] / sc) ** 2
    d0 = np.sqrt(d0 / 4.0)
    d1 = np.sqrt(d1 / 4.0)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, t_span)

    y1 = y0 + h0 * f0
    f1 = np.empty(4)
    _rhs(y1, kind, params, f1)
    d2 = 0.0
    for m in range(4):
        sc = atol + rtol * np.abs(y0[m])
        d2 += ((f1[m] - f0[m]) / sc) ** 2
    d2 = np.sqrt(d2 / 4.0) / h0

    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dm) ** (1.0 / 8.0)
    return min(100.0 * h0, h1, t_span)


@njit(cache=True, error_model="numpy")
def dop853_core(y0, t0, t_end, rtol, atol, kind, params, h_min, max_steps):
    """Adaptive integration from t0 to t_end; returns the accepted mesh.

    Returns (ts, ys, status, t_reached).  On a force discontinuity the error
    estimate blows up and the controller shrinks h until the step is
    crossable, then grows it back; only h < h_min is a hard failure.
    """
    cap = 4096
    ts = np.empty(cap)
    ys = np.empty((cap, 4))
    ts[0] = t0
    ys[0] = y0

    K = np.empty((13, 4))
    y = y0.copy()
    t = t0
    _rhs(y, kind, params, K[0])
    if not (np.isfinite(K[0, 2]) and np.isfinite(K[0, 3])):
        return ts[:1].copy(), ys[:1].copy(), NOT_FINITE, t0

    h = _initial_step(y, K[0], t_end - t0, rtol, atol, kind, params)
    n = 0
    status = OK
    rejected = False
    scale = np.empty(4)

    while t < t_end:
        # never step below the local representable resolution
        tiny = 10.0 * np.abs(np.nextafter(t, np.inf) - t)
        if h < max(h_min, tiny):
            status = STEP_UNDERFLOW
            break
        clipped = False
        if t + h >= t_end:
            h_try = t_end - t
            clipped = True
        else:
            h_try = h

        y_new = _rk_stages(t, y, h_try, kind, params, K)
        for m in range(4):
            ya = np.abs(y[m])
            yb = np.abs(y_new[m])
            scale[m] = atol + rtol * (ya if ya > yb else yb)
        err = _error_norm(K, h_try, scale)

        if err < 1.0:
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = min(_MAX_FACTOR, _SAFETY * err ** _ERROR_EXPONENT)
            if rejected:
                factor = min(1.0, factor)
            rejected = False

            t = t_end if clipped else t + h_try
            y = y_new
            for m in range(4):
                K[0, m] = K[12, m]

            n += 1
            if n >= cap:
                new_cap = cap * 2
                ts2 = np.empty(new_cap)
                ys2 = np.empty((new_cap, 4))
                ts2[:cap] = ts
                ys2[:cap] = ys
                ts = ts2
                ys = ys2
                cap = new_cap
            ts[n] = t
            ys[n] = y

            if not (np.isfinite(y[0]) and np.isfinite(y[1])
                    and np.isfinite(y[2]) and np.isfinite(y[3])):
                status = NOT_FINITE
                break
            if n >= max_steps:
                if t < t_end:
                    status = STEP_LIMIT
                break
            if not clipped:
                h = h_try * factor
        else:
            rejected = True
            if err != err or err == np.inf:   # NaN/inf error: force a hard shrink
                factor = _MIN_FACTOR
            else:
                factor = max(_MIN_FACTOR, _SAFETY * err ** _ERROR_EXPONENT)
            h = h_try * factor

    return ts[:n + 1].copy(), ys[:n + 1].copy(), status, t


@njit(cache=True, error_model="numpy")
def dense_coefficients(tj, yj, h, y_next, kind, params):
    """Rebuild the 7-row dense-output table for one accepted step.

    The step's stages are recomputed from (tj, yj, h); three extra stages
    complete the 7th-order interpolant.  Row 0 is the stored state
    difference, so evaluation at the step endpoints reproduces the mesh
    states bit-for-bit.
    """
    K = np.empty((16, 4))
    _rhs(yj, kind, params, K[0])
    y_stage = np.empty(4)
    for s in range(1, 12):
        for m in range(4):
            acc = 0.0
            for q in range(s):
                acc += _A[s, q] * K[q, m]
            y_stage[m] = yj[m] + h * acc
        _rhs(y_stage, kind, params, K[s])
    for m in range(4):
        acc = 0.0
        for q in range(12):
            acc += _B[q] * K[q, m]
        y_stage[m] = yj[m] + h * acc
    _rhs(y_stage, kind, params, K[12])
    for s in range(13, 16):
        for m in range(4):
            acc = 0.0
            for q in range(s):
                acc += _A[s, q] * K[q, m]
            y_stage[m] = yj[m] + h * acc
        _rhs(y_stage, kind, params, K[s])

    F = np.empty((7, 4))
    for m in range(4):
        delta = y_next[m] - yj[m]
        F[0, m] = delta
        F[1, m] = h * K[0, m] - delta
        F[2, m] = 2.0 * delta - h * (K[12, m] + K[0, m])
    for row in range(4):
        for m in range(4):
            acc = 0.0
            for q in range(16):
                acc += _D[row, q] * K[q, m]
            F[3 + row, m] = h * acc
    return F


@njit(cache=True, error_model="numpy")
def dense_point(F, y_old, x):
    """Evaluate the interpolant at fraction x in [0, 1] of the step."""
    out = np.zeros(4)
    for i in range(6, -1, -1):
        for m in range(4):
            out[m] += F[i, m]
        if (6 - i) % 2 == 0:
            for m in range(4):
                out[m] *= x
        else:
            for m in range(4):
                out[m] *= 1.0 - x
    for m in range(4):
        out[m] += y_old[m]
    return out


@njit(cache=True, error_model="numpy")
def dense_eval_batch(ts, ys, queries, kind, params):
    """Evaluate the dense solution at each query time (any order).

    Per-step coefficient tables are rebuilt on demand and reused while
    consecutive queries stay inside one step.
    """
    nq = queries.shape[0]
    out = np.empty((nq, 4))
    last = ts.shape[0] - 2
    cur = -1
    F = np.empty((7, 4))
    for m in range(nq):
        tq = queries[m]
        j = np.searchsorted(ts, tq, side="right") - 1
        if j < 0:
            j = 0
        if j > last:
            j = last
        if j != cur:
            F = dense_coefficients(ts[j], ys[j], ts[j + 1] - ts[j], ys[j + 1],
                                   kind, params)
            cur = j
        x = (tq - ts[j]) / (ts[j + 1] - ts[j])
        out[m] = dense_point(F, ys[j], x)
    return out


@njit(cache=True, error_model="numpy")
def fixed_loop(y0, t0, h, n_steps, method, kind, params, collision_r2):
    """Run a fixed-step method; returns (states, status, steps_done).

    states has one row (x, y, vx, vy) per step including the start.  Stops
    early with COLLISION when the particle sinks below the collision radius
    or NOT_FINITE when the state degenerates.
    """
    ys = np.empty((n_steps + 1, 4))
    px, py, vx, vy = y0[0], y0[1], y0[2], y0[3]
    ys[0, 0] = px
    ys[0, 1] = py
    ys[0, 2] = vx
    ys[0, 3] = vy
    status = OK
    done = n_steps

    ax, ay = accel_eval(px, py, vx, vy, kind, params)  # leapfrog cache
    for n in range(n_steps):
        if method == METHOD_EULER:
            # velocity kick first, drift with the updated velocity
            ax, ay = accel_eval(px, py, vx, vy, kind, params)
            vx += ax * h
            vy += ay * h
            px += vx * h
            py += vy * h
        elif method == METHOD_LEAPFROG:
            # kick-drift-kick; the closing kick is reused as the next opener
            vhx = vx + ax * (0.5 * h)
            vhy = vy + ay * (0.5 * h)
            px += vhx * h
            py += vhy * h
            ax, ay = accel_eval(px, py, vhx, vhy, kind, params)
            vx = vhx + ax * (0.5 * h)
            vy = vhy + ay * (0.5 * h)
        elif method == METHOD_RK2:
            # midpoint rule: advance with the half-step stage only
            k1vx, k1vy = accel_eval(px, py, vx, vy, kind, params)
            mvx = vx + k1vx * (0.5 * h)
            mvy = vy + k1vy * (0.5 * h)
            mpx = px + vx * (0.5 * h)
            mpy = py + vy * (0.5 * h)
            k2vx, k2vy = accel_eval(mpx, mpy, mvx, mvy, kind, params)
            px += mvx * h
            py += mvy * h
            vx += k2vx * h
            vy += k2vy * h
        else:
            # classical RK4 on the (pos, vel) system
            k1vx, k1vy = accel_eval(px, py, vx, vy, kind, params)
            k1px, k1py = vx, vy
            k2px = vx + 0.5 * h * k1vx
            k2py = vy + 0.5 * h * k1vy
            k2vx, k2vy = accel_eval(px + 0.5 * h * k1px, py + 0.5 * h * k1py,
                                    k2px, k2py, kind, params)
            k3px = vx + 0.5 * h * k2vx
            k3py = vy + 0.5 * h * k2vy
            k3vx, k3vy = accel_eval(px + 0.5 * h * k2px, py + 0.5 * h * k2py,
                                    k3px, k3py, kind, params)
            k4px = vx + h * k3vx
            k4py = vy + h * k3vy
            k4vx, k4vy = accel_eval(px + h * k3px, py + h * k3py,
                                    k4px, k4py, kind, params)
            px += (h / 6.0) * (k1px + 2.0 * k2px + 2.0 * k3px + k4px)
            py += (h / 6.0) * (k1py + 2.0 * k2py + 2.0 * k3py + k4py)
            vx += (h / 6.0) * (k1vx + 2.0 * k2vx + 2.0 * k3vx + k4vx)
            vy += (h / 6.0) * (k1vy + 2.0 * k2vy + 2.0 * k3vy + k4vy)

        ys[n + 1, 0] = px
        ys[n + 1, 1] = py
        ys[n + 1, 2] = vx
        ys[n + 1, 3] = vy
        r2 = px * px + py * py
        if not (np.isfinite(r2) and np.isfinite(vx) and np.isfinite(vy)):
            status = NOT_FINITE
            done = n + 1
            break
        if r2 < collision_r2:
            status = COLLISION
            done = n + 1
            break

    return ys[:done + 1].copy(), status, done
