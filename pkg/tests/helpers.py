"""Shared test oracles, independent of the package's integration paths."""

import math

import numpy as np

from perilab import OrbitSpec


def kepler_exact_states(spec: OrbitSpec, times) -> np.ndarray:
    """Closed-form Kepler states (x, y, vx, vy) at the given times.

    Solves Kepler's equation by Newton iteration in the eccentric anomaly;
    this never touches the package's steppers, so it can serve as an
    independent reference for trajectory errors.
    """
    a = spec.semi_major
    e = spec.ecc_effective
    gm = spec.gm
    theta = spec.theta
    n_mean = math.sqrt(gm / a**3)
    b = a * math.sqrt(1.0 - e * e)

    M = n_mean * np.asarray(times, dtype=float)
    E = M + e * np.sin(M)
    for _ in range(80):
        delta = (E - e * np.sin(E) - M) / (1.0 - e * np.cos(E))
        E -= delta
        if float(np.max(np.abs(delta))) < 1e-15:
            break
    cE, sE = np.cos(E), np.sin(E)
    # perifocal frame: perihelion on the +x axis at t = 0
    x = a * (cE - e)
    y = b * sE
    Edot = n_mean / (1.0 - e * cE)
    vx = -a * sE * Edot
    vy = b * cE * Edot

    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    pos = rot @ np.vstack([x, y])
    vel = rot @ np.vstack([vx, vy])
    return np.column_stack([pos[0], pos[1], vel[0], vel[1]])
