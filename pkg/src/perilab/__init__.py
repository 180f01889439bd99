"""perilab: how well can numerical orbits resolve the relativistic perihelion advance?

A planar two-body laboratory that measures the spurious perihelion shift
introduced by time integrators and by lattice force interpolation, and
decides whether the general-relativistic advance is detectable for a given
(method, h, dx, Upsilon, e, theta) configuration.
"""

from .dynamics import (
    GM_SUN,
    MERCURY,
    RAD_TO_ARCSEC,
    Diagnostics,
    ForceModel,
    OrbitSpec,
    OrbitState,
    ReferenceOrbit,
    UnitSystem,
    diagnostics,
    initial_conditions,
    kepler_period,
    newtonian_acceleration,
    newtonian_force,
    predicted_advance,
    relativistic_acceleration,
    relativistic_advance_prediction,
    relativistic_force,
    reverse_velocity,
    vec2,
)
from .integrators import (
    DenseSolution,
    FixedStepMethod,
    Trajectory,
    dense_eval,
    integrate_adaptive,
    integrate_fixed,
    step_euler,
    step_leapfrog,
    step_rk2,
    step_rk4,
)
from .mesh import (
    InterpolationScheme,
    MeshSpec,
    PlaquetteCoords,
    continuity_probe,
    force_bilinear,
    force_linear,
    force_model,
    locate,
    nodal_gradient_central,
)
from .metrology import (
    PerihelionEvent,
    ShiftMeasurement,
    find_perihelion_dense,
    find_perihelion_fixed,
    measure_dense_shift,
    measure_fixed_shift,
    measure_shift,
    perihelion_events_dense,
    perihelion_events_fixed,
)

__version__ = "0.1.0"
