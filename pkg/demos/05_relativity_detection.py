"""End to end: can a given setup detect the relativistic perihelion advance?

Compares three measurements on the Mercury orbit:
  1. the closed-form prediction 3 pi r_sch / (a (1 - e^2)),
  2. the advance actually measured from the Schwarzschild-corrected force,
  3. the spurious shift of the same orbit on lattice forces of several dx.

The correction is detectable only where the lattice artifact stays below the
physical signal: never for the discontinuous linear scheme at these lattice
constants, and only below dx ~ 0.01 Gm for the continuous bilinear scheme.
"""

import perilab as pl
from perilab.harness import RunPoint, execute_point

spec = pl.OrbitSpec()
predicted = pl.predicted_advance(spec)
print(f"predicted advance: {predicted:.4e} rad/rev "
      f"({predicted * pl.RAD_TO_ARCSEC:.4f} arcsec/period)")

rel = execute_point(RunPoint(sweep_id="demo", spec=spec, tol=1e-10,
                             relativistic=True))
print(f"measured advance (exact relativistic force, tol 1e-10): "
      f"{rel.shift_rad:.4e} rad/rev  ({rel.shift_rad / predicted:.4f} of prediction)\n")

print(f"{'scheme':9s} {'dx [Gm]':>8s} {'|lattice shift|':>16s} {'detectable?':>12s}")
for scheme in ("linear", "bilinear"):
    for dx in (0.01, 0.1):
        rec = execute_point(RunPoint(sweep_id="demo", spec=spec, tol=8e-11,
                                     scheme=scheme, dx=dx, variant="as_printed"))
        verdict = "yes" if rec.detectable else "no"
        print(f"{scheme:9s} {dx:8g} {rec.abs_shift_rad:16.3e} {verdict:>12s}")
print("\n(the discontinuous linear scheme drowns the 5e-7 rad signal at any of"
      " these dx;\n the continuous bilinear scheme only drops below it around"
      " dx ~ 0.01 Gm)")
