"""Which fixed-step integrator can see the relativistic perihelion advance?

Runs a small step-size sweep per method with the exact Newtonian force,
measures each method's spurious perihelion shift over three revolutions, and
compares it to the relativistic advance (5.01e-7 rad/rev for the Mercury
orbit).  A method is usable at a given h only if its spurious shift sits
below that line.  Writes the sweep CSV and a log-log comparison figure.
"""

import pathlib

import perilab as pl
from perilab.harness import sweep_timestep, write_records_csv

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

methods = ["euler", "leapfrog", "rk2", "rk4"]
h_values = [0.1, 0.05, 0.025, 0.0125, 0.00625]
records = sweep_timestep(methods, h_values, workers=2)

advance = pl.predicted_advance(pl.OrbitSpec())
print(f"relativistic advance: {advance:.3e} rad/rev\n")
print(f"{'method':9s} " + " ".join(f"h={h:<8g}" for h in h_values))
for method in methods:
    row = [r for r in records if r.method == method]
    cells = " ".join(f"{r.abs_shift_rad:10.2e}" for r in sorted(row, key=lambda r: -r.h))
    ok = [f"{r.h:g}" for r in row if r.detectable]
    print(f"{method:9s} {cells}   usable at h: {ok or 'none'}")

csv_path = OUT / "h_sweep.csv"
write_records_csv(records, csv_path)
print(f"\nwrote {csv_path}")

try:
    from perilab_plots import FigureSpec, render

    svg = render(FigureSpec(kind="h-sweep", inputs=(str(csv_path),),
                            output=str(OUT / "h_sweep.svg")))
    print(f"wrote {svg}")
except ImportError:
    print("install perilab-plots to render the comparison figure")
