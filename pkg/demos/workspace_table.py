"""Usable workspace area for the base leg and its eight one-pair variants.

Each variant stretches or shrinks a single link pair to the end of its
morphing range.  Areas come from a 2 mm grid; the forward sweep column is an
independent check that rasterises joint space at 0.25 deg instead.
"""
import math
import time

from morphleg.analysis import GridSpec, sample_workspace, sweep_workspace
from morphleg.morph import TABLE_CONFIGS

print(f"{'config':<14}{'l_a..l_e (cm)':<34}{'area m^2':>10}{'sweep m^2':>11}")
t0 = time.perf_counter()
for name, cfg in TABLE_CONFIGS.items():
    lg = cfg.lengths
    grid = GridSpec.covering([lg])
    area = sample_workspace(lg, grid).area
    swept = sweep_workspace(lg, grid, math.radians(0.25)).inside.sum() * grid.cell_area
    cm = " ".join(f"{100 * v:g}" for v in lg.as_tuple())
    print(f"{name:<14}{cm:<34}{area:>10.4f}{swept:>11.4f}")
print(f"\n{time.perf_counter() - t0:.1f} s")
print("Short motor links cost the most area; a longer ground link also costs area.")
