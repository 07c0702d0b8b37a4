"""Where should a 10 cm drag stroke sit, and how hard can it pull?

For each design the optimiser scans every start cell, keeps strokes that
stay reachable and well conditioned, and maximises the mean horizontal
force along the stroke.  The winner is then exported as a joint trajectory
with a 10 N drag load.
"""
import numpy as np

from morphleg.gait import (
    force_profile,
    generate_stance_path,
    optimize_path_placement,
    trajectory_export,
    verify_trajectory,
)
from morphleg.linkage import ForceVector
from morphleg.morph import PRESETS, TABLE_CONFIGS

designs = {
    "baseline": TABLE_CONFIGS["baseline"].lengths,
    "retracted_bc": TABLE_CONFIGS["retracted_bc"].lengths,
    "elongated_n": TABLE_CONFIGS["elongated_n"].lengths,
    "rescue": PRESETS["rescue"].lengths,
}

print(f"{'design':<14}{'x_start':>9}{'y':>9}{'mean fx':>9}{'min fx':>9}{'max kappa':>11}")
best = {}
for name, lg in designs.items():
    pl = optimize_path_placement(lg)
    _, _, f, k = force_profile(lg, pl)
    best[name] = pl
    print(f"{name:<14}{pl.x_start:>9.4f}{pl.y:>9.4f}{pl.avg_force:>9.2f}{f.min():>9.2f}{k.max():>11.1f}")
print("(N of foot force per N·m of motor torque)")

lg, pl = designs["elongated_n"], best["elongated_n"]
path = generate_stance_path(pl.path_length, pl.y, pl.x_start, duration=0.5, n=51)
traj = trajectory_export(lg, path, drag_force=ForceVector(-10.0, 0.0))
pos, vel = verify_trajectory(lg, path, traj)
peak = np.max(np.abs(np.concatenate([traj.tau_a, traj.tau_d])))
print(f"\nelongated_n stroke at 0.2 m/s: peak motor torque {peak:.3f} N·m for a 10 N drag")
print(f"FK replay of the exported joints misses the path by {pos:.1e} m and {vel:.1e} m/s")
