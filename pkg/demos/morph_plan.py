"""Morphing from the base leg into rescue mode while standing.

The foot stays planted while every link length moves linearly to its
rescue value.  Not every foot hold survives: the plan needs IK to succeed
and the condition number to stay bounded at every step.  A deep hold that
suits the base leg drops out of search mode's workspace at the last step.
"""
import math

import numpy as np

from morphleg.analysis import GridSpec
from morphleg.gait import score_candidates
from morphleg.linkage import FootState, condition_number, jacobian
from morphleg.morph import PRESETS, InfeasibleStep, morph_feasible_mask, morph_plan

base, rescue, search = PRESETS["baseline"], PRESETS["rescue"], PRESETS["search"]
grid = GridSpec.covering([base.lengths, rescue.lengths])

mask = morph_feasible_mask(base, rescue, grid, 20, kappa_max=50.0)
print(f"{mask.sum()} of {mask.size} cells stay reachable with kappa <= 50 through all 20 steps")

# best rescue drag start among those cells
X, Y = grid.centers()
score, _ = score_candidates(rescue.lengths, X[mask], Y[mask], grid=grid)
i = int(np.nanargmax(np.where(np.isfinite(score), score, np.nan)))
hold = FootState(float(X[mask][i]), float(Y[mask][i]))
print(f"hold the foot at ({hold.x:.3f}, {hold.y:.3f}) m, the best rescue stroke start among them\n")

plan = morph_plan(base, rescue, hold, n_steps=20, kappa_max=50.0)
print(" step  l_b cm  l_n cm   q_a deg   q_d deg  kappa")
for n, (lg, pose) in enumerate(plan.steps):
    if n % 4 == 0 or n == len(plan.steps) - 1:
        k = condition_number(jacobian(lg, pose))
        print(f"{n:5d}{100 * lg.l_b:8.2f}{100 * lg.l_n:8.2f}"
              f"{math.degrees(pose.q_a):10.2f}{math.degrees(pose.q_d):10.2f}{k:7.2f}")

deep = FootState(-0.021, -0.249)
try:
    morph_plan(base, search, deep, n_steps=20)
except InfeasibleStep as exc:
    print(f"\nbaseline -> search holding ({deep.x}, {deep.y}): {exc}")
    print("that hold leaves the search workspace, so this change belongs in the swing phase")
