"""A short walk through the leg's kinematics.

Solve the inverse problem for one foot point, push the result back
through forward kinematics, then look at what the Jacobian says about
speed and force there and at a folded pose.
"""
import math

from morphleg.linkage import (
    ALL_MODES,
    FootState,
    LinkLengths,
    Unreachable,
    TorquePair,
    condition_number,
    fk_branch_of,
    forward_kinematics,
    inverse_kinematics,
    jacobian,
    joint_velocity,
    static_force,
)

leg = LinkLengths.from_cm(10, 20, 20, 10, 10, 5)
foot = FootState(0.05, -0.15)
print(f"foot target ({foot.x}, {foot.y}) m, under the middle of the ground link\n")

print("the four working modes:")
for mode in ALL_MODES:
    try:
        pose = inverse_kinematics(leg, foot, mode)
    except Unreachable as exc:
        print(f"  {mode.label}: {exc}")
        continue
    back, _ = forward_kinematics(leg, pose.q_a, pose.q_d, fk_branch_of(leg, pose))
    miss = math.hypot(back.x - foot.x, back.y - foot.y)
    print(f"  {mode.label}: q_a {math.degrees(pose.q_a):8.3f} deg  q_d {math.degrees(pose.q_d):8.3f} deg"
          f"  FK miss {miss:.1e} m")

pose = inverse_kinematics(leg, foot)
J = jacobian(leg, pose)
print(f"\nworking mode -+ Jacobian: [[{J.j11:.4f}, {J.j12:.4f}], [{J.j21:.4f}, {J.j22:.4f}]] m/rad")
print(f"condition number {condition_number(J):.3f}")
qd = joint_velocity(J, (-0.05, 0.0))
print(f"dragging the foot back at 5 cm/s needs joint rates ({qd[0]:.4f}, {qd[1]:.4f}) rad/s")
for tau in (TorquePair(1, 1), TorquePair(1, -1)):
    F = static_force(J, tau)
    print(f"torques ({tau.tau_a:+g}, {tau.tau_d:+g}) N·m hold a foot force of ({F.fx:.2f}, {F.fy:.2f}) N")

# A and B folded into a line: the first Jacobian column vanishes
_, folded = forward_kinematics(leg, math.radians(120), math.radians(60))
print(f"\nat q_a = 120 deg, q_d = 60 deg the condition number is {condition_number(jacobian(leg, folded))}")
