"""Closed-form kinematics and statics of a five-bar leg with an ankle extension.

Frame: motor A at the origin, motor D at ``(l_n, 0)``.  Link A ends at the
elbow ``B_o``, link D at ``C_o``; links B and C meet at ``E_o`` and the foot
``E_F`` sits ``l_e`` beyond ``E_o`` along link C.  All angles are measured
from the world x axis, counter-clockwise positive, and are reported in
``(-pi, pi]``.

The ``*_arrays`` kernels are vectorised and are the single code path for
both the scalar API and the grid analyses, so per-point results agree
bit-for-bit between the two.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass
from enum import Enum
from typing import Union

import numpy as np

ACOS_TOL = 1e-12
SINGULAR_SIN_TOL = 1e-12
SINGULAR_DET_TOL = 1e-12
KAPPA_INF_RATIO = 1e-15


class LinkageError(ValueError):
    """Base class for kinematic failures.  ``index`` locates a failing sample."""

    def __init__(self, message: str, index: int | None = None):
        if index is not None:
            message = f"{message} (sample {index})"
        super().__init__(message)
        self.index = index


class Unreachable(LinkageError):
    pass


class Degenerate(LinkageError):
    pass


class Singular(LinkageError):
    pass


@dataclass(frozen=True)
class LinkLengths:
    """Six link lengths in meters.  ``l_n`` is the motor spacing, ``l_e`` the ankle."""

    l_a: float
    l_b: float
    l_c: float
    l_d: float
    l_n: float
    l_e: float

    def __post_init__(self):
        vals = astuple(self)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"link lengths must be finite: {vals}")
        if min(self.l_a, self.l_b, self.l_c, self.l_d) <= 0:
            raise ValueError(f"l_a..l_d must be positive: {vals}")
        if self.l_n < 0 or self.l_e < 0:
            raise ValueError(f"l_n and l_e must be non-negative: {vals}")

    @classmethod
    def from_cm(cls, l_a, l_b, l_c, l_d, l_n, l_e) -> "LinkLengths":
        return cls(*(float(v) / 100.0 for v in (l_a, l_b, l_c, l_d, l_n, l_e)))

    def as_tuple(self) -> tuple[float, ...]:
        return astuple(self)

    @property
    def reach(self) -> float:
        """Upper bound on foot distance from either motor axis."""
        return max(self.l_a + self.l_b, self.l_d + self.l_c) + self.l_e


class FkBranch(Enum):
    UP = "up"
    DOWN = "down"


class Sign(Enum):
    PLUS = 1
    MINUS = -1

    @property
    def char(self) -> str:
        return "+" if self is Sign.PLUS else "-"


@dataclass(frozen=True)
class WorkingMode:
    """One of the four inverse-kinematics branches.

    The label is written ``<sign_a><sign_d>``: ``"-+"`` takes the minus
    root for ``q_a`` and the plus root for ``q_d``.
    """

    sign_a: Sign
    sign_d: Sign

    @classmethod
    def from_label(cls, label: str) -> "WorkingMode":
        label = label.strip()
        if len(label) != 2 or any(c not in "+-" for c in label):
            raise ValueError(f"working mode must be two of '+'/'-', got {label!r}")
        to_sign = {"+": Sign.PLUS, "-": Sign.MINUS}
        return cls(to_sign[label[0]], to_sign[label[1]])

    @property
    def label(self) -> str:
        return self.sign_a.char + self.sign_d.char

    def __str__(self):
        return self.label


DEFAULT_MODE = WorkingMode.from_label("-+")
ALL_MODES = tuple(WorkingMode.from_label(s) for s in ("-+", "+-", "++", "--"))


@dataclass(frozen=True)
class JointSolution:
    q_a: float
    q_b: float
    q_c: float
    q_d: float
    branch: Union[FkBranch, WorkingMode, None] = None

    @property
    def q_e(self) -> float:
        return self.q_c


@dataclass(frozen=True)
class FootState:
    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0


@dataclass(frozen=True)
class ElbowPoint:
    x: float
    y: float


@dataclass(frozen=True)
class PlanarJacobian:
    j11: float
    j12: float
    j21: float
    j22: float

    @classmethod
    def from_array(cls, m) -> "PlanarJacobian":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.j11, self.j12], [self.j21, self.j22]])

    @property
    def det(self) -> float:
        return self.j11 * self.j22 - self.j12 * self.j21

    @property
    def frobenius_sq(self) -> float:
        return self.j11**2 + self.j12**2 + self.j21**2 + self.j22**2

    def is_singular(self) -> bool:
        return abs(self.det) < SINGULAR_DET_TOL * self.frobenius_sq or self.frobenius_sq == 0.0


@dataclass(frozen=True)
class TorquePair:
    tau_a: float
    tau_d: float


@dataclass(frozen=True)
class ForceVector:
    """Force the foot applies to the ground."""

    fx: float
    fy: float

    @property
    def ground_reaction(self) -> "ForceVector":
        return ForceVector(-self.fx, -self.fy)


# ---------------------------------------------------------------------------
# vectorised kernels


def wrap_angle(a):
    """Map angles into ``(-pi, pi]``."""
    r = np.remainder(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    r = np.where(r <= -np.pi, r + 2.0 * np.pi, r)
    return r if r.ndim else float(r)


def _safe_acos(c):
    """Clamp grazing arguments; return (angle, ok mask)."""
    ok = np.abs(c) <= 1.0 + ACOS_TOL
    return np.arccos(np.clip(c, -1.0, 1.0)), ok


def fk_arrays(lengths: LinkLengths, q_a, q_d, down=True):
    """Forward kinematics over arrays of actuated angles.

    Returns a dict with the foot ``x, y``, passive angles ``q_b, q_c``,
    the elbow ``ex, ey`` and boolean masks ``ok`` (loop closes) and
    ``degenerate`` (``B_o`` coincides with ``C_o``).  ``down`` may be a bool
    or a boolean array broadcastable against the angles.
    """
    la, lb, lc, ld, ln, le = lengths.as_tuple()
    q_a = np.asarray(q_a, dtype=float)
    q_d = np.asarray(q_d, dtype=float)
    bx, by = la * np.cos(q_a), la * np.sin(q_a)
    cx, cy = ln + ld * np.cos(q_d), ld * np.sin(q_d)
    dx, dy = bx - cx, by - cy
    g = dx * dx + dy * dy
    root_g = np.sqrt(g)
    phi = np.arctan2(dy, dx)
    degenerate = root_g <= 1e-15 * max(la, ld, ln, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = (lc * lc + g - lb * lb) / (2.0 * lc * root_g)
    alpha, ok = _safe_acos(np.where(degenerate, 0.0, arg))
    ok = ok & ~degenerate
    # plus root puts E_o to the right of the directed line B_o -> C_o
    sign = np.where(down, 1.0, -1.0)
    q_c = phi + sign * alpha
    ex, ey = cx + lc * np.cos(q_c), cy + lc * np.sin(q_c)
    x = cx + (lc + le) * np.cos(q_c)
    y = cy + (lc + le) * np.sin(q_c)
    q_b = np.arctan2(ey - by, ex - bx)
    return {
        "x": x, "y": y, "q_a": wrap_angle(q_a), "q_b": wrap_angle(q_b),
        "q_c": wrap_angle(q_c), "q_d": wrap_angle(q_d),
        "ex": ex, "ey": ey, "bx": bx, "by": by, "cx": cx, "cy": cy,
        "ok": ok, "degenerate": degenerate,
    }


def ik_arrays(lengths: LinkLengths, x, y, mode: WorkingMode = DEFAULT_MODE):
    """Inverse kinematics over arrays of foot positions for one working mode.

    Returns a dict with ``q_a, q_b, q_c, q_d``, elbow and joint positions, and
    masks ``ok`` (both roots real) and ``degenerate``.
    """
    la, lb, lc, ld, ln, le = lengths.as_tuple()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lce = lc + le
    rx = x - ln
    r = np.hypot(y, rx)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg_d = (lce * lce - ld * ld - r * r) / (-2.0 * ld * r)
    acos_d, ok_d = _safe_acos(np.where(r > 0, arg_d, 0.0))
    q_d = np.arctan2(y, rx) + mode.sign_d.value * acos_d
    cx, cy = ln + ld * np.cos(q_d), ld * np.sin(q_d)
    ex = (lc * x + le * cx) / lce
    ey = (lc * y + le * cy) / lce
    re = np.hypot(ex, ey)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg_a = (lb * lb - la * la - re * re) / (-2.0 * la * re)
    acos_a, ok_a = _safe_acos(np.where(re > 0, arg_a, 0.0))
    q_a = np.arctan2(ey, ex) + mode.sign_a.value * acos_a
    bx, by = la * np.cos(q_a), la * np.sin(q_a)
    q_b = np.arctan2(ey - by, ex - bx)
    q_c = np.arctan2(y - cy, x - cx)
    degenerate = (r == 0) | (re == 0)
    return {
        "q_a": wrap_angle(q_a), "q_b": wrap_angle(q_b), "q_c": wrap_angle(q_c),
        "q_d": wrap_angle(q_d),
        "ex": ex, "ey": ey, "bx": bx, "by": by, "cx": cx, "cy": cy,
        "ok": ok_d & ok_a & ~degenerate, "degenerate": degenerate,
    }


def usable_mask(pose: dict, foot_y) -> np.ndarray:
    """Elbows ``B_o`` and ``C_o`` must not lie below the foot."""
    return (pose["by"] >= foot_y) & (pose["cy"] >= foot_y)


def jacobian_arrays(lengths: LinkLengths, q_a, q_b, q_c, q_d):
    """Closed-form Jacobian entries; returns ``(j11, j12, j21, j22, sin_bc)``."""
    la, lb, lc, ld, ln, le = lengths.as_tuple()
    lce = lc + le
    s_bc = np.sin(np.asarray(q_b) - q_c)
    s_ab = np.sin(np.asarray(q_a) - q_b)
    s_bd = np.sin(np.asarray(q_b) - q_d)
    sc, cc = np.sin(q_c), np.cos(q_c)
    den = lc * s_bc
    with np.errstate(divide="ignore", invalid="ignore"):
        ka = la * lce * s_ab / den
        kd = ld * lce * s_bd / den
        j11 = ka * sc
        j12 = kd * sc - ld * np.sin(q_d)
        j21 = -ka * cc
        j22 = -kd * cc + ld * np.cos(q_d)
    return j11, j12, j21, j22, s_bc


def max_force_arrays(j11, j12, j21, j22, tau_max=1.0, direction="x"):
    """Largest |F| along one axis over the torque box ``|tau| <= tau_max``.

    Rows of ``(J^T)^-1`` are ``[j22, -j21] / det`` and ``[-j12, j11] / det``;
    the optimum sits on a box vertex, giving a row-absolute sum.
    """
    with np.errstate(invalid="ignore"):
        det = j11 * j22 - j12 * j21
    if direction == "x":
        p, q = j22, j21
    elif direction == "y":
        p, q = j12, j11
    else:
        raise ValueError(f"direction must be 'x' or 'y', got {direction!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        return (np.abs(p) * tau_max + np.abs(q) * tau_max) / np.abs(det)


def condition_arrays(j11, j12, j21, j22):
    """Singular-value ratio of 2x2 matrices; ``inf`` where numerically rank deficient."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # kappa is scale free; normalising first avoids under/overflow in the squares
        s = np.maximum(np.maximum(np.abs(j11), np.abs(j12)), np.maximum(np.abs(j21), np.abs(j22)))
        j11, j12, j21, j22 = j11 / s, j12 / s, j21 / s, j22 / s
        fro = j11 * j11 + j12 * j12 + j21 * j21 + j22 * j22
        det = np.abs(j11 * j22 - j12 * j21)
        disc = np.sqrt(np.maximum(fro * fro - 4.0 * det * det, 0.0))
        s_max_sq = 0.5 * (fro + disc)
        # sigma_max * sigma_min = |det|
        kappa = s_max_sq / det
    kappa = np.where(np.isnan(kappa), np.inf, np.maximum(kappa, 1.0))
    return np.where(kappa * KAPPA_INF_RATIO > 1.0, np.inf, kappa)


# ---------------------------------------------------------------------------
# scalar API


def forward_kinematics(lengths: LinkLengths, q_a: float, q_d: float,
                       branch: FkBranch = FkBranch.DOWN) -> tuple[FootState, JointSolution]:
    if not (math.isfinite(q_a) and math.isfinite(q_d)):
        raise ValueError("joint angles must be finite")
    r = fk_arrays(lengths, q_a, q_d, down=branch is FkBranch.DOWN)
    if bool(r["degenerate"]):
        raise Degenerate("elbows B_o and C_o coincide; loop direction undefined")
    if not bool(r["ok"]):
        raise Unreachable(f"links B and C cannot close the loop at q_a={q_a:.6g}, q_d={q_d:.6g}")
    pose = JointSolution(float(r["q_a"]), float(r["q_b"]), float(r["q_c"]), float(r["q_d"]), branch)
    return FootState(float(r["x"]), float(r["y"])), pose


def inverse_kinematics(lengths: LinkLengths, foot: FootState,
                       mode: WorkingMode = DEFAULT_MODE) -> JointSolution:
    if not (math.isfinite(foot.x) and math.isfinite(foot.y)):
        raise ValueError("foot position must be finite")
    r = ik_arrays(lengths, foot.x, foot.y, mode)
    if bool(r["degenerate"]):
        raise Degenerate(f"foot ({foot.x:.6g}, {foot.y:.6g}) makes an atan2 undefined")
    if not bool(r["ok"]):
        raise Unreachable(f"foot ({foot.x:.6g}, {foot.y:.6g}) outside workspace of mode {mode}")
    return JointSolution(float(r["q_a"]), float(r["q_b"]), float(r["q_c"]), float(r["q_d"]), mode)


def joint_positions(lengths: LinkLengths, pose: JointSolution) -> dict[str, tuple[float, float]]:
    """Planar positions of every named point of the linkage."""
    la, lb, lc, ld, ln, le = lengths.as_tuple()
    b = (la * math.cos(pose.q_a), la * math.sin(pose.q_a))
    c = (ln + ld * math.cos(pose.q_d), ld * math.sin(pose.q_d))
    e = (c[0] + lc * math.cos(pose.q_c), c[1] + lc * math.sin(pose.q_c))
    f = (c[0] + (lc + le) * math.cos(pose.q_c), c[1] + (lc + le) * math.sin(pose.q_c))
    return {"A_o": (0.0, 0.0), "D_o": (ln, 0.0), "B_o": b, "C_o": c, "E_o": e, "E_F": f}


def elbow_point(lengths: LinkLengths, pose: JointSolution) -> ElbowPoint:
    return ElbowPoint(*joint_positions(lengths, pose)["E_o"])


def foot_position(lengths: LinkLengths, pose: JointSolution) -> FootState:
    return FootState(*joint_positions(lengths, pose)["E_F"])


def loop_closure_residual(lengths: LinkLengths, pose: JointSolution) -> tuple[float, float]:
    """Mismatch of the two chains A-B and D-C meeting at ``E_o``."""
    la, lb, lc, ld, ln, le = lengths.as_tuple()
    rx = (la * math.cos(pose.q_a) + lb * math.cos(pose.q_b)
          - lc * math.cos(pose.q_c) - ld * math.cos(pose.q_d) - ln)
    ry = (la * math.sin(pose.q_a) + lb * math.sin(pose.q_b)
          - lc * math.sin(pose.q_c) - ld * math.sin(pose.q_d))
    return rx, ry


def fk_branch_of(lengths: LinkLengths, pose: JointSolution) -> FkBranch:
    """Classify a pose as DOWN when ``E_o`` is right of (or on) the directed line ``B_o -> C_o``."""
    p = joint_positions(lengths, pose)
    (bx, by), (cx, cy), (ex, ey) = p["B_o"], p["C_o"], p["E_o"]
    cross = (cx - bx) * (ey - by) - (cy - by) * (ex - bx)
    return FkBranch.DOWN if cross <= 0.0 else FkBranch.UP


def working_mode_of(lengths: LinkLengths, pose: JointSolution) -> WorkingMode:
    """Working mode whose inverse-kinematics roots reproduce ``pose``.

    Poses exactly on a mode boundary are assigned the ``+`` root.
    """
    p = joint_positions(lengths, pose)
    fx, fy = p["E_F"]
    ex, ey = p["E_o"]
    d_off = wrap_angle(pose.q_d - math.atan2(fy, fx - lengths.l_n))
    a_off = wrap_angle(pose.q_a - math.atan2(ey, ex))
    return WorkingMode(Sign.PLUS if a_off >= 0 else Sign.MINUS,
                       Sign.PLUS if d_off >= 0 else Sign.MINUS)


def jacobian(lengths: LinkLengths, pose: JointSolution) -> PlanarJacobian:
    j11, j12, j21, j22, s_bc = jacobian_arrays(lengths, pose.q_a, pose.q_b, pose.q_c, pose.q_d)
    if abs(float(s_bc)) < SINGULAR_SIN_TOL:
        raise Singular(f"links B and C are parallel (sin(q_b - q_c) = {float(s_bc):.3g})")
    return PlanarJacobian(float(j11), float(j12), float(j21), float(j22))


def foot_velocity(J: PlanarJacobian, qdot) -> tuple[float, float]:
    qa, qd = qdot
    return J.j11 * qa + J.j12 * qd, J.j21 * qa + J.j22 * qd


def _require_nonsingular(J: PlanarJacobian):
    if J.is_singular():
        raise Singular(f"Jacobian is singular (det = {J.det:.3g})")


def joint_velocity(J: PlanarJacobian, foot_vel) -> tuple[float, float]:
    _require_nonsingular(J)
    vx, vy = foot_vel
    det = J.det
    return (J.j22 * vx - J.j12 * vy) / det, (J.j11 * vy - J.j21 * vx) / det


def static_force(J: PlanarJacobian, tau: TorquePair) -> ForceVector:
    """Foot force balancing motor torques: solves ``J^T F = tau``."""
    _require_nonsingular(J)
    det = J.j11 * J.j22 - J.j12 * J.j21
    fx = (J.j22 * tau.tau_a - J.j21 * tau.tau_d) / det
    fy = (J.j11 * tau.tau_d - J.j12 * tau.tau_a) / det
    return ForceVector(fx, fy)


def required_torque(J: PlanarJacobian, F: ForceVector) -> TorquePair:
    return TorquePair(J.j11 * F.fx + J.j21 * F.fy, J.j12 * F.fx + J.j22 * F.fy)


def condition_number(J: PlanarJacobian) -> float:
    return float(condition_arrays(J.j11, J.j12, J.j21, J.j22))
