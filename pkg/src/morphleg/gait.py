"""Stance paths, drag-force placement search and joint-trajectory export."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import io as mio
from .analysis import GridSpec, map_rows
from .linkage import (
    DEFAULT_MODE,
    FootState,
    ForceVector,
    LinkLengths,
    Singular,
    Unreachable,
    WorkingMode,
    condition_arrays,
    fk_arrays,
    ik_arrays,
    inverse_kinematics,
    jacobian,
    jacobian_arrays,
    joint_velocity,
    max_force_arrays,
    required_torque,
    usable_mask,
)

DEFAULT_PATH_LENGTH = 0.10
DEFAULT_STANCE_SAMPLES = 51
DEFAULT_KAPPA_CAP = 100.0
DEFAULT_CLEARANCE = 0.002


class NoFeasiblePlacement(ValueError):
    pass


class Phase(Enum):
    STANCE = "stance"
    SWING = "swing"


@dataclass
class FootPath:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    phase: tuple = ()

    def __post_init__(self):
        for name in ("t", "x", "y", "vx", "vy"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        n = len(self.t)
        if any(len(getattr(self, k)) != n for k in ("x", "y", "vx", "vy")):
            raise ValueError("foot path columns differ in length")
        if n == 0:
            raise ValueError("foot path has no samples")
        if not all(np.isfinite(getattr(self, k)).all() for k in ("t", "x", "y", "vx", "vy")):
            raise ValueError("foot path contains non-finite values")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if not self.phase:
            self.phase = (Phase.STANCE,) * n
        self.phase = tuple(Phase(p) if not isinstance(p, Phase) else p for p in self.phase)
        if len(self.phase) != n:
            raise ValueError("phase labels differ in length from samples")

    def __len__(self):
        return len(self.t)

    def velocity_mismatch(self) -> float:
        """Largest gap between central differences and stored velocity at interior samples."""
        if len(self) < 3:
            return 0.0
        dt = self.t[2:] - self.t[:-2]
        fdx = (self.x[2:] - self.x[:-2]) / dt
        fdy = (self.y[2:] - self.y[:-2]) / dt
        return float(max(np.abs(fdx - self.vx[1:-1]).max(), np.abs(fdy - self.vy[1:-1]).max()))

    def to_csv(self) -> str:
        rows = (
            (t, x, y, vx, vy, p.value)
            for t, x, y, vx, vy, p in zip(self.t, self.x, self.y, self.vx, self.vy, self.phase)
        )
        return mio.csv_text(("t", "x", "y", "vx", "vy", "phase"), rows)

    @classmethod
    def from_csv(cls, text: str) -> "FootPath":
        cols = mio.read_csv_columns(text)
        missing = [k for k in ("t", "x", "y") if k not in cols]
        if missing:
            raise ValueError(f"path CSV missing columns: {', '.join(missing)}")
        n = len(cols["t"])
        data = {}
        for k in ("t", "x", "y", "vx", "vy"):
            raw = cols.get(k, ["0"] * n)
            data[k] = [mio.parse_float(s, f"{k}[{i}]") for i, s in enumerate(raw)]
        phase = tuple(Phase(p.lower()) for p in cols["phase"]) if "phase" in cols else ()
        return cls(phase=phase, **data)


def generate_stance_path(length: float, y: float, x_start: float, duration: float,
                         n: int) -> FootPath:
    """Flat, constant-velocity stance from ``x_start`` back to ``x_start - length``."""
    if not length > 0 or not duration > 0:
        raise ValueError("length and duration must be positive")
    if n < 2:
        raise ValueError("a stance path needs at least two samples")
    s = np.linspace(0.0, 1.0, n)
    vx = -length / duration
    return FootPath(
        t=s * duration,
        x=x_start - length * s,
        y=np.full(n, float(y)),
        vx=np.full(n, vx),
        vy=np.zeros(n),
        phase=(Phase.STANCE,) * n,
    )


@dataclass(frozen=True)
class PathPlacement:
    x_start: float
    y: float
    avg_force: float
    min_kappa_margin: float
    path_length: float = DEFAULT_PATH_LENGTH
    n_samples: int = DEFAULT_STANCE_SAMPLES
    kappa_max: float = DEFAULT_KAPPA_CAP
    tau_max: float = 1.0
    mode: str = DEFAULT_MODE.label

    def sample_points(self) -> tuple[np.ndarray, np.ndarray]:
        return _stance_points(self.x_start, self.y, self.path_length, self.n_samples)


def _stance_points(x_start, y, path_length, n):
    s = np.linspace(0.0, 1.0, n)
    x = np.asarray(x_start, dtype=float)[..., None] - path_length * s
    return x, np.broadcast_to(np.asarray(y, dtype=float)[..., None], x.shape)


def _inside(lengths, x, y, mode):
    pose = ik_arrays(lengths, x, y, mode)
    return pose["ok"] & usable_mask(pose, y)


def stance_forces(lengths: LinkLengths, x, y, mode: WorkingMode = DEFAULT_MODE, tau_max: float = 1.0):
    """Per-point max horizontal force, condition number and validity masks."""
    pose = ik_arrays(lengths, x, y, mode)
    inside = pose["ok"] & usable_mask(pose, y)
    j11, j12, j21, j22, s_bc = jacobian_arrays(lengths, pose["q_a"], pose["q_b"], pose["q_c"], pose["q_d"])
    kappa = condition_arrays(j11, j12, j21, j22)
    force = max_force_arrays(j11, j12, j21, j22, tau_max=tau_max, direction="x")
    regular = (np.abs(s_bc) >= 1e-12) & np.isfinite(kappa)
    return force, kappa, inside, regular


def score_candidates(lengths: LinkLengths, x_start, y, path_length: float = DEFAULT_PATH_LENGTH,
                     mode: WorkingMode = DEFAULT_MODE, tau_max: float = 1.0,
                     kappa_max: float = DEFAULT_KAPPA_CAP, n_samples: int = DEFAULT_STANCE_SAMPLES,
                     clearance: float = DEFAULT_CLEARANCE, grid: Optional[GridSpec] = None):
    """Mean stance force for each candidate start; ``-inf`` where infeasible.

    With ``grid``, the cell holding each sample and its four neighbours must
    also be workspace cells.  Returns ``(score, worst_kappa)`` arrays shaped
    like ``x_start``.
    """
    X, Y = _stance_points(x_start, y, path_length, n_samples)
    force, kappa, inside, regular = stance_forces(lengths, X, Y, mode, tau_max)
    ok = inside & regular & (kappa <= kappa_max)
    if clearance > 0:
        for dx, dy in ((clearance, 0.0), (-clearance, 0.0), (0.0, clearance), (0.0, -clearance)):
            ok &= _inside(lengths, X + dx, Y + dy, mode)
    if grid is not None:
        res = grid.resolution
        cx = grid.x_min + (np.floor((X - grid.x_min) / res) + 0.5) * res
        cy = grid.y_min + (np.floor((Y - grid.y_min) / res) + 0.5) * res
        for dx, dy in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
            ok &= _inside(lengths, cx + dx * res, cy + dy * res, mode)
    feasible = ok.all(axis=-1)
    score = np.where(feasible, np.mean(np.where(ok, force, 0.0), axis=-1), -np.inf)
    worst = np.where(feasible, np.max(np.where(ok, kappa, 0.0), axis=-1), np.inf)
    return score, worst


def _best_index(score, x, y) -> int:
    # ties: larger y (higher chassis), then smaller x_start
    order = np.lexsort((x, -y, -score))
    return int(order[0])


def optimize_path_placement(lengths: LinkLengths, path_length: float = DEFAULT_PATH_LENGTH,
                            grid: Optional[GridSpec] = None, mode: WorkingMode = DEFAULT_MODE,
                            tau_max: float = 1.0, kappa_max: float = DEFAULT_KAPPA_CAP,
                            n_samples: int = DEFAULT_STANCE_SAMPLES,
                            clearance: float = DEFAULT_CLEARANCE, refine: bool = True,
                            threads: Optional[int] = None) -> PathPlacement:
    """Find where a flat stance stroke has the greatest mean horizontal force.

    Every cell centre of ``grid`` is tried as a stroke start.  A candidate is
    feasible when each stance sample is in the usable workspace with
    ``kappa <= kappa_max`` and stays ``clearance`` away from the workspace edge
    along both axes; no sample may sit in a cell bordering the workspace edge
    of ``grid``.  With ``refine`` the grid argmax is then polished by a
    deterministic pattern search below cell size, which makes the result
    insensitive to the grid resolution.
    """
    if not path_length > 0:
        raise ValueError("path_length must be positive")
    if kappa_max < 1:
        raise ValueError("kappa_max must be >= 1")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    grid = grid if grid is not None else GridSpec.covering([lengths])
    X, Y = grid.centers()
    X, Y = X.ravel(), Y.ravel()
    pre = _inside(lengths, X, Y, mode) & _inside(lengths, X - path_length, Y, mode)
    X, Y = X[pre], Y[pre]
    if X.size == 0:
        raise NoFeasiblePlacement(f"no {path_length:g} m stroke fits in the workspace")

    kw = dict(path_length=path_length, mode=mode, tau_max=tau_max, kappa_max=kappa_max,
              n_samples=n_samples, clearance=clearance, grid=grid)
    def run(sl):
        return np.stack(score_candidates(lengths, X[sl], Y[sl], **kw), axis=-1)

    res = map_rows(run, X.size, threads, block=1024)
    score = res[:, 0]
    i = _best_index(score, X, Y)
    if score[i] == -np.inf:
        raise NoFeasiblePlacement("no candidate satisfies reachability, clearance and kappa limits")
    best = (float(score[i]), float(X[i]), float(Y[i]))

    if refine:
        dirs = np.array([(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)], float)
        h = grid.resolution / 2
        for _ in range(10_000):
            if h < 1e-7:
                break
            cx = best[1] + h * dirs[:, 0]
            cy = best[2] + h * dirs[:, 1]
            sc, _ = score_candidates(lengths, cx, cy, **kw)
            j = _best_index(sc, cx, cy)
            if sc[j] > best[0]:
                best = (float(sc[j]), float(cx[j]), float(cy[j]))
            else:
                h /= 2

    _, worst = score_candidates(lengths, np.array([best[1]]), np.array([best[2]]), **kw)
    placement = PathPlacement(best[1], best[2], best[0], float(kappa_max - worst[0]), path_length,
                              n_samples, kappa_max, tau_max, mode.label)
    avg = average_drag_force(lengths, placement, mode=mode, tau_max=tau_max)
    return PathPlacement(best[1], best[2], avg, float(kappa_max - worst[0]), path_length,
                         n_samples, kappa_max, tau_max, mode.label)


def average_drag_force(lengths: LinkLengths, placement: PathPlacement,
                       path_length: Optional[float] = None, mode: WorkingMode = DEFAULT_MODE,
                       tau_max: float = 1.0) -> float:
    """Mean of the per-sample max horizontal force over the stance stroke."""
    path_length = placement.path_length if path_length is None else path_length
    X, Y = _stance_points(np.array([placement.x_start]), np.array([placement.y]),
                          path_length, placement.n_samples)
    force, _, inside, regular = stance_forces(lengths, X, Y, mode, tau_max)
    for k in range(X.shape[-1]):
        if not inside[0, k]:
            raise Unreachable("stance sample outside the usable workspace", index=k)
        if not regular[0, k]:
            raise Singular("stance sample at a singular pose", index=k)
    return float(np.mean(force, axis=-1)[0])


def force_profile(lengths: LinkLengths, placement: PathPlacement, mode: WorkingMode = DEFAULT_MODE,
                  tau_max: float = 1.0):
    """Per-sample ``(x, y, force, kappa)`` along a placement's stance stroke."""
    X, Y = placement.sample_points()
    force, kappa, inside, _ = stance_forces(lengths, X, Y, mode, tau_max)
    force = np.where(inside, force, np.nan)
    return X, Y, force, np.where(inside, kappa, np.nan)


@dataclass
class JointTrajectory:
    t: np.ndarray
    q_a: np.ndarray
    q_d: np.ndarray
    qdot_a: np.ndarray
    qdot_d: np.ndarray
    tau_a: Optional[np.ndarray] = None
    tau_d: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def has_torque(self) -> bool:
        return self.tau_a is not None

    def to_csv(self) -> str:
        header = ["t", "q_a", "q_d", "qdot_a", "qdot_d"]
        cols = [self.t, self.q_a, self.q_d, self.qdot_a, self.qdot_d]
        if self.has_torque:
            header += ["tau_a", "tau_d"]
            cols += [self.tau_a, self.tau_d]
        return mio.csv_text(header, zip(*cols))

    @classmethod
    def from_csv(cls, text: str) -> "JointTrajectory":
        cols = mio.read_csv_columns(text)
        need = ("t", "q_a", "q_d", "qdot_a", "qdot_d")
        if any(k not in cols for k in need):
            raise ValueError(f"trajectory CSV needs columns {need}")
        arr = {k: np.array([mio.parse_float(s, k) for s in v]) for k, v in cols.items()}
        return cls(arr["t"], arr["q_a"], arr["q_d"], arr["qdot_a"], arr["qdot_d"],
                   arr.get("tau_a"), arr.get("tau_d"))


def trajectory_export(lengths: LinkLengths, path: FootPath, mode: WorkingMode = DEFAULT_MODE,
                      drag_force: Optional[ForceVector] = None) -> JointTrajectory:
    """Joint angles and rates that drive the foot along ``path``.

    With ``drag_force`` each sample also carries the torques that hold that
    foot force statically.
    """
    n = len(path)
    out = {k: np.empty(n) for k in ("q_a", "q_d", "qdot_a", "qdot_d", "tau_a", "tau_d")}
    for i in range(n):
        try:
            pose = inverse_kinematics(lengths, FootState(path.x[i], path.y[i]), mode)
        except Unreachable:
            raise Unreachable(f"foot ({path.x[i]:.6g}, {path.y[i]:.6g}) unreachable in mode {mode}",
                              index=i) from None
        try:
            J = jacobian(lengths, pose)
            qa_dot, qd_dot = joint_velocity(J, (path.vx[i], path.vy[i]))
        except Singular:
            raise Singular("singular Jacobian", index=i) from None
        out["q_a"][i], out["q_d"][i] = pose.q_a, pose.q_d
        out["qdot_a"][i], out["qdot_d"][i] = qa_dot, qd_dot
        if drag_force is not None:
            tau = required_torque(J, drag_force)
            out["tau_a"][i], out["tau_d"][i] = tau.tau_a, tau.tau_d
    taus = (out["tau_a"], out["tau_d"]) if drag_force is not None else (None, None)
    return JointTrajectory(path.t.copy(), out["q_a"], out["q_d"], out["qdot_a"], out["qdot_d"], *taus,
                           meta={"mode": mode.label})


def verify_trajectory(lengths: LinkLengths, path: FootPath, traj: JointTrajectory):
    """Worst foot-position and foot-velocity error when replaying ``traj`` through FK.

    Each sample is matched against the closer of the two FK branches.
    """
    if len(path) != len(traj):
        raise ValueError(f"path has {len(path)} samples, trajectory {len(traj)}")
    if np.any(path.t != traj.t):
        raise ValueError("path and trajectory sample times differ")
    worst_pos = worst_vel = 0.0
    for i in range(len(path)):
        best = None
        for down in (True, False):
            r = fk_arrays(lengths, traj.q_a[i], traj.q_d[i], down=down)
            if not bool(r["ok"]):
                continue
            err = math.hypot(float(r["x"]) - path.x[i], float(r["y"]) - path.y[i])
            if best is None or err < best[0]:
                best = (err, r)
        if best is None:
            return math.inf, math.inf
        err, r = best
        j11, j12, j21, j22, _ = jacobian_arrays(lengths, r["q_a"], r["q_b"], r["q_c"], r["q_d"])
        vx = float(j11) * traj.qdot_a[i] + float(j12) * traj.qdot_d[i]
        vy = float(j21) * traj.qdot_a[i] + float(j22) * traj.qdot_d[i]
        worst_pos = max(worst_pos, err)
        worst_vel = max(worst_vel, math.hypot(vx - path.vx[i], vy - path.vy[i]))
    return worst_pos, worst_vel
