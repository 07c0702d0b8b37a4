"""Rasterised workspace, force-capacity and condition-number fields.

Every field is evaluated at cell centres by inverse kinematics in one working
mode, so a finite cell always has a concrete pose behind it.  Cells whose pose
puts an elbow below the foot are outside the usable workspace and hold NaN.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional

import numpy as np

from .linkage import (
    DEFAULT_MODE,
    LinkLengths,
    WorkingMode,
    condition_arrays,
    fk_arrays,
    ik_arrays,
    jacobian_arrays,
    max_force_arrays,
    usable_mask,
    wrap_angle,
)

MAX_CELLS = 10_000_000
MIN_OCCUPIED_CELLS = 100
DEFAULT_RESOLUTION = 0.002
DEFAULT_ANGULAR_STEP = math.radians(0.25)
THREADS_ENV = "MORPHLEG_THREADS"


class AnalysisError(ValueError):
    pass


class EmptyWorkspace(AnalysisError):
    pass


class KindMismatch(AnalysisError):
    pass


class FieldKind(Enum):
    WORKSPACE = "workspace"
    HORIZONTAL_FORCE = "horizontal_force"
    VERTICAL_FORCE = "vertical_force"
    CONDITION_NUMBER = "condition_number"


class Direction(Enum):
    HORIZONTAL = "x"
    VERTICAL = "y"

    @classmethod
    def parse(cls, value) -> "Direction":
        if isinstance(value, Direction):
            return value
        aliases = {"x": cls.HORIZONTAL, "horizontal": cls.HORIZONTAL,
                   "y": cls.VERTICAL, "vertical": cls.VERTICAL}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown direction {value!r}") from None


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    resolution: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"empty grid extent: {self}")
        if not self.resolution > 0:
            raise ValueError("grid resolution must be positive")
        if self.nx * self.ny > MAX_CELLS:
            raise ValueError(f"grid has {self.nx * self.ny} cells, limit is {MAX_CELLS}")

    @staticmethod
    def _count(span: float, res: float) -> int:
        n = span / res
        return max(1, int(round(n)) if abs(n - round(n)) < 1e-6 else math.ceil(n))

    @property
    def nx(self) -> int:
        return self._count(self.x_max - self.x_min, self.resolution)

    @property
    def ny(self) -> int:
        return self._count(self.y_max - self.y_min, self.resolution)

    @property
    def shape(self) -> tuple[int, int]:
        return self.ny, self.nx

    @property
    def cell_area(self) -> float:
        return self.resolution * self.resolution

    def x_centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.nx) + 0.5) * self.resolution

    def y_centers(self) -> np.ndarray:
        return self.y_min + (np.arange(self.ny) + 0.5) * self.resolution

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-centre coordinates as two ``(ny, nx)`` arrays; row 0 is ``y_min``."""
        return np.meshgrid(self.x_centers(), self.y_centers())

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        """``(row, col)`` of the cell containing a point."""
        return (int(math.floor((y - self.y_min) / self.resolution)),
                int(math.floor((x - self.x_min) / self.resolution)))

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.x_min, self.x_max, self.y_min, self.y_max, self.resolution / factor)

    @classmethod
    def covering(cls, configs: Iterable[LinkLengths], resolution: float = DEFAULT_RESOLUTION,
                 pad: int = 2) -> "GridSpec":
        """Smallest resolution-aligned grid enclosing every config's reachable set.

        Bounds are snapped to integer multiples of ``resolution`` so grids built
        for different configurations share cell centres.
        """
        xs0, xs1, ys0, ys1 = [], [], [], []
        for lg in configs:
            ra = lg.l_a + lg.l_b + lg.l_e
            rd = lg.l_d + lg.l_c + lg.l_e
            xs0.append(max(-ra, lg.l_n - rd))
            xs1.append(min(ra, lg.l_n + rd))
            ys0.append(-min(ra, rd))
            # the foot never rises above an elbow in the usable workspace
            ys1.append(max(lg.l_a, lg.l_d))
        if not xs0:
            raise ValueError("need at least one configuration")

        def snap(v, up):
            k = v / resolution
            k = math.ceil(k - 1e-9) if up else math.floor(k + 1e-9)
            return (k + (pad if up else -pad)) * resolution

        return cls(snap(min(xs0), False), snap(max(xs1), True),
                   snap(min(ys0), False), snap(max(ys1), True), resolution)


@dataclass
class ScalarField:
    grid: GridSpec
    values: np.ndarray
    kind: FieldKind
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")

    @property
    def inside(self) -> np.ndarray:
        """Cells belonging to the usable workspace."""
        if self.kind is FieldKind.WORKSPACE:
            return self.values == 1.0
        return ~np.isnan(self.values)

    @property
    def empty(self) -> bool:
        return not bool(self.inside.any())

    def value_at(self, x: float, y: float) -> float:
        r, c = self.grid.cell_index(x, y)
        if not (0 <= r < self.grid.ny and 0 <= c < self.grid.nx):
            return math.nan
        return float(self.values[r, c])

    def peak(self, mask: Optional[np.ndarray] = None) -> tuple[float, float, float]:
        """Largest finite value and its cell centre ``(value, x, y)``; NaNs if none.

        Ties resolve to the first cell in row-major order.
        """
        v = np.where(np.isfinite(self.values), self.values, -np.inf)
        if mask is not None:
            v = np.where(mask, v, -np.inf)
        flat = int(np.argmax(v))
        best = v.flat[flat]
        if best == -np.inf:
            return math.nan, math.nan, math.nan
        r, c = divmod(flat, self.grid.nx)
        return float(best), float(self.grid.x_centers()[c]), float(self.grid.y_centers()[r])


@dataclass
class WorkspaceResult:
    field: ScalarField
    area: float
    grid_too_coarse: bool = False


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
        try:
            threads = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if threads < 0:
        raise ValueError("thread count must be >= 0")
    return threads or (os.cpu_count() or 1)


def map_rows(fn: Callable[[slice], np.ndarray], n_rows: int, threads: Optional[int] = None,
             block: int = 64) -> np.ndarray:
    """Evaluate ``fn`` on row blocks and stack the results in row order.

    Blocks are fixed-size and independent of the thread count, so the output
    is identical for any level of parallelism.
    """
    slices = [slice(i, min(i + block, n_rows)) for i in range(0, n_rows, block)]
    n = resolve_threads(threads)
    if n == 1 or len(slices) == 1:
        parts = [fn(s) for s in slices]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            parts = list(pool.map(fn, slices))
    return np.concatenate(parts, axis=0)


def _grid_or_default(lengths: LinkLengths, grid: Optional[GridSpec]) -> GridSpec:
    return grid if grid is not None else GridSpec.covering([lengths])


def evaluate_points(lengths: LinkLengths, x, y, mode: WorkingMode = DEFAULT_MODE):
    """Pose, usable-workspace mask and Jacobian for arbitrary foot points."""
    pose = ik_arrays(lengths, x, y, mode)
    inside = pose["ok"] & usable_mask(pose, y)
    j11, j12, j21, j22, s_bc = jacobian_arrays(lengths, pose["q_a"], pose["q_b"], pose["q_c"], pose["q_d"])
    return pose, inside, (j11, j12, j21, j22), np.abs(s_bc) >= 1e-12


def _rows(grid: GridSpec, rows: slice):
    xs = grid.x_centers()
    ys = grid.y_centers()[rows]
    return np.meshgrid(xs, ys)


def workspace_mask(lengths: LinkLengths, grid: GridSpec, mode: WorkingMode = DEFAULT_MODE,
                   threads: Optional[int] = None) -> np.ndarray:
    def block(rows):
        X, Y = _rows(grid, rows)
        pose = ik_arrays(lengths, X, Y, mode)
        return pose["ok"] & usable_mask(pose, Y)

    return map_rows(block, grid.ny, threads)


def sample_workspace(lengths: LinkLengths, grid: Optional[GridSpec] = None,
                     mode: WorkingMode = DEFAULT_MODE, threads: Optional[int] = None) -> WorkspaceResult:
    """Usable workspace of one working mode, rasterised at cell centres.

    Raises ``EmptyWorkspace`` when no cell is reachable.  ``grid_too_coarse``
    is set when fewer than 100 cells are occupied.
    """
    grid = _grid_or_default(lengths, grid)
    inside = workspace_mask(lengths, grid, mode, threads)
    fld = ScalarField(grid, inside.astype(np.float64), FieldKind.WORKSPACE, {"mode": mode.label})
    count = int(inside.sum())
    if count == 0:
        raise EmptyWorkspace(f"no reachable cell for {lengths}")
    return WorkspaceResult(fld, workspace_area(fld), count < MIN_OCCUPIED_CELLS)


def sweep_workspace(lengths: LinkLengths, grid: Optional[GridSpec] = None,
                    angular_step: float = DEFAULT_ANGULAR_STEP,
                    mode: Optional[WorkingMode] = DEFAULT_MODE,
                    threads: Optional[int] = None) -> ScalarField:
    """Workspace membership by forward sweep over joint space.

    Every ``(q_a, q_d)`` on a regular lattice over ``[-pi, pi)^2`` is pushed
    through both FK branches; poses passing the elbow filter (and, unless
    ``mode`` is None, belonging to ``mode``) mark the cell their foot lands in.
    Independent of :func:`sample_workspace`, and used to cross-check it.
    """
    if not angular_step > 0:
        raise ValueError("angular_step must be positive")
    grid = _grid_or_default(lengths, grid)
    q = np.arange(-math.pi, math.pi, angular_step)
    ln = lengths.l_n

    def block(rows):
        hit = np.zeros(grid.shape, dtype=bool)
        qa, qd = np.meshgrid(q[rows], q, indexing="ij")
        for down in (True, False):
            r = fk_arrays(lengths, qa, qd, down=down)
            keep = r["ok"] & usable_mask(r, r["y"])
            if mode is not None:
                d_off = wrap_angle(r["q_d"] - np.arctan2(r["y"], r["x"] - ln))
                a_off = wrap_angle(r["q_a"] - np.arctan2(r["ey"], r["ex"]))
                keep &= np.where(d_off >= 0, 1, -1) == mode.sign_d.value
                keep &= np.where(a_off >= 0, 1, -1) == mode.sign_a.value
            ix = np.floor((r["x"][keep] - grid.x_min) / grid.resolution).astype(np.int64)
            iy = np.floor((r["y"][keep] - grid.y_min) / grid.resolution).astype(np.int64)
            sel = (ix >= 0) & (ix < grid.nx) & (iy >= 0) & (iy < grid.ny)
            hit[iy[sel], ix[sel]] = True
        return hit[None]

    hits = map_rows(block, len(q), threads)
    inside = hits.any(axis=0)
    meta = {"mode": mode.label if mode else "any", "angular_step": angular_step}
    return ScalarField(grid, inside.astype(np.float64), FieldKind.WORKSPACE, meta)


def max_force_field(lengths: LinkLengths, grid: Optional[GridSpec] = None, direction="x",
                    tau_max: float = 1.0, mode: WorkingMode = DEFAULT_MODE,
                    kappa_max: float = math.inf, threads: Optional[int] = None) -> ScalarField:
    """Largest foot force along one axis available from the torque box.

    With ``tau_max = 1`` the values read as newtons per newton-meter.  Cells
    outside the workspace, singular, or with condition number above
    ``kappa_max`` are NaN.
    """
    if tau_max < 0:
        raise ValueError("tau_max must be non-negative")
    if kappa_max < 1:
        raise ValueError("kappa_max must be >= 1")
    direction = Direction.parse(direction)
    grid = _grid_or_default(lengths, grid)

    def block(rows):
        X, Y = _rows(grid, rows)
        _, inside, jac, regular = evaluate_points(lengths, X, Y, mode)
        force = max_force_arrays(*jac, tau_max=tau_max, direction=direction.value)
        kappa = condition_arrays(*jac)
        keep = inside & regular & np.isfinite(kappa) & (kappa <= kappa_max) & np.isfinite(force)
        return np.where(keep, force, np.nan)

    kind = FieldKind.HORIZONTAL_FORCE if direction is Direction.HORIZONTAL else FieldKind.VERTICAL_FORCE
    meta = {"mode": mode.label, "tau_max": tau_max, "kappa_max": kappa_max}
    return ScalarField(grid, map_rows(block, grid.ny, threads), kind, meta)


def condition_field(lengths: LinkLengths, grid: Optional[GridSpec] = None,
                    mode: WorkingMode = DEFAULT_MODE, threads: Optional[int] = None) -> ScalarField:
    """Jacobian condition number per workspace cell (``inf`` at singular cells)."""
    grid = _grid_or_default(lengths, grid)

    def block(rows):
        X, Y = _rows(grid, rows)
        _, inside, jac, regular = evaluate_points(lengths, X, Y, mode)
        kappa = np.where(regular, condition_arrays(*jac), np.inf)
        return np.where(inside, kappa, np.nan)

    return ScalarField(grid, map_rows(block, grid.ny, threads), FieldKind.CONDITION_NUMBER,
                       {"mode": mode.label})


def workspace_area(fld: ScalarField) -> float:
    if fld.kind is not FieldKind.WORKSPACE:
        raise KindMismatch(f"expected a workspace field, got {fld.kind.value}")
    return int(np.count_nonzero(fld.values == 1.0)) * fld.grid.cell_area


def boundary_cells(inside: np.ndarray) -> np.ndarray:
    """Inside cells with at least one 4-neighbour outside (or on the grid edge)."""
    pad = np.pad(inside, 1, constant_values=False)
    interior = pad[1:-1, 1:-1] & pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    return inside & ~interior


def central_band(grid: GridSpec, center_x: float, half_width: float) -> np.ndarray:
    X, _ = grid.centers()
    return np.abs(X - center_x) <= half_width


def ground_link_band(grid: GridSpec, lengths: LinkLengths, min_half_width: float = 0.02) -> np.ndarray:
    """Columns of cells directly beneath the ground link, at least ``2 * min_half_width`` wide."""
    return central_band(grid, lengths.l_n / 2, max(lengths.l_n / 2, min_half_width))


def capped_peak(force: ScalarField, kappa: Optional[ScalarField] = None,
                kappa_cap: float = math.inf, mask: Optional[np.ndarray] = None):
    """Peak of a force field over cells with condition number at most ``kappa_cap``."""
    keep = force.inside
    if kappa is not None:
        keep = keep & (kappa.values <= kappa_cap)
    if mask is not None:
        keep = keep & mask
    return force.peak(keep)
