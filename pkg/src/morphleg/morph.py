"""Mode presets, configuration comparison reports and stance-time morph plans."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import io as mio
from .analysis import (
    EmptyWorkspace,
    GridSpec,
    condition_field,
    evaluate_points,
    max_force_field,
    sample_workspace,
)
from .linkage import (
    DEFAULT_MODE,
    condition_arrays,
    FootState,
    JointSolution,
    LinkageError,
    LinkLengths,
    WorkingMode,
    condition_number,
    inverse_kinematics,
    jacobian,
)

BASE = LinkLengths(0.10, 0.20, 0.20, 0.10, 0.10, 0.05)
PEAK_KAPPA_CAP = 200.0


@dataclass(frozen=True)
class ModePreset:
    name: str
    lengths: LinkLengths


PRESETS = {
    p.name: p
    for p in (
        ModePreset("baseline", BASE),
        # large workspace: long passive links, motors together
        ModePreset("search", replace(BASE, l_b=0.30, l_c=0.30, l_n=0.0)),
        # concentrated drag force: short passive links, motors apart
        ModePreset("rescue", replace(BASE, l_b=0.15, l_c=0.15, l_n=0.20)),
        ModePreset("drag_demo", replace(BASE, l_b=0.18, l_c=0.18, l_n=0.13)),
    )
}

# one-at-a-time variations of the base geometry over the morphing range
TABLE_CONFIGS = {
    p.name: p
    for p in (
        ModePreset("baseline", BASE),
        ModePreset("retracted_ad", replace(BASE, l_a=0.05, l_d=0.05)),
        ModePreset("elongated_ad", replace(BASE, l_a=0.15, l_d=0.15)),
        ModePreset("retracted_bc", replace(BASE, l_b=0.15, l_c=0.15)),
        ModePreset("elongated_bc", replace(BASE, l_b=0.30, l_c=0.30)),
        ModePreset("retracted_e", replace(BASE, l_e=0.0)),
        ModePreset("elongated_e", replace(BASE, l_e=0.10)),
        ModePreset("retracted_n", replace(BASE, l_n=0.0)),
        ModePreset("elongated_n", replace(BASE, l_n=0.20)),
    )
}


def preset(name: str) -> ModePreset:
    key = name.strip().lower().replace("-", "_")
    if key == "dragdemo":
        key = "drag_demo"
    for table in (PRESETS, TABLE_CONFIGS):
        if key in table:
            return table[key]
    known = sorted(set(PRESETS) | set(TABLE_CONFIGS))
    raise KeyError(f"unknown preset {name!r}; known: {', '.join(known)}")


@dataclass
class ReportRow:
    name: str
    lengths: LinkLengths
    area: float = math.nan
    peak_fx: float = math.nan
    peak_fy: float = math.nan
    median_kappa: float = math.nan
    error: Optional[str] = None

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "lengths_m": dict(zip(("l_a", "l_b", "l_c", "l_d", "l_n", "l_e"), self.lengths.as_tuple())),
            "workspace_area_m2": _json_num(self.area),
            "peak_horizontal_force_n_per_nm": _json_num(self.peak_fx),
            "peak_vertical_force_n_per_nm": _json_num(self.peak_fy),
            "median_condition_number": _json_num(self.median_kappa),
            "error": self.error,
        }


def _json_num(v: float):
    return None if not math.isfinite(v) else float(mio.fmt(v))


@dataclass
class ComparisonReport:
    rows: list[ReportRow]
    meta: dict = field(default_factory=dict)

    def row(self, name: str) -> ReportRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_json(self) -> str:
        doc = {"meta": self.meta, "rows": [r.as_dict() for r in self.rows]}
        return json.dumps(doc, indent=2) + "\n"

    def to_text(self) -> str:
        header = ("name", "area_m2", "peak_fx", "peak_fy", "median_kappa", "note")
        body = []
        for r in self.rows:
            cells = [r.name] + [mio.fmt(v) for v in (r.area, r.peak_fx, r.peak_fy, r.median_kappa)]
            body.append(cells + [r.error or ""])
        widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(header)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
        for b in body:
            lines.append("  ".join(c.ljust(w) for c, w in zip(b, widths)).rstrip())
        return "\n".join(lines) + "\n"


def evaluate_configuration(name: str, lengths: LinkLengths, grid: GridSpec,
                           mode: WorkingMode = DEFAULT_MODE, kappa_cap: float = PEAK_KAPPA_CAP,
                           threads: Optional[int] = None) -> ReportRow:
    row = ReportRow(name, lengths)
    try:
        ws = sample_workspace(lengths, grid, mode, threads)
    except EmptyWorkspace as exc:
        row.error = f"empty workspace: {exc}"
        return row
    row.area = ws.area
    kappa = condition_field(lengths, grid, mode, threads)
    fx = max_force_field(lengths, grid, "x", 1.0, mode, kappa_cap, threads)
    fy = max_force_field(lengths, grid, "y", 1.0, mode, kappa_cap, threads)
    row.peak_fx = fx.peak()[0]
    row.peak_fy = fy.peak()[0]
    k = kappa.values[kappa.inside]
    row.median_kappa = float(np.median(k)) if k.size else math.nan
    if ws.grid_too_coarse:
        row.error = "grid too coarse: fewer than 100 occupied cells"
    return row


def compare_configurations(configs: Sequence[ModePreset], grid: Optional[GridSpec] = None,
                           mode: WorkingMode = DEFAULT_MODE, kappa_cap: float = PEAK_KAPPA_CAP,
                           threads: Optional[int] = None) -> ComparisonReport:
    """Workspace area, peak per-N·m forces and median condition number per configuration.

    All rows share one grid (by default the smallest one covering every
    configuration).  Peaks skip cells with condition number above ``kappa_cap``.
    Rows that fail carry an ``error`` instead of aborting the report.
    """
    if not configs:
        raise ValueError("need at least one configuration")
    grid = grid if grid is not None else GridSpec.covering([c.lengths for c in configs])
    rows = [evaluate_configuration(c.name, c.lengths, grid, mode, kappa_cap, threads) for c in configs]
    meta = {
        "grid": {"x_min": grid.x_min, "x_max": grid.x_max, "y_min": grid.y_min,
                 "y_max": grid.y_max, "resolution": grid.resolution},
        "mode": mode.label,
        "tau_max_nm": 1.0,
        "peak_kappa_cap": kappa_cap,
        "note": "presets keep the ankle extension l_e at its base value",
    }
    return ComparisonReport(rows, meta)


class InfeasibleStep(ValueError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"morph step {index} infeasible: {reason}")
        self.index = index


@dataclass
class MorphPlan:
    steps: list[tuple[LinkLengths, Optional[JointSolution]]]
    foot_hold: FootState
    kappa_max: float

    def to_csv(self) -> str:
        rows = []
        for i, (lg, pose) in enumerate(self.steps):
            q = (pose.q_a, pose.q_d) if pose is not None else (math.nan, math.nan)
            rows.append((str(i),) + lg.as_tuple() + q)
        return mio.csv_text(("step", "l_a", "l_b", "l_c", "l_d", "l_n", "l_e", "q_a", "q_d"), rows)


def interpolate_lengths(start: LinkLengths, end: LinkLengths, i: int, n: int) -> LinkLengths:
    f = i / (n - 1)
    return LinkLengths(*(a + f * (b - a) for a, b in zip(start.as_tuple(), end.as_tuple())))


def morph_plan(start: ModePreset, end: ModePreset, foot_hold: FootState, n_steps: int = 20,
               mode: WorkingMode = DEFAULT_MODE, kappa_max: float = math.inf,
               hold_foot: bool = True) -> MorphPlan:
    """Linearly interpolate link lengths while the foot stays planted.

    Each step must reach ``foot_hold`` in ``mode`` with condition number at
    most ``kappa_max``; otherwise ``InfeasibleStep`` names the first bad step.
    With ``hold_foot=False`` (swing-time morphing) the IK checks are skipped.
    """
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")
    steps = []
    for i in range(n_steps):
        lg = interpolate_lengths(start.lengths, end.lengths, i, n_steps)
        if not hold_foot:
            steps.append((lg, None))
            continue
        try:
            pose = inverse_kinematics(lg, foot_hold, mode)
            k = condition_number(jacobian(lg, pose))
        except LinkageError as exc:
            raise InfeasibleStep(i, str(exc)) from None
        if not k <= kappa_max:
            raise InfeasibleStep(i, f"condition number {k:.4g} exceeds {kappa_max:g}")
        steps.append((lg, pose))
    return MorphPlan(steps, foot_hold, kappa_max)


def morph_feasible_mask(start: ModePreset, end: ModePreset, grid: GridSpec, n_steps: int = 20,
                        mode: WorkingMode = DEFAULT_MODE, kappa_max: float = math.inf) -> np.ndarray:
    """Cells whose centre is a valid foot hold for every step of the morph."""
    X, Y = grid.centers()
    ok = np.ones(grid.shape, dtype=bool)
    for i in range(n_steps):
        lg = interpolate_lengths(start.lengths, end.lengths, i, n_steps)
        pose, _, jac, regular = evaluate_points(lg, X, Y, mode)
        ok &= pose["ok"] & regular & (condition_arrays(*jac) <= kappa_max)
    return ok
