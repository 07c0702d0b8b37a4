"""Exit gate: one test per acceptance criterion, each reporting a PASS/FAIL line.

Run alone with ``pytest -m acceptance``; the lines are repeated in the
terminal summary under "acceptance criteria".
"""
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, BASE, PUBLISHED_AREAS, SYM_DEG
from morphleg.analysis import (
    GridSpec,
    boundary_cells,
    capped_peak,
    condition_field,
    evaluate_points,
    ground_link_band,
    max_force_field,
    sample_workspace,
    sweep_workspace,
)
from morphleg.gait import average_drag_force, optimize_path_placement
from morphleg.linkage import (
    ALL_MODES,
    PlanarJacobian,
    TorquePair,
    condition_arrays,
    condition_number,
    fk_arrays,
    forward_kinematics,
    ik_arrays,
    jacobian_arrays,
    static_force,
)
from morphleg.morph import PRESETS, TABLE_CONFIGS

pytestmark = pytest.mark.acceptance

KAPPA_PEAK_CAP = 200.0


def report(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def lengths_of(name):
    return TABLE_CONFIGS[name].lengths


@pytest.fixture(scope="module")
def drag_placements():
    names = ("baseline", "retracted_bc", "elongated_n")
    return {n: optimize_path_placement(lengths_of(n)) for n in names}


# -- 1 -----------------------------------------------------------------------

def test_published_areas():
    t0 = time.perf_counter()
    worst_ik, worst_sweep, parts = 0.0, 0.0, []
    for name, cfg in TABLE_CONFIGS.items():
        grid = GridSpec.covering([cfg.lengths], resolution=0.002)
        area = sample_workspace(cfg.lengths, grid).area
        # independent forward sweep at 0.25 deg over joint space
        swept = sweep_workspace(cfg.lengths, grid, math.radians(0.25)).inside.sum() * grid.cell_area
        ref = PUBLISHED_AREAS[name]
        worst_ik = max(worst_ik, abs(area - ref) / ref)
        worst_sweep = max(worst_sweep, abs(swept - ref) / ref)
        parts.append(f"{name} {area:.4f}/{ref:.4f}")
    elapsed = time.perf_counter() - t0
    ok = worst_ik <= 0.10 and worst_sweep <= 0.10 and elapsed < 60
    report(1, "workspace areas", ok,
           f"worst rel err {worst_ik:.2%} (sweep oracle {worst_sweep:.2%}), {elapsed:.1f} s; "
           + ", ".join(parts))


# -- 2 -----------------------------------------------------------------------

def test_force_trends():
    base, short_ad = BASE, lengths_of("retracted_ad")
    grid = GridSpec.covering([base, short_ad])
    fb, fr = max_force_field(base, grid, "x"), max_force_field(short_ad, grid, "x")
    shared = fb.inside & fr.inside
    frac = float(np.mean(fr.values[shared] >= fb.values[shared]))
    ok_a = shared.sum() > 0 and frac >= 0.90

    long_n = lengths_of("elongated_n")
    grid_n = GridSpec.covering([base, long_n])

    def band_peak(lg):
        f = max_force_field(lg, grid_n, "x")
        k = condition_field(lg, grid_n)
        return capped_peak(f, k, KAPPA_PEAK_CAP, ground_link_band(grid_n, lg))[0]

    pb, pn = band_peak(base), band_peak(long_n)
    ok_b = pn > pb

    short_bc = lengths_of("retracted_bc")
    grid_bc = GridSpec.covering([base, short_bc])

    def vertical_peak(lg):
        return capped_peak(max_force_field(lg, grid_bc, "y"), condition_field(lg, grid_bc), KAPPA_PEAK_CAP)[0]

    vb, vr = vertical_peak(base), vertical_peak(short_bc)
    ok_c = vr < vb
    report(2, "force trends", ok_a and ok_b and ok_c,
           f"(a) retracted A&D fx >= baseline on {frac:.1%} of {int(shared.sum())} shared cells; "
           f"(b) ground-link band peak fx elongated N {pn:.1f} vs baseline {pb:.1f}; "
           f"(c) peak fy retracted B&C {vr:.1f} vs baseline {vb:.1f} (kappa <= {KAPPA_PEAK_CAP:g})")


# -- 3 -----------------------------------------------------------------------

def test_drag_force_ordering(drag_placements):
    f = {n: average_drag_force(lengths_of(n), p) for n, p in drag_placements.items()}
    ok = f["elongated_n"] > f["retracted_bc"] > f["baseline"]
    report(3, "drag ordering", ok,
           f"elongated N {f['elongated_n']:.2f} > retracted B&C {f['retracted_bc']:.2f} "
           f"> baseline {f['baseline']:.2f} N per N·m")


# -- 4 -----------------------------------------------------------------------

def loop_residual(lengths, q):
    la, lb, lc, ld, ln, _ = lengths.as_tuple()
    rx = la * np.cos(q["q_a"]) + lb * np.cos(q["q_b"]) - lc * np.cos(q["q_c"]) - ld * np.cos(q["q_d"]) - ln
    ry = la * np.sin(q["q_a"]) + lb * np.sin(q["q_b"]) - lc * np.sin(q["q_c"]) - ld * np.sin(q["q_d"])
    return np.hypot(rx, ry)


def reachable_samples(lengths, mode, n, rng):
    """``n`` uniformly drawn foot points the mode's inverse kinematics accepts."""
    g = GridSpec.covering([lengths])
    xs, ys = [], []
    have = 0
    while have < n:
        x = rng.uniform(g.x_min, g.x_max, 4 * n)
        y = rng.uniform(g.y_min, g.y_max, 4 * n)
        ok = ik_arrays(lengths, x, y, mode)["ok"]
        xs.append(x[ok])
        ys.append(y[ok])
        have += int(ok.sum())
    return np.concatenate(xs)[:n], np.concatenate(ys)[:n]


def fd_check(lengths, q, down, h=1e-7):
    """Relative Frobenius error of the closed-form Jacobian against central differences."""
    cols = []
    for da, dd in ((h, 0.0), (0.0, h)):
        p = fk_arrays(lengths, q["q_a"] + da, q["q_d"] + dd, down)
        m = fk_arrays(lengths, q["q_a"] - da, q["q_d"] - dd, down)
        cols.append(((p["x"] - m["x"]) / (2 * h), (p["y"] - m["y"]) / (2 * h)))
    j11, j12, j21, j22, _ = jacobian_arrays(lengths, q["q_a"], q["q_b"], q["q_c"], q["q_d"])
    diff = np.sqrt((cols[0][0] - j11) ** 2 + (cols[1][0] - j12) ** 2
                   + (cols[0][1] - j21) ** 2 + (cols[1][1] - j22) ** 2)
    return diff / np.sqrt(j11 ** 2 + j12 ** 2 + j21 ** 2 + j22 ** 2), (j11, j12, j21, j22)


def test_kinematic_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    configs = {**TABLE_CONFIGS, **PRESETS}
    worst_rt = worst_loop = 0.0
    n_points = n_degenerate = 0
    fd_pool = []
    for cfg in configs.values():
        lg = cfg.lengths
        for mode in ALL_MODES:
            x, y = reachable_samples(lg, mode, 10_000, rng)
            q = ik_arrays(lg, x, y, mode)
            # the assembly branch of each returned pose
            cross = (q["cx"] - q["bx"]) * (q["ey"] - q["by"]) - (q["cy"] - q["by"]) * (q["ex"] - q["bx"])
            down = cross <= 0.0
            f = fk_arrays(lg, q["q_a"], q["q_d"], down)
            # with B_o on (or within a micron of) C_o the loop direction is undefined or
            # ill conditioned: input rounding alone moves the foot by ~eps * L^2 / |B_o C_o|
            use = ~f["degenerate"] & (np.hypot(q["cx"] - q["bx"], q["cy"] - q["by"]) >= 1e-6)
            n_degenerate += int((~use).sum())
            assert np.all(f["ok"][use])
            err = np.hypot(f["x"] - x, f["y"] - y)[use]
            worst_rt = max(worst_rt, float(err.max(initial=0.0)))
            worst_loop = max(worst_loop, float(loop_residual(lg, q).max()), float(loop_residual(lg, f)[use].max(initial=0.0)))
            n_points += x.size
            live = np.nonzero(use)[0]
            pick = rng.choice(live, min(40, live.size), replace=False)
            fd_pool.append((lg, {k: q[k][pick] for k in ("q_a", "q_b", "q_c", "q_d")}, down[pick]))

    # Jacobian and power balance over well-conditioned poses away from FK folds
    worst_fd = worst_pow = 0.0
    n_fd = 0
    for lg, q, down in fd_pool:
        la, lb, lc, ld, ln, _ = lg.as_tuple()
        bx, by = la * np.cos(q["q_a"]), la * np.sin(q["q_a"])
        cx, cy = ln + ld * np.cos(q["q_d"]), ld * np.sin(q["q_d"])
        g = (bx - cx) ** 2 + (by - cy) ** 2
        fold = np.abs((lc * lc + g - lb * lb) / (2 * lc * np.sqrt(g)))
        rel, jac = fd_check(lg, q, down)
        kappa = condition_arrays(*jac)
        keep = (kappa <= 1e4) & (fold <= 1 - 1e-6)
        if n_fd + keep.sum() > 1000:
            keep &= np.cumsum(keep) <= 1000 - n_fd
        n_fd += int(keep.sum())
        worst_fd = max(worst_fd, float(rel[keep].max(initial=0.0)))
        for i in np.nonzero(keep & (kappa <= 1e3))[0]:
            J = PlanarJacobian(*(float(j[i]) for j in jac))
            tau = TorquePair(*rng.normal(size=2))
            qdot = rng.normal(size=2)
            F = static_force(J, tau)
            vx, vy = J.j11 * qdot[0] + J.j12 * qdot[1], J.j21 * qdot[0] + J.j22 * qdot[1]
            lhs, rhs = F.fx * vx + F.fy * vy, tau.tau_a * qdot[0] + tau.tau_d * qdot[1]
            scale = max(math.hypot(F.fx, F.fy) * math.hypot(vx, vy),
                        math.hypot(tau.tau_a, tau.tau_d) * math.hypot(*qdot))
            worst_pow = max(worst_pow, abs(lhs - rhs) / scale)
    elapsed = time.perf_counter() - t0
    ok = (worst_rt < 1e-9 and worst_fd < 1e-6 and worst_pow < 1e-12 and worst_loop < 1e-9
          and n_fd >= 1000 and elapsed < 10)
    report(4, "kinematic properties", ok,
           f"FK(IK) {worst_rt:.1e} m over {n_points} points ({len(configs)} configs x 4 modes, "
           f"{n_degenerate} with |B_o C_o| < 1 um skipped); Jacobian vs FD {worst_fd:.1e} on {n_fd} poses; "
           f"power balance {worst_pow:.1e}; loop closure {worst_loop:.1e} m; {elapsed:.1f} s")


# -- 5 -----------------------------------------------------------------------

def test_oracle_equivalence(drag_placements):
    rng = np.random.default_rng(11)
    grid = GridSpec.covering([BASE])
    X, Y = grid.centers()
    _, _, jac, _ = evaluate_points(BASE, X, Y)
    mismatches = 0
    for axis, key in ((0, "x"), (1, "y")):
        fld = max_force_field(BASE, grid, key)
        rows, cols = np.nonzero(fld.inside)
        for i in rng.choice(rows.size, 100, replace=False):
            r, c = rows[i], cols[i]
            J = PlanarJacobian(*(float(j[r, c]) for j in jac))
            best = max(abs((F.fx, F.fy)[axis])
                       for F in (static_force(J, TorquePair(a, d)) for a in (-1.0, 1.0) for d in (-1.0, 1.0)))
            mismatches += best != fld.values[r, c]

    changes = {}
    for name, coarse in drag_placements.items():
        lg = lengths_of(name)
        fine = optimize_path_placement(lg, grid=GridSpec.covering([lg]).refined())
        changes[name] = abs(fine.avg_force - coarse.avg_force) / coarse.avg_force
    worst = max(changes.values())
    report(5, "oracle equivalence", mismatches == 0 and worst < 0.02,
           f"vertex enumeration vs row-sum formula: {mismatches} mismatches at 2 x 100 cells; "
           "placement score change 2 mm -> 1 mm: "
           + ", ".join(f"{n} {v:.2%}" for n, v in changes.items()))


# -- 6 -----------------------------------------------------------------------

def test_condition_numbers():
    rng = np.random.default_rng(3)
    low = 0
    for cfg in {**TABLE_CONFIGS, **PRESETS}.values():
        k = condition_field(cfg.lengths, GridSpec.covering([cfg.lengths], resolution=0.004))
        low += int(np.sum(k.values[k.inside] < 1.0))
    m = rng.normal(size=(4, 100_000)) * 10.0 ** rng.uniform(-8, 8, size=100_000)
    low += int(np.sum(condition_arrays(*m) < 1.0))
    ident = condition_number(PlanarJacobian(1.0, 0.0, 0.0, 1.0))

    foot, _ = forward_kinematics(BASE, *map(math.radians, SYM_DEG))
    d = np.logspace(-3, -10, 36)
    _, inside, jac, _ = evaluate_points(BASE, np.full_like(d, foot.x), foot.y - d)
    near = float(condition_arrays(*jac)[inside].max())

    grid = GridSpec.covering([BASE])
    k = condition_field(BASE, grid)
    edge = boundary_cells(k.inside)
    m_int, m_edge = np.median(k.values[k.inside & ~edge]), np.median(k.values[edge])
    ok = low == 0 and ident == 1.0 and near > 1e3 and m_int < m_edge
    report(6, "condition numbers", ok,
           f"{low} values below 1; kappa(I) = {ident:g}; max kappa within 1 mm of the "
           f"120/60 deg singular pose {near:.2e}; baseline median interior {m_int:.2f} "
           f"< boundary {m_edge:.2f}")


# -- 7 -----------------------------------------------------------------------

CLI_SCRIPT = [
    ["workspace", "baseline", "--out", "ws"],
    ["forcemap", "baseline", "--direction", "x", "--kappa-max", "200", "--out", "fx"],
    ["forcemap", "retracted_bc", "--direction", "y", "--out", "fy"],
    ["compare", "--out", "report.json", "--table", "report.txt"],
    ["pathopt", "elongated_n", "--out", "place.json", "--profile", "profile.csv"],
    ["stance", "--y", "-0.102", "--x-start", "0.312", "--n", "41", "--out", "path.csv"],
    ["traj", "baseline", "path.csv", "--drag-fx", "-10", "--out", "traj.csv"],
    ["verify-traj", "baseline", "path.csv", "traj.csv"],
    ["morph", "--from", "baseline", "--to", "rescue", "--foot", "0.037,-0.139",
     "--steps", "20", "--kappa-max", "50", "--out", "morph.csv"],
]


def run_script(workdir: Path, threads: int):
    workdir.mkdir()
    env = {**os.environ, "MORPHLEG_THREADS": str(threads)}
    record = []
    for argv in CLI_SCRIPT:
        p = subprocess.run([sys.executable, "-m", "morphleg", *argv], cwd=workdir, env=env,
                           capture_output=True)
        record.append((argv[0], p.returncode, p.stdout, p.stderr))
    files = {f.name: f.read_bytes() for f in sorted(workdir.iterdir())}
    return record, files


def test_cli_determinism(tmp_path):
    runs = [run_script(tmp_path / f"run{i}_t{t}", t) for i, t in enumerate((1, 4, 1, 4))]
    record, files = runs[0]
    failed = [name for name, code, _, _ in record if code != 0]
    differ = sorted({a[0] for r, _ in runs[1:] for a, b in zip(record, r) if a != b}
                    | {fn for _, f in runs[1:] for fn in set(files) | set(f) if files.get(fn) != f.get(fn)})
    ok = not failed and not differ and len(files) >= 10
    report(7, "determinism", ok,
           f"{len(CLI_SCRIPT)} commands x 4 runs (threads 1, 4, 1, 4), {len(files)} files; "
           f"nonzero exits {failed or 'none'}; differing outputs {differ or 'none'}")
