"""Command-line front end.

Linkage config files are plain ``key = value`` text with lengths in
CENTIMETERS (``l_a .. l_e``; grid keys ``resolution, x_min, x_max, y_min,
y_max`` also in cm).  Command-line flags are in SI units.

Exit codes: 0 ok, 1 verification failed, 2 bad config or arguments,
3 empty workspace, 4 no feasible placement, 5 unreachable or singular
sample, 6 infeasible morph step.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import io as mio
from .analysis import EmptyWorkspace, GridSpec, ground_link_band, max_force_field, sample_workspace
from .gait import (
    DEFAULT_KAPPA_CAP,
    DEFAULT_PATH_LENGTH,
    FootPath,
    JointTrajectory,
    NoFeasiblePlacement,
    force_profile,
    generate_stance_path,
    optimize_path_placement,
    trajectory_export,
    verify_trajectory,
)
from .linkage import (
    DEFAULT_MODE,
    FootState,
    ForceVector,
    LinkageError,
    LinkLengths,
    WorkingMode,
)
from .morph import TABLE_CONFIGS, InfeasibleStep, ModePreset, compare_configurations, morph_plan, preset

EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_EMPTY = 3
EXIT_NO_PLACEMENT = 4
EXIT_SAMPLE = 5
EXIT_MORPH = 6

LENGTH_KEYS = ("l_a", "l_b", "l_c", "l_d", "l_n", "l_e")
GRID_KEYS = ("resolution", "x_min", "x_max", "y_min", "y_max")
OTHER_KEYS = ("preset", "name", "mode", "kappa_max", "tau_max")
MODE_ALIASES = {"mp": "-+", "pm": "+-", "pp": "++", "mm": "--"}


class ConfigError(ValueError):
    pass


@dataclass
class LinkageConfig:
    name: str
    lengths: LinkLengths
    mode: WorkingMode = DEFAULT_MODE
    grid: dict = None
    kappa_max: Optional[float] = None
    tau_max: Optional[float] = None


def parse_mode(text: str) -> WorkingMode:
    text = MODE_ALIASES.get(text.strip().lower(), text)
    try:
        return WorkingMode.from_label(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str, name: str = "config") -> LinkageConfig:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split(sep, 1))
        key = key.lower()
        if key not in LENGTH_KEYS + GRID_KEYS + OTHER_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = val

    def number(key):
        try:
            v = float(values[key])
        except ValueError:
            raise ConfigError(f"key {key!r}: not a number: {values[key]!r}") from None
        if math.isnan(v):
            raise ConfigError(f"key {key!r}: NaN not allowed")
        return v

    base = None
    if "preset" in values:
        try:
            base = preset(values["preset"]).lengths
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
    cm = {}
    for key in LENGTH_KEYS:
        if key in values:
            cm[key] = number(key)
        elif base is not None:
            cm[key] = getattr(base, key) * 100.0
        else:
            raise ConfigError(f"missing length key {key!r}")
    try:
        lengths = LinkLengths.from_cm(*(cm[k] for k in LENGTH_KEYS))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    grid = {k: number(k) / 100.0 for k in GRID_KEYS if k in values}
    return LinkageConfig(
        name=values.get("name", name),
        lengths=lengths,
        mode=parse_mode(values["mode"]) if "mode" in values else DEFAULT_MODE,
        grid=grid,
        kappa_max=number("kappa_max") if "kappa_max" in values else None,
        tau_max=number("tau_max") if "tau_max" in values else None,
    )


def load_config(ref: str) -> LinkageConfig:
    """A config file path, or the name of a built-in preset."""
    path = Path(ref)
    if path.is_file():
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {ref}: {exc}") from None
        return parse_config(text, name=path.stem)
    try:
        p = preset(ref)
    except KeyError:
        raise ConfigError(f"{ref!r} is neither a readable config file nor a preset name") from None
    return LinkageConfig(p.name, p.lengths, grid={})


def build_grid(cfg: LinkageConfig, args, extra: tuple[LinkLengths, ...] = ()) -> GridSpec:
    g = dict(cfg.grid or {})
    for key in GRID_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            g[key] = v
    res = g.get("resolution", 0.002)
    auto = GridSpec.covering((cfg.lengths,) + extra, res)
    try:
        return GridSpec(g.get("x_min", auto.x_min), g.get("x_max", auto.x_max),
                        g.get("y_min", auto.y_min), g.get("y_max", auto.y_max), res)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _mode(cfg: LinkageConfig, args) -> WorkingMode:
    return parse_mode(args.mode) if getattr(args, "mode", None) else cfg.mode


def _pick(flag, cfg_value, default):
    if flag is not None:
        return flag
    return cfg_value if cfg_value is not None else default


def _write_all(files: dict) -> None:
    for path, data in files.items():
        mio.atomic_write(path, data)


def _prefix(out: str, suffix: str) -> Path:
    p = Path(out)
    return p.with_suffix(suffix) if p.suffix in (".csv", ".pgm", ".json") else Path(str(p) + suffix)


def _say(line: str) -> None:
    sys.stdout.write(line + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_workspace(args) -> int:
    cfg = load_config(args.config)
    grid = build_grid(cfg, args)
    ws = sample_workspace(cfg.lengths, grid, _mode(cfg, args), args.threads)
    _write_all({_prefix(args.out, ".csv"): mio.field_csv(ws.field),
                _prefix(args.out, ".pgm"): mio.field_pgm(ws.field)})
    _say(f"area_m2 {mio.fmt(ws.area)}")
    if ws.grid_too_coarse:
        _say("warning: fewer than 100 occupied cells; grid too coarse")
    return 0


def cmd_forcemap(args) -> int:
    cfg = load_config(args.config)
    grid = build_grid(cfg, args)
    tau_max = _pick(args.tau_max, cfg.tau_max, 1.0)
    kappa_max = _pick(args.kappa_max, cfg.kappa_max, math.inf)
    if tau_max < 0 or kappa_max < 1:
        raise ConfigError("need tau_max >= 0 and kappa_max >= 1")
    fld = max_force_field(cfg.lengths, grid, args.direction, tau_max, _mode(cfg, args), kappa_max,
                          args.threads)
    if fld.empty:
        raise EmptyWorkspace(f"no usable cell for {cfg.name}")
    _write_all({_prefix(args.out, ".csv"): mio.field_csv(fld),
                _prefix(args.out, ".pgm"): mio.field_pgm(fld)})
    peak, x, y = fld.peak()
    _say(f"peak_force_n {mio.fmt(peak)} at x {mio.fmt(x)} y {mio.fmt(y)}")
    peak, x, y = fld.peak(ground_link_band(grid, cfg.lengths))
    _say(f"central_peak_force_n {mio.fmt(peak)} at x {mio.fmt(x)} y {mio.fmt(y)}")
    return 0


def _compare_inputs(refs: list[str]) -> list[ModePreset]:
    if not refs or refs == ["table"]:
        return list(TABLE_CONFIGS.values())
    out = []
    for ref in refs:
        p = Path(ref)
        if p.is_dir():
            files = sorted(f for f in p.iterdir() if f.is_file() and f.suffix in (".cfg", ".conf", ".txt"))
            if not files:
                raise ConfigError(f"no config files in directory {ref}")
            out.extend(ModePreset(c.name, c.lengths) for c in map(load_config, map(str, files)))
        else:
            c = load_config(ref)
            out.append(ModePreset(c.name, c.lengths))
    return out


def cmd_compare(args) -> int:
    configs = _compare_inputs(args.configs)
    res = args.resolution if args.resolution is not None else 0.002
    grid = GridSpec.covering([c.lengths for c in configs], res)
    mode = parse_mode(args.mode) if args.mode else DEFAULT_MODE
    report = compare_configurations(configs, grid, mode, threads=args.threads)
    text = report.to_text()
    files = {Path(args.out): report.to_json()}
    if args.table:
        files[Path(args.table)] = text
    _write_all(files)
    sys.stdout.write(text)
    if all(r.error and math.isnan(r.area) for r in report.rows):
        return EXIT_EMPTY
    return 0


def _placement_json(name, pl) -> str:
    doc = {
        "config": name,
        "x_start_m": float(mio.fmt(pl.x_start)),
        "y_m": float(mio.fmt(pl.y)),
        "avg_force_n_per_nm": float(mio.fmt(pl.avg_force)),
        "min_kappa_margin": float(mio.fmt(pl.min_kappa_margin)),
        "path_length_m": pl.path_length,
        "n_samples": pl.n_samples,
        "kappa_max": pl.kappa_max if math.isfinite(pl.kappa_max) else None,
        "tau_max_nm": pl.tau_max,
        "mode": pl.mode,
    }
    return json.dumps(doc, indent=2) + "\n"


def cmd_pathopt(args) -> int:
    cfg = load_config(args.config)
    grid = build_grid(cfg, args)
    mode = _mode(cfg, args)
    tau_max = _pick(args.tau_max, cfg.tau_max, 1.0)
    kappa_max = _pick(args.kappa_max, cfg.kappa_max, DEFAULT_KAPPA_CAP)
    if not args.path_length > 0 or kappa_max < 1 or tau_max < 0:
        raise ConfigError("need path_length > 0, kappa_max >= 1, tau_max >= 0")
    pl = optimize_path_placement(cfg.lengths, args.path_length, grid, mode, tau_max, kappa_max,
                                 threads=args.threads)
    X, Y, force, kappa = force_profile(cfg.lengths, pl, mode, tau_max)
    rows = ((str(i), x, y, f, k) for i, (x, y, f, k) in enumerate(zip(X, Y, force, kappa)))
    profile = args.profile or _prefix(args.out, ".csv")
    _write_all({Path(args.out): _placement_json(cfg.name, pl),
                Path(profile): mio.csv_text(("sample", "x", "y", "force_x", "kappa"), rows)})
    _say(f"x_start {mio.fmt(pl.x_start)} y {mio.fmt(pl.y)} avg_force {mio.fmt(pl.avg_force)}")
    return 0


def cmd_stance(args) -> int:
    path = generate_stance_path(args.length, args.y, args.x_start, args.duration, args.n)
    mio.atomic_write(args.out, path.to_csv())
    return 0


def _read_path(ref: str) -> FootPath:
    try:
        return FootPath.from_csv(Path(ref).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"bad path CSV {ref}: {exc}") from None


def cmd_traj(args) -> int:
    cfg = load_config(args.config)
    path = _read_path(args.path)
    drag = None
    if args.drag_fx is not None or args.drag_fy is not None:
        drag = ForceVector(args.drag_fx or 0.0, args.drag_fy or 0.0)
    traj = trajectory_export(cfg.lengths, path, _mode(cfg, args), drag)
    mio.atomic_write(args.out, traj.to_csv())
    return 0


def cmd_verify_traj(args) -> int:
    cfg = load_config(args.config)
    path = _read_path(args.path)
    try:
        traj = JointTrajectory.from_csv(Path(args.traj).read_text(encoding="utf-8"))
        pos, vel = verify_trajectory(cfg.lengths, path, traj)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"bad trajectory {args.traj}: {exc}") from None
    ok = pos <= args.tol and vel <= args.tol
    _say(f"max_position_error_m {mio.fmt(pos)} max_velocity_error_mps {mio.fmt(vel)} "
         f"{'PASS' if ok else 'FAIL'}")
    return 0 if ok else EXIT_VERIFY


def _parse_point(text: str) -> FootState:
    try:
        x, y = (float(t) for t in text.split(","))
    except ValueError:
        raise ConfigError(f"--foot expects 'x,y' in meters, got {text!r}") from None
    return FootState(x, y)


def cmd_morph(args) -> int:
    start, end = load_config(args.start), load_config(args.end)
    plan = morph_plan(ModePreset(start.name, start.lengths), ModePreset(end.name, end.lengths),
                      _parse_point(args.foot), args.steps,
                      parse_mode(args.mode) if args.mode else DEFAULT_MODE,
                      args.kappa_max if args.kappa_max is not None else math.inf,
                      hold_foot=not args.swing)
    mio.atomic_write(args.out, plan.to_csv())
    return 0


# ---------------------------------------------------------------------------


def _grid_flags(p):
    p.add_argument("--resolution", type=float, help="cell size in meters (default 0.002)")
    for k in ("x_min", "x_max", "y_min", "y_max"):
        p.add_argument("--" + k.replace("_", "-"), dest=k, type=float, help="grid bound in meters")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="morphleg", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $MORPHLEG_THREADS, 0 = all cores)")
    sub = parser.add_subparsers(dest="command", required=True)
    mode_help = "working mode, e.g. --mode=-+ (or mp, pm, pp, mm)"

    p = sub.add_parser("workspace", help="usable workspace membership and area")
    p.add_argument("config")
    _grid_flags(p)
    p.add_argument("--mode", help=mode_help)
    p.add_argument("--out", required=True, help="output prefix for .csv and .pgm")
    p.set_defaults(func=cmd_workspace)

    p = sub.add_parser("forcemap", help="max foot force per N·m of motor torque")
    p.add_argument("config")
    p.add_argument("--direction", choices=("x", "y"), default="x")
    p.add_argument("--tau-max", type=float)
    p.add_argument("--kappa-max", type=float)
    _grid_flags(p)
    p.add_argument("--mode", help=mode_help)
    p.add_argument("--out", required=True, help="output prefix for .csv and .pgm")
    p.set_defaults(func=cmd_forcemap)

    p = sub.add_parser("compare", help="comparison report over several configurations")
    p.add_argument("configs", nargs="*", help="config files, directories or preset names "
                                              "(default: the nine one-at-a-time variations)")
    p.add_argument("--resolution", type=float)
    p.add_argument("--mode", help=mode_help)
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--table", help="also write the text table here")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("pathopt", help="best placement of a flat stance stroke")
    p.add_argument("config")
    p.add_argument("--path-length", type=float, default=DEFAULT_PATH_LENGTH, help="meters")
    p.add_argument("--kappa-max", type=float)
    p.add_argument("--tau-max", type=float)
    _grid_flags(p)
    p.add_argument("--mode", help=mode_help)
    p.add_argument("--out", required=True, help="placement JSON path")
    p.add_argument("--profile", help="per-sample force CSV (default: --out with .csv)")
    p.set_defaults(func=cmd_pathopt)

    p = sub.add_parser("stance", help="write a flat constant-velocity stance path CSV")
    p.add_argument("--length", type=float, default=DEFAULT_PATH_LENGTH)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--x-start", type=float, required=True)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--n", type=int, default=51)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stance)

    p = sub.add_parser("traj", help="joint trajectory for a foot path CSV")
    p.add_argument("config")
    p.add_argument("path", help="CSV with columns t,x,y[,vx,vy,phase]")
    p.add_argument("--mode", help=mode_help)
    p.add_argument("--drag-fx", type=float, help="foot force on ground, N (adds tau columns)")
    p.add_argument("--drag-fy", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_traj)

    p = sub.add_parser("verify-traj", help="replay a trajectory through FK against its path")
    p.add_argument("config")
    p.add_argument("path")
    p.add_argument("traj")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_verify_traj)

    p = sub.add_parser("morph", help="stance-time morph plan between two configurations")
    p.add_argument("--from", dest="start", required=True, help="preset name or config file")
    p.add_argument("--to", dest="end", required=True)
    p.add_argument("--foot", required=True, help="foot hold 'x,y' in meters (use --foot=-0.1,-0.2)")
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--kappa-max", type=float)
    p.add_argument("--mode", help=mode_help)
    p.add_argument("--swing", action="store_true", help="foot free: skip IK checks")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_morph)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"morphleg: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyWorkspace as exc:
        print(f"morphleg: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except NoFeasiblePlacement as exc:
        print(f"morphleg: {exc}", file=sys.stderr)
        return EXIT_NO_PLACEMENT
    except InfeasibleStep as exc:
        print(f"morphleg: {exc}", file=sys.stderr)
        return EXIT_MORPH
    except LinkageError as exc:
        print(f"morphleg: {exc}", file=sys.stderr)
        return EXIT_SAMPLE
    except ValueError as exc:
        print(f"morphleg: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
