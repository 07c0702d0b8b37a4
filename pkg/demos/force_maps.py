"""Horizontal and vertical force capacity over the workspace.

Writes PGM heat maps into ``demos/out`` and prints where each design is
strongest.  Values are newtons of foot force per N·m of motor torque.
"""
from pathlib import Path

import numpy as np

from morphleg import io as mio
from morphleg.analysis import (
    GridSpec,
    ScalarField,
    capped_peak,
    condition_field,
    ground_link_band,
    max_force_field,
)
from morphleg.morph import PRESETS, TABLE_CONFIGS

OUT = Path(__file__).with_name("out")
OUT.mkdir(exist_ok=True)
KAPPA_CAP = 200.0

names = ["baseline", "retracted_ad", "retracted_bc", "elongated_n"]
configs = {n: TABLE_CONFIGS[n].lengths for n in names}
configs["rescue"] = PRESETS["rescue"].lengths
grid = GridSpec.covering(configs.values())

print(f"{'config':<14}{'peak fx':>9}{'band fx':>9}{'peak fy':>9}   (kappa <= {KAPPA_CAP:g})")
fields = {}
for name, lg in configs.items():
    k = condition_field(lg, grid)
    fx, fy = max_force_field(lg, grid, "x"), max_force_field(lg, grid, "y")
    fields[name] = fx
    band = capped_peak(fx, k, KAPPA_CAP, ground_link_band(grid, lg))[0]
    print(f"{name:<14}{capped_peak(fx, k, KAPPA_CAP)[0]:>9.1f}{band:>9.1f}{capped_peak(fy, k, KAPPA_CAP)[0]:>9.1f}")
    # log scale keeps the near-singular spikes from washing out the map
    with np.errstate(divide="ignore"):
        log_fx = ScalarField(grid, np.log10(fx.values), fx.kind)
    mio.atomic_write(OUT / f"{name}_fx.pgm", mio.field_pgm(log_fx))

base, short = fields["baseline"], fields["retracted_ad"]
shared = base.inside & short.inside
frac = np.mean(short.values[shared] >= base.values[shared])
print(f"\nshort motor links out-push the base leg on {frac:.0%} of the cells both can reach")
print(f"maps written to {OUT}")
