import math

import numpy as np
import pytest

from conftest import AREA_GRID, BASE
from morphleg.analysis import (
    EmptyWorkspace,
    FieldKind,
    GridSpec,
    KindMismatch,
    ScalarField,
    boundary_cells,
    condition_field,
    evaluate_points,
    max_force_field,
    sample_workspace,
    sweep_workspace,
    workspace_area,
)
from morphleg.linkage import (
    FootState,
    LinkLengths,
    PlanarJacobian,
    TorquePair,
    condition_arrays,
    fk_branch_of,
    forward_kinematics,
    inverse_kinematics,
    static_force,
)
from morphleg.morph import TABLE_CONFIGS


def dilate(mask):
    pad = np.pad(mask, 1)
    out = np.zeros_like(mask)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            out |= pad[dy:dy + mask.shape[0], dx:dx + mask.shape[1]]
    return out


# -- grid --------------------------------------------------------------------

def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(0.1, 0.1, 0.0, 1.0, 0.01)
    with pytest.raises(ValueError):
        GridSpec(0.0, 1.0, 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        GridSpec(0.0, 10.0, 0.0, 10.0, 1e-4)  # 10^10 cells


def test_grid_centres_and_index():
    g = GridSpec(-0.01, 0.01, 0.0, 0.006, 0.002)
    assert g.shape == (3, 10)
    assert g.x_centers()[0] == pytest.approx(-0.009)
    assert g.y_centers()[-1] == pytest.approx(0.005)
    assert g.cell_index(-0.009, 0.005) == (2, 0)
    assert g.refined().resolution == 0.001


def test_covering_grid_loses_no_cells():
    wide = GridSpec(-0.6, 0.8, -0.6, 0.4, 0.002)
    for p in TABLE_CONFIGS.values():
        own = GridSpec.covering([p.lengths])
        assert sample_workspace(p.lengths, own).area == sample_workspace(p.lengths, wide).area


# -- workspace ---------------------------------------------------------------

def test_baseline_area_near_published():
    ws = sample_workspace(BASE, AREA_GRID)
    assert ws.area == pytest.approx(0.0902, rel=0.10)
    assert not ws.grid_too_coarse
    assert ws.field.kind is FieldKind.WORKSPACE
    assert set(np.unique(ws.field.values)) <= {0.0, 1.0}
    assert ws.area == workspace_area(ws.field)


@pytest.mark.parametrize("name,expected", [("retracted_ad", 0.0291), ("elongated_bc", 0.1336)])
def test_variant_areas_near_published(name, expected):
    grid = GridSpec.covering([TABLE_CONFIGS[name].lengths])
    assert sample_workspace(TABLE_CONFIGS[name].lengths, grid).area == pytest.approx(expected, rel=0.10)


def test_sweep_oracle_differs_only_at_the_edge():
    grid = GridSpec.covering([BASE])
    ws = sample_workspace(BASE, grid).field.inside
    sw = sweep_workspace(BASE, grid).inside
    # every cell centre the IK accepts is also hit by some swept pose
    assert not np.any(ws & ~sw)
    # the sweep also marks partly covered cells, all within a few cells of an edge
    near = boundary_cells(ws) | boundary_cells(~ws)
    for _ in range(4):
        near = dilate(near)
    assert not np.any(sw & ~ws & ~near)
    assert (sw.sum() - ws.sum()) / ws.sum() < 0.05


def test_resolution_convergence():
    grid = GridSpec.covering([BASE])
    a2 = sample_workspace(BASE, grid).area
    a1 = sample_workspace(BASE, grid.refined()).area
    assert abs(a1 - a2) / a1 < 0.02


def test_mirror_symmetry_for_symmetric_lengths():
    lg = LinkLengths(0.10, 0.20, 0.20, 0.10, 0.10, 0.0)
    c = lg.l_n / 2
    grid = GridSpec(c - 0.35, c + 0.35, -0.35, 0.35, 0.002)
    inside = sample_workspace(lg, grid).field.inside
    mirrored = inside[:, ::-1]
    diff = inside ^ mirrored
    assert np.all(dilate(boundary_cells(inside))[diff])
    assert diff.sum() < 0.01 * inside.sum()


def test_empty_workspace_and_coarse_flag():
    with pytest.raises(EmptyWorkspace):
        sample_workspace(BASE, GridSpec(2.0, 3.0, 2.0, 3.0, 0.01))
    coarse = sample_workspace(BASE, GridSpec(-0.4, 0.6, -0.5, 0.5, 0.05))
    assert coarse.grid_too_coarse


def test_workspace_area_trivial_fields():
    g = GridSpec(0.0, 0.02, 0.0, 0.02, 0.002)
    empty = ScalarField(g, np.zeros(g.shape), FieldKind.WORKSPACE)
    assert workspace_area(empty) == 0.0
    one = np.zeros(g.shape)
    one[3, 4] = 1.0
    assert workspace_area(ScalarField(g, one, FieldKind.WORKSPACE)) == pytest.approx(4e-6, rel=1e-12)
    with pytest.raises(KindMismatch):
        workspace_area(ScalarField(g, one, FieldKind.CONDITION_NUMBER))


def test_field_shape_checked():
    g = GridSpec(0.0, 0.02, 0.0, 0.02, 0.002)
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((3, 3)), FieldKind.WORKSPACE)


# -- force and condition fields ----------------------------------------------

@pytest.fixture(scope="module")
def base_grid():
    return GridSpec.covering([BASE])


@pytest.fixture(scope="module")
def base_fields(base_grid):
    return {
        "ws": sample_workspace(BASE, base_grid).field,
        "fx": max_force_field(BASE, base_grid, "x"),
        "fy": max_force_field(BASE, base_grid, "y"),
        "k": condition_field(BASE, base_grid),
    }


def test_force_fields_nonnegative_and_inside(base_fields):
    ws = base_fields["ws"].inside
    for key in ("fx", "fy"):
        f = base_fields[key]
        v = f.values[f.inside]
        assert np.all(v >= 0) and np.all(np.isfinite(v))
        assert not np.any(f.inside & ~ws)
        # only singular cells drop out of the workspace
        assert f.inside.sum() > 0.99 * ws.sum()


def test_force_field_equals_vertex_enumeration(base_grid, base_fields):
    rng = np.random.default_rng(7)
    X, Y = base_grid.centers()
    _, _, jac, _ = evaluate_points(BASE, X, Y)
    for key, axis in (("fx", 0), ("fy", 1)):
        fld = base_fields[key]
        rows, cols = np.nonzero(fld.inside)
        pick = rng.choice(rows.size, 100, replace=False)
        for r, c in zip(rows[pick], cols[pick]):
            J = PlanarJacobian(*(float(j[r, c]) for j in jac))
            forces = [static_force(J, TorquePair(sa, sd)) for sa in (-1.0, 1.0) for sd in (-1.0, 1.0)]
            best = max(abs((F.fx, F.fy)[axis]) for F in forces)
            assert best == fld.values[r, c]


def test_force_scales_with_torque_budget(base_grid, base_fields):
    zero = max_force_field(BASE, base_grid, "x", tau_max=0.0)
    assert np.all(zero.values[zero.inside] == 0.0)
    assert zero.inside.sum() == base_fields["fx"].inside.sum()
    two = max_force_field(BASE, base_grid, "x", tau_max=2.0)
    m = two.inside
    np.testing.assert_allclose(two.values[m], 2 * base_fields["fx"].values[m], rtol=1e-15)


def test_kappa_cap_masks_cells(base_grid, base_fields):
    capped = max_force_field(BASE, base_grid, "x", kappa_max=20.0)
    k = base_fields["k"].values
    assert np.all(k[capped.inside] <= 20.0)
    assert capped.inside.sum() < base_fields["fx"].inside.sum()


def test_condition_field_bounds(base_fields):
    k = base_fields["k"]
    v = k.values[k.inside]
    assert np.all(v >= 1.0)
    assert np.array_equal(k.inside, base_fields["ws"].inside)


def test_condition_grows_towards_the_boundary(base_fields):
    k = base_fields["k"]
    edge = boundary_cells(k.inside)
    interior = k.inside & ~edge
    assert np.median(k.values[interior]) < np.median(k.values[edge])


def test_kappa_blows_up_next_to_a_singular_pose(sym_angles):
    foot, _ = forward_kinematics(BASE, *sym_angles)
    d = np.logspace(-3, -10, 8)
    _, inside, jac, _ = evaluate_points(BASE, foot.x + 0 * d, foot.y - d)
    kappa = condition_arrays(*jac)
    assert np.all(inside)
    assert np.all(np.diff(kappa) > 0)
    assert kappa.max() > 1e3


def test_every_cell_round_trips_into_itself(base_grid, base_fields):
    rng = np.random.default_rng(8)
    f = base_fields["k"]
    rows, cols = np.nonzero(f.inside)
    xs, ys = base_grid.x_centers(), base_grid.y_centers()
    for i in rng.choice(rows.size, 300, replace=False):
        r, c = rows[i], cols[i]
        pose = inverse_kinematics(BASE, FootState(xs[c], ys[r]))
        foot, _ = forward_kinematics(BASE, pose.q_a, pose.q_d, fk_branch_of(BASE, pose))
        assert base_grid.cell_index(foot.x, foot.y) == (r, c)


def test_fields_identical_across_thread_counts(base_grid):
    for fn in (lambda t: max_force_field(BASE, base_grid, "y", threads=t),
               lambda t: condition_field(BASE, base_grid, threads=t),
               lambda t: sample_workspace(BASE, base_grid, threads=t).field,
               lambda t: sweep_workspace(BASE, base_grid, math.radians(1.0), threads=t)):
        a, b = fn(1), fn(4)
        assert a.values.tobytes() == b.values.tobytes()


def test_peak_reports_cell_centre(base_fields):
    f = base_fields["fx"]
    v, x, y = f.peak()
    assert v == np.nanmax(f.values)
    assert f.value_at(x, y) == v
