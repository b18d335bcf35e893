"""Grids, band masks, sampled spectral functions and their serialization."""

import numpy as np
import pytest

from calwave import (
    SpectralFunction,
    UniformGrid,
    build_quadrature,
    builtin_group,
    evaluate_offgrid,
    load_spectral,
    mask_catalog,
    save_spectral,
)
from calwave.spectral import (
    check_mask_invariance,
    default_null_guard,
    export_csv,
    union_mask,
)
from calwave.transform import allpass_mask

ALLPASS = allpass_mask()


def test_grid_basics():
    grid = UniformGrid.from_extent([4, 8], [[-1.0, 1.0], [0.0, 4.0]])
    assert grid.spacing == (0.5, 0.5)
    assert grid.origin == (-1.0, 0.0)
    assert grid.points().shape == (32, 2)
    assert np.isclose(grid.cell_volume, 0.25)
    assert grid.close_to(UniformGrid.from_extent([4, 8], [[-1, 1], [0, 4]]))


def test_grid_validation():
    with pytest.raises(ValueError):
        UniformGrid(shape=(1,), spacing=(0.1,), origin=(0.0,))
    with pytest.raises(ValueError):
        UniformGrid(shape=(4,), spacing=(-0.1,), origin=(0.0,))


def test_l2_norm_gaussian_oracle():
    grid = UniformGrid.from_extent([4096], [[-10.0, 10.0]])
    f = SpectralFunction.from_callable(
        grid, lambda p: np.exp(-np.atleast_2d(p)[:, 0] ** 2), ALLPASS
    )
    # ||e^{-x^2}||_2 = (pi/2)^{1/4}
    assert abs(f.l2_norm() - (np.pi / 2) ** 0.25) < 1e-6


def test_values_zeroed_off_mask():
    grid = UniformGrid.from_extent([64], [[-2.0, 2.0]])
    mask = mask_catalog("halfplane_strip", {"lo": 0.0, "hi": 1.0}, 0.0)
    f = SpectralFunction.from_callable(grid, lambda p: np.ones(len(p)), mask)
    pts = grid.points()
    assert np.all(f.values.ravel()[~mask(pts)] == 0)
    assert np.all(f.values.ravel()[mask(pts)] == 1)


def test_interpolation_exact_cases():
    grid = UniformGrid.from_extent([32, 32], [[-1, 1], [-1, 1]])
    f = SpectralFunction.from_callable(
        grid, lambda p: 2.0 * p[:, 0] - 3.0 * p[:, 1] + 1.0, ALLPASS
    )
    pts = grid.points()
    assert np.allclose(evaluate_offgrid(f, pts).real,
                       f.values.ravel().real, atol=1e-12)
    # multilinear interpolation reproduces affine functions exactly
    rng = np.random.default_rng(0)
    rand = rng.uniform(-0.9, 0.9, size=(100, 2))
    expect = 2.0 * rand[:, 0] - 3.0 * rand[:, 1] + 1.0
    assert np.allclose(evaluate_offgrid(f, rand).real, expect, atol=1e-12)
    # zero outside the bounding box and off the support mask
    assert evaluate_offgrid(f, np.array([5.0, 0.0])) == 0
    masked = SpectralFunction.from_callable(
        grid, lambda p: np.ones(len(p)),
        mask_catalog("annulus", {"r1": 0.2, "r2": 0.8}, 0.0),
    )
    assert evaluate_offgrid(masked, np.array([0.95, 0.0])) == 0


def test_boundary_level():
    grid = UniformGrid.from_extent([16, 16], [[-1, 1], [-1, 1]])
    f = SpectralFunction.from_callable(grid, lambda p: np.ones(len(p)), ALLPASS)
    assert f.boundary_level() == 1.0
    g = SpectralFunction.from_callable(
        grid, lambda p: np.exp(-10 * np.sum(np.atleast_2d(p) ** 2, axis=1)),
        ALLPASS,
    )
    assert g.boundary_level() < 1e-3


def test_save_load_roundtrip(tmp_path):
    grid = UniformGrid.from_extent([32, 16], [[-2, 2], [0, 4]])
    mask = mask_catalog("annulus", {"r1": 0.5, "r2": 3.0}, 0.1)
    f = SpectralFunction.from_callable(
        grid, lambda p: p[:, 0] + 1j * p[:, 1], mask
    )
    path = tmp_path / "f.cwsf"
    save_spectral(path, f)
    g = load_spectral(path)
    assert g.grid.close_to(f.grid)
    assert np.allclose(g.values, f.values)
    assert g.mask.name == "annulus" and g.mask.params["r2"] == 3.0


def test_load_rejects_foreign_file(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"not a spectral file")
    with pytest.raises(ValueError):
        load_spectral(path)


def test_export_csv(tmp_path):
    grid = UniformGrid.from_extent([8], [[-1, 1]])
    f = SpectralFunction.from_callable(grid, lambda p: p[:, 0], ALLPASS)
    path = tmp_path / "f.csv"
    export_csv(path, f)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "xi,re,im"
    assert len(lines) == 9
    grid2 = UniformGrid.from_extent([8, 8], [[-1, 1], [-1, 1]])
    f2 = SpectralFunction.from_callable(grid2, lambda p: np.ones(len(p)), ALLPASS)
    export_csv(path, f2)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "axis,coord,re,im"
    assert len(lines) == 17


def test_mask_geometry():
    ann = mask_catalog("annulus", {"r1": 1.0, "r2": 2.0}, 0.1)
    assert ann(np.array([[1.5, 0.0]]))[0]
    assert not ann(np.array([[2.5, 0.0]]))[0]
    # interior shrinks by the null guard at both band edges
    assert ann(np.array([[1.05, 0.0]]))[0]
    assert not ann.interior(np.array([[1.05, 0.0]]))[0]
    quad = mask_catalog("quadrant", {"signs": "+-"}, 0.05)
    assert quad(np.array([[1.0, -1.0]]))[0]
    assert not quad(np.array([[1.0, 1.0]]))[0]
    cone = mask_catalog("cone", {"slope": 1.0}, 0.1)
    assert cone(np.array([[2.0, 0.5]]))[0]
    assert not cone(np.array([[0.5, 2.0]]))[0]
    strip = mask_catalog("halfplane_strip",
                         {"lo": 0.5, "hi": 2.0, "two_sided": True}, 0.0)
    assert strip(np.array([[-1.0, 3.0]]))[0]
    assert not strip(np.array([[0.2, 0.0]]))[0]
    with pytest.raises(ValueError):
        mask_catalog("nonsense", {}, 0.0)


def test_union_mask():
    a = mask_catalog("quadrant", {"signs": "++"}, 0.05)
    b = mask_catalog("quadrant", {"signs": "--"}, 0.05)
    u = union_mask([a, b])
    pts = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])
    assert list(u(pts)) == [True, True, False]


def test_default_null_guard():
    grid = UniformGrid.from_extent([128, 64], [[-4, 4], [-4, 4]])
    assert np.isclose(default_null_guard(grid), 2 * 8 / 64)


INVARIANT_PAIRS = [
    ("dilation1d_full", "full", {}, None),
    ("similitude2", "full", {}, None),
    ("rotation2", "annulus", {"r1": 1.0, "r2": 2.0}, None),
    ("diag_pos(2)", "quadrant", {"signs": "++"}, None),
    ("shear2", "halfplane_strip", {"lo": 0.5, "hi": 4.0}, [(-4.0, 4.0)]),
]


@pytest.mark.parametrize("gname,mname,params,trunc", INVARIANT_PAIRS)
def test_mask_invariance_catalog_pairs(gname, mname, params, trunc):
    g = builtin_group(gname)
    grid = UniformGrid.from_extent([128] * g.d, [[-8.0, 8.0]] * g.d)
    mask = mask_catalog(mname, params, default_null_guard(grid))
    res = [32] if g.k == 1 or gname == "dilation1d_full" else [16] * 2
    q = build_quadrature(g, res, trunc)
    out = check_mask_invariance(g, mask, grid, q)
    assert out["checked"] > 0
    assert out["agreement"] == 1.0


def test_cone_not_shear_scale_invariant():
    # the straight cone is not preserved by the anisotropic a vs sqrt(a)
    # scaling, so agreement must drop well below the warning threshold
    g = builtin_group("shear_scale2")
    grid = UniformGrid.from_extent([128, 128], [[-8.0, 8.0], [-8.0, 8.0]])
    mask = mask_catalog("cone", {"slope": 1.0}, default_null_guard(grid))
    q = build_quadrature(g, [16, 16], [(-4.0, 4.0), (-6.0, 6.0)])
    out = check_mask_invariance(g, mask, grid, q)
    assert out["agreement"] < 0.99
