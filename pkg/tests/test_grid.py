import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import cKDTree

from heispmc import grid
from heispmc.errors import DomainError, StencilUnderflow
from heispmc.grid import Disk, GridDomain, Rectangle, ScalarField


def test_unit_disk_area_by_cell_count():
    d = GridDomain.build("disk:1", 1 / 64)
    assert d.area == pytest.approx(math.pi, rel=0.01)
    assert d.perimeter == pytest.approx(2 * math.pi, abs=1e-15)


def test_unit_square_perimeter_exact():
    d = GridDomain.build("square", 1 / 64)
    assert d.perimeter == 4.0
    assert d.boundary_geometry().area == 1.0


def test_self_intersecting_polygon_rejected():
    with pytest.raises(DomainError):
        GridDomain.build("polygon:0,0;1,1;1,0;0,1", 1 / 64)


@pytest.mark.parametrize("spec", ["disk:0", "rect:0,0,0,1", "polygon:0,0;1,0", "blob:3", "disk:a"])
def test_degenerate_specs_rejected(spec):
    with pytest.raises(DomainError):
        GridDomain.build(spec, 1 / 32)


def test_too_coarse_rejected():
    with pytest.raises(DomainError):
        GridDomain.build("disk:1", 0.3)
    with pytest.raises(DomainError):
        GridDomain.build("disk:1", 0.0)


@pytest.mark.parametrize("spec", ["disk:1", "disk:0.3,0.2,0.7", "square", "rect:-1,0,1,0.5", "polygon:0,0;2,0;1,1.5"])
def test_mask_consistency_and_connectedness(spec):
    from scipy import ndimage

    d = GridDomain.build(spec, 1 / 64)
    assert set(np.unique(d.mask)) == {grid.EXTERIOR, grid.BOUNDARY, grid.INTERIOR}
    # boundary cells are exactly the inside cells with an exterior 8-neighbour
    ext = ~d.inside
    near = ndimage.binary_dilation(ext, structure=np.ones((3, 3), bool))
    assert np.array_equal(d.boundary_cells, d.inside & near)
    assert ndimage.label(d.interior)[1] == 1


@pytest.mark.parametrize("spec", ["disk:1", "disk:0.3,0.2,0.7", "square"])
def test_boundary_samples_near_boundary_cells(spec):
    # a cell-centred mask only guarantees sqrt(2) h for smooth boundaries
    for h in (1 / 32, 1 / 128):
        d = GridDomain.build(spec, h)
        pts = np.column_stack([d.X[d.boundary_cells], d.Y[d.boundary_cells]])
        dist, _ = cKDTree(pts).query(d.boundary_geometry().points)
        assert dist.max() <= math.sqrt(2) * h


def test_disk_boundary_curvature_exact():
    bg = Disk((0.2, -0.1), 0.4).boundary(0.01)
    assert np.all(bg.curvature == 1 / 0.4)
    assert np.allclose(np.hypot(*bg.normals.T), 1.0)
    r = bg.points - np.array([0.2, -0.1])
    assert np.allclose(np.sum(r * bg.normals, axis=1), 0.4)


def test_polygon_boundary_normals_outward():
    bg = grid.parse_shape("polygon:0,0;2,0;1,1.5").boundary(0.01)
    c = np.array([1.0, 0.5])
    assert np.all(np.sum((bg.points - c) * bg.normals, axis=1) > 0)
    assert bg.perimeter == pytest.approx(2 + 2 * math.hypot(1, 1.5))
    assert bg.area == pytest.approx(1.5)


def test_gradient_linear_exact_everywhere():
    d = GridDomain.build("disk:1", 1 / 32)
    gx, gy = grid.gradient(ScalarField.from_function(d, lambda x, y: 3 * x - 2 * y))
    assert np.allclose(gx[d.inside], 3.0, atol=1e-12)
    assert np.allclose(gy[d.inside], -2.0, atol=1e-12)


def test_gradient_quadratic_central_exact():
    d = GridDomain.build("disk:1", 1 / 128)
    gx, _ = grid.gradient(ScalarField.from_function(d, lambda x, y: x**2))
    i, j = d.cell_index(0.5 + d.h / 2, d.h / 2)
    # x^2 at the cell centre x_i: the central difference equals 2 x_i
    assert gx[i, j] == 2 * d.xc[i]
    # and a second-order one-sided stencil is exact on quadratics too
    assert np.allclose(gx[d.inside], 2 * d.X[d.inside], atol=1e-11)


def test_gradient_stencil_underflow():
    d = GridDomain.on_lattice(Rectangle(0.0, 0.0, 1.0, 0.12), 0.1, 14, 6, -0.2, -0.2)
    with pytest.raises(StencilUnderflow):
        grid.gradient(np.zeros((d.nx, d.ny)), d)


def test_summation_by_parts_random_fields():
    rng = np.random.default_rng(1)
    for spec in ("disk:1", "polygon:0,0;2,0;1,1.5"):
        d = GridDomain.build(spec, 1 / 48)
        f = np.where(d.inside, rng.normal(size=(d.nx, d.ny)), 0.0)
        vm = d.vertex_mask()
        Fx = np.where(vm, rng.normal(size=vm.shape), 0.0)
        Fy = np.where(vm, rng.normal(size=vm.shape), 0.0)
        gx, gy = grid.vertex_gradient(f, d)
        lhs = np.sum(grid.divergence(Fx, Fy, d) * f) * d.h**2
        rhs = np.sum(np.where(vm, Fx * gx + Fy * gy, 0.0)) * d.h**2
        assert abs(lhs + rhs) < 1e-12 * max(1.0, abs(rhs))


def test_boundary_term_vanishes_for_interior_support():
    d = GridDomain.build("disk:1", 1 / 32)
    rng = np.random.default_rng(2)
    f = np.where(d.interior, rng.normal(size=(d.nx, d.ny)), 0.0)
    vm = d.vertex_mask()
    Fx, Fy = rng.normal(size=vm.shape), rng.normal(size=vm.shape)
    div = grid.divergence(Fx, Fy, d)
    gx, gy = grid.vertex_gradient(f, d)
    total = np.sum(div * f) + np.nansum(np.where(vm, Fx * gx + Fy * gy, 0.0))
    assert abs(total) * d.h**2 < 1e-12


def test_face_divergence_telescopes():
    rng = np.random.default_rng(3)
    d = GridDomain.build("disk:1", 1 / 32)
    phix = rng.normal(size=(d.nx - 1, d.ny))
    phiy = rng.normal(size=(d.nx, d.ny - 1))
    div = grid.face_divergence(phix, phiy, d.h)
    cells = d.interior
    assert np.sum(div[cells]) * d.h**2 == pytest.approx(grid.frontier_flux(phix, phiy, cells, d.h), abs=1e-11)


def test_integrate_one_on_disk():
    d = GridDomain.build("disk:1", 1 / 64)
    assert grid.integrate(ScalarField.constant(d, 1.0)) == pytest.approx(math.pi, rel=0.01)


def test_quadrature_second_order_on_smooth_integrand():
    # integrand vanishing to second order on the circle, so the staircase mask
    # contributes at the same order as the midpoint rule
    from scipy import integrate as sint

    exact = sint.dblquad(lambda r, t: (1 - r * r) ** 2 * math.cos(r * math.cos(t)) * r, 0, 2 * math.pi, 0, 1)[0]
    errs = []
    for h in (1 / 32, 1 / 64, 1 / 128):
        d = GridDomain.build("disk:1", h)
        f = (1 - d.X**2 - d.Y**2) ** 2 * np.cos(d.X)
        errs.append(abs(grid.integrate(f, d) - exact))
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


def test_erode_disk():
    d = GridDomain.build("disk:1", 1 / 64)
    e = d.erode(0.25)
    assert isinstance(e.shape, Disk) and e.shape.radius == pytest.approx(0.75)
    assert np.all(e.boundary_geometry().curvature == pytest.approx(1 / 0.75))
    assert np.all(e.inside <= d.inside)
    assert (e.h, e.nx, e.x0) == (d.h, d.nx, d.x0)
    assert d.erode(0.0) is d


@pytest.mark.parametrize("t", [1.0, 1.5])
def test_erode_beyond_inradius_rejected(t):
    with pytest.raises(DomainError):
        GridDomain.build("disk:1", 1 / 32).erode(t)


def test_erode_negative_rejected():
    with pytest.raises(DomainError):
        grid.erode(GridDomain.build("disk:1", 1 / 32), -0.1)


def test_erode_polygon_distance():
    d = GridDomain.build("square", 1 / 64)
    e = d.erode(0.1)
    dist = d.shape.distance_to_boundary(d.X, d.Y)
    assert np.array_equal(e.inside, dist > 0.1)
    assert e.perimeter == pytest.approx(4 * 0.8)


def test_scalar_field_validation_and_arith():
    d = GridDomain.build("disk:1", 1 / 16)
    with pytest.raises(ValueError):
        ScalarField(np.zeros((3, 3)), d)
    bad = np.zeros((d.nx, d.ny))
    bad[d.inside.nonzero()[0][0], d.inside.nonzero()[1][0]] = np.nan
    with pytest.raises(ValueError):
        ScalarField(bad, d)
    f = ScalarField.constant(d, 2.0)
    assert np.all((3 * f + 1).values == 7.0)
    assert f.at(0.3, 0.1) == 2.0


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_sample_bilinear_exact_on_linear(a, b):
    d = GridDomain.build("disk:1", 1 / 32)
    v = a * d.X + b * d.Y
    px, py = np.array([0.1, -0.33, 0.5]), np.array([0.2, 0.05, -0.4])
    assert np.allclose(grid.sample(v, d, px, py), a * px + b * py, atol=1e-12)


def test_csv_round_trip(tmp_path):
    d = GridDomain.build("polygon:0,0;2,0;1,1.5", 1 / 32)
    rng = np.random.default_rng(4)
    v = np.where(d.inside, rng.normal(size=(d.nx, d.ny)), 0.0)
    p = tmp_path / "f.csv"
    grid.write_field_csv(p, v, d)
    lines = p.read_text().splitlines()
    assert lines[0] == "x,y,value"
    assert len(lines) == d.n_cells + 1
    back = grid.read_field_csv(p, d)
    assert np.array_equal(back.values[d.inside], v[d.inside])


def test_csv_incomplete_rejected(tmp_path):
    d = GridDomain.build("disk:1", 1 / 16)
    p = tmp_path / "f.csv"
    grid.write_field_csv(p, np.zeros((d.nx, d.ny)), d, cells=d.interior)
    with pytest.raises(ValueError):
        grid.read_field_csv(p, d)


def test_describe_round_trips_through_parse_shape():
    for spec in ("disk:0.3,0.2,0.7", "rect:-1,0,1,0.5", "polygon:0,0;2,0;1,1.5"):
        s = grid.parse_shape(spec)
        assert grid.parse_shape(s.describe()) == s
