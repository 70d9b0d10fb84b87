import math

import numpy as np
import pytest
import sympy as sp

from heispmc import solve
from heispmc.errors import InfeasibleDomainError, InvalidParameter
from heispmc.grid import GridDomain, ScalarField
from heispmc.solve import (
    PmcProblem,
    SolverConfig,
    boundary_flux,
    comparison_check,
    flux_identity_defect,
    minimize_penalized,
    pmc_residual,
    solve_dirichlet,
)

from oracles import pmc_source, x, y

MANUFACTURED = 0.25 * (x**2 + y**2) + 0.2 * x + 0.1 * x * y


def manufactured_problem(h, eps=1.0):
    d = GridDomain.build("disk:1", h)
    uf = sp.lambdify((x, y), MANUFACTURED, "numpy")
    Hf = pmc_source(MANUFACTURED, eps)
    return PmcProblem(d, ScalarField.from_function(d, Hf), ScalarField.from_function(d, uf), eps), uf


@pytest.fixture(scope="module")
def disk32():
    return GridDomain.build("disk:1", 1 / 32)


@pytest.fixture(scope="module")
def generic32(disk32):
    p = PmcProblem(disk32, 0.5, lambda X, Y: 0.2 * X + 0.1 * Y**2, 1.0)
    u, rep = solve_dirichlet(p)
    return p, u, rep


# --- problem / config validation ---------------------------------------------


def test_problem_validation(disk32):
    with pytest.raises(InvalidParameter):
        PmcProblem(disk32, eps=0.0)
    with pytest.raises(InvalidParameter):
        PmcProblem(disk32, sigma=1.5)
    with pytest.raises(InvalidParameter):
        PmcProblem(disk32, mode="riemann")
    bad = np.zeros((disk32.nx, disk32.ny))
    bad[disk32.boundary_cells] = np.inf
    with pytest.raises(ValueError):
        PmcProblem(disk32, phi=bad)


@pytest.mark.parametrize("kw", [{"tol_residual": 0}, {"pd_gap_tol": -1}, {"shrink": 1.0}, {"max_newton": 0}, {"min_step": 0}])
def test_config_validation(kw):
    with pytest.raises(InvalidParameter):
        SolverConfig(**kw)


def test_pd_steps_must_satisfy_bound(disk32):
    p = PmcProblem(disk32)
    with pytest.raises(InvalidParameter):
        minimize_penalized(p, SolverConfig(pd_tau=1.0, pd_step=1.0, max_pd=10))


def test_sigma_scales_source_datum_and_X(disk32):
    p = PmcProblem(disk32, 0.5, 1.0, 1.0, sigma=0.25)
    assert np.all(p.source[disk32.inside] == 0.125)
    assert np.all(p.datum[disk32.inside] == 0.25)
    assert p.x_scale == 0.25
    assert PmcProblem(disk32, mode="euclidean").x_scale == 0.0


# --- Newton -----------------------------------------------------------------


def test_flat_solution_exact(disk32):
    d = GridDomain.build("disk:1", 1 / 64)
    u, rep = solve_dirichlet(PmcProblem(d))
    assert rep.converged and rep.iterations <= 2
    assert rep.final_residual < 1e-10
    assert np.max(np.abs(u.values)) < 1e-10


def test_residual_zero_for_constant_in_both_modes(disk32):
    for mode in ("heisenberg", "euclidean"):
        p = PmcProblem(disk32, 0.0, 3.0, 0.7, mode)
        R = pmc_residual(np.full((disk32.nx, disk32.ny), 3.0), p)
        assert np.nanmax(np.abs(R)) < 1e-13


def test_hemisphere_euclidean():
    d = GridDomain.build("disk:0.9", 1 / 64)
    exact = lambda X, Y: np.sqrt(np.clip(1 - X**2 - Y**2, 0, None))  # noqa: E731
    u, rep = solve_dirichlet(PmcProblem(d, -2.0, exact, 1.0, "euclidean"))
    assert rep.converged
    err = np.max(np.abs(u.values - exact(d.X, d.Y))[d.inside])
    assert err < 1e-3
    # the datum sits on the boundary cells exactly
    assert np.array_equal(u.values[d.boundary_cells], exact(d.X, d.Y)[d.boundary_cells])


def test_vertical_translation_equivariance(generic32):
    p, u, _ = generic32
    q = PmcProblem(p.domain, p.H, p.phi + 1.5, p.eps)
    v, rep = solve_dirichlet(q)
    assert rep.converged
    inside = p.domain.inside
    assert np.max(np.abs(v.values - u.values - 1.5)[inside]) < 1e-12


def test_uniqueness_two_initializations(generic32):
    p, u, _ = generic32
    d = p.domain
    rng = np.random.default_rng(5)
    a, b = rng.normal(size=2)
    smooth = 0.3 * np.sin(3 * d.X + a) * np.cos(2 * d.Y + b)
    v, rep = solve_dirichlet(p, init=smooth)
    assert rep.converged
    assert np.max(np.abs(v.values - u.values)[d.inside]) <= 1e-8


def test_energy_descent_and_report(generic32):
    p, u, rep = generic32
    assert rep.converged and rep.final_residual <= 1e-10
    assert rep.energy_monotone
    assert solve.energy_descent_ok(rep.energy_history, p.domain.h)
    assert rep.residual_history[-1] == pytest.approx(rep.final_residual, rel=1e-6, abs=1e-14)
    assert rep.max_gradient >= rep.max_gradient_half > 0
    assert rep.energy == pytest.approx(solve.penalized_energy(u, p))


def test_energy_descent_check_detects_increase():
    h = 1 / 32
    assert solve.energy_descent_ok([3.0, 2.0, 2.0 + 5 * h**4], h)
    assert not solve.energy_descent_ok([3.0, 2.0, 2.1], h)


def test_homotopy_recovers_hard_start():
    d = GridDomain.build("disk:0.9", 1 / 32)
    exact = lambda X, Y: np.sqrt(np.clip(1 - X**2 - Y**2, 0, None))  # noqa: E731
    u, rep = solve_dirichlet(PmcProblem(d, -2.0, exact, 1.0, "euclidean"))
    assert rep.converged
    assert rep.homotopy_path[-1] == 1.0
    assert len(rep.homotopy_path) > 1


def test_no_convergence_reported():
    d = GridDomain.build("disk:0.9", 1 / 32)
    exact = lambda X, Y: np.sqrt(np.clip(1 - X**2 - Y**2, 0, None))  # noqa: E731
    cfg = SolverConfig(max_newton=1, max_bisections=0, homotopy_steps=1)
    u, rep = solve_dirichlet(PmcProblem(d, -2.0, exact, 1.0, "euclidean"), cfg)
    assert not rep.converged
    assert rep.message
    assert rep.final_residual > cfg.tol_residual


def test_infeasible_refused(disk32):
    with pytest.raises(InfeasibleDomainError):
        solve_dirichlet(PmcProblem(disk32, 3.0))
    with pytest.raises(InfeasibleDomainError):
        minimize_penalized(PmcProblem(disk32, -3.0))


def test_manufactured_second_order():
    errs = []
    for h in (1 / 16, 1 / 32, 1 / 64):
        p, uf = manufactured_problem(h)
        u, rep = solve_dirichlet(p)
        assert rep.converged
        d = p.domain
        errs.append(np.max(np.abs(u.values - uf(d.X, d.Y))[d.inside]))
    assert errs[0] / errs[1] > 3 and errs[1] / errs[2] > 3


def test_gradient_monitor_family_bounded(disk32):
    # |u| stays below 0.5 across the family; the half-disk gradient stays below
    # the constant recorded for this family
    recorded = 1.0
    values = []
    for a in (0.0, 0.1, 0.2, 0.3):
        for H in (0.0, 0.5, -0.5):
            u, rep = solve_dirichlet(PmcProblem(disk32, H, lambda X, Y: a * X + a * Y * Y, 1.0))
            assert rep.converged and np.max(np.abs(u.values)) < 0.5
            values.append(rep.max_gradient_half)
    assert max(values) < recorded


# --- flux and comparison ----------------------------------------------------------


@pytest.mark.parametrize("t", [0.1, 0.2])
def test_flux_identity(generic32, t):
    p, u, _ = generic32
    assert abs(flux_identity_defect(u, p, t)) < 1e-12


def test_flux_bounded_by_perimeter(disk32):
    rng = np.random.default_rng(6)
    p = PmcProblem(disk32, 0.0, 0.0, 0.3)
    for _ in range(5):
        v = ScalarField(rng.normal(size=(disk32.nx, disk32.ny)) * 3, disk32)
        for t in (0.1, 0.2):
            P_t = 2 * math.pi * (1 - t)
            # face sums run along a staircase; its length is at most 4/pi times P_t
            assert abs(boundary_flux(v, p, t)) <= 4 / math.pi * P_t + 8 * disk32.h


@pytest.mark.parametrize("K", [1.0, 10.0, 1000.0])
def test_flux_bounded_by_perimeter_smooth_fields(K):
    # steep radial graphs push the flux towards its supremum P(Omega_t)
    for h in (1 / 32, 1 / 64):
        d = GridDomain.build("disk:1", h)
        p = PmcProblem(d, 0.0, 0.0, 0.3, "euclidean")
        v = ScalarField(0.5 * K * (d.X**2 + d.Y**2), d)
        for t in (0.1, 0.2):
            assert abs(boundary_flux(v, p, t)) <= 2 * math.pi * (1 - t) + 2 * h


def test_flux_zero_for_flat(disk32):
    p = PmcProblem(disk32)
    z = ScalarField(np.zeros((disk32.nx, disk32.ny)), disk32)
    for t in (0.1, 0.2):
        assert abs(boundary_flux(z, p, t)) < 1e-12


def test_flux_erosion_into_boundary_layer_rejected(generic32):
    p, u, _ = generic32
    with pytest.raises(Exception):
        boundary_flux(u, p, 0.0)


def test_comparison_translation_and_identity(generic32):
    p, u, _ = generic32
    r = comparison_check(u, u + 0.3, p)
    assert r.passed and r.margin == pytest.approx(0.3)
    r = comparison_check(u, u, p)
    assert r.passed and r.margin == 0.0 and r.max_violation == 0.0


def test_comparison_ordered_pair(generic32):
    p, u, _ = generic32
    q = PmcProblem(p.domain, p.H, lambda X, Y: 0.2 * X + 0.1 * Y**2 + 0.05 * (1 + X), p.eps)
    v, rep = solve_dirichlet(q)
    assert rep.converged
    r = comparison_check(u, v, p)
    assert r.boundary_ordered and r.passed
    assert r.tol == pytest.approx(10 * p.domain.h**2)


def test_comparison_detects_violation(generic32):
    p, u, _ = generic32
    w = u.values.copy()
    w[p.domain.interior] -= 1.0
    r = comparison_check(u, ScalarField(w, p.domain), p)
    assert r.boundary_ordered and not r.passed
    assert r.max_violation == pytest.approx(1.0)


# --- primal-dual ------------------------------------------------------------------


def test_pd_flat_energy_closed_form():
    d = GridDomain.build("disk:1", 1 / 64)
    u, rep = minimize_penalized(PmcProblem(d))
    assert rep.converged and rep.duality_gap <= 1e-8
    # a 1e-8 energy gap pins u only to about its square root
    assert np.max(np.abs(u.values)) < 1e-4
    closed = 2 * math.pi / 3 * (2 * math.sqrt(2) - 1)
    assert rep.energy == pytest.approx(closed, rel=0.01)
    assert rep.dual_energy <= rep.primal_energy + 1e-12


def test_pd_matches_newton_manufactured():
    p, uf = manufactured_problem(1 / 32)
    un, rn = solve_dirichlet(p)
    up, rp = minimize_penalized(p)
    assert rn.converged and rp.converged
    assert rp.duality_gap <= 1e-8
    d = p.domain
    assert np.max(np.abs(up.values - un.values)[d.inside]) < 1e-3


def test_pd_without_refine_reports_gap():
    p, _ = manufactured_problem(1 / 16)
    u, rep = minimize_penalized(p, SolverConfig(pd_refine=False, max_pd=500, pd_check_every=100))
    assert rep.pd_iterations == 500 or rep.converged
    assert rep.duality_gap >= 0
    assert rep.converged == (rep.duality_gap <= 1e-8)


def test_pd_extremal_median_centred():
    d = GridDomain.build("disk:1", 1 / 16)
    u, rep = minimize_penalized(PmcProblem(d, 2.0), SolverConfig(max_pd=200, pd_refine=False))
    assert rep.classification == "extremal"
    assert np.median(u.values[d.inside]) == pytest.approx(0.0, abs=1e-12)
