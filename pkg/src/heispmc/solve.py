"""Dirichlet solver (damped Newton with sigma-homotopy), penalized minimizer
(primal-dual), and flux/comparison diagnostics.

Discretization of the Dirichlet problem: unknowns are the interior cells,
boundary cells carry the datum. The operator is the conservative face-flux
divergence from :mod:`heispmc.kernels`, so sums of the residual over a cell
set telescope to the flux through its frontier.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh, splu, spsolve

from . import kernels
from .conditions import EXTREMAL, INFEASIBLE, classify_domain
from .errors import DomainError, InfeasibleDomainError, InvalidParameter
from .grid import GridDomain, ScalarField, frontier_flux, gradient
from .hgeom import MODES
from .subriem import energy_eps


def _as_field(f, domain):
    if isinstance(f, ScalarField):
        if f.domain is not domain:
            f = f.on(domain)
        return f
    if callable(f):
        return ScalarField.from_function(domain, f)
    arr = np.asarray(f, dtype=float)
    if arr.ndim == 0:
        return ScalarField.constant(domain, float(arr))
    return ScalarField(arr, domain)


@dataclass(eq=False)
class PmcProblem:
    domain: GridDomain
    H: object = 0.0
    phi: object = 0.0
    eps: float = 1.0
    mode: str = "heisenberg"
    sigma: float = 1.0

    def __post_init__(self):
        if self.eps == 0 or not np.isfinite(self.eps):
            raise InvalidParameter("eps must be a nonzero finite real")
        if not 0.0 <= self.sigma <= 1.0:
            raise InvalidParameter("sigma must lie in [0, 1]")
        if self.mode not in MODES:
            raise InvalidParameter(f"mode must be one of {MODES}")
        self.eps = float(self.eps)
        self.sigma = float(self.sigma)
        self.H = _as_field(self.H, self.domain)
        self.phi = _as_field(self.phi, self.domain)
        if not np.all(np.isfinite(self.phi.values[self.domain.boundary_cells])):
            raise InvalidParameter("phi must be finite on boundary cells")

    @property
    def x_scale(self):
        """Coefficient of X in the operator (sigma, or 0 in euclidean mode)."""
        return self.sigma if self.mode == "heisenberg" else 0.0

    @property
    def source(self):
        return self.sigma * self.H.values

    @property
    def datum(self):
        return self.sigma * self.phi.values

    def with_sigma(self, sigma):
        return PmcProblem(self.domain, self.H, self.phi, self.eps, self.mode, sigma)


@dataclass
class SolverConfig:
    tol_residual: float = 1e-10
    max_newton: int = 50
    armijo: float = 1e-4
    shrink: float = 0.5
    min_step: float = 1e-6
    homotopy_steps: int = 5
    max_bisections: int = 8
    max_polish: int = 3
    pd_tau: float = None
    pd_step: float = None
    pd_theta: float = 1.0
    max_pd: int = 20000
    pd_gap_tol: float = 1e-8
    pd_check_every: int = 250
    pd_refine: bool = True
    check_feasibility: bool = True

    def __post_init__(self):
        for name in ("tol_residual", "min_step", "pd_gap_tol"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be positive")
        if not 0 < self.shrink < 1:
            raise InvalidParameter("shrink must lie in (0, 1)")
        if self.max_newton < 1 or self.max_pd < 1 or self.homotopy_steps < 1:
            raise InvalidParameter("iteration limits must be positive")


@dataclass
class SolveReport:
    method: str
    converged: bool = False
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    final_residual: float = float("inf")
    energy: float = float("nan")
    energy_history: list = field(default_factory=list)
    energy_monotone: bool = True
    duality_gap: float = None
    primal_energy: float = None
    dual_energy: float = None
    pd_iterations: int = None
    pd_gap_before_refine: float = None
    max_gradient: float = float("nan")
    max_gradient_half: float = float("nan")
    homotopy_path: list = field(default_factory=list)
    classification: str = None
    message: str = ""

    def to_dict(self):
        return asdict(self)


# --------------------------------------------------------------------------
# discrete operator


def _fluxes(u, problem, sigma=None):
    d = problem.domain
    s = problem.x_scale if sigma is None else sigma
    return kernels.face_fluxes(np.ascontiguousarray(u, dtype=float), problem.eps, s, d.h, d.x0, d.y0)


def pmc_residual(u, problem):
    """div(face fluxes) - sigma H on interior cells, NaN elsewhere."""
    d = problem.domain
    u = np.where(d.inside, _values(u), 0.0)
    phix, _, _, phiy, _, _ = _fluxes(u, problem)
    div = kernels.flux_divergence(phix, phiy, d.h)
    return np.where(d.interior, div - problem.source, np.nan)


def _values(u):
    return u.values if isinstance(u, ScalarField) else np.asarray(u, float)


_X_DEPS = [((1, 0), "n", 1.0), ((0, 0), "n", -1.0), ((0, 1), "t", 0.25), ((1, 1), "t", 0.25),
           ((0, -1), "t", -0.25), ((1, -1), "t", -0.25)]
_Y_DEPS = [((0, 1), "n", 1.0), ((0, 0), "n", -1.0), ((1, 0), "t", 0.25), ((1, 1), "t", 0.25),
           ((-1, 0), "t", -0.25), ((-1, 1), "t", -0.25)]


def _jacobian(dxn, dxt, dyn, dyt, idx, h):
    """Sparse derivative of the interior residual w.r.t. the interior unknowns."""
    n = int(idx.max()) + 1
    idxp = np.pad(idx, 1, constant_values=-1)
    rows, cols, vals = [], [], []
    for dn, dt, deps, other in ((dxn, dxt, _X_DEPS, (1, 0)), (dyn, dyt, _Y_DEPS, (0, 1))):
        I, J = np.meshgrid(np.arange(dn.shape[0]), np.arange(dn.shape[1]), indexing="ij")
        for (ri, rj), sign in (((0, 0), 1.0), (other, -1.0)):
            r = idxp[I + ri + 1, J + rj + 1]
            for (ci, cj), kind, coef in deps:
                c = idxp[I + ci + 1, J + cj + 1]
                ok = (r >= 0) & (c >= 0)
                d = dn if kind == "n" else dt
                rows.append(r[ok])
                cols.append(c[ok])
                vals.append(sign * coef * d[ok] / (h * h))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


def penalized_energy(u, problem):
    """Discrete I_eps: P_eps + sum sigma H u h^2 + sum_boundary |u - sigma phi| h."""
    d = problem.domain
    v = _values(u)
    b = d.boundary_cells
    return (
        energy_eps(v, problem)
        + float(np.sum((problem.source * v)[d.inside]) * d.h**2)
        + float(np.sum(np.abs(v - problem.datum)[b]) * d.h)
    )


def energy_descent_ok(history, h):
    """Non-increase after the first accepted step, up to 10 h^4 (relative).

    The face-flux scheme is consistent with, but not the exact Euler-Lagrange
    equation of, the cell-centred energy; near the discrete solution the two
    minimizers differ by O(h^2), so the energy can creep up by O(h^4).
    """
    eh = np.asarray(history[1:], float)
    if eh.size < 2:
        return True
    slack = 10.0 * h**4 * max(1.0, float(np.max(np.abs(eh))))
    return bool(np.all(np.diff(eh) <= slack))


def _gradient_monitors(v, domain):
    gx, gy = gradient(v, domain)
    g = np.hypot(gx, gy)
    dist = np.asarray(domain.shape.distance_to_boundary(domain.X, domain.Y))
    half = domain.inside & (dist >= 0.5 * domain.inradius)
    gmax = float(np.max(g[domain.inside]))
    ghalf = float(np.max(g[half])) if half.any() else float("nan")
    return gmax, ghalf


# --------------------------------------------------------------------------
# Newton


def _newton(u, problem, cfg, report, record_energy):
    """Damped Newton on the interior unknowns of ``problem`` starting from ``u``.

    Returns (u, converged). ``u`` is modified in place.
    """
    d = problem.domain
    interior = d.interior
    idx = -np.ones(interior.shape, dtype=np.int64)
    idx[interior] = np.arange(int(interior.sum()))
    h = d.h

    def resid(v):
        phix, dxn, dxt, phiy, dyn, dyt = _fluxes(v, problem)
        div = kernels.flux_divergence(phix, phiy, h)
        return (div - problem.source)[interior], (dxn, dxt, dyn, dyt)

    R, derivs = resid(u)
    rnorm = float(np.max(np.abs(R))) if R.size else 0.0
    report.residual_history.append(rnorm)
    E = penalized_energy(u, problem)
    if record_energy:
        report.energy_history.append(E)
    slack = 10.0 * h**4 * max(1.0, abs(E))
    polishing = 0
    for _ in range(cfg.max_newton):
        if rnorm <= cfg.tol_residual:
            if polishing >= cfg.max_polish:
                break
            polishing += 1
        Jm = _jacobian(*derivs, idx, h)
        step = spsolve(Jm.tocsc(), -R)
        m0 = 0.5 * float(R @ R)
        t = 1.0
        # the Newton step descends the energy too; ask for that unless it
        # alone blocks progress, then settle for the merit decrease
        fallback = None
        while True:
            trial = u.copy()
            trial[interior] += t * step
            Rt, dt = resid(trial)
            mt = 0.5 * float(Rt @ Rt)
            if polishing:
                ok = float(np.max(np.abs(Rt))) <= 0.5 * rnorm
                if not ok:
                    return u, True
                Et = penalized_energy(trial, problem)
                break
            if np.isfinite(mt) and mt <= m0 * (1.0 - 2.0 * cfg.armijo * t):
                Et = penalized_energy(trial, problem)
                if not record_energy or Et <= E + slack:
                    break
                if fallback is None:
                    fallback = (trial, Rt, dt, Et)
            t *= cfg.shrink
            if t < cfg.min_step:
                if fallback is not None:
                    trial, Rt, dt, Et = fallback
                    break
                report.message = f"line search stalled at residual {rnorm:.3e}"
                return u, False
        u[...] = trial
        E = Et
        R, derivs = Rt, dt
        rnorm = float(np.max(np.abs(R)))
        report.iterations += 1
        report.residual_history.append(rnorm)
        if record_energy:
            report.energy_history.append(E)
    return u, rnorm <= cfg.tol_residual


def solve_dirichlet(problem, cfg=None, init=None):
    """Solve the discrete eps-PMC Dirichlet problem.

    Newton is tried at the target sigma first; if it stalls, the solve walks
    the homotopy sigma_k = k/steps (scaling X, H and the boundary datum),
    bisecting a step whenever Newton fails from the previous accepted sigma.
    Returns ``(u, report)``; ``report.converged`` is False on failure.
    Raises :class:`InfeasibleDomainError` when |int H| > P(Omega).
    """
    cfg = cfg or SolverConfig()
    d = problem.domain
    report = SolveReport(method="newton")
    if cfg.check_feasibility:
        cond = classify_domain(d, problem.H * problem.sigma, scan=False)
        report.classification = cond.classification
        if cond.classification == INFEASIBLE:
            raise InfeasibleDomainError(
                f"|int H| = {abs(cond.integral_H):.6g} exceeds P(Omega) = {cond.perimeter:.6g}"
            )

    def start(target, guess):
        u = np.zeros((d.nx, d.ny)) if guess is None else np.array(guess, dtype=float)
        u = np.where(d.inside, u, 0.0)
        u[d.boundary_cells] = target.datum[d.boundary_cells]
        return u

    target = problem
    u0 = start(target, init)
    u, ok = _newton(u0.copy(), target, cfg, report, record_energy=True)
    report.homotopy_path.append(target.sigma)
    if not ok:
        # homotopy from sigma = 0, where u = 0 solves exactly
        report.energy_history = []
        s_prev, u_prev = 0.0, np.zeros((d.nx, d.ny))
        todo = [target.sigma * k / cfg.homotopy_steps for k in range(1, cfg.homotopy_steps + 1)]
        bisections = 0
        while todo:
            s = todo[0]
            sub = problem.with_sigma(s)
            final = s == target.sigma
            u_try, ok = _newton(start(sub, u_prev * (s / s_prev if s_prev else 1.0)), sub, cfg, report, final)
            report.homotopy_path.append(s)
            if ok:
                todo.pop(0)
                s_prev, u_prev = s, u_try
                continue
            if final:
                report.energy_history = []
            bisections += 1
            if bisections > cfg.max_bisections:
                u = u_try
                break
            todo.insert(0, 0.5 * (s_prev + s))
        else:
            u = u_prev
            ok = True
    u = np.where(d.inside, u, 0.0)
    R = pmc_residual(u, problem)
    report.final_residual = float(np.nanmax(np.abs(R))) if np.any(d.interior) else 0.0
    report.converged = bool(ok and report.final_residual <= cfg.tol_residual)
    if report.converged:
        report.message = ""
    elif not report.message:
        report.message = "no convergence"
    report.energy = penalized_energy(u, problem)
    report.energy_monotone = energy_descent_ok(report.energy_history, d.h)
    report.max_gradient, report.max_gradient_half = _gradient_monitors(u, d)
    return ScalarField(u, d), report


# --------------------------------------------------------------------------
# primal-dual


class _VertexOperator:
    """Vertex gradient K on the inside cells of a domain, as sparse matrices."""

    def __init__(self, domain):
        d = domain
        self.vmask = d.vertex_mask()
        self.cells = d.inside
        cidx = -np.ones((d.nx, d.ny), dtype=np.int64)
        cidx[self.cells] = np.arange(int(self.cells.sum()))
        self.cidx = cidx
        vi, vj = np.nonzero(self.vmask)
        nv = len(vi)
        rows = np.repeat(np.arange(nv), 4)
        cols = np.column_stack([cidx[vi, vj], cidx[vi + 1, vj], cidx[vi, vj + 1], cidx[vi + 1, vj + 1]]).ravel()
        inv = 0.5 / d.h
        sx = np.tile([-inv, inv, -inv, inv], nv)
        sy = np.tile([-inv, -inv, inv, inv], nv)
        n = int(self.cells.sum())
        self.Kx = sp.csr_matrix((sx, (rows, cols)), shape=(nv, n))
        self.Ky = sp.csr_matrix((sy, (rows, cols)), shape=(nv, n))
        self.vi, self.vj = vi, vj

    def norm(self):
        K = sp.vstack([self.Kx, self.Ky]).tocsr()
        lam = eigsh((K.T @ K).tocsc(), k=1, which="LM", return_eigenvectors=False, tol=1e-6)
        return float(math.sqrt(lam[0]))


@dataclass
class _PdSetup:
    op: _VertexOperator
    vx: np.ndarray
    vy: np.ndarray
    src: np.ndarray
    phi: np.ndarray
    bsel: np.ndarray
    weight: np.ndarray
    interior_solver: object


def _pd_setup(problem):
    d = problem.domain
    op = _VertexOperator(d)
    xv, yv = d.vertex_coords()
    s = problem.x_scale
    vx = -s * yv[op.vi, op.vj]
    vy = s * xv[op.vi, op.vj]
    cells = op.cells
    src = problem.source[cells]
    phi = problem.datum[cells]
    bsel = d.boundary_cells[cells]
    weight = np.where(bsel, d.h, 0.0)
    K = sp.vstack([op.Kx, op.Ky]).tocsr()
    KtK = (K.T @ K).tocsc()
    isel = np.nonzero(~bsel)[0]
    solver = splu(KtK[isel][:, isel].tocsc())
    return _PdSetup(op, vx, vy, src, phi, bsel, weight, (isel, solver))


def _primal(v, S, problem):
    h2 = problem.domain.h ** 2
    px = S.op.Kx @ v + S.vx
    py = S.op.Ky @ v + S.vy
    W = np.sqrt(problem.eps**2 + px * px + py * py)
    return float(h2 * np.sum(W) + h2 * np.sum(S.src * v) + np.sum(S.weight * np.abs(v - S.phi))), px, py, W


def _dual_certificate(v, S, problem):
    """(primal, dual, gap) with the dual point built from the primal iterate.

    g = (Dv + X)/W is corrected by K z so that the interior optimality
    equations hold exactly; the remaining boundary multipliers must fit the
    penalty weights, otherwise the dual point is infeasible and gap = inf.
    """
    h2 = problem.domain.h ** 2
    P, px, py, W = _primal(v, S, problem)
    gx, gy = px / W, py / W
    a = S.op.Kx.T @ gx + S.op.Ky.T @ gy + S.src
    isel, solver = S.interior_solver
    z = np.zeros_like(v)
    z[isel] = solver.solve(-a[isel])
    gx = gx + S.op.Kx @ z
    gy = gy + S.op.Ky @ z
    nrm2 = gx * gx + gy * gy
    if np.max(nrm2, initial=0.0) > 1.0:
        return P, -math.inf, math.inf
    r = h2 * (S.op.Kx.T @ gx + S.op.Ky.T @ gy + S.src)
    rb = r[S.bsel]
    if np.any(np.abs(rb) > S.weight[S.bsel] * (1 + 1e-12)):
        return P, -math.inf, math.inf
    D = float(h2 * np.sum(gx * S.vx + gy * S.vy + abs(problem.eps) * np.sqrt(1.0 - nrm2)) + np.sum(rb * S.phi[S.bsel]))
    return P, D, P - D


def _refine(v, S, problem, maxit=30):
    """Newton on the smooth part of the discrete functional.

    Boundary cells where the penalty is active (v = phi) stay fixed; detached
    boundary cells keep the sign of v - phi found by the first-order phase.
    """
    h2 = problem.domain.h ** 2
    eps2 = problem.eps**2
    attached = S.bsel & (np.abs(v - S.phi) <= 1e-9 * (1 + np.abs(S.phi)))
    free = np.nonzero(~attached)[0]
    sgn = np.where(S.bsel & ~attached, np.sign(v - S.phi), 0.0)
    v = v.copy()
    v[attached] = S.phi[attached]
    Kx, Ky = S.op.Kx, S.op.Ky
    Kxf, Kyf = Kx[:, free].tocsc(), Ky[:, free].tocsc()

    def energy(w):
        return _primal(w, S, problem)[0]

    E = energy(v)
    for _ in range(maxit):
        px = Kx @ v + S.vx
        py = Ky @ v + S.vy
        W = np.sqrt(eps2 + px * px + py * py)
        grad = h2 * (Kx.T @ (px / W) + Ky.T @ (py / W) + S.src) + S.weight * sgn
        gf = grad[free]
        W3 = W**3
        bxx = h2 * (eps2 + py * py) / W3
        byy = h2 * (eps2 + px * px) / W3
        bxy = -h2 * px * py / W3
        Hm = (
            Kxf.T @ sp.diags(bxx) @ Kxf
            + Kyf.T @ sp.diags(byy) @ Kyf
            + Kxf.T @ sp.diags(bxy) @ Kyf
            + Kyf.T @ sp.diags(bxy) @ Kxf
        )
        step = spsolve(Hm.tocsc(), -gf)
        dec = float(-gf @ step)
        if dec <= 1e-30:
            break
        t = 1.0
        while t > 1e-8:
            trial = v.copy()
            trial[free] += t * step
            crossed = np.any(sgn[free] * (trial[free] - S.phi[free]) < 0)
            Et = energy(trial)
            if not crossed and Et <= E - 1e-4 * t * dec:
                break
            t *= 0.5
        else:
            break
        v, E = trial, Et
        if dec < 1e-28 * max(1.0, abs(E)):
            break
    return v


def minimize_penalized(problem, cfg=None, init=None):
    """Minimize the discrete penalized functional by primal-dual iteration.

    Discrete functional: sum over vertices with four inside cells of
    sqrt(eps^2 + |Dv + X|^2) h^2, plus sum H v h^2 over inside cells, plus
    h |v - phi| on each boundary cell. The dual variable g = (g_h, g_3) is
    projected onto |g| <= 1 at every vertex; the boundary term is handled by
    soft shrinkage. After the first-order phase an optional Newton
    refinement of the smooth part sharpens the iterate. The duality gap is
    certified against an explicit feasible dual point.
    """
    cfg = cfg or SolverConfig()
    d = problem.domain
    report = SolveReport(method="primal_dual")
    cond = classify_domain(d, problem.H * problem.sigma, scan=False)
    report.classification = cond.classification
    if cond.classification == INFEASIBLE:
        raise InfeasibleDomainError(
            f"|int H| = {abs(cond.integral_H):.6g} exceeds P(Omega) = {cond.perimeter:.6g}"
        )
    S = _pd_setup(problem)
    L = S.op.norm() * 1.0001
    tau = cfg.pd_tau if cfg.pd_tau is not None else 1.0 / L
    s = cfg.pd_step if cfg.pd_step is not None else 1.0 / (tau * L * L)
    if tau * s * L * L > 1.0 + 1e-12:
        raise InvalidParameter("step sizes violate tau * s * ||K||^2 <= 1")

    cells = S.op.cells
    v = np.zeros((d.nx, d.ny))
    if init is not None:
        v[cells] = _values(init)[cells]
    else:
        v[d.boundary_cells] = problem.datum[d.boundary_cells]
    vbar = v.copy()
    shape_v = (d.nx - 1, d.ny - 1)
    gx = np.zeros(shape_v)
    gy = np.zeros(shape_v)
    g3 = np.zeros(shape_v)
    xvx = np.zeros(shape_v)
    xvy = np.zeros(shape_v)
    xvx[S.op.vi, S.op.vj] = S.vx
    xvy[S.op.vi, S.op.vj] = S.vy
    src = np.where(cells, problem.source, 0.0)
    phi = np.where(cells, problem.datum, 0.0)
    thresh = np.where(d.boundary_cells, tau * d.h / d.h**2, 0.0)
    u8 = lambda m: np.ascontiguousarray(m, dtype=np.uint8)  # noqa: E731
    masks = (u8(cells), u8(S.op.vmask), u8(d.boundary_cells))

    it = 0
    gap = math.inf
    P = D = float("nan")
    while it < cfg.max_pd:
        n = min(cfg.pd_check_every, cfg.max_pd - it)
        kernels.pd_iterate(v, vbar, gx, gy, g3, *masks, xvx, xvy, src, phi, thresh,
                           problem.eps, tau, s, cfg.pd_theta, d.h, n)
        it += n
        P, D, gap = _dual_certificate(v[cells], S, problem)
        report.residual_history.append(gap / max(abs(P), 1e-300))
        if gap <= cfg.pd_gap_tol * abs(P):
            break
    report.pd_iterations = it
    report.pd_gap_before_refine = float(gap / max(abs(P), 1e-300))
    vc = v[cells]
    if cfg.pd_refine and gap > cfg.pd_gap_tol * abs(P):
        vr = _refine(vc, S, problem)
        Pr, Dr, gr = _dual_certificate(vr, S, problem)
        if gr < gap:
            vc, P, D, gap = vr, Pr, Dr, gr
    report.iterations = it
    report.primal_energy = P
    report.dual_energy = D
    report.duality_gap = float(gap / max(abs(P), 1e-300))
    report.converged = bool(report.duality_gap <= cfg.pd_gap_tol)
    report.final_residual = report.duality_gap
    if not report.converged:
        report.message = "duality gap above tolerance"

    u = np.zeros((d.nx, d.ny))
    u[cells] = vc
    if cond.classification == EXTREMAL:
        u[cells] -= np.median(u[cells])
    report.energy = penalized_energy(u, problem)
    report.max_gradient, report.max_gradient_half = _gradient_monitors(u, d)
    return ScalarField(u, d), report


# --------------------------------------------------------------------------
# diagnostics


def boundary_flux(u, problem, t):
    """Outward flux of (Du + X)/W through the frontier of the eroded domain Omega_t."""
    d = problem.domain
    sub = d.erode(t)
    cells = sub.inside
    if np.any(cells & ~d.interior):
        raise DomainError("eroded domain reaches the boundary cells; increase t")
    v = np.where(d.inside, _values(u), 0.0)
    phix, _, _, phiy, _, _ = _fluxes(v, problem)
    return frontier_flux(phix, phiy, cells, d.h)


def flux_identity_defect(u, problem, t):
    """boundary_flux(t) minus the integral of sigma H over Omega_t (cell sums)."""
    d = problem.domain
    cells = d.erode(t).inside
    return boundary_flux(u, problem, t) - float(np.sum(problem.source[cells]) * d.h**2)


@dataclass
class ComparisonReport:
    boundary_ordered: bool
    max_violation: float
    margin: float
    tol: float
    passed: bool

    def to_dict(self):
        return asdict(self)


def comparison_check(u, v, problem, tol=None):
    """If u <= v on boundary cells, check u <= v + tol on interior cells."""
    d = problem.domain
    tol = 10.0 * d.h**2 if tol is None else float(tol)
    a, b = _values(u), _values(v)
    bnd = d.boundary_cells
    ordered = bool(np.all(a[bnd] <= b[bnd]))
    diff = (a - b)[d.interior]
    worst = float(np.max(diff)) if diff.size else 0.0
    margin = float(np.min(-diff)) + 0.0 if diff.size else 0.0
    passed = (not ordered) or worst <= tol
    return ComparisonReport(ordered, max(worst, 0.0), margin, tol, bool(passed))
