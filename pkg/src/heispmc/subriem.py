"""Riemannian and sub-Riemannian graph energies and the eps -> 0 continuation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DomainError, InvalidParameter
from .grid import ScalarField, gradient


def _values(u):
    return u.values if isinstance(u, ScalarField) else np.asarray(u, float)


def _horizontal(u, problem, sigma=None):
    """Du + sigma X on inside cells (flattened)."""
    d = problem.domain
    gx, gy = gradient(_values(u), d)
    s = problem.x_scale if sigma is None else sigma
    ins = d.inside
    return gx[ins] - s * d.Y[ins], gy[ins] + s * d.X[ins]


def energy_eps(u, problem, eps=None):
    """P_eps of the graph: sum sqrt(eps^2 + |Du + X|^2) h^2 over inside cells.

    Grid fields have no singular gradient part, so nothing else contributes.
    """
    e = problem.eps if eps is None else eps
    px, py = _horizontal(u, problem)
    return float(np.sum(np.sqrt(e * e + px * px + py * py)) * problem.domain.h ** 2)


def energy_subriemannian(u, problem, with_source=False):
    """P_H of the graph: sum |Du + X| h^2 (plus sum H u h^2 when ``with_source``)."""
    px, py = _horizontal(u, problem)
    d = problem.domain
    val = float(np.sum(np.hypot(px, py)) * d.h**2)
    if with_source:
        val += float(np.sum((problem.source * _values(u))[d.inside]) * d.h**2)
    return val


def characteristic_mask(u, problem, guard=1e-8):
    d = problem.domain
    px, py = _horizontal(u, problem)
    out = np.zeros((d.nx, d.ny), bool)
    out[d.inside] = np.hypot(px, py) < guard
    return out


# --------------------------------------------------------------------------
# continuation


@dataclass
class EpsSchedule:
    """Decreasing eps values with matching erosion margins (fractions of the inradius)."""

    eps_list: list = field(default_factory=lambda: [2.0**-k for k in range(7)])
    margins: list = None
    solver: str = "newton"
    config: object = None

    def __post_init__(self):
        self.eps_list = [float(e) for e in self.eps_list]
        if not self.eps_list or any(e <= 0 for e in self.eps_list):
            raise InvalidParameter("eps values must be positive")
        if any(b >= a for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise InvalidParameter("eps values must be strictly decreasing")
        if self.margins is None:
            self.margins = [0.2 * 2.0**-k for k in range(len(self.eps_list))]
        self.margins = [float(m) for m in self.margins]
        if len(self.margins) != len(self.eps_list):
            raise InvalidParameter("need one margin per eps value")
        if any(m < 0 for m in self.margins) or any(b > a for a, b in zip(self.margins, self.margins[1:])):
            raise InvalidParameter("margins must be non-negative and non-increasing")
        if self.solver not in ("newton", "primal_dual"):
            raise InvalidParameter(f"unknown solver {self.solver!r}")

    @classmethod
    def parse(cls, text, margins=None):
        """From a comma-separated eps list, e.g. ``"1,0.5,0.25"``."""
        try:
            eps = [float(t) for t in str(text).split(",") if t.strip()]
        except ValueError:
            raise InvalidParameter(f"cannot parse schedule {text!r}") from None
        return cls(eps, margins)


@dataclass
class LimitStep:
    eps: float
    margin: float
    energy_eps: float
    energy_sub: float
    du_max: float
    grad_max: float
    area: float
    converged: bool
    residual: float


@dataclass
class LimitReport:
    steps: list
    converged: bool
    tol: float
    singular_part: str = "zero (grid fields)"
    u: object = None
    message: str = ""

    def to_dict(self):
        return {
            "steps": [asdict(s) for s in self.steps],
            "converged": self.converged,
            "tol": self.tol,
            "singular_part": self.singular_part,
            "message": self.message,
        }


def eps_continuation(problem, schedule=None, tol=1e-6, probe_fraction=0.5):
    """Solve on Omega_j with eps_j for the schedule, warm-starting each step.

    Successive differences are measured on the cells common to both steps
    and on the probe set (cells at distance >= probe_fraction * inradius
    from the boundary), which is inside every Omega_j.
    """
    from .solve import PmcProblem, SolverConfig, minimize_penalized, solve_dirichlet

    schedule = schedule or EpsSchedule()
    base = problem.domain
    cfg = schedule.config or SolverConfig()
    r_in = base.inradius
    probe = base.inside & (
        np.asarray(base.shape.distance_to_boundary(base.X, base.Y)) >= probe_fraction * r_in
    )
    steps, prev, prev_inside = [], None, None
    diffs = []
    for eps, margin in zip(schedule.eps_list, schedule.margins):
        try:
            dom = base.erode(margin * r_in)
        except DomainError as exc:
            return LimitReport(steps, False, tol, u=prev, message=f"erosion failed: {exc}")
        sub = PmcProblem(dom, problem.H.on(dom), problem.phi.on(dom), eps, problem.mode, problem.sigma)
        init = None
        if prev is not None:
            init = np.where(prev_inside, prev, 0.0)
            # fill cells new to this step from their nearest solved neighbour
            _, (ii, jj) = ndimage.distance_transform_edt(~prev_inside, return_indices=True)
            init = init[ii, jj]
        if schedule.solver == "newton":
            u, rep = solve_dirichlet(sub, cfg, init=init)
        else:
            u, rep = minimize_penalized(sub, cfg)
        vals = u.values
        du = float("nan")
        if prev is not None:
            common = prev_inside & dom.inside
            du = float(np.max(np.abs(vals[common] - prev[common])))
            diffs.append(float(np.max(np.abs(vals[probe] - prev[probe]))))
        gx, gy = gradient(vals, dom)
        steps.append(
            LimitStep(
                eps=eps,
                margin=margin,
                energy_eps=energy_eps(u, sub),
                energy_sub=energy_subriemannian(u, sub),
                du_max=du,
                grad_max=float(np.nanmax(np.hypot(gx, gy)[dom.inside])),
                area=dom.area,
                converged=bool(rep.converged),
                residual=float(rep.final_residual),
            )
        )
        if not rep.converged:
            return LimitReport(steps, False, tol, u=u, message=f"solver failed at eps={eps}")
        prev, prev_inside = vals, dom.inside
    ok = bool(diffs) and diffs[-1] <= tol
    return LimitReport(steps, ok, tol, u=u, message="" if ok else "successive differences above tol")
