"""Solvability conditions for (Omega, H): Giusti-type trichotomy, Serrin margins, Cheeger bounds.

Only Omega itself enters the infeasible/extremal verdicts, so those are
certificates. The subset condition cannot be checked exhaustively; it is
probed over a declared family (inscribed disks and level sets of H) and
summarized by ``delta_hat``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import shapely
from scipy import ndimage
from skimage.measure import perimeter_crofton

from .grid import Disk, GridDomain, Rectangle, ScalarField, integrate

NON_EXTREMAL, EXTREMAL, INFEASIBLE = "non_extremal", "extremal", "infeasible"
ANALYTIC_TOL = 1e-9


@dataclass
class ConditionReport:
    integral_H: float
    perimeter: float
    area: float
    classification: str
    extremal_tol: float
    serrin_min_margin: float
    cheeger_lower_bound: float
    cheeger_method: str
    delta_hat: float
    scan_family_size: int

    def to_dict(self):
        return asdict(self)


@dataclass
class SerrinResult:
    min_margin: float
    passed: bool
    strict: bool

    def to_dict(self):
        return asdict(self)


# --------------------------------------------------------------------------
# quadrature


def _boundary_loop(shape, m=512):
    """Points along the closed boundary with d(y)/d(param) weights for Green's formula."""
    if isinstance(shape, Disk):
        th = 2.0 * math.pi * np.arange(m) / m
        cx, cy = shape.center
        x = cx + shape.radius * np.cos(th)
        y = cy + shape.radius * np.sin(th)
        dy = shape.radius * np.cos(th) * (2.0 * math.pi / m)
        return x, y, dy
    if isinstance(shape, Rectangle):
        verts = [(shape.x0, shape.y0), (shape.x1, shape.y0), (shape.x1, shape.y1), (shape.x0, shape.y1)]
    else:
        verts = list(shape.vertices)
        if not shapely.Polygon(verts).exterior.is_ccw:
            verts = verts[::-1]
    s, w = np.polynomial.legendre.leggauss(32)
    s, w = 0.5 * (s + 1.0), 0.5 * w
    xs, ys, dys = [], [], []
    for k in range(len(verts)):
        a = np.asarray(verts[k], float)
        b = np.asarray(verts[(k + 1) % len(verts)], float)
        xs.append(a[0] + s * (b[0] - a[0]))
        ys.append(a[1] + s * (b[1] - a[1]))
        dys.append(w * (b[1] - a[1]))
    return np.concatenate(xs), np.concatenate(ys), np.concatenate(dys)


def shape_integral(shape, f):
    """High-order integral of an analytic f over the shape via Green's formula.

    Uses ``int f dA = oint F dy`` with ``F(x, y) = x * int_0^1 f(x tau, y) dtau``,
    which is valid when the segment from (0, y) to (x, y) stays where f is smooth.
    """
    x, y, dy = _boundary_loop(shape)
    tau, wt = np.polynomial.legendre.leggauss(32)
    tau, wt = 0.5 * (tau + 1.0), 0.5 * wt
    vals = np.asarray(f(x[:, None] * tau[None, :], np.broadcast_to(y[:, None], (len(y), len(tau)))), float)
    vals = np.broadcast_to(vals, (len(y), len(tau)))
    F = x * (vals @ wt)
    return float(np.sum(F * dy))


def integral_of(H, domain):
    """(integral, tol): analytic quadrature when H carries a function, else cell sum."""
    if isinstance(H, ScalarField) and H.func is not None:
        return shape_integral(domain.shape, H.func), ANALYTIC_TOL
    vals = H.values if isinstance(H, ScalarField) else H
    return integrate(vals, domain), 2.0 / math.sqrt(domain.n_cells)


# --------------------------------------------------------------------------
# Serrin


def _H_on_boundary(H, domain, pts):
    if isinstance(H, ScalarField) and H.func is not None:
        return H.at(pts[:, 0], pts[:, 1])
    vals = H.values if isinstance(H, ScalarField) else np.asarray(H, float)
    # nearest inside cell to each sample
    _, (ii, jj) = ndimage.distance_transform_edt(~domain.inside, return_indices=True)
    i = np.clip(np.rint((pts[:, 0] - domain.x0) / domain.h - 0.5).astype(int), 0, domain.nx - 1)
    j = np.clip(np.rint((pts[:, 1] - domain.y0) / domain.h - 0.5).astype(int), 0, domain.ny - 1)
    return vals[ii[i, j], jj[i, j]]


def serrin_margins(domain, H):
    geo = domain.boundary_geometry()
    Hb = _H_on_boundary(H, domain, geo.points)
    return geo.curvature - np.abs(Hb)


def serrin_check(domain, H, strict=True):
    """Compare |H| with the boundary curvature at every boundary sample."""
    margin = float(np.min(serrin_margins(domain, H)))
    passed = margin > 0 if strict else margin >= 0
    return SerrinResult(margin, bool(passed), bool(strict))


# --------------------------------------------------------------------------
# Cheeger


def _openings(shape, steps=40):
    """Morphological openings of a polygonal shape, as (perimeter, area) pairs."""
    if isinstance(shape, Rectangle):
        geom = shapely.box(shape.x0, shape.y0, shape.x1, shape.y1)
    else:
        geom = shapely.Polygon(shape.vertices)
    r = shape.inradius
    out = [(geom.length, geom.area)]
    for t in r * np.arange(1, steps) / steps:
        g = geom.buffer(-t, join_style="mitre")
        if g.is_empty:
            break
        g = g.buffer(t, quad_segs=64)
        out.append((g.length, g.area))
    out.append((2 * math.pi * r, math.pi * r * r))
    return out


def cheeger_bound(domain, override=None):
    """(value, method): exact for disks, else the best ratio over a scanned family.

    The scanned value is an upper bound on the Cheeger constant; the test
    ||H||_inf < h(Omega) built on it is advisory.
    """
    if override is not None:
        return float(override), "user_supplied"
    shape = domain.shape if isinstance(domain, GridDomain) else domain
    if isinstance(shape, Disk):
        return 2.0 / shape.radius, "exact_disk"
    ratios = [p / a for p, a in _openings(shape)]
    return float(min(ratios)), "heuristic_scan"


# --------------------------------------------------------------------------
# subset scan


def _disk_family(domain):
    shape = domain.shape
    r_in = shape.inradius
    x0, y0, x1, y1 = shape.bounds
    step = r_in / 4.0
    xs = np.arange(x0 + step / 2, x1, step)
    ys = np.arange(y0 + step / 2, y1, step)
    cx, cy = np.meshgrid(xs, ys, indexing="ij")
    cx, cy = cx.ravel(), cy.ravel()
    d = np.asarray(shape.distance_to_boundary(cx, cy), float)
    keep = d > 2 * domain.h
    for x, y, dist in zip(cx[keep], cy[keep], d[keep]):
        for frac in (0.25, 0.5, 0.75, 0.999):
            yield float(x), float(y), float(frac * dist)


def _scan(domain, H):
    vals = H.values if isinstance(H, ScalarField) else np.asarray(H, float)
    X, Y = domain.X, domain.Y
    inside = domain.inside
    h2 = domain.h**2
    ratios = []
    for x, y, r in _disk_family(domain):
        cells = inside & ((X - x) ** 2 + (Y - y) ** 2 < r * r)
        if not cells.any():
            continue
        ratios.append(abs(np.sum(vals[cells]) * h2) / (2 * math.pi * r))
    hv = vals[inside]
    if np.ptp(hv) > 0:
        for c in np.quantile(hv, np.linspace(0.1, 0.9, 9)):
            for cells in (inside & (vals >= c), inside & (vals < c)):
                n = int(cells.sum())
                if n == 0 or n == domain.n_cells:
                    continue
                P = perimeter_crofton(cells, directions=4) * domain.h
                if P > 0:
                    ratios.append(abs(np.sum(vals[cells]) * h2) / P)
    if not ratios:
        return 1.0, 0
    return float(np.clip(1.0 - max(ratios), 0.0, 1.0)), len(ratios)


# --------------------------------------------------------------------------


def classify(integral_H, perimeter, tol):
    a = abs(integral_H)
    if a > perimeter * (1.0 + tol):
        return INFEASIBLE
    if abs(a - perimeter) <= tol * perimeter:
        return EXTREMAL
    return NON_EXTREMAL


def classify_domain(domain, H, tol=None, scan=True, cheeger_override=None):
    """ConditionReport for (domain, H). ``tol=None`` picks the default for the H kind."""
    if not isinstance(H, ScalarField):
        H = ScalarField(np.broadcast_to(np.asarray(H, float), (domain.nx, domain.ny)), domain)
    if not np.all(np.isfinite(H.values[domain.inside])):
        raise ValueError("H must be finite")
    total, default_tol = integral_of(H, domain)
    tol = default_tol if tol is None else float(tol)
    perim = domain.perimeter
    cls = classify(total, perim, tol)
    margin = float(np.min(serrin_margins(domain, H)))
    cheeger, method = cheeger_bound(domain, cheeger_override)
    delta, size = _scan(domain, H) if scan else (float("nan"), 0)
    return ConditionReport(
        integral_H=float(total),
        perimeter=float(perim),
        area=float(domain.shape.area),
        classification=cls,
        extremal_tol=tol,
        serrin_min_margin=margin,
        cheeger_lower_bound=cheeger,
        cheeger_method=method,
        delta_hat=delta,
        scan_family_size=size,
    )
