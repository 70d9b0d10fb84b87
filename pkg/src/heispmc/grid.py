"""Planar domains on a uniform cell-centred grid, fields and discrete calculus.

Cell ``(i, j)`` of a :class:`GridDomain` is centred at
``(x0 + (i + 1/2) h, y0 + (j + 1/2) h)``. A cell is *inside* when its centre
lies in the open set; inside cells with an exterior 8-neighbour are *boundary*
cells (Dirichlet data live there), the rest are *interior* cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.ops import polylabel
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError, StencilUnderflow

EXTERIOR, BOUNDARY, INTERIOR = 0, 1, 2


# --------------------------------------------------------------------------
# analytic shapes


@dataclass(frozen=True)
class BoundaryGeometry:
    """Samples of the boundary: points, outward unit normals, curvature."""

    points: np.ndarray
    normals: np.ndarray
    curvature: np.ndarray
    perimeter: float
    area: float


@dataclass(frozen=True)
class Disk:
    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError(f"disk radius must be positive, got {self.radius}")

    @property
    def perimeter(self):
        return 2.0 * math.pi * self.radius

    @property
    def area(self):
        return math.pi * self.radius**2

    @property
    def inradius(self):
        return self.radius

    @property
    def bounds(self):
        cx, cy = self.center
        r = self.radius
        return cx - r, cy - r, cx + r, cy + r

    def distance_to_boundary(self, x, y):
        cx, cy = self.center
        return self.radius - np.hypot(x - cx, y - cy)

    def contains(self, x, y):
        return self.distance_to_boundary(x, y) > 0

    def erode(self, t):
        if t >= self.radius:
            raise DomainError(f"erosion by {t} empties disk of radius {self.radius}")
        return Disk(self.center, self.radius - t)

    def boundary(self, ds):
        m = max(16, int(math.ceil(self.perimeter / ds)))
        th = 2.0 * math.pi * np.arange(m) / m
        nrm = np.column_stack([np.cos(th), np.sin(th)])
        pts = np.asarray(self.center) + self.radius * nrm
        curv = np.full(m, 1.0 / self.radius)
        return BoundaryGeometry(pts, nrm, curv, self.perimeter, self.area)

    def describe(self):
        return {"kind": "disk", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Rectangle:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise DomainError("rectangle needs x1 > x0 and y1 > y0")

    @property
    def perimeter(self):
        return 2.0 * ((self.x1 - self.x0) + (self.y1 - self.y0))

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @property
    def inradius(self):
        return 0.5 * min(self.x1 - self.x0, self.y1 - self.y0)

    @property
    def bounds(self):
        return self.x0, self.y0, self.x1, self.y1

    def distance_to_boundary(self, x, y):
        return np.minimum(
            np.minimum(x - self.x0, self.x1 - x), np.minimum(y - self.y0, self.y1 - y)
        )

    def contains(self, x, y):
        return self.distance_to_boundary(x, y) > 0

    def erode(self, t):
        if t >= self.inradius:
            raise DomainError(f"erosion by {t} empties the rectangle")
        return Rectangle(self.x0 + t, self.y0 + t, self.x1 - t, self.y1 - t)

    def boundary(self, ds):
        corners = [(self.x0, self.y0), (self.x1, self.y0), (self.x1, self.y1), (self.x0, self.y1)]
        normals = [(0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)]
        pts, nrm = [], []
        for k in range(4):
            a = np.asarray(corners[k])
            b = np.asarray(corners[(k + 1) % 4])
            m = max(4, int(math.ceil(np.linalg.norm(b - a) / ds)))
            # midpoints of m sub-edges; corners carry no curvature sample
            s = (np.arange(m) + 0.5) / m
            pts.append(a + s[:, None] * (b - a))
            nrm.append(np.tile(normals[k], (m, 1)))
        pts = np.vstack(pts)
        return BoundaryGeometry(pts, np.vstack(nrm), np.zeros(len(pts)), self.perimeter, self.area)

    def describe(self):
        return {"kind": "rectangle", "bounds": [self.x0, self.y0, self.x1, self.y1]}


@dataclass(frozen=True)
class Polygon:
    """Simple polygon given by its vertices (either orientation)."""

    vertices: tuple
    _geom: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        verts = tuple(tuple(map(float, v)) for v in self.vertices)
        if len(verts) < 3:
            raise DomainError("polygon needs at least three vertices")
        geom = shapely.Polygon(verts)
        if not geom.is_valid or geom.area <= 0:
            raise DomainError("polygon is self-intersecting or degenerate")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "_geom", geom)

    @classmethod
    def _from_geometry(cls, geom):
        if geom.is_empty or geom.geom_type != "Polygon":
            raise DomainError("erosion emptied or disconnected the polygon")
        return cls(tuple(geom.exterior.coords[:-1]))

    @property
    def perimeter(self):
        return float(self._geom.length)

    @property
    def area(self):
        return float(self._geom.area)

    @property
    def inradius(self):
        pole = polylabel(self._geom, tolerance=1e-6)
        return float(self._geom.exterior.distance(pole))

    @property
    def bounds(self):
        return tuple(self._geom.bounds)

    def distance_to_boundary(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        pts = shapely.points(x.ravel(), y.ravel())
        d = shapely.distance(self._geom.exterior, pts).reshape(x.shape)
        inside = shapely.contains_xy(self._geom, x.ravel(), y.ravel()).reshape(x.shape)
        return np.where(inside, d, -d)

    def contains(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return shapely.contains_xy(self._geom, x.ravel(), y.ravel()).reshape(x.shape)

    def erode(self, t):
        if t <= 0:
            return self
        return Polygon._from_geometry(self._geom.buffer(-t, join_style="mitre"))

    def boundary(self, ds):
        """Edge samples carry zero curvature; each vertex carries the turning
        angle divided by the mean length of its two adjacent edges."""
        v = np.asarray(self.vertices)
        if shapely.Polygon(v).exterior.is_ccw is False:
            v = v[::-1]
        m = len(v)
        pts, nrm, curv = [], [], []
        for k in range(m):
            a, b = v[k], v[(k + 1) % m]
            e = b - a
            L = float(np.linalg.norm(e))
            out = np.array([e[1], -e[0]]) / L
            cnt = max(2, int(math.ceil(L / ds)))
            s = (np.arange(cnt) + 0.5) / cnt
            pts.append(a + s[:, None] * e)
            nrm.append(np.tile(out, (cnt, 1)))
            curv.append(np.zeros(cnt))
        for k in range(m):
            prev, cur, nxt = v[k - 1], v[k], v[(k + 1) % m]
            e1, e2 = cur - prev, nxt - cur
            ang = math.atan2(e1[0] * e2[1] - e1[1] * e2[0], float(e1 @ e2))
            ell = 0.5 * (np.linalg.norm(e1) + np.linalg.norm(e2))
            n1 = np.array([e1[1], -e1[0]]) / np.linalg.norm(e1)
            n2 = np.array([e2[1], -e2[0]]) / np.linalg.norm(e2)
            nb = n1 + n2
            pts.append(cur[None, :])
            nrm.append((nb / np.linalg.norm(nb))[None, :])
            curv.append(np.array([ang / ell]))
        return BoundaryGeometry(
            np.vstack(pts), np.vstack(nrm), np.concatenate(curv), self.perimeter, self.area
        )

    def describe(self):
        return {"kind": "polygon", "vertices": [list(p) for p in self.vertices]}


def parse_shape(spec):
    """Shape from a descriptor string or dict.

    Strings: ``disk:r``, ``disk:cx,cy,r``, ``rect:x0,y0,x1,y1``,
    ``square`` (unit square centred at the origin),
    ``polygon:x1,y1;x2,y2;...``.
    """
    if isinstance(spec, (Disk, Rectangle, Polygon)):
        return spec
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "disk":
            return Disk(tuple(spec.get("center", (0.0, 0.0))), float(spec["radius"]))
        if kind == "rectangle":
            return Rectangle(*map(float, spec["bounds"]))
        if kind == "polygon":
            return Polygon(tuple(map(tuple, spec["vertices"])))
        raise DomainError(f"unknown domain kind {kind!r}")
    s = str(spec).strip()
    kind, _, rest = s.partition(":")
    kind = kind.lower()
    try:
        if kind == "disk":
            vals = [float(t) for t in rest.split(",")] if rest else [1.0]
            if len(vals) == 1:
                return Disk((0.0, 0.0), vals[0])
            if len(vals) == 3:
                return Disk((vals[0], vals[1]), vals[2])
        elif kind in ("rect", "rectangle"):
            vals = [float(t) for t in rest.split(",")]
            if len(vals) == 4:
                return Rectangle(*vals)
        elif kind == "square":
            side = float(rest) if rest else 1.0
            return Rectangle(-side / 2, -side / 2, side / 2, side / 2)
        elif kind == "polygon":
            verts = [tuple(float(t) for t in p.split(",")) for p in rest.split(";") if p.strip()]
            return Polygon(tuple(verts))
    except ValueError as exc:
        raise DomainError(f"cannot parse domain {spec!r}: {exc}") from None
    raise DomainError(f"cannot parse domain {spec!r}")


# --------------------------------------------------------------------------
# grid domain


@dataclass(frozen=True, eq=False)
class GridDomain:
    shape: object
    h: float
    nx: int
    ny: int
    x0: float
    y0: float
    mask: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, spec, h, pad=3):
        """Discretize ``spec`` with spacing ``h`` (see :func:`parse_shape`)."""
        shape = parse_shape(spec)
        if not h > 0:
            raise DomainError("grid spacing must be positive")
        if 2.0 * shape.inradius < 8 * h:
            raise DomainError(
                f"h={h} too coarse: need at least 8 cells across (inradius {shape.inradius})"
            )
        bx0, by0, bx1, by1 = shape.bounds
        # lattice anchored at integer multiples of h so refinements nest
        i0 = math.floor(bx0 / h) - pad
        j0 = math.floor(by0 / h) - pad
        nx = math.ceil(bx1 / h) + pad - i0
        ny = math.ceil(by1 / h) + pad - j0
        return cls.on_lattice(shape, h, nx, ny, i0 * h, j0 * h)

    @classmethod
    def on_lattice(cls, shape, h, nx, ny, x0, y0):
        xc = x0 + h * (np.arange(nx) + 0.5)
        yc = y0 + h * (np.arange(ny) + 0.5)
        X, Y = np.meshgrid(xc, yc, indexing="ij")
        inside = np.asarray(shape.contains(X, Y), dtype=bool)
        if not inside.any():
            raise DomainError("domain contains no cell centres")
        if inside[0, :].any() or inside[-1, :].any() or inside[:, 0].any() or inside[:, -1].any():
            raise DomainError("domain touches the edge of the lattice")
        padded = np.pad(inside, 1, constant_values=False)
        all_nb = ndimage.minimum_filter(padded.astype(np.uint8), size=3, mode="constant")[1:-1, 1:-1]
        mask = np.where(inside, np.where(all_nb > 0, INTERIOR, BOUNDARY), EXTERIOR).astype(np.int8)
        _, ncomp = ndimage.label(inside)
        if ncomp != 1:
            raise DomainError(f"discrete domain has {ncomp} connected components")
        return cls(shape, float(h), int(nx), int(ny), float(x0), float(y0), mask)

    # geometry ----------------------------------------------------------------
    @property
    def xc(self):
        return self.x0 + self.h * (np.arange(self.nx) + 0.5)

    @property
    def yc(self):
        return self.y0 + self.h * (np.arange(self.ny) + 0.5)

    @property
    def X(self):
        return np.meshgrid(self.xc, self.yc, indexing="ij")[0]

    @property
    def Y(self):
        return np.meshgrid(self.xc, self.yc, indexing="ij")[1]

    @property
    def inside(self):
        return self.mask != EXTERIOR

    @property
    def interior(self):
        return self.mask == INTERIOR

    @property
    def boundary_cells(self):
        return self.mask == BOUNDARY

    @property
    def n_cells(self):
        return int(self.inside.sum())

    @property
    def area(self):
        return self.n_cells * self.h**2

    @property
    def perimeter(self):
        return self.shape.perimeter

    @property
    def inradius(self):
        return self.shape.inradius

    def boundary_geometry(self, ds=None):
        return self.shape.boundary(self.h if ds is None else ds)

    def erode(self, t):
        """Cells at distance > t from the boundary, on the same lattice."""
        if t < 0:
            raise DomainError("erosion distance must be non-negative")
        if t == 0:
            return self
        shape = self.shape.erode(t)
        return GridDomain.on_lattice(shape, self.h, self.nx, self.ny, self.x0, self.y0)

    def vertex_mask(self):
        """Grid vertices whose four surrounding cells are all inside."""
        m = self.inside
        return m[:-1, :-1] & m[1:, :-1] & m[:-1, 1:] & m[1:, 1:]

    def vertex_coords(self):
        xv = self.x0 + self.h * np.arange(1, self.nx)
        yv = self.y0 + self.h * np.arange(1, self.ny)
        return np.meshgrid(xv, yv, indexing="ij")

    def cell_index(self, x, y):
        i = int(round((x - self.x0) / self.h - 0.5))
        j = int(round((y - self.y0) / self.h - 0.5))
        return i, j

    def describe(self):
        return {
            "shape": self.shape.describe(),
            "h": self.h,
            "nx": self.nx,
            "ny": self.ny,
            "origin": [self.x0, self.y0],
            "cells": self.n_cells,
        }


# --------------------------------------------------------------------------
# fields


@dataclass(eq=False)
class ScalarField:
    """Cell-centred values on a grid; entries outside the domain are ignored.

    ``func`` keeps the analytic definition when the field came from one, so
    boundary-point evaluations (Serrin margins) are exact.
    """

    values: np.ndarray
    domain: GridDomain
    func: object = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.domain.nx, self.domain.ny):
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {(self.domain.nx, self.domain.ny)}"
            )
        if not np.all(np.isfinite(self.values[self.domain.inside])):
            raise ValueError("field has non-finite values inside the domain")

    @classmethod
    def constant(cls, domain, c):
        c = float(c)
        return cls(np.full((domain.nx, domain.ny), c), domain, lambda x, y: np.full(np.shape(x), c))

    @classmethod
    def from_function(cls, domain, f):
        X, Y = np.meshgrid(domain.xc, domain.yc, indexing="ij")
        vals = np.broadcast_to(np.asarray(f(X, Y), dtype=float), X.shape).copy()
        return cls(vals, domain, f)

    def on(self, domain):
        """Same values viewed on another domain sharing the lattice."""
        return ScalarField(self.values, domain, self.func)

    def at(self, x, y):
        """Evaluate at arbitrary points: exactly when analytic, else nearest cell."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if self.func is not None:
            return np.broadcast_to(np.asarray(self.func(x, y), float), x.shape).copy()
        d = self.domain
        i = np.clip(np.rint((x - d.x0) / d.h - 0.5).astype(int), 0, d.nx - 1)
        j = np.clip(np.rint((y - d.y0) / d.h - 0.5).astype(int), 0, d.ny - 1)
        return self.values[i, j]

    def __add__(self, c):
        return ScalarField(self.values + c, self.domain)

    def __mul__(self, c):
        return ScalarField(self.values * c, self.domain)

    __rmul__ = __mul__


def sample(values, domain, x, y):
    """Bilinear interpolation of a cell field (NaN where the stencil is invalid)."""
    interp = RegularGridInterpolator(
        (domain.xc, domain.yc), values, method="linear", bounds_error=False, fill_value=np.nan
    )
    pts = np.column_stack([np.ravel(x), np.ravel(y)])
    return interp(pts).reshape(np.shape(x))


# --------------------------------------------------------------------------
# calculus


def _axis_derivative(f, valid, h, axis):
    f = np.moveaxis(f, axis, 0)
    m = np.moveaxis(valid, axis, 0)
    out = np.full(f.shape, np.nan)
    n = f.shape[0]
    ok = np.zeros(f.shape, bool)
    # central
    c = m[1:-1] & m[2:] & m[:-2]
    out[1:-1][c] = ((f[2:] - f[:-2]) / (2 * h))[c]
    ok[1:-1] |= c
    # one-sided, second order
    if n >= 3:
        fwd = m[:-2] & m[1:-1] & m[2:]
        sel = fwd & ~ok[:-2]
        out[:-2][sel] = ((-3 * f[:-2] + 4 * f[1:-1] - f[2:]) / (2 * h))[sel]
        ok[:-2] |= sel
        bwd = m[2:] & m[1:-1] & m[:-2]
        sel = bwd & ~ok[2:]
        out[2:][sel] = ((3 * f[2:] - 4 * f[1:-1] + f[:-2]) / (2 * h))[sel]
        ok[2:] |= sel
    out[~m] = np.nan
    return np.moveaxis(out, 0, axis), np.moveaxis(ok | ~m, 0, axis)


def gradient(f, domain=None):
    """Cell-centred gradient: central differences, one-sided second order at the frontier.

    ``f`` may be a :class:`ScalarField` or an array together with ``domain``.
    Raises :class:`StencilUnderflow` if some inside cell has no admissible
    stencil along an axis.
    """
    if isinstance(f, ScalarField):
        domain, vals = f.domain, f.values
    else:
        vals = np.asarray(f, float)
    inside = domain.inside
    gx, okx = _axis_derivative(vals, inside, domain.h, 0)
    gy, oky = _axis_derivative(vals, inside, domain.h, 1)
    if not (okx.all() and oky.all()):
        raise StencilUnderflow("domain too thin for a second-order gradient stencil")
    return gx, gy


def vertex_gradient(f, domain=None):
    """Gradient at grid vertices from the four surrounding cells (NaN if any is outside)."""
    if isinstance(f, ScalarField):
        domain, vals = f.domain, f.values
    else:
        vals = np.asarray(f, float)
    h = domain.h
    a, b, c, d = vals[:-1, :-1], vals[1:, :-1], vals[:-1, 1:], vals[1:, 1:]
    gx = (b + d - a - c) / (2 * h)
    gy = (c + d - a - b) / (2 * h)
    vm = domain.vertex_mask()
    if not vm.any():
        raise StencilUnderflow("no grid vertex has four inside cells")
    gx = np.where(vm, gx, np.nan)
    gy = np.where(vm, gy, np.nan)
    return gx, gy


def divergence(Fx, Fy, domain):
    """Negative adjoint of :func:`vertex_gradient` (h^2-weighted inner products).

    Vertex values outside the vertex mask are treated as zero, so
    ``<divergence(F), f> + <F, vertex_gradient(f)> = 0`` for every cell field.
    The part of the first sum carried by boundary cells is the discrete
    boundary term.
    """
    h = domain.h
    vm = domain.vertex_mask()
    gx = np.where(vm, Fx, 0.0)
    gy = np.where(vm, Fy, 0.0)
    out = np.zeros((domain.nx, domain.ny))
    out[:-1, :-1] -= (-gx - gy) / (2 * h)
    out[1:, :-1] -= (gx - gy) / (2 * h)
    out[:-1, 1:] -= (-gx + gy) / (2 * h)
    out[1:, 1:] -= (gx + gy) / (2 * h)
    return np.where(domain.inside, out, 0.0)


def face_divergence(phix, phiy, h):
    """Cell divergence of face-normal fluxes (NaN on the outer ring of the lattice)."""
    from . import kernels

    return kernels.flux_divergence(phix, phiy, h)


def frontier_flux(phix, phiy, cells, h):
    """Outward flux ``sum phi * h`` through the faces separating ``cells`` from the rest."""
    cells = np.asarray(cells, bool)
    a, b = cells[:-1, :], cells[1:, :]
    fx = np.sum(phix[a & ~b]) - np.sum(phix[~a & b])
    a, b = cells[:, :-1], cells[:, 1:]
    fy = np.sum(phiy[a & ~b]) - np.sum(phiy[~a & b])
    return float((fx + fy) * h)


def integrate(f, domain=None, cells=None):
    """Midpoint quadrature ``sum f h^2`` over the inside cells (or ``cells``)."""
    if isinstance(f, ScalarField):
        domain, vals = f.domain, f.values
    else:
        vals = np.broadcast_to(np.asarray(f, float), (domain.nx, domain.ny))
    sel = domain.inside if cells is None else np.asarray(cells, bool)
    return float(np.sum(vals[sel]) * domain.h**2)


def erode(domain, t):
    return domain.erode(t)


# --------------------------------------------------------------------------
# CSV field dumps


def write_field_csv(path, values, domain, cells=None):
    """Write ``x,y,value`` rows (row-major over the lattice, 17 significant digits)."""
    sel = domain.inside if cells is None else np.asarray(cells, bool)
    X, Y = domain.X, domain.Y
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("x,y,value\n")
        for x, y, v in zip(X[sel], Y[sel], np.asarray(values, float)[sel]):
            fh.write(f"{x:.17g},{y:.17g},{v:.17g}\n")


def read_field_csv(path, domain):
    """Read an ``x,y,value`` dump onto ``domain``; every inside cell must be covered."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 3:
        raise ValueError(f"{path}: expected three columns x,y,value")
    i = np.rint((data[:, 0] - domain.x0) / domain.h - 0.5).astype(int)
    j = np.rint((data[:, 1] - domain.y0) / domain.h - 0.5).astype(int)
    ok = (i >= 0) & (i < domain.nx) & (j >= 0) & (j < domain.ny)
    vals = np.zeros((domain.nx, domain.ny))
    seen = np.zeros((domain.nx, domain.ny), bool)
    vals[i[ok], j[ok]] = data[ok, 2]
    seen[i[ok], j[ok]] = True
    if not np.all(seen[domain.inside]):
        raise ValueError(f"{path}: field does not cover every cell of the domain")
    return ScalarField(vals, domain)
