"""Heisenberg-group geometry of t-graphs under the metric g_eps.

Frame vectors are coordinate tuples relative to the orthonormal frame
``(X_1..X_n, Y_1..Y_n, eps T)``. On a t-graph every quantity is extended
vertically (independent of t), so frame derivatives of such a function
reduce to planar derivatives: ``Z_i f = D_i f`` for ``i <= 2n`` and
``Z_{2n+1} f = 0``. The grid operations below use n = 1.

Sign convention: the solver source ``H`` enters as
``div((Du + X) / sqrt(eps^2 + |Du + X|^2)) = H``; with the upward normal
used here the geometric mean curvature is ``H_geom = CURVATURE_SIGN * H``.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import CharacteristicPointError, InvalidParameter, StencilUnderflow
from .grid import ScalarField

CURVATURE_SIGN = -1.0
CHARACTERISTIC_GUARD = 1e-8
MODES = ("heisenberg", "euclidean")


def _check_eps(eps):
    if eps == 0 or not np.isfinite(eps):
        raise InvalidParameter(f"eps must be a nonzero finite real, got {eps!r}")


# --------------------------------------------------------------------------
# point formulas (general n)


def vector_field_X(z):
    """X(x, y) = (-y, x) for z = (x_1..x_n, y_1..y_n); acts on the last axis."""
    z = np.asarray(z, dtype=float)
    m = z.shape[-1]
    if m % 2 or m < 2:
        raise InvalidParameter("point must have even dimension 2n >= 2")
    n = m // 2
    return np.concatenate([-z[..., n:], z[..., :n]], axis=-1)


def frame_matrix(z, eps):
    """Change of basis from the frame (X, Y, eps T) to the canonical basis.

    Column k holds the canonical coordinates of the k-th frame vector, so the
    last row is ``(y_1..y_n, -x_1..-x_n, eps)`` and ``det = eps``.
    """
    _check_eps(eps)
    z = np.asarray(z, dtype=float)
    m = z.shape[-1]
    if m % 2 or m < 2:
        raise InvalidParameter("point must have even dimension 2n >= 2")
    n = m // 2
    C = np.eye(m + 1)
    C[m, :n] = z[n:]
    C[m, n:m] = -z[:n]
    C[m, m] = eps
    return C


def J(U):
    """J(X_i) = Y_i, J(Y_i) = -X_i, J(T) = 0, on frame coordinates."""
    U = np.asarray(U, dtype=float)
    n = (U.shape[-1] - 1) // 2
    out = np.zeros_like(U)
    out[..., :n] = -U[..., n : 2 * n]
    out[..., n : 2 * n] = U[..., :n]
    return out


def ricci_form(U, eps, n=None):
    """Ric(U, U) for a frame vector U of (H^n, g_eps).

    ``Ric(U) = -(2/eps^2) |U|^2 + (2n + 2) u_{2n+1}^2 / eps^2`` where ``|U|``
    is the full g_eps norm. Summing the three curvature blocks of the
    Levi-Civita table, (u_{2n+1}^2 - 3 u_{n+j}^2)/eps^2 for X_j,
    (u_{2n+1}^2 - 3 u_j^2)/eps^2 for Y_j and |U_h|^2/eps^2 for eps T, gives
    exactly this; reading the first term as the horizontal norm instead would
    give 2n+2 rather than 2n for U = eps T.
    """
    _check_eps(eps)
    U = np.asarray(U, dtype=float)
    if n is None:
        n = (U.shape[-1] - 1) // 2
    if U.shape[-1] != 2 * n + 1:
        raise InvalidParameter(f"frame vector must have {2 * n + 1} components")
    full = np.sum(U * U, axis=-1)
    last = U[..., -1] ** 2
    return (-2.0 * full + (2 * n + 2) * last) / eps**2


def graph_normal_point(p, eps):
    """Upward unit normal of a graph with ``p = Du + X`` at one point (frame coordinates)."""
    _check_eps(eps)
    p = np.asarray(p, dtype=float)
    W = np.sqrt(eps * eps + np.sum(p * p, axis=-1))
    return np.concatenate([-p / W[..., None], (eps / W)[..., None]], axis=-1)


# --------------------------------------------------------------------------
# finite differences with NaN margins


def _d1(f, h, axis):
    out = np.full(f.shape, np.nan)
    sl = [slice(None)] * f.ndim
    lo, mid, hi = list(sl), list(sl), list(sl)
    lo[axis], mid[axis], hi[axis] = slice(None, -2), slice(1, -1), slice(2, None)
    out[tuple(mid)] = (f[tuple(hi)] - f[tuple(lo)]) / (2.0 * h)
    return out


def _d2(f, h, axis):
    out = np.full(f.shape, np.nan)
    sl = [slice(None)] * f.ndim
    lo, mid, hi = list(sl), list(sl), list(sl)
    lo[axis], mid[axis], hi[axis] = slice(None, -2), slice(1, -1), slice(2, None)
    out[tuple(mid)] = (f[tuple(hi)] - 2.0 * f[tuple(mid)] + f[tuple(lo)]) / (h * h)
    return out


def _grad(f, h):
    return _d1(f, h, 0), _d1(f, h, 1)


def _require(field, what):
    if not np.any(np.isfinite(field)):
        raise StencilUnderflow(f"domain too small for the {what} stencil")
    return field


# --------------------------------------------------------------------------
# graph geometry


class GraphGeometry:
    """Derived fields of the t-graph of ``u`` in (H^1, g_eps).

    ``mode='euclidean'`` sets X to zero and drops the Heisenberg curvature
    terms, which turns every operator into its flat counterpart (the graph
    then lives in R^3 with the t-axis scaled by eps).
    """

    def __init__(self, u, eps, mode="heisenberg", domain=None):
        _check_eps(eps)
        if mode not in MODES:
            raise InvalidParameter(f"mode must be one of {MODES}, got {mode!r}")
        if isinstance(u, ScalarField):
            domain, vals = u.domain, u.values
        else:
            vals = np.asarray(u, dtype=float)
            if domain is None:
                raise InvalidParameter("a domain is required when u is an array")
        self.domain = domain
        self.eps = float(eps)
        self.mode = mode
        self.h = domain.h
        self.u = np.where(domain.inside, vals, np.nan)
        self._cache = {}

    @property
    def heis(self):
        return 1.0 if self.mode == "heisenberg" else 0.0

    @property
    def X(self):
        d = self.domain
        Xg, Yg = np.meshgrid(d.xc, d.yc, indexing="ij")
        return -self.heis * Yg, self.heis * Xg

    def _get(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def Du(self):
        return self._get("Du", lambda: _grad(self.u, self.h))

    @property
    def V(self):
        """Du + X (planar)."""

        def f():
            (ux, uy), (Xx, Xy) = self.Du, self.X
            return ux + Xx, uy + Xy

        return self._get("V", f)

    @property
    def W(self):
        return self._get("W", lambda: np.sqrt(self.eps**2 + self.V[0] ** 2 + self.V[1] ** 2))

    @property
    def normal(self):
        """nu^eps as a (3, nx, ny) array of frame components."""

        def f():
            (V1, V2), W = self.V, self.W
            return np.stack([-V1 / W, -V2 / W, self.eps / W])

        return self._get("normal", f)

    @property
    def horizontal_speed(self):
        return self._get("absV", lambda: np.hypot(*self.V))

    @property
    def characteristic(self):
        s = self.horizontal_speed
        return np.isfinite(s) & (s < CHARACTERISTIC_GUARD)

    @property
    def horizontal_normal(self):
        """nu^H = -(Du + X)/|Du + X|, NaN at characteristic points."""

        def f():
            s = np.where(self.characteristic, np.nan, self.horizontal_speed)
            V1, V2 = self.V
            return np.stack([-V1 / s, -V2 / s])

        return self._get("nuH", f)

    @property
    def TdH(self):
        """1/|Du + X|: the limit of nu_3/eps, NaN at characteristic points."""
        return self._get(
            "TdH",
            lambda: 1.0 / np.where(self.characteristic, np.nan, self.horizontal_speed),
        )


def graph_normal(geom):
    """Unit normal field (3, nx, ny): (-(Du+X)/W, eps/W)."""
    return geom.normal


def mean_curvature_operator(geom):
    """Conservative discrete div((Du + X)/sqrt(eps^2 + |Du + X|^2)) at interior cells."""
    d = geom.domain
    u = np.where(d.inside, geom.u, 0.0)
    phix, _, _, phiy, _, _ = kernels.face_fluxes(u, geom.eps, geom.heis, d.h, d.x0, d.y0)
    div = kernels.flux_divergence(phix, phiy, d.h)
    return _require(np.where(d.interior, div, np.nan), "divergence")


def _trace_term(n1, n2, h):
    a11, a12 = _grad(n1, h)  # d_x nu1, d_y nu1
    a21, a22 = _grad(n2, h)
    return a11 * a11 + 2.0 * a12 * a21 + a22 * a22


def curvature_energy(geom):
    """Ric(nu, nu) + |h|^2 on the graph.

    Evaluated as ``sum_{l,s} Z_s(nu_l) Z_l(nu_s) + 4 <J nu, grad(nu_3/eps)>
    + 4n (nu_3/eps)^2`` on the vertical extension of nu; the value of this
    combination does not depend on which unit extension is used.
    """

    def f():
        n1, n2, n3 = geom.normal
        h = geom.h
        tr = _trace_term(n1, n2, h)
        if not geom.heis:
            return tr
        g = n3 / geom.eps
        gx, gy = _grad(g, h)
        return tr + 4.0 * (-n2 * gx + n1 * gy) + 4.0 * g * g

    return _require(geom._get("ce", f), "curvature")


def laplace_beltrami(f, geom, H):
    """Laplace-Beltrami operator of the graph applied to a vertically extended ``f``.

    ``H`` is the solver source (geometric curvature is ``CURVATURE_SIGN * H``).
    """
    fv = f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)
    Hv = H.values if isinstance(H, ScalarField) else np.broadcast_to(np.asarray(H, float), fv.shape)
    h = geom.h
    n1, n2, n3 = geom.normal
    fx, fy = _grad(fv, h)
    fxx = _d2(fv, h, 0)
    fyy = _d2(fv, h, 1)
    fxy = _d1(fx, h, 1)
    hess = (1.0 - n1 * n1) * fxx - 2.0 * n1 * n2 * fxy + (1.0 - n2 * n2) * fyy
    Hgeom = CURVATURE_SIGN * Hv
    out = hess - Hgeom * (n1 * fx + n2 * fy)
    if geom.heis:
        out = out + (2.0 * n3 / geom.eps) * (-n2 * fx + n1 * fy)
    return _require(out, "Laplace-Beltrami")


def jacobi_identity_residual(geom, H):
    """Delta_S nu_3 - g(grad_S H_geom, eps T) + nu_3 (Ric(nu) + |h|^2).

    Vanishes (up to discretization) when ``u`` solves the curvature equation
    with source ``H``.
    """
    Hv = H.values if isinstance(H, ScalarField) else np.broadcast_to(np.asarray(H, float), geom.u.shape)
    n1, n2, n3 = geom.normal
    lap = laplace_beltrami(n3, geom, Hv)
    Hx, Hy = _grad(np.asarray(Hv, float), geom.h)
    Hgx, Hgy = CURVATURE_SIGN * Hx, CURVATURE_SIGN * Hy
    # g(grad_S F, Z_3) = Z_3 F - nu_3 g(grad F, nu), and Z_3 F = 0
    tang = -n3 * (n1 * Hgx + n2 * Hgy)
    return _require(lap - tang + n3 * curvature_energy(geom), "Jacobi")


def _guard(geom, cells):
    if cells is None:
        cells = np.isfinite(geom.horizontal_speed)
    if np.any(geom.characteristic & cells):
        raise CharacteristicPointError("Du + X vanishes at an evaluated point")
    return cells


def second_variation_q(geom, cells=None):
    """Curvature term q of the sub-Riemannian second variation.

    Uses nu^H = -(Du+X)/|Du+X| and Td^H = 1/|Du+X|, both extended
    vertically. Raises :class:`CharacteristicPointError` when ``cells`` (or,
    by default, the whole grid) contains a characteristic point.
    """
    cells = _guard(geom, cells)
    nu1, nu2 = geom.horizontal_normal
    h = geom.h
    tr = _trace_term(nu1, nu2, h)
    td = geom.TdH
    tx, ty = _grad(td, h)
    q = tr + 4.0 * (-nu2 * tx + nu1 * ty) + 4.0 * td * td
    return _require(np.where(cells, q, np.nan), "second variation")


def q_limit_gap(u, H=None, eps=1.0, mode="heisenberg", cells=None, domain=None):
    """(Ric + |h|^2)(eps) - q, pointwise; tends to 0 as eps -> 0 off the characteristic set."""
    geom = GraphGeometry(u, eps, mode, domain=domain)
    cells = _guard(geom, cells)
    return np.where(cells, curvature_energy(geom) - second_variation_q(geom, cells), np.nan)
