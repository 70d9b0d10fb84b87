"""NumPy implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` mirrors them loop by loop.
Both operate on full cell-centred arrays of shape ``(nx, ny)`` with cell
``(i, j)`` centred at ``(x0 + (i + 1/2) h, y0 + (j + 1/2) h)``.
"""

import numpy as np


def _flux(n1, n2, t1, t2, eps2):
    w1 = np.sqrt(eps2 + n1 * n1 + t1 * t1)
    w2 = np.sqrt(eps2 + n2 * n2 + t2 * t2)
    s = w1 + w2
    num = n1 + n2
    phi = num / s
    dphi_dn = 2.0 / s - num / (s * s) * (n1 / w1 + n2 / w2)
    dphi_dt = -num / (s * s) * (t1 / w1 + t2 / w2)
    return phi, dphi_dn, dphi_dt


def face_fluxes(u, eps, sigma, h, x0, y0):
    """Face-averaged normal fluxes of (Du + sigma X) / sqrt(eps^2 + |Du + sigma X|^2).

    Du is frozen on each face (normal difference plus the four-cell tangential
    average); the X part is integrated exactly along the face, which gives the
    closed form ``(n1 + n2) / (W1 + W2)`` in terms of the normal component and
    the area density at the two face endpoints.

    Returns ``(phix, dphix_dn, dphix_dt, phiy, dphiy_dn, dphiy_dt)``; ``phix``
    has shape ``(nx - 1, ny)`` (face between cells ``(i, j)`` and ``(i+1, j)``),
    ``phiy`` has shape ``(nx, ny - 1)``. Tangential differences on the outermost
    grid rows are set to zero; those faces never touch an interior cell.
    """
    u = np.asarray(u, dtype=float)
    nx, ny = u.shape
    eps2 = eps * eps

    # x-faces
    dn = (u[1:, :] - u[:-1, :]) / h
    dt = np.zeros_like(dn)
    dt[:, 1:-1] = (u[:-1, 2:] + u[1:, 2:] - u[:-1, :-2] - u[1:, :-2]) / (4.0 * h)
    xf = x0 + h * np.arange(1, nx)[:, None]
    ylo = y0 + h * np.arange(ny)[None, :]
    yhi = ylo + h
    n1 = dn - sigma * ylo
    n2 = dn - sigma * yhi
    t = dt + sigma * xf
    phix, dxn, dxt = _flux(n1, n2, t, t, eps2)

    # y-faces
    dn = (u[:, 1:] - u[:, :-1]) / h
    dt = np.zeros_like(dn)
    dt[1:-1, :] = (u[2:, :-1] + u[2:, 1:] - u[:-2, :-1] - u[:-2, 1:]) / (4.0 * h)
    yf = y0 + h * np.arange(1, ny)[None, :]
    xlo = x0 + h * np.arange(nx)[:, None]
    xhi = xlo + h
    n1 = dn + sigma * xlo
    n2 = dn + sigma * xhi
    t = dt - sigma * yf
    phiy, dyn, dyt = _flux(n1, n2, t, t, eps2)
    return phix, dxn, dxt, phiy, dyn, dyt


def flux_divergence(phix, phiy, h):
    """Cell divergence of face fluxes; NaN on the outermost ring of cells."""
    nx = phix.shape[0] + 1
    ny = phiy.shape[1] + 1
    out = np.full((nx, ny), np.nan)
    out[1:-1, 1:-1] = (
        phix[1:, 1:-1] - phix[:-1, 1:-1] + phiy[1:-1, 1:] - phiy[1:-1, :-1]
    ) / h
    return out


def pd_iterate(v, vbar, gx, gy, g3, inside, vmask, bmask, xvx, xvy, src, phi,
               thresh, eps, tau, s, theta, h, niter):
    """Run ``niter`` primal-dual steps in place.

    Dual update: project ``g + s (D vbar + X, eps)`` onto the unit ball of
    R^3 at every active vertex. Primal update: explicit step on the linear
    source term, then soft shrinkage toward ``phi`` with threshold ``thresh``
    on boundary cells. ``thresh`` already carries the factor ``tau``.
    """
    inv2h = 0.5 / h
    vm = vmask
    for _ in range(niter):
        a = vbar[:-1, :-1]
        b = vbar[1:, :-1]
        c = vbar[:-1, 1:]
        d = vbar[1:, 1:]
        dx = (b + d - a - c) * inv2h
        dy = (c + d - a - b) * inv2h
        yx = gx + s * (dx + xvx)
        yy = gy + s * (dy + xvy)
        y3 = g3 + s * eps
        nrm = np.sqrt(yx * yx + yy * yy + y3 * y3)
        scale = np.where(nrm > 1.0, 1.0 / np.maximum(nrm, 1.0), 1.0)
        gx[...] = np.where(vm, yx * scale, 0.0)
        gy[...] = np.where(vm, yy * scale, 0.0)
        g3[...] = np.where(vm, y3 * scale, 0.0)

        ktg = np.zeros_like(v)
        ktg[:-1, :-1] += (-gx - gy) * inv2h
        ktg[1:, :-1] += (gx - gy) * inv2h
        ktg[:-1, 1:] += (-gx + gy) * inv2h
        ktg[1:, 1:] += (gx + gy) * inv2h

        w = v - tau * (ktg + src)
        r = w - phi
        shr = np.sign(r) * np.maximum(np.abs(r) - thresh, 0.0) + phi
        vnew = np.where(bmask, shr, w)
        vnew = np.where(inside, vnew, v)
        vbar[...] = vnew + theta * (vnew - v)
        v[...] = vnew
