# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_kernels_py``.

Loop bodies follow the NumPy reference term by term so results agree to
rounding; no fast-math.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


cdef inline void _flux(double n1, double n2, double t1, double t2, double eps2,
                       double* phi, double* dn, double* dt) noexcept nogil:
    cdef double w1 = sqrt(eps2 + n1 * n1 + t1 * t1)
    cdef double w2 = sqrt(eps2 + n2 * n2 + t2 * t2)
    cdef double s = w1 + w2
    cdef double num = n1 + n2
    phi[0] = num / s
    dn[0] = 2.0 / s - num / (s * s) * (n1 / w1 + n2 / w2)
    dt[0] = -num / (s * s) * (t1 / w1 + t2 / w2)


def face_fluxes(u, double eps, double sigma, double h, double x0, double y0):
    cdef double[:, ::1] U = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t nx = U.shape[0], ny = U.shape[1], i, j
    cdef double eps2 = eps * eps
    cdef double dn, dt, xf, yf, ylo, yhi, xlo, xhi

    phix_a = np.empty((nx - 1, ny))
    dxn_a = np.empty((nx - 1, ny))
    dxt_a = np.empty((nx - 1, ny))
    phiy_a = np.empty((nx, ny - 1))
    dyn_a = np.empty((nx, ny - 1))
    dyt_a = np.empty((nx, ny - 1))
    cdef double[:, ::1] phix = phix_a, dxn = dxn_a, dxt = dxt_a
    cdef double[:, ::1] phiy = phiy_a, dyn = dyn_a, dyt = dyt_a

    with nogil:
        for i in range(nx - 1):
            xf = x0 + h * (i + 1)
            for j in range(ny):
                dn = (U[i + 1, j] - U[i, j]) / h
                if 0 < j < ny - 1:
                    dt = (U[i, j + 1] + U[i + 1, j + 1] - U[i, j - 1] - U[i + 1, j - 1]) / (4.0 * h)
                else:
                    dt = 0.0
                ylo = y0 + h * j
                yhi = ylo + h
                _flux(dn - sigma * ylo, dn - sigma * yhi,
                      dt + sigma * xf, dt + sigma * xf, eps2,
                      &phix[i, j], &dxn[i, j], &dxt[i, j])
        for i in range(nx):
            xlo = x0 + h * i
            xhi = xlo + h
            for j in range(ny - 1):
                yf = y0 + h * (j + 1)
                dn = (U[i, j + 1] - U[i, j]) / h
                if 0 < i < nx - 1:
                    dt = (U[i + 1, j] + U[i + 1, j + 1] - U[i - 1, j] - U[i - 1, j + 1]) / (4.0 * h)
                else:
                    dt = 0.0
                _flux(dn + sigma * xlo, dn + sigma * xhi,
                      dt - sigma * yf, dt - sigma * yf, eps2,
                      &phiy[i, j], &dyn[i, j], &dyt[i, j])
    return phix_a, dxn_a, dxt_a, phiy_a, dyn_a, dyt_a


def flux_divergence(phix, phiy, double h):
    cdef double[:, ::1] PX = np.ascontiguousarray(phix, dtype=np.float64)
    cdef double[:, ::1] PY = np.ascontiguousarray(phiy, dtype=np.float64)
    cdef Py_ssize_t nx = PX.shape[0] + 1, ny = PY.shape[1] + 1, i, j
    out_a = np.full((nx, ny), np.nan)
    cdef double[:, ::1] out = out_a
    with nogil:
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                out[i, j] = (PX[i, j] - PX[i - 1, j] + PY[i, j] - PY[i, j - 1]) / h
    return out_a


def pd_iterate(double[:, ::1] v, double[:, ::1] vbar,
               double[:, ::1] gx, double[:, ::1] gy, double[:, ::1] g3,
               cnp.uint8_t[:, ::1] inside, cnp.uint8_t[:, ::1] vmask,
               cnp.uint8_t[:, ::1] bmask,
               double[:, ::1] xvx, double[:, ::1] xvy,
               double[:, ::1] src, double[:, ::1] phi, double[:, ::1] thresh,
               double eps, double tau, double s, double theta, double h,
               int niter):
    cdef Py_ssize_t nx = v.shape[0], ny = v.shape[1], i, j
    cdef int it
    cdef double inv2h = 0.5 / h
    cdef double a, b, c, d, dx, dy, yx, yy, y3, nrm, scale, w, r, vnew, mag
    ktg_a = np.zeros((nx, ny))
    cdef double[:, ::1] ktg = ktg_a

    with nogil:
        for it in range(niter):
            for i in range(nx - 1):
                for j in range(ny - 1):
                    if vmask[i, j]:
                        a = vbar[i, j]
                        b = vbar[i + 1, j]
                        c = vbar[i, j + 1]
                        d = vbar[i + 1, j + 1]
                        dx = (b + d - a - c) * inv2h
                        dy = (c + d - a - b) * inv2h
                        yx = gx[i, j] + s * (dx + xvx[i, j])
                        yy = gy[i, j] + s * (dy + xvy[i, j])
                        y3 = g3[i, j] + s * eps
                        nrm = sqrt(yx * yx + yy * yy + y3 * y3)
                        if nrm > 1.0:
                            scale = 1.0 / nrm
                        else:
                            scale = 1.0
                        gx[i, j] = yx * scale
                        gy[i, j] = yy * scale
                        g3[i, j] = y3 * scale
                    else:
                        gx[i, j] = 0.0
                        gy[i, j] = 0.0
                        g3[i, j] = 0.0
            for i in range(nx):
                for j in range(ny):
                    ktg[i, j] = 0.0
            # same accumulation order as the NumPy reference
            for i in range(nx - 1):
                for j in range(ny - 1):
                    ktg[i, j] += (-gx[i, j] - gy[i, j]) * inv2h
            for i in range(nx - 1):
                for j in range(ny - 1):
                    ktg[i + 1, j] += (gx[i, j] - gy[i, j]) * inv2h
            for i in range(nx - 1):
                for j in range(ny - 1):
                    ktg[i, j + 1] += (-gx[i, j] + gy[i, j]) * inv2h
            for i in range(nx - 1):
                for j in range(ny - 1):
                    ktg[i + 1, j + 1] += (gx[i, j] + gy[i, j]) * inv2h
            for i in range(nx):
                for j in range(ny):
                    if not inside[i, j]:
                        vbar[i, j] = v[i, j] + theta * 0.0
                        continue
                    w = v[i, j] - tau * (ktg[i, j] + src[i, j])
                    if bmask[i, j]:
                        r = w - phi[i, j]
                        mag = fabs(r) - thresh[i, j]
                        if mag > 0.0:
                            if r > 0.0:
                                vnew = mag + phi[i, j]
                            else:
                                vnew = -mag + phi[i, j]
                        else:
                            vnew = 0.0 + phi[i, j]
                    else:
                        vnew = w
                    vbar[i, j] = vnew + theta * (vnew - v[i, j])
                    v[i, j] = vnew
