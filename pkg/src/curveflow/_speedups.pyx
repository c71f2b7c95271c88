# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled residual kernels for the per-step nonlinear systems.

These mirror the arithmetic of curveflow.schemes (same formulas, same
degeneracy floors) with fused C loops and no temporaries, plus batched
evaluation for finite-difference Jacobian columns. Selected at import by
curveflow.kernels; correctness parity with the pure-numpy path is enforced
by tests/test_kernels.py.
"""

from libc.math cimport sqrt

import numpy as np

from .errors import DegenerateEdge, DegenerateStencil, SingularGram

DEGENERACY_FLOOR = 1e-14
GRAM_FLOOR = 1e-12


cdef class SchemeKernel:
    """Residual evaluator for one time step of one flow.

    Holds the frozen old-curve geometry and preallocated work buffers, so a
    single instance serves every Newton iteration of the step.
    """

    cdef public int n
    cdef public bint helfrich
    cdef double c0, dt
    # frozen data
    cdef double[:, ::1] xo
    cdef double[::1] w
    cdef double[:, ::1] T
    # old-curve geometry (computed once)
    cdef double[::1] o_r, o_tx, o_ty, o_d1x, o_d1y, o_d2x, o_d2y, o_g, o_k, o_det, o_C, o_rhat
    # new-curve geometry and pair work buffers (overwritten per call)
    cdef double[::1] n_r, n_tx, n_ty, n_d1x, n_d1y, n_d2x, n_d2y, n_g, n_k, n_det, n_C, n_rhat
    cdef double[::1] wt, E, Px, Py, EHx, EHy, EIx, EIy, ELx, ELy
    cdef double[::1] dBx, dBy, dLx, dLy, dAx, dAy, PLx, PLy
    cdef double[:, ::1] xn

    def __init__(self, xo, w, T, double c0, double dt, bint helfrich):
        # copies: inputs may be read-only views (PolygonalCurve freezes them)
        self.xo = np.array(xo, dtype=np.float64, order="C")
        self.w = np.array(w, dtype=np.float64, order="C")
        self.T = np.array(T, dtype=np.float64, order="C")
        self.n = self.xo.shape[0]
        self.c0 = c0
        self.dt = dt
        self.helfrich = helfrich
        cdef int n = self.n
        scratch = np.empty((42, n), dtype=np.float64)
        self.o_r = scratch[0]; self.o_tx = scratch[1]; self.o_ty = scratch[2]
        self.o_d1x = scratch[3]; self.o_d1y = scratch[4]
        self.o_d2x = scratch[5]; self.o_d2y = scratch[6]
        self.o_g = scratch[7]; self.o_k = scratch[8]; self.o_det = scratch[9]
        self.o_C = scratch[10]; self.o_rhat = scratch[11]
        self.n_r = scratch[12]; self.n_tx = scratch[13]; self.n_ty = scratch[14]
        self.n_d1x = scratch[15]; self.n_d1y = scratch[16]
        self.n_d2x = scratch[17]; self.n_d2y = scratch[18]
        self.n_g = scratch[19]; self.n_k = scratch[20]; self.n_det = scratch[21]
        self.n_C = scratch[22]; self.n_rhat = scratch[23]
        self.wt = scratch[24]; self.E = scratch[25]
        self.Px = scratch[26]; self.Py = scratch[27]
        self.EHx = scratch[28]; self.EHy = scratch[29]
        self.EIx = scratch[30]; self.EIy = scratch[31]
        self.ELx = scratch[32]; self.ELy = scratch[33]
        self.dBx = scratch[34]; self.dBy = scratch[35]
        self.dLx = scratch[36]; self.dLy = scratch[37]
        self.dAx = scratch[38]; self.dAy = scratch[39]
        self.PLx = scratch[40]; self.PLy = scratch[41]
        self.xn = np.empty((n, 2), dtype=np.float64)
        self._curve_geometry(
            self.xo, self.o_r, self.o_tx, self.o_ty, self.o_d1x, self.o_d1y,
            self.o_d2x, self.o_d2y, self.o_g, self.o_k, self.o_det, self.o_C,
            self.o_rhat,
        )

    @property
    def dimension(self):
        return 2 * self.n + (3 if self.helfrich else 1)

    cdef int _curve_geometry(
        self, double[:, ::1] x,
        double[::1] r, double[::1] tx, double[::1] ty,
        double[::1] d1x, double[::1] d1y, double[::1] d2x, double[::1] d2y,
        double[::1] g, double[::1] k, double[::1] det, double[::1] C,
        double[::1] rhat,
    ) except -1:
        cdef int n = self.n
        cdef int i, im, ip
        cdef double inv_du = <double> n
        cdef double inv_du2 = inv_du * inv_du
        cdef double dx, dy, xmin, xmax, ymin, ymax, floor_len, g3
        cdef double c0 = self.c0, dev, devm

        xmin = xmax = x[0, 0]
        ymin = ymax = x[0, 1]
        for i in range(1, n):
            if x[i, 0] < xmin: xmin = x[i, 0]
            if x[i, 0] > xmax: xmax = x[i, 0]
            if x[i, 1] < ymin: ymin = x[i, 1]
            if x[i, 1] > ymax: ymax = x[i, 1]
        floor_len = DEGENERACY_FLOOR * sqrt(
            (xmax - xmin) * (xmax - xmin) + (ymax - ymin) * (ymax - ymin)
        )

        for i in range(n):
            im = i - 1 if i > 0 else n - 1
            ip = i + 1 if i < n - 1 else 0
            dx = x[i, 0] - x[im, 0]
            dy = x[i, 1] - x[im, 1]
            r[i] = sqrt(dx * dx + dy * dy)
            if r[i] <= floor_len:
                raise DegenerateEdge(f"edge {i} has length {r[i]:.3e}")
            tx[i] = dx / r[i]
            ty[i] = dy / r[i]
            dx = x[ip, 0] - x[im, 0]
            dy = x[ip, 1] - x[im, 1]
            if sqrt(dx * dx + dy * dy) <= floor_len:
                raise DegenerateStencil(f"X_{{i+1}} ~ X_{{i-1}} at vertex {i}")
            d1x[i] = dx * 0.5 * inv_du
            d1y[i] = dy * 0.5 * inv_du
            d2x[i] = (x[ip, 0] - 2.0 * x[i, 0] + x[im, 0]) * inv_du2
            d2y[i] = (x[ip, 1] - 2.0 * x[i, 1] + x[im, 1]) * inv_du2
            g[i] = sqrt(d1x[i] * d1x[i] + d1y[i] * d1y[i])
            det[i] = d1x[i] * d2y[i] - d1y[i] * d2x[i]
            g3 = g[i] * g[i] * g[i]
            k[i] = det[i] / g3
        for i in range(n):
            im = i - 1 if i > 0 else n - 1
            ip = i + 1 if i < n - 1 else 0
            dev = k[i] - c0
            devm = k[im] - c0
            C[i] = (dev * dev + devm * devm) * 0.25
            rhat[i] = (r[i] + r[ip]) * 0.5
        return 0

    cdef int _pair_assembly(self) except -1:
        """Fill wt, dB (and dL, dA for Helfrich) from old + new geometry."""
        cdef int n = self.n
        cdef int i, im, ip
        cdef double inv_du = <double> n
        cdef double inv_du2 = inv_du * inv_du
        cdef double g3n, g3o, w3, g2, denom
        cdef double hx, hy, ix_, iy_, lx, ly
        cdef double c0 = self.c0

        for i in range(n):
            self.wt[i] = (self.n_rhat[i] + self.o_rhat[i]) * 0.5

        # Edge part P_i and the curvature-part coefficients.
        for i in range(n):
            ip = i + 1 if i < n - 1 else 0
            denom = self.n_r[i] + self.o_r[i]
            self.Px[i] = ((self.n_C[i] + self.o_C[i]) * 0.5) * (
                self.n_r[i] * self.n_tx[i] + self.o_r[i] * self.o_tx[i]
            ) / denom
            self.Py[i] = ((self.n_C[i] + self.o_C[i]) * 0.5) * (
                self.n_r[i] * self.n_ty[i] + self.o_r[i] * self.o_ty[i]
            ) / denom
            self.E[i] = (
                (self.n_r[i] + self.o_r[i]) / 8.0
                + (self.n_r[ip] + self.o_r[ip]) / 8.0
            ) * (self.n_k[i] + self.o_k[i] - 2.0 * c0)
            g3n = self.n_g[i] * self.n_g[i] * self.n_g[i]
            g3o = self.o_g[i] * self.o_g[i] * self.o_g[i]
            w3 = 0.5 * (1.0 / g3n + 1.0 / g3o)
            hx = w3 * (self.n_d2y[i] + self.o_d2y[i]) * 0.5
            hy = -w3 * (self.n_d2x[i] + self.o_d2x[i]) * 0.5
            ix_ = -w3 * (self.n_d1y[i] + self.o_d1y[i]) * 0.5
            iy_ = w3 * (self.n_d1x[i] + self.o_d1x[i]) * 0.5
            g2 = (
                -(self.n_g[i] * self.n_g[i]
                  + self.n_g[i] * self.o_g[i]
                  + self.o_g[i] * self.o_g[i])
                / (2.0 * g3n * g3o)
                * (self.n_det[i] + self.o_det[i])
            )
            lx = g2 / (self.n_g[i] + self.o_g[i]) * (self.n_d1x[i] + self.o_d1x[i])
            ly = g2 / (self.n_g[i] + self.o_g[i]) * (self.n_d1y[i] + self.o_d1y[i])
            self.EHx[i] = self.E[i] * hx
            self.EHy[i] = self.E[i] * hy
            self.EIx[i] = self.E[i] * ix_
            self.EIy[i] = self.E[i] * iy_
            self.ELx[i] = self.E[i] * lx
            self.ELy[i] = self.E[i] * ly

        # dB_i = (P_i - P_{i+1} - d1(EH) + d2(EI) - d1(EL)) / wt_i
        for i in range(n):
            im = i - 1 if i > 0 else n - 1
            ip = i + 1 if i < n - 1 else 0
            self.dBx[i] = (
                self.Px[i] - self.Px[ip]
                - (self.EHx[ip] - self.EHx[im]) * 0.5 * inv_du
                + (self.EIx[ip] - 2.0 * self.EIx[i] + self.EIx[im]) * inv_du2
                - (self.ELx[ip] - self.ELx[im]) * 0.5 * inv_du
            ) / self.wt[i]
            self.dBy[i] = (
                self.Py[i] - self.Py[ip]
                - (self.EHy[ip] - self.EHy[im]) * 0.5 * inv_du
                + (self.EIy[ip] - 2.0 * self.EIy[i] + self.EIy[im]) * inv_du2
                - (self.ELy[ip] - self.ELy[im]) * 0.5 * inv_du
            ) / self.wt[i]

        if self.helfrich:
            for i in range(n):
                self.PLx[i] = (
                    self.n_r[i] * self.n_tx[i] + self.o_r[i] * self.o_tx[i]
                ) / (self.n_r[i] + self.o_r[i])
                self.PLy[i] = (
                    self.n_r[i] * self.n_ty[i] + self.o_r[i] * self.o_ty[i]
                ) / (self.n_r[i] + self.o_r[i])
            for i in range(n):
                ip = i + 1 if i < n - 1 else 0
                self.dLx[i] = (self.PLx[i] - self.PLx[ip]) / self.wt[i]
                self.dLy[i] = (self.PLy[i] - self.PLy[ip]) / self.wt[i]
        return 0

    def residual(self, double[::1] u, double[::1] out=None):
        """Evaluate the scheme residual at the flat unknown vector u."""
        if out is None:
            out = np.empty(self.dimension, dtype=np.float64)
        self._residual(u, out)
        return np.asarray(out)

    def residual_many(self, double[:, ::1] pts, double[:, ::1] out=None):
        """Evaluate the residual at each row of pts; rows map to rows."""
        cdef Py_ssize_t m = pts.shape[0], j
        if out is None:
            out = np.empty((m, self.dimension), dtype=np.float64)
        for j in range(m):
            self._residual(pts[j], out[j])
        return np.asarray(out)

    cdef int _residual(self, double[:] u, double[:] out) except -1:
        cdef int n = self.n
        cdef int i, im, ip
        cdef double dt = self.dt
        cdef double lam = 0.0, mu = 0.0, gamma
        cdef double gBB = 0.0, gBL = 0.0, gBA = 0.0
        cdef double gLL = 0.0, gLA = 0.0, gAA = 0.0
        cdef double det2, det3, drate
        cdef double rx, ry, tanx, tany, c1, c2, c3

        cdef double[:, ::1] xn = self.xn
        for i in range(n):
            xn[i, 0] = u[2 * i]
            xn[i, 1] = u[2 * i + 1]
        if self.helfrich:
            lam = u[2 * n]
            mu = u[2 * n + 1]
            gamma = u[2 * n + 2]
        else:
            gamma = u[2 * n]

        self._curve_geometry(
            xn, self.n_r, self.n_tx, self.n_ty, self.n_d1x, self.n_d1y,
            self.n_d2x, self.n_d2y, self.n_g, self.n_k, self.n_det, self.n_C,
            self.n_rhat,
        )
        self._pair_assembly()

        if self.helfrich:
            # dA on the pair, then the Gram matrix of (dB, dL, dA).
            for i in range(n):
                im = i - 1 if i > 0 else n - 1
                ip = i + 1 if i < n - 1 else 0
                self.dAx[i] = (
                    -xn[im, 1] - self.xo[im, 1] + xn[ip, 1] + self.xo[ip, 1]
                ) * 0.25 / self.wt[i]
                self.dAy[i] = (
                    xn[im, 0] + self.xo[im, 0] - xn[ip, 0] - self.xo[ip, 0]
                ) * 0.25 / self.wt[i]
            for i in range(n):
                gBB += (self.dBx[i] * self.dBx[i] + self.dBy[i] * self.dBy[i]) * self.wt[i]
                gBL += (self.dBx[i] * self.dLx[i] + self.dBy[i] * self.dLy[i]) * self.wt[i]
                gBA += (self.dBx[i] * self.dAx[i] + self.dBy[i] * self.dAy[i]) * self.wt[i]
                gLL += (self.dLx[i] * self.dLx[i] + self.dLy[i] * self.dLy[i]) * self.wt[i]
                gLA += (self.dLx[i] * self.dAx[i] + self.dLy[i] * self.dAy[i]) * self.wt[i]
                gAA += (self.dAx[i] * self.dAx[i] + self.dAy[i] * self.dAy[i]) * self.wt[i]
            det2 = gLL * gAA - gLA * gLA
            if det2 <= GRAM_FLOOR * gLL * gAA:
                raise SingularGram(
                    f"(dL, dA) Gram determinant {det2:.3e} vanishes"
                )
            det3 = (
                gBB * det2
                - gBL * (gBL * gAA - gLA * gBA)
                + gBA * (gBL * gLA - gLL * gBA)
            )
            drate = det3 / det2
            c1 = 0.0
            c2 = 0.0
            c3 = 0.0
            for i in range(n):
                tanx = self.w[i] * self.T[i, 0]
                tany = self.w[i] * self.T[i, 1]
                rx = (
                    -self.dBx[i] + lam * self.dLx[i] + mu * self.dAx[i]
                    + tanx + gamma * self.dBx[i]
                )
                ry = (
                    -self.dBy[i] + lam * self.dLy[i] + mu * self.dAy[i]
                    + tany + gamma * self.dBy[i]
                )
                out[2 * i] = (xn[i, 0] - self.xo[i, 0]) / dt - rx
                out[2 * i + 1] = (xn[i, 1] - self.xo[i, 1]) / dt - ry
                c1 += (self.dLx[i] * rx + self.dLy[i] * ry) * self.wt[i]
                c2 += (self.dAx[i] * rx + self.dAy[i] * ry) * self.wt[i]
                c3 += (self.dBx[i] * rx + self.dBy[i] * ry) * self.wt[i]
            out[2 * n] = c1
            out[2 * n + 1] = c2
            out[2 * n + 2] = c3 + drate
        else:
            c1 = 0.0
            for i in range(n):
                tanx = self.w[i] * self.T[i, 0]
                tany = self.w[i] * self.T[i, 1]
                out[2 * i] = (
                    (xn[i, 0] - self.xo[i, 0]) / dt
                    + self.dBx[i] - tanx - gamma * self.dBx[i]
                )
                out[2 * i + 1] = (
                    (xn[i, 1] - self.xo[i, 1]) / dt
                    + self.dBy[i] - tany - gamma * self.dBy[i]
                )
                c1 += (
                    self.dBx[i] * (tanx + gamma * self.dBx[i])
                    + self.dBy[i] * (tany + gamma * self.dBy[i])
                ) * self.wt[i]
            out[2 * n] = c1
        return 0
