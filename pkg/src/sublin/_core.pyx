# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled stepping kernels (the simulator's hot loops).

Mirrors ``_stepper_np`` update for update: identical operation order, and
the scalar-power fast paths match the ones numpy applies for
array**scalar. Steps are bit-identical to the reference backend when the
coefficient formula only hits those fast paths; generic exponents go
through numpy's SIMD pow, which can differ from libm pow by an ulp. The
semi-implicit heat step solves the cyclic tridiagonal system (Thomas +
rank-one corner correction) instead of the FFT; the two linear maps agree
to roundoff.
"""

import numpy as np

from libc.math cimport M_E, exp, fabs, isfinite, log, pow, sqrt

cdef enum:
    K_RATIO_POWER = 0
    K_LOG_PERTURBED = 1
    K_ITERATED_LOG = 2

RHO_RATIO_POWER = K_RATIO_POWER
RHO_LOG_PERTURBED = K_LOG_PERTURBED
RHO_ITERATED_LOG = K_ITERATED_LOG


cdef inline double _pw(double b, double e) nogil:
    # numpy's array**scalar fast paths; keep results bit-identical to it
    if e == 0.0:
        return 1.0
    if e == 1.0:
        return b
    if e == 2.0:
        return b * b
    if e == 0.5:
        return sqrt(b)
    if e == -1.0:
        return 1.0 / b
    return pow(b, e)


cdef inline double _rho(int kind, double alpha, double beta, double kappa,
                        double r, double x) nogil:
    cdef double au = fabs(x)
    cdef double lg
    if kind == K_RATIO_POWER:
        if r == 0.0:
            return _pw(au, alpha)
        return au / _pw(r + au, 1.0 - alpha)
    if au > 1e150:
        lg = 2.0 * log(au)
    else:
        lg = log(M_E + au * au)
    if kind == K_LOG_PERTURBED:
        return _pw(au, alpha) * _pw(lg, -beta)
    return au * exp(-beta * _pw(log(lg), kappa))


cdef inline double _clip_arg(double x) nogil:
    # max(x, 0) that forwards NaN (np.maximum semantics)
    if x > 0.0 or x != x:
        return x
    return 0.0


cdef class HeatStepper:
    cdef int n, kind
    cdef bint implicit, clip
    cdef double dt, half_r, alpha, beta, kappa, rpar
    cdef double c, vlast, denom
    cdef double[::1] rat, inv_den, zvec, work, bhat, yvec

    backend = "compiled"

    def __init__(self, int n, double dx, double dt, rho_params,
                 bint implicit, bint clip):
        self.n = n
        self.dt = dt
        self.implicit = implicit
        self.clip = clip
        self.half_r = dt / (2.0 * dx * dx)
        self.kind, self.alpha, self.beta, self.kappa, self.rpar = rho_params
        self.work = np.empty(n)
        if implicit:
            self._factor_cyclic()
            self.bhat = np.empty(n)
            self.yvec = np.empty(n)

    def _factor_cyclic(self):
        # A = I - (dt/2) Lap_h is circulant tridiagonal with diagonal 1+2c,
        # off-diagonals -c; split A = T + outer(uvec, vvec) with
        # gamma = -(1+2c) and factor T once.
        cdef int n = self.n
        c = self.half_r
        self.c = c
        diag0 = 1.0 + 2.0 * c
        gamma = -diag0
        d = np.full(n, diag0)
        d[0] = 2.0 * diag0
        d[n - 1] = diag0 + c * c / diag0
        den = np.empty(n)
        den[0] = d[0]
        for i in range(1, n):
            den[i] = d[i] - c * c / den[i - 1]
        uvec = np.zeros(n)
        uvec[0] = gamma
        uvec[n - 1] = -c
        zb = np.empty(n)
        zb[0] = uvec[0]
        for i in range(1, n):
            zb[i] = uvec[i] + (c / den[i - 1]) * zb[i - 1]
        z = np.empty(n)
        z[n - 1] = zb[n - 1] / den[n - 1]
        for i in range(n - 2, -1, -1):
            z[i] = (zb[i] + c * z[i + 1]) / den[i]
        self.vlast = c / diag0
        self.denom = 1.0 + z[0] + self.vlast * z[n - 1]
        self.rat = c / den
        self.inv_den = 1.0 / den
        self.zvec = z

    cdef void _solve_cyclic(self, double[::1] b, double[::1] x) nogil:
        cdef int n = self.n
        cdef int j
        cdef double fac
        self.bhat[0] = b[0]
        for j in range(1, n):
            self.bhat[j] = b[j] + self.rat[j - 1] * self.bhat[j - 1]
        self.yvec[n - 1] = self.bhat[n - 1] * self.inv_den[n - 1]
        for j in range(n - 2, -1, -1):
            self.yvec[j] = (self.bhat[j] + self.c * self.yvec[j + 1]) * self.inv_den[j]
        fac = (self.yvec[0] + self.vlast * self.yvec[n - 1]) / self.denom
        for j in range(n):
            x[j] = self.yvec[j] - fac * self.zvec[j]

    def run_block(self, double[::1] u, double[:, ::1] dw):
        cdef int m, j, bad
        cdef int n = self.n
        cdef int steps = dw.shape[0]
        cdef int ret = -1
        cdef double arg, x
        cdef double[::1] work = self.work
        with nogil:
            for m in range(steps):
                if self.implicit:
                    self._solve_cyclic(u, work)
                    for j in range(n):
                        arg = _clip_arg(u[j]) if self.clip else u[j]
                        work[j] = work[j] + _rho(self.kind, self.alpha, self.beta,
                                                 self.kappa, self.rpar, arg) * dw[m, j]
                else:
                    for j in range(n):
                        arg = _clip_arg(u[j]) if self.clip else u[j]
                        x = u[j] + self.half_r * (
                            (u[(j - 1 + n) % n] + u[(j + 1) % n]) - 2.0 * u[j]
                        )
                        work[j] = x + _rho(self.kind, self.alpha, self.beta,
                                           self.kappa, self.rpar, arg) * dw[m, j]
                bad = 0
                for j in range(n):
                    if self.clip:
                        work[j] = _clip_arg(work[j])
                    if not isfinite(work[j]):
                        bad = 1
                if bad:
                    ret = m
                    break
                for j in range(n):
                    u[j] = work[j]
        return ret


cdef class WaveStepper:
    cdef int n, kind
    cdef bint clip
    cdef double dt, cw, alpha, beta, kappa, rpar
    cdef double[::1] wu, wv

    backend = "compiled"

    def __init__(self, int n, double dx, double dt, rho_params, bint clip):
        self.n = n
        self.dt = dt
        self.clip = clip
        self.cw = dt / (dx * dx)
        self.kind, self.alpha, self.beta, self.kappa, self.rpar = rho_params
        self.wu = np.empty(n)
        self.wv = np.empty(n)

    def run_block(self, double[::1] u, double[::1] v, double[:, ::1] dw):
        cdef int m, j, bad
        cdef int n = self.n
        cdef int steps = dw.shape[0]
        cdef int ret = -1
        cdef double arg, vn
        cdef double[::1] wu = self.wu
        cdef double[::1] wv = self.wv
        with nogil:
            for m in range(steps):
                for j in range(n):
                    arg = _clip_arg(u[j]) if self.clip else u[j]
                    vn = (v[j] + self.cw * (
                        (u[(j - 1 + n) % n] + u[(j + 1) % n]) - 2.0 * u[j]
                    )) + _rho(self.kind, self.alpha, self.beta,
                              self.kappa, self.rpar, arg) * dw[m, j]
                    wv[j] = vn
                    wu[j] = u[j] + self.dt * vn
                bad = 0
                for j in range(n):
                    if not (isfinite(wu[j]) and isfinite(wv[j])):
                        bad = 1
                if bad:
                    ret = m
                    break
                for j in range(n):
                    u[j] = wu[j]
                    v[j] = wv[j]
        return ret
