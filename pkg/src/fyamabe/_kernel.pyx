# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince 5(4) kernel.

Mirrors ``_pykernel.integrate_kernel`` operation for operation.  The stepping
loop runs without the GIL so independent integrations can share threads.
"""
from libc.math cimport sqrt, pow, fabs, isfinite
from libc.stdlib cimport malloc, realloc, free

import numpy as np

DEF HORIZON = 0
DEF BLOWUP = 1
DEF UNDERFLOW = 2
DEF DOMAIN = 3
DEF NONFINITE = 4
DEF MAXSTEPS = 5

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784, A76 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200
cdef double E6 = 22.0 / 525, E7 = -1.0 / 40

cdef double SAFE = 0.9
cdef double FACMIN = 0.1
cdef double FACMAX = 5.0
cdef double BETA = 0.04
cdef double EXPO1 = 0.2 - 0.04 * 0.75


cdef struct Model:
    int eq
    double n
    int hcode
    double p0, p1
    const double *bx
    const double *bc   # row-major (4, m)
    Py_ssize_t m       # number of pieces
    double r_group


cdef inline double eval_h(const Model *md, double r) noexcept nogil:
    cdef Py_ssize_t lo, hi, mid, i
    cdef double d
    if md.hcode == 0:
        return 0.0
    elif md.hcode == 1:
        return md.p0
    elif md.hcode == 2:
        return md.p0 * pow(r, md.p1)
    elif md.hcode == 3:
        return -(md.p0 * r / 2.0) * ((md.p1 - 2.0) * md.p0 * r * r + md.p1 + 2.0)
    elif md.hcode == 4:
        return -(md.p0 - 1.0) / (1.0 + r)
    # tabulated: bisect_right(x, r) - 1, clipped to [0, m-1]
    lo = 0
    hi = md.m + 1
    while lo < hi:
        mid = (lo + hi) // 2
        if r < md.bx[mid]:
            hi = mid
        else:
            lo = mid + 1
    i = lo - 1
    if i < 0:
        i = 0
    if i > md.m - 1:
        i = md.m - 1
    d = r - md.bx[i]
    return ((md.bc[i] * d + md.bc[md.m + i]) * d + md.bc[2 * md.m + i]) * d + md.bc[3 * md.m + i]


cdef inline double accel(const Model *md, double r, double u, double p) noexcept nogil:
    cdef double hv = eval_h(md, r)
    cdef double n = md.n
    cdef double q, pp
    if md.eq == 0:
        if r < md.r_group:
            return (-(n - 1.0) * (p - u / r) / r + (n - 2.0) * u * u * u
                    + 2.0 * (n - 1.0) * u * u / r - (n - 4.0) * u * p
                    + (p + u / r) * hv)
        q = hv - (n - 1.0) / r + (4.0 - n) * u
        pp = ((n - 2.0) * u * u + 2.0 * (n - 1.0) * u / r + (n - 1.0) / (r * r) + hv / r) * u
        return q * p + pp
    return (-((n - 3.0) / r + (n - 4.0) * u / r - hv) * p
            + (n - 2.0) / (r * r) * (u * (u + 1.0) * (u + 2.0)))


cdef inline double dmax(double a, double b) noexcept nogil:
    return b if a < b else a


cdef inline double dmin(double a, double b) noexcept nogil:
    return b if b < a else a


cdef struct Buffer:
    double *r
    double *u
    double *p
    double *a
    Py_ssize_t size
    Py_ssize_t cap


cdef int buf_push(Buffer *b, double r, double u, double p, double a) noexcept nogil:
    cdef Py_ssize_t newcap
    cdef double *t
    if b.size == b.cap:
        newcap = 2 * b.cap
        t = <double *> realloc(b.r, newcap * sizeof(double))
        if t == NULL:
            return -1
        b.r = t
        t = <double *> realloc(b.u, newcap * sizeof(double))
        if t == NULL:
            return -1
        b.u = t
        t = <double *> realloc(b.p, newcap * sizeof(double))
        if t == NULL:
            return -1
        b.p = t
        t = <double *> realloc(b.a, newcap * sizeof(double))
        if t == NULL:
            return -1
        b.a = t
        b.cap = newcap
    b.r[b.size] = r
    b.u[b.size] = u
    b.p[b.size] = p
    b.a[b.size] = a
    b.size += 1
    return 0


def integrate_kernel(int eq, double n, int hcode, double[::1] hpar, double[::1] breaks,
                     double[:, ::1] coeffs, double r0, double y0, double yp0, double r_end,
                     double r_domain_end, double rtol, double atol, double r_group,
                     double blowup_value, double blowup_step, double h_init,
                     long max_steps):
    """See ``fyamabe._pykernel.integrate_kernel``."""
    cdef Model md
    md.eq = eq
    md.n = n
    md.hcode = hcode
    md.p0 = hpar[0]
    md.p1 = hpar[1]
    md.bx = &breaks[0]
    md.bc = &coeffs[0, 0]
    md.m = breaks.shape[0] - 1
    md.r_group = r_group

    cdef Buffer buf
    buf.cap = 1024
    buf.size = 0
    buf.r = <double *> malloc(buf.cap * sizeof(double))
    buf.u = <double *> malloc(buf.cap * sizeof(double))
    buf.p = <double *> malloc(buf.cap * sizeof(double))
    buf.a = <double *> malloc(buf.cap * sizeof(double))
    if buf.r == NULL or buf.u == NULL or buf.p == NULL or buf.a == NULL:
        free(buf.r); free(buf.u); free(buf.p); free(buf.a)
        raise MemoryError()

    cdef double r_stop = dmin(r_end, r_domain_end)
    cdef double r = r0, u = y0, p = yp0
    cdef double a1
    cdef double hstep = h_init, facold = 1e-4, h, rn, last_h = 0.0
    cdef bint reject = False, last
    cdef int status = HORIZON, oom = 0
    cdef double r_status = r
    cdef long nacc = 0, nrej = 0
    cdef double eps = 2.220446049250313e-16
    cdef double k1u, k1p, k2u, k2p, k3u, k3p, k4u, k4p, k5u, k5p, k6u, k6p, k7u, k7p
    cdef double u2, p2, u3, p3, u4, p4, u5, p5, u6, p6, un, pn
    cdef double eu, ep, sku, skp, err, fac11, fac, hnew

    with nogil:
        a1 = accel(&md, r, u, p)
        buf_push(&buf, r, u, p, a1)
        while True:
            if r >= r_stop:
                status = HORIZON if r_stop >= r_end else DOMAIN
                r_status = r
                break
            if nacc + nrej >= max_steps:
                status = MAXSTEPS
                r_status = r
                break
            if hstep < 4.0 * eps * fabs(r):
                status = BLOWUP if fabs(u) > blowup_value else UNDERFLOW
                r_status = r
                break
            last = False
            if r + hstep >= r_stop:
                hstep = r_stop - r
                last = True

            h = hstep
            k1u = p
            k1p = a1
            u2 = u + h * (A21 * k1u)
            p2 = p + h * (A21 * k1p)
            k2u = p2
            k2p = accel(&md, r + C2 * h, u2, p2)
            u3 = u + h * (A31 * k1u + A32 * k2u)
            p3 = p + h * (A31 * k1p + A32 * k2p)
            k3u = p3
            k3p = accel(&md, r + C3 * h, u3, p3)
            u4 = u + h * (A41 * k1u + A42 * k2u + A43 * k3u)
            p4 = p + h * (A41 * k1p + A42 * k2p + A43 * k3p)
            k4u = p4
            k4p = accel(&md, r + C4 * h, u4, p4)
            u5 = u + h * (A51 * k1u + A52 * k2u + A53 * k3u + A54 * k4u)
            p5 = p + h * (A51 * k1p + A52 * k2p + A53 * k3p + A54 * k4p)
            k5u = p5
            k5p = accel(&md, r + C5 * h, u5, p5)
            u6 = u + h * (A61 * k1u + A62 * k2u + A63 * k3u + A64 * k4u + A65 * k5u)
            p6 = p + h * (A61 * k1p + A62 * k2p + A63 * k3p + A64 * k4p + A65 * k5p)
            rn = r_stop if last else r + h
            k6u = p6
            k6p = accel(&md, r + h, u6, p6)
            un = u + h * (A71 * k1u + A73 * k3u + A74 * k4u + A75 * k5u + A76 * k6u)
            pn = p + h * (A71 * k1p + A73 * k3p + A74 * k4p + A75 * k5p + A76 * k6p)
            k7u = pn
            k7p = accel(&md, rn, un, pn)

            eu = h * (E1 * k1u + E3 * k3u + E4 * k4u + E5 * k5u + E6 * k6u + E7 * k7u)
            ep = h * (E1 * k1p + E3 * k3p + E4 * k4p + E5 * k5p + E6 * k6p + E7 * k7p)
            sku = atol + rtol * dmax(fabs(u), fabs(un))
            skp = atol + rtol * dmax(fabs(p), fabs(pn))
            err = sqrt(0.5 * ((eu / sku) * (eu / sku) + (ep / skp) * (ep / skp)))
            if not isfinite(err):
                nrej += 1
                reject = True
                hstep = 0.2 * h
                continue

            fac11 = pow(err, EXPO1)
            fac = fac11 / pow(facold, BETA)
            fac = dmax(FACMIN, dmin(FACMAX, fac / SAFE))
            hnew = h / fac

            if err <= 1.0:
                facold = dmax(err, 1e-4)
                nacc += 1
                if not (isfinite(un) and isfinite(pn) and isfinite(k7p)):
                    status = NONFINITE
                    r_status = rn
                    break
                r = rn
                u = un
                p = pn
                a1 = k7p
                last_h = h
                if buf_push(&buf, r, u, p, a1) != 0:
                    oom = 1
                    break
                if fabs(u) > blowup_value and h < blowup_step * fabs(r):
                    status = BLOWUP
                    r_status = r
                    break
                if reject:
                    hnew = dmin(hnew, h)
                reject = False
                hstep = hnew
            else:
                nrej += 1
                reject = True
                hstep = h / dmin(FACMAX, fac11 / SAFE)

    try:
        if oom:
            raise MemoryError()
        out_r = np.empty(buf.size)
        out_u = np.empty(buf.size)
        out_p = np.empty(buf.size)
        out_a = np.empty(buf.size)
        _copy(out_r, buf.r, buf.size)
        _copy(out_u, buf.u, buf.size)
        _copy(out_p, buf.p, buf.size)
        _copy(out_a, buf.a, buf.size)
    finally:
        free(buf.r); free(buf.u); free(buf.p); free(buf.a)
    return out_r, out_u, out_p, out_a, status, r_status, last_h, nacc, nrej


cdef void _copy(double[::1] dst, const double *src, Py_ssize_t size):
    cdef Py_ssize_t i
    for i in range(size):
        dst[i] = src[i]
