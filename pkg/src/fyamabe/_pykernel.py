"""Pure-Python Dormand-Prince 5(4) kernel.

Reference implementation of the compiled kernel in ``_kernel.pyx``; the two
perform the same floating-point operations in the same order.
"""
import math
from bisect import bisect_right

import numpy as np

HORIZON, BLOWUP, UNDERFLOW, DOMAIN, NONFINITE, MAXSTEPS = range(6)

# Dormand-Prince tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)

# step-size controller
SAFE = 0.9
FACMIN = 0.1  # 1 / largest growth factor (10)
FACMAX = 5.0  # 1 / smallest shrink factor (0.2)
BETA = 0.04
EXPO1 = 0.2 - BETA * 0.75


def _make_h(code, par, breaks, coeffs):
    if code == 0:
        return lambda r: 0.0
    if code == 1:
        c = par[0]
        return lambda r: c
    if code == 2:
        c, p = par[0], par[1]
        return lambda r: c * r ** p
    if code == 3:
        a, n = par[0], par[1]
        return lambda r: -(a * r / 2.0) * ((n - 2.0) * a * r * r + n + 2.0)
    if code == 4:
        n = par[0]
        return lambda r: -(n - 1.0) / (1.0 + r)
    x = [float(v) for v in breaks]
    c = [[float(v) for v in row] for row in coeffs]
    m = len(x) - 1

    def tab(r):
        i = bisect_right(x, r) - 1
        if i < 0:
            i = 0
        if i > m - 1:
            i = m - 1
        d = r - x[i]
        return ((c[0][i] * d + c[1][i]) * d + c[2][i]) * d + c[3][i]
    return tab


def _accel(eq, n, r, u, p, hv, grouped):
    if eq == 0:
        if grouped:
            return (-(n - 1.0) * (p - u / r) / r + (n - 2.0) * u * u * u
                    + 2.0 * (n - 1.0) * u * u / r - (n - 4.0) * u * p
                    + (p + u / r) * hv)
        q = hv - (n - 1.0) / r + (4.0 - n) * u
        pp = ((n - 2.0) * u * u + 2.0 * (n - 1.0) * u / r + (n - 1.0) / (r * r) + hv / r) * u
        return q * p + pp
    # v-form
    return (-((n - 3.0) / r + (n - 4.0) * u / r - hv) * p
            + (n - 2.0) / (r * r) * (u * (u + 1.0) * (u + 2.0)))


def integrate_kernel(eq, n, hcode, hpar, breaks, coeffs, r0, y0, yp0, r_end,
                     r_domain_end, rtol, atol, r_group, blowup_value, blowup_step,
                     h_init, max_steps):
    """Integrate ``y'' = F(r, y, y')`` from ``r0`` to ``r_end``.

    Returns ``(r, y, y', y'', status, r_status, last_step, n_accepted,
    n_rejected)`` with node arrays as numpy arrays.
    """
    hfun = _make_h(hcode, hpar, breaks, coeffs)
    n = float(n)
    r_stop = min(r_end, r_domain_end)

    def f(r, u, p):
        return _accel(eq, n, r, u, p, hfun(r), r < r_group)

    r = r0
    u, p = y0, yp0
    a1 = f(r, u, p)
    rs, us, ps, as_ = [r], [u], [p], [a1]
    hstep = h_init
    facold = 1e-4
    reject = False
    status = HORIZON
    r_status = r
    nacc = nrej = 0
    last_h = 0.0
    eps = 2.220446049250313e-16

    while True:
        if r >= r_stop:
            status = HORIZON if r_stop >= r_end else DOMAIN
            r_status = r
            break
        if nacc + nrej >= max_steps:
            status = MAXSTEPS
            r_status = r
            break
        if hstep < 4.0 * eps * abs(r):
            status = BLOWUP if abs(u) > blowup_value else UNDERFLOW
            r_status = r
            break
        last = False
        if r + hstep >= r_stop:
            hstep = r_stop - r
            last = True

        h = hstep
        # stage 2..7; k?u are slopes of u (= p-stages), k?p slopes of p
        k1u, k1p = p, a1
        u2 = u + h * (A21 * k1u)
        p2 = p + h * (A21 * k1p)
        k2u, k2p = p2, f(r + C2 * h, u2, p2)
        u3 = u + h * (A31 * k1u + A32 * k2u)
        p3 = p + h * (A31 * k1p + A32 * k2p)
        k3u, k3p = p3, f(r + C3 * h, u3, p3)
        u4 = u + h * (A41 * k1u + A42 * k2u + A43 * k3u)
        p4 = p + h * (A41 * k1p + A42 * k2p + A43 * k3p)
        k4u, k4p = p4, f(r + C4 * h, u4, p4)
        u5 = u + h * (A51 * k1u + A52 * k2u + A53 * k3u + A54 * k4u)
        p5 = p + h * (A51 * k1p + A52 * k2p + A53 * k3p + A54 * k4p)
        k5u, k5p = p5, f(r + C5 * h, u5, p5)
        u6 = u + h * (A61 * k1u + A62 * k2u + A63 * k3u + A64 * k4u + A65 * k5u)
        p6 = p + h * (A61 * k1p + A62 * k2p + A63 * k3p + A64 * k4p + A65 * k5p)
        rn = r_stop if last else r + h
        k6u, k6p = p6, f(r + h, u6, p6)
        un = u + h * (A71 * k1u + A73 * k3u + A74 * k4u + A75 * k5u + A76 * k6u)
        pn = p + h * (A71 * k1p + A73 * k3p + A74 * k4p + A75 * k5p + A76 * k6p)
        k7u, k7p = pn, f(rn, un, pn)

        eu = h * (E1 * k1u + E3 * k3u + E4 * k4u + E5 * k5u + E6 * k6u + E7 * k7u)
        ep = h * (E1 * k1p + E3 * k3p + E4 * k4p + E5 * k5p + E6 * k6p + E7 * k7p)
        sku = atol + rtol * max(abs(u), abs(un))
        skp = atol + rtol * max(abs(p), abs(pn))
        err = math.sqrt(0.5 * ((eu / sku) * (eu / sku) + (ep / skp) * (ep / skp)))
        if not math.isfinite(err):
            nrej += 1
            reject = True
            hstep = 0.2 * h
            continue

        fac11 = err ** EXPO1
        fac = fac11 / facold ** BETA
        fac = max(FACMIN, min(FACMAX, fac / SAFE))
        hnew = h / fac

        if err <= 1.0:
            facold = max(err, 1e-4)
            nacc += 1
            if not (math.isfinite(un) and math.isfinite(pn) and math.isfinite(k7p)):
                status = NONFINITE
                r_status = rn
                break
            r, u, p, a1 = rn, un, pn, k7p
            last_h = h
            rs.append(r)
            us.append(u)
            ps.append(p)
            as_.append(a1)
            if abs(u) > blowup_value and h < blowup_step * abs(r):
                status = BLOWUP
                r_status = r
                break
            if reject:
                hnew = min(hnew, h)
            reject = False
            hstep = hnew
        else:
            nrej += 1
            reject = True
            hstep = h / min(FACMAX, fac11 / SAFE)

    return (np.array(rs), np.array(us), np.array(ps), np.array(as_),
            status, r_status, last_h, nacc, nrej)
