"""Cut-off test functions and the weighted integral estimates built on them.

Radial integrals carry the weight ``r^(2n-2)``: a radial function of ``r`` on
R^(2n-1) has Laplacian ``w'' + (2n-2)/r w'``, and the estimates are the
radial form of integrating that Laplacian against a cut-off.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .model import DomainError, oracle_accel, oracle_eval
from .startup import expansion

__all__ = [
    "TestFunction",
    "make_test_function",
    "check_rho_property",
    "check_young",
    "EstimateReport",
    "lemma_mp_check",
    "lemma_mp2_check",
    "rescaling_decay",
    "loglog_slope",
    "ibp_identity_gap",
    "contradiction_table",
    "trivial_profile",
    "polynomial_profile",
    "rational_profile",
    "trajectory_profile",
]

EPSABS = 1e-10
EPSREL = 1e-8
QUAD_LIMIT = 400

Profile = Callable[[np.ndarray], tuple]


def _quad(f, a, b, points=None):
    """QUADPACK with the module tolerances; returns ``(value, error, converged)``."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, epsabs=EPSABS, epsrel=EPSREL, limit=QUAD_LIMIT,
                                  points=points)
    ok = not any(issubclass(w.category, integrate.IntegrationWarning) for w in caught)
    return val, err, ok


# test functions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """``phi = b^k`` where ``b`` is 1 on ``[0, rho]``, 0 beyond ``2 rho``, and
    the quintic smoothstep bridge (value, slope and curvature matched) in
    between.
    """

    __test__ = False  # not a pytest class

    rho: float
    k: int = 6

    def base(self, r):
        r = np.asarray(r, dtype=float)
        s = np.clip((r - self.rho) / self.rho, 0.0, 1.0)
        b = 1.0 - s**3 * (10 - 15 * s + 6 * s * s)
        db = -30 * s * s * (1 - s) ** 2 / self.rho
        d2b = -60 * s * (1 - s) * (1 - 2 * s) / self.rho**2
        return b, db, d2b

    def __call__(self, r):
        """``(phi, phi', phi'')``."""
        b, db, d2b = self.base(r)
        k = self.k
        phi = b**k
        dphi = k * b ** (k - 1) * db
        d2phi = k * b ** (k - 1) * d2b + k * (k - 1) * b ** (k - 2) * db * db
        return phi, dphi, d2phi

    def rescaled(self, factor: float) -> "TestFunction":
        """``r -> phi(r / factor)``, which has the rho-property for ``factor * rho``."""
        return TestFunction(self.rho * factor, self.k)

    def curvature_ratio(self, r, n: int):
        """``|phi'' + (2n-2)/r phi'|^(3/2) / sqrt(phi)`` with ``phi^(k/2)`` cancelled."""
        b, db, d2b = self.base(r)
        k = self.k
        c = (2 * n - 2) / np.asarray(r, dtype=float)
        core = np.abs(b * d2b + (k - 1) * db * db + c * b * db) ** 1.5
        with np.errstate(divide="ignore", invalid="ignore"):
            out = k**1.5 * b ** (k - 3.0) * core
        return np.where(b > 0, out, 0.0)

    def slope_ratio(self, r):
        """``|phi'|^3 / phi^2`` with the common powers of ``b`` cancelled."""
        b, db, _ = self.base(r)
        k = self.k
        with np.errstate(divide="ignore", invalid="ignore"):
            out = k**3 * b ** (k - 3.0) * np.abs(db) ** 3
        return np.where(b > 0, out, 0.0)


@dataclass(frozen=True)
class RhoPropertyReport:
    plateau: bool
    support: bool
    c2_joins: bool
    curvature_integral: float
    refinement_change: float
    passes: bool


def check_rho_property(tf: TestFunction, n: int = 10) -> RhoPropertyReport:
    rho = tf.rho
    inner = np.linspace(0.0, rho, 101)
    outer = np.linspace(2 * rho, 4 * rho, 101)
    plateau = bool(np.all(tf(inner)[0] == 1.0))
    support = bool(np.all(tf(outer)[0] == 0.0))
    # one-sided limits of (phi, phi', phi'') at both joins
    joins = True
    scale = np.array([1.0, rho, rho * rho])
    for x in (rho, 2 * rho):
        left = np.array(tf(x - 1e-7 * rho)) * scale
        right = np.array(tf(x + 1e-7 * rho)) * scale
        joins &= bool(np.all(np.abs(left - right) <= 1e-3))
    weighted = lambda r: r ** (2 * n - 2) * tf.curvature_ratio(r, n)  # noqa: E731
    # relative tolerances only, so the check does not depend on the scale of rho
    coarse, _ = integrate.quad(weighted, rho, 2 * rho, epsabs=0.0, epsrel=1e-5)
    fine, _ = integrate.quad(weighted, rho, 2 * rho, epsabs=0.0, epsrel=EPSREL, limit=QUAD_LIMIT)
    change = abs(fine - coarse) / max(abs(fine), 1e-300)
    finite = math.isfinite(fine) and change < 1e-4
    return RhoPropertyReport(plateau, support, joins, fine, change,
                             plateau and support and joins and finite)


def make_test_function(rho: float, k: int = 6, n: int = 10) -> TestFunction:
    """Build ``phi = b^k`` for radius ``rho`` and verify the rho-property in dimension ``n``."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    if int(k) != k or k < 2:
        raise DomainError(f"k = {k} too small: phi must be a C^2 power b^k with k >= 2")
    tf = TestFunction(float(rho), int(k))
    report = check_rho_property(tf, n)
    if not report.passes:
        raise DomainError(
            f"k = {k} does not give a finite curvature integral "
            f"int |phi'' + (2n-2)/r phi'|^(3/2) / sqrt(phi) at n = {n}")
    return tf


# Young's inequality
# --------------------------------------------------------------------------


def check_young(form: str, a: float, b: float, param: float):
    """``(lhs, rhs, holds)`` for ``ab <= eps a^3/3 + 2 b^(3/2)/(3 sqrt eps)`` ("young1")
    or ``ab <= 2 sqrt(delta) a^(3/2)/3 + b^3/(3 delta)`` ("young2")."""
    if a < 0 or b < 0 or param <= 0:
        raise ValueError("need a, b >= 0 and a positive parameter")
    lhs = a * b
    if form == "young1":
        rhs = param * a**3 / 3 + 2 * b**1.5 / (3 * math.sqrt(param))
    elif form == "young2":
        rhs = 2 * math.sqrt(param) * a**1.5 / 3 + b**3 / (3 * param)
    else:
        raise ValueError(f"unknown form {form!r}")
    return lhs, rhs, lhs <= rhs + 1e-15


# lemma checks
# --------------------------------------------------------------------------


@dataclass
class EstimateReport:
    lhs: float
    rhs: float
    holds: bool
    quadrature_error: float
    converged: bool = True
    params: dict = field(default_factory=dict)
    terms: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def lemma_mp_check(w: Profile, rho: float, epsilon: float, tf: TestFunction, n: int) -> EstimateReport:
    """Compare ``int_0^{2rho} r^(2n-2) (w'' + (2n-2) w'/r) phi`` with
    ``eps/3 int r^(2n-2) |w|^3 phi + 2/(3 sqrt eps) int_rho^{2rho} r^(2n-2) |phi'' + (2n-2)/r phi'|^(3/2)/sqrt(phi)``.

    ``terms["lhs_abs"]`` reports the integral with ``|w'' + (2n-2) w'/r|``,
    which the right-hand side does not control in general.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if abs(tf.rho - rho) > 1e-12 * rho:
        tf = TestFunction(rho, tf.k)
    m = 2 * n - 2

    def lap(r):
        _, d1, d2 = w(r)
        return r**m * d2 + m * r ** (m - 1) * d1

    lhs, e1, ok1 = _quad(lambda r: lap(r) * tf(r)[0], 0.0, 2 * rho, [rho])
    lhs_abs, _, _ = _quad(lambda r: abs(lap(r)) * tf(r)[0], 0.0, 2 * rho, [rho])
    cube, e2, ok2 = _quad(lambda r: r**m * abs(w(r)[0]) ** 3 * tf(r)[0], 0.0, 2 * rho, [rho])
    cut, e3, ok3 = _quad(lambda r: r**m * tf.curvature_ratio(r, n), rho, 2 * rho)
    t1 = epsilon / 3 * cube
    t2 = 2 / (3 * math.sqrt(epsilon)) * cut
    rhs = t1 + t2
    qerr = e1 + epsilon / 3 * e2 + 2 / (3 * math.sqrt(epsilon)) * e3
    return EstimateReport(
        lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs + qerr), quadrature_error=qerr,
        converged=ok1 and ok2 and ok3,
        params={"lemma": "mp", "rho": rho, "epsilon": epsilon, "k": tf.k, "n": n},
        terms={"cubic": t1, "cutoff": t2, "lhs_abs": lhs_abs})


def lemma_mp2_check(w: Profile, rho: float, delta: float, tf: TestFunction, n: int) -> EstimateReport:
    """Compare ``int_0^{2rho} r^(2n-2) (w^2)' phi`` with
    ``2 sqrt(delta)/3 int r^(2n-2) |w|^3 phi + 1/(3 delta) int_rho^{2rho} r^(2n-2) |phi'|^3/phi^2``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if abs(tf.rho - rho) > 1e-12 * rho:
        tf = TestFunction(rho, tf.k)
    m = 2 * n - 2

    def grad_sq(r):
        v, d1, _ = w(r)
        return r**m * 2 * v * d1

    lhs, e1, ok1 = _quad(lambda r: grad_sq(r) * tf(r)[0], 0.0, 2 * rho, [rho])
    cube, e2, ok2 = _quad(lambda r: r**m * abs(w(r)[0]) ** 3 * tf(r)[0], 0.0, 2 * rho, [rho])
    cut, e3, ok3 = _quad(lambda r: r**m * tf.slope_ratio(r), rho, 2 * rho)
    t1 = 2 * math.sqrt(delta) / 3 * cube
    t2 = cut / (3 * delta)
    qerr = e1 + 2 * math.sqrt(delta) / 3 * e2 + e3 / (3 * delta)
    rhs = t1 + t2
    return EstimateReport(
        lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs + qerr), quadrature_error=qerr,
        converged=ok1 and ok2 and ok3,
        params={"lemma": "mp2", "rho": rho, "delta": delta, "k": tf.k, "n": n},
        terms={"cubic": t1, "cutoff": t2})


def _cutoff_rhs(tf: TestFunction, n: int, epsilon: float, delta: float) -> float:
    m = 2 * n - 2
    rho = tf.rho
    cut = _quad(lambda r: r**m * tf.curvature_ratio(r, n), rho, 2 * rho)[0]
    total = 2 / (3 * math.sqrt(epsilon)) * cut
    if n >= 5:
        cut2 = _quad(lambda r: r**m * tf.slope_ratio(r), rho, 2 * rho)[0]
        total += (n - 4) / (6 * delta) * cut2
    return total


def loglog_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        raise DomainError("a slope needs at least two points")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass(frozen=True)
class DecayReport:
    rhos: tuple
    values: tuple
    slope: float


def rescaling_decay(tf1: TestFunction, n: int, rhos, epsilon: float = 1.0,
                    delta: float = 1.0) -> DecayReport:
    """Cut-off side of the estimates for ``phi_rho(r) = phi_1(r/rho)``, divided
    by ``rho^(2n-1)`` (the volume factor of the ``[0, rho]`` side).

    Each value is a fresh quadrature over ``[rho, 2 rho]``; the fitted log-log
    slope should be -3.  For ``n >= 5`` the ``|phi'|^3/phi^2`` term is
    included with weight ``(n-4)/(6 delta)``.
    """
    rhos = [float(x) for x in rhos]
    if len(rhos) < 2:
        raise DomainError("the decay slope needs at least two radii")
    if any(b <= a for a, b in zip(rhos, rhos[1:])):
        raise ValueError("rhos must be increasing")
    vals = [_cutoff_rhs(tf1.rescaled(x), n, epsilon, delta) / x ** (2 * n - 1) for x in rhos]
    return DecayReport(tuple(rhos), tuple(vals), loglog_slope(rhos, vals))


def ibp_identity_gap(w: Profile, tf: TestFunction, n: int) -> float:
    """Relative gap between ``int r^(2n-2) (Lw) phi`` and ``int r^(2n-2) w (L phi)``
    where ``L = d^2/dr^2 + (2n-2)/r d/dr``."""
    m = 2 * n - 2
    R = 2 * tf.rho

    def left(r):
        _, d1, d2 = w(r)
        return (r**m * d2 + m * r ** (m - 1) * d1) * tf(r)[0]

    def right(r):
        _, d1, d2 = tf(r)
        return w(r)[0] * (r**m * d2 + m * r ** (m - 1) * d1)

    a = _quad(left, 0.0, R, [tf.rho])[0]
    b = _quad(right, tf.rho, R)[0]
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def contradiction_table(traj, rhos, epsilon: float = 1.0, delta: float = 1.0, k: int = 6):
    """Rows ``(rho, lower, upper)``: ``lower`` is
    ``(n-2-eps/3 [-(n-4) sqrt(delta)/3]) int_0^1 t^(2n-2) u(rho t)^3 dt`` and
    ``upper`` the rescaled cut-off side at ``rho``.  Only radii inside the
    sampled range are used.  Diagnostic; nothing is asserted.
    """
    n = traj.spec.n
    const = n - 2 - epsilon / 3 - (max(n - 4, 0) * math.sqrt(delta) / 3)
    prof = trajectory_profile(traj)
    tf1 = TestFunction(1.0, k)
    rows = []
    for rho in rhos:
        if rho > traj.r[-1]:
            continue
        val = _quad(lambda t: t ** (2 * n - 2) * prof(rho * t)[0] ** 3, 0.0, 1.0)[0]
        upper = _cutoff_rhs(tf1.rescaled(rho), n, epsilon, delta) / rho ** (2 * n - 1)
        rows.append((float(rho), const * val, upper))
    return rows


# profiles w(r) -> (w, w', w'')
# --------------------------------------------------------------------------


def trivial_profile(a: float = 1.0, scale: float = 1.0) -> Profile:
    """``scale * (-2 a r / (1 + a r^2))``, extended by its limit at ``r = 0``."""
    def w(r):
        x = max(float(r), 1e-300)
        u, du = oracle_eval("trivial", x, a)
        return scale * u, scale * du, scale * float(oracle_accel("trivial", x, a))
    return w


def polynomial_profile(coeffs) -> Profile:
    p = np.polynomial.Polynomial(coeffs)
    dp, d2p = p.deriv(1), p.deriv(2)
    return lambda r: (p(r), dp(r), d2p(r))


def rational_profile(coeffs, c: float, m: int) -> Profile:
    """``p(r) / (1 + c r^2)^m`` for a polynomial ``p`` and ``c > 0``."""
    p = np.polynomial.Polynomial(coeffs)
    dp, d2p = p.deriv(1), p.deriv(2)

    def w(r):
        q = 1.0 + c * r * r
        g = q**-m
        dg = -2 * m * c * r * q ** (-m - 1)
        d2g = -2 * m * c * q ** (-m - 1) + 4 * m * (m + 1) * c * c * r * r * q ** (-m - 2)
        pv, p1, p2 = p(r), dp(r), d2p(r)
        return pv * g, p1 * g + pv * dg, p2 * g + 2 * p1 * dg + pv * d2g
    return w


def trajectory_profile(traj) -> Profile:
    """Dense output of a trajectory; the startup series covers ``[0, r0]``."""
    ex = expansion(traj.spec)
    r0 = traj.r[0]

    def w(r):
        if r < r0:
            return ex.u(r), ex.up(r), ex.upp(r)
        u, du, d2u = traj(min(r, traj.r[-1]))
        return float(u), float(du), float(d2u)
    return w
