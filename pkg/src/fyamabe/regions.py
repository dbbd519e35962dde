"""Static phase-plane objects of the u-equation.

Normal form ``u'' = Q(r,u) u' + P(r,u)`` with::

    P(r, y) = ((n-2) y^2 + 2(n-1) y / r + (n-1)/r^2 + h(r)/r) y
    Q(r, y) = h(r) - (n-1)/r + (4-n) y

On ``I_h = {(n-2) r h(r) < n-1}`` the quadratic factor of ``P`` has the
real roots ``phi < psi``; ``Gamma`` is the strip ``phi < y < psi, y < 0``.
The hyperbolae ``h1 < h2 < 0`` are where the h-free static part of the
equation changes sign.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DomainError, PotentialSpec, eval_h, oracle_eval

__all__ = [
    "RegionPoint",
    "RegionReport",
    "eval_PQ",
    "discriminant",
    "classify_region",
    "eval_phi_psi",
    "in_gamma",
    "eval_hyperbolae",
    "static_term",
    "static_term_factored",
    "region_point",
    "region_report",
    "figure1_classify",
    "figure1_table",
]

BOUNDARY_TOL = 1e-12


def eval_PQ(n: int, h: PotentialSpec, r, y):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("P and Q are defined for r > 0")
    hv = eval_h(h, r)
    P = ((n - 2) * y * y + 2 * (n - 1) * y / r + (n - 1) / r**2 + hv / r) * y
    Q = hv - (n - 1) / r + (4 - n) * y
    return P, Q


def discriminant(n: int, h: PotentialSpec, r):
    """``n - 1 - (n-2) r h(r)``: positive on ``I_h``, negative on ``I^h``."""
    return n - 1 - (n - 2) * np.asarray(r, dtype=float) * eval_h(h, r)


def classify_region(n: int, h: PotentialSpec, r):
    """``"InIh"``, ``"InIupper"`` or ``"Boundary"`` (vectorised over ``r``)."""
    d = discriminant(n, h, r)
    out = np.where(d > BOUNDARY_TOL, "InIh", np.where(d < -BOUNDARY_TOL, "InIupper", "Boundary"))
    return str(out) if out.ndim == 0 else out


def _roots(n, r, d):
    s = np.sqrt(np.maximum(d, 0.0))
    phi = -(n - 1 + s) / ((n - 2) * r)
    psi = (1 - n + s) / ((n - 2) * r)
    return phi, psi


def eval_phi_psi(n: int, h: PotentialSpec, r):
    """The nonzero roots ``phi <= psi`` of ``P(r, .)``.

    On the boundary of ``I_h`` the two coincide.  Raises :class:`DomainError`
    if any ``r`` lies in ``I^h``.
    """
    if n < 3:
        raise DomainError("phi and psi need n >= 3")
    r = np.asarray(r, dtype=float)
    d = discriminant(n, h, r)
    if np.any(d < -BOUNDARY_TOL):
        bad = np.atleast_1d(r)[np.atleast_1d(d) < -BOUNDARY_TOL][0]
        raise DomainError(f"roots not real: r = {bad:g} lies in I^h")
    phi, psi = _roots(n, r, d)
    if r.ndim == 0:
        return float(phi), float(psi)
    return phi, psi


def in_gamma(n: int, h: PotentialSpec, r, y):
    """Membership of ``(r, y)`` in ``Gamma`` (``False`` outside ``I_h``)."""
    r = np.asarray(r, dtype=float)
    y = np.asarray(y, dtype=float)
    d = discriminant(n, h, r)
    phi, psi = _roots(n, r, d)
    return (d > BOUNDARY_TOL) & (phi < y) & (y < psi) & (y < 0)


def eval_hyperbolae(n: int, r):
    if n < 3:
        raise DomainError("the hyperbolae need n >= 3")
    r = np.asarray(r, dtype=float)
    s = math.sqrt(n - 1)
    h1 = -(n - 1 + s) / ((n - 2) * r)
    h2 = -(n - 1 - s) / ((n - 2) * r)
    if r.ndim == 0:
        return float(h1), float(h2)
    return h1, h2


def static_term(n: int, r, u):
    """``(n-2) u^3 + 2(n-1) u^2 / r + (n-1) u / r^2``."""
    return (n - 2) * u**3 + 2 * (n - 1) / r * u**2 + (n - 1) / r**2 * u


def static_term_factored(n: int, r, u):
    h1, h2 = eval_hyperbolae(n, r)
    return (n - 2) * (u - h1) * (u - h2) * u


@dataclass(frozen=True)
class RegionPoint:
    r: float
    y: float
    P: float
    Q: float
    region: str
    in_gamma: bool


def region_point(n: int, h: PotentialSpec, r: float, y: float) -> RegionPoint:
    P, Q = eval_PQ(n, h, r, y)
    return RegionPoint(float(r), float(y), float(P), float(Q),
                       classify_region(n, h, r), bool(in_gamma(n, h, r, y)))


@dataclass(frozen=True, eq=False)
class RegionReport:
    """Phase-plane bookkeeping along a trajectory (arrays over its nodes)."""

    r: np.ndarray
    u: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    phi: np.ndarray  # nan on I^h
    psi: np.ndarray
    region: np.ndarray
    in_gamma: np.ndarray
    h1_crossings: list
    h2_crossings: list


def region_report(traj, events=None) -> RegionReport:
    from .integrator import find_events

    spec = traj.spec
    n, h = spec.n, spec.h
    r, u = traj.r, traj.u
    P, Q = eval_PQ(n, h, r, u)
    d = discriminant(n, h, r)
    phi, psi = _roots(n, r, d)
    phi = np.where(d >= -BOUNDARY_TOL, phi, np.nan)
    psi = np.where(d >= -BOUNDARY_TOL, psi, np.nan)
    if events is None:
        events = find_events(traj)
    return RegionReport(r, u, P, Q, phi, psi, classify_region(n, h, r),
                        in_gamma(n, h, r, u),
                        [e.r for e in events if e.kind == "CrossH1WithNonposSlope"],
                        [e.r for e in events if e.kind == "CrossH2"])


# Figure 1: where the global trivial solution sits relative to Gamma
# --------------------------------------------------------------------------


def _ordering_holds(n: int, ordering: str, grid) -> bool:
    zero = PotentialSpec.zero()
    phi, psi = eval_phi_psi(n, zero, grid)
    ubar, _ = oracle_eval("trivial", grid, 1.0)
    if ordering == "InsideGamma":
        return bool(np.all((phi < ubar) & (ubar < psi)))
    return bool(np.all(ubar < phi))


def figure1_classify(n: int, max_doublings: int = 60, points: int = 1000):
    """Eventual position of ``u = -2r/(1+r^2)`` relative to ``Gamma`` for ``h = 0``.

    Doubles a candidate ``rho`` from 1 until one of the two orderings holds
    on a ``points``-point log grid over ``[rho, 100 rho]``.  Returns
    ``(ordering, rho)`` with ``ordering`` ``"InsideGamma"`` or ``"BelowPhi"``.
    """
    if n < 3:
        raise DomainError("figure1_classify needs n >= 3")
    rho = 1.0
    for _ in range(max_doublings):
        grid = np.geomspace(rho, 100 * rho, points)
        for ordering in ("InsideGamma", "BelowPhi"):
            if _ordering_holds(n, ordering, grid):
                return ordering, rho
        rho *= 2
    raise RuntimeError(f"no eventual ordering found for n={n} up to rho={rho:g}")


def figure1_table(n: int, h: PotentialSpec, r) -> np.ndarray:
    """Rows ``r, phi, psi, h1, h2, ubar1``; ``phi``/``psi`` are nan on ``I^h``."""
    r = np.asarray(r, dtype=float)
    d = discriminant(n, h, r)
    phi, psi = _roots(n, r, d)
    phi = np.where(d >= -BOUNDARY_TOL, phi, np.nan)
    psi = np.where(d >= -BOUNDARY_TOL, psi, np.nan)
    h1, h2 = eval_hyperbolae(n, r)
    ubar, _ = oracle_eval("trivial", r, 1.0)
    return np.column_stack([r, phi, psi, h1, h2, ubar])
