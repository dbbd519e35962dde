"""The substitution ``v = r u``.

``v`` satisfies::

    v'' + [(n-3)/r + (n-4) v / r - h(r)] v' = (n-2)/r^2 * c(v),
    c(y) = (y+2)(y+1)y,   C(y) = int_0^y c = (y+2)^2 y^2 / 4.

Multiplying by ``r^2 v'`` and integrating over ``[0, R]`` gives, along any
regular solution with ``v(0) = 0``::

    E(R) = R^2 v'(R)^2 / 2 + int_0^R [n-4 + (n-4) v - r h] r v'^2 dr
           - (n-2) C(v(R)) = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrator import _status, run_kernel
from .model import (DomainError, ProblemSpec, TerminationStatus, Trajectory,
                    eval_h, hermite_eval)
from .startup import expansion, startup_state

__all__ = [
    "cubic_h",
    "bigH",
    "v_accel",
    "VTrajectory",
    "integrate_v",
    "from_u_trajectory",
    "energy_integrand",
    "energy_identity_terms",
    "energy_identity_residual",
    "u_accel_via_v",
]


def cubic_h(y):
    return (y + 2) * (y + 1) * y


def bigH(y):
    return (y + 2) ** 2 * y**2 / 4


def v_accel(spec: ProblemSpec, r, v, vp):
    """``v''`` from the transformed equation."""
    n = spec.n
    hv = eval_h(spec.h, r)
    return -((n - 3) / r + (n - 4) * v / r - hv) * vp + (n - 2) / r**2 * cubic_h(v)


def u_accel_via_v(spec: ProblemSpec, r, u, up):
    """``u''`` recovered through the v-equation (``u'' = (v'' - 2u')/r``)."""
    v, vp = r * u, u + r * up
    return (v_accel(spec, r, v, vp) - 2 * up) / r


@dataclass(frozen=True, eq=False)
class VTrajectory:
    spec: ProblemSpec
    r: np.ndarray
    v: np.ndarray
    vp: np.ndarray
    vpp: np.ndarray
    status: TerminationStatus

    def __len__(self) -> int:
        return len(self.r)

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.r, self.v, self.vp])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.r[0]) or np.any(x > self.r[-1]):
            raise DomainError(f"r outside sampled range [{self.r[0]:g}, {self.r[-1]:g}]")
        return hermite_eval(x, self.r, self.v, self.vp, self.vpp)

    def to_csv(self) -> str:
        lines = ["r,v,vprime,E"]
        E = energy_profile(self)
        for row in zip(self.r, self.v, self.vp, E):
            if all(math.isfinite(x) for x in row):
                lines.append(",".join(f"{x:.17g}" for x in row))
        lines.append(self.status.status_line())
        return "\n".join(lines) + "\n"


def integrate_v(spec: ProblemSpec, *, backend=None) -> VTrajectory:
    """Integrate the v-equation directly, started from ``v(r0) = r0 u(r0)``."""
    u0, up0 = startup_state(spec)
    r0 = spec.r0
    raw = run_kernel(1, spec, r0 * u0, u0 + r0 * up0, backend)
    r, v, vp, vpp = raw[:4]
    return VTrajectory(spec, r, v, vp, vpp, _status(raw, spec, r, v))


def from_u_trajectory(traj: Trajectory) -> VTrajectory:
    r, u, up = traj.r, traj.u, traj.up
    return VTrajectory(traj.spec, r, r * u, u + r * up, 2 * up + r * traj.upp, traj.status)


def energy_integrand(vtraj: VTrajectory, r=None, v=None, vp=None):
    """``[n-4 + (n-4) v - r h(r)] r v'^2`` (at the nodes by default)."""
    if r is None:
        r, v, vp = vtraj.r, vtraj.v, vtraj.vp
    n = vtraj.spec.n
    return (n - 4 + (n - 4) * v - r * eval_h(vtraj.spec.h, r)) * r * vp * vp


def _head_integral(vtraj: VTrajectory) -> float:
    """Integral over ``[0, r0]`` from the startup series."""
    ex = expansion(vtraj.spec)
    r0, n = vtraj.r[0], vtraj.spec.n
    x, w = np.polynomial.legendre.leggauss(6)
    s = 0.5 * r0 * (x + 1)
    v = s * ex.u(s)
    vp = ex.u(s) + s * ex.up(s)
    return float(0.5 * r0 * np.sum(w * energy_integrand(vtraj, s, v, vp)))


def _cumulative_integral(vtraj: VTrajectory) -> np.ndarray:
    """Composite Simpson on the node intervals, midpoints from the dense output."""
    r = vtraj.r
    g = energy_integrand(vtraj)
    mid = 0.5 * (r[:-1] + r[1:])
    vm, vpm, _ = vtraj(mid)
    gm = energy_integrand(vtraj, mid, vm, vpm)
    pieces = np.diff(r) / 6 * (g[:-1] + 4 * gm + g[1:])
    return _head_integral(vtraj) + np.concatenate([[0.0], np.cumsum(pieces)])


def energy_identity_terms(vtraj: VTrajectory, R: float) -> dict:
    """The three terms of ``E(R)`` and their sum.

    ``R`` need not be a node: the last partial interval is integrated with
    Simpson's rule on the dense output.
    """
    r = vtraj.r
    if len(r) < 2 or not (r[0] <= R <= r[-1]):
        raise DomainError(f"R = {R:g} is not bracketed by the samples")
    n = vtraj.spec.n
    cum = _cumulative_integral(vtraj)
    i = int(np.clip(np.searchsorted(r, R, side="right") - 1, 0, len(r) - 2))
    integral = cum[i]
    if R > r[i]:
        xs = np.array([r[i], 0.5 * (r[i] + R), R])
        v, vp, _ = vtraj(xs)
        g = energy_integrand(vtraj, xs, v, vp)
        integral += (R - r[i]) / 6 * (g[0] + 4 * g[1] + g[2])
    vR, vpR, _ = vtraj(np.array(R))
    boundary = R * R * vpR * vpR / 2
    potential = (n - 2) * bigH(vR)
    return {"boundary": float(boundary), "integral": float(integral),
            "potential": float(potential),
            "E": float(boundary + integral - potential)}


def energy_identity_residual(vtraj: VTrajectory, R: float) -> float:
    return energy_identity_terms(vtraj, R)["E"]


def energy_profile(vtraj: VTrajectory) -> np.ndarray:
    """``E`` at every node."""
    n = vtraj.spec.n
    cum = _cumulative_integral(vtraj)
    return vtraj.r**2 * vtraj.vp**2 / 2 + cum - (n - 2) * bigH(vtraj.v)
