"""Adaptive integration of the u-equation with event and blow-up detection."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _pykernel as codes
from ._backend import get_kernel
from .model import DomainError, ProblemSpec, TerminationStatus, Trajectory
from .startup import startup_state

__all__ = [
    "Event",
    "EVENT_KINDS",
    "integrate",
    "estimate_blowup_radius",
    "find_events",
    "events_to_json",
]

BLOWUP_VALUE = 1e8
BLOWUP_STEP = 1e-12  # relative to r
EVENT_RESOLUTION = 1e-10
MAX_STEPS = 20_000_000
GROUPED_RADIUS = 10.0  # in units of r0

EVENT_KINDS = ("SignChangeU", "SignChangeUprime", "CrossH1WithNonposSlope",
               "CrossH2", "EnterGamma", "ExitGamma")


@dataclass(frozen=True)
class Event:
    kind: str
    r: float
    u: float
    up: float

    def to_json(self) -> dict:
        return {"kind": self.kind, "r": self.r, "u": self.u, "uprime": self.up}


def run_kernel(eq: int, spec: ProblemSpec, y0: float, yp0: float, backend=None):
    """Call the selected kernel for equation ``eq`` (0: u-form, 1: v-form)."""
    code, par, breaks, coeffs = spec.h.kernel_data()
    r_domain_end = spec.h.domain[1]
    kernel = get_kernel(backend)
    return kernel(eq, float(spec.n), code, par, breaks, coeffs, float(spec.r0),
                  float(y0), float(yp0), float(spec.r_max), float(r_domain_end),
                  float(spec.rel_tol), float(spec.abs_tol),
                  GROUPED_RADIUS * spec.r0 if eq == 0 else 0.0,
                  BLOWUP_VALUE, BLOWUP_STEP, 0.1 * spec.r0, MAX_STEPS)


def _fit_zero(r, y):
    """Zero of the least-squares line through ``(r, y)``, centred for conditioning."""
    x = r - r[-1]
    slope, icpt = np.polyfit(x, y, 1)
    if slope == 0 or not math.isfinite(slope):
        raise DomainError("degenerate fit: 1/u does not vary")
    return r[-1] - icpt / slope


def estimate_blowup_radius(traj) -> tuple[float, float]:
    """Estimate where ``|u|`` diverges.

    ``1/u`` is fitted linearly in ``r`` over the final decade of growth of
    ``|u|`` and the fit is extrapolated to its zero.  The uncertainty is half
    the spread between the zeros of separate fits to the two halves of that
    decade.  Accepts a :class:`Trajectory` or an ``(r, u)`` pair.
    """
    if isinstance(traj, Trajectory):
        r, u = traj.r, traj.u
    else:
        r, u = (np.asarray(a, dtype=float) for a in traj)
    if len(r) == 0:
        raise DomainError("empty trajectory")
    a = np.abs(u)
    top = a[-1]
    below = np.nonzero(a < top / 10)[0]
    if top == 0 or len(below) == 0:
        raise DomainError("no decade of growth in |u| to extrapolate")
    tail = slice(below[-1] + 1, None)
    rt, ut = r[tail], u[tail]
    if len(rt) < 8:
        raise DomainError(f"only {len(rt)} samples in the final decade of growth (need 8)")
    if np.any(np.sign(ut) != np.sign(ut[-1])):
        raise DomainError("u changes sign in the final decade of growth")
    y = 1.0 / ut
    R = _fit_zero(rt, y)
    half = len(rt) // 2
    R1 = _fit_zero(rt[: half + 1], y[: half + 1])
    R2 = _fit_zero(rt[half:], y[half:])
    return float(R), float(abs(R1 - R2) / 2)


def _status(raw, spec: ProblemSpec, r, u) -> TerminationStatus:
    code, r_status, last_h = raw[4], float(raw[5]), float(raw[6])
    if code == codes.HORIZON:
        return TerminationStatus("ReachedHorizon", r=r_status)
    if code == codes.DOMAIN:
        return TerminationStatus("DomainError", r=r_status,
                                 message="tabulated h queried beyond its last knot")
    if code == codes.BLOWUP or (code == codes.NONFINITE and abs(u[-1]) > BLOWUP_VALUE):
        sign = 1 if u[-1] > 0 else -1
        try:
            R, unc = estimate_blowup_radius((r, u))
        except DomainError:
            R, unc = float(r[-1]), max(last_h, abs(r[-1]) * 1e-12)
        R = min(max(R, float(r[-1])), spec.r_max)
        return TerminationStatus("BlowUp", r=float(r[-1]), R_est=R, sign=sign, uncertainty=unc)
    if code == codes.NONFINITE:
        return TerminationStatus("StepUnderflow", r=float(r[-1]), message="non-finite state")
    if code == codes.MAXSTEPS:
        return TerminationStatus("StepUnderflow", r=r_status, message="step budget exhausted")
    return TerminationStatus("StepUnderflow", r=r_status, message="step size underflow")


def integrate(spec: ProblemSpec, *, events: bool = True, backend=None):
    """Integrate from the series start at ``r0`` towards ``r_max``.

    Returns ``(trajectory, events)``; ``events`` is an empty list when
    ``events=False``.
    """
    u0, up0 = startup_state(spec)
    raw = run_kernel(0, spec, u0, up0, backend)
    r, u, up, upp = raw[:4]
    traj = Trajectory(spec, r, u, up, upp, _status(raw, spec, r, u))
    return traj, (find_events(traj) if events else [])


# events
# --------------------------------------------------------------------------


def _indicators(spec: ProblemSpec, r, u, up):
    """Boolean predicates whose flips mark events, keyed by a tag."""
    from .regions import eval_hyperbolae, in_gamma

    out = {"u": u > 0, "up": up > 0}
    if spec.n >= 3:
        h1, h2 = eval_hyperbolae(spec.n, r)
        out["h1"] = u > h1
        out["h2"] = u > h2
        out["gamma"] = in_gamma(spec.n, spec.h, r, u)
    return out


def _locate(traj: Trajectory, tag: str, lo: float, hi: float, state_lo: bool) -> float:
    while hi - lo > EVENT_RESOLUTION:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        u, up, _ = traj(mid)
        flag = _indicators(traj.spec, np.array([mid]), np.array([u]), np.array([up]))[tag][0]
        if flag == state_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_events(traj: Trajectory) -> list[Event]:
    """Locate sign changes, hyperbola crossings and region-boundary passages."""
    if len(traj.r) < 2:
        return []
    spec = traj.spec
    r, u, up = traj.r, traj.u, traj.up
    found = []
    for tag, flags in _indicators(spec, r, u, up).items():
        flips = np.nonzero(flags[1:] != flags[:-1])[0]
        for i in flips:
            if tag in ("h1", "h2") and not (u[i] < 0 and u[i + 1] < 0):
                continue
            x = _locate(traj, tag, float(r[i]), float(r[i + 1]), bool(flags[i]))
            ux, upx, _ = (float(v) for v in traj(x))
            if tag == "u":
                kind = "SignChangeU"
            elif tag == "up":
                kind = "SignChangeUprime"
            elif tag == "h1":
                if upx > spec.abs_tol:
                    continue
                kind = "CrossH1WithNonposSlope"
            elif tag == "h2":
                kind = "CrossH2"
            else:
                kind = "ExitGamma" if flags[i] else "EnterGamma"
            found.append(Event(kind, x, ux, upx))
    found.sort(key=lambda e: (e.r, EVENT_KINDS.index(e.kind)))
    return found


def events_to_json(events) -> str:
    return json.dumps([e.to_json() for e in events], indent=2)
