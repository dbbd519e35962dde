"""Radial solutions of the conformal f-Yamabe equation on flat space.

The radial reduction is the second-order ODE::

    u'' + (n-1)/r u' - (n-2) u^3 - 2(n-1)/r u^2 - (n-1)/r^2 u + (n-4) u u'
        = (u' + u/r) h(r),      u(0) = 0,  u'(0) = alpha,

where ``h = f'`` is the derivative of the radial potential.
"""
from ._backend import BACKEND
from .integrator import Event, estimate_blowup_radius, find_events, integrate
from .model import (DomainError, PotentialSpec, ProblemSpec, TerminationStatus,
                    Trajectory, eval_h, oracle_eval, reconstruct_w, residual)
from .startup import expansion, startup_state

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DomainError",
    "Event",
    "PotentialSpec",
    "ProblemSpec",
    "TerminationStatus",
    "Trajectory",
    "estimate_blowup_radius",
    "eval_h",
    "expansion",
    "find_events",
    "integrate",
    "oracle_eval",
    "reconstruct_w",
    "residual",
    "startup_state",
]
