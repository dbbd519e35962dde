"""Regular start for the singular initial condition at ``r = 0``.

Substituting ``u = alpha r + beta r^2 + O(r^3)`` into the equation and
balancing the O(1) terms (the ``1/r`` pieces of ``(n-1)u'/r`` and
``(n-1)u/r^2`` cancel) gives ``(n+1) beta = 2 alpha h(0)``.
"""
from __future__ import annotations

from dataclasses import dataclass

from .model import DomainError, ProblemSpec, eval_h

__all__ = ["StartupExpansion", "expansion", "startup_state"]

MAX_SERIES_DEFECT = 1e-6


@dataclass(frozen=True)
class StartupExpansion:
    alpha: float
    beta: float
    r0: float

    def u(self, r: float) -> float:
        return self.alpha * r + self.beta * r * r

    def up(self, r: float) -> float:
        return self.alpha + 2.0 * self.beta * r

    def upp(self, r: float) -> float:
        return 2.0 * self.beta


def expansion(spec: ProblemSpec) -> StartupExpansion:
    if not spec.h.continuous_at_zero():
        raise DomainError(
            f"h = {spec.h.describe()} is not continuous at r = 0; "
            "the series start needs h(0)")
    beta = 2.0 * spec.alpha * eval_h(spec.h, 0.0) / (spec.n + 1)
    return StartupExpansion(spec.alpha, beta, spec.r0)


def startup_state(spec: ProblemSpec) -> tuple[float, float]:
    """``(u(r0), u'(r0))`` from the two-term series.

    The first neglected coefficient is ``alpha^2/2`` plus terms in ``h(0)``
    and ``h'(0)``.  Raises :class:`DomainError` when that term, estimated
    without the ``h'(0)`` part, exceeds ``MAX_SERIES_DEFECT`` relative to
    ``alpha r0``.
    """
    ex = expansion(spec)
    r0, a, n = spec.r0, spec.alpha, spec.n
    h0 = eval_h(spec.h, 0.0)
    gamma = abs(a * a / 2 + 3 * ex.beta * h0 / (2 * (n + 2)))
    defect = gamma * r0 * r0 / abs(a)
    if defect > MAX_SERIES_DEFECT:
        raise DomainError(
            f"r0 = {r0:g} is too large for the series start "
            f"(neglected term ~{defect:.2g} relative); use a smaller r0")
    return ex.u(r0), ex.up(r0)
