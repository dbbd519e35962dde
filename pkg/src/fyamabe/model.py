"""Domain types and closed-form objects for the radial conformal f-Yamabe ODE.

The equation for ``u = w'`` on ``r > 0`` is::

    u'' + (n-1)/r u' - (n-2) u^3 - 2(n-1)/r u^2 - (n-1)/r^2 u + (n-4) u u'
        = (u' + u/r) h(r)

with ``u(0) = 0`` and ``u'(0) = alpha != 0``.  ``h = f'`` is the derivative
of the radial potential and is represented by :class:`PotentialSpec`.
"""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = [
    "DomainError",
    "PotentialSpec",
    "ProblemSpec",
    "TerminationStatus",
    "Trajectory",
    "eval_h",
    "accel",
    "residual",
    "oracle_eval",
    "oracle_accel",
    "oracle_residual",
    "reconstruct_w",
    "hermite_eval",
]


class DomainError(ValueError):
    """A numerical quantity was requested outside its domain of definition."""


# Potential h(r) = f'(r)
# --------------------------------------------------------------------------

_KINDS = ("zero", "constant", "power", "linear_exact", "bounded_below", "tabulated")

# integer codes shared with the compiled and pure-Python kernels
KIND_CODES = {kind: code for code, kind in enumerate(_KINDS)}


@dataclass(frozen=True)
class PotentialSpec:
    """Representation of ``h(r) = f'(r)``.

    Use the named constructors rather than the raw fields.  ``params`` holds
    the variant's numbers; ``knots`` is only populated for tabulated
    potentials, which are interpolated with a shape-preserving (PCHIP) cubic
    so that sign hypotheses on the knots carry over to the interpolant.
    """

    kind: str
    params: tuple = ()
    knots: Optional[tuple] = None
    _interp: Any = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "tabulated":
            if self.knots is None or len(self.knots) < 2:
                raise ValueError("tabulated potential needs at least two knots")
            x = np.array([k[0] for k in self.knots], dtype=float)
            y = np.array([k[1] for k in self.knots], dtype=float)
            if np.any(np.diff(x) <= 0):
                raise ValueError("tabulated knots must be strictly increasing in r")
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                raise ValueError("tabulated knots must be finite")
            object.__setattr__(self, "_interp", PchipInterpolator(x, y, extrapolate=False))
        if self.kind in ("linear_exact", "bounded_below"):
            n = self.params[-1]
            if int(n) != n or n < 2:
                raise ValueError("dimension parameter must be an integer >= 2")

    # named constructors -------------------------------------------------
    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls("zero")

    @classmethod
    def constant(cls, c: float) -> "PotentialSpec":
        return cls("constant", (float(c),))

    @classmethod
    def power_law(cls, c: float, p: float) -> "PotentialSpec":
        """``h(r) = c r**p``."""
        return cls("power", (float(c), float(p)))

    @classmethod
    def linear_exact(cls, alpha: float, n: int) -> "PotentialSpec":
        """The potential for which ``u(r) = alpha r`` is an exact solution."""
        return cls("linear_exact", (float(alpha), int(n)))

    @classmethod
    def bounded_below(cls, n: int) -> "PotentialSpec":
        """``h(r) = -(n-1)/(1+r)``, which satisfies ``h >= -(n-1)/r``."""
        return cls("bounded_below", (int(n),))

    @classmethod
    def tabulated(cls, knots: Sequence[Sequence[float]]) -> "PotentialSpec":
        return cls("tabulated", (), tuple((float(r), float(v)) for r, v in knots))

    # --------------------------------------------------------------------
    @property
    def domain(self) -> tuple[float, float]:
        """Closed interval of admissible radii."""
        if self.kind == "tabulated":
            return self.knots[0][0], self.knots[-1][0]
        if self.kind == "power" and self.params[1] < 0:
            return 0.0, math.inf  # r = 0 excluded, see eval_h
        return 0.0, math.inf

    def continuous_at_zero(self) -> bool:
        if self.kind == "power":
            return self.params[1] >= 0
        if self.kind == "tabulated":
            return self.knots[0][0] <= 0.0
        return True

    def kernel_data(self):
        """Flattened description consumed by the integration kernels.

        Returns ``(code, params, breaks, coeffs)`` where ``breaks``/``coeffs``
        are the PCHIP breakpoints and local power-basis coefficients
        (shape ``(4, m)``) for tabulated potentials and empty otherwise.
        """
        par = np.zeros(4)
        par[: len(self.params)] = self.params
        if self.kind == "tabulated":
            breaks = np.ascontiguousarray(self._interp.x, dtype=float)
            coeffs = np.ascontiguousarray(self._interp.c, dtype=float)
        else:
            breaks = np.zeros(2)
            coeffs = np.zeros((4, 1))
        return KIND_CODES[self.kind], par, breaks, coeffs

    def to_json(self) -> dict:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "constant":
            return {"kind": "constant", "c": self.params[0]}
        if self.kind == "power":
            return {"kind": "power", "c": self.params[0], "p": self.params[1]}
        if self.kind == "linear_exact":
            return {"kind": "linear_exact", "alpha": self.params[0], "n": self.params[1]}
        if self.kind == "bounded_below":
            return {"kind": "bounded_below", "n": self.params[0]}
        return {"kind": "tabulated", "knots": [list(k) for k in self.knots]}

    @classmethod
    def from_json(cls, doc: dict, n: Optional[int] = None,
                  alpha: Optional[float] = None) -> "PotentialSpec":
        """Parse a potential document.

        ``n`` and ``alpha`` fill in the parameters of ``linear_exact`` and
        ``bounded_below`` when the document omits them.
        """
        try:
            return cls._from_doc(doc, n, alpha)
        except KeyError as exc:
            raise ValueError(f"potential {doc.get('kind')!r} lacks the key {exc}") from None

    @classmethod
    def _from_doc(cls, doc: dict, n, alpha) -> "PotentialSpec":
        kind = doc.get("kind")
        if kind == "zero":
            return cls.zero()
        if kind == "constant":
            return cls.constant(doc["c"])
        if kind == "power":
            return cls.power_law(doc["c"], doc["p"])
        if kind == "linear_exact":
            return cls.linear_exact(doc.get("alpha", alpha), doc.get("n", n))
        if kind == "bounded_below":
            return cls.bounded_below(doc.get("n", n))
        if kind == "tabulated":
            return cls.tabulated(doc["knots"])
        raise ValueError(f"unknown potential kind {kind!r}")

    def describe(self) -> str:
        if self.kind == "zero":
            return "0"
        if self.kind == "constant":
            return f"{self.params[0]:g}"
        if self.kind == "power":
            return f"{self.params[0]:g}*r^{self.params[1]:g}"
        if self.kind == "linear_exact":
            return f"linexact(alpha={self.params[0]:g},n={self.params[1]})"
        if self.kind == "bounded_below":
            return f"-({self.params[0]}-1)/(1+r)"
        return f"table[{len(self.knots)}]"


def eval_h(h: PotentialSpec, r):
    """Evaluate ``h(r)``; accepts scalars or arrays."""
    scalar = np.ndim(r) == 0
    r = np.asarray(r, dtype=float)
    if h.kind == "zero":
        out = np.zeros_like(r)
    elif h.kind == "constant":
        out = np.full_like(r, h.params[0])
    elif h.kind == "power":
        c, p = h.params
        if p < 0 and np.any(r <= 0):
            raise DomainError(f"power law r^{p:g} is undefined at r = 0")
        out = c * r**p
    elif h.kind == "linear_exact":
        a, n = h.params
        out = -(a * r / 2.0) * ((n - 2) * a * r * r + n + 2)
    elif h.kind == "bounded_below":
        (n,) = h.params
        out = -(n - 1) / (1.0 + r)
    else:
        lo, hi = h.domain
        if np.any(r < lo) or np.any(r > hi):
            raise DomainError(f"tabulated h queried outside knot range [{lo:g}, {hi:g}]")
        out = h._interp(r)
    return float(out) if scalar else out


# Problem definition
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemSpec:
    """One initial value problem ``u(0)=0, u'(0)=alpha`` in dimension ``n``."""

    n: int
    alpha: float
    h: PotentialSpec
    r_max: float = 10.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    r0: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise ValueError("n must be an integer")
        object.__setattr__(self, "n", int(self.n))
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not math.isfinite(self.alpha) or self.alpha == 0:
            raise ValueError("alpha must be finite and nonzero")
        if not (self.r_max > 0 and math.isfinite(self.r_max)):
            raise ValueError("r_max must be a positive finite number")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.r0 is None:
            object.__setattr__(self, "r0", 1e-4 * min(1.0, self.r_max))
        if not 0 < self.r0 < self.r_max:
            raise ValueError("need 0 < r0 < r_max")

    def replace(self, **changes) -> "ProblemSpec":
        doc = dict(n=self.n, alpha=self.alpha, h=self.h, r_max=self.r_max,
                   rel_tol=self.rel_tol, abs_tol=self.abs_tol, r0=self.r0)
        if "r_max" in changes and "r0" not in changes:
            doc["r0"] = None
        doc.update(changes)
        return ProblemSpec(**doc)

    def to_json(self) -> dict:
        return {"n": self.n, "alpha": self.alpha, "h": self.h.to_json(),
                "r_max": self.r_max, "rel_tol": self.rel_tol,
                "abs_tol": self.abs_tol, "r0": self.r0}

    @classmethod
    def from_json(cls, doc: dict) -> "ProblemSpec":
        n, alpha = doc["n"], doc["alpha"]
        kw = {k: doc[k] for k in ("r_max", "rel_tol", "abs_tol", "r0") if doc.get(k) is not None}
        return cls(n=n, alpha=float(alpha),
                   h=PotentialSpec.from_json(doc.get("h", {"kind": "zero"}), n=n, alpha=alpha),
                   **kw)


@dataclass(frozen=True)
class TerminationStatus:
    """How an integration ended.

    ``tag`` is one of ``ReachedHorizon``, ``BlowUp``, ``StepUnderflow`` or
    ``DomainError``.  For ``BlowUp`` the estimated radius, the sign of the
    divergence and the estimate's uncertainty are filled in.
    """

    tag: str
    r: Optional[float] = None
    R_est: Optional[float] = None
    sign: Optional[int] = None
    uncertainty: Optional[float] = None
    message: str = ""

    @property
    def is_global(self) -> bool:
        return self.tag == "ReachedHorizon"

    def to_json(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v not in (None, "")}

    def status_line(self) -> str:
        parts = [f"status={self.tag}"]
        if self.tag == "BlowUp":
            parts.append(f"R_est={self.R_est:.17g}")
            parts.append(f"sign={self.sign:+d}")
            parts.append(f"uncertainty={self.uncertainty:.3g}")
        elif self.r is not None:
            parts.append(f"r={self.r:.17g}")
        if self.message:
            parts.append(f"message={self.message!r}")
        return "# " + " ".join(parts)


def hermite_eval(x, xk, y, yp, ypp):
    """Quintic Hermite interpolation through ``(y, y', y'')`` at nodes ``xk``.

    Returns ``(value, first derivative, second derivative)`` at ``x``.
    """
    x = np.asarray(x, dtype=float)
    i = np.clip(np.searchsorted(xk, x, side="right") - 1, 0, len(xk) - 2)
    h = xk[i + 1] - xk[i]
    t = (x - xk[i]) / h
    y0, y1 = y[i], y[i + 1]
    d0, d1 = yp[i] * h, yp[i + 1] * h
    s0, s1 = ypp[i] * h * h, ypp[i + 1] * h * h
    # power-basis coefficients of the quintic in t
    c0, c1, c2 = y0, d0, s0 / 2
    dy = y1 - y0
    c3 = 10 * dy - 6 * d0 - 4 * d1 - 1.5 * s0 + 0.5 * s1
    c4 = -15 * dy + 8 * d0 + 7 * d1 + 1.5 * s0 - s1
    c5 = 6 * dy - 3 * d0 - 3 * d1 - 0.5 * s0 + 0.5 * s1
    val = c0 + t * (c1 + t * (c2 + t * (c3 + t * (c4 + t * c5))))
    der = (c1 + t * (2 * c2 + t * (3 * c3 + t * (4 * c4 + t * 5 * c5)))) / h
    der2 = (2 * c2 + t * (6 * c3 + t * (12 * c4 + t * 20 * c5))) / (h * h)
    return val, der, der2


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution ``(r, u, u')`` of the initial value problem.

    ``upp`` holds ``u''`` at the nodes, evaluated from the equation; together
    with ``u`` and ``u'`` it defines a quintic Hermite dense output.
    """

    spec: ProblemSpec
    r: np.ndarray
    u: np.ndarray
    up: np.ndarray
    upp: np.ndarray
    status: TerminationStatus

    def __len__(self) -> int:
        return len(self.r)

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.r, self.u, self.up])

    def __call__(self, x):
        """Dense output ``(u, u', u'')`` at radii inside the sampled range."""
        x = np.asarray(x, dtype=float)
        if len(self.r) < 2:
            raise DomainError("dense output needs at least two samples")
        if np.any(x < self.r[0]) or np.any(x > self.r[-1]):
            raise DomainError(f"r outside sampled range [{self.r[0]:g}, {self.r[-1]:g}]")
        return hermite_eval(x, self.r, self.u, self.up, self.upp)

    def to_csv(self) -> str:
        lines = ["r,u,uprime"]
        for row in zip(self.r, self.u, self.up):
            if all(math.isfinite(x) for x in row):
                lines.append(",".join(f"{x:.17g}" for x in row))
        lines.append(self.status.status_line())
        return "\n".join(lines) + "\n"


# The equation
# --------------------------------------------------------------------------


def accel(spec: ProblemSpec, r, u, up):
    """``u''`` solved from the equation (normal form ``Q u' + P``)."""
    n = spec.n
    hv = eval_h(spec.h, r)
    q = hv - (n - 1) / r + (4 - n) * u
    p = ((n - 2) * u * u + 2 * (n - 1) * u / r + (n - 1) / (r * r) + hv / r) * u
    return q * up + p


def residual(spec: ProblemSpec, r, u, up, upp):
    """Left-hand side minus right-hand side of the equation at ``r``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("the equation is singular at r = 0")
    return _residual(spec.n, r, u, up, upp, eval_h(spec.h, r))


def _residual(n, r, u, up, upp, hv):
    # plain arithmetic so that exact (Fraction) inputs stay exact
    lhs = (upp + (n - 1) / r * up - (n - 2) * u**3 - 2 * (n - 1) / r * u**2
           - (n - 1) / r**2 * u + (n - 4) * u * up)
    return lhs - (up + u / r) * hv


# Closed-form oracle solutions
# --------------------------------------------------------------------------


def oracle_eval(kind: str, r, param: float = 0.0, n: Optional[int] = None):
    """Closed-form solutions ``(u, u')``.

    ``kind`` is one of

    * ``"singular1"`` -- ``-1/r``, a solution for every ``h`` when ``n >= 3``
    * ``"singular2"`` -- ``-2/r``, likewise
    * ``"trivial"`` -- ``-2 a r / (1 + a r^2)`` with ``a = param``, for ``h = 0``
    * ``"linear"`` -- ``alpha r`` with ``alpha = param``, for the
      ``linear_exact`` potential
    * ``"singular_c"`` -- ``c/r`` with ``c = param``, a solution when ``n = 2``
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("oracle solutions are evaluated at r > 0")
    if kind == "singular1":
        u, up = -1.0 / r, 1.0 / r**2
    elif kind == "singular2":
        u, up = -2.0 / r, 2.0 / r**2
    elif kind == "singular_c":
        if param == 0:
            raise DomainError("c must be nonzero")
        u, up = param / r, -param / r**2
    elif kind == "trivial":
        a = param
        den = 1.0 + a * r * r
        if a < 0 and np.any(r >= 1.0 / math.sqrt(-a)):
            raise DomainError(f"trivial family with a={a:g} blows up at r={1 / math.sqrt(-a):g}")
        u = -2.0 * a * r / den
        up = -2.0 * a * (1.0 - a * r * r) / den**2
    elif kind == "linear":
        u, up = param * r, np.full_like(r, param)
    else:
        raise ValueError(f"unknown oracle kind {kind!r}")
    if r.ndim == 0:
        return float(u), float(up)
    return u, up


def oracle_accel(kind: str, r, param: float = 0.0):
    """Second derivative of the oracle solutions, for residual checks."""
    r = np.asarray(r, dtype=float)
    if kind == "singular1":
        return -2.0 / r**3
    if kind == "singular2":
        return -4.0 / r**3
    if kind == "singular_c":
        return 2.0 * param / r**3
    if kind == "trivial":
        a = param
        return 4.0 * a * a * r * (3.0 - a * r * r) / (1.0 + a * r * r) ** 3
    if kind == "linear":
        return np.zeros_like(r)
    raise ValueError(f"unknown oracle kind {kind!r}")


def _h_exact(h: PotentialSpec, r: Fraction):
    """``h(r)`` as a Fraction where the variant is rational in ``r``."""
    if h.kind == "zero":
        return Fraction(0)
    if h.kind == "constant":
        return Fraction(h.params[0])
    if h.kind == "power" and float(h.params[1]).is_integer():
        return Fraction(h.params[0]) * r ** int(h.params[1])
    if h.kind == "linear_exact":
        a, n = Fraction(h.params[0]), h.params[1]
        return -(a * r / 2) * ((n - 2) * a * r * r + n + 2)
    if h.kind == "bounded_below":
        return -Fraction(h.params[0] - 1) / (1 + r)
    return Fraction(eval_h(h, float(r)))


def _oracle_exact(kind: str, r: Fraction, param):
    """Exact ``(u, u', u'')`` of a closed-form solution at rational ``r``."""
    if kind in ("singular1", "singular2", "singular_c"):
        c = {"singular1": Fraction(-1), "singular2": Fraction(-2)}.get(kind, Fraction(param))
        return c / r, -c / r**2, 2 * c / r**3
    if kind == "trivial":
        a = Fraction(param)
        q = 1 + a * r * r
        return -2 * a * r / q, -2 * a * (1 - a * r * r) / q**2, 4 * a * a * r * (3 - a * r * r) / q**3
    if kind == "linear":
        return Fraction(param) * r, Fraction(param), Fraction(0)
    raise ValueError(f"unknown oracle kind {kind!r}")


def oracle_residual(spec: ProblemSpec, kind: str, r, param: float = 0.0) -> np.ndarray:
    """Residual of a closed-form solution, evaluated exactly.

    Each grid point (a binary float) and the oracle are carried as rationals,
    so the result is free of the rounding that swamps a floating-point
    evaluation when the individual terms are large (``|u|^3 ~ 1e9`` at
    ``r = 1e-3``).  Potentials that are not rational in ``r`` enter through
    their floating-point values.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise DomainError("the equation is singular at r = 0")
    out = np.empty_like(r)
    for i, x in enumerate(r):
        R = Fraction(x)
        u, up, upp = _oracle_exact(kind, R, param)
        out[i] = float(_residual(spec.n, R, u, up, upp, _h_exact(spec.h, R)))
    return out


def reconstruct_w(traj: Trajectory) -> np.ndarray:
    """Conformal factor ``w(r) = int_0^r u`` at the trajectory nodes.

    Returns an ``(N + 1, 2)`` array of ``(r, w)`` starting with ``(0, 0)``.
    Each node interval is integrated exactly against the cubic Hermite
    interpolant of ``(u, u')``; the stretch ``[0, r0]`` uses the startup
    series.
    """
    if len(traj.r) == 0:
        return np.zeros((1, 2))
    if traj.status.tag == "BlowUp":
        raise DomainError("cannot reconstruct w from a blow-up trajectory")
    if traj.status.tag != "ReachedHorizon":
        raise DomainError(f"trajectory ended with {traj.status.tag}")
    r, u, up = traj.r, traj.u, traj.up
    r0 = r[0]
    # series u = alpha r + beta r^2 fitted to the first node
    alpha = traj.spec.alpha
    beta = (u[0] - alpha * r0) / r0**2
    w0 = alpha * r0**2 / 2 + beta * r0**3 / 3
    dr = np.diff(r)
    pieces = dr / 2 * (u[:-1] + u[1:]) + dr**2 / 12 * (up[:-1] - up[1:])
    w = np.concatenate([[0.0, w0], w0 + np.cumsum(pieces)])
    return np.column_stack([np.concatenate([[0.0], r]), w])
