"""Grid experiments that test the qualitative theorems at desk scale.

A :class:`Scenario` is a grid ``n x alpha x h`` with an expectation.  The
runner first checks that every grid point satisfies the hypotheses of the
statement under test (raising :class:`HypothesisError` otherwise), then
integrates each point and records a per-row verdict.  Verdicts are

``pass``
    the row agrees with the expectation;
``FAIL``
    the row contradicts it (a bug, or a horizon that is too short);
``consistent (non-global)``
    a run the statement does not constrain;
``recorded``
    exploratory rows outside the statement's hypotheses.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .integrator import integrate
from .model import DomainError, PotentialSpec, ProblemSpec, eval_h, oracle_eval
from .vform import energy_identity_terms, integrate_v

__all__ = [
    "EXPECTATIONS",
    "HypothesisError",
    "Scenario",
    "ScenarioReport",
    "check_hypotheses",
    "run_nonexistence",
    "run_negativity",
    "run_proposition",
    "run_existence",
    "run_oracle",
    "run_scenario",
    "search_crossing_witness",
    "sweep_alpha",
    "sweep_to_csv",
    "load_scenario",
]

EXPECTATIONS = ("AllBlowUp", "AllGlobalNegativeInBand", "CrossingImpliesBlowUp",
                "OracleMatch", "GlobalImpliesNegative")

HYPOTHESIS_GRID_POINTS = 200
ORACLE_CAP = 10.0  # |u| above which blow-up runs are not compared

DEFAULT_TOLERANCES = {
    "r_max": 100.0,
    "rel_tol": 1e-10,
    "abs_tol": 1e-12,
    "band_slack": 1e-12,
    "energy_tol": 1e-6,
    "energy_checkpoints": [1.0, 10.0, 100.0],
    "confirm_fraction": 0.1,
    "confirm_r_max": 1000.0,
    "oracle_tol": 1e-6,
    "exploratory": False,
}


class HypothesisError(ValueError):
    """A grid point violates the hypotheses of the statement under test."""


# scenarios
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """A grid of problems and the outcome they are expected to show.

    ``hs`` holds potential documents in the JSON form of
    :meth:`PotentialSpec.to_json`; parameters that depend on the grid point
    (the ``n`` of ``bounded_below``, the ``alpha``/``n`` of ``linear_exact``)
    may be omitted and are then filled in per point.
    """

    name: str
    expectation: str
    ns: tuple
    alphas: tuple
    hs: tuple
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.expectation not in EXPECTATIONS:
            raise ValueError(f"unknown expectation {self.expectation!r}; "
                             f"choose from {', '.join(EXPECTATIONS)}")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        hs = tuple(h.to_json() if isinstance(h, PotentialSpec) else dict(h) for h in self.hs)
        object.__setattr__(self, "hs", hs)

    def tol(self, key: str):
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key])

    def specs(self) -> list[ProblemSpec]:
        """Grid points in a fixed order (``n``, then ``h``, then ``alpha``)."""
        out = []
        for n in self.ns:
            for hdoc in self.hs:
                for a in self.alphas:
                    h = PotentialSpec.from_json(hdoc, n=n, alpha=a)
                    out.append(ProblemSpec(n, a, h, r_max=self.tol("r_max"),
                                           rel_tol=self.tol("rel_tol"),
                                           abs_tol=self.tol("abs_tol")))
        return out

    def to_json(self) -> dict:
        return {"name": self.name, "expectation": self.expectation,
                "n": list(self.ns), "alpha": list(self.alphas), "h": list(self.hs),
                "tolerances": dict(self.tolerances)}

    @classmethod
    def from_json(cls, doc: dict) -> "Scenario":
        try:
            return cls(name=doc.get("name", "scenario"), expectation=doc["expectation"],
                       ns=_as_list(doc["n"]), alphas=_as_list(doc["alpha"]),
                       hs=_as_list(doc.get("h", {"kind": "zero"})),
                       tolerances=doc.get("tolerances", {}))
        except KeyError as exc:
            raise ValueError(f"scenario document lacks {exc.args[0]!r}") from None


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


# hypothesis guards
# --------------------------------------------------------------------------


def _symbolic_sign(h: PotentialSpec):
    """Exact sign of ``h`` on ``r > 0`` as (is_nonneg, is_nonpos), or None."""
    if h.kind == "zero":
        return True, True
    if h.kind == "constant" or h.kind == "power":
        c = h.params[0]
        return c >= 0, c <= 0
    if h.kind == "bounded_below":
        return False, True
    return None


def _lower_bound_exact(h: PotentialSpec, n: int):
    """Exact truth of ``h(r) >= -(n-1)/r`` for all ``r > 0``, or None."""
    sign = _symbolic_sign(h)
    if sign is not None and sign[0]:
        return True
    if h.kind == "power":
        c, p = h.params
        return p == -1 and -c <= n - 1
    if h.kind == "constant":
        return False
    if h.kind == "bounded_below":
        return h.params[0] <= n  # (m-1) r <= (n-1)(1+r) for all r
    return None


def _sample_grid(spec: ProblemSpec) -> np.ndarray:
    dlo, dhi = spec.h.domain
    lo, hi = max(spec.r0, dlo), min(spec.r_max, dhi)
    return np.geomspace(lo, hi, HYPOTHESIS_GRID_POINTS)


def check_hypotheses(expectation: str, spec: ProblemSpec, exploratory: bool = False):
    """Raise :class:`HypothesisError` if ``spec`` lies outside the statement's scope.

    Symbolic potentials are decided exactly; the others are sampled on a
    200-point log grid over ``[r0, r_max]``.
    """
    n, h, a = spec.n, spec.h, spec.alpha
    where = f"n={n}, alpha={a:g}, h={h.describe()}"

    def fail(msg):
        raise HypothesisError(f"{msg} ({where})")

    def lower_bound():
        exact = _lower_bound_exact(h, n)
        if exact is None:
            r = _sample_grid(spec)
            exact = bool(np.all(eval_h(h, r) >= -(n - 1) / r))
        if not exact:
            fail("h(r) >= -(n-1)/r is violated")

    def sign(nonneg: bool):
        s = _symbolic_sign(h)
        if s is not None:
            ok = s[0] if nonneg else s[1]
        else:
            hv = eval_h(h, _sample_grid(spec))
            ok = bool(np.all(hv >= 0) if nonneg else np.all(hv <= 0))
        if not ok:
            fail("h >= 0 is violated" if nonneg else "h <= 0 is violated")

    if expectation == "AllBlowUp":
        if n < 3 or a <= 0:
            fail("needs n >= 3 and alpha > 0")
        lower_bound()
    elif expectation == "GlobalImpliesNegative":
        if n < 3 or a >= 0:
            fail("needs n >= 3 and alpha < 0")
        lower_bound()
    elif expectation == "CrossingImpliesBlowUp":
        if n < 4:
            fail("needs n >= 4")
        sign(nonneg=True)
    elif expectation == "AllGlobalNegativeInBand":
        if (n != 4 and not exploratory) or a >= 0:
            fail("needs n = 4 and alpha < 0")
        if spec.r_max < 100:
            fail("needs r_max >= 100")
        sign(nonneg=False)
    elif expectation == "OracleMatch":
        if _oracle_for(spec) is None:
            fail("no closed-form solution for this problem")


def _oracle_for(spec: ProblemSpec):
    """Closed-form ``u(r)`` for the problem, or None."""
    if spec.h.kind == "zero":
        a = -spec.alpha / 2
        return lambda r: oracle_eval("trivial", r, a)[0]
    if spec.h.kind == "linear_exact" and spec.h.params == (spec.alpha, spec.n):
        return lambda r: oracle_eval("linear", r, spec.alpha)[0]
    return None


# reports
# --------------------------------------------------------------------------

_CSV_FIELDS = ("n", "alpha", "h", "status", "R_est", "sign", "uncertainty",
               "u_end", "verdict", "detail")


@dataclass
class ScenarioReport:
    name: str
    expectation: str
    rows: list
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row["verdict"] != "FAIL" for row in self.rows)

    @property
    def failures(self) -> list:
        return [row for row in self.rows if row["verdict"] == "FAIL"]

    def to_json(self) -> dict:
        return {"name": self.name, "expectation": self.expectation,
                "passed": self.passed, "rows": self.rows, "notes": self.notes}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_FIELDS)
        for row in self.rows:
            writer.writerow([_fmt(row.get(k)) for k in _CSV_FIELDS])
        return buf.getvalue()


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _base_row(spec: ProblemSpec, traj) -> dict:
    st = traj.status
    return {"n": spec.n, "alpha": spec.alpha, "h": spec.h.describe(), "status": st.tag,
            "R_est": st.R_est, "sign": st.sign, "uncertainty": st.uncertainty,
            "u_end": float(traj.u[-1]), "verdict": "pass", "detail": ""}


def _prepare(scenario: Scenario, expectation: str) -> list[ProblemSpec]:
    if scenario.expectation != expectation:
        raise ValueError(f"scenario {scenario.name!r} expects {scenario.expectation}, "
                         f"not {expectation}")
    specs = scenario.specs()
    for spec in specs:
        check_hypotheses(expectation, spec, scenario.tol("exploratory"))
    return specs


def _map(fn, items, workers: Optional[int]):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _sorted(rows):
    return sorted(rows, key=lambda row: (row["n"], row["h"], row["alpha"]))


# runners
# --------------------------------------------------------------------------


def _growth_trend(traj) -> str:
    u = np.abs(traj.u)
    tail = u[-max(len(u) // 10, 2):]
    return "growing" if tail[-1] > tail[0] else "not growing"


def run_nonexistence(scenario: Scenario, workers: Optional[int] = None) -> ScenarioReport:
    """Every positive-slope start must blow up before ``r_max``."""
    specs = _prepare(scenario, "AllBlowUp")

    def one(spec):
        traj, _ = integrate(spec, events=False)
        row = _base_row(spec, traj)
        st = traj.status
        if st.tag != "BlowUp" or not math.isfinite(st.R_est or math.nan):
            row["verdict"] = "FAIL"
            row["detail"] = f"no blow-up by r={traj.r[-1]:.6g}; |u| {_growth_trend(traj)}"
        return row

    return ScenarioReport(scenario.name, scenario.expectation, _sorted(_map(one, specs, workers)))


def run_negativity(scenario: Scenario, workers: Optional[int] = None) -> ScenarioReport:
    """A run that reaches the horizon must stay strictly negative."""
    specs = _prepare(scenario, "GlobalImpliesNegative")

    def one(spec):
        traj, _ = integrate(spec, events=False)
        row = _base_row(spec, traj)
        if traj.status.is_global:
            pos = np.nonzero(traj.u >= 0)[0]
            if len(pos):
                row["verdict"] = "FAIL"
                row["detail"] = f"u >= 0 at r={traj.r[pos[0]]:.6g}"
        else:
            row["verdict"] = "consistent (non-global)"
            changes = np.nonzero(np.diff(np.sign(traj.u)) != 0)[0]
            if len(changes):
                row["detail"] = f"sign change at r~{traj.r[changes[0] + 1]:.6g} before termination"
        return row

    return ScenarioReport(scenario.name, scenario.expectation, _sorted(_map(one, specs, workers)))


def _has_crossing(events) -> bool:
    return any(e.kind == "CrossH1WithNonposSlope" for e in events)


def run_proposition(scenario: Scenario, workers: Optional[int] = None) -> ScenarioReport:
    """A crossing of ``h1`` with ``u' <= 0`` must be followed by blow-up to ``-inf``."""
    specs = _prepare(scenario, "CrossingImpliesBlowUp")

    def one(spec):
        traj, events = integrate(spec)
        row = _base_row(spec, traj)
        cross = [e for e in events if e.kind == "CrossH1WithNonposSlope"]
        if not cross:
            row["detail"] = "no crossing (vacuous)"
            return row
        row["detail"] = f"crossing at r={cross[0].r:.6g}"
        st = traj.status
        if not (st.tag == "BlowUp" and st.sign == -1):
            row["verdict"] = "FAIL"
            row["detail"] += f"; ended {st.tag}"
        return row

    return ScenarioReport(scenario.name, scenario.expectation, _sorted(_map(one, specs, workers)))


def search_crossing_witness(n: int, h: PotentialSpec, *, r_max: float = 100.0,
                            alpha_range: tuple = (-100.0, -1e-4), points: int = 13,
                            bisections: int = 30) -> Optional[float]:
    """Find ``alpha < 0`` whose trajectory crosses ``h1`` with ``u' <= 0``.

    Scans ``alpha`` log-uniformly over ``alpha_range``, then bisects (in
    ``log|alpha|``) between the first crossing point and its non-crossing
    neighbour.  Returns the crossing end of the final bracket, or None if
    the scan finds no crossing.
    """
    lo, hi = sorted(abs(a) for a in alpha_range)
    mags = np.geomspace(hi, lo, points)

    def crosses(mag):
        _, events = integrate(ProblemSpec(n, -float(mag), h, r_max=r_max))
        return _has_crossing(events)

    flags = [crosses(m) for m in mags]
    if not any(flags):
        return None
    i = flags.index(True)
    if i == 0:
        return -float(mags[0])
    a, b = math.log(mags[i - 1]), math.log(mags[i])  # a: no crossing, b: crossing
    for _ in range(bisections):
        mid = 0.5 * (a + b)
        if crosses(math.exp(mid)):
            b = mid
        else:
            a = mid
    return -math.exp(b)


def run_existence(scenario: Scenario, workers: Optional[int] = None) -> ScenarioReport:
    """All runs global with ``-2/r < u < 0`` and a vanishing energy identity.

    A fraction ``confirm_fraction`` of the grid (the points with the
    smallest ``|h(confirm_r_max)|``, which are the cheapest to integrate) is
    rerun to ``confirm_r_max``.  With ``exploratory`` set, ``n != 4`` rows are
    recorded but not asserted.
    """
    specs = _prepare(scenario, "AllGlobalNegativeInBand")
    slack = scenario.tol("band_slack")
    etol = scenario.tol("energy_tol")
    checkpoints = scenario.tol("energy_checkpoints")

    def band(traj):
        r, u = traj.r, traj.u
        bad = np.nonzero(~((u > -2 / r - slack) & (u < slack)))[0]
        return None if len(bad) == 0 else float(r[bad[0]])

    def one(spec):
        traj, _ = integrate(spec, events=False)
        row = _base_row(spec, traj)
        problems = []
        if not traj.status.is_global:
            problems.append(f"ended {traj.status.tag} at r={traj.r[-1]:.6g}")
        r_bad = band(traj)
        if r_bad is not None:
            problems.append(f"left the band at r={r_bad:.6g}")
        if traj.status.is_global:
            vtraj = integrate_v(spec)
            worst = 0.0
            for R in checkpoints:
                if R > vtraj.r[-1]:
                    continue
                terms = energy_identity_terms(vtraj, R)
                scale = 1 + sum(abs(terms[k]) for k in ("boundary", "integral", "potential"))
                worst = max(worst, abs(terms["E"]) / scale)
            row["energy"] = worst
            if worst > etol:
                problems.append(f"energy residual {worst:.3g} > {etol:g}")
        row["detail"] = "; ".join(problems)
        if problems:
            row["verdict"] = "FAIL"
        if spec.n != 4:
            row["verdict"] = "recorded"
        return row

    rows = _map(one, specs, workers)

    frac = scenario.tol("confirm_fraction")
    R2 = scenario.tol("confirm_r_max")
    notes = []
    if frac > 0 and specs:
        count = max(1, math.ceil(frac * len(specs)))
        order = sorted(range(len(specs)), key=lambda i: (abs(eval_h(specs[i].h, R2)),
                                                         abs(specs[i].alpha)))
        for i in order[:count]:
            spec = specs[i].replace(r_max=R2)
            traj, _ = integrate(spec, events=False)
            ok = traj.status.is_global and band(traj) is None
            notes.append(f"confirmation n={spec.n} alpha={spec.alpha:g} h={spec.h.describe()} "
                         f"to r={R2:g}: {'pass' if ok else 'FAIL ' + traj.status.tag}")
            if not ok and spec.n == 4:
                rows[i]["verdict"] = "FAIL"
                rows[i]["detail"] = (rows[i]["detail"] + "; " if rows[i]["detail"] else "") \
                    + f"confirmation to r={R2:g} failed"

    return ScenarioReport(scenario.name, scenario.expectation, _sorted(rows), notes)


def run_oracle(scenario: Scenario, workers: Optional[int] = None) -> ScenarioReport:
    """Compare against the closed-form solution where one is known."""
    specs = _prepare(scenario, "OracleMatch")
    tol = scenario.tol("oracle_tol")

    def one(spec):
        traj, _ = integrate(spec, events=False)
        row = _base_row(spec, traj)
        exact = _oracle_for(spec)
        try:
            ref = exact(traj.r)
        except DomainError:
            ok = traj.r < 1 / math.sqrt(abs(spec.alpha) / 2)
            ref = np.full_like(traj.r, np.nan)
            ref[ok] = exact(traj.r[ok])
        finite = np.isfinite(ref)
        err = np.abs(traj.u[finite] - ref[finite]) / np.maximum(np.abs(ref[finite]), 1e-300)
        # near a pole a fixed offset in its position dominates: skip |u| > cap
        err = err[np.abs(ref[finite]) <= ORACLE_CAP]
        worst = float(err.max()) if len(err) else 0.0
        row["detail"] = f"max rel err {worst:.3g}"
        if worst > tol:
            row["verdict"] = "FAIL"
        return row

    return ScenarioReport(scenario.name, scenario.expectation, _sorted(_map(one, specs, workers)))


_RUNNERS = {
    "AllBlowUp": run_nonexistence,
    "GlobalImpliesNegative": run_negativity,
    "CrossingImpliesBlowUp": run_proposition,
    "AllGlobalNegativeInBand": run_existence,
    "OracleMatch": run_oracle,
}


def run_scenario(scenario: Scenario, workers: Optional[int] = None) -> ScenarioReport:
    return _RUNNERS[scenario.expectation](scenario, workers)


# sweeps
# --------------------------------------------------------------------------


def sweep_alpha(n: int, h: PotentialSpec, alphas: Iterable[float], *, r_max: float = 10.0,
                rel_tol: float = 1e-10, abs_tol: float = 1e-12,
                workers: Optional[int] = None) -> list[tuple]:
    """Rows ``(alpha, status, R_est, u(r_max))`` sorted by ``alpha``.

    ``alpha = 0`` (the zero solution) is skipped.  ``R_est`` is None for
    runs that reach ``r_max`` and ``u(r_max)`` is None for the others.
    """
    values = sorted({float(a) for a in alphas if a != 0})

    def one(a):
        spec = ProblemSpec(n, a, h, r_max=r_max, rel_tol=rel_tol, abs_tol=abs_tol)
        traj, _ = integrate(spec, events=False)
        st = traj.status
        u_end = float(traj.u[-1]) if st.is_global else None
        return (a, st.tag, st.R_est, u_end)

    return _map(one, values, workers)


def sweep_to_csv(rows: Sequence[tuple]) -> str:
    lines = ["alpha,status,R_est,u_rmax"]
    lines += [",".join(_fmt(x) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return Scenario.from_json(json.load(fh))

