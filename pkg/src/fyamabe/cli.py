"""Command-line front end.

Exit codes: 0 success, 1 a scenario check failed, 2 usage error (including
grids that violate a scenario's hypotheses), 3 numerical domain error.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from .experiments import (HypothesisError, load_scenario, run_scenario, sweep_alpha,
                          sweep_to_csv)
from .model import DomainError, PotentialSpec, ProblemSpec

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3

TABULAR = {"integrate", "sweep", "regions", "vform", "figure"}


class UsageError(Exception):
    pass


# argument parsing
# --------------------------------------------------------------------------


def parse_potential(text: str, n: Optional[int] = None,
                    alpha: Optional[float] = None) -> PotentialSpec:
    """Parse ``zero|const:<c>|pow:<c>,<p>|linexact|bounded|table:<path>``."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "zero" and not arg:
            return PotentialSpec.zero()
        if kind == "const":
            return PotentialSpec.constant(float(arg))
        if kind == "pow":
            c, p = (float(x) for x in arg.split(","))
            return PotentialSpec.power_law(c, p)
        if kind == "linexact" and not arg:
            if n is None or alpha is None:
                raise UsageError("--h linexact needs --n and --alpha")
            return PotentialSpec.linear_exact(alpha, n)
        if kind == "bounded" and not arg:
            if n is None:
                raise UsageError("--h bounded needs --n")
            return PotentialSpec.bounded_below(n)
        if kind == "table" and arg:
            return PotentialSpec.tabulated(_read_table(arg))
    except (ValueError, OSError) as exc:
        raise UsageError(f"bad --h {text!r}: {exc}") from None
    raise UsageError(f"bad --h {text!r}; expected zero|const:<c>|pow:<c>,<p>|"
                     "linexact|bounded|table:<path>")


def _read_table(path: str):
    """Two comma-separated columns ``r, h``; a header line is skipped."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        float(lines[0].split(",")[0])
    except (ValueError, IndexError):
        lines = lines[1:]
    data = np.loadtxt(io.StringIO("".join(lines)), delimiter=",", ndmin=2)
    if data.shape[1] != 2:
        raise ValueError("table needs exactly two columns r,h")
    return data.tolist()


def _add_spec_args(p: argparse.ArgumentParser, alpha_required: bool = True):
    p.add_argument("--spec", help="problem JSON file (flags override its keys)")
    p.add_argument("--n", type=int)
    if alpha_required:
        p.add_argument("--alpha", type=float)
    p.add_argument("--h", default=None,
                   help="zero | const:<c> | pow:<c>,<p> | linexact | bounded | table:<path>")
    p.add_argument("--r-max", "--rmax", dest="r_max", type=float)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--abs-tol", dest="abs_tol", type=float)
    p.add_argument("--r0", type=float)


def _common(p: argparse.ArgumentParser):
    p.add_argument("-o", "--output", help="output path (default: standard output)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--backend", choices=("python", "cython"),
                   help="integration kernel (default: compiled if available)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fyamabe",
        description="Radial solutions of the flat conformal f-Yamabe equation.")
    sub = parser.add_subparsers(dest="verb", metavar="verb", required=True)

    p = sub.add_parser("integrate", help="integrate one problem; CSV r,u,uprime")
    _add_spec_args(p)
    _common(p)
    p.add_argument("--events", metavar="PATH", help="also write the event log (JSON) here")

    p = sub.add_parser("sweep", help="scan alpha; CSV alpha,status,R_est,u_rmax")
    _add_spec_args(p, alpha_required=False)
    _common(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--alpha-range", metavar="START:STOP:STEP",
                   help="inclusive arithmetic range")
    g.add_argument("--alphas", metavar="A,B,...", help="explicit list")
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("regions", help="phase-plane bookkeeping along a trajectory")
    _add_spec_args(p)
    _common(p)

    p = sub.add_parser("vform", help="integrate v = r u; CSV r,v,vprime,E")
    _add_spec_args(p)
    _common(p)
    p.add_argument("--checkpoints", default="1,10,100",
                   help="radii for the energy-identity terms (JSON output)")

    p = sub.add_parser("estimates", help="integral inequality checks (JSON)")
    _add_spec_args(p)
    _common(p)
    p.add_argument("--profile", choices=("trivial", "trajectory"), default="trivial",
                   help="w = -2r/(1+r^2) or the integrated solution")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--rhos", default="1,2,4,8,16", help="radii for the decay fit")

    p = sub.add_parser("verify", help="run a scenario file (JSON report)")
    p.add_argument("--scenario", required=True)
    p.add_argument("--workers", type=int, default=None)
    _common(p)

    p = sub.add_parser("figure", help="CSV r,phi,psi,h1,h2,ubar1")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--h", default="zero")
    p.add_argument("--r-min", "--rmin", dest="r_min", type=float, default=0.05)
    p.add_argument("--r-max", "--rmax", dest="r_max", type=float, default=5.0)
    p.add_argument("--points", type=int, default=200)
    _common(p)
    return parser


def spec_from_args(args, alpha: Optional[float] = None) -> ProblemSpec:
    doc = {}
    if args.spec:
        try:
            with open(args.spec, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read --spec: {exc}") from None
    for key in ("n", "r_max", "rel_tol", "abs_tol", "r0"):
        if getattr(args, key, None) is not None:
            doc[key] = getattr(args, key)
    if alpha is not None:
        doc["alpha"] = alpha
    elif getattr(args, "alpha", None) is not None:
        doc["alpha"] = args.alpha
    if "n" not in doc:
        raise UsageError("--n is required")
    if "alpha" not in doc:
        raise UsageError("--alpha is required")
    if args.h is not None:
        doc["h"] = parse_potential(args.h, doc["n"], doc["alpha"]).to_json()
    try:
        return ProblemSpec.from_json(doc)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid problem: {exc}") from None


# output helpers
# --------------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def _csv(header, rows, status_line: Optional[str] = None, gap_status=None) -> str:
    """CSV with ``%.17g`` numbers; rows holding non-finite numbers are
    replaced by ``gap_status(row)`` (or dropped if it is None)."""
    lines = [",".join(header)]
    for row in rows:
        nums = [x for x in row if isinstance(x, (float, np.floating))]
        if all(math.isfinite(x) for x in nums):
            lines.append(",".join(f"{x:.17g}" if isinstance(x, (float, np.floating)) else str(x)
                                  for x in row))
        elif gap_status is not None:
            lines.append(gap_status(row))
    if status_line:
        lines.append(status_line)
    return "\n".join(lines) + "\n"


def _emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# verbs
# --------------------------------------------------------------------------


def _cmd_integrate(args, fmt):
    from .integrator import events_to_json, integrate

    spec = spec_from_args(args)
    traj, events = integrate(spec, events=True, backend=args.backend)
    if args.events:
        _emit(events_to_json(events) + "\n", args.events)
    if fmt == "csv":
        return traj.to_csv(), EXIT_OK
    return dumps({"spec": spec.to_json(), "status": traj.status.to_json(),
                  "samples": traj.samples, "events": [e.to_json() for e in events]}), EXIT_OK


def _alpha_list(args):
    try:
        if args.alphas is not None:
            return [float(x) for x in args.alphas.split(",") if x.strip()]
        start, stop, step = (float(x) for x in args.alpha_range.split(":"))
    except ValueError:
        raise UsageError("alphas must be numbers (START:STOP:STEP or A,B,...)") from None
    if step <= 0 or not all(map(math.isfinite, (start, stop, step))):
        raise UsageError("--alpha-range needs a positive finite step")
    count = math.floor((stop - start) / step + 1e-9) + 1
    return [start + i * step for i in range(max(count, 0))]


def _cmd_sweep(args, fmt):
    alphas = _alpha_list(args)
    if args.h == "linexact":
        raise UsageError("--h linexact depends on alpha and cannot be swept")
    # validate the shared part of the problem with a placeholder slope
    base = spec_from_args(args, alpha=1.0)
    rows = sweep_alpha(base.n, base.h, alphas, r_max=base.r_max, rel_tol=base.rel_tol,
                       abs_tol=base.abs_tol, workers=args.workers)
    if fmt == "csv":
        return sweep_to_csv(rows), EXIT_OK
    keys = ("alpha", "status", "R_est", "u_rmax")
    return dumps([dict(zip(keys, row)) for row in rows]), EXIT_OK


def _cmd_regions(args, fmt):
    from .integrator import integrate
    from .regions import region_report

    spec = spec_from_args(args)
    traj, events = integrate(spec, backend=args.backend)
    rep = region_report(traj, events)
    header = ("r", "u", "P", "Q", "phi", "psi", "region", "in_gamma")
    if fmt == "json":
        return dumps({"spec": spec.to_json(), "status": traj.status.to_json(),
                      "h1_crossings": rep.h1_crossings, "h2_crossings": rep.h2_crossings,
                      "rows": [dict(zip(header, row)) for row in
                               zip(rep.r, rep.u, rep.P, rep.Q, rep.phi, rep.psi,
                                   rep.region.tolist(), rep.in_gamma.tolist())]}), EXIT_OK
    # phi and psi are undefined on I^h: leave those fields empty
    lines = [",".join(header)]
    for r, u, P, Q, phi, psi, reg, g in zip(rep.r, rep.u, rep.P, rep.Q, rep.phi, rep.psi,
                                            rep.region, rep.in_gamma):
        if not all(math.isfinite(x) for x in (r, u, P, Q)):
            continue
        fields = [f"{x:.17g}" for x in (r, u, P, Q)]
        fields += ["" if not math.isfinite(x) else f"{x:.17g}" for x in (phi, psi)]
        fields += [str(reg), str(int(g))]
        lines.append(",".join(fields))
    lines.append(traj.status.status_line())
    return "\n".join(lines) + "\n", EXIT_OK


def _float_list(text: str, flag: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{flag} must be a comma-separated list of numbers") from None


def _cmd_vform(args, fmt):
    from .vform import energy_identity_terms, integrate_v

    spec = spec_from_args(args)
    vtraj = integrate_v(spec, backend=args.backend)
    if fmt == "csv":
        return vtraj.to_csv(), EXIT_OK
    terms = {}
    for R in _float_list(args.checkpoints, "--checkpoints"):
        if vtraj.r[0] <= R <= vtraj.r[-1]:
            terms[f"{R:.17g}"] = energy_identity_terms(vtraj, R)
    return dumps({"spec": spec.to_json(), "status": vtraj.status.to_json(),
                  "energy": terms, "samples": vtraj.samples}), EXIT_OK


def _cmd_estimates(args, fmt):
    from . import estimates as est
    from .integrator import integrate

    if args.n is None:
        raise UsageError("--n is required")
    n = args.n
    if args.profile == "trivial":
        w = est.trivial_profile()
        source = {"profile": "trivial"}
    else:
        spec = spec_from_args(args)
        traj, _ = integrate(spec, events=False, backend=args.backend)
        w = est.trajectory_profile(traj)
        source = {"profile": "trajectory", "spec": spec.to_json(),
                  "status": traj.status.to_json()}
        if 2 * args.rho > traj.r[-1]:
            raise DomainError(f"support [0, {2 * args.rho:g}] exceeds the trajectory "
                              f"(ends at r={traj.r[-1]:g})")
    tf = est.make_test_function(args.rho, args.k, n)
    mp = est.lemma_mp_check(w, args.rho, args.epsilon, tf, n)
    mp2 = est.lemma_mp2_check(w, args.rho, args.delta, tf, n)
    decay = est.rescaling_decay(est.make_test_function(1.0, args.k, n), n,
                                _float_list(args.rhos, "--rhos"), args.epsilon, args.delta)
    doc = {"source": source, "n": n, "rho": args.rho, "k": args.k,
           "lemma_mp": mp.to_json(), "lemma_mp2": mp2.to_json(),
           "rescaling": {"rhos": decay.rhos, "values": decay.values, "slope": decay.slope}}
    if fmt == "csv":
        rows = [("lemma_mp", mp.lhs, mp.rhs, int(mp.holds), mp.quadrature_error),
                ("lemma_mp2", mp2.lhs, mp2.rhs, int(mp2.holds), mp2.quadrature_error)]
        return _csv(("check", "lhs", "rhs", "holds", "quadrature_error"), rows), EXIT_OK
    return dumps(doc), EXIT_OK


def _cmd_verify(args, fmt):
    try:
        scenario = load_scenario(args.scenario)
        scenario.specs()
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise UsageError(f"cannot load scenario: {exc}") from None
    report = run_scenario(scenario, workers=args.workers)
    text = report.to_csv() if fmt == "csv" else dumps(report.to_json())
    if not report.passed:
        for row in report.failures:
            print(f"FAIL n={row['n']} alpha={row['alpha']:g} h={row['h']}: {row['detail']}",
                  file=sys.stderr)
    return text, EXIT_OK if report.passed else EXIT_FAIL


def _cmd_figure(args, fmt):
    from .regions import figure1_table

    if args.n < 3:
        raise UsageError("figure needs --n >= 3")
    if not 0 < args.r_min < args.r_max or args.points < 2:
        raise UsageError("need 0 < --r-min < --r-max and --points >= 2")
    h = parse_potential(args.h, args.n)
    table = figure1_table(args.n, h, np.geomspace(args.r_min, args.r_max, args.points))
    header = ("r", "phi", "psi", "h1", "h2", "ubar1")
    if fmt == "json":
        return dumps([dict(zip(header, row)) for row in table]), EXIT_OK
    return _csv(header, [tuple(row) for row in table],
                gap_status=lambda row: f"# status=InIupper r={row[0]:.17g}"), EXIT_OK


_COMMANDS = {
    "integrate": _cmd_integrate,
    "sweep": _cmd_sweep,
    "regions": _cmd_regions,
    "vform": _cmd_vform,
    "estimates": _cmd_estimates,
    "verify": _cmd_verify,
    "figure": _cmd_figure,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    fmt = args.format or ("csv" if args.verb in TABULAR else "json")
    try:
        text, code = _COMMANDS[args.verb](args, fmt)
    except (UsageError, HypothesisError) as exc:
        print(f"fyamabe {args.verb}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"fyamabe {args.verb}: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    try:
        _emit(text, args.output)
    except OSError as exc:
        print(f"fyamabe: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
