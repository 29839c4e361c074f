"""Command-line driver.

Exit codes: 0 success and the checked claim holds, 2 bad input, 3 numerical
failure, 4 the run finished but the checked claim does not hold.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
import numpy as np

from . import discrete, potential, records, solver, stokes
from .errors import NumericalError, SpectralError, ValidationError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_CLAIM = 4

DEFAULT_REGION = "-0.2,2,-1.2,1.2"
DEFAULT_LIMIT_REGION = "-0.2,1.6,-1.6,1.6"
DEFAULT_H_LIST = "0.1,0.05,0.025"
CONJ_PAIRING_TOL = 1e-6

logger = logging.getLogger("yspec")


# ---------------------------------------------------------------------------
# argument parsing

def _region(text: str) -> solver.SearchRegion:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ValidationError("BAD_REGION", f"cannot parse region {text!r}") from exc
    if len(vals) != 4:
        raise ValidationError("BAD_REGION", f"region needs re_lo,re_hi,im_lo,im_hi, got {text!r}")
    return solver.SearchRegion(*vals)


def _grid(text: str) -> tuple[int, int]:
    try:
        nx, ny = (int(v) for v in text.lower().split("x"))
    except ValueError as exc:
        raise ValidationError("BAD_PARAMETER", f"grid must look like 200x200, got {text!r}") from exc
    if nx < 2 or ny < 2:
        raise ValidationError("BAD_PARAMETER", f"grid resolution must be >= 2 in both directions, got {text!r}")
    return nx, ny


def _positive(name: str, v: float) -> float:
    if not (np.isfinite(v) and v > 0):
        raise ValidationError("BAD_PARAMETER", f"{name} must be positive, got {v}")
    return float(v)


def _threads(arg: int | None) -> int:
    if arg is None:
        env = os.environ.get("YSPEC_THREADS")
        if env is None:
            return 1
        try:
            arg = int(env)
        except ValueError as exc:
            raise ValidationError("BAD_PARAMETER", f"YSPEC_THREADS must be an integer, got {env!r}") from exc
    if arg < 0:
        raise ValidationError("BAD_PARAMETER", f"threads must be >= 0, got {arg}")
    return arg or (os.cpu_count() or 1)


def _load_potential(args) -> tuple[potential.PiecewiseLinearPotential, dict]:
    if args.potential is not None:
        if args.preset is not None:
            raise ValidationError("BAD_PARAMETER", "give either --preset or --potential, not both")
        return potential.load_potential(args.potential), {"potential": str(args.potential)}
    name = args.preset or "airy"
    if name not in potential.PRESETS:
        raise ValidationError("BAD_PARAMETER", f"unknown preset {name!r}; choose from {sorted(potential.PRESETS)}")
    if name == "jump":
        if args.delta is None:
            raise ValidationError("BAD_PARAMETER", "preset jump needs --delta")
        return potential.jump(args.delta), {"preset": name, "delta": float(args.delta)}
    if args.delta is not None:
        raise ValidationError("BAD_PARAMETER", f"--delta only applies to the jump preset, not {name!r}")
    return potential.PRESETS[name](), {"preset": name}


def _add_common(p: argparse.ArgumentParser, with_potential: bool = True) -> None:
    if with_potential:
        p.add_argument("--preset", choices=sorted(potential.PRESETS), help="named potential (default airy, V = ix)")
        p.add_argument("--delta", type=float, help="jump size for the jump preset")
        p.add_argument("--potential", help="JSON file of segment records")
    p.add_argument("--format", dest="fmt", choices=records.FORMATS, default="csv")
    p.add_argument("--output", "-o", help="output file (default: standard output)")
    p.add_argument("--threads", type=int, help="worker threads, 0 = all cores (fallback: YSPEC_THREADS)")
    p.add_argument("--verbose", "-v", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="yspec", allow_abbrev=False,
                                     description="Semiclassical spectra of piecewise-linear complex "
                                     "Schrodinger operators.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("skeleton", allow_abbrev=False, help="limit set (union of Y-figures) of a potential")
    _add_common(p)
    p.add_argument("--r-trunc", type=float, default=stokes.DEFAULT_R_TRUNC, help="truncation radius")
    p.add_argument("--step", type=float, help="tracing step in normalised units")

    p = sub.add_parser("spectrum", allow_abbrev=False, help="determinant zeros and containment check")
    _add_common(p)
    p.add_argument("--h", type=float, required=True, help="semiclassical parameter")
    p.add_argument("--eps", type=float, default=0.05, help="neighbourhood radius for containment")
    p.add_argument("--N", dest="n_bound", type=float, default=1.5, help="check eigenvalues with |lambda| <= N")
    p.add_argument("--region", default=DEFAULT_REGION, help="re_lo,re_hi,im_lo,im_hi")
    p.add_argument("--min-box", type=float, default=solver.MIN_BOX)
    p.add_argument("--newton-tol", type=float, default=solver.NEWTON_TOL)

    p = sub.add_parser("limits", allow_abbrev=False, help="simultaneous limit delta = h^(1/p) for the jump potential")
    _add_common(p, with_potential=False)
    p.add_argument("--p", type=float, required=True, help="exponent p > 0")
    p.add_argument("--h", default=DEFAULT_H_LIST, help="comma-separated decreasing h values")
    p.add_argument("--N", dest="n_bound", type=float, default=1.5)
    p.add_argument("--region", default=DEFAULT_LIMIT_REGION)

    p = sub.add_parser("pseudospectra", allow_abbrev=False, help="log10 sigma_min of the discretised operator on a lattice")
    _add_common(p)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--n", dest="grid_n", type=int, default=1000, help="interior grid points of the discretisation")
    p.add_argument("--grid", default="100x100", help="lattice resolution, e.g. 200x200")
    p.add_argument("--region", default=DEFAULT_REGION)
    p.add_argument("--jump-convention", choices=("left", "midpoint"), default="left")
    return parser


# ---------------------------------------------------------------------------
# commands

def cmd_skeleton(args) -> int:
    V, params = _load_potential(args)
    R = _positive("r-trunc", args.r_trunc)
    step = None if args.step is None else _positive("step", args.step)
    params.update({"command": "skeleton", "r_trunc": R, "step": step})
    T = stokes.skeleton(V, R, step)
    summary = {"figures": len(T.figures),
               "junctions": [[f.gamma.real, f.gamma.imag] for f in T.figures],
               "branch_crossings": sum(f.branch_crossings for f in T.figures)}
    records.write_records(stokes.skeleton_records(T), ["figure_index", "element", "vertex_index", "re", "im"],
                          params, args.output, args.fmt, summary)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    V, params = _load_potential(args)
    h = _positive("h", args.h)
    eps = _positive("eps", args.eps)
    N = _positive("N", args.n_bound)
    region = _region(args.region)
    params.update({"command": "spectrum", "h": h, "eps": eps, "N": N, "region": list(_bounds(region)),
                   "min_box": _positive("min-box", args.min_box), "newton_tol": _positive("newton-tol", args.newton_tol)})
    extra = {k: params[k] for k in ("delta",) if k in params}
    eigs = solver.solve_spectrum(V, h, region, args.min_box, args.newton_tol, params=extra)
    T = stokes.skeleton(V)
    rep = solver.containment_report(eigs, T, eps, N)
    summary = {"count": len(eigs), "flagged": len(eigs.flagged),
               "precision_floor": sum(e.status == "precision_floor" for e in eigs.entries),
               "checked": int(rep.lambdas.size), "max_distance": rep.max_distance, "passed": rep.passed,
               "offenders": [[z.real, z.imag, d] for z, d in rep.offenders]}
    if params.get("preset") in ("jump", "airy"):
        pairing = solver.conjugate_pairing(eigs)
        summary["conjugate_pairing"] = pairing
        if pairing > CONJ_PAIRING_TOL:
            logger.warning("spectrum not symmetric about the real axis: pairing distance %.3g", pairing)
    cols = ["h", "delta", "lambda_re", "lambda_im", "residual_log", "dist_to_skeleton"]
    records.write_records(solver.eigen_records(eigs, T), cols, params, args.output, args.fmt, summary)
    logger.info("containment at eps=%g: max distance %.4g (%s)", eps, rep.max_distance,
                "pass" if rep.passed else "fail")
    if eigs.flagged:
        logger.warning("%d unresolved or non-converged zeros", len(eigs.flagged))
    return EXIT_OK if rep.passed else EXIT_CLAIM


def cmd_limits(args) -> int:
    p = args.p
    if not (np.isfinite(p) and p > 0):
        raise ValidationError("BAD_PARAMETER", f"p must be positive, got {p}")
    try:
        hs = [float(v) for v in args.h.split(",")]
    except ValueError as exc:
        raise ValidationError("BAD_PARAMETER", f"cannot parse h list {args.h!r}") from exc
    region = _region(args.region)
    N = _positive("N", args.n_bound)
    rep = solver.limit_experiment(p, hs, region, N=N, threads=args.threads)
    params = {"command": "limits", "p": float(p), "h": hs, "N": N, "region": list(_bounds(region)),
              "template": "jump"}
    rows = [{"h": r.h, "delta": r.delta, "count": len(r.eigenvalues), "flagged": len(r.eigenvalues.flagged),
             "dist_single": r.dist_single, "dist_double": r.dist_double} for r in rep.rows]
    summary = {"target": rep.target, "single_decreasing": rep.single_decreasing,
               "double_decreasing": rep.double_decreasing, "passed": rep.passed}
    records.write_records(rows, ["h", "delta", "count", "flagged", "dist_single", "dist_double"],
                          params, args.output, args.fmt, summary)
    logger.info("predicted target %s: %s", rep.target, "decreasing" if rep.passed else "NOT decreasing")
    return EXIT_OK if rep.passed else EXIT_CLAIM


def cmd_pseudospectra(args) -> int:
    V, params = _load_potential(args)
    h = _positive("h", args.h)
    nx, ny = _grid(args.grid)
    region = _region(args.region)
    params.update({"command": "pseudospectra", "h": h, "n": args.grid_n, "grid": [nx, ny],
                   "region": list(_bounds(region)), "jump_convention": args.jump_convention})
    A = discrete.discretize(V, h, args.grid_n, args.jump_convention)
    g = discrete.pseudospectra_grid(A, region, (nx, ny), threads=args.threads)
    rows = g.records()
    summary = {"min_log10_sigma_min": float(np.log10(max(g.sigma.min(), 1e-300))), "scale": A.scale}
    records.write_records(rows, ["z_re", "z_im", "log10_sigma_min"], params, args.output, args.fmt, summary)
    return EXIT_OK


def _bounds(r: solver.SearchRegion):
    return (r.re_lo, r.re_hi, r.im_lo, r.im_hi)


COMMANDS = {"skeleton": cmd_skeleton, "spectrum": cmd_spectrum, "limits": cmd_limits,
            "pseudospectra": cmd_pseudospectra}


_NUMERIC_LEAD = re.compile(r"^-[\d.]")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Attach values such as ``-0.2,2,-1,1`` to the preceding long option.

    argparse only recognises plain negative numbers as values, so a comma list
    starting with a minus sign would otherwise be mistaken for an option.
    """
    out: list[str] = []
    it = iter(range(len(argv)))
    for i in it:
        tok = argv[i]
        if (tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
                and _NUMERIC_LEAD.match(argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            next(it)
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.threads = _threads(args.threads)
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SpectralError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BrokenPipeError:
        return EXIT_OK
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
