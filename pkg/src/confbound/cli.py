"""Command-line entry point: one subcommand per report, JSON or CSV on stdout.

Exit codes: 0 success, 2 when an asserted residual exceeds ``--tol``, 1 on
usage, IO or model errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Callable

import numpy as np

from . import __version__
from .boundary import double, expansion_coefficients, geodesic_boundary_identities, h3_vs_S
from .cce import cce_consistency_report, geodesic_defining_function, renormalized_volume
from .conformal import conformal_factor, invariance_residuals, radial_basis, random_factor, yamabe_estimate
from .errors import ConfboundError
from .invariants import EIGHT_PI2, boundary_sample, hypothesis_report, invariants_report
from .models import Model, load_model
from .quadrature import QuadratureRule
from .report import render

SUBCOMMANDS = ("invariants", "cgb", "hypotheses", "expansion", "double", "geodesic-id", "conformal-check", "yamabe", "renvol", "cce-check")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--model", required=True, help="catalog name, e.g. 'bump(0.05,1)', or path to a model JSON file")
    common.add_argument("--quad-order", type=int, default=24, help="Gauss-Legendre nodes per axis")
    common.add_argument("--tol", type=float, default=1e-6, help="threshold for asserted residuals")
    common.add_argument("--eps", type=float, default=0.0)
    common.add_argument("--eps1", type=float, default=0.0)
    common.add_argument("--eps2", type=float, default=0.0)
    common.add_argument("--w", default=None, help="conformal factor expression in the model coordinates")
    common.add_argument("--output", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--degree", type=int, default=4, help="radial basis size for yamabe")
    parser = _Parser(prog="confbound", description="Curvature and conformal invariants of four-manifolds with boundary.")
    parser.add_argument("--version", action="version", version=f"confbound {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


# -- subcommands: each returns (payload, asserted residuals) ---------------------
def _require_collar(model: Model):
    if model.collar is None:
        raise UsageError(f"model '{model.name}' is not a collar chart")
    return model.collar


def cmd_invariants(model, rule, args):
    return invariants_report(model, rule).as_dict(), {}


def cmd_cgb(model, rule, args):
    rep = invariants_report(model, rule)
    rel = abs(rep.cgbResidual) / EIGHT_PI2
    payload = {"cgbResidual": rep.cgbResidual, "cgbResidualOver8pi2": rel, "chi": rep.chi, "weylEnergy": rep.weylEnergy, "Einv": rep.Einv}
    return payload, {"cgbResidualOver8pi2": rel}


def cmd_hypotheses(model, rule, args):
    return hypothesis_report(model, rule, eps=args.eps, eps1=args.eps1, eps2=args.eps2, tol=args.tol), {}


def _trace_ratio(hk, h0):
    hinv = np.moveaxis(np.linalg.inv(np.moveaxis(h0, -1, 0)), 0, -1)
    lam = np.einsum("ij...,ji...->...", hinv, hk) / 3
    return float(np.min(lam)), float(np.max(lam))


def cmd_expansion(model, rule, args):
    chart = _require_collar(model)
    ex = expansion_coefficients(chart, boundary_sample(model))
    h0 = ex.direct[0]
    coeffs = {}
    for k in range(1, 5):
        lo, hi = _trace_ratio(ex.direct[k], h0)
        coeffs[f"h{k}"] = {
            "supDirect": float(np.max(np.abs(ex.direct[k]))),
            "supCurvature": float(np.max(np.abs(ex.curvature[k]))),
            "residual": float(np.max(np.abs(ex.direct[k] - ex.curvature[k]))),
            "traceRatioMin": lo,
            "traceRatioMax": hi,
        }
    payload = {"coefficients": coeffs, "residual": ex.residual, "signCoherence": ex.sign_coherence}
    return payload, {"residual": ex.residual, "signCoherence": ex.sign_coherence}


def cmd_double(model, rule, args):
    _, rep = double(_require_collar(model), boundary_sample(model))
    jumps = {f"jump{k}": j for k, j in enumerate(rep.jumps, start=1)}
    return {"jumps": jumps, "smoothness": rep.smoothness}, {}


def cmd_geodesic_id(model, rule, args):
    chart = _require_collar(model)
    xb = boundary_sample(model)
    ids = geodesic_boundary_identities(chart, xb)
    h3 = h3_vs_S(chart, xb)
    asserted = {}
    if ids["totallyGeodesic"]:
        asserted = {k: v for k, v in ids.items() if isinstance(v, float)}
    if h3["valid"]:
        asserted["h3PlusFourS"] = h3["residual"]
    return {"identities": ids, "h3VsS": h3}, asserted


def cmd_conformal_check(model, rule, args):
    w = conformal_factor(args.w, model.field.coords) if args.w else random_factor(model, args.seed)
    res = invariance_residuals(model, w, rule, seed=args.seed)
    asserted = {
        "WbRelative": res["Wb"] / max(1.0, abs(res["WbValue"])),
        "ERelative": res["E"] / max(1.0, abs(res["EValue"])),
        "bachLaw": res["bachLaw"],
        "SLaw": res["SLaw"],
    }
    return {**res, **asserted}, asserted


def cmd_yamabe(model, rule, args):
    est = yamabe_estimate(model, radial_basis(model, args.degree), rule=rule)
    return est.as_dict(), {}


def cmd_renvol(model, rule, args):
    return renormalized_volume(model, rule=rule).as_dict(), {}


def cmd_cce_check(model, rule, args):
    rep = cce_consistency_report(model, rule)
    keys = ("anderson", "EvsV", "SvsG3", "r1Coefficient", "weylRouteDiff")
    asserted = {k: rep[k] for k in keys if rep[k] is not None}
    asserted["weylRouteDiff"] = rep["weylRouteDiff"] / max(1.0, abs(rep["weylEnergy"]))
    geo = geodesic_defining_function(model).as_dict()
    asserted["geodesicNormalization"] = geo["normalizationResidual"]
    asserted["geodesicHamiltonian"] = geo["hamiltonianResidual"]
    return {**rep, "geodesic": geo}, asserted


COMMANDS: dict[str, Callable] = {
    "invariants": cmd_invariants,
    "cgb": cmd_cgb,
    "hypotheses": cmd_hypotheses,
    "expansion": cmd_expansion,
    "double": cmd_double,
    "geodesic-id": cmd_geodesic_id,
    "conformal-check": cmd_conformal_check,
    "yamabe": cmd_yamabe,
    "renvol": cmd_renvol,
    "cce-check": cmd_cce_check,
}


def run(argv: list[str] | None = None) -> tuple[int, str]:
    """Execute a command and return ``(exit code, rendered report)`` without touching stdout."""
    args = build_parser().parse_args(argv)
    if args.quad_order < 2:
        raise UsageError("--quad-order must be >= 2")
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    try:
        model = load_model(args.model)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    rule = QuadratureRule(args.quad_order)
    payload, asserted = COMMANDS[args.command](model, rule, args)
    failed = sorted(k for k, v in asserted.items() if not (math.isfinite(v) and v <= args.tol))
    record = {
        "command": args.command,
        "model": model.name,
        "quadOrder": args.quad_order,
        "version": __version__,
        "tol": args.tol,
        "report": payload,
        "asserted": asserted,
        "failed": failed,
        "ok": not failed,
    }
    return (2 if failed else 0), render(record, args.output)


def main(argv: list[str] | None = None) -> int:
    try:
        code, text = run(argv)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"confbound: error: {exc}", file=sys.stderr)
        return 1
    except (ConfboundError, OSError, ValueError) as exc:
        print(f"confbound: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(text)
    sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
