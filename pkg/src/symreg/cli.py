"""Command line interface: JSON in, JSON out."""
from __future__ import annotations

import argparse
import json
import math
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ._series import as_fraction, fraction_str
from .germs import MeroGerm, evaluator_E0, evaluator_linear, evaluator_reparam, germ_to_json, shift_matrix
from .laurent import LaurentSeries
from .matrices import (ConstraintMatrix, RankDeficient, check_coassociative, check_cocommutative,
                       check_whitney_compatible, matrix_from_json)
from .oracle import NotConvergent, direct_integral, radial_fp_oracle
from .renorm import (HopfCharacter, UnsupportedRegularisation, birkhoff_factorise, constrained_laurent,
                     make_evaluator, verify_suite)
from .schwinger import EQUAL, INDEPENDENT, EngineError, SchwingerProblem, meromorphic_extension_with_error
from .single import RIESZ, RegKind, Regularisation, cutoff_integral_with_error, regularised_laurent, residues
from .symbols import make_power, symbol_from_json, symbol_to_json

EXIT_OK, EXIT_VALIDATION, EXIT_TOLERANCE = 0, 2, 3


class CliError(Exception):
    def __init__(self, code: str, message: str, exit_code: int = EXIT_VALIDATION):
        super().__init__(message)
        self.code, self.message, self.exit_code = code, message, exit_code


def _num(x) -> str:
    if isinstance(x, (int, Fraction)):
        return fraction_str(Fraction(x))
    return repr(float(np.real(x)))


def _laurent_rows(s: LaurentSeries) -> list:
    return [{"degree": d, "coeff": _num(v), "error": repr(float(e))} for d, v, e in s.to_rows()]


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


# problem specs -------------------------------------------------------------

@dataclass
class ProblemSpec:
    dim: int
    matrix: ConstraintMatrix
    symbols: list
    reg: Regularisation = RIESZ
    method: str = "evaluator"
    K: int = 4
    tol: float = 1e-8
    measure: str = "plain"
    evaluator: object = "e0"
    extras: dict = field(default_factory=dict)


def parse_symbol(obj):
    if isinstance(obj, (int, str)):
        return make_power(as_fraction(str(obj)))
    if isinstance(obj, dict):
        return symbol_from_json(obj)
    raise CliError("SCHEMA", f"cannot read symbol {obj!r}")


def parse_reg(obj) -> Regularisation:
    if obj is None:
        return RIESZ
    if isinstance(obj, str):
        obj = {"kind": obj}
    kind = obj.get("kind", "riesz")
    try:
        rk = RegKind(kind)
    except ValueError:
        raise CliError("SCHEMA", f"unknown regularisation {kind!r}")
    return Regularisation(rk, as_fraction(str(obj.get("q", 1))))


def parse_evaluator(text: str | None):
    if text in (None, "e0"):
        return "e0"
    if text.startswith("kappa:"):
        return ("kappa", [as_fraction(x) for x in text[6:].split(",")])
    if text.startswith("linear:"):
        path = text[7:]
        if path in ("", "shift"):
            return ("linear", shift_matrix)
        data = json.loads(Path(path).read_text())
        return ("linear", [[as_fraction(str(x)) for x in r] for r in data])
    raise CliError("SCHEMA", f"unknown evaluator {text!r}")


def parse_problem(d: dict) -> ProblemSpec:
    for key in ("dim", "matrix", "symbols"):
        if key not in d:
            raise CliError("SCHEMA", f"problem missing field {key!r}")
    try:
        B = matrix_from_json(d["matrix"])
    except RankDeficient as e:
        raise CliError(RankDeficient.code, str(e))
    except (ValueError, TypeError) as e:
        raise CliError("SCHEMA", str(e))
    dim = d["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise CliError("SCHEMA", "dim must be a positive integer")
    syms = [parse_symbol(s) for s in d["symbols"]]
    if len(syms) == 1 and B.rows_I > 1:
        syms = syms * B.rows_I
    if len(syms) != B.rows_I:
        raise CliError("SCHEMA", "one symbol per matrix row is required")
    measure = d.get("measure", "plain")
    if measure not in ("plain", "normalized"):
        raise CliError("SCHEMA", "measure must be 'plain' or 'normalized'")
    return ProblemSpec(dim, B, syms, parse_reg(d.get("regularisation")), d.get("method", "evaluator"),
                       int(d.get("K", 4)), float(d.get("tol", 1e-8)), measure,
                       parse_evaluator(d.get("evaluator")), {})


def load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise CliError("IO", f"no such file {path}")
    except json.JSONDecodeError as e:
        raise CliError("SCHEMA", f"invalid JSON in {path}: {e}")


# commands ------------------------------------------------------------------

def cmd_integrate(args) -> dict:
    if args.symbol:
        s = parse_symbol(load_json(args.symbol))
    else:
        s = parse_symbol(args.order if args.order is not None else "-1")
    n = args.dim
    reg = parse_reg({"kind": args.reg, "q": args.q})
    if reg.kind is RegKind.DIMREG and n % 2:
        raise CliError("SCHEMA", "dimensional regularisation needs even dimension")
    value, err = cutoff_integral_with_error(s, n)
    lau = regularised_laurent(s, n, reg, args.laurent_order)
    res = residues(s, n)
    if args.measure == "normalized":
        c = (2 * math.pi) ** (-n)
        value, err, lau = (0 if value == 0 else value * c), err * c, lau.scale(c)
        res = {l: v * c for l, v in res.items()}
    out = {"symbol": symbol_to_json(s), "dim": n, "cutoff": {"value": _num(value), "error": repr(float(err))},
           "residues": {str(l): repr(float(v)) for l, v in res.items()},
           "laurent": _laurent_rows(lau),
           "regularisation": {"kind": reg.kind.value, "q": fraction_str(reg.slope_q)},
           "measure": args.measure or "plain"}
    return out


def _parse_orders(text: str) -> list:
    try:
        return [as_fraction(x) for x in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise CliError("SCHEMA", f"cannot parse orders {text!r}")


def _pole_json(p) -> dict:
    return {"rows": list(p.rows), "slope": fraction_str(p.slope), "constant": fraction_str(p.constant),
            "multiplicity": p.multiplicity}


def cmd_expand(args) -> dict:
    try:
        B = matrix_from_json(load_json(args.matrix))
    except RankDeficient as e:
        raise CliError(RankDeficient.code, str(e))
    orders = _parse_orders(args.orders)
    if len(orders) != B.rows_I:
        raise CliError("SCHEMA", "one order per matrix row is required")
    prob = SchwingerProblem(B, tuple(orders), args.dim, as_fraction(args.q), args.z_mode, args.order)
    res = meromorphic_extension_with_error(prob, args.measure == "normalized")
    sectors = []
    poles = set()
    for sec in res.sectors:
        sectors.append({"permutation": list(sec.permutation), "markers": list(sec.markers),
                        "s": list(sec.s_vector), "exponents": [fraction_str(a) for a in sec.exponents],
                        "subtraction_orders": list(sec.subtraction_orders),
                        "det_factor": fraction_str(sec.step.det_factor),
                        "pole_factors": [_pole_json(p) for p in sec.pole_factors]})
        poles |= {(p.rows, p.slope, p.constant) for p in sec.pole_factors}
    out = {"sectors": sectors,
           "pole_factors": [{"rows": list(r), "slope": fraction_str(s), "constant": fraction_str(c)}
                            for r, s, c in sorted(poles)],
           "errors": {"max_abs": repr(float(res.error_estimate))}}
    if isinstance(res.value, LaurentSeries):
        out["laurent"] = _laurent_rows(res.value)
    else:
        out["germ"] = germ_to_json(res.value)
    if res.error_estimate > args.tol * max(1.0, _scale_of(res.value)):
        raise CliError("TOLERANCE", f"engine error estimate {res.error_estimate:.3e} exceeds tolerance",
                       EXIT_TOLERANCE)
    return out


def _scale_of(v) -> float:
    if isinstance(v, LaurentSeries):
        return max((abs(float(x)) for x in v.coeffs.values()), default=1.0)
    return max((abs(float(c)) for t in v.terms for _, c in t.num), default=1.0)


def cmd_renormalize(args) -> dict:
    spec = parse_problem(load_json(args.problem))
    method = args.method or spec.method
    evaluator = parse_evaluator(args.evaluator) if args.evaluator else spec.evaluator
    normalized = (args.measure or spec.measure) == "normalized"
    diagnostics = {}
    if method == "evaluator":
        germ, err = constrained_laurent(spec.symbols, spec.matrix, spec.dim, spec.reg, INDEPENDENT, spec.K,
                                        normalized)
        value = float(make_evaluator(evaluator)(germ))
        removed = sorted({tuple(i for i, c in enumerate(f) if c) for t in germ.terms for f, _ in t.den})
        pole_parts = [{"rows": list(r)} for r in removed]
        diagnostics["engine_error"] = repr(float(err))
    elif method == "birkhoff":
        first = spec.symbols[0]
        if any(s != first for s in spec.symbols):
            raise CliError("SCHEMA", "Birkhoff renormalisation needs the same symbol on every row")
        phi = HopfCharacter(first, spec.reg, spec.dim, normalized=normalized)
        res = birkhoff_factorise(phi, spec.matrix)
        value = res.value
        err = sum(phi.errors.values())
        pole_parts = _laurent_rows(res.minus)
        diagnostics["engine_error"] = repr(float(err))
        diagnostics["unrenormalised"] = _laurent_rows(phi(spec.matrix))
    else:
        raise CliError("SCHEMA", f"unknown method {method!r}")
    out = {"value": repr(float(value)), "pole_parts_removed": pole_parts, "diagnostics": diagnostics,
           "method": method}
    if args.oracle:
        try:
            orc = direct_integral(spec.symbols, spec.matrix, spec.dim, seed=args.seed)
        except NotConvergent as e:
            out["oracle"] = {"skipped": str(e)}
        else:
            scale = (2 * math.pi) ** (-spec.dim * spec.matrix.cols_L) if normalized else 1.0
            ov = orc.value * scale
            out["oracle"] = orc.to_json()
            out["oracle_delta"] = repr(float(abs(ov - value) / max(abs(ov), 1e-300)))
    if float(diagnostics.get("engine_error", "0")) > spec.tol * max(1.0, abs(value)):
        raise CliError("TOLERANCE", "engine error estimate exceeds tolerance", EXIT_TOLERANCE)
    return out


def cmd_oracle(args) -> dict:
    if args.radial:
        s = parse_symbol(load_json(args.radial)) if Path(args.radial).exists() else parse_symbol(args.radial)
        r = radial_fp_oracle(s, args.dim)
        return {"kind": "radial_fp", **r.to_json()}
    if args.problem:
        spec = parse_problem(load_json(args.problem))
        syms, B, n = spec.symbols, spec.matrix, spec.dim
    else:
        if not args.matrix or not args.orders:
            raise CliError("SCHEMA", "oracle needs --problem, --radial or --matrix with --orders")
        try:
            B = matrix_from_json(load_json(args.matrix))
        except RankDeficient as e:
            raise CliError(RankDeficient.code, str(e))
        syms, n = [make_power(a) for a in _parse_orders(args.orders)], args.dim
    try:
        r = direct_integral(syms, B, n, seed=args.seed)
    except NotConvergent as e:
        raise CliError(NotConvergent.code, str(e))
    if args.measure == "normalized":
        c = (2 * math.pi) ** (-n * B.cols_L)
        return {"kind": "direct", "value": repr(r.value * c), "abs_error": repr(r.abs_error * c),
                "evaluations": r.evaluations, "method": r.method}
    return {"kind": "direct", **r.to_json()}


def _random_matrix(rng: random.Random, max_L: int = 3) -> ConstraintMatrix:
    while True:
        L = rng.randint(0, max_L)
        I = rng.randint(max(1, L), L + 2)
        rows = [[rng.randint(-2, 2) for _ in range(L)] for _ in range(I)]
        try:
            return ConstraintMatrix.from_rows(rows) if L else ConstraintMatrix.empty(I)
        except RankDeficient:
            continue


def _suite_hopf(seed: int, count: int = 50) -> list:
    rng = random.Random(seed)
    out = []
    for k in range(count):
        B = _random_matrix(rng)
        Bp = _random_matrix(rng, 2)
        ok = check_coassociative(B) and check_cocommutative(B) and check_whitney_compatible(B, Bp)
        out.append({"name": f"hopf[{k}]", "passed": bool(ok)})
    return out


def _suite_evaluators(seed: int) -> list:
    x = MeroGerm.from_parts(2, {(1, 0): 1, (0, 1): 1}, [((0,), 1)])
    return [{"name": "E0 worked example", "passed": evaluator_E0(x) == 1},
            {"name": "E^T worked example", "passed": evaluator_linear(x) == 0},
            {"name": "E^kappa identity", "passed": evaluator_reparam(x, [0, 1]) == evaluator_E0(x)}]


def _suite_renorm(seed: int) -> list:
    return [c.to_json() for c in verify_suite({"seed": seed})]


def cmd_verify(args) -> dict:
    suites = {"hopf": _suite_hopf, "evaluators": _suite_evaluators, "renorm": _suite_renorm}
    chosen = list(suites) if args.suite == "all" else [args.suite]
    if any(c not in suites for c in chosen):
        raise CliError("SCHEMA", f"unknown suite {args.suite!r}")
    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        futures = [(c, pool.submit(suites[c], args.seed)) for c in chosen]
        report = {c: f.result() for c, f in futures}
    passed = all(item["passed"] for items in report.values() for item in items)
    out = {"suites": report, "all_passed": passed}
    if not passed:
        raise _ReportFailure(out)
    return out


class _ReportFailure(Exception):
    def __init__(self, report):
        self.report = report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="symreg", description="Regularised and renormalised integrals of radial symbols.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--measure", choices=["plain", "normalized"], default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("integrate", parents=[common], help="single radial integral")
    s.add_argument("--symbol", help="symbol JSON file")
    s.add_argument("--order", help="order a of the power <xi>^a (when no --symbol)")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--reg", default="riesz", choices=["riesz", "dimreg", "covariant"])
    s.add_argument("--q", default="1")
    s.add_argument("--laurent-order", type=int, default=4)
    s.set_defaults(func=cmd_integrate)

    s = sub.add_parser("expand", parents=[common], help="meromorphic extension of a constrained integral")
    s.add_argument("--matrix", required=True)
    s.add_argument("--orders", required=True)
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--q", default="1")
    s.add_argument("--z-mode", choices=[INDEPENDENT, EQUAL], default=EQUAL)
    s.add_argument("--order", type=int, default=4)
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_expand)

    s = sub.add_parser("renormalize", parents=[common], help="renormalised constrained integral")
    s.add_argument("--problem", required=True)
    s.add_argument("--method", choices=["evaluator", "birkhoff"])
    s.add_argument("--evaluator")
    s.add_argument("--oracle", action="store_true", help="compare with direct quadrature when convergent")
    s.set_defaults(func=cmd_renormalize)

    s = sub.add_parser("oracle", parents=[common], help="direct numerical quadrature")
    s.add_argument("--problem")
    s.add_argument("--matrix")
    s.add_argument("--orders")
    s.add_argument("--radial", help="symbol JSON file or order for a radial finite part")
    s.add_argument("--dim", type=int, default=1)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("verify", parents=[common], help="property verification suites")
    s.add_argument("--suite", default="all")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = args.func(args)
    except _ReportFailure as f:
        print(_dump(f.report))
        return EXIT_TOLERANCE
    except CliError as e:
        print(_dump({"error": {"code": e.code, "message": e.message}}))
        return e.exit_code
    except RankDeficient as e:
        print(_dump({"error": {"code": RankDeficient.code, "message": str(e)}}))
        return EXIT_VALIDATION
    except (EngineError, UnsupportedRegularisation) as e:
        print(_dump({"error": {"code": e.code, "message": str(e)}}))
        return EXIT_VALIDATION
    except (ValueError, TypeError, KeyError) as e:
        print(_dump({"error": {"code": "VALIDATION", "message": str(e)}}))
        return EXIT_VALIDATION
    print(_dump(out))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
