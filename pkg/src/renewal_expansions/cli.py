"""Command-line front end: ``renewal-expansions <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .errors import RenewalError
from .expansion import expand_density, expand_mass, expand_U, expand_v
from .rootfinder import SearchRegion, find_roots
from .ruin import (
    BivariateModel,
    ContinuousRiskModel,
    DiscreteRiskModel,
    ruin_bivariate,
    ruin_continuous,
    ruin_discrete,
)
from .models import load_model
from .validation import SUITES, run_suite

__all__ = ["main", "run", "parse_grid", "build_parser"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Reports usage errors with exit code 1 instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def parse_grid(text: str) -> np.ndarray:
    """Parse ``a,b,c`` or ``a:b:step`` (``a`` included, stops before ``b + step/2``)."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            a, b, step = parts
            if not step > 0:
                raise UsageError("--x: step must be positive")
            n = max(0, math.ceil((b - a) / step + 0.5))
            grid = a + step * np.arange(n)
            grid = grid[grid < b + step / 2]
        else:
            grid = np.array([float(p) for p in text.split(",") if p.strip()])
    except ValueError:
        raise UsageError(f"--x: cannot parse {text!r}; expected 'a,b,...' or 'a:b:step'") from None
    if grid.size == 0:
        raise UsageError("--x: empty grid")
    if np.any(np.diff(grid) <= 0):
        raise UsageError("--x: grid must be strictly increasing")
    return grid


def _fmt(v) -> str:
    return repr(float(v))


def _write(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _integer_grid(x, lattice):
    if lattice and np.any(x != np.round(x)):
        raise UsageError("--x: lattice models are evaluated at integers only")
    return x


# ---------------------------------------------------------------------------


def _cmd_roots(args) -> int:
    model = load_model(args.model)
    roots = find_roots(model, SearchRegion(args.r0, lattice=model.lattice, im_bound=args.im_max))
    _write(json.dumps([r.to_dict() for r in roots], indent=2) + "\n", args.out)
    return 0


def _cmd_expand(args) -> int:
    model = load_model(args.model)
    x = _integer_grid(parse_grid(args.x), model.lattice)
    builders = {"v": expand_v, "U": expand_U, "density": expand_density, "mass": expand_mass}
    if args.quantity == "mass":
        exp = expand_mass(model, args.r0)
    else:
        exp = builders[args.quantity](model, args.r0, args.im_max)
    terms = exp.term_values(x)
    linear = exp.linear_values(x)
    value = np.atleast_1d(exp.evaluate(x))
    header = ["x", "value", "linear_part"] + [f"term_{i + 1}" for i in range(len(terms))] + ["remainder_bound"]
    rows = [
        [x[j], value[j], linear[j], *terms[:, j], exp.remainder_bound(x[j])] for j in range(x.size)
    ]
    _write(_csv(header, rows), args.out)
    return 0


def _ruin_csv(exp, x) -> str:
    terms = exp.term_values(x)
    value = np.atleast_1d(exp.evaluate(x))
    header = ["x", "value"] + [f"term_{i + 1}" for i in range(len(terms))] + ["remainder_bound"]
    rows = [
        [x[j], value[j], *terms[:, j], math.exp(-exp.remainder_exponent * x[j])] for j in range(x.size)
    ]
    return _csv(header, rows)


def _cmd_ruin(args) -> int:
    if args.model_kind == "continuous":
        x = parse_grid(args.x)
        model = ContinuousRiskModel(args.alpha, args.premium, load_model(args.claims))
        _write(_ruin_csv(ruin_continuous(model, args.r, args.im_max), x), args.out)
        return 0
    if args.model_kind == "discrete":
        x = _integer_grid(parse_grid(args.x), True)
        model = DiscreteRiskModel(load_model(args.claims))
        _write(_ruin_csv(ruin_discrete(model, args.r), x), args.out)
        return 0
    m1 = _company(args.m1, "--m1")
    m2 = _company(args.m2, "--m2")
    result = ruin_bivariate(BivariateModel(m1, m2, args.q), strict=args.strict)
    _write(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n", args.out)
    if args.curve:
        x = parse_grid(args.x)
        vals = result.evaluate(x)
        with open(args.curve, "w") as fh:
            fh.write(_csv(["x1", "x2", "psi_or"], [[a, args.q * a, v] for a, v in zip(x, vals)]))
    return 0


def _company(values, flag) -> ContinuousRiskModel:
    if len(values) != 3:
        raise UsageError(f"{flag}: expected FILE ALPHA PREMIUM")
    path, alpha, premium = values
    try:
        alpha, premium = float(alpha), float(premium)
    except ValueError:
        raise UsageError(f"{flag}: ALPHA and PREMIUM must be numbers") from None
    return ContinuousRiskModel(alpha, premium, load_model(path))


def _cmd_validate(args) -> int:
    report = run_suite(args.suite, args.seed)
    sys.stdout.write(report.table() + "\n")
    if args.json:
        _write(report.to_json() + "\n", args.json)
    return 0 if report.passed else 2


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="renewal-expansions", description="Residue expansions of renewal functions and ruin probabilities.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("roots", help="zeros of g - 1 in a vertical strip")
    r.add_argument("--model", required=True, help="model definition file (JSON)")
    r.add_argument("--r0", type=float, required=True, help="right edge of the strip")
    r.add_argument("--im-max", type=float, default=None, help="imaginary bound of the search box")
    r.add_argument("--out", default=None, help="output path (default stdout)")
    r.set_defaults(func=_cmd_roots)

    e = sub.add_parser("expand", help="expansion of v, U, the renewal density or mass function")
    e.add_argument("quantity", choices=["v", "U", "density", "mass"])
    e.add_argument("--model", required=True, help="model definition file (JSON)")
    e.add_argument("--r0", type=float, required=True, help="strip width")
    e.add_argument("--x", required=True, help="grid: 'a,b,...' or 'a:b:step'")
    e.add_argument("--im-max", type=float, default=None, help="imaginary bound of the root search")
    e.add_argument("--out", default=None, help="CSV output path (default stdout)")
    e.set_defaults(func=_cmd_expand)

    ru = sub.add_parser("ruin", help="multi-term ruin probability expansions")
    rsub = ru.add_subparsers(dest="model_kind", required=True, parser_class=_Parser)
    rc = rsub.add_parser("continuous", help="compound Poisson risk process")
    rc.add_argument("--claims", required=True, help="claim size model file")
    rc.add_argument("--alpha", type=float, required=True, help="claim arrival intensity")
    rc.add_argument("--premium", type=float, required=True, help="premium rate c")
    rc.add_argument("--r", type=float, required=True, help="strip width beyond kappa")
    rc.add_argument("--x", required=True, help="grid: 'a,b,...' or 'a:b:step'")
    rc.add_argument("--im-max", type=float, default=None)
    rc.add_argument("--out", default=None)
    rc.set_defaults(func=_cmd_ruin)

    rd = rsub.add_parser("discrete", help="discrete-time risk process with unit premium")
    rd.add_argument("--claims", required=True, help="integer claim model file")
    rd.add_argument("--r", type=float, required=True, help="strip width beyond kappa")
    rd.add_argument("--x", required=True, help="integer grid")
    rd.add_argument("--out", default=None)
    rd.set_defaults(func=_cmd_ruin)

    rb = rsub.add_parser("bivariate", help="two companies along the ray x2 = q x1")
    rb.add_argument("--m1", nargs=3, required=True, metavar=("FILE", "ALPHA", "PREMIUM"))
    rb.add_argument("--m2", nargs=3, required=True, metavar=("FILE", "ALPHA", "PREMIUM"))
    rb.add_argument("--q", type=float, required=True, help="slope of the ray")
    rb.add_argument("--x", default="0:10:0.1", help="x1 grid of the curve file")
    rb.add_argument("--curve", default=None, help="CSV path for psi_or(x1, q x1)")
    rb.add_argument("--strict", action="store_true", help="fail on tied exponents")
    rb.add_argument("--out", default=None, help="JSON output path (default stdout)")
    rb.set_defaults(func=_cmd_ruin)

    v = sub.add_parser("validate", help="cross-check expansions against oracles")
    v.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--json", default=None, help="path of the JSON report")
    v.set_defaults(func=_cmd_validate)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (RenewalError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
