"""Command-line front end: ``qexp <subcommand> ...``.

Exit codes: 0 success, 1 bad arguments, 2 precondition or representability
failure, 3 construction or budget failure.  ``verify`` exits 0 only for a
valid certificate.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import warnings
from dataclasses import dataclass, fields
from typing import Optional

import mpmath

from . import bases, digits, expansions, spectrum, universal

PRECISION_ENV = "QEXP_PRECISION"

EXIT_OK, EXIT_ARGS, EXIT_PRECONDITION, EXIT_CONSTRUCTION = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    precision: str = "standard"       # standard | extended
    dedup_tolerance: float = 1e-12
    max_depth: int = expansions.DEPTH_LIMIT
    n_cap: Optional[int] = None       # None: 400 // m
    backtrack_budget: int = 10 ** 6
    point_cap: int = spectrum.DEFAULT_POINT_CAP
    max_level: int = 8
    output_format: str = "json"       # json | csv | text
    seed: int = 0

    def __post_init__(self):
        if self.precision not in ("standard", "extended"):
            raise ValueError(f"precision must be standard or extended, not {self.precision!r}")
        if self.output_format not in ("json", "csv", "text"):
            raise ValueError(f"unknown output format {self.output_format!r}")
        for name in ("max_depth", "backtrack_budget", "point_cap", "max_level"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_cap is not None and self.n_cap < 1:
            raise ValueError("n_cap must be positive")
        if self.dedup_tolerance < 0:
            raise ValueError("dedup_tolerance must be nonnegative")

    @classmethod
    def load(cls, path: Optional[str], default_format: str = "json", **overrides) -> "RunConfig":
        """Defaults, then the environment, then the config file, then explicit flags."""
        data = {"precision": os.environ.get(PRECISION_ENV, "standard"),
                "output_format": default_format}
        if path:
            with open(path) as fh:
                raw = json.load(fh)
            known = {f.name for f in fields(cls)}
            unknown = set(raw) - known
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
            data.update(raw)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


def _num(v) -> str:
    """Decimal string for JSON output."""
    if isinstance(v, complex):
        return repr(v.real) if v.imag == 0 else f"{v.real!r}{v.imag:+}i"
    if isinstance(v, (mpmath.mpf, mpmath.mpc)):
        return _num(complex(v)) if isinstance(v, mpmath.mpc) else mpmath.nstr(v, 30)
    return repr(float(v))


def _bits(coeffs) -> str:
    # constant-term first; the zero polynomial prints as "0"
    return "".join(map(str, coeffs)) or "0"


def _dump(obj, out):
    json.dump(obj, out, indent=2)
    out.write("\n")


def _target(args):
    text = args.z if getattr(args, "z", None) is not None else args.x
    if text is None:
        raise CliError("one of --x or --z is required", EXIT_ARGS)
    try:
        value = bases.parse_complex(text)
    except ValueError as exc:
        raise CliError(f"cannot parse number {text!r}", EXIT_ARGS) from exc
    # exact decimal text for real inputs, so extended precision sees the digits typed
    return (text if value.imag == 0 and not text.strip().endswith("i") else value), value


def _base(args):
    try:
        return bases.parse_base(args.base)
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(f"cannot parse base {args.base!r}: {exc}", EXIT_ARGS) from exc


# --- subcommands ---------------------------------------------------------------

def cmd_expand(args, cfg: RunConfig, out) -> int:
    base = _base(args)
    target, value = _target(args)
    K = args.digits
    if not 1 <= K <= cfg.max_depth:
        raise CliError(f"--digits must be in [1, {cfg.max_depth}]", EXIT_ARGS)
    try:
        d = expansions.expand(target, base, K, cfg.backtrack_budget)
    except expansions.ExpansionFailure as exc:
        raise CliError(f"no expansion found: {exc}", EXIT_PRECONDITION) from exc
    except (ValueError, bases.UnsupportedBase) as exc:
        raise CliError(str(exc), EXIT_PRECONDITION) from exc
    use_mp = cfg.precision == "extended"
    if use_mp:
        with mpmath.workdps(expansions.working_dps(base, K)):
            ev = bases.evaluate(d, base, use_mp=True)
            residual = abs(mpmath.mpmathify(expansions.target_mp(target)) - ev.value)
            val = complex(ev.value)
    else:
        ev = bases.evaluate(d, base)
        val = complex(ev.value)
        residual = abs(value - val)
    report = {
        "base": str(base),
        "x": _num(value),
        "digits": str(d),
        "value": _num(val),
        "tail_radius": _num(ev.tail_radius),
        "residual": _num(residual),
        "depth": K,
    }
    if cfg.output_format == "text":
        out.write(f"{report['digits']}\nresidual {report['residual']}  tail_radius {report['tail_radius']}\n")
    else:
        _dump(report, out)
    return EXIT_OK


def cmd_count(args, cfg: RunConfig, out) -> int:
    base = _base(args)
    target, value = _target(args)
    if not 0 <= args.depth <= cfg.max_depth:
        raise CliError(f"--depth must be in [0, {cfg.max_depth}]", EXIT_ARGS)
    try:
        count = expansions.count_prefixes(target, base, args.depth, limit=args.limit)
        exact = expansions.count_is_exact(base)
    except (ValueError, bases.UnsupportedBase) as exc:
        raise CliError(str(exc), EXIT_PRECONDITION) from exc
    report = {
        "base": str(base),
        "x": _num(value),
        "depth": args.depth,
        "count": count,
        "count_kind": "exact" if exact else "upper_bound",
        "limit_reached": args.limit is not None and count >= args.limit,
    }
    if args.witness:
        try:
            w = expansions.branching_witness(target, base, args.depth)
            report["digits"] = "".join(map(str, w.digits))
            report["branch_positions"] = list(w.positions)
        except ValueError as exc:
            report["branch_positions"] = None
            report["witness_error"] = str(exc)
    if cfg.output_format == "text":
        out.write(f"{count}\n")
    else:
        _dump(report, out)
    return EXIT_OK


def cmd_spectrum(args, cfg: RunConfig, out) -> int:
    if (args.bound is None) == (args.count is None):
        raise CliError("give exactly one of --bound or --count", EXIT_ARGS)
    try:
        q = spectrum.SpectrumQueryConfig(
            x=bases.real_float(args.x), value_bound=args.bound, count_bound=args.count,
            dedup_tolerance=cfg.dedup_tolerance, max_degree=args.max_degree,
            point_cap=cfg.point_cap)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_ARGS) from exc
    try:
        points = spectrum.enumerate_spectrum(q)
    except spectrum.SpectrumBudgetError as exc:
        raise CliError(str(exc), EXIT_CONSTRUCTION) from exc
    if cfg.output_format == "json":
        rows = [{"index": k, "value": repr(pt.value),
                 "gap_to_next": repr(points[k + 1].value - pt.value) if k + 1 < len(points) else None,
                 "coeffs": _bits(pt.coeffs)} for k, pt in enumerate(points)]
        _dump({"x": args.x, "points": rows}, out)
        return EXIT_OK
    out.write("index,value,gap_to_next,coeffs\n")
    for k, pt in enumerate(points):
        gap = repr(points[k + 1].value - pt.value) if k + 1 < len(points) else ""
        out.write(f"{k},{pt.value!r},{gap},{_bits(pt.coeffs)}\n")
    return EXIT_OK


def cmd_universal(args, cfg: RunConfig, out) -> int:
    base = _base(args)
    if args.level is not None:
        if not 1 <= args.level <= cfg.max_level:
            raise CliError(f"--level must be in [1, {cfg.max_level}]", EXIT_ARGS)
        num_blocks = universal.level_block_count(args.level)
    elif args.num_blocks is not None:
        if args.num_blocks < 1:
            raise CliError("--num-blocks must be positive", EXIT_ARGS)
        num_blocks = args.num_blocks
    else:
        num_blocks = universal.level_block_count(5)
    level = args.level
    order = base.order
    if order is None:
        raise CliError("universal expansions need omega to be a root of unity", EXIT_PRECONDITION)
    z = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            if args.alpha is not None:
                alphas = tuple(bases.real_float(a) for a in args.alpha.split(","))
                if len(alphas) != order:
                    raise CliError(f"--alpha needs {order} comma-separated values", EXIT_ARGS)
                result = universal.universal_expansion(
                    universal.AlphaVector(base, alphas), num_blocks, cfg.n_cap)
            elif args.z is not None:
                target, z = _target(args)
                if order % 2 == 0:
                    result = universal.universal_even(target, base, num_blocks, cfg.n_cap)
                elif order == 1:
                    if z.imag:
                        raise CliError("a real base needs a real point", EXIT_PRECONDITION)
                    result = universal.universal_expansion(
                        universal.AlphaVector(base, (z.real,)), num_blocks, cfg.n_cap)
                else:
                    alpha = universal.decompose_alpha(z, base)
                    result = universal.universal_expansion(alpha, num_blocks, cfg.n_cap)
            else:
                raise CliError("one of --alpha or --z is required", EXIT_ARGS)
        except universal.PreconditionError as exc:
            raise CliError(str(exc), EXIT_PRECONDITION) from exc
        except universal.ConstructionError as exc:
            notes = "; ".join(str(w.message) for w in caught)
            raise CliError(f"{exc}{'; ' + notes if notes else ''}", EXIT_CONSTRUCTION) from exc
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    cert = universal.build_certificate(result, base, z, level)
    if args.cert:
        with open(args.cert, "w") as fh:
            _dump(cert, fh)
        if cfg.output_format == "text":
            out.write(cert["digits"] + "\n")
        else:
            _dump({"digits": cert["digits"], "length": len(cert["digits"]),
                   "checkpoints": cert["checkpoints"], "certificate": args.cert}, out)
    else:
        _dump(cert, out)
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig, out) -> int:
    try:
        with open(args.certificate) as fh:
            cert = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read certificate: {exc}", EXIT_ARGS) from exc
    report = universal.verify_certificate(cert)
    _dump({"valid": report.valid, "failures": report.failures,
           "min_relative_margin": None if not report.valid else repr(report.min_margin)}, out)
    return EXIT_OK if report.valid else EXIT_PRECONDITION


def cmd_transform(args, cfg: RunConfig, out) -> int:
    try:
        d = digits.DigitSequence.parse(args.digits)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_ARGS) from exc
    if args.mprime < 1:
        raise CliError("--mprime must be positive", EXIT_ARGS)
    out.write(str(digits.transform_T(d, args.mprime)) + "\n")
    return EXIT_OK


def cmd_bounds(args, cfg: RunConfig, out) -> int:
    base = _base(args)
    try:
        region = bases.jq_bounds(base)
        full = bases.is_full_region(base)
    except bases.UnsupportedBase as exc:
        raise CliError(str(exc), EXIT_PRECONDITION) from exc
    _dump({"base": str(base), "family": base.family, "region": region.as_dict(),
           "full": full}, out)
    return EXIT_OK


def _common() -> argparse.ArgumentParser:
    # accepted both before and after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON file with RunConfig fields")
    common.add_argument("--precision", choices=["standard", "extended"], default=argparse.SUPPRESS,
                        help=f"overrides ${PRECISION_ENV} and the config file")
    common.add_argument("--format", dest="output_format", choices=["json", "csv", "text"],
                        default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="qexp", parents=[common],
                                     description="{0,1}-expansions in real and complex bases")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, func, default_format="json"):
        p = sub.add_parser(name, help=help_text, parents=[common])
        p.set_defaults(func=func, default_format=default_format)
        return p

    p = add("expand", "expand a number to K digits", cmd_expand)
    p.add_argument("--base", required=True)
    p.add_argument("--x")
    p.add_argument("--z")
    p.add_argument("--digits", type=int, default=40)

    p = add("count", "count feasible prefixes", cmd_count)
    p.add_argument("--base", required=True)
    p.add_argument("--x")
    p.add_argument("--z")
    p.add_argument("--depth", type=int, default=20)
    p.add_argument("--limit", type=int)
    p.add_argument("--witness", action="store_true", help="also report a branching witness")

    p = add("spectrum", "list the spectrum of {0,1}-polynomials at x", cmd_spectrum, "csv")
    p.add_argument("--x", required=True)
    p.add_argument("--bound", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--max-degree", type=int)

    p = add("universal", "build a universal expansion prefix with a certificate", cmd_universal)
    p.add_argument("--base", required=True)
    p.add_argument("--z")
    p.add_argument("--alpha", help="comma-separated frame coordinates")
    p.add_argument("--level", type=int)
    p.add_argument("--num-blocks", type=int)
    p.add_argument("--cert", help="write the certificate here instead of stdout")

    p = add("verify", "recheck a certificate", cmd_verify)
    p.add_argument("certificate")

    p = add("transform", "apply the block-parity transform T", cmd_transform, "text")
    p.add_argument("--mprime", type=int, default=1)
    p.add_argument("--digits", required=True)

    p = add("bounds", "bounding region of J_q", cmd_bounds)
    p.add_argument("--base", required=True)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ARGS if exc.code else EXIT_OK
    try:
        cfg = RunConfig.load(getattr(args, "config", None),
                             default_format=args.default_format,
                             precision=getattr(args, "precision", None),
                             output_format=getattr(args, "output_format", None),
                             seed=getattr(args, "seed", None))
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
        return EXIT_ARGS
    random.seed(cfg.seed)
    try:
        return args.func(args, cfg, out)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
