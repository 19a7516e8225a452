"""Command-line driver: ``slicemax compute | verify | sweep``.

Exit codes are part of the interface:

    0  success
    1  a hard verification check failed
    2  command-line usage error (argparse)
    3  input grid could not be parsed
    4  invalid parameters (exponents, operator name, generator spec, ...)
    5  file could not be read or written
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from .grid import Cube, CubeFamily, GridFunction, GridParseError, dump_json, format_grid, load_grid
from .norms import ExponentSet, SliceParams, bmo_norm, lp_norm, slice_norm
from .operators import (
    OperatorParams,
    commutator_maximal,
    commutator_sharp,
    maximal,
    maximal_at,
    maximal_commutator,
    maximal_fast,
    sharp_maximal,
)
from . import verify as V

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_IO = 5

OPERATORS = ("identity", "maximal", "maximal-fast", "sharp", "commutator", "maximal-commutator",
             "sharp-commutator")
NEEDS_SYMBOL = ("commutator", "maximal-commutator", "sharp-commutator")
NORMS = ("lp", "slice", "bmo")
SWEEP_AXES = ("resolution", "domain", "alpha", "t")


class ValidationError(ValueError):
    """Parameters that parse but cannot be run."""


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    generator: str | None = None
    symbol: str | None = None
    symbol_input: str | None = None
    shape: tuple = (64,)
    h: float | None = None
    op: str = "maximal"
    alpha: float = 0.0
    exponents: tuple | None = None
    slice: tuple | None = None
    max_scale: int | None = None
    boundary: str = "interior"
    norms: tuple = ()
    out: str | None = None
    seed: int = 0
    tolerance: float | None = None
    operators: tuple = V.OPERATORS
    axis: str | None = None
    values: tuple = ()
    quick: bool = False

    def to_dict(self) -> dict:
        return V._clean(asdict(self))


# -- argument parsing helpers ---------------------------------------------------


def _floats(text: str, count: int | None, what: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ValidationError(f"{what} must be comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise ValidationError(f"{what} needs {count} comma-separated values, got {text!r}")
    return vals


def _shape(text: str) -> tuple:
    try:
        shape = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ValidationError(f"shape must be one or two integers, got {text!r}") from None
    if not 1 <= len(shape) <= 2 or min(shape) < 1:
        raise ValidationError(f"shape must be one or two positive integers, got {text!r}")
    return shape


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slicemax", description="Discrete maximal operators, slice norms "
                                     "and BMO characterizations on uniform grids.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--alpha", type=float, default=None, help="fractional order alpha (default 0)")
        p.add_argument("--exponents", help="p,q,r,s with alpha/n = 1/p - 1/r = 1/q - 1/s")
        p.add_argument("--slice", help="t,r,p: window scale t, inner exponent r, outer exponent p")
        p.add_argument("--max-scale", type=int, help="largest cube side K in cells")
        p.add_argument("--boundary", choices=("interior", "clipped"), default="interior")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path")
        p.add_argument("--tolerance", type=float, help="override every hard-check tolerance")

    p = sub.add_parser("compute", help="apply an operator and report norms")
    common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="grid text file")
    src.add_argument("--generator", help="corpus generator, e.g. 'log:sign=-1,eps=0.001'")
    p.add_argument("--shape", default="64", help="grid shape for --generator, e.g. 128 or 32,32")
    p.add_argument("--h", type=float, help="cell size for --generator (default 1/N)")
    p.add_argument("--op", default="maximal", help=f"one of {', '.join(OPERATORS)}")
    p.add_argument("--symbol", help="generator spec for the commutator symbol b")
    p.add_argument("--symbol-input", help="grid file for the commutator symbol b")
    p.add_argument("--norms", default="", help=f"comma list from {', '.join(NORMS)}")

    p = sub.add_parser("verify", help="run the verification suite")
    common(p)
    p.add_argument("--quick", action="store_true", help="skip the refinement and domain-growth checks")

    p = sub.add_parser("sweep", help="tabulate commutator and symbol quantities along one axis")
    common(p)
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", required=True, help="comma list of sweep points (may be empty)")
    p.add_argument("--symbol", default="log:sign=-1,eps=0.001",
                   help="generator spec for b")
    p.add_argument("--operators", default=",".join(V.OPERATORS),
                   help=f"comma list of commutators to tabulate, from {', '.join(V.OPERATORS)}")
    p.add_argument("--shape", default="128", help="grid shape for the alpha and t axes")
    p.add_argument("--h", type=float, help="cell size for the domain axis and fixed grids")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command, seed=args.seed, out=args.out, boundary=args.boundary,
                    max_scale=args.max_scale, tolerance=args.tolerance)
    cfg.alpha = 0.0 if args.alpha is None else args.alpha
    if args.exponents:
        cfg.exponents = _floats(args.exponents, 4, "--exponents")
    if args.slice:
        cfg.slice = _floats(args.slice, 3, "--slice")
    if args.command in ("compute", "sweep"):
        cfg.shape = _shape(args.shape)
        cfg.h = args.h
        cfg.symbol = args.symbol
    if args.command == "compute":
        cfg.input, cfg.generator, cfg.op = args.input, args.generator, args.op
        cfg.symbol_input = args.symbol_input
        cfg.norms = tuple(x.strip() for x in args.norms.split(",") if x.strip())
    if args.command == "verify":
        cfg.quick = args.quick
        if args.alpha is None:
            cfg.alpha = V.SuiteConfig.alpha
    if args.command == "sweep":
        cfg.axis = args.axis
        cfg.values = _floats(args.values, None, "--values")
        cfg.operators = tuple(x.strip() for x in args.operators.split(",") if x.strip())
        if args.alpha is None:
            cfg.alpha = V.SuiteConfig.alpha
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Reject inconsistent parameters before any computation starts."""
    if cfg.max_scale is not None and cfg.max_scale < 1:
        raise ValidationError(f"--max-scale must be at least 1, got {cfg.max_scale}")
    if cfg.tolerance is not None and not cfg.tolerance >= 0:
        raise ValidationError(f"--tolerance must be non-negative, got {cfg.tolerance}")
    if cfg.h is not None and not cfg.h > 0:
        raise ValidationError(f"--h must be positive, got {cfg.h}")
    if cfg.slice is not None:
        SliceParams(*cfg.slice)
    if cfg.command == "compute":
        if cfg.op not in OPERATORS:
            raise ValidationError(f"unknown operator {cfg.op!r}; choose from {', '.join(OPERATORS)}")
        if cfg.op in NEEDS_SYMBOL and not (cfg.symbol or cfg.symbol_input):
            raise ValidationError(f"operator {cfg.op!r} needs --symbol or --symbol-input")
        bad = [n for n in cfg.norms if n not in NORMS]
        if bad:
            raise ValidationError(f"unknown norm(s) {bad}; choose from {', '.join(NORMS)}")
        if "slice" in cfg.norms and cfg.slice is None:
            raise ValidationError("the slice norm needs --slice t,r,p")
    if cfg.command == "sweep":
        bad = [op for op in cfg.operators if op not in V.OPERATORS]
        if bad:
            raise ValidationError(f"unknown commutator(s) {bad}; choose from {', '.join(V.OPERATORS)}")
        V.GeneratorSpec.parse(cfg.symbol or "log")
    if cfg.exponents is not None:
        dim = len(cfg.shape) if cfg.command != "verify" else 1
        ExponentSet(*cfg.exponents, alpha=cfg.alpha, n=dim)


def _family(cfg: RunConfig, shape) -> CubeFamily:
    k = cfg.max_scale if cfg.max_scale is not None else min(shape)
    return CubeFamily.up_to(k, cfg.boundary)


def _load_or_generate(path, spec_text, cfg: RunConfig) -> GridFunction:
    if path:
        return load_grid(path)
    spec = V.GeneratorSpec.parse(spec_text, seed=cfg.seed)
    h = cfg.h if cfg.h is not None else 1.0 / cfg.shape[0]
    return V.generate(spec, cfg.shape, h)


def _norm_report(f: GridFunction, cfg: RunConfig, family: CubeFamily) -> dict:
    out = {}
    if "lp" in cfg.norms:
        p = cfg.exponents[0] if cfg.exponents else (cfg.slice[2] if cfg.slice else 2.0)
        out["lp"] = {"p": p, "value": lp_norm(f, p)}
    if "slice" in cfg.norms:
        sp = SliceParams(*cfg.slice)
        out["slice"] = {"t": sp.t, "r": sp.r, "p": sp.p, "value": slice_norm(f, sp)}
    if "bmo" in cfg.norms:
        out["bmo"] = bmo_norm(f, CubeFamily.up_to(min(f.shape)) if family.boundary != "interior" else family)
    return out


def cmd_compute(cfg: RunConfig, stdout=sys.stdout) -> int:
    f = _load_or_generate(cfg.input, cfg.generator, cfg)
    family = _family(cfg, f.shape)
    params = OperatorParams(cfg.alpha, family)
    if cfg.op in NEEDS_SYMBOL:
        b = _load_or_generate(cfg.symbol_input, cfg.symbol, cfg)
        if b.shape != f.shape or b.h != f.h:
            raise ValidationError(f"symbol grid {b.shape} h={b.h} differs from input grid {f.shape} h={f.h}")
    ops = {
        "identity": lambda: f,
        "maximal": lambda: maximal(f, params),
        "maximal-fast": lambda: maximal_fast(f, params),
        "sharp": lambda: sharp_maximal(f, family),
        "commutator": lambda: commutator_maximal(b, f, params, fast=True),
        "maximal-commutator": lambda: maximal_commutator(b, f, params),
        "sharp-commutator": lambda: commutator_sharp(b, f, family),
    }
    result = ops[cfg.op]()
    text = format_grid(result)
    sidecar = {"schema_version": V.SCHEMA_VERSION, "config": cfg.to_dict(), "operator": cfg.op,
               "shape": list(result.shape), "h": result.h,
               "norms": {"input": _norm_report(f, cfg, family), "output": _norm_report(result, cfg, family)}}
    if cfg.out:
        Path(cfg.out).write_text(text)
        Path(cfg.out + ".json").write_text(dump_json(sidecar))
    else:
        stdout.write(text)
        if cfg.norms:
            stdout.write(dump_json(sidecar["norms"]))
    return EXIT_OK


def cmd_verify(cfg: RunConfig, stdout=sys.stdout) -> int:
    suite = V.SuiteConfig(seed=cfg.seed, tolerance=cfg.tolerance, alpha=cfg.alpha, soft=not cfg.quick)
    if cfg.exponents is not None:
        suite.p = cfg.exponents[0]
        if cfg.exponents[1] != cfg.exponents[0]:
            raise ValidationError("the suite uses equal inner and outer source exponents (p = q)")
    if cfg.slice is not None:
        suite.t = cfg.slice[0]
    reports = V.run_suite(suite)
    doc_config = {"run": cfg.to_dict(), "suite": suite.to_dict()}
    if cfg.out:
        V.write_report(reports, cfg.out, doc_config)
    stdout.write(V.format_summary(V.summarize(reports)) + "\n")
    failures = V.hard_failures(reports)
    soft = [r for r in reports if r.failed and r.severity == "soft"]
    for rep in failures:
        stdout.write(f"FAILED {rep.check_id}: {json.dumps(V._clean(rep.instance), sort_keys=True)}\n")
    for rep in soft:
        stdout.write(f"soft check did not hold: {rep.check_id} {json.dumps(V._clean(rep.quantities), sort_keys=True)}\n")
    return EXIT_ASSERTION if failures else EXIT_OK


def _sweep_grid(cfg: RunConfig, value: float):
    """(cells per axis, h, alpha, t) for one sweep point."""
    base_n = cfg.shape[0]
    alpha = cfg.alpha
    t = cfg.slice[0] if cfg.slice else V.SuiteConfig.t
    h = cfg.h if cfg.h is not None else 1.0 / base_n
    if cfg.axis == "resolution":
        n = int(value)
        return n, 1.0 / n, alpha, t
    if cfg.axis == "domain":
        h = cfg.h if cfg.h is not None else 1.0 / 64
        return int(value), h, alpha, t
    if cfg.axis == "alpha":
        return base_n, h, float(value), t
    return base_n, h, alpha, float(value)


def sweep_columns(operators) -> list[str]:
    cols = ["axis", "value", "cells", "h", "alpha", "t", "p", "q", "r", "s", "bmo", "chi_Q_side",
            "chi_Q_maximal", "maximal_slice_C", "fractional_slice_C", "pointwise_C"]
    for op in operators:
        slice_form, mean_form = V.OPERATOR_FORMS[op]
        cols += [f"{op}_ratio", slice_form, mean_form]
    return cols


def sweep_rows(cfg: RunConfig):
    """Yield one dict per sweep point; column names from :func:`sweep_columns`."""
    dim = len(cfg.shape)
    b_spec = V.GeneratorSpec.parse(cfg.symbol or "log:sign=-1,eps=0.001", seed=cfg.seed)
    p = cfg.exponents[0] if cfg.exponents else 1.5
    q = cfg.exponents[1] if cfg.exponents else 1.5
    for value in cfg.values:
        n, h, alpha, t = _sweep_grid(cfg, value)
        if n < 4:
            raise ValidationError(f"sweep point {value} gives only {n} cells")
        exps = ExponentSet.from_alpha(alpha, dim, p, q)
        shape = (n,) * dim
        family = V.refinement_family(n, 0.25) if cfg.max_scale is None else CubeFamily.up_to(cfg.max_scale)
        b = V.generate(b_spec, shape, h)
        f_list = [V.generate(s, shape, h) for s in V.DEFAULT_TEST_FUNCTIONS]
        side = max(2, n // 8)
        cube = Cube((n // 2 - side // 2,) * dim, side)
        chi = b.indicator(cube)
        row = {"axis": cfg.axis, "value": value, "cells": n, "h": h, "alpha": alpha, "t": t,
               "p": exps.p, "q": exps.q, "r": exps.r, "s": exps.s,
               "bmo": bmo_norm(b, family), "chi_Q_side": side,
               "chi_Q_maximal": maximal_at(chi, cube.anchor, OperatorParams(alpha, CubeFamily.up_to(n))),
               "maximal_slice_C": V.slice_bound_constant("maximal", f_list, exps, t, family)[0],
               "fractional_slice_C": V.slice_bound_constant("fractional", f_list, exps, t, family)[0],
               "pointwise_C": V.pointwise_bound_constant(b, f_list[0], alpha, family)[0]}
        for op in cfg.operators:
            qs = V.equivalence_quantities(op, b, f_list, exps, t, family)
            slice_form, mean_form = V.OPERATOR_FORMS[op]
            row[f"{op}_ratio"] = qs["operator_ratio"]
            row[slice_form], row[mean_form] = qs[slice_form], qs[mean_form]
        yield row


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def sweep_csv(cfg: RunConfig) -> str:
    buf = io.StringIO()
    buf.write(f"# slicemax sweep config {json.dumps(cfg.to_dict(), sort_keys=True, separators=(',', ':'))}\n")
    writer = csv.writer(buf, lineterminator="\n")
    cols = sweep_columns(cfg.operators)
    writer.writerow(cols)
    for row in sweep_rows(cfg):
        writer.writerow([_cell(row[c]) for c in cols])
    return buf.getvalue()


def cmd_sweep(cfg: RunConfig, stdout=sys.stdout) -> int:
    text = sweep_csv(cfg)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        stdout.write(text)
    return EXIT_OK


COMMANDS = {"compute": cmd_compute, "verify": cmd_verify, "sweep": cmd_sweep}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg, stdout=stdout)
    except GridParseError as exc:
        stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    except OSError as exc:
        stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except ValueError as exc:
        stderr.write(f"invalid parameters: {exc}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
