"""Command line front end: ``qaop fit | compare | resources | eval``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields

import numpy as np

from qaop.circuit.config import IterationConfig
from qaop.circuit.resources import resource_report
from qaop.errors import (
    ConfigurationError,
    DomainError,
    InvalidInputError,
    InvalidParameterError,
    QaopError,
    ResourceRefusal,
)
from qaop.pipeline import (
    RunConfig,
    dump_outputs,
    eval_regression,
    ingest_csv,
    load_config_file,
    load_input,
    run_pipeline,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_REFUSED = 0, 2, 3, 4

log = logging.getLogger("qaop")


def _run_flags(p: argparse.ArgumentParser, *, with_mode: bool) -> None:
    p.add_argument("input", nargs="?", help="samples-by-features CSV, or random:NxM")
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("-k", type=int)
    p.add_argument("--k-nn", type=int)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--rho0", type=float)
    p.add_argument("-s", type=int, help="outer iterations")
    p.add_argument("--s-prime", type=int, help="Newton iterations")
    p.add_argument("-b", type=int, help="eigenvalue register bits")
    p.add_argument("-d", type=int, help="arithmetic register bits")
    p.add_argument("-p", type=int, help="state preparation angle bits")
    p.add_argument("--t0", help="'auto' or a number")
    p.add_argument("--rho", help="'auto' or a number")
    if with_mode:
        p.add_argument("--mode", choices=("classical", "spectral", "quantum-matrix", "quantum-gate"))
    p.add_argument("--seed", type=int)
    p.add_argument("--qubit-budget", type=int)
    p.add_argument("-o", "--output", help="JSON report path (stdout if omitted)")
    p.add_argument("--dump-dir", help="write projection and gain CSVs here")
    p.add_argument("--trace", dest="trace_path", help="write the circuit trace here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaop", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _run_flags(sub.add_parser("fit", help="fit a projection with one path"), with_mode=True)
    _run_flags(sub.add_parser("compare", help="cross-check classical, spectral and quantum paths"),
               with_mode=False)

    r = sub.add_parser("resources", help="qubit and gate counts for a problem size")
    r.add_argument("-n", type=int, required=True)
    r.add_argument("-k", type=int, required=True)
    r.add_argument("-m", type=int)
    r.add_argument("-b", type=int, default=6)
    r.add_argument("-d", type=int, default=6)
    r.add_argument("-p", type=int, default=12)
    r.add_argument("--s-prime", type=int, default=3)
    r.add_argument("-o", "--output")

    e = sub.add_parser("eval", help="regress observations on the reduced data")
    _run_flags(e, with_mode=True)
    e.add_argument("--observations", required=True, help="CSV with one response per sample")
    return parser


def config_from_args(args: argparse.Namespace, mode: str | None = None) -> RunConfig:
    values = load_config_file(args.config) if args.config else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    if mode is not None:
        values["mode"] = mode
    return RunConfig(**values).validate()


def _emit(report: dict, path: str | None) -> None:
    text = json.dumps(report, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_run(args, mode=None) -> int:
    cfg = config_from_args(args, mode)
    report, paths = run_pipeline(cfg)
    written = dump_outputs(paths, cfg)
    if written:
        report["written"] = written
    _emit(report, cfg.output)
    if cfg.mode == "compare":
        log.info("max projector distance %.3e", report["comparison"]["max_projector_distance"])
    return EXIT_OK


def _cmd_resources(args) -> int:
    cfg = IterationConfig(b=args.b, d=args.d, p=args.p, s_prime=args.s_prime)
    report = {"schema": "qaop-resources/1", **resource_report(cfg, args.n, args.k, args.m)}
    _emit(report, args.output)
    return EXIT_OK


def _cmd_eval(args) -> int:
    cfg = config_from_args(args)
    X = load_input(cfg.input, cfg.seed)
    report, paths = run_pipeline(cfg, X)
    z = ingest_csv(args.observations).ravel()
    A = next(iter(paths.values())).A
    report["regression"] = eval_regression(A.T @ X, z).as_dict()
    _emit(report, cfg.output)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "resources":
            return _cmd_resources(args)
        if args.command == "eval":
            return _cmd_eval(args)
        return _cmd_run(args, "compare" if args.command == "compare" else None)
    except ResourceRefusal as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (InvalidInputError, InvalidParameterError, ConfigurationError, DomainError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QaopError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
