"""Command-line interface.

Subcommands: ``enumerate``, ``sample`` (--kind coupled|edges),
``dynamics`` (coupled chain with the attribute stream on), ``verify``,
``fit``, ``export-table``.  Exit codes: 0 success, 1 validation/usage
error, 2 numerical failure (including failed verification checks).
Structured errors go to stderr as one-line JSON.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from typing import IO, Iterator

from . import __version__, fit, io, oracle, sampler, verify
from .errors import NumericalError, ValidationError
from .model_params import ModelParams


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=1.0,
                   help="node-attribute precision scale (> 0)")
    p.add_argument("--beta", type=float, default=1.0,
                   help="edge-coupling strength (>= 0)")


def _add_graph_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True,
                   help="edge-list file, or a builtin spec such as "
                        "path:5, star:4, cycle:6, grid:8, complete:4")


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master 64-bit seed")
    p.add_argument("--sweeps", type=int, default=10000)
    p.add_argument("--burnin", type=int, default=None,
                   help="default: 10%% of sweeps")
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--refresh-period", type=int, default=64)
    p.add_argument("--scan", choices=sampler.SCAN_KINDS, default="systematic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rggm",
        description="Random Gaussian graphical model: exact enumeration, "
                    "MCMC sampling, property verification, and fitting.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_enum = sub.add_parser("enumerate",
                            help="exact probability table over all "
                                 "configurations (n <= 24)")
    _add_graph_arg(p_enum)
    _add_model_args(p_enum)
    p_enum.add_argument("--method", choices=("direct", "gray"),
                        default="direct")
    p_enum.add_argument("--out", help="CSV output path (default: stdout)")

    p_exp = sub.add_parser("export-table",
                           help="like enumerate, but requires --out")
    _add_graph_arg(p_exp)
    _add_model_args(p_exp)
    p_exp.add_argument("--method", choices=("direct", "gray"), default="direct")
    p_exp.add_argument("--out", required=True, help="CSV output path")

    p_sample = sub.add_parser("sample", help="run one MCMC chain")
    _add_graph_arg(p_sample)
    _add_model_args(p_sample)
    _add_run_args(p_sample)
    p_sample.add_argument("--kind", choices=("coupled", "edges"),
                          default="edges")
    p_sample.add_argument("--out", help="summary JSON path (default: stdout)")
    p_sample.add_argument("--stream", help="JSONL sample-stream path")

    p_dyn = sub.add_parser("dynamics",
                           help="coupled chain with the attribute vector "
                                "included in the stream")
    _add_graph_arg(p_dyn)
    _add_model_args(p_dyn)
    _add_run_args(p_dyn)
    p_dyn.add_argument("--out", help="summary JSON path (default: stdout)")
    p_dyn.add_argument("--stream", help="JSONL sample-stream path")

    p_verify = sub.add_parser("verify", help="run the property-check suite")
    p_verify.add_argument("--suite", default="all",
                          help="comma-separated check names or 'all' "
                               f"(valid: {', '.join(verify.SUITE_NAMES)})")
    p_verify.add_argument("--max-edges", type=int, default=6)
    p_verify.add_argument("--trials", type=int, default=200)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--out", help="JSON report path (default: stdout)")

    p_fit = sub.add_parser("fit", help="pseudo-likelihood parameter fit")
    _add_graph_arg(p_fit)
    p_fit.add_argument("--snapshots", required=True,
                       help="JSONL snapshot file {config_bits_hex, x, weight?}")
    p_fit.add_argument("--alpha-init", type=float, default=1.0)
    p_fit.add_argument("--beta-init", type=float, default=1.0)
    p_fit.add_argument("--out", help="JSON result path (default: stdout)")
    return parser


@contextlib.contextmanager
def _out_stream(path: str | None) -> Iterator[IO[str]]:
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _config_dict(args: argparse.Namespace) -> dict:
    skip = {"command"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _cmd_enumerate(args: argparse.Namespace) -> int:
    top, _labels = io.resolve_graph(args.graph)
    params = ModelParams(args.alpha, args.beta)
    table = oracle.enumerate_measure(top, params, method=args.method)
    meta = io.make_metadata(args.command, _config_dict(args), topology=top)
    with _out_stream(args.out) as fh:
        io.write_table_csv(fh, table, meta)
    return 0


def _cmd_sample(args: argparse.Namespace, include_x: bool) -> int:
    top, _labels = io.resolve_graph(args.graph)
    params = ModelParams(args.alpha, args.beta)
    settings = sampler.RunSettings(sweeps=args.sweeps, burnin=args.burnin,
                                   thin=args.thin, seed=args.seed,
                                   scan=args.scan,
                                   refresh_period=args.refresh_period)
    if include_x or getattr(args, "kind", "edges") == "coupled":
        kind = "coupled"
    else:
        kind = "edge_only"
    meta = io.make_metadata(args.command, _config_dict(args), seed=args.seed,
                            topology=top)
    with contextlib.ExitStack() as stack:
        stream = None
        if args.stream:
            stream = stack.enter_context(open(args.stream, "w"))
        summary = sampler.run(top, params, settings, kind=kind, stream=stream,
                              stream_meta=meta, include_x=include_x)
        with _out_stream(args.out) as fh:
            io.write_json(fh, summary.to_dict(), meta)
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    names = None if args.suite == "all" else tuple(
        s.strip() for s in args.suite.split(",") if s.strip())
    reports = verify.run_suite(names=names, max_edges=args.max_edges,
                               seed=args.seed, trials=args.trials)
    meta = io.make_metadata(args.command, _config_dict(args), seed=args.seed)
    with _out_stream(args.out) as fh:
        io.write_json(fh, {"reports": [r.to_dict() for r in reports]}, meta)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:32s} instances={r.instances:<8d} "
              f"worst={r.worst:.3e} tol={r.tol:.0e}", file=sys.stderr)
    return 0 if all(r.passed for r in reports) else 2


def _cmd_fit(args: argparse.Namespace) -> int:
    top, _labels = io.resolve_graph(args.graph)
    snapshots = io.load_snapshots(args.snapshots, top)
    result = fit.fit_params(snapshots, init=(args.alpha_init, args.beta_init))
    meta = io.make_metadata(args.command, _config_dict(args), topology=top)
    with _out_stream(args.out) as fh:
        io.write_json(fh, result.to_dict(), meta)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command in ("enumerate", "export-table"):
            return _cmd_enumerate(args)
        if args.command == "sample":
            return _cmd_sample(args, include_x=False)
        if args.command == "dynamics":
            return _cmd_sample(args, include_x=True)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "fit":
            return _cmd_fit(args)
        raise AssertionError(f"unhandled command {args.command}")
    except ValidationError as exc:
        print(json.dumps({"error": "validation", "message": str(exc)}),
              file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(json.dumps({"error": "numerical", "message": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
