"""Command-line entry point.

    evasets <subcommand> [--q Q] [--n N] ... [--config FILE]

Exit codes: 0 when every check in the report passes, 2 when a verification
fails, 1 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import fields

from .errors import EvasetsError
from .experiments import (
    ExperimentConfig, Report, export_report, report_to_csv, report_to_json, run_alpha, run_cctree, run_count_gp,
    run_evasive_campaign, run_supersat_sweep,
)

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


FLAGS = {
    "q": int, "n": int, "k": int, "d": int, "r": int, "p": float, "trials": int, "seed": int,
    "eps": float, "c": float, "c_prime": float, "theta": float, "out": str, "format": str,
    "workers": int, "samples": int, "process": str,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evasets", description="Evasive sets, containers and container-clique trees over F_q.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "alpha": "largest collinear-triple-free subsets of p-random subsets of F_q^2",
        "supersat": "collinear-triple counts and supersaturated hypergraph certificates",
        "cctree": "build and verify a container-clique tree",
        "evasive": "random zero-locus evasive sets over many seeds",
        "count-gp": "count general position subsets exhaustively",
        "bounds": "print the closed-form bounds for (d, k, n, r, q)",
        "verify": "check that a point-set file is (d, k, r)-evasive",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        for flag, typ in FLAGS.items():
            sp.add_argument("--" + flag.replace("_", "-"), dest=flag, type=typ, default=None)
        sp.add_argument("--config", default=None, help="key=value file; flags override it")
        if name == "verify":
            sp.add_argument("input", help="point-set file")
    return parser


def read_config(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for ln in fh:
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            key, sep, value = ln.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or key not in FLAGS:
                raise UsageError(f"bad config line: {ln!r}")
            try:
                out[key] = FLAGS[key](value.strip())
            except ValueError as err:
                raise UsageError(f"bad value for {key}: {value.strip()!r}") from err
    return out


def make_config(args) -> ExperimentConfig:
    values = read_config(args.config) if args.config else {}
    for key in FLAGS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    known = {f.name for f in fields(ExperimentConfig)}
    cfg = ExperimentConfig(command=args.command, **{k: v for k, v in values.items() if k in known})
    if cfg.format not in ("json", "csv"):
        raise UsageError("--format must be json or csv")
    return cfg


def _bounds(cfg: ExperimentConfig) -> Report:
    from .evasive import chow_dim, degree_schedule, slice_bound, twisted_degree_bound

    summary = {"degree_schedule": degree_schedule(cfg.n, cfg.k, cfg.d).as_dict(),
               "twisted_degree_bound": twisted_degree_bound(cfg.n, cfg.k, cfg.d)}
    if cfg.k < cfg.n:
        summary["chow_dim"] = chow_dim(cfg.d, cfg.k, cfg.n)
        if cfg.d == 1:
            summary["chow_note"] = "formula value, geometric validity unverified"
    if cfg.q is not None:
        summary["slice_bound"] = slice_bound(cfg.d, cfg.k, cfg.n, cfg.r, cfg.q)
    return Report("bounds", {"d": cfg.d, "k": cfg.k, "n": cfg.n, "r": cfg.r, "q": cfg.q}, [], summary, True)


def _verify(cfg: ExperimentConfig, path: str) -> Report:
    from .evasive import EvasiveParams, is_evasive
    from .geom import PointSet

    with open(path, encoding="utf-8") as fh:
        S = PointSet.from_text(fh.read())
    params = EvasiveParams(S.n, cfg.k, cfg.d, cfg.r, S.q)
    verdict = is_evasive(S, params)
    return Report("verify", {"input": path, "d": cfg.d, "k": cfg.k, "r": cfg.r, "q": S.q, "n": S.n},
                  [], verdict.to_record(), verdict.evasive)


def dispatch(cfg: ExperimentConfig, args) -> Report:
    cmd = cfg.command
    if cmd == "alpha":
        return run_alpha(cfg)
    if cmd == "supersat":
        return run_supersat_sweep(cfg)
    if cmd == "cctree":
        return run_cctree(cfg)
    if cmd == "evasive":
        return run_evasive_campaign(cfg)
    if cmd == "count-gp":
        return run_count_gp(cfg)
    if cmd == "bounds":
        return _bounds(cfg)
    if cmd == "verify":
        return _verify(cfg, args.input)
    raise UsageError(f"unknown command {cmd}")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = make_config(args)
        report = dispatch(cfg, args)
    except (UsageError, EvasetsError, ValueError, OSError) as err:
        print(f"evasets: {err}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.out:
        export_report(report, cfg.out, cfg.format)
    else:
        sys.stdout.write(report_to_json(report) if cfg.format == "json" else report_to_csv(report))
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
