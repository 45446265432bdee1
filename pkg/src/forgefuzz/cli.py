"""Command-line entry point: ``forgefuzz <command> ...``.

Every command that writes files also writes a JSON manifest (inputs with
hashes, configuration, seeds, library versions) next to its outputs.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .analysis import (
    UserLoad,
    correlation_csv,
    correlation_report,
    dataset_summary,
    dataset_summary_csv,
    projection_csvs,
    scatter_csv,
)
from .baselines import gen_random, gen_simple
from .dataset import DatasetError, EmptyDatasetError, parse_gharchive_lines, read_edge_list, summarize, write_edge_list
from .discrepancy import DiscrepancyConfig
from .evolve import EaConfig, run_ea
from .features import FeaturePoints, feature_points
from .followgraph import assemble_graph, graph_from_parts
from .replay import CommitCorpus, replay
from .simforge import CostModel, SimForge

log = logging.getLogger("forgefuzz")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_BAD_INPUT = 4
EXIT_EMPTY = 5
EXIT_INVALID = 6


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"no such file: {path}", EXIT_MISSING_FILE)
    return p.read_text(encoding="utf-8")


def _sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    return path


def _manifest(path: Path, command: str, args: argparse.Namespace, inputs: list[str], outputs: list[Path],
              seeds: dict | None = None) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "verbose")}
    doc = {
        "command": command,
        "config": config,
        "inputs": {p: _sha256(p) for p in inputs},
        "outputs": {o.name: _sha256(str(o)) for o in outputs},
        "seeds": seeds or {},
        "versions": {
            "forgefuzz": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    _write(path, json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def _load_edges(path: str, with_follows: bool):
    return read_edge_list(_read(path), with_follows=with_follows)


# ------------------------------------------------------------------ commands

def cmd_ingest(args) -> int:
    el, st = parse_gharchive_lines(_read(args.input).splitlines())
    out = _write(Path(args.output), write_edge_list(el))
    print(f"accepted {st.accepted} of {st.lines} lines; filtered {st.filtered}, malformed {st.malformed}, "
          f"missing fields {st.missing_fields}", file=sys.stderr)
    _manifest(out.with_suffix(".manifest.json"), "ingest", args, [args.input], [out])
    return EXIT_OK


def cmd_summary(args) -> int:
    el = _load_edges(args.input, args.with_follows)
    c = summarize(el) if args.with_follows else summarize(el, assemble_graph(el).follows)
    rows = [(k, v) for k, v in c.by_type().items()] + [("total", c.total), ("users", c.users), ("repos", c.repos)]
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v}")
    return EXIT_OK


def _graph(el):
    if el.follows is not None:
        return graph_from_parts(el.without_follows(), el.follows)
    return assemble_graph(el)


def cmd_features(args) -> int:
    el = _load_edges(args.input, args.with_follows)
    fp = feature_points(_graph(el))
    out = _write(Path(args.output), fp.to_csv())
    _manifest(out.with_suffix(".manifest.json"), "features", args, [args.input], [out])
    return EXIT_OK


def cmd_evolve(args) -> int:
    el = _load_edges(args.input, False)
    cfg = EaConfig(
        generations=args.generations,
        lam=args.lam,
        rate_increase=args.rate_increase,
        rate_decrease=args.rate_decrease,
        initial_rate=args.initial_rate,
        rate_min=args.rate_min,
        rate_max=args.rate_max,
        min_mutations=args.min_mutations,
        rng_seed=args.seed,
        strict_improvement=args.strict_improvement,
        discrepancy=DiscrepancyConfig(args.grid_divisions, args.include_point_coordinates),
    )
    best, history = run_ea(el, cfg, workers=args.workers)
    d = Path(args.out_dir)
    outs = [_write(d / "evolved.csv", write_edge_list(best)), _write(d / "evolution_log.csv", history.to_csv())]
    final = history.records[-1].parent_score if history.records else history.initial_score
    print(f"discrepancy (G={args.grid_divisions}) {history.initial_score:.6f} -> {final:.6f}; "
          f"{len(best)} events", file=sys.stderr)
    _manifest(d / "manifest.json", "evolve", args, [args.input], outs, {"rng_seed": args.seed})
    return EXIT_OK


def cmd_baseline(args) -> int:
    el = _load_edges(args.input, False)
    gen = gen_simple if args.mode == "simple" else gen_random
    out_el = gen(el, args.target_nonfollow, args.target_follow, np.random.default_rng(args.seed))
    out = _write(Path(args.output), write_edge_list(out_el))
    _manifest(out.with_suffix(".manifest.json"), "baseline", args, [args.input], [out], {"seed": args.seed})
    return EXIT_OK


def _follow_limit(text: str):
    if text.lower() in ("inf", "none", "unlimited"):
        return None
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("follow limit must be an integer or 'inf'") from None
    if v < 0:
        raise argparse.ArgumentTypeError("follow limit must be >= 0")
    return v


def cmd_replay(args) -> int:
    el = _load_edges(args.input, args.with_follows)
    inputs = [args.input]
    if args.corpus:
        corpus = CommitCorpus.from_text(_read(args.corpus))
        inputs.append(args.corpus)
    else:
        corpus = CommitCorpus.from_edge_list(el, seed=args.seed)
    if args.backend == "sim":
        cost = CostModel.parse(_read(args.cost_model)) if args.cost_model else CostModel()
        if args.cost_model:
            inputs.append(args.cost_model)
        forge = SimForge(follow_limit=args.follow_limit, cost_model=cost)
    else:
        from .httpforge import HttpForge

        if not args.url or not args.token:
            raise CliError("--backend http needs --url and --token", EXIT_USAGE)
        forge = HttpForge(args.url, args.token)
    report = replay(el, forge, corpus, order=args.order, seed=args.seed)
    d = Path(args.out_dir)
    outs = [_write(d / "report.json", report.to_json()), _write(d / "outcomes.csv", report.outcomes_csv())]
    if isinstance(forge, SimForge):
        outs.append(_write(d / "request_log.csv", forge.request_log_csv()))
    print(f"applied {report.applied}, skipped {report.skipped}: {dict(report.error_tally)}", file=sys.stderr)
    _manifest(d / "manifest.json", "replay", args, inputs, outs, {"seed": args.seed})
    return EXIT_OK


def cmd_analyze(args) -> int:
    d = Path(args.out_dir)
    inputs, outs = [], []
    if args.features:
        points = FeaturePoints.from_csv(_read(args.features))
        inputs.append(args.features)
        for key, text in projection_csvs(points).items():
            outs.append(_write(d / f"projection_{key}.csv", text))
        if args.request_log:
            load = UserLoad.from_request_log_csv(_read(args.request_log), args.aggregate)
            inputs.append(args.request_log)
            # users created only as follow targets have load but may lack features
            missing = set(points.users) - load.users()
            if missing:
                raise CliError(f"{len(missing)} users have no requests in the log", EXIT_BAD_INPUT)
            keep = set(points.users)
            load = UserLoad(*({u: v for u, v in getattr(load, k).items() if u in keep}
                              for k in ("cpu", "memory", "latency")))
            cells = correlation_report(points, load, method=args.p_method)
            outs.append(_write(d / "correlation.csv", correlation_csv(cells)))
            outs.append(_write(d / "scatter.csv", scatter_csv(points, load)))
    elif args.request_log:
        raise CliError("--request-log needs --features", EXIT_USAGE)
    if args.dataset:
        sets = {}
        for spec in args.dataset:
            name, sep, path = spec.partition("=")
            if not sep:
                raise CliError(f"--dataset expects name=path, got {spec!r}", EXIT_USAGE)
            sets[name] = read_edge_list(_read(path), with_follows=True)
            inputs.append(path)
        cfg = DiscrepancyConfig(args.grid_divisions)
        outs.append(_write(d / "datasets.csv", dataset_summary_csv(dataset_summary(sets, cfg), cfg)))
    if not outs:
        raise CliError("nothing to analyze: give --features and/or --dataset", EXIT_USAGE)
    _manifest(d / "manifest.json", "analyze", args, inputs, outs)
    return EXIT_OK


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="forgefuzz", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"forgefuzz {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="GitHub-Archive JSON lines -> edge-list CSV")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("summary", help="print per-type event counts")
    s.add_argument("input")
    s.add_argument("--with-follows", action="store_true", help="use the follow rows stored in the file")
    s.set_defaults(func=cmd_summary)

    s = sub.add_parser("features", help="per-user feature CSV")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--with-follows", action="store_true")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("evolve", help="diversify an edge list with the (1+lambda) EA")
    s.add_argument("input")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--generations", type=int, default=1000)
    s.add_argument("--lambda", dest="lam", type=int, default=20)
    s.add_argument("--rate-increase", type=float, default=2.0)
    s.add_argument("--rate-decrease", type=float, default=0.5)
    s.add_argument("--initial-rate", type=float, default=None, help="default 1/n")
    s.add_argument("--rate-min", type=float, default=None, help="default 1/(10n)")
    s.add_argument("--rate-max", type=float, default=0.25)
    s.add_argument("--min-mutations", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--grid-divisions", type=int, default=16)
    s.add_argument("--include-point-coordinates", action="store_true")
    s.add_argument("--strict-improvement", action="store_true")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("baseline", help="size-matched Simple/Random comparison dataset")
    s.add_argument("input")
    s.add_argument("--mode", choices=("simple", "random"), required=True)
    s.add_argument("--target-nonfollow", type=int, required=True)
    s.add_argument("--target-follow", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_baseline)

    s = sub.add_parser("replay", help="replay a dataset against a forge")
    s.add_argument("input")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--with-follows", action="store_true")
    s.add_argument("--backend", choices=("sim", "http"), default="sim")
    s.add_argument("--order", choices=("listed", "shuffle"), default="listed")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--follow-limit", type=_follow_limit, default=300, help="integer or 'inf'")
    s.add_argument("--corpus", help="blank-line separated commit texts")
    s.add_argument("--cost-model", help="'op.field = value' parameter file (sim backend)")
    s.add_argument("--url", help="forge base URL (http backend)")
    s.add_argument("--token", help="admin API token (http backend)")
    s.set_defaults(func=cmd_replay)

    s = sub.add_parser("analyze", help="feature/load correlations, projections, dataset table")
    s.add_argument("--features", help="CSV written by 'features'")
    s.add_argument("--request-log", help="request_log.csv written by 'replay'")
    s.add_argument("--aggregate", choices=("mean", "total"), default="mean")
    s.add_argument("--p-method", choices=("t", "permutation"), default="t")
    s.add_argument("--dataset", action="append", metavar="NAME=CSV", help="edge list with follows; repeatable")
    s.add_argument("--grid-divisions", type=int, default=16)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_analyze)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"forgefuzz: error: {exc}", file=sys.stderr)
        return exc.code
    except EmptyDatasetError as exc:
        print(f"forgefuzz: empty dataset: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except DatasetError as exc:
        print(f"forgefuzz: bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ValueError as exc:
        print(f"forgefuzz: invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
