"""Command-line entry point: ``hetfilter <subcommand> ...``.

Exit status is 0 on success, 1 on domain errors (one JSON line on stderr) and
2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dynamics as dyn
from . import experiment as exp
from . import randgen
from .graph import Graph, GraphError, dump_graph, load_graph, members
from .robustness import HALFSIZE_CAP, CapExceeded, RobustnessVerdict, certify_robust_halfsize, is_robust_exact
from .rng import Stream, fresh_seed, generator


class DomainError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def _seed(args) -> int:
    if args.seed is None:
        args.seed = fresh_seed()
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _out_path(args, name: str | None, default: str | None) -> Path | None:
    if name:
        path = Path(name)
    elif default and args.out_dir:
        path = Path(default)
    else:
        return None
    if args.out_dir and not path.is_absolute():
        path = Path(args.out_dir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _emit(args, text: str, name: str | None = None, default: str | None = None) -> None:
    path = _out_path(args, name, default)
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DomainError("io", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DomainError("invalid_json", f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _load(args):
    try:
        g, file_thresholds = load_graph(args.graph)
    except OSError as exc:
        raise DomainError("io", f"cannot read {args.graph}: {exc.strerror}") from None
    t = _thresholds(args.thresholds, g.n) if args.thresholds else file_thresholds
    if t is None:
        raise DomainError("missing_thresholds", "graph file has no thresholds; pass --thresholds")
    return g, list(t)


def _thresholds(value: str, n: int) -> list[int]:
    """Thresholds from a JSON file (array, or graph object) or inline ``a,b,...`` / single int."""
    if os.path.exists(value):
        obj = _read_json(value)
        if isinstance(obj, dict):
            obj = obj.get("thresholds")
        if not isinstance(obj, list):
            raise DomainError("invalid_thresholds", f"{value} holds no threshold array")
        return [int(x) for x in obj]
    try:
        parts = [int(p) for p in value.split(",") if p.strip()]
    except ValueError:
        raise DomainError("invalid_thresholds", f"cannot parse thresholds {value!r}") from None
    if len(parts) == 1:
        return parts * n
    return parts


def cmd_generate(args) -> None:
    seed = _seed(args)
    model = args.model
    c = randgen.resolve_c(args.c, args.n) if model in ("er", "rin") else 0.0
    if model == "er":
        p = args.p if args.p is not None else randgen.er_edge_probability(args.n, args.r, c).p
        g = randgen.sample_er(args.n, p, seed)
    elif model == "rin":
        intra = ()
        if args.intra == "complete":
            intra = tuple(Graph.complete(args.n) for _ in range(args.k))
        params = randgen.RinParams(args.k, args.n, args.r, c, intra)
        g = randgen.sample_rin(params, seed, p=args.p)
    elif model == "hetero":
        if not args.p_matrix:
            raise DomainError("usage", "--model hetero needs --p-matrix")
        g = randgen.sample_heterogeneous(_read_json(args.p_matrix), seed)
    else:
        g, _ = randgen.two_clique_counterexample(args.n)

    thresholds = None
    if args.threshold_dist == "default":
        if args.r_bar is None:
            raise DomainError("usage", "--threshold-dist default needs --r-bar")
        dist = randgen.default_threshold_distribution(args.n, args.r, args.r_bar)
    elif args.threshold_dist:
        dist = randgen.ThresholdDistribution.from_weights(_read_json(args.threshold_dist))
    else:
        dist = None
    if dist is not None:
        thresholds = np.minimum(randgen.sample_thresholds(dist, g.n, seed), max(g.n - 1, 0)).tolist()
    elif model == "figure1":
        thresholds = [1] * g.n
    _emit(args, dump_graph(g, thresholds), args.out)


def _verdict(g, t, method: str) -> dict:
    if method == "exact":
        return is_robust_exact(g, t).to_json()
    cert = certify_robust_halfsize(g, t)
    if cert.certified:
        return RobustnessVerdict(True, method="halfsize").to_json()
    try:
        return is_robust_exact(g, t).to_json()
    except CapExceeded:
        return {"robust": None, "witness": None, "method": "halfsize", "inconclusive_set": members(cert.inconclusive_set)}


def cmd_check(args) -> None:
    g, t = _load(args)
    _emit(args, _dump_json(_verdict(g, t, args.method)), args.out)


def cmd_witness(args) -> None:
    g, t = _load(args)
    v = is_robust_exact(g, t)
    out = v.to_json()
    out["init"] = None if v.robust else dyn.witness_initial_condition(*v.witness, g.n).tolist()
    _emit(args, _dump_json(out), args.out)


def cmd_simulate(args) -> None:
    g, t = _load(args)
    cfg = dyn.DynamicsConfig(epsilon=args.epsilon, max_steps=args.max_steps)
    if args.init in ("uniform-random", "bisection"):
        rng = generator(_seed(args), Stream.INIT)
        x0 = dyn.uniform_random_init(g.n, rng) if args.init == "uniform-random" else dyn.random_bisection(g.n, rng)
    elif args.init == "witness":
        v = is_robust_exact(g, t)
        if v.robust:
            raise DomainError("robust_graph", "graph is robust; no witness initial condition exists")
        x0 = dyn.witness_initial_condition(*v.witness, g.n)
    else:
        x0 = np.asarray(_read_json(args.init), dtype=float)
    res = dyn.simulate(g, t, x0, cfg, record_gaps=bool(args.gaps_csv))
    _emit(args, _dump_json(res.to_json()), args.out)
    if args.gaps_csv:
        lines = ["k,gap"] + [f"{k},{gap!r}" for k, gap in enumerate(res.gaps)]
        _emit(args, "\n".join(lines) + "\n", args.gaps_csv)


def _spec(args) -> exp.TrialSpec:
    obj = _read_json(args.spec)
    if not isinstance(obj, dict):
        raise DomainError("invalid_spec", "experiment spec must be a JSON object")
    if args.seed is not None:
        obj["seed"] = args.seed
    elif "seed" not in obj:
        obj["seed"] = _seed(args)
    return exp.TrialSpec.from_json(obj)


def cmd_experiment(args) -> None:
    spec = _spec(args)
    records = exp.run_trials(spec, workers=args.workers, timing=args.timing)
    table = exp.records_csv(records)
    summary = _dump_json(exp.summarize(records).to_json())
    if not (args.records or args.summary or args.out_dir):
        sys.stdout.write(table if args.format == "csv" else summary)
        return
    _emit(args, table, args.records, "records.csv")
    _emit(args, summary, args.summary, "summary.json")


def cmd_sweep(args) -> None:
    spec = _spec(args)
    try:
        grid = [float(v) for v in args.grid.split(",") if v.strip()]
    except ValueError:
        raise DomainError("usage", f"cannot parse grid {args.grid!r}") from None
    rows = exp.phase_sweep(spec, args.variable, grid, workers=args.workers)
    if args.format == "json":
        text = _dump_json([r.__dict__ for r in rows])
    else:
        text = exp.sweep_csv(rows)
    _emit(args, text, args.out, "sweep.csv")


def _global_options(parser: argparse.ArgumentParser, suppress: bool = False) -> None:
    # registered on the top-level parser and on every subcommand; subcommands
    # suppress their defaults so a value given before the subcommand survives
    def d(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=d(None), help="master seed (64-bit); a random one is printed if omitted")
    parser.add_argument("--out-dir", default=d(None), help="directory for output files")
    parser.add_argument("--format", choices=("json", "csv"), default=d(None),
                        help="experiment stdout: summary json (default) or records csv; sweep output: csv (default) or json")
    parser.add_argument("--workers", type=int, default=d(1), help="worker processes for experiment/sweep")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetfilter",
        description="Filtering opinion dynamics with heterogeneous thresholds: "
        "generate graphs, certify robustness, simulate, run Monte Carlo experiments.",
    )
    _global_options(parser)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="{generate,check,simulate,witness,experiment,sweep}")

    p = sub.add_parser("generate", parents=[common], help="sample a graph (and thresholds) to graph JSON")
    p.add_argument("--model", choices=("er", "rin", "hetero", "figure1"), required=True)
    p.add_argument("--n", type=int, required=True, help="nodes (per community for rin)")
    p.add_argument("--r", type=int, default=1, help="minimum-degree target in the edge-probability formula")
    p.add_argument("--c", default="0", help="offset: number, constant(a), neg-constant(a) or lnlnln")
    p.add_argument("--p", type=float, help="explicit edge probability (er/rin)")
    p.add_argument("--k", type=int, default=2, help="communities (rin)")
    p.add_argument("--intra", choices=("empty", "complete"), default="empty", help="community graphs (rin)")
    p.add_argument("--p-matrix", help="JSON file with the pair-probability matrix (hetero)")
    p.add_argument("--threshold-dist", help="'default' or a JSON file of threshold weights")
    p.add_argument("--r-bar", type=int, help="largest threshold for --threshold-dist default")
    p.add_argument("--out", help="graph JSON output path (default stdout)")
    p.set_defaults(func=cmd_generate)

    def graph_args(p):
        p.add_argument("--graph", required=True, help="graph JSON file")
        p.add_argument("--thresholds", help="JSON file, comma list, or one integer for all nodes")
        p.add_argument("--out", help="output path (default stdout)")

    p = sub.add_parser("check", parents=[common], help="decide (T+1)-robustness")
    graph_args(p)
    p.add_argument("--method", choices=("exact", "halfsize"), default="exact",
                   help=f"exact: n <= 24; halfsize: one-sided certificate, n <= {HALFSIZE_CAP}")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", parents=[common], help="run the filtering dynamics")
    graph_args(p)
    p.add_argument("--init", default="uniform-random",
                   help="JSON file of opinions, uniform-random, bisection or witness")
    p.add_argument("--epsilon", type=float, default=1e-9, help="consensus tolerance on the gap")
    p.add_argument("--max-steps", type=int, default=10_000)
    p.add_argument("--gaps-csv", help="write per-step gaps as k,gap")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("witness", parents=[common], help="non-robustness witness and its frozen initial condition")
    graph_args(p)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("experiment", parents=[common], help="run a seeded trial batch from a spec file")
    p.add_argument("--spec", required=True, help="experiment spec JSON")
    p.add_argument("--records", help="records CSV path (trial,seed,outcome,steps,ms)")
    p.add_argument("--summary", help="summary JSON path")
    p.add_argument("--timing", action="store_true", help="fill the ms column with wall time (breaks byte-identical reruns)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("sweep", parents=[common], help="success fraction over a parameter grid")
    p.add_argument("--spec", required=True, help="experiment spec JSON (base point)")
    p.add_argument("--variable", choices=exp.SWEEP_VARIABLES, required=True)
    p.add_argument("--grid", required=True, help="comma-separated grid values")
    p.add_argument("--out", help="sweep CSV path (grid_value,fraction,lo95,hi95,trials)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except DomainError as exc:
        kind, msg = exc.kind, str(exc)
    except CapExceeded as exc:
        kind, msg = "cap_exceeded", str(exc)
    except (GraphError, exp.SpecError) as exc:
        kind, msg = "invalid_input", str(exc)
    except ValueError as exc:
        kind, msg = "invalid_value", str(exc)
    else:
        return 0
    print(json.dumps({"error": kind, "message": msg}), file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
