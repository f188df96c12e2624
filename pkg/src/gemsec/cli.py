"""Command-line entry points: embed, evaluate, benchmark.

Every run writes a manifest recording the effective configuration; re-running
from the same manifest reproduces the outputs byte for byte. Option
precedence is flag > config file > built-in default.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import ClusterAssignment, assign_clusters, kmeans, modularity
from .graph import erdos_renyi, load_edge_list
from .io import (
    inverse_id_map,
    read_matrix_csv,
    write_assignment,
    write_centers,
    write_embeddings,
    write_id_map,
    write_json,
    write_training_log,
)
from .model import EmbeddingState, TrainConfig, init_state, train
from .walks import WalkConfig

OUTPUT_DIR_ENV = "GEMSEC_OUTPUT_DIR"

MANIFEST_SCHEMA = "gemsec-run@1"

# one source of truth for option names, types and defaults; config files and
# manifests feed the same table
OPTION_TYPES = {
    "graph": str,
    "format": str,
    "mode": str,
    "smooth": bool,
    "order": str,
    "p": float,
    "q": float,
    "dims": int,
    "clusters": int,
    "negatives": int,
    "walk_length": int,
    "walks_per_node": int,
    "window": int,
    "gamma0": float,
    "alpha0": float,
    "alpha_final": float,
    "smoothness_weight": float,
    "noise": str,
    "schedule_horizon": str,
    "seed": int,
    "walk_seed": int,
    "workers": int,
    "output_dir": str,
    "dump_walks": bool,
}

EMBED_DEFAULTS = {
    "format": "auto",
    "mode": "gemsec",
    "smooth": False,
    "order": "first",
    "p": 1.0,
    "q": 1.0,
    "dims": 16,
    "clusters": 20,
    "negatives": 10,
    "walk_length": 80,
    "walks_per_node": 5,
    "window": 5,
    "gamma0": 0.1,
    "alpha0": 0.01,
    "alpha_final": 0.001,
    "smoothness_weight": 0.0625,
    "noise": "degree",
    "schedule_horizon": "paper",
    "seed": 0,
    "walk_seed": None,
    "workers": 1,
    "output_dir": None,
    "dump_walks": False,
}


class UserInputError(Exception):
    """Bad arguments, files or configuration supplied by the user."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UserInputError(message)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_config_file(path) -> dict:
    """Flat key=value configuration; keys match the CLI flag names."""
    values = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UserInputError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in OPTION_TYPES:
                raise UserInputError(f"{path}:{lineno}: unknown option {key!r}")
            caster = _parse_bool if OPTION_TYPES[key] is bool else OPTION_TYPES[key]
            try:
                values[key] = caster(value.strip())
            except ValueError as exc:
                raise UserInputError(f"{path}:{lineno}: {exc}") from None
    return values


def _merge_options(defaults: dict, file_values: dict, flag_values: dict) -> dict:
    merged = dict(defaults)
    merged.update({k: v for k, v in file_values.items() if k in defaults or k == "graph"})
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    return merged


def _output_dir(option_value: str | None) -> Path:
    if option_value:
        return Path(option_value)
    env = os.environ.get(OUTPUT_DIR_ENV)
    return Path(env) if env else Path("gemsec_output")


def build_train_config(opts: dict) -> TrainConfig:
    walk_seed = opts["walk_seed"] if opts["walk_seed"] is not None else opts["seed"]
    cfg = TrainConfig(
        dims=opts["dims"],
        clusters=opts["clusters"],
        negatives=opts["negatives"],
        gamma0=opts["gamma0"],
        alpha0=opts["alpha0"],
        alpha_final=opts["alpha_final"],
        smoothing=opts["smooth"],
        smoothness_weight=opts["smoothness_weight"],
        deepwalk=opts["mode"] == "deepwalk",
        noise=opts["noise"],
        schedule_horizon=opts["schedule_horizon"],
        walk=WalkConfig(
            walks_per_node=opts["walks_per_node"],
            walk_length=opts["walk_length"],
            window=opts["window"],
            order=opts["order"],
            return_param=opts["p"],
            inout_param=opts["q"],
            seed=walk_seed,
        ),
        seed=opts["seed"],
    )
    if opts["mode"] not in ("gemsec", "deepwalk"):
        raise UserInputError(f"unknown mode {opts['mode']!r}")
    try:
        cfg.validate()
    except ValueError as exc:
        raise UserInputError(str(exc)) from None
    return cfg


def config_hash(opts: dict) -> str:
    # the output location does not influence results, so it stays out of
    # the reproducibility hash
    relevant = {k: v for k, v in opts.items() if k != "output_dir"}
    canonical = json.dumps(relevant, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def cmd_embed(args) -> int:
    file_values = {}
    if args.from_manifest:
        manifest = json.loads(Path(args.from_manifest).read_text(encoding="utf-8"))
        file_values.update(manifest["options"])
    if args.config:
        file_values.update(read_config_file(args.config))
    flag_values = {k: getattr(args, k) for k in EMBED_DEFAULTS}
    flag_values["graph"] = args.graph
    opts = _merge_options(EMBED_DEFAULTS, file_values, flag_values)
    if not opts.get("graph"):
        raise UserInputError("an edge list is required (--graph)")

    out_dir = _output_dir(args.output_dir or opts.get("output_dir"))
    out_dir.mkdir(parents=True, exist_ok=True)

    timings = {}
    started = time.perf_counter()
    g, id_map = load_edge_list(opts["graph"], opts["format"])
    timings["load"] = time.perf_counter() - started
    original_ids = inverse_id_map(id_map)

    cfg = build_train_config(opts)
    walk_dump = None
    walk_sink = None
    if opts["dump_walks"]:
        walk_dump = (out_dir / "walks.txt").open("w", encoding="utf-8")
        walk_sink = lambda walk: walk_dump.write(" ".join(map(str, walk.tolist())) + "\n")

    started = time.perf_counter()
    try:
        state, epoch_log = train(g, cfg, workers=opts["workers"], walk_sink=walk_sink)
    finally:
        if walk_dump is not None:
            walk_dump.close()
    timings["train"] = time.perf_counter() - started

    started = time.perf_counter()
    assignment_method = "nearest_center"
    if cfg.deepwalk:
        # clustering weight is 0, so centers never trained: extract them by
        # k-means over the learned embeddings instead
        assignment_method = "kmeans"
        km = kmeans(state.embeddings, cfg.clusters, seed=cfg.seed)
        for c in range(cfg.clusters):
            members = km.members(c)
            if len(members):
                state.centers[c] = state.embeddings[members].mean(axis=0)
    assignment = assign_clusters(state)
    score = modularity(g, assignment)
    timings["evaluate"] = time.perf_counter() - started

    outputs = {
        "embeddings": str(out_dir / "embeddings.csv"),
        "centers": str(out_dir / "centers.csv"),
        "assignment": str(out_dir / "assignment.csv"),
        "metrics": str(out_dir / "metrics.json"),
        "training_log": str(out_dir / "training_log.csv"),
        "manifest": str(out_dir / "manifest.json"),
    }
    write_embeddings(outputs["embeddings"], state.embeddings, original_ids)
    write_centers(outputs["centers"], state.centers)
    write_assignment(outputs["assignment"], assignment.labels, original_ids)
    write_training_log(outputs["training_log"], epoch_log)
    sizes = np.bincount(assignment.labels, minlength=cfg.clusters)
    write_json(outputs["metrics"], {
        "modularity": score,
        "cluster_sizes": sizes.tolist(),
        "seed": opts["seed"],
        "config_hash": config_hash(opts),
        "assignment_method": assignment_method,
    })
    if opts["dump_walks"]:
        outputs["walks"] = str(out_dir / "walks.txt")
        outputs["id_map"] = str(out_dir / "id_map.json")
        write_id_map(outputs["id_map"], id_map)
    write_json(outputs["manifest"], {
        "schema": MANIFEST_SCHEMA,
        "version": __version__,
        "command": "embed",
        "options": opts,
        "effective_gamma0": 0.0 if cfg.deepwalk else cfg.gamma0,
        "effective_lambda": cfg.smoothness_weight if cfg.smoothing else 0.0,
        "config_hash": config_hash(opts),
        "outputs": outputs,
        "timings": timings,
    })
    print(json.dumps({"modularity": score, "output_dir": str(out_dir)}))
    return 0


def _mean_two_std(values) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    return {
        "values": arr.tolist(),
        "mean": float(arr.mean()),
        "two_std": float(2.0 * arr.std(ddof=1)) if len(arr) > 1 else 0.0,
    }


def cmd_evaluate(args) -> int:
    g, id_map = load_edge_list(args.graph, args.format)
    ids, matrix = read_matrix_csv(args.embedding)
    if len(ids) != g.node_count:
        raise UserInputError(
            f"embedding file has {len(ids)} rows, graph has {g.node_count} nodes")
    emb = np.empty_like(matrix)
    for row, orig in enumerate(ids):
        if orig not in id_map:
            raise UserInputError(f"embedding row id {orig} does not appear in the graph")
        emb[id_map[orig]] = matrix[row]

    report: dict = {"graph": args.graph, "embedding": args.embedding, "seed": args.seed}
    if args.centers:
        _, centers = read_matrix_csv(args.centers)
        if centers.shape[1] != emb.shape[1]:
            raise UserInputError("centers and embeddings have different dimensionality")
        state = init_state(g.node_count, TrainConfig(dims=emb.shape[1], clusters=len(centers)))
        state.embeddings[:] = emb
        state.centers[:] = centers
        assignment = assign_clusters(state)
        score = modularity(g, assignment)
        report.update({
            "method": "nearest_center",
            "modularity": score,
            "repeats": args.repeats,
            "single_restart": _mean_two_std([score] * args.repeats),
        })
    else:
        if not args.clusters:
            raise UserInputError("either --centers or --clusters is required")
        single, best = [], []
        for r in range(args.repeats):
            seed = args.seed + r
            single.append(modularity(g, kmeans(emb, args.clusters, seed=seed, n_init=1)))
            best.append(modularity(g, kmeans(emb, args.clusters, seed=seed, n_init=args.restarts)))
        report.update({
            "method": "kmeans",
            "clusters": args.clusters,
            "restarts": args.restarts,
            "repeats": args.repeats,
            "modularity": best[0],
            "single_restart": _mean_two_std(single),
            "best_of_restarts": _mean_two_std(best),
        })
    print(json.dumps(report, sort_keys=True))
    if args.output:
        write_json(args.output, report)
    return 0


BENCHMARK_MODES = {
    # mode name -> (deepwalk flag, smoothing flag)
    "deepwalk": (True, False),
    "smooth_deepwalk": (True, True),
    "gemsec": (False, False),
    "smooth_gemsec": (False, True),
}


def cmd_benchmark(args) -> int:
    if args.min_exp < 1 or args.max_exp < args.min_exp:
        raise UserInputError("size range must satisfy 1 <= min_exp <= max_exp")
    for mode in args.modes:
        if mode not in BENCHMARK_MODES:
            raise UserInputError(f"unknown benchmark mode {mode!r}")
    out_dir = _output_dir(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for exp in range(args.min_exp, args.max_exp + 1):
        n = 2 ** exp
        g = erdos_renyi(n, min(args.avg_degree, n - 1), seed=args.seed + exp)
        for mode in args.modes:
            deepwalk, smoothing = BENCHMARK_MODES[mode]
            cfg = TrainConfig(
                dims=args.dims,
                clusters=args.clusters,
                negatives=args.negatives,
                deepwalk=deepwalk,
                smoothing=smoothing,
                walk=WalkConfig(
                    walks_per_node=args.walks_per_node,
                    walk_length=args.walk_length,
                    window=args.window,
                    seed=args.seed,
                ),
                seed=args.seed,
            )
            started = time.perf_counter()
            train(g, cfg, workers=args.workers)
            seconds = time.perf_counter() - started
            rows.append((exp, mode, seconds))
            print(f"n=2^{exp} mode={mode} seconds={seconds:.3f}", file=sys.stderr)

    csv_path = out_dir / "benchmark.csv"
    with csv_path.open("w", encoding="utf-8") as fh:
        fh.write("log2_n,mode,seconds\n")
        for exp, mode, seconds in rows:
            fh.write(f"{exp},{mode},{repr(seconds)}\n")

    slopes = {}
    for mode in args.modes:
        points = [(exp, seconds) for exp, m, seconds in rows if m == mode]
        xs = np.array([p[0] for p in points], dtype=np.float64)
        ys = np.log2([p[1] for p in points])
        slopes[mode] = float(np.polyfit(xs, ys, 1)[0]) if len(points) > 1 else float("nan")
    summary = {
        "slopes": slopes,
        "avg_degree": args.avg_degree,
        "sizes_log2": list(range(args.min_exp, args.max_exp + 1)),
        "csv": str(csv_path),
    }
    write_json(out_dir / "benchmark_summary.json", summary)
    print(json.dumps(summary, sort_keys=True))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="gemsec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    embed = sub.add_parser("embed", help="train an embedding and extract clusters")
    embed.add_argument("--graph", help="edge list file")
    embed.add_argument("--format", choices=["auto", "csv", "tsv", "whitespace"])
    embed.add_argument("--mode", choices=["gemsec", "deepwalk"])
    embed.add_argument("--smooth", action=argparse.BooleanOptionalAction,
                       help="add the neighborhood-overlap smoothness penalty")
    embed.add_argument("--order", choices=["first", "second"])
    embed.add_argument("--p", type=float, help="second-order return parameter")
    embed.add_argument("--q", type=float, help="second-order in-out parameter")
    embed.add_argument("--dims", type=int)
    embed.add_argument("--clusters", type=int)
    embed.add_argument("--negatives", type=int)
    embed.add_argument("--walk-length", type=int)
    embed.add_argument("--walks-per-node", type=int)
    embed.add_argument("--window", type=int)
    embed.add_argument("--gamma0", type=float)
    embed.add_argument("--alpha0", type=float)
    embed.add_argument("--alpha-final", type=float)
    embed.add_argument("--smoothness-weight", type=float)
    embed.add_argument("--noise", choices=["degree", "uniform"])
    embed.add_argument("--schedule-horizon", choices=["paper", "reached"])
    embed.add_argument("--seed", type=int)
    embed.add_argument("--walk-seed", type=int)
    embed.add_argument("--workers", type=int)
    embed.add_argument("--dump-walks", action=argparse.BooleanOptionalAction)
    embed.add_argument("--config", help="key=value config file")
    embed.add_argument("--from-manifest", help="reuse the options of a previous run")
    embed.add_argument("--output-dir")
    embed.set_defaults(func=cmd_embed)

    ev = sub.add_parser("evaluate", help="score an embedding's clusters by modularity")
    ev.add_argument("--graph", required=True)
    ev.add_argument("--format", choices=["auto", "csv", "tsv", "whitespace"], default="auto")
    ev.add_argument("--embedding", required=True, help="embedding CSV (id,x_0,...)")
    ev.add_argument("--centers", help="centers CSV; nearest-center assignment when given")
    ev.add_argument("--clusters", type=int, help="k for the k-means path")
    ev.add_argument("--repeats", type=int, default=1)
    ev.add_argument("--restarts", type=int, default=10)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--output", help="also write the report JSON here")
    ev.set_defaults(func=cmd_evaluate)

    bench = sub.add_parser("benchmark", help="time training on random graphs of doubling size")
    bench.add_argument("--min-exp", type=int, required=True, help="smallest size as log2(n)")
    bench.add_argument("--max-exp", type=int, required=True, help="largest size as log2(n)")
    bench.add_argument("--modes", nargs="+", default=["deepwalk", "gemsec"])
    bench.add_argument("--avg-degree", type=float, default=20.0)
    bench.add_argument("--dims", type=int, default=16)
    bench.add_argument("--clusters", type=int, default=20)
    bench.add_argument("--negatives", type=int, default=10)
    bench.add_argument("--walk-length", type=int, default=80)
    bench.add_argument("--walks-per-node", type=int, default=5)
    bench.add_argument("--window", type=int, default=5)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--output-dir")
    bench.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UserInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - internal failure path
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
