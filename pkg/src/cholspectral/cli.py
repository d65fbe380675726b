"""Command-line driver: ``synth``, ``embed``, ``cluster`` and ``bench``.

Every subcommand accepts ``--config file.json`` whose keys are flag names
(dashes or underscores); explicit flags win over the file. Failures exit with
status 2 and print one line ``error: <category>: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path


from . import clustering, synthetic
from .exceptions import CholSpectralError, ConfigError, ParseError
from .graph_core import laplacian, read_edge_list, write_edge_list
from .multilayer import make_bundle, solve_multilayer
from .report import read_embedding, write_embedding, write_report
from .sgd import SgdConfig, embed_sgd_cholesky
from .solvers import SOLVERS, FbConfig, embed_eigen, embed_fb_qr

log = logging.getLogger("cholspectral")

DEFAULT_ITERS = {"sgd_cholesky": 500, "fb_qr": 3000, "eigen": 0}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"error: usage: {message}\n")
        raise SystemExit(2)


def _solver_flags(p):
    p.add_argument("--solver", choices=SOLVERS)
    p.add_argument("--k", type=int, help="embedding dimension / number of clusters")
    p.add_argument("--gamma", type=float, help="SGD step size (default 1e-3)")
    p.add_argument("--fb-gamma", type=float, help="forward-backward step (default 1/||L||)")
    p.add_argument("--batch-size", type=int, help="SGD mini-batch size (default 4000)")
    p.add_argument("--iters", type=int, help="iterations (default 500 for SGD, 3000 for FB)")
    p.add_argument("--refresh-period", type=int, help="exact Gram refresh period (default 1000)")
    p.add_argument("--alpha", type=float, help="layer regularization weight (default 0.5)")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cholspectral", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic multilayer graph")
    p.add_argument("--config")
    p.add_argument("--layers", type=int)
    p.add_argument("--clusters", type=int)
    p.add_argument("--per-cluster", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--mean-scale", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--knn", type=int)
    p.add_argument("--weighting", choices=("binary", "gaussian"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--solver", choices=SOLVERS)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(
        layers=3, clusters=5, per_cluster=100, dim=2, mean_scale=10.0, sigma=1.0, knn=5,
        weighting="binary", alpha=0.5, solver="sgd_cholesky", seed=0, out=".",
    )

    p = sub.add_parser("embed", help="compute a spectral embedding")
    p.add_argument("--config")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--graph", help="edge-list TSV (single layer)")
    src.add_argument("--manifest", help="layer manifest JSON")
    _solver_flags(p)
    p.add_argument("--normalized", action="store_true", default=None,
                   help="eigen solver on the sym-normalized matrix")
    p.add_argument("--out")
    p.set_defaults(k=None, gamma=1e-3, batch_size=4000, refresh_period=1000, alpha=None, seed=0, out=".")

    p = sub.add_parser("cluster", help="k-means on an embedding, optionally scored against truth")
    p.add_argument("--config")
    p.add_argument("--embedding")
    p.add_argument("--truth")
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--out")
    p.set_defaults(seed=0, restarts=10, out=".")

    p = sub.add_parser("bench", help="compare the three solvers on one manifest")
    p.add_argument("--config")
    p.add_argument("--manifest")
    _solver_flags(p)
    p.add_argument("--fb-iters", type=int)
    p.add_argument("--out")
    p.set_defaults(k=None, gamma=1e-3, batch_size=4000, refresh_period=1000, alpha=None, seed=0, out=".")
    return parser


def _apply_config(parser, argv):
    args = parser.parse_args(argv)
    path = getattr(args, "config", None)
    if not path:
        return args
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc), path) from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def _read_manifest(path):
    try:
        with open(path, encoding="utf-8") as fh:
            man = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc), path) from None
    if "layers" not in man or not man["layers"]:
        raise ParseError("manifest lists no layers", path)
    base = Path(path).parent
    man["layer_paths"] = [str(base / p) for p in man["layers"]]
    if man.get("truth"):
        man["truth_path"] = str(base / man["truth"])
    return man


def _sgd_config(args, iters):
    return SgdConfig(
        gamma=args.gamma,
        batch_size=args.batch_size,
        iterations=iters,
        seed=args.seed,
        refresh_period=args.refresh_period,
    )


def cmd_synth(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    graphs, truth = synthetic.multilayer_synthetic(
        args.layers, args.per_cluster, args.clusters, seed=args.seed, d=args.dim,
        mean_scale=args.mean_scale, sigma=args.sigma, k=args.knn, weighting=args.weighting,
    )
    names = []
    for s, g in enumerate(graphs):
        name = f"layer_{s}.tsv"
        write_edge_list(g, out / name)
        names.append(name)
    clustering.write_labels(truth, out / "truth.txt")
    manifest = {
        "layers": names,
        "truth": "truth.txt",
        "n_vertices": int(graphs[0].n_vertices),
        "alpha": args.alpha,
        "k": args.clusters,
        "solver": args.solver,
        "seed": args.seed,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(names)} layers, N={graphs[0].n_vertices}, to {out}")
    return 0


def _run_solver(solver, op, graph, K, args, low_rank=None, iters=None):
    """Dispatch to one solver; ``graph``/``low_rank`` feed SGD, ``op`` the others."""
    iters = iters or args.iters or DEFAULT_ITERS[solver]
    if solver == "eigen":
        return embed_eigen(op, K, return_report=True)
    if solver == "fb_qr":
        return embed_fb_qr(op, K, iters, args.fb_gamma, seed=args.seed)
    return embed_sgd_cholesky(graph, K, _sgd_config(args, iters), low_rank)


def cmd_embed(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.manifest:
        man = _read_manifest(args.manifest)
        K = args.k or man.get("k")
        solver = args.solver or man.get("solver", "sgd_cholesky")
        alpha = args.alpha if args.alpha is not None else man.get("alpha", 0.5)
        if not K:
            raise ConfigError("--k is required")
        graphs = [read_edge_list(p) for p in man["layer_paths"]]
        bundle = make_bundle(graphs, K, alpha)
        iters = args.iters or DEFAULT_ITERS[solver]
        if solver == "sgd_cholesky":
            cfg = _sgd_config(args, iters)
        else:
            cfg = FbConfig(steps=iters or 1, gamma=args.fb_gamma, seed=args.seed)
        U, report = solve_multilayer(bundle, K, solver, cfg, normalized=bool(args.normalized))
    elif args.graph:
        if not args.k:
            raise ConfigError("--k is required")
        solver = args.solver or "sgd_cholesky"
        g = read_edge_list(args.graph)
        op = laplacian(g, "sym" if args.normalized else "unnormalized")
        if args.normalized and solver != "eigen":
            raise ConfigError("--normalized is only supported by the eigen solver")
        U, report = _run_solver(solver, op, g, args.k, args)
    else:
        raise ConfigError("one of --graph or --manifest is required")
    write_embedding(U, out / "embedding.csv")
    write_report(report, out / "report.json")
    print(f"{report.solver}: objective={report.objective:.6g} iterations={report.iterations} "
          f"seconds={report.seconds:.3f}")
    return 0


def cmd_cluster(args):
    if not args.embedding:
        raise ConfigError("--embedding is required")
    U = read_embedding(args.embedding)
    K = args.k or U.shape[1]
    if K < 2:
        raise ConfigError("clustering needs K >= 2")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    labels = clustering.kmeans(U, K, clustering.KMeansConfig(seed=args.seed, n_restarts=args.restarts))
    clustering.write_labels(labels, out / "labels.txt")
    if args.truth:
        truth = clustering.read_labels(args.truth)
        if truth.size != labels.size:
            raise ParseError(f"truth has {truth.size} labels, embedding has {labels.size} rows", args.truth)
        metrics = clustering.evaluate(labels, truth)
        with open(out / "metrics.json", "w", encoding="utf-8") as fh:
            fh.write(_metrics_json(metrics) + "\n")
        print(_metrics_json(metrics))
    return 0


def _metrics_json(metrics):
    return "{" + ", ".join(f'"{k}": {metrics[k]:.6f}' for k in ("purity", "nmi", "rand_index")) + "}"


def cmd_bench(args):
    if not args.manifest:
        raise ConfigError("--manifest is required")
    man = _read_manifest(args.manifest)
    K = args.k or man.get("k")
    if not K or K < 2:
        raise ConfigError("bench needs K >= 2")
    alpha = args.alpha if args.alpha is not None else man.get("alpha", 0.5)
    truth = clustering.read_labels(man["truth_path"]) if man.get("truth_path") else None
    graphs = [read_edge_list(p) for p in man["layer_paths"]]
    bundle = make_bundle(graphs, K, alpha)
    rows = []
    runs = [
        ("Eigendecomp.", "eigen", None, True),
        ("Stochastic FB", "fb_qr", FbConfig(steps=args.fb_iters or 3000, gamma=args.fb_gamma, seed=args.seed), False),
        ("Proposed", "sgd_cholesky", _sgd_config(args, args.iters or 500), False),
    ]
    for label, solver, cfg, normalized in runs:
        U, report = solve_multilayer(bundle, K, solver, cfg, normalized=normalized)
        row = {"method": label, "solver": solver, "seconds": report.seconds,
               "iterations": report.iterations if solver != "eigen" else None,
               "objective": report.objective}
        if truth is not None:
            labels = clustering.kmeans(U, K, clustering.KMeansConfig(seed=args.seed))
            row.update(clustering.evaluate(labels, truth))
        rows.append(row)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bench.json", "w", encoding="utf-8") as fh:
        json.dump({"n_vertices": bundle.n_vertices, "k": K, "alpha": alpha, "rows": rows}, fh, indent=2)
        fh.write("\n")
    table = format_table(rows)
    (out / "bench.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    return 0


def format_table(rows) -> str:
    head = f"{'Method':<15}{'Time':>10}{'Iter.':>8}{'Purity':>8}{'NMI':>8}{'RI':>8}"
    lines = [head, "-" * len(head)]
    for r in rows:
        it = "-" if r["iterations"] is None else str(r["iterations"])
        metrics = "".join(f"{r[k]:>8.2f}" if k in r else f"{'':>8}" for k in ("purity", "nmi", "rand_index"))
        lines.append(f"{r['method']:<15}{r['seconds']:>9.2f}s{it:>8}{metrics}")
    return "\n".join(lines)


COMMANDS = {"synth": cmd_synth, "embed": cmd_embed, "cluster": cmd_cluster, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except CholSpectralError as exc:
        msg = str(exc).replace("\n", " ")
        sys.stderr.write(f"error: {exc.category}: {msg}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"error: io: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
