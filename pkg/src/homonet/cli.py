"""Command-line entry point: ``homonet <subcommand> [options]``.

Every subcommand writes its artifacts plus a ``manifest.json`` (resolved
config, seeds, timings and sha256 of each output). Unless ``--out`` is
given, artifacts go to ``runs/<timestamp>-seed<seed>``.
"""

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import attrgen, calibrate, linkgen, netmetrics, pipeline, sampling
from .graph import EdgeListError, load_edge_list, write_edge_list, write_id_map

log = logging.getLogger("homonet")

GENERATOR = "generator"
DEFAULT_SIZES = (1000, 10000, 100000, 1000000)


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _ints(text):
    return [int(float(x)) for x in text.split(",") if x.strip()]


def _seed_list(text):
    # "3" -> [3]; "0-9" -> 0..9; "1,5,7" -> as given
    if "-" in text and "," not in text:
        lo, hi = text.split("-")
        return list(range(int(lo), int(hi) + 1))
    return _ints(text)


class Run:
    """Output directory plus manifest bookkeeping for one invocation."""

    def __init__(self, args, out=None):
        if out is None:
            stamp = time.strftime("%Y%m%d-%H%M%S")
            out = Path("runs") / f"{stamp}-seed{args.seed}"
        self.dir = Path(out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.manifest = {
            "subcommand": args.command,
            "seed": args.seed,
            "workers": args.workers,
            "config": {},
            "inputs": {},
            "outputs": {},
            "timings": {},
        }
        self._t = None

    def path(self, name):
        return self.dir / name

    def phase(self, name):
        run = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                run.manifest["timings"][name] = round(time.perf_counter() - self.t0, 6)

        return _Timer()

    def add_input(self, path):
        self.manifest["inputs"][str(path)] = sha256(path)

    def add_output(self, path):
        path = Path(path)
        self.manifest["outputs"][str(path.relative_to(self.dir) if path.is_relative_to(self.dir) else path)] = sha256(path)

    def write_manifest(self, name="manifest.json"):
        with open(self.path(name), "w", encoding="utf-8") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


def _load_gen_config(args):
    return pipeline.load_config(args.config)


def _config_dict(cfg, n=None):
    d = {"profiles": cfg.profiles.to_dict(), "hyperparameters": asdict(cfg.hyper), "weights": cfg.weights}
    if n is not None and n >= 2:
        d["resolved"] = asdict(linkgen.resolve(cfg.hyper, n))
    return d


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


def _write_table(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for r in rows:
            fh.write("\t".join(str(x) for x in r) + "\n")


def _fmt(x, nd=4):
    return f"{x:.{nd}f}" if math.isfinite(x) else "inf"


# ---------------------------------------------------------------- commands

def cmd_generate(args):
    if args.n < 2:
        raise linkgen.HyperParamError("need at least 2 nodes")
    cfg = _load_gen_config(args)
    run = Run(args, args.out)
    run.manifest["config"] = _config_dict(cfg, args.n)
    run.manifest["n"] = args.n
    if args.config:
        run.add_input(args.config)
    with run.phase("profiles"):
        profiles = attrgen.generate_profiles(args.n, cfg.profiles, args.seed, workers=args.workers)
    with run.phase("projection"):
        weights = None if cfg.weights is None else np.asarray(cfg.weights)
        P = pipeline.semspace.project_profiles(profiles, weights=weights, seed=args.seed)
    with run.phase("links"):
        g = linkgen.generate_network(
            profiles, P, cfg.hyper, args.seed, max_score=cfg.profiles.influence.max_score,
            workers=args.workers, progress=lambda i, n: log.info("linked %d/%d nodes", i, n),
        )
    with run.phase("write"):
        attrgen.save_profiles(profiles, run.path("profiles.jsonl"))
        P.save_csv(run.path("projection.csv"))
        write_edge_list(g, run.path("edges.csv"))
    for name in ("profiles.jsonl", "projection.csv", "edges.csv"):
        run.add_output(run.path(name))
    run.manifest["edges"] = g.e
    run.write_manifest()
    print(f"{args.n} nodes, {g.e} edges -> {run.dir}")
    return 0


def _safe_report(g, max_pairs, seed):
    if g.n >= 2:
        return netmetrics.report(g, max_pairs=max_pairs, seed=seed)
    lcc = netmetrics.lcc_proportion(g) if g.n else float("nan")
    nan = float("nan")
    return netmetrics.MetricsReport(nan, nan, lcc, nan, nan, g.n, g.e, 0, seed)


def cmd_metrics(args):
    run = Run(args, args.out)
    run.add_input(args.input)
    with run.phase("load"):
        g = load_edge_list(args.input, num_nodes=args.num_nodes)
    with run.phase("metrics"):
        rep = _safe_report(g, args.max_pairs, args.seed)
    d = rep.to_dict()
    _write_json(run.path("metrics.json"), d)
    run.add_output(run.path("metrics.json"))
    run.manifest["config"] = {"max_pairs": args.max_pairs, "num_nodes": args.num_nodes}
    run.manifest["duplicates_dropped"] = g.duplicates_dropped
    run.manifest["self_loops_dropped"] = g.self_loops_dropped
    run.write_manifest()
    print(json.dumps(d))
    undefined = [m for m in netmetrics.METRICS if d[m] is None]
    if undefined:
        print(f"error: undefined metrics: {', '.join(undefined)}", file=sys.stderr)
        return 2
    return 0


def _targets(args):
    return netmetrics.ReferenceTargets.load(args.targets) if args.targets else netmetrics.ReferenceTargets.bluesky()


def cmd_calibrate(args):
    grid = calibrate.load_grid(args.grid) if args.grid else calibrate.GridSpec()
    seeds = _seed_list(args.seeds) if args.seeds else [args.seed]
    targets = _targets(args)
    base = _load_gen_config(args)
    run = Run(args, args.out)
    for p in (args.grid, args.targets, args.config):
        if p:
            run.add_input(p)
    run.manifest["config"] = {
        "grid": {f: list(getattr(grid, f)) for f in calibrate.GRID_FIELDS},
        "n": args.n, "seeds": seeds, "targets": targets.values, "base": _config_dict(base),
    }
    total = grid.size
    log.info("sweeping %d configurations at N=%d with seeds %s", total, args.n, seeds)

    def progress(done, total):
        if done % max(1, total // 100) == 0 or done == total:
            log.info("%d/%d configurations evaluated", done, total)

    with run.phase("search"):
        ranked, scales = calibrate.search(
            grid, args.n, seeds, targets, path=run.path("sweep.jsonl"), resume=args.resume,
            workers=args.workers, base=base, max_pairs=args.max_pairs, progress=progress,
        )
    calibrate.write_ranking(ranked, scales, run.path("ranking.jsonl"))
    table = calibrate.summary_table(ranked)
    with open(run.path("summary.tsv"), "w", encoding="utf-8") as fh:
        fh.write(table)
    for name in ("sweep.jsonl", "ranking.jsonl", "summary.tsv"):
        run.add_output(run.path(name))
    run.write_manifest()
    print(table, end="")
    return 0


def cmd_sample(args):
    spec = sampling.SampleSpec(args.method, args.target, args.seed, args.p_forward, args.restart, args.damping)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    run = Run(args, out.parent)
    run.add_input(args.input)
    run.manifest["config"] = asdict(spec)
    with run.phase("load"):
        g = load_edge_list(args.input, num_nodes=args.num_nodes)
    with run.phase("sample"):
        sub = sampling.sample(g, spec)
    idmap = out.with_name(out.stem + "_idmap.csv")
    write_edge_list(sub, out)
    write_id_map(sub, idmap)
    run.add_output(out)
    run.add_output(idmap)
    run.manifest["duplicates_dropped"] = g.duplicates_dropped
    run.write_manifest(out.stem + "_manifest.json")
    print(f"{spec.method}: {sub.n} nodes, {sub.e} edges -> {out}")
    return 0


def cmd_compare(args):
    """NED to a reference graph for the generator and each sampler, per size."""
    methods = args.methods.split(",") if args.methods else [GENERATOR, *sampling.METHODS]
    for m in methods:
        if m != GENERATOR and m not in sampling.METHODS:
            raise sampling.SamplingError(f"unknown method {m!r}")
    seeds = _seed_list(args.seeds) if args.seeds else list(range(args.seed, args.seed + 3))
    sizes = _ints(args.sizes) if args.sizes else list(DEFAULT_SIZES)
    run = Run(args, args.out)
    source = None
    if args.input:
        run.add_input(args.input)
        with run.phase("load"):
            source = load_edge_list(args.input, num_nodes=args.num_nodes)
    if args.targets:
        run.add_input(args.targets)
        targets = _targets(args)
    elif source is not None:
        with run.phase("source-metrics"):
            targets = netmetrics.ReferenceTargets.from_report(netmetrics.report(source, args.max_pairs, args.seed))
    else:
        targets = netmetrics.ReferenceTargets.bluesky()
    if source is None and any(m != GENERATOR for m in methods):
        raise sampling.SamplingError("samplers need a source graph (--in)")
    if source is not None:
        sizes = [s for s in sizes if s <= source.n or GENERATOR in methods]
    cfg = _load_gen_config(args)
    run.manifest["config"] = {"methods": methods, "sizes": sizes, "seeds": seeds,
                              "targets": targets.values, "generator": _config_dict(cfg)}

    records = []
    with run.phase("runs"):
        for size in sizes:
            for m in methods:
                if m != GENERATOR and size > source.n:
                    continue
                for s in seeds:
                    if m == GENERATOR:
                        _, _, g = pipeline.generate(size, cfg, seed=s, workers=args.workers)
                    else:
                        g = sampling.sample(source, sampling.SampleSpec(m, size, s))
                    rep = _safe_report(g, args.max_pairs, s)
                    records.append((m, size, s, rep))
                    log.info("%s N=%d seed=%d done", m, size, s)
    pool = [r.vector() for *_, r in records if r.is_defined()] + [targets.vector()]
    scales = netmetrics.pool_scales(pool)
    with open(run.path("reports.jsonl"), "w", encoding="utf-8") as fh:
        for m, size, s, rep in records:
            d = {"method": m, "size": size, **rep.to_dict(), "ned": None}
            v = netmetrics.ned(rep, targets, scales)
            d["ned"] = v if math.isfinite(v) else None
            fh.write(json.dumps(d) + "\n")
    rows = []
    for size in sizes:
        for m in methods:
            v = [netmetrics.ned(r, targets, scales) for mm, ss, _, r in records if mm == m and ss == size]
            if v:
                rows.append((m, size, len(v), _fmt(float(np.mean(v))), _fmt(float(np.std(v)))))
    _write_table(run.path("compare.tsv"), ("method", "size", "seeds", "ned_mean", "ned_std"), rows)
    _write_json(run.path("scales.json"), scales)
    for name in ("reports.jsonl", "compare.tsv", "scales.json"):
        run.add_output(run.path(name))
    run.write_manifest()
    for m, size, k, mu, sd in rows:
        print(f"{m:14s} {size:>8d}  NED {mu} +- {sd}  ({k} seeds)")
    return 0


def cmd_bench(args):
    """Wall-clock time of full generation per size; the table also pins each graph's checksum."""
    sizes = _ints(args.sizes) if args.sizes else [1000, 10000]
    cfg = _load_gen_config(args)
    run = Run(args, args.out)
    run.manifest["config"] = {"sizes": sizes, "reps": args.reps, "generator": _config_dict(cfg)}
    rows = []
    tmp = run.path("bench_edges.tmp")
    for size in sizes:
        times, digests, edges = [], set(), 0
        for r in range(args.reps):
            t0 = time.perf_counter()
            _, _, g = pipeline.generate(size, cfg, seed=args.seed + r, workers=args.workers)
            times.append(time.perf_counter() - t0)
            write_edge_list(g, tmp)
            digests.add(sha256(tmp))
            edges = g.e
            log.info("N=%d rep %d: %.2f s", size, r, times[-1])
        rows.append((size, args.reps, edges, ",".join(sorted(digests)),
                     f"{np.mean(times):.3f}", f"{np.std(times):.3f}"))
    tmp.unlink(missing_ok=True)
    _write_table(run.path("bench.tsv"), ("size", "reps", "edges", "edges_sha256", "mean_s", "std_s"), rows)
    run.add_output(run.path("bench.tsv"))
    run.write_manifest()
    for size, reps, e, _, mu, sd in rows:
        print(f"N={size:>8d}  {mu} s +- {sd} s  ({reps} reps, {e} edges)")
    return 0


# ---------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="generator config file (INI)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    common.add_argument("--out", help="output directory (sample: output edge-list file)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="homonet", description="Homophily-driven synthetic social networks.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="generate profiles and a follower graph")
    g.add_argument("--n", type=int, required=True)
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("metrics", parents=[common], help="five structural metrics of an edge list")
    m.add_argument("--in", dest="input", required=True)
    m.add_argument("--num-nodes", type=int)
    m.add_argument("--max-pairs", type=int, default=netmetrics.DEFAULT_MAX_PAIRS)
    m.set_defaults(func=cmd_metrics)

    c = sub.add_parser("calibrate", parents=[common], help="grid search ranked by NED")
    c.add_argument("--grid")
    c.add_argument("--n", type=int, default=1000)
    c.add_argument("--seeds", help="e.g. '0', '0-9' or '1,4,7' (default: --seed)")
    c.add_argument("--targets", help="JSON file with the five reference metrics")
    c.add_argument("--resume", action="store_true")
    c.add_argument("--max-pairs", type=int, default=netmetrics.DEFAULT_MAX_PAIRS)
    c.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("sample", parents=[common], help="subgraph sample of an edge list")
    s.add_argument("--method", required=True, choices=sampling.METHODS)
    s.add_argument("--target", type=int, required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--num-nodes", type=int)
    s.add_argument("--p-forward", type=float, default=0.7)
    s.add_argument("--restart", type=float, default=0.15)
    s.add_argument("--damping", type=float, default=0.85)
    s.set_defaults(func=cmd_sample)

    k = sub.add_parser("compare", parents=[common], help="NED of generator and samplers per size")
    k.add_argument("--in", dest="input", help="reference edge list (source of the samplers)")
    k.add_argument("--num-nodes", type=int)
    k.add_argument("--targets", help="JSON reference metrics (default: metrics of --in, else Bluesky)")
    k.add_argument("--sizes", help="comma-separated sizes (default 1000,10000,100000,1000000)")
    k.add_argument("--methods", help=f"comma-separated subset of {GENERATOR},{','.join(sampling.METHODS)}")
    k.add_argument("--seeds", help="seed list (default: three seeds from --seed)")
    k.add_argument("--max-pairs", type=int, default=netmetrics.DEFAULT_MAX_PAIRS)
    k.set_defaults(func=cmd_compare)

    b = sub.add_parser("bench", parents=[common], help="generation time per size")
    b.add_argument("--sizes", help="comma-separated sizes (default 1000,10000)")
    b.add_argument("--reps", type=int, default=3)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)
    if args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return 2
    if args.command == "sample" and not args.out:
        print("error: sample needs --out <file>", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, EdgeListError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
