"""Grid search over the eight link-formation hyperparameters.

Each configuration is generated at a fixed size for a list of seeds and
scored by NED against reference targets. The sweep file is append-only
JSONL and doubles as the checkpoint: a restarted sweep skips every
configuration already recorded there.
"""

import configparser
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

from . import attrgen, netmetrics, pipeline
from .linkgen import FILE_KEYS, RawHyperParams

GRID_FIELDS = ("alpha", "beta", "delta0", "lam", "delta_cap", "eta0", "kappa", "zeta")
# column order of the top-5 summary
SUMMARY_FIELDS = ("eta0", "kappa", "delta0", "lam", "delta_cap", "zeta", "alpha", "beta")
SUMMARY_HEADER = ("eta0", "kappa", "delta0", "lambda", "delta_cap", "zeta", "alpha", "beta")


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    alpha: tuple = (0.0, 0.1, 0.16, 0.25)
    beta: tuple = (0.0, 0.06, 0.1)
    delta0: tuple = (0.0, 0.10, 0.20, 0.25)
    lam: tuple = (0.5, 1.5, 2.5, 3.5)
    delta_cap: tuple = (0.40, 0.42, 0.44)
    eta0: tuple = (0.0, 0.02, 0.03, 0.04, 0.05)
    kappa: tuple = (0.01, 0.05, 0.1)
    zeta: tuple = (8, 12, 24, 36)

    def __post_init__(self):
        for f in fields(self):
            v = tuple(getattr(self, f.name))
            if not v:
                raise GridError(f"grid list for {f.name} is empty")
            object.__setattr__(self, f.name, v)

    @property
    def size(self):
        return math.prod(len(getattr(self, f)) for f in GRID_FIELDS)


def load_grid(path):
    """Read a ``[grid]`` section of comma-separated value lists.

    Keys are field names (``alpha``) or hyperparameter file keys
    (``CONN_EXP_WEIGHT``); missing keys keep the default list.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    if not cp.read(path, encoding="utf-8"):
        raise GridError(f"cannot read grid file {path}")
    if not cp.has_section("grid"):
        raise GridError(f"{path}: missing [grid] section")
    kw = {}
    for key, value in cp["grid"].items():
        name = FILE_KEYS.get(key, key)
        if name not in GRID_FIELDS:
            raise GridError(f"unknown grid key {key!r}")
        try:
            kw[name] = tuple(float(x) for x in value.split(",") if x.strip())
        except ValueError:
            raise GridError(f"{key}: cannot parse {value!r}") from None
    return GridSpec(**kw)


def enumerate_grid(grid):
    """Cartesian product of the value lists, lexicographic in field order."""
    lists = [getattr(grid, f) for f in GRID_FIELDS]
    return [dict(zip(GRID_FIELDS, combo)) for combo in itertools.product(*lists)]


@dataclass
class GridResult:
    config: dict
    reports: list = field(default_factory=list)
    mean: netmetrics.MetricsReport = None
    ned: float = math.inf
    rank: int = None
    index: int = None
    error: str = None

    def to_record(self):
        return {
            "index": self.index,
            "config": self.config,
            "error": self.error,
            "mean": None if self.mean is None else self.mean.to_dict(),
            "reports": [r.to_dict() for r in self.reports],
        }

    @classmethod
    def from_record(cls, rec):
        reports = [netmetrics.MetricsReport.from_dict(r) for r in rec["reports"]]
        mean = None if rec["mean"] is None else netmetrics.MetricsReport.from_dict(rec["mean"])
        return cls(rec["config"], reports, mean, index=rec["index"], error=rec["error"])

    def ok(self):
        return self.error is None and self.mean is not None and self.mean.is_defined()


def _raw(config, base):
    return replace(base, **config)


def evaluate(config, n, seeds, targets=None, scales=None, base=None, max_pairs=netmetrics.DEFAULT_MAX_PAIRS):
    """Generate and measure ``config`` once per seed.

    ``base`` supplies the non-searched generator settings (a
    :class:`~homonet.pipeline.GeneratorConfig`). NED is filled in when both
    ``targets`` and ``scales`` are given. Failures are recorded in
    ``error`` rather than raised.
    """
    if n < 2:
        raise GridError("need at least 2 nodes")
    if not seeds:
        raise GridError("need at least one seed")
    base = base or pipeline.GeneratorConfig(attrgen.ProfileConfig(), RawHyperParams())
    res = GridResult(dict(config))
    try:
        gcfg = replace(base, hyper=_raw(config, base.hyper))
        for s in seeds:
            _, _, g = pipeline.generate(n, gcfg, seed=s)
            res.reports.append(netmetrics.report(g, max_pairs=max_pairs, seed=s))
        res.mean = netmetrics.mean_report(res.reports)
        if not res.mean.is_defined():
            res.error = "undefined metric"
    except Exception as exc:  # a bad config must not stop the sweep
        res.error = f"{type(exc).__name__}: {exc}"
    if targets is not None and scales is not None and res.ok():
        res.ned = netmetrics.ned(res.mean, targets, scales)
    return res


def _eval_job(args):
    index, config, n, seeds, base, max_pairs = args
    res = evaluate(config, n, seeds, base=base, max_pairs=max_pairs)
    res.index = index
    return res


def read_sweep(path):
    """Records of a sweep file; a torn last line from a killed run is dropped."""
    done = {}
    if not os.path.exists(path):
        return done, 0
    good = 0
    with open(path, "rb") as fh:
        for line in fh:
            if not line.endswith(b"\n"):
                break
            try:
                rec = json.loads(line)
            except ValueError:
                break
            done[rec["index"]] = GridResult.from_record(rec)
            good += len(line)
    return done, good


def rank_results(results, targets):
    """Pool min-max scales over all defined mean reports plus the targets, then rank by NED."""
    pool = [r.mean.vector() for r in results if r.ok()] + [targets.vector()]
    scales = netmetrics.pool_scales(pool)
    for r in results:
        r.ned = netmetrics.ned(r.mean, targets, scales) if r.ok() else math.inf
    ranked = sorted(results, key=lambda r: (r.ned, r.index))
    for i, r in enumerate(ranked, 1):
        r.rank = i
    return ranked, scales


def search(grid, n, seeds, targets=None, path=None, resume=False, workers=1, base=None,
           max_pairs=netmetrics.DEFAULT_MAX_PAIRS, checkpoint_every=1, progress=None):
    """Evaluate every configuration of ``grid`` and return ``(ranked, scales)``.

    With ``path`` each finished configuration is appended to that file,
    flushed every ``checkpoint_every`` records. ``resume`` reuses what the
    file already holds; otherwise an existing file is overwritten.
    """
    targets = targets or netmetrics.ReferenceTargets.bluesky()
    configs = enumerate_grid(grid)
    done = {}
    fh = None
    if path is not None:
        if resume:
            done, good = read_sweep(path)
            with open(path, "ab") as t:
                t.truncate(good)
        fh = open(path, "a" if resume else "w", encoding="utf-8")
    for i, r in done.items():
        if i >= len(configs) or r.config != configs[i]:
            raise GridError(f"{path} was written for a different grid (record {i})")
    todo = [(i, c, n, list(seeds), base, max_pairs) for i, c in enumerate(configs) if i not in done]
    results = dict(done)
    pending = 0
    try:
        if workers > 1 and len(todo) > 1:
            ex = ProcessPoolExecutor(workers)
            it = ex.map(_eval_job, todo)
        else:
            ex = None
            it = map(_eval_job, todo)
        for res in it:
            results[res.index] = res
            if fh is not None:
                fh.write(json.dumps(res.to_record(), sort_keys=True) + "\n")
                pending += 1
                if pending >= checkpoint_every:
                    fh.flush()
                    pending = 0
            if progress is not None:
                progress(len(results), len(configs))
        if ex is not None:
            ex.shutdown()
    finally:
        if fh is not None:
            fh.close()
    return rank_results([results[i] for i in range(len(configs))], targets)


def write_ranking(ranked, scales, path):
    """Every configuration with its NED and rank, best first."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"scales": scales}, sort_keys=True) + "\n")
        for r in ranked:
            rec = {"rank": r.rank, "index": r.index, "ned": r.ned if math.isfinite(r.ned) else None,
                   "config": r.config, "error": r.error,
                   "mean": None if r.mean is None else r.mean.to_dict()}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def summary_table(ranked, top=5):
    rows = ["\t".join(SUMMARY_HEADER + ("NED",))]
    for r in ranked[:top]:
        vals = [f"{r.config[f]:g}" for f in SUMMARY_FIELDS]
        vals.append(f"{r.ned:.3f}" if math.isfinite(r.ned) else "inf")
        rows.append("\t".join(vals))
    return "\n".join(rows) + "\n"
