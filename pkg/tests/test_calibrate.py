import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homonet import calibrate, netmetrics as nm
from homonet.calibrate import GRID_FIELDS, GridError, GridResult, GridSpec

N = 120
PINNED = dict(alpha=(0.16,), beta=(0.06,), delta0=(0.20,), lam=(3.5,), delta_cap=(0.42,), eta0=(0.05,), kappa=(0.10,), zeta=(36,))


def sub_grid():
    # 2**4 = 16 configurations
    return GridSpec(**dict(PINNED, alpha=(0.0, 0.16), beta=(0.0, 0.1), kappa=(0.01, 0.1), zeta=(8, 36)))


def ned_oracle(mean, target, lo, hi):
    total = 0.0
    for m in nm.METRICS:
        s = hi[m] - lo[m]
        if s > 0:
            total += ((mean[m] - target[m]) / s) ** 2
    return math.sqrt(total)


# ---------------------------------------------------------------- enumerate

def test_singleton_grid():
    assert calibrate.enumerate_grid(GridSpec(**PINNED)) == [{k: v[0] for k, v in PINNED.items()}]


def test_two_by_two_lexicographic():
    cfgs = calibrate.enumerate_grid(GridSpec(**dict(PINNED, alpha=(0.0, 0.1), zeta=(8, 12))))
    assert [(c["alpha"], c["zeta"]) for c in cfgs] == [(0.0, 8), (0.0, 12), (0.1, 8), (0.1, 12)]


def test_default_grid_size():
    g = GridSpec()
    assert g.size == 34_560
    assert len(calibrate.enumerate_grid(g)) == 34_560


@given(st.lists(st.integers(1, 3), min_size=8, max_size=8))
@settings(max_examples=30)
def test_count_is_product(lengths):
    g = GridSpec(**{f: tuple(range(k)) for f, k in zip(GRID_FIELDS, lengths)})
    cfgs = calibrate.enumerate_grid(g)
    assert len(cfgs) == math.prod(lengths) == g.size
    assert len({tuple(c.values()) for c in cfgs}) == len(cfgs)


def test_empty_list_rejected():
    with pytest.raises(GridError):
        GridSpec(alpha=())


def test_load_grid(tmp_path):
    p = tmp_path / "g.cfg"
    p.write_text("[grid]\nalpha = 0.0, 0.16\nNUM_CANDIDATES_SCALE = 8, 36\n")
    g = calibrate.load_grid(p)
    assert g.alpha == (0.0, 0.16) and g.zeta == (8.0, 36.0)
    assert g.beta == GridSpec().beta
    p.write_text("[grid]\nomega = 1\n")
    with pytest.raises(GridError):
        calibrate.load_grid(p)


# ---------------------------------------------------------------- evaluate

BEST = {k: v[0] for k, v in PINNED.items()}


def test_evaluate_repeatable():
    a = calibrate.evaluate(BEST, N, [3])
    b = calibrate.evaluate(BEST, N, [3])
    assert a.ok() and a.to_record() == b.to_record()


def test_evaluate_best_row_finite():
    r = calibrate.evaluate(BEST, 1000, [0])
    assert r.ok() and np.isfinite(r.mean.vector()).all()


def test_own_mean_as_target_is_zero():
    r = calibrate.evaluate(BEST, N, [0, 1])
    t = nm.ReferenceTargets.from_report(r.mean)
    r2 = calibrate.evaluate(BEST, N, [0, 1], targets=t, scales=dict.fromkeys(nm.METRICS, 1.0))
    assert r2.ned == 0.0


def test_failure_recorded_and_ranked_last():
    bad = dict(BEST, delta0=0.5)  # above the cap
    r = calibrate.evaluate(bad, N, [0])
    assert r.error and not r.ok()
    good = calibrate.evaluate(BEST, N, [0])
    r.index, good.index = 0, 1
    ranked, _ = calibrate.rank_results([r, good], nm.ReferenceTargets.bluesky())
    assert ranked[0] is good and ranked[-1] is r and ranked[-1].ned == math.inf


def test_evaluate_preconditions():
    with pytest.raises(GridError):
        calibrate.evaluate(BEST, 1, [0])
    with pytest.raises(GridError):
        calibrate.evaluate(BEST, N, [])


def _fake(index, values):
    rep = nm.MetricsReport(*values, n=10, e=10, sp_pairs_sampled=90, seed=0)
    return GridResult({"i": index}, [rep], rep, index=index)


def test_dominating_config_first():
    t = nm.ReferenceTargets(dict(zip(nm.METRICS, [0.1, 0.2, 1.0, 0.3, 0.6])))
    near = _fake(1, [0.12, 0.25, 0.98, 0.35, 0.55])
    far = _fake(0, [0.3, 0.5, 0.7, 0.8, 0.1])
    ranked, _ = calibrate.rank_results([far, near], t)
    assert [r.index for r in ranked] == [1, 0] and [r.rank for r in ranked] == [1, 2]


# ---------------------------------------------------------------- sweep

@pytest.fixture(scope="module")
def full_sweep(tmp_path_factory):
    d = tmp_path_factory.mktemp("sweep")
    ranked, scales = calibrate.search(sub_grid(), N, [0], path=d / "sweep.jsonl")
    calibrate.write_ranking(ranked, scales, d / "ranking.jsonl")
    return d, ranked, scales


def test_sweep_ranking_matches_hand_sorted(full_sweep):
    d, ranked, _ = full_sweep
    assert len(ranked) == 16 and all(r.ok() for r in ranked)
    target = nm.BLUESKY
    means = [r.mean.to_dict() for r in sorted(ranked, key=lambda r: r.index)]
    pool = means + [target]
    lo = {m: min(x[m] for x in pool) for m in nm.METRICS}
    hi = {m: max(x[m] for x in pool) for m in nm.METRICS}
    want = sorted(range(16), key=lambda i: (ned_oracle(means[i], target, lo, hi), i))
    assert [r.index for r in ranked] == want
    for r in ranked:
        assert r.ned == pytest.approx(ned_oracle(means[r.index], target, lo, hi), abs=1e-12)
    assert [r.rank for r in ranked] == list(range(1, 17))


def test_sweep_deterministic(full_sweep, tmp_path):
    d, _, _ = full_sweep
    ranked, scales = calibrate.search(sub_grid(), N, [0], path=tmp_path / "sweep.jsonl", workers=2)
    calibrate.write_ranking(ranked, scales, tmp_path / "ranking.jsonl")
    assert (tmp_path / "sweep.jsonl").read_bytes() == (d / "sweep.jsonl").read_bytes()
    assert (tmp_path / "ranking.jsonl").read_bytes() == (d / "ranking.jsonl").read_bytes()


@pytest.mark.parametrize("keep,torn", [(0, False), (5, False), (9, True)])
def test_sweep_resume_byte_identical(full_sweep, tmp_path, keep, torn):
    d, _, _ = full_sweep
    lines = (d / "sweep.jsonl").read_bytes().splitlines(keepends=True)
    partial = b"".join(lines[:keep])
    if torn:
        # a kill in the middle of a write
        partial += lines[keep][: len(lines[keep]) // 2]
    sweep = tmp_path / "sweep.jsonl"
    sweep.write_bytes(partial)
    seen = []
    ranked, scales = calibrate.search(sub_grid(), N, [0], path=sweep, resume=True, progress=lambda a, b: seen.append(a))
    calibrate.write_ranking(ranked, scales, tmp_path / "ranking.jsonl")
    assert len(seen) == 16 - keep
    assert (tmp_path / "ranking.jsonl").read_bytes() == (d / "ranking.jsonl").read_bytes()
    assert sorted(sweep.read_bytes().splitlines()) == sorted((d / "sweep.jsonl").read_bytes().splitlines())


def test_resume_rejects_other_grid(full_sweep, tmp_path):
    d, _, _ = full_sweep
    sweep = tmp_path / "sweep.jsonl"
    sweep.write_bytes((d / "sweep.jsonl").read_bytes())
    other = GridSpec(**dict(PINNED, alpha=(0.25, 0.1)))
    with pytest.raises(GridError):
        calibrate.search(other, N, [0], path=sweep, resume=True)


def test_ranking_invariant_to_scale_rescale(full_sweep):
    _, ranked, scales = full_sweep
    t = nm.ReferenceTargets.bluesky()
    for c in (0.01, 3.0, 250.0):
        s = {k: v * c for k, v in scales.items()}
        order = sorted(ranked, key=lambda r: (nm.ned(r.mean, t, s), r.index))
        assert [r.index for r in order] == [r.index for r in ranked]


def test_sweep_records_and_summary(full_sweep):
    d, ranked, _ = full_sweep
    recs = [json.loads(x) for x in (d / "sweep.jsonl").read_text().splitlines()]
    assert [r["index"] for r in recs] == list(range(16))
    assert set(recs[0]) == {"index", "config", "error", "mean", "reports"}
    table = calibrate.summary_table(ranked).splitlines()
    assert table[0].split("\t") == list(calibrate.SUMMARY_HEADER) + ["NED"]
    assert len(table) == 6
    assert table[1].split("\t")[-1] == f"{ranked[0].ned:.3f}"
