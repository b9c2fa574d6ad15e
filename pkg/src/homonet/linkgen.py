"""Directed link formation over the homophily space.

Each node, in ascending id order, runs three phases: affinity links to
semantically close nodes, triadic closure over friends-of-friends, and
degree-penalised long-range links to semantically distant nodes. Every
node draws from its own random stream, but the phases read the evolving
neighbourhood map ``H``, so processing order is part of the semantics.
"""

import configparser
import math
from array import array
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .graph import DirectedGraph
from .rng import stream
from .semspace import SpatialIndex

SMALL_N = 10**4
LARGE_N = 10**5
PRESAMPLE_FACTOR = 32

# file key -> RawHyperParams field
FILE_KEYS = {
    "CONN_EXP_WEIGHT": "alpha",
    "CONN_RAND_WEIGHT": "beta",
    "TRIADIC_PROB_BASE": "delta0",
    "TRIADIC_PROB_SCALE": "lam",
    "TRIADIC_PROB_CAP": "delta_cap",
    "Y_DISTANT_PROB_BASE": "eta0",
    "Y_DISTANT_PROB_SCALE": "kappa",
    "Y_DISTANT_PROB_CAP": "eta_cap",
    "NUM_CANDIDATES_SCALE": "zeta",
    "mu": "mu",
    "theta": "theta",
    "gamma": "gamma",
    "k_max": "k_max",
    "temperature": "temperature",
    "logit_form": "logit_form",
    "triadic_cap": "triadic_cap",
}


class HyperParamError(ValueError):
    pass


@dataclass(frozen=True)
class RawHyperParams:
    alpha: float = 0.16
    beta: float = 0.06
    delta0: float = 0.20
    lam: float = 3.5
    mu: float = 1.0
    delta_cap: float = 0.42
    eta0: float = 0.05
    kappa: float = 0.10
    eta_cap: float = None  # None -> eta0 + kappa
    zeta: float = 36.0
    theta: float = 0.6
    gamma: float = 1.0
    k_max: int = 50
    temperature: float = 0.5
    logit_form: str = "exp"
    triadic_cap: int = None  # None -> k; 0 -> every friend-of-friend is tried

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (int, float)) and v < 0:
                raise HyperParamError(f"{f.name} must be non-negative, got {v}")
        if self.delta_cap < self.delta0:
            raise HyperParamError("TRIADIC_PROB_CAP must be >= TRIADIC_PROB_BASE")
        if self.temperature <= 0:
            raise HyperParamError("temperature must be positive")
        if self.logit_form not in ("exp", "linear"):
            raise HyperParamError("logit_form must be 'exp' or 'linear'")

    @property
    def effective_eta_cap(self):
        return self.eta0 + self.kappa if self.eta_cap is None else self.eta_cap

    def to_file_dict(self):
        inv = {v: k for k, v in FILE_KEYS.items()}
        return {inv[k]: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class ResolvedHyperParams:
    n: int
    k: int
    delta: float
    eta: float
    c: int
    alpha: float
    beta: float
    temperature: float
    logit_form: str = "exp"
    triadic_cap: int = None


def resolve(raw, n):
    """Evaluate the size-dependent schedules for a graph of ``n`` nodes."""
    if n < 2:
        raise HyperParamError("need at least 2 nodes")
    log2n = math.log2(n)
    log10n = math.log10(n)
    k = max(1, math.floor(min(log2n * raw.gamma, raw.k_max)))

    delta = min(raw.delta_cap, raw.delta0 + raw.lam / log2n**raw.mu)
    eta = min(raw.effective_eta_cap, raw.eta0 + raw.kappa / log2n**0.75)
    c = max(1, math.floor(raw.zeta / log2n**raw.theta))
    if n < SMALL_N:
        delta *= 0.35
        eta *= 0.05
        c = max(1, math.floor(c * 0.25))
    elif n >= LARGE_N:
        # floors are applied after the caps, so they may exceed them
        delta = max(delta, 0.22 + 0.02 * log10n)
        eta = max(eta, raw.eta0 + 0.02 * log10n)
        c = max(c, 6)
    if raw.triadic_cap is None:
        tri_cap = k
    else:
        tri_cap = int(raw.triadic_cap) or None
    return ResolvedHyperParams(n, k, delta, eta, c, raw.alpha, raw.beta, raw.temperature, raw.logit_form, tri_cap)


def load_hyperparams(path=None, section="hyperparameters"):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    if path is not None and not cp.read(path, encoding="utf-8"):
        raise HyperParamError(f"cannot read hyperparameter file {path}")
    return hyperparams_from_parser(cp, section)


def hyperparams_from_parser(cp, section="hyperparameters"):
    if not cp.has_section(section):
        return RawHyperParams()
    kw = {}
    for key, value in cp[section].items():
        if key not in FILE_KEYS:
            raise HyperParamError(f"unknown hyperparameter {key!r}")
        name = FILE_KEYS[key]
        try:
            if name == "logit_form":
                kw[name] = value.strip()
            elif name in ("k_max", "triadic_cap"):
                kw[name] = int(value)
            else:
                kw[name] = float(value)
        except ValueError:
            raise HyperParamError(f"{key}: cannot parse {value!r}") from None
    return RawHyperParams(**kw)


def with_overrides(raw, **kw):
    return replace(raw, **kw)


# ---------------------------------------------------------------- formulas

def local_degree_target(influence, k, max_score=100.0):
    """Number of affinity links a node attempts: linear in influence, in [1, k]."""
    n = math.floor(k * influence / max_score + 0.5)
    return min(max(n, 1), k)


def link_scores(dists, alpha, beta, noise, logit_form="exp"):
    d = np.asarray(dists, dtype=float)
    base = np.exp(-d) if logit_form == "exp" else -d
    return alpha * base + beta * np.asarray(noise, dtype=float)


def softmax(scores, temperature):
    z = np.asarray(scores, dtype=float) / temperature
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def triadic_prob(delta, rho):
    return delta * (1.0 + 1.0 / (1.0 + math.exp(-10.0 * (0.05 - rho))))


def distant_prob(eta, degree):
    return eta / (1.0 + math.log(degree + 1.0))


# ---------------------------------------------------------------- phases

def affinity_links(i, cand_ids, cand_dists, n, H, resolved, rng):
    """Pick up to ``n`` of the not-yet-linked nearest neighbours of ``i``.

    Draws are without replacement with softmax probabilities, renormalised
    after each pick (sampled in one shot with Gumbel keys, which yields the
    same distribution). Returns the chosen ids in draw order.
    """
    Hi = H[i]
    keep = [r for r, j in enumerate(cand_ids) if j not in Hi]
    if not keep:
        return []
    ids = np.asarray(cand_ids)[keep]
    d = np.asarray(cand_dists)[keep]
    s = link_scores(d, resolved.alpha, resolved.beta, rng.random(len(ids)), resolved.logit_form)
    keys = s / resolved.temperature + rng.gumbel(size=len(ids))
    take = min(n, len(ids))
    order = np.lexsort((ids, -keys))[:take]
    return [int(j) for j in ids[order]]


def triadic_links(i, H, n_nodes, delta, rng, cap=None):
    """Bernoulli trials over friends-of-friends of ``i``.

    The density term is re-read after every accepted link. When ``cap`` is
    set and there are more candidates, a uniform subset of ``cap`` of them
    is tried; without it, closure is supercritical once the per-candidate
    probability times the typical degree exceeds one.
    """
    Hi = H[i]
    if not Hi or delta <= 0:
        return []
    cands = set()
    for j in Hi:
        cands |= H[j]
    cands -= Hi
    cands.discard(i)
    if not cands:
        return []
    cands = sorted(cands)
    if cap is not None and len(cands) > cap:
        cands = sorted(rng.choice(cands, size=cap, replace=False).tolist())
    u = rng.random(len(cands))
    out = []
    for cand, x in zip(cands, u.tolist()):
        if x < triadic_prob(delta, len(Hi) / n_nodes):
            Hi.add(cand)
            H[cand].add(i)
            out.append(cand)
    return out


def presample_non_neighbors(i, H, n_nodes, size, rng):
    """Uniform sample without replacement from nodes outside ``H[i] | {i}``."""
    Hi = H[i]
    avail = n_nodes - 1 - len(Hi)
    size = min(size, avail)
    if size <= 0:
        return np.zeros(0, dtype=np.int64)
    if 4 * size >= avail:
        pool = np.array([u for u in range(n_nodes) if u != i and u not in Hi], dtype=np.int64)
        return rng.choice(pool, size=size, replace=False)
    picked, seen = [], set()
    while len(picked) < size:
        for u in rng.integers(0, n_nodes, size=2 * size).tolist():
            if u != i and u not in Hi and u not in seen:
                seen.add(u)
                picked.append(u)
                if len(picked) == size:
                    break
    return np.asarray(picked, dtype=np.int64)


def long_range_links(i, P, H, resolved, rng):
    """Most distant ``c`` nodes of a uniform pre-sample, each accepted with a degree-penalised probability."""
    if resolved.eta <= 0 or resolved.c < 1:
        return []
    n_nodes = resolved.n
    pool = presample_non_neighbors(i, H, n_nodes, min(n_nodes - 1, PRESAMPLE_FACTOR * resolved.c), rng)
    if len(pool) == 0:
        return []
    diff = P[pool] - P[i]
    d = np.sqrt(np.sum(diff * diff, axis=-1))
    top = pool[np.lexsort((pool, -d))[: resolved.c]]
    u = rng.random(len(top))
    out = []
    Hi = H[i]
    for cand, x in zip(top.tolist(), u.tolist()):
        if x < distant_prob(resolved.eta, len(H[cand])):
            Hi.add(cand)
            H[cand].add(i)
            out.append(cand)
    return out


def generate_network(profiles, P, raw=None, seed=0, max_score=100.0, workers=1, progress=None):
    """Build the directed follower graph for ``profiles`` projected as ``P``.

    ``P`` may be a :class:`~homonet.semspace.ProjectionMatrix` or a plain
    array. The result carries the final neighbourhood map in
    ``neighborhoods``.
    """
    raw = raw or RawHyperParams()
    P = np.ascontiguousarray(getattr(P, "values", P), dtype=float)
    N = P.shape[0]
    if len(profiles) != N:
        raise ValueError("profile count and projection rows differ")
    resolved = resolve(raw, N)
    index = SpatialIndex(P)
    nbr_ids, nbr_d = index.query_all(resolved.k, workers=workers)
    H = [set() for _ in range(N)]
    src, dst = array("q"), array("q")

    for i in range(N):
        rng = stream(seed, "links", i)
        n = local_degree_target(profiles[i].influence, resolved.k, max_score)
        for j in affinity_links(i, nbr_ids[i], nbr_d[i], n, H, resolved, rng):
            H[i].add(j)
            H[j].add(i)
            src.append(i)
            dst.append(j)
        for j in triadic_links(i, H, N, resolved.delta, rng, cap=resolved.triadic_cap):
            src.append(i)
            dst.append(j)
        for j in long_range_links(i, P, H, resolved, rng):
            src.append(i)
            dst.append(j)
        if progress is not None and (i + 1) % 10000 == 0:
            progress(i + 1, N)

    edges = np.column_stack([np.frombuffer(src, dtype=np.int64), np.frombuffer(dst, dtype=np.int64)])
    return DirectedGraph(N, edges, neighborhoods=H)
