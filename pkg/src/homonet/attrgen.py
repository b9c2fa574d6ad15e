"""Synthetic user profiles: demographics, Big Five polarity, occupation,
interests and a power-law influence score.
"""

import configparser
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import stream

TRAITS = ("Openness", "Conscientiousness", "Extraversion", "Agreeableness", "Neuroticism")
GENDERS = ("Female", "Male")

DEFAULT_INTERVALS = ((0, 12), (13, 17), (18, 25), (26, 35), (36, 50), (51, 65), (66, 80))
DEFAULT_AGE_PROBS = (0.01, 0.03, 0.25, 0.30, 0.20, 0.15, 0.06)


class ConfigError(ValueError):
    """Raised when a profile or generator configuration is invalid."""


def data_dir():
    env = os.environ.get("HOMONET_DATA_DIR")
    if env:
        return Path(env)
    return Path(__file__).parent / "data"


def _read_lines(path):
    with open(path, encoding="utf-8") as fh:
        return [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]


@dataclass(frozen=True)
class AgeModel:
    intervals: tuple = DEFAULT_INTERVALS
    probs: tuple = DEFAULT_AGE_PROBS

    def __post_init__(self):
        if len(self.intervals) != 7 or len(self.probs) != 7:
            raise ConfigError("age model needs exactly 7 intervals and 7 probabilities")
        lo_expected = 0
        for lo, hi in self.intervals:
            if lo != lo_expected or hi < lo:
                raise ConfigError(f"age intervals must be contiguous from 0, got {self.intervals}")
            lo_expected = hi + 1
        if lo_expected != 81:
            raise ConfigError("age intervals must end at 80")
        p = np.asarray(self.probs, dtype=float)
        if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
            raise ConfigError(f"age probabilities must be non-negative and sum to 1, got {self.probs}")
        object.__setattr__(self, "_cdf", np.cumsum(p))

    def interval_of(self, age):
        for idx, (lo, hi) in enumerate(self.intervals):
            if lo <= age <= hi:
                return idx
        raise ConfigError(f"age {age} is outside every interval")


@dataclass(frozen=True)
class TraitModel:
    # probability of the "+" polarity, aligned with TRAITS
    positive: tuple = (0.75, 0.5, 0.75, 0.5, 0.75)

    def __post_init__(self):
        if len(self.positive) != len(TRAITS):
            raise ConfigError("trait model needs one probability per Big Five trait")
        if any(not 0.0 <= p <= 1.0 for p in self.positive):
            raise ConfigError(f"trait probabilities must lie in [0, 1], got {self.positive}")


@dataclass(frozen=True)
class OccupationPools:
    pools: tuple  # one tuple of labels per age interval

    def __post_init__(self):
        if any(len(pool) == 0 for pool in self.pools):
            raise ConfigError("every age interval needs a non-empty occupation pool")


@dataclass(frozen=True)
class InterestCatalog:
    labels: tuple
    max_interests: int = 5
    min_interests: int = 1

    def __post_init__(self):
        if len(self.labels) == 0:
            raise ConfigError("interest catalog is empty")
        if len(set(self.labels)) != len(self.labels):
            raise ConfigError("interest labels must be unique")
        if not 1 <= self.min_interests <= self.max_interests:
            raise ConfigError("need 1 <= min_interests <= max_interests")


@dataclass(frozen=True)
class InfluenceModel:
    a: float = 2.5
    x_min: float = 10.0
    max_score: float = 100.0
    boost_prob: float = 0.5
    young_multiplier: float = 1.2
    old_multiplier: float = 0.8

    def __post_init__(self):
        if self.a <= 1:
            raise ConfigError("power-law exponent a must exceed 1")
        if not 0 < self.x_min < self.max_score:
            raise ConfigError("need 0 < x_min < max_score")
        if self.young_multiplier <= 0 or self.old_multiplier <= 0:
            raise ConfigError("age multipliers must be positive")
        if not 0.0 <= self.boost_prob <= 1.0:
            raise ConfigError("boost_prob must lie in [0, 1]")


@dataclass(frozen=True)
class NodeProfile:
    id: int
    name: str
    gender: str
    age: int
    traits: tuple  # bools aligned with TRAITS, True = "+"
    occupation: str
    interests: tuple
    influence: float

    def trait_labels(self):
        return [f"{t}{'+' if flag else '-'}" for t, flag in zip(TRAITS, self.traits)]

    def to_record(self):
        return {
            "id": self.id,
            "name": self.name,
            "gender": self.gender,
            "age": self.age,
            "occupation": self.occupation,
            "interests": list(self.interests),
            "traits": self.trait_labels(),
            "influence": self.influence,
        }

    @classmethod
    def from_record(cls, rec):
        flags = {}
        for lab in rec["traits"]:
            flags[lab[:-1]] = lab[-1] == "+"
        return cls(
            id=int(rec["id"]),
            name=rec["name"],
            gender=rec["gender"],
            age=int(rec["age"]),
            traits=tuple(flags[t] for t in TRAITS),
            occupation=rec["occupation"],
            interests=tuple(rec["interests"]),
            influence=float(rec["influence"]),
        )


@dataclass(frozen=True)
class ProfileConfig:
    age: AgeModel = field(default_factory=AgeModel)
    traits: TraitModel = field(default_factory=TraitModel)
    occupations: OccupationPools = None
    interests: InterestCatalog = None
    influence: InfluenceModel = field(default_factory=InfluenceModel)
    names: dict = None
    female_prob: float = 0.5

    def __post_init__(self):
        if self.occupations is None:
            object.__setattr__(self, "occupations", default_occupation_pools(self.age))
        if self.interests is None:
            object.__setattr__(self, "interests", InterestCatalog(tuple(_read_lines(data_dir() / "interests.txt"))))
        if self.names is None:
            object.__setattr__(self, "names", default_names())
        if len(self.occupations.pools) != len(self.age.intervals):
            raise ConfigError("one occupation pool is required per age interval")
        for g in GENDERS:
            if not self.names.get(g):
                raise ConfigError(f"no names available for gender {g}")

    def to_dict(self):
        return {
            "age": {"intervals": [list(iv) for iv in self.age.intervals], "probs": list(self.age.probs)},
            "traits": dict(zip(TRAITS, self.traits.positive)),
            "occupations": {f"{lo}-{hi}": list(pool) for (lo, hi), pool in zip(self.age.intervals, self.occupations.pools)},
            "interests": {
                "labels": list(self.interests.labels),
                "max_interests": self.interests.max_interests,
                "min_interests": self.interests.min_interests,
            },
            "influence": {
                "a": self.influence.a,
                "x_min": self.influence.x_min,
                "max_score": self.influence.max_score,
                "boost_prob": self.influence.boost_prob,
                "young_multiplier": self.influence.young_multiplier,
                "old_multiplier": self.influence.old_multiplier,
            },
            "female_prob": self.female_prob,
        }


def default_names():
    d = data_dir()
    return {"Female": tuple(_read_lines(d / "names_female.txt")), "Male": tuple(_read_lines(d / "names_male.txt"))}


def _parse_interval(key):
    lo, hi = key.split("-")
    return int(lo), int(hi)


def _split(value):
    return [v.strip() for v in value.split(",") if v.strip()]


def _pools_from_section(section, age):
    by_interval = {_parse_interval(k): tuple(_split(v)) for k, v in section.items()}
    missing = [iv for iv in age.intervals if iv not in by_interval]
    if missing:
        raise ConfigError(f"occupation pools missing for intervals {missing}")
    return OccupationPools(tuple(by_interval[iv] for iv in age.intervals))


def default_occupation_pools(age=None):
    age = age or AgeModel()
    cp = _parser()
    cp.read(data_dir() / "occupation_pools.ini", encoding="utf-8")
    return _pools_from_section(cp["occupations"], age)


def _parser():
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep key case
    return cp


def _get_float(section, key, default):
    try:
        return section.getfloat(key, fallback=default)
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key}: {exc}") from None


def load_profile_config(path=None):
    """Read a profile config file; absent sections keep their defaults."""
    cp = _parser()
    if path is not None:
        if not cp.read(path, encoding="utf-8"):
            raise ConfigError(f"cannot read config file {path}")
    return profile_config_from_parser(cp)


def profile_config_from_parser(cp):
    try:
        age = AgeModel()
        if cp.has_section("age"):
            s = cp["age"]
            intervals = tuple(_parse_interval(v) for v in _split(s.get("intervals", ""))) or DEFAULT_INTERVALS
            probs = tuple(float(v) for v in _split(s.get("probs", ""))) or DEFAULT_AGE_PROBS
            age = AgeModel(intervals, probs)

        traits = TraitModel()
        if cp.has_section("traits"):
            s = cp["traits"]
            unknown = set(s) - set(TRAITS)
            if unknown:
                raise ConfigError(f"unknown traits {sorted(unknown)}")
            traits = TraitModel(tuple(_get_float(s, t, p) for t, p in zip(TRAITS, traits.positive)))

        occupations = None
        if cp.has_section("occupations"):
            occupations = _pools_from_section(cp["occupations"], age)

        interests = None
        if cp.has_section("interests"):
            s = cp["interests"]
            labels = tuple(_split(s["labels"])) if "labels" in s else tuple(_read_lines(data_dir() / "interests.txt"))
            interests = InterestCatalog(
                labels,
                max_interests=s.getint("max_interests", fallback=5),
                min_interests=s.getint("min_interests", fallback=1),
            )

        influence = InfluenceModel()
        if cp.has_section("influence"):
            s = cp["influence"]
            base = InfluenceModel()
            influence = InfluenceModel(**{f: _get_float(s, f, getattr(base, f)) for f in base.__dataclass_fields__})

        female_prob = 0.5
        if cp.has_section("gender"):
            female_prob = _get_float(cp["gender"], "female_prob", 0.5)
        return ProfileConfig(age, traits, occupations, interests, influence, None, female_prob)
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def sample_age(rng, model):
    idx = int(np.searchsorted(model._cdf, rng.random(), side="right"))
    idx = min(idx, len(model.intervals) - 1)
    lo, hi = model.intervals[idx]
    return int(rng.integers(lo, hi + 1))


def sample_traits(rng, model):
    u = rng.random(len(TRAITS))
    return tuple(bool(x < p) for x, p in zip(u, model.positive))


def sample_occupation(rng, age, pools, age_model=None):
    age_model = age_model or AgeModel()
    pool = pools.pools[age_model.interval_of(age)]
    return pool[int(rng.integers(len(pool)))]


def sample_interests(rng, catalog):
    hi = min(catalog.max_interests, len(catalog.labels))
    lo = min(catalog.min_interests, hi)
    count = int(rng.integers(lo, hi + 1))
    picks = rng.choice(len(catalog.labels), size=count, replace=False)
    return tuple(catalog.labels[i] for i in picks)


def sample_influence(rng, model, traits, age):
    """Pareto base draw, optional top-quintile boost for extraverts,
    then an age multiplier and the hard cap."""
    # density ~ x**-a, so the survival function falls as x**(1 - a)
    tail = -1.0 / (model.a - 1.0)
    u = rng.random()
    score = model.x_min * (1.0 - u) ** tail
    if traits[TRAITS.index("Extraversion")] and rng.random() < model.boost_prob:
        # inverse CDF restricted to quantiles in [0.8, 1)
        score = model.x_min * (0.2 * (1.0 - rng.random())) ** tail
    if 16 <= age <= 39:
        score *= model.young_multiplier
    elif age >= 40:
        score *= model.old_multiplier
    return float(min(score, model.max_score))


def make_profile(i, config, seed):
    rng = stream(seed, "profile", i)
    gender = GENDERS[0] if rng.random() < config.female_prob else GENDERS[1]
    names = config.names[gender]
    name = names[int(rng.integers(len(names)))]
    age = sample_age(rng, config.age)
    traits = sample_traits(rng, config.traits)
    occupation = sample_occupation(rng, age, config.occupations, config.age)
    interests = sample_interests(rng, config.interests)
    influence = sample_influence(rng, config.influence, traits, age)
    return NodeProfile(i, name, gender, age, traits, occupation, interests, influence)


def _profile_chunk(args):
    lo, hi, config, seed = args
    return [make_profile(i, config, seed) for i in range(lo, hi)]


def generate_profiles(n, config=None, seed=0, workers=1):
    """Generate ``n`` profiles with ids ``0..n-1``.

    Each node draws from its own stream, so the output is identical for
    any ``workers`` value.
    """
    if n < 1:
        raise ConfigError("need at least 1 profile")
    config = config or ProfileConfig()
    if workers <= 1 or n < 5000:
        return [make_profile(i, config, seed) for i in range(n)]
    step = -(-n // (workers * 4))
    chunks = [(lo, min(lo + step, n), config, seed) for lo in range(0, n, step)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        out = []
        for part in ex.map(_profile_chunk, chunks):
            out.extend(part)
    return out


def check_profile(p, config):
    """Return a list of invariant violations for one profile (empty if valid)."""
    problems = []
    idx = config.age.interval_of(p.age) if 0 <= p.age <= 80 else None
    if idx is None:
        problems.append("age outside model support")
    elif p.occupation not in config.occupations.pools[idx]:
        problems.append("occupation not in the pool of its age interval")
    if len(set(p.interests)) != len(p.interests):
        problems.append("duplicate interests")
    if not 1 <= len(p.interests) <= config.interests.max_interests:
        problems.append("interest count out of range")
    if not 0 < p.influence <= config.influence.max_score:
        problems.append("influence out of range")
    return problems


def save_profiles(profiles, path):
    with open(path, "w", encoding="utf-8") as fh:
        for p in profiles:
            fh.write(json.dumps(p.to_record(), ensure_ascii=False) + "\n")


def load_profiles(path):
    with open(path, encoding="utf-8") as fh:
        return [NodeProfile.from_record(json.loads(ln)) for ln in fh if ln.strip()]
