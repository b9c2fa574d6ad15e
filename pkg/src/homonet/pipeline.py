"""End-to-end generation: profiles -> projection -> follower graph."""

import configparser
from dataclasses import dataclass

import numpy as np

from . import attrgen, linkgen, semspace


@dataclass
class GeneratorConfig:
    profiles: attrgen.ProfileConfig
    hyper: linkgen.RawHyperParams
    weights: tuple = None  # None -> all ones


def load_config(path=None):
    """Read one config file holding profile sections, ``[hyperparameters]`` and ``[weights]``."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    if path is not None and not cp.read(path, encoding="utf-8"):
        raise attrgen.ConfigError(f"cannot read config file {path}")
    profiles = attrgen.profile_config_from_parser(cp)
    hyper = linkgen.hyperparams_from_parser(cp)
    weights = None
    if cp.has_section("weights") and "w" in cp["weights"]:
        try:
            weights = tuple(float(x) for x in cp["weights"]["w"].split(","))
        except ValueError as exc:
            raise attrgen.ConfigError(f"[weights] w: {exc}") from None
    return GeneratorConfig(profiles, hyper, weights)


def generate(n, config=None, seed=0, workers=1, progress=None):
    """Return ``(profiles, projection, graph)`` for ``n`` synthetic users."""
    if n < 2:
        raise linkgen.HyperParamError("need at least 2 nodes")
    config = config or GeneratorConfig(attrgen.ProfileConfig(), linkgen.RawHyperParams())
    profiles = attrgen.generate_profiles(n, config.profiles, seed, workers=workers)
    weights = None if config.weights is None else np.asarray(config.weights)
    P = semspace.project_profiles(profiles, weights=weights, seed=seed)
    g = linkgen.generate_network(
        profiles, P, config.hyper, seed, max_score=config.profiles.influence.max_score,
        workers=workers, progress=progress,
    )
    return profiles, P, g
