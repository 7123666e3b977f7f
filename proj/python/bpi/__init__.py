"""Interacting branching processes: simulation and checks."""

import json as _json

from ._bpi import (
    ConfigError,
    DerivativeUnavailable,
    EmptySample,
    GridMismatch,
    Interaction,
    MalformedForest,
    MissingArtifact,
    classify,
    feller_marginal,
    grow_forest,
    hitting_probability,
    ks_two_sample,
    moment_report,
    ray_knight_field,
    scale_function,
    simulate_population,
    solve_feller,
    total_rates,
)
from ._bpi import run_config as _run_config


def run(config):
    """Run an experiment from a config dict; the summary comes back parsed."""
    result = _run_config(_json.dumps(config))
    result["summary"] = _json.loads(result["summary"])
    return result


__all__ = [
    "ConfigError",
    "DerivativeUnavailable",
    "EmptySample",
    "GridMismatch",
    "Interaction",
    "MalformedForest",
    "MissingArtifact",
    "classify",
    "feller_marginal",
    "grow_forest",
    "hitting_probability",
    "ks_two_sample",
    "moment_report",
    "ray_knight_field",
    "run",
    "scale_function",
    "simulate_population",
    "solve_feller",
    "total_rates",
]
