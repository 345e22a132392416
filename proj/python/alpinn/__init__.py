"""Augmented Lagrangian training of physics-informed networks."""

from ._core import (
    ConfigError,
    aggregate,
    burgers_exact,
    config,
    exact,
    parse_config,
    plot,
    problems,
    run,
    train,
)

__all__ = [
    "ConfigError",
    "aggregate",
    "burgers_exact",
    "config",
    "exact",
    "parse_config",
    "plot",
    "problems",
    "run",
    "train",
]
