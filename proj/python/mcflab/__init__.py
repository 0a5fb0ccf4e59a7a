"""Graphical mean curvature flow experiments.

The compiled core exposes grids, closed-form flows, the motion-law solver,
weak-form residuals, field dumps and the experiment runner. ``run`` and
``check`` accept either INI text or a path to a config file.
"""

from __future__ import annotations

from os import PathLike
from pathlib import Path

from ._core import (
    ConfigError,
    Expr,
    GraphFlow,
    Grid,
    IoError,
    ParseError,
    admissibility,
    brakke_residual,
    build_grid,
    dump_flow,
    experiments,
    load_flow,
    lpq_norm,
    make_flow,
    mean_curvature,
    sample_graph,
    solve,
    theorem_exponents,
)
from . import _core

__all__ = [
    "ConfigError",
    "Expr",
    "GraphFlow",
    "Grid",
    "IoError",
    "ParseError",
    "admissibility",
    "brakke_residual",
    "build_grid",
    "check",
    "dump_flow",
    "experiments",
    "load_flow",
    "lpq_norm",
    "make_flow",
    "mean_curvature",
    "run",
    "sample_graph",
    "solve",
    "theorem_exponents",
]


def _text(config: str | PathLike) -> str:
    if isinstance(config, PathLike) or (isinstance(config, str) and "\n" not in config and config.endswith(".ini")):
        return Path(config).read_text()
    return config


def check(config: str | PathLike) -> None:
    """Validate a config; raises ConfigError naming the offending field."""
    _core.check_config(_text(config))


def run(config: str | PathLike, threads: int = 1, output: str | PathLike | None = None) -> dict:
    """Run a config and return its report. Files are written only when output is set."""
    return _core.run_config(_text(config), threads, None if output is None else Path(output))
