from __future__ import annotations
"""Central configuration.

Environment variables:
  RBG_HUBS_WORKERS        Default worker count for replication pools (default: 1)
  RBG_HUBS_EDGE_EPSILON   Relative neglected moment mass when truncating
                          infinite-support connection functions (default: 1e-9)
  RBG_HUBS_OUTPUT_ROOT    Root directory for run artifacts (default: ./outputs)
  RBG_HUBS_LOG_MAX_BYTES  Rotate run_log.jsonl once it exceeds this size

Experiment parameters are validated by ``ExperimentConfig`` before anything is
sampled. A config file is a flat ``key = value`` text file whose keys mirror
the CLI flag names; flags given on the command line win.
"""
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError

DEFAULT_EDGE_EPSILON = 1e-9
DEFAULT_FRACTION_THRESHOLD = 0.3
BOOTSTRAP_RESAMPLES = 500
CHUNK_SIZE = 250

Subcommand = Literal["degrees", "theory", "percolate", "zeta", "figs"]


def default_workers() -> int:
    raw = os.getenv("RBG_HUBS_WORKERS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def edge_epsilon() -> float:
    raw = os.getenv("RBG_HUBS_EDGE_EPSILON")
    if not raw:
        return DEFAULT_EDGE_EPSILON
    try:
        value = float(raw)
    except ValueError:
        return DEFAULT_EDGE_EPSILON
    return value if 0.0 < value < 1.0 else DEFAULT_EDGE_EPSILON


def describe_environment() -> str:
    return (
        f"workers={default_workers()} edge_epsilon={edge_epsilon():g} "
        f"output_root={os.getenv('RBG_HUBS_OUTPUT_ROOT') or '<repo>/outputs'}"
    )


def parse_grid(text: str) -> List[float]:
    """``a:b:n`` (n evenly spaced values) or a comma separated list."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            count = int(n)
            if count < 2:
                raise ConfigError(f"grid needs at least 2 points: {text!r}")
            step = (float(hi) - float(lo)) / (count - 1)
            return [float(lo) + i * step for i in range(count)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"malformed grid {text!r}") from e


def parse_fix(text: str) -> Tuple[str, float]:
    """``mu=3`` -> ("mu", 3.0); the other density is the swept one."""
    try:
        name, value = text.split("=", 1)
        name = name.strip().lower()
        if name in ("lambda", "lam"):
            name = "lambda"
        if name not in ("lambda", "mu"):
            raise ValueError(name)
        return name, float(value)
    except ValueError as e:
        raise ConfigError(f"--fix expects lambda=<v> or mu=<v>, got {text!r}") from e


def load_config_file(path: str | Path) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    subcommand: Subcommand
    lam: Optional[float] = Field(None, ge=0, description="Agent density lambda")
    mu: Optional[float] = Field(None, ge=0, description="Hub density mu")
    conn: str = Field("boolean:0.2122", description="Connection spec, e.g. boolean:0.1262@p=0.25")
    d: int = Field(2, ge=1, description="Ambient dimension")
    L: Optional[float] = Field(None, gt=0, description="Window side (degrees)")
    L_list: Optional[List[float]] = Field(None, description="Increasing window sides (sweeps)")
    reps: int = Field(1000, ge=2, description="Replications per point")
    seed: Optional[int] = Field(None, ge=0, description="Top-level seed (mandatory when sampling)")
    grid: Optional[List[float]] = Field(None, description="Swept density grid")
    fix: Optional[Tuple[str, float]] = Field(None, description="Fixed density, e.g. ('mu', 3.0)")
    criterion: Literal["wrap", "span", "fraction"] = "wrap"
    fraction_threshold: float = Field(DEFAULT_FRACTION_THRESHOLD, gt=0, le=1)
    p_grid: Optional[List[float]] = Field(None, description="Dispersion grid for figs fig2")
    figure: Optional[Literal["fig1", "fig2"]] = None
    epsilon: float = Field(default_factory=edge_epsilon, gt=0, lt=1)
    out: Optional[str] = None
    format: Literal["csv", "json"] = "csv"
    workers: int = Field(default_factory=default_workers, ge=1)
    strict: bool = False

    @field_validator("grid", "L_list", "p_grid", mode="before")
    @classmethod
    def _split_lists(cls, v: Any) -> Any:
        if isinstance(v, str):
            return parse_grid(v)
        return v

    @field_validator("fix", mode="before")
    @classmethod
    def _split_fix(cls, v: Any) -> Any:
        if isinstance(v, str):
            return parse_fix(v)
        return v

    @model_validator(mode="after")
    def _check_consistency(self) -> "ExperimentConfig":
        from .connection import parse_spec

        parse_spec(self.conn, d=self.d)
        if self.subcommand != "theory" and self.seed is None:
            raise ValueError("seed is mandatory for sampling experiments")
        if self.subcommand in ("degrees", "theory") and (self.lam is None or self.mu is None):
            raise ValueError(f"{self.subcommand} needs both lambda and mu")
        if self.subcommand in ("percolate", "zeta"):
            if not self.L_list or len(self.L_list) < 2:
                raise ValueError("sweeps need at least two window sizes")
            if any(b <= a for a, b in zip(self.L_list, self.L_list[1:])):
                raise ValueError("L list must be increasing")
            if self.grid is not None and any(b <= a for a, b in zip(self.grid, self.grid[1:])):
                raise ValueError("grid must be increasing")
            if self.grid is not None and any(v < 0 for v in self.grid):
                raise ValueError("grid densities must be non-negative")
        if self.subcommand == "percolate" and (self.fix is None or self.grid is None):
            raise ValueError("percolate needs --fix and --grid")
        if self.subcommand == "figs" and self.figure is None:
            raise ValueError("figs needs a figure name (fig1 | fig2)")
        if self.p_grid is not None and any(not 0 < p <= 1 for p in self.p_grid):
            raise ValueError("dispersion values must lie in (0, 1]")
        return self


def _normalise(values: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(values)
    if "lambda" in out:
        out["lam"] = out.pop("lambda")
    return out


def build_config(file_values: Optional[Dict[str, Any]] = None, **overrides: Any) -> ExperimentConfig:
    """Merge config-file values with CLI overrides (None means 'not given')."""
    merged: Dict[str, Any] = _normalise(file_values or {})
    merged.update(_normalise({k: v for k, v in overrides.items() if v is not None}))
    if "conn" in merged and isinstance(merged["conn"], str):
        merged["conn"] = merged["conn"].strip()
    try:
        return ExperimentConfig(**merged)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


__all__ = [
    "ExperimentConfig",
    "build_config",
    "load_config_file",
    "parse_grid",
    "parse_fix",
    "default_workers",
    "edge_epsilon",
    "describe_environment",
    "DEFAULT_EDGE_EPSILON",
    "DEFAULT_FRACTION_THRESHOLD",
    "BOOTSTRAP_RESAMPLES",
    "CHUNK_SIZE",
]
