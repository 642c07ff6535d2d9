from __future__ import annotations
"""Run artifact persistence.

Default location: project root `outputs/<experiment>/<timestamp>_<slug>/`
(created automatically). Override the root with `RBG_HUBS_OUTPUT_ROOT`, or
pass an explicit directory. Every file is written to a temporary file in the
target directory and moved into place with os.replace, so an interrupted run
never leaves a partial artifact behind.
"""
from pathlib import Path
from typing import Dict, Any, Optional, List, Sequence, Union, Callable
from dataclasses import dataclass
import csv
import io
import json
import os
import re
import tempfile
from datetime import datetime, UTC

import numpy as np

from .connection import ConnectionSpec, format_spec

SANITIZE_RE = re.compile(r"[^a-z0-9_\-.]+")

DEGREE_FIELDS = ["observable", "lambda", "mu", "family", "theta", "p", "d", "L", "reps", "mean", "variance", "ci95"]
SWEEP_FIELDS = ["param", "value", "L", "reps", "perc_prob", "ci_lo", "ci_hi"]
THEORY_FIELDS = ["quantity", "value", "method", "error"]
EDGE_FIELDS = ["agent_idx", "hub_idx", "distance"]


@dataclass
class Artifact:
    """One output file: CSV when ``fieldnames`` is given, JSON otherwise."""

    name: str
    content: Union[List[Dict[str, Any]], Dict[str, Any]]
    fieldnames: Optional[Sequence[str]] = None


def _slug(text: str, max_len: int = 60) -> str:
    lower = text.strip().lower().replace(" ", "_").replace(":", "-").replace("@", "_")
    cleaned = SANITIZE_RE.sub("", lower)
    return cleaned[:max_len] or "run"


def _timestamp() -> str:
    return datetime.now(UTC).strftime("%Y%m%d_%H%M%S_%f")


def _ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _json_default(obj: Any):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _clean_float(value: Any) -> Any:
    # NaN is not valid JSON
    if isinstance(value, float) and value != value:
        return None
    if isinstance(value, dict):
        return {k: _clean_float(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean_float(v) for v in value]
    return value


def atomic_write_text(path: Path, text: str) -> Path:
    path = Path(path)
    _ensure_dir(path.parent)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def render_csv(rows: Sequence[Dict[str, Any]], fieldnames: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("nan" if isinstance(v, float) and v != v else v) for k, v in row.items()})
    return buf.getvalue()


def render_json(content: Any) -> str:
    return json.dumps(_clean_float(content), indent=2, ensure_ascii=False, default=_json_default)


def write_artifact(run_dir: Path, artifact: Artifact) -> Path:
    if artifact.fieldnames is not None:
        text = render_csv(artifact.content, artifact.fieldnames)  # type: ignore[arg-type]
    else:
        text = render_json(artifact.content)
    return atomic_write_text(run_dir / artifact.name, text)


def get_base_output_dir(default: Optional[Path] = None) -> Path:
    override = os.getenv("RBG_HUBS_OUTPUT_ROOT")
    if override:
        p = Path(override).expanduser().resolve()
        _ensure_dir(p)
        return p
    root = Path(__file__).resolve().parents[2]
    out = default or root / "outputs"
    _ensure_dir(out)
    return out


def _prune_old_runs(experiment_path: Path, keep: int):
    if keep is None:
        return
    run_dirs: List[Path] = [d for d in experiment_path.iterdir() if d.is_dir()]
    # timestamp prefix gives chronological order
    run_dirs.sort(key=lambda p: p.name)
    excess = len(run_dirs) - keep
    for d in run_dirs[:max(excess, 0)]:
        try:
            for sub in d.rglob('*'):
                if sub.is_file():
                    sub.unlink(missing_ok=True)
            for sub in sorted([p for p in d.rglob('*') if p.is_dir()], reverse=True):
                sub.rmdir()
            d.rmdir()
        except OSError:
            pass


def resolve_run_dir(experiment: str, slug: str, out: Optional[Union[str, Path]] = None) -> Path:
    if out:
        return _ensure_dir(Path(out).expanduser())
    base = get_base_output_dir()
    run_dir = base / _slug(experiment) / f"{_timestamp()}_{_slug(slug)}"
    return _ensure_dir(run_dir)


def persist_run(
    artifacts: Sequence[Artifact],
    experiment: str,
    slug: str,
    config_echo: Optional[Dict[str, Any]] = None,
    counters: Optional[Union[Dict[str, Any], Callable[[], Dict[str, Any]]]] = None,
    version: str = "",
    out: Optional[Union[str, Path]] = None,
    max_runs: Optional[int] = None,
    on_write: Optional[Callable[[Path], None]] = None,
) -> Path:
    run_dir = resolve_run_dir(experiment, slug, out)
    written = []
    for artifact in artifacts:
        path = write_artifact(run_dir, artifact)
        written.append(path.name)
        if on_write is not None:
            on_write(path)
    if callable(counters):
        counters = counters()
    manifest = {
        "experiment": experiment,
        "slug": slug,
        "created_at": datetime.now(UTC).isoformat(),
        "version": version,
        "config": config_echo or {},
        "counters": counters or {},
        "files": sorted(written),
    }
    atomic_write_text(run_dir / "manifest.json", render_json(manifest))
    if max_runs is not None and not out:
        _prune_old_runs(run_dir.parent, max_runs)
    return run_dir


def graph_dump(graph, name: str, spec: ConnectionSpec, seed: int) -> List[Artifact]:
    """Edge CSV plus a JSON header (window, connection spec, seed, counts) describing the realisation."""
    rows = [
        {"agent_idx": int(a), "hub_idx": int(h), "distance": float(dist)}
        for (a, h), dist in zip(graph.edges.tolist(), graph.distances.tolist())
    ]
    header = {
        "window": {"d": graph.agents.window.d, "L": graph.agents.window.L, "boundary": graph.agents.window.boundary},
        "conn": format_spec(spec),
        "seed": seed,
        "n_agents": len(graph.agents),
        "n_hubs": len(graph.hubs),
        "n_edges": len(rows),
    }
    return [Artifact(f"{name}_edges.csv", rows, EDGE_FIELDS), Artifact(f"{name}_graph.json", header)]


__all__ = [
    "Artifact",
    "persist_run",
    "get_base_output_dir",
    "resolve_run_dir",
    "atomic_write_text",
    "write_artifact",
    "render_csv",
    "render_json",
    "graph_dump",
    "DEGREE_FIELDS",
    "SWEEP_FIELDS",
    "THEORY_FIELDS",
    "EDGE_FIELDS",
]
