from __future__ import annotations
from typing import Dict, Any, Optional, List, Callable
from dataclasses import dataclass, field
import json
import logging
import os
from datetime import datetime, UTC
from pathlib import Path

from . import __version__
from .config import ExperimentConfig
from .connection import ConnectionSpec, format_spec, parse_spec
from .degrees import default_window, estimate_MN, estimate_connection_distance, estimate_typical_degree
from .errors import CensoredThresholdError
from .figures import fig1, fig2
from .output_writer import (
    DEGREE_FIELDS,
    SWEEP_FIELDS,
    THEORY_FIELDS,
    Artifact,
    persist_run,
)
from .percolation import SweepResult, check_bounds, estimate_zeta, sweep
from .pointprocess import Window
from .theory import theory_table

log = logging.getLogger(__name__)


class EventBus:
    """Very small synchronous event bus."""

    def __init__(self):
        self._subs: Dict[str, List[Callable[[Dict[str, Any]], None]]] = {}
        self.history: List[Dict[str, Any]] = []

    def subscribe(self, event: str, handler: Callable[[Dict[str, Any]], None]):
        self._subs.setdefault(event, []).append(handler)

    def emit(self, event: str, payload: Dict[str, Any]):
        record = {"event": event, "timestamp": datetime.now(UTC).isoformat(), "payload": payload}
        self.history.append(record)
        for h in self._subs.get(event, []):
            h(payload)


class AuditLogger:
    """Append-only JSONL run log with optional size-based rotation.

    Rotation: if env RBG_HUBS_LOG_MAX_BYTES is set (int) and the file exceeds
    that size after a write, it's renamed to run_log.<timestamp>.jsonl and a
    fresh file is started.
    """

    def __init__(self, path: str = "run_log.jsonl"):
        self.path = path

    def _maybe_rotate(self):
        max_bytes = os.getenv("RBG_HUBS_LOG_MAX_BYTES")
        if not max_bytes:
            return
        try:
            limit = int(max_bytes)
        except ValueError:
            return
        try:
            size = os.path.getsize(self.path)
        except OSError:
            return
        if size <= limit:
            return
        ts = datetime.now(UTC).strftime("%Y%m%d_%H%M%S_%f")
        rotated = f"{self.path.rsplit('.jsonl', 1)[0]}.{ts}.jsonl"
        try:
            os.replace(self.path, rotated)
        except OSError:
            pass

    def log(self, event: str, data: Dict[str, Any]):
        line = json.dumps({"event": event, "at": datetime.now(UTC).isoformat(), **data}, ensure_ascii=False, default=str)
        Path(self.path).parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(line + "\n")
        self._maybe_rotate()


class RunCounters:
    def __init__(self):
        self.counters: Dict[str, int] = {"replications": 0, "sweep_points": 0, "artifacts_written": 0}

    def incr(self, key: str, amount: int = 1):
        self.counters[key] = self.counters.get(key, 0) + amount

    def snapshot(self) -> Dict[str, Any]:
        return dict(self.counters)


@dataclass
class ExperimentOutcome:
    experiment: str
    run_dir: Optional[Path] = None
    summary: Dict[str, Any] = field(default_factory=dict)
    censored: bool = False
    table: List[Dict[str, Any]] = field(default_factory=list)


AUDITED_EVENTS = (
    "EXPERIMENT_STARTED",
    "REPLICATIONS_DONE",
    "SWEEP_POINT_DONE",
    "ARTIFACT_WRITTEN",
    "EXPERIMENT_COMPLETED",
    "EXPERIMENT_FAILED",
)


class ExperimentOrchestrator:
    def __init__(self, cfg: ExperimentConfig, audit_path: str = "run_log.jsonl", max_runs: Optional[int] = None):
        self.cfg = cfg
        self.spec: ConnectionSpec = parse_spec(cfg.conn, d=cfg.d)
        self.bus = EventBus()
        self.audit = AuditLogger(audit_path)
        self.metrics = RunCounters()
        self.max_runs = max_runs
        for event in AUDITED_EVENTS:
            self.bus.subscribe(event, lambda p, e=event: self.audit.log(e, p))
        self.bus.subscribe("REPLICATIONS_DONE", lambda p: self.metrics.incr("replications", p["reps"]))
        self.bus.subscribe("SWEEP_POINT_DONE", lambda p: self.metrics.incr("sweep_points", p["points"]))
        self.bus.subscribe("ARTIFACT_WRITTEN", lambda p: self.metrics.incr("artifacts_written"))

    # -- experiments -----------------------------------------------------------

    def _window(self) -> Window:
        if self.cfg.L is not None:
            return Window(self.cfg.d, self.cfg.L, "torus")
        return default_window(self.spec, self.cfg.d, self.cfg.epsilon)

    def _degrees(self) -> Dict[str, Any]:
        cfg, spec, window = self.cfg, self.spec, self._window()
        common = dict(epsilon=cfg.epsilon, workers=cfg.workers)
        stats = [estimate_typical_degree(cfg.lam, cfg.mu, spec, window, cfg.reps, cfg.seed, role="agent", **common)]
        stats.append(estimate_typical_degree(cfg.lam, cfg.mu, spec, window, cfg.reps, cfg.seed, role="hub", **common))
        stats.extend(estimate_MN(cfg.lam, cfg.mu, spec, window, cfg.reps, cfg.seed, **common))
        distance = estimate_connection_distance(cfg.mu, spec, window, cfg.reps, cfg.seed, **common)
        stats.append(distance)
        for s in stats:
            self.bus.emit("REPLICATIONS_DONE", {"observable": s.observable, "reps": s.replications, "mean": s.mean})
        rows = [s.as_row() for s in stats]
        return {"rows": rows, "fields": DEGREE_FIELDS, "name": "degrees", "summary": {"window_L": window.L}}

    def _theory(self) -> Dict[str, Any]:
        cfg = self.cfg
        rows = [v.as_row() for v in theory_table(cfg.lam, cfg.mu, self.spec, cfg.d)]
        summary = {"conn": format_spec(self.spec), "lambda": cfg.lam, "mu": cfg.mu, "d": cfg.d}
        return {"rows": rows, "fields": THEORY_FIELDS, "name": "theory", "summary": summary, "table": rows}

    def _progress(self, L: float, counts) -> None:
        self.bus.emit("SWEEP_POINT_DONE", {"L": L, "points": len(counts), "counts": [int(c) for c in counts]})

    def _sweep_payload(self, result: SweepResult, name: str) -> Dict[str, Any]:
        bounds = check_bounds([result], self.spec, self.cfg.d) if not result.unipartite else None
        summary = result.summary()
        if bounds is not None:
            summary["bounds"] = bounds.as_dict()
        return {"rows": result.rows(), "fields": SWEEP_FIELDS, "name": name, "summary": summary, "censored": result.censored}

    def _percolate(self) -> Dict[str, Any]:
        cfg = self.cfg
        result = sweep(
            cfg.fix, self.spec, cfg.grid, cfg.L_list, cfg.reps, cfg.seed,
            criterion=cfg.criterion, fraction_threshold=cfg.fraction_threshold,
            epsilon=cfg.epsilon, workers=cfg.workers, progress=self._progress,
        )
        return self._sweep_payload(result, "sweep")

    def _zeta(self) -> Dict[str, Any]:
        cfg = self.cfg
        result = estimate_zeta(
            self.spec, cfg.L_list, cfg.reps, cfg.seed, grid=cfg.grid,
            criterion=cfg.criterion, fraction_threshold=cfg.fraction_threshold,
            epsilon=cfg.epsilon, workers=cfg.workers, progress=self._progress,
        )
        return self._sweep_payload(result, "zeta")

    def _figs(self) -> Dict[str, Any]:
        cfg = self.cfg
        if cfg.figure == "fig1":
            data = fig1(cfg.seed, cfg.epsilon)
        else:
            data = fig2(
                cfg.seed, cfg.reps, base=self.spec, p_grid=cfg.p_grid, epsilon=cfg.epsilon, workers=cfg.workers,
                progress=lambda row: self.bus.emit("REPLICATIONS_DONE", {"observable": "M,N", "reps": row["reps"], "p": row["p"]}),
            )
        return {"artifacts": data.artifacts, "summary": data.summary}

    # -- driver ----------------------------------------------------------------

    def _artifacts(self, payload: Dict[str, Any]) -> List[Artifact]:
        if "artifacts" in payload:
            return list(payload["artifacts"]) + [Artifact("summary.json", payload["summary"])]
        name = payload["name"]
        if self.cfg.format == "json":
            body = {
                "version": __version__,
                "config": self.config_echo(),
                "rows": payload["rows"],
                "summary": payload["summary"],
            }
            return [Artifact(f"{name}.json", body)]
        return [Artifact(f"{name}.csv", payload["rows"], payload["fields"]), Artifact("summary.json", payload["summary"])]

    def config_echo(self) -> Dict[str, Any]:
        echo = self.cfg.model_dump()
        echo["conn"] = format_spec(self.spec)
        return echo

    def slug(self) -> str:
        cfg = self.cfg
        if cfg.subcommand == "figs":
            return cfg.figure
        return cfg.conn if cfg.seed is None else f"{cfg.conn}_seed{cfg.seed}"

    def run(self) -> ExperimentOutcome:
        cfg = self.cfg
        handlers = {
            "degrees": self._degrees,
            "theory": self._theory,
            "percolate": self._percolate,
            "zeta": self._zeta,
            "figs": self._figs,
        }
        self.bus.emit("EXPERIMENT_STARTED", {"experiment": cfg.subcommand, "conn": cfg.conn, "seed": cfg.seed})
        try:
            payload = handlers[cfg.subcommand]()
            run_dir = persist_run(
                self._artifacts(payload),
                cfg.subcommand,
                self.slug(),
                config_echo=self.config_echo(),
                counters=self.metrics.snapshot,
                version=__version__,
                out=cfg.out,
                max_runs=self.max_runs,
                on_write=lambda path: self.bus.emit("ARTIFACT_WRITTEN", {"file": path.name}),
            )
        except Exception as e:
            self.bus.emit("EXPERIMENT_FAILED", {"experiment": cfg.subcommand, "error": type(e).__name__, "message": str(e)})
            raise
        outcome = ExperimentOutcome(
            cfg.subcommand, run_dir, payload.get("summary", {}), bool(payload.get("censored")), payload.get("table", []),
        )
        self.bus.emit("EXPERIMENT_COMPLETED", {"experiment": cfg.subcommand, "run_dir": str(run_dir), "metrics": self.metrics.snapshot()})
        if outcome.censored and cfg.strict:
            raise CensoredThresholdError(f"{cfg.subcommand}: threshold censored; results kept in {run_dir}")
        return outcome


__all__ = ["ExperimentOrchestrator", "ExperimentOutcome", "EventBus", "AuditLogger", "RunCounters", "AUDITED_EVENTS"]
