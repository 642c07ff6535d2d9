"""Plot-ready data for the two reference figures (no rendering)."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .connection import ConnectionSpec, disperse
from .degrees import default_window, estimate_MN
from .graph import RbgGraph, build_rbg
from .output_writer import Artifact, graph_dump
from .pointprocess import Window, sample_ppp
from .rng import derive_seed
from .theory import expected_M, expected_N, variance_N

log = logging.getLogger(__name__)

FIG1_LAMBDA = 100.0
FIG1_MU = 10.0
FIG1_THETA = 0.1262
FIG2_THETA = 0.2122
FIG2_DENSITIES = ((5.0, 50.0), (50.0, 5.0))
FIG2_P_GRID = (1.0, 0.5, 0.25, 0.1, 0.05, 0.02, 0.01)

POINT_FIELDS = ["kind", "idx", "x", "y", "isolated_f1", "isolated_f2"]
FIG2_FIELDS = [
    "lambda", "mu", "p",
    "EN_theory", "sdN_theory", "EM_theory",
    "EN_sim", "sdN_sim", "EM_sim", "sdM_sim", "reps",
]


@dataclass
class FigureData:
    artifacts: List[Artifact] = field(default_factory=list)
    summary: Dict[str, object] = field(default_factory=dict)


def fig1(seed: int, epsilon: Optional[float] = None) -> FigureData:
    """One realisation on [-0.5, 0.5]^2 for a disk (f1) and an exponential (f2) connection function."""
    window = Window(2, 1.0, "open")
    agents = sample_ppp(FIG1_LAMBDA, window, derive_seed(seed, "fig1", "agents"), kind="agent")
    hubs = sample_ppp(FIG1_MU, window, derive_seed(seed, "fig1", "hubs"), kind="hub")
    specs = {"f1": ConnectionSpec.boolean(FIG1_THETA), "f2": ConnectionSpec.exponential(FIG1_THETA)}
    graphs: Dict[str, RbgGraph] = {name: build_rbg(agents, hubs, spec, seed, epsilon) for name, spec in specs.items()}
    isolated = {name: g.agent_degrees == 0 for name, g in graphs.items()}
    points = [
        {
            "kind": "agent", "idx": i, "x": float(x), "y": float(y),
            "isolated_f1": bool(isolated["f1"][i]), "isolated_f2": bool(isolated["f2"][i]),
        }
        for i, (x, y) in enumerate(agents.points.tolist())
    ]
    points += [
        {"kind": "hub", "idx": j, "x": float(x), "y": float(y), "isolated_f1": "", "isolated_f2": ""}
        for j, (x, y) in enumerate(hubs.points.tolist())
    ]
    data = FigureData([Artifact("fig1_points.csv", points, POINT_FIELDS)])
    for name, g in graphs.items():
        data.artifacts.extend(graph_dump(g, f"fig1_{name}", specs[name], seed))
        data.summary[name] = {
            "edges": int(len(g.edges)),
            "mean_hub_degree": float(len(g.edges)) / max(len(hubs), 1),
            "isolated_agents": int(isolated[name].sum()),
        }
    data.summary.update({"lambda": FIG1_LAMBDA, "mu": FIG1_MU, "theta": FIG1_THETA, "n_agents": len(agents), "n_hubs": len(hubs)})
    return data


def fig2(
    seed: int,
    reps: int,
    base: Optional[ConnectionSpec] = None,
    p_grid: Optional[Sequence[float]] = None,
    epsilon: Optional[float] = None,
    workers: Optional[int] = None,
    progress=None,
) -> FigureData:
    """Theory and simulation of the mean and spread of N and M across dispersion p."""
    base = (base or ConnectionSpec.boolean(FIG2_THETA)).base()
    grid = list(p_grid or FIG2_P_GRID)
    rows = []
    for k, (lam, mu) in enumerate(FIG2_DENSITIES):
        for j, p in enumerate(grid):
            spec = disperse(base, p)
            window = default_window(spec, 2, epsilon)
            m_stats, n_stats = estimate_MN(lam, mu, spec, window, reps, derive_seed(seed, "fig2", k, j), epsilon, workers)
            rows.append(
                {
                    "lambda": lam,
                    "mu": mu,
                    "p": p,
                    "EN_theory": expected_N(lam, mu, spec, 2).value,
                    "sdN_theory": math.sqrt(variance_N(lam, mu, spec, 2).value),
                    "EM_theory": expected_M(lam, mu, spec, 2).value,
                    "EN_sim": n_stats.mean,
                    "sdN_sim": math.sqrt(n_stats.variance),
                    "EM_sim": m_stats.mean,
                    "sdM_sim": math.sqrt(m_stats.variance),
                    "reps": reps,
                }
            )
            log.info("fig2 lambda=%g mu=%g p=%g done", lam, mu, p)
            if progress is not None:
                progress(rows[-1])
    summary = {"theta": base.theta, "family": base.family, "p_grid": grid, "densities": [list(x) for x in FIG2_DENSITIES]}
    return FigureData([Artifact("fig2_curves.csv", rows, FIG2_FIELDS)], summary)


__all__ = ["FigureData", "fig1", "fig2", "FIG2_P_GRID"]
