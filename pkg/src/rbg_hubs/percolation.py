"""Finite-size percolation trials, density sweeps and threshold estimation.

A sweep samples, for every window size and replication, one realisation of
the fixed density and a nested family of realisations of the swept density
(superposition coupling), so the percolation indicator is pathwise
non-decreasing along the grid. Thresholds come from the crossing of the
probability curves of the two largest windows.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from . import config
from .connection import ConnectionSpec, effective_support, format_spec, full_space_integral
from .graph import (
    Graph,
    RbgGraph,
    WrappingUnionFind,
    build_rbg,
    build_unipartite,
    labeling_from,
)
from .pointprocess import PointSet, Window, sample_ppp, sample_ppp_coupled
from .pool import chunk_ranges, map_chunks
from .rng import derive_seed, generator
from .theory import gw_lower_bound, gw_min_sum

log = logging.getLogger(__name__)

Criterion = Literal["wrap", "span", "fraction"]

SWEEP_CHUNK = 10
ZETA_MEAN_DEGREE = 4.51


@dataclass(frozen=True)
class PercOutcome:
    percolates: bool
    largest_component_agent_fraction: float
    criterion: Criterion
    window: Window
    seed: int
    indeterminate: bool = False


@dataclass
class SweepResult:
    param: str
    fixed: Optional[Tuple[str, float]]
    grid: List[float]
    L_list: List[float]
    reps: int
    counts: np.ndarray          # (len(L_list), len(grid)) percolating replications
    criterion: Criterion
    spec: ConnectionSpec
    unipartite: bool = False
    threshold_estimate: float = float("nan")
    threshold_ci: Tuple[float, float] = (float("nan"), float("nan"))
    censored: bool = True
    ci_lo: np.ndarray = field(default=None)  # type: ignore[assignment]
    ci_hi: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.ci_lo is None or self.ci_hi is None:
            self.ci_lo, self.ci_hi = wilson_intervals(self.counts, self.reps)

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / float(self.reps)

    def rows(self) -> List[Dict[str, object]]:
        out = []
        for li, L in enumerate(self.L_list):
            for gi, value in enumerate(self.grid):
                out.append(
                    {
                        "param": self.param,
                        "value": value,
                        "L": L,
                        "reps": self.reps,
                        "perc_prob": float(self.probabilities[li, gi]),
                        "ci_lo": float(self.ci_lo[li, gi]),
                        "ci_hi": float(self.ci_hi[li, gi]),
                    }
                )
        return out

    def summary(self) -> Dict[str, object]:
        return {
            "param": self.param,
            "fixed": list(self.fixed) if self.fixed else None,
            "conn": format_spec(self.spec),
            "unipartite": self.unipartite,
            "criterion": self.criterion,
            "threshold_estimate": self.threshold_estimate,
            "threshold_ci": list(self.threshold_ci),
            "censored": self.censored,
        }


@dataclass
class BoundsReport:
    violations: List[str] = field(default_factory=list)
    checks: Dict[str, bool] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def as_dict(self) -> Dict[str, object]:
        return {"passed": self.passed, "checks": self.checks, "violations": self.violations, "notes": self.notes}


# -- single trials -------------------------------------------------------------


def _check_trial_window(spec: ConnectionSpec, window: Window, criterion: str, epsilon: Optional[float]) -> None:
    if criterion == "wrap" and window.boundary != "torus":
        raise ValueError("the wrap criterion needs a torus window")
    # clusters straddling the seam would touch both faces
    if criterion == "span" and window.boundary != "open":
        raise ValueError("the span criterion needs an open window")
    if criterion not in ("wrap", "span", "fraction"):
        raise ValueError(f"unknown criterion {criterion!r}")
    eps = config.edge_epsilon() if epsilon is None else epsilon
    radius = effective_support(spec.in_dimension(window.d), eps).radius
    if radius >= window.L / 4.0:
        raise ValueError(f"truncation radius {radius:.4g} must be below L/4 = {window.L / 4.0:.4g}")


def _spans(graph: Graph, labels: np.ndarray, radius: float) -> bool:
    if isinstance(graph, RbgGraph):
        coords = np.vstack([graph.agents.points, graph.hubs.points])
        half = graph.agents.window.half
    else:
        coords = graph.points.points
        half = graph.points.window.half
    if len(coords) == 0:
        return False
    x = coords[:, 0]
    left = set(labels[x <= -half + radius].tolist())
    right = set(labels[x >= half - radius].tolist())
    return bool(left & right)


def _classify(graph: Graph, n_agents: int, criterion: Criterion, window: Window, seed: int,
              fraction_threshold: float, radius: float) -> PercOutcome:
    if isinstance(graph, RbgGraph):
        n = graph.n_vertices
        edges = graph.edges.copy()
        edges[:, 1] += n_agents
    else:
        n, edges = graph.n_vertices, graph.edges
    if n_agents == 0 or len(edges) == 0:
        return PercOutcome(False, 0.0, criterion, window, seed, indeterminate=True)
    uf = WrappingUnionFind(n, window.d, window.L)
    for (a, b), delta in zip(edges.tolist(), graph.displacements.tolist()):
        uf.union_displaced(a, b, delta)
    labeling = labeling_from(uf, n_agents)
    fraction = labeling.largest_agent_fraction()
    if criterion == "wrap":
        percolates = uf.wraps
    elif criterion == "span":
        percolates = _spans(graph, labeling.labels, radius)
    else:
        percolates = fraction >= fraction_threshold
    return PercOutcome(bool(percolates), fraction, criterion, window, seed)


def percolation_trial(
    lam: float,
    mu: float,
    spec: ConnectionSpec,
    window: Window,
    seed: int,
    criterion: Criterion = "wrap",
    fraction_threshold: float = config.DEFAULT_FRACTION_THRESHOLD,
    epsilon: Optional[float] = None,
    agents: Optional[PointSet] = None,
    hubs: Optional[PointSet] = None,
) -> PercOutcome:
    spec = spec.in_dimension(window.d)
    _check_trial_window(spec, window, criterion, epsilon)
    if agents is None:
        agents = sample_ppp(lam, window, derive_seed(seed, "agents"), kind="agent")
    if hubs is None:
        hubs = sample_ppp(mu, window, derive_seed(seed, "hubs"), kind="hub")
    graph = build_rbg(agents, hubs, spec, seed, epsilon)
    radius = 2.0 * _radius(spec, epsilon)
    return _classify(graph, len(agents), criterion, window, seed, fraction_threshold, radius)


def unipartite_trial(
    lam: float,
    spec: ConnectionSpec,
    window: Window,
    seed: int,
    criterion: Criterion = "wrap",
    fraction_threshold: float = config.DEFAULT_FRACTION_THRESHOLD,
    epsilon: Optional[float] = None,
    points: Optional[PointSet] = None,
) -> PercOutcome:
    spec = spec.in_dimension(window.d)
    _check_trial_window(spec, window, criterion, epsilon)
    if points is None:
        points = sample_ppp(lam, window, derive_seed(seed, "points"), kind="agent")
    graph = build_unipartite(points, spec, seed, epsilon)
    return _classify(graph, len(points), criterion, window, seed, fraction_threshold, _radius(spec, epsilon))


def _trial_window(d: int, L: float, criterion: str) -> Window:
    return Window(d, L, "open" if criterion == "span" else "torus")


def _radius(spec: ConnectionSpec, epsilon: Optional[float]) -> float:
    eps = config.edge_epsilon() if epsilon is None else epsilon
    return effective_support(spec, eps).radius


# -- sweeps ------------------------------------------------------------------


def wilson_intervals(counts: np.ndarray, reps: int) -> Tuple[np.ndarray, np.ndarray]:
    counts = np.asarray(counts, dtype=np.int64)
    lo = np.empty(counts.shape)
    hi = np.empty(counts.shape)
    for idx, k in np.ndenumerate(counts):
        ci = stats.binomtest(int(k), reps).proportion_ci(confidence_level=0.95, method="wilson")
        lo[idx], hi[idx] = ci.low, ci.high
    return lo, hi


def _sweep_chunk(task) -> np.ndarray:
    (kind, fixed_value, grid, spec, L, d, seed, criterion, threshold, epsilon, li, start, stop) = task
    window = _trial_window(d, L, criterion)
    out = np.zeros((stop - start, len(grid)), dtype=bool)
    for row, rep in enumerate(range(start, stop)):
        rep_seed = derive_seed(seed, "sweep", li, rep)
        swept_kind = "hub" if kind == "mu" else "agent"
        family = sample_ppp_coupled(grid, window, derive_seed(rep_seed, "swept"), kind=swept_kind)
        if kind == "unipartite":
            for gi, pts in enumerate(family):
                out[row, gi] = unipartite_trial(
                    grid[gi], spec, window, rep_seed, criterion, threshold, epsilon, points=pts
                ).percolates
            continue
        other_kind = "agent" if kind == "mu" else "hub"
        fixed = sample_ppp(fixed_value, window, derive_seed(rep_seed, "fixed"), kind=other_kind)
        for gi, pts in enumerate(family):
            agents, hubs = (fixed, pts) if kind == "mu" else (pts, fixed)
            out[row, gi] = percolation_trial(
                agents.intensity_used, hubs.intensity_used, spec, window, rep_seed,
                criterion, threshold, epsilon, agents=agents, hubs=hubs,
            ).percolates
    return out


def _interp_at(x0: float, xs: Sequence[float], ys: Sequence[float]) -> float:
    return float(np.interp(x0, xs, ys))


def crossing_threshold(grid: Sequence[float], p_small: np.ndarray, p_big: np.ndarray) -> Tuple[float, bool]:
    """(estimate, censored): where P_big - P_small turns from negative to positive.

    Zero differences are skipped; among several crossings the one whose
    interpolated probability is closest to 1/2 wins. Without a crossing the
    big-window curve's 1/2 level is used (censored), or NaN.
    """
    xs = np.asarray(grid, dtype=float)
    diff = np.asarray(p_big, dtype=float) - np.asarray(p_small, dtype=float)
    nz = np.flatnonzero(diff != 0)
    best: Optional[Tuple[float, float]] = None
    for i, j in zip(nz[:-1], nz[1:]):
        if diff[i] < 0 < diff[j]:
            x = xs[i] + (xs[j] - xs[i]) * (-diff[i]) / (diff[j] - diff[i])
            gap = abs(_interp_at(x, xs, p_big) - 0.5)
            if best is None or gap < best[1]:
                best = (float(x), gap)
    if best is not None:
        return best[0], False
    big = np.asarray(p_big, dtype=float)
    for i in range(len(xs) - 1):
        if big[i] < 0.5 <= big[i + 1]:
            return float(xs[i] + (xs[i + 1] - xs[i]) * (0.5 - big[i]) / (big[i + 1] - big[i])), True
    return float("nan"), True


def bootstrap_threshold_ci(grid, small: np.ndarray, big: np.ndarray, seed: int,
                           resamples: int = config.BOOTSTRAP_RESAMPLES) -> Tuple[float, float]:
    """Percentile CI from resampling whole replications (rows of the indicator matrices).

    A row keeps every grid point of one coupled realisation together.
    """
    rng = generator(seed, "bootstrap")
    small = np.asarray(small, dtype=float)
    big = np.asarray(big, dtype=float)
    draws = []
    for _ in range(resamples):
        rows_s = rng.integers(0, len(small), len(small))
        rows_b = rng.integers(0, len(big), len(big))
        est, _ = crossing_threshold(grid, small[rows_s].mean(axis=0), big[rows_b].mean(axis=0))
        if math.isfinite(est):
            draws.append(est)
    if not draws:
        return float("nan"), float("nan")
    lo, hi = np.percentile(draws, [2.5, 97.5])
    return float(lo), float(hi)


def _validate_sweep(grid: Sequence[float], L_list: Sequence[float], reps: int) -> None:
    if len(L_list) < 2 or any(b <= a for a, b in zip(L_list, L_list[1:])):
        raise ValueError("L_list must hold at least two increasing sizes")
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])) or min(grid) < 0:
        raise ValueError("grid must be increasing and non-negative")
    if reps < 1:
        raise ValueError("reps must be positive")


def _run_sweep(kind, fixed, spec, grid, L_list, reps, seed, criterion, threshold, epsilon, workers, progress=None) -> SweepResult:
    grid = [float(g) for g in grid]
    L_list = [float(L) for L in L_list]
    _validate_sweep(grid, L_list, reps)
    d = spec.d
    for L in L_list:
        _check_trial_window(spec, _trial_window(d, L, criterion), criterion, epsilon)
    fixed_value = fixed[1] if fixed else 0.0
    counts = np.zeros((len(L_list), len(grid)), dtype=np.int64)
    indicators: List[np.ndarray] = []
    for li, L in enumerate(L_list):
        tasks = [
            (kind, fixed_value, grid, spec, L, d, seed, criterion, threshold, epsilon, li, a, b)
            for a, b in chunk_ranges(reps, SWEEP_CHUNK)
        ]
        rows = np.vstack(list(map_chunks(_sweep_chunk, tasks, workers)))
        indicators.append(rows)
        counts[li] = rows.sum(axis=0)
        log.info("sweep L=%g done: %s", L, counts[li].tolist())
        if progress is not None:
            progress(L, counts[li])
    param = "mu" if kind == "mu" else "lambda"
    result = SweepResult(param, fixed, grid, L_list, reps, counts, criterion, spec, unipartite=(kind == "unipartite"))
    p = result.probabilities
    result.threshold_estimate, result.censored = crossing_threshold(grid, p[-2], p[-1])
    result.threshold_ci = bootstrap_threshold_ci(grid, indicators[-2], indicators[-1], seed)
    if result.censored:
        log.warning("%s sweep: probability curves do not cross inside the grid", param)
    return result


def sweep(
    fixed: Tuple[str, float],
    spec: ConnectionSpec,
    grid: Sequence[float],
    L_list: Sequence[float],
    reps: int,
    seed: int,
    criterion: Criterion = "wrap",
    fraction_threshold: float = config.DEFAULT_FRACTION_THRESHOLD,
    epsilon: Optional[float] = None,
    workers: Optional[int] = None,
    progress=None,
) -> SweepResult:
    """Sweep the density not named in ``fixed`` (``("mu", 3.0)`` sweeps lambda)."""
    name, value = fixed
    name = "lambda" if name in ("lam", "lambda") else name
    if name not in ("lambda", "mu"):
        raise ValueError(f"fixed parameter must be lambda or mu, got {name!r}")
    kind = "lambda" if name == "mu" else "mu"
    return _run_sweep(kind, (name, float(value)), spec, grid, L_list, reps, seed,
                      criterion, fraction_threshold, epsilon, workers, progress)


def default_zeta_grid(spec: ConnectionSpec, points: int = 12) -> List[float]:
    centre = ZETA_MEAN_DEGREE / full_space_integral(spec, spec.d)
    return [float(v) for v in centre * np.linspace(0.5, 1.6, points)]


def estimate_zeta(
    spec: ConnectionSpec,
    L_list: Sequence[float],
    reps: int,
    seed: int,
    grid: Optional[Sequence[float]] = None,
    criterion: Criterion = "wrap",
    fraction_threshold: float = config.DEFAULT_FRACTION_THRESHOLD,
    epsilon: Optional[float] = None,
    workers: Optional[int] = None,
    progress=None,
) -> SweepResult:
    """Critical density of the unipartite Poisson graph with connection function ``spec``."""
    grid = default_zeta_grid(spec) if grid is None else grid
    return _run_sweep("unipartite", None, spec, grid, L_list, reps, seed,
                      criterion, fraction_threshold, epsilon, workers, progress)


# -- bound checks --------------------------------------------------------------


def _percolating_points(result: SweepResult) -> List[Tuple[float, float]]:
    if result.unipartite or result.fixed is None:
        return []
    points = []
    for gi, value in enumerate(result.grid):
        if result.ci_lo[-1, gi] > 0.5:
            lam, mu = (value, result.fixed[1]) if result.param == "lambda" else (result.fixed[1], value)
            points.append((lam, mu))
    return points


def check_bounds(
    sweep_results: Sequence[SweepResult],
    spec: ConnectionSpec,
    d: int,
    zeta: Optional[SweepResult] = None,
    dispersion_sweeps: Optional[Dict[float, SweepResult]] = None,
) -> BoundsReport:
    report = BoundsReport()
    bound = gw_lower_bound(spec, d).value
    points = [pt for r in sweep_results for pt in _percolating_points(r)]

    gw_ok = True
    for lam, mu in points:
        if lam * mu < bound:
            gw_ok = False
            report.violations.append(f"percolating point lambda={lam:g} mu={mu:g}: lambda*mu < GW bound {bound:.4g}")
    report.checks["gw_bound"] = gw_ok

    if zeta is not None:
        z_lo = zeta.threshold_ci[0] if math.isfinite(zeta.threshold_ci[0]) else zeta.threshold_estimate
        report.notes.append(
            f"zeta_hat={zeta.threshold_estimate:.4g} ci=({zeta.threshold_ci[0]:.4g}, {zeta.threshold_ci[1]:.4g}); "
            f"GW minimum of lambda+mu={gw_min_sum(spec, d).value:.4g}"
        )
        zeta_ok = True
        if math.isfinite(z_lo):
            for lam, mu in points:
                if lam + mu < z_lo:
                    zeta_ok = False
                    report.violations.append(f"percolating point lambda={lam:g} mu={mu:g}: lambda+mu < zeta lower CI {z_lo:.4g}")
        else:
            report.notes.append("zeta estimate unavailable; sum bound not checked")
        report.checks["zeta_sum"] = zeta_ok

    if dispersion_sweeps:
        disp_ok = True
        ordered = sorted(dispersion_sweeps.items(), key=lambda kv: -kv[0])
        for (p_hi, r_hi), (p_lo, r_lo) in zip(ordered, ordered[1:]):
            if r_hi.censored or r_lo.censored:
                report.notes.append(f"dispersion pair p={p_hi:g}/{p_lo:g} skipped: censored threshold")
                continue
            if r_lo.threshold_ci[0] > r_hi.threshold_ci[1]:
                disp_ok = False
                report.violations.append(
                    f"threshold at p={p_lo:g} ({r_lo.threshold_estimate:.4g}) exceeds threshold at p={p_hi:g} "
                    f"({r_hi.threshold_estimate:.4g}) beyond CIs"
                )
        report.checks["dispersion_monotone"] = disp_ok

    if spec.bounded:
        report.notes.append("bounded support: a positive critical hub density is expected")
    else:
        for r in sweep_results:
            if r.param == "lambda" and r.fixed is not None and r.censored:
                report.notes.append(
                    f"unbounded support predicts a finite lambda threshold at mu={r.fixed[1]:g}; "
                    "the censored sweep needs a wider grid"
                )
    return report


__all__ = [
    "PercOutcome",
    "SweepResult",
    "BoundsReport",
    "percolation_trial",
    "unipartite_trial",
    "sweep",
    "estimate_zeta",
    "check_bounds",
    "crossing_threshold",
    "bootstrap_threshold_ci",
    "wilson_intervals",
    "default_zeta_grid",
]
