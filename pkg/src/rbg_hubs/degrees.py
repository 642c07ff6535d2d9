"""Palm Monte Carlo estimators for the typical agent (or hub).

Each replication samples only what the observable can reach: hubs within the
truncation radius R of the origin for degrees and connection distances, and
points within 2R for M and N. Sampling is done on an open local window of
side 2 * reach, which has the same law as the torus of side L near the origin
whenever reach <= L / 2. Replications are grouped into fixed chunks and
merged in chunk order.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from . import config
from .connection import ConnectionSpec, effective_support
from .errors import WindowBiasWarning
from .graph import agent_neighbors_via_hubs, build_rbg
from .pointprocess import PointSet, Window, palm_condition, sample_ppp
from .pool import chunk_ranges, map_chunks
from .rng import derive_seed

log = logging.getLogger(__name__)

Observable = Literal["typical_agent_degree", "typical_hub_degree", "M", "N", "connection_distance"]
Role = Literal["agent", "hub"]

Z95 = 1.959963984540054


@dataclass
class RunningMoments:
    """Streaming count/mean/M2 with the pairwise (Chan et al.) merge."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def from_samples(cls, samples) -> "RunningMoments":
        x = np.asarray(samples, dtype=float)
        if x.size == 0:
            return cls()
        mean = float(x.mean())
        return cls(int(x.size), mean, float(((x - mean) ** 2).sum()))

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if other.n == 0:
            return RunningMoments(self.n, self.mean, self.m2)
        if self.n == 0:
            return RunningMoments(other.n, other.mean, other.m2)
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return RunningMoments(n, mean, m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else float("nan")


@dataclass(frozen=True)
class DegreeParams:
    lam: float
    mu: float
    spec: ConnectionSpec
    d: int


@dataclass(frozen=True)
class DegreeStats:
    observable: str
    replications: int
    mean: float
    variance: float
    ci_half_width_95: float
    window: Window
    params: DegreeParams
    samples: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @classmethod
    def from_moments(cls, observable: str, moments: RunningMoments, window: Window, params: DegreeParams, samples=None) -> "DegreeStats":
        var = max(moments.variance, 0.0)
        return cls(observable, moments.n, moments.mean, var, Z95 * math.sqrt(var / moments.n), window, params, samples)

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.variance / self.replications)

    def as_row(self) -> Dict[str, object]:
        spec = self.params.spec
        return {
            "observable": self.observable,
            "lambda": self.params.lam,
            "mu": self.params.mu,
            "family": spec.family,
            "theta": spec.theta,
            "p": spec.dispersion_p,
            "d": self.params.d,
            "L": self.window.L,
            "reps": self.replications,
            "mean": self.mean,
            "variance": self.variance,
            "ci95": self.ci_half_width_95,
        }


@dataclass(frozen=True)
class GoodnessOfFit:
    statistic: float
    pvalue: float
    dof: int


# -- windows -----------------------------------------------------------------


def default_window(spec: ConnectionSpec, d: int = 2, epsilon: Optional[float] = None) -> Window:
    eps = config.edge_epsilon() if epsilon is None else epsilon
    radius = effective_support(spec.in_dimension(d), eps).radius
    return Window(d, max(1.0, 10.0 * radius), "torus")


def local_window(window: Window, reach: float) -> Window:
    """Open window of side 2 * reach, or the full window (with a warning) if reach > L / 2."""
    if reach > window.half:
        warnings.warn(
            f"reach {reach:.4g} exceeds L/2 = {window.half:.4g}; estimates are biased low",
            WindowBiasWarning,
            stacklevel=3,
        )
        return Window(window.d, window.L, "open")
    return Window(window.d, 2.0 * reach, "open")


def _empty(window: Window, kind: str) -> PointSet:
    return PointSet(window, np.empty((0, window.d)), kind, 0.0)


# -- per-replication kernels ---------------------------------------------------


def _agent_degree(lam, mu, spec, window, seed, epsilon) -> Tuple[float, ...]:
    hubs = sample_ppp(mu, window, derive_seed(seed, "hubs"), kind="hub")
    origin = palm_condition(_empty(window, "agent"))
    graph = build_rbg(origin, hubs, spec, seed, epsilon)
    return (float(len(graph.edges)), float(graph.distances.sum()))


def _hub_degree(lam, mu, spec, window, seed, epsilon) -> Tuple[float, ...]:
    agents = sample_ppp(lam, window, derive_seed(seed, "agents"), kind="agent")
    origin = palm_condition(_empty(window, "hub"))
    graph = build_rbg(agents, origin, spec, seed, epsilon)
    return (float(len(graph.edges)),)


def _m_and_n(lam, mu, spec, window, seed, epsilon) -> Tuple[float, ...]:
    hubs = sample_ppp(mu, window, derive_seed(seed, "hubs"), kind="hub")
    origin = palm_condition(_empty(window, "agent"))
    first = build_rbg(origin, hubs, spec, seed, epsilon)
    if len(first.edges) == 0:
        return (0.0, 0.0)
    # edge draws are pair-keyed, so restricting the hubs leaves the origin's edges intact
    near_hubs = hubs.subset(first.edges[:, 1])
    agents = palm_condition(sample_ppp(lam, window, derive_seed(seed, "agents"), kind="agent"))
    graph = build_rbg(agents, near_hubs, spec, seed, epsilon)
    m_count, n_paths = agent_neighbors_via_hubs(graph, 0)
    return (float(m_count), float(n_paths))


_KERNELS: Dict[str, Callable[..., Tuple[float, ...]]] = {
    "agent": _agent_degree,
    "hub": _hub_degree,
    "MN": _m_and_n,
}


def _run_chunk(task) -> np.ndarray:
    kernel, lam, mu, spec, window, seed, epsilon, start, stop = task
    fn = _KERNELS[kernel]
    rows = [fn(lam, mu, spec, window, derive_seed(seed, kernel, rep), epsilon) for rep in range(start, stop)]
    return np.asarray(rows, dtype=float).reshape(stop - start, -1)


def _replicate(kernel: str, lam, mu, spec, window, reps, seed, epsilon, workers) -> List[np.ndarray]:
    if reps < 2:
        raise ValueError("at least 2 replications are needed for a variance")
    tasks = [(kernel, lam, mu, spec, window, seed, epsilon, a, b) for a, b in chunk_ranges(reps)]
    chunks = map_chunks(_run_chunk, tasks, workers)
    log.info("%s: %d replications in %d chunks", kernel, reps, len(chunks))
    return chunks


def _stats(observable: str, chunks: List[np.ndarray], column: int, window: Window, params: DegreeParams) -> DegreeStats:
    moments = RunningMoments()
    for chunk in chunks:
        moments = moments.merge(RunningMoments.from_samples(chunk[:, column]))
    samples = np.concatenate([c[:, column] for c in chunks])
    return DegreeStats.from_moments(observable, moments, window, params, samples)


def _reach(spec: ConnectionSpec, window: Window, epsilon: Optional[float]) -> float:
    eps = config.edge_epsilon() if epsilon is None else epsilon
    return effective_support(spec.in_dimension(window.d), eps).radius


# -- estimators --------------------------------------------------------------


def estimate_typical_degree(
    lam: float,
    mu: float,
    spec: ConnectionSpec,
    window: Window,
    reps: int,
    seed: int,
    role: Role = "agent",
    epsilon: Optional[float] = None,
    workers: Optional[int] = None,
) -> DegreeStats:
    """Mean degree of the typical agent (hubs adjacent to it) or of the typical hub."""
    if role not in ("agent", "hub"):
        raise ValueError(f"unknown role {role!r}")
    spec = spec.in_dimension(window.d)
    local = local_window(window, _reach(spec, window, epsilon))
    chunks = _replicate(role, lam, mu, spec, local, reps, seed, epsilon, workers)
    name = "typical_agent_degree" if role == "agent" else "typical_hub_degree"
    return _stats(name, chunks, 0, window, DegreeParams(lam, mu, spec, window.d))


def estimate_connection_distance(
    mu: float,
    spec: ConnectionSpec,
    window: Window,
    reps: int,
    seed: int,
    epsilon: Optional[float] = None,
    workers: Optional[int] = None,
) -> DegreeStats:
    """Palm mean of the summed lengths of the typical agent's edges."""
    spec = spec.in_dimension(window.d)
    local = local_window(window, _reach(spec, window, epsilon))
    chunks = _replicate("agent", 0.0, mu, spec, local, reps, seed, epsilon, workers)
    return _stats("connection_distance", chunks, 1, window, DegreeParams(0.0, mu, spec, window.d))


def estimate_MN(
    lam: float,
    mu: float,
    spec: ConnectionSpec,
    window: Window,
    reps: int,
    seed: int,
    epsilon: Optional[float] = None,
    workers: Optional[int] = None,
) -> Tuple[DegreeStats, DegreeStats]:
    spec = spec.in_dimension(window.d)
    local = local_window(window, 2.0 * _reach(spec, window, epsilon))
    chunks = _replicate("MN", lam, mu, spec, local, reps, seed, epsilon, workers)
    params = DegreeParams(lam, mu, spec, window.d)
    return _stats("M", chunks, 0, window, params), _stats("N", chunks, 1, window, params)


# -- distributional checks ---------------------------------------------------


def degree_histogram(samples: Sequence[float] | np.ndarray) -> np.ndarray:
    """Counts of each integer degree 0..max."""
    values = np.asarray(samples)
    if values.size == 0:
        return np.zeros(1, dtype=np.int64)
    return np.bincount(np.rint(values).astype(np.int64))


def poisson_goodness_of_fit(histogram: np.ndarray, mean: float, min_expected: float = 5.0) -> GoodnessOfFit:
    """Chi-square test of a degree histogram against Poisson(mean).

    Adjacent bins are pooled until every pooled bin expects at least
    ``min_expected`` observations; the last bin absorbs the upper tail.
    """
    counts = np.asarray(histogram, dtype=float)
    total = counts.sum()
    if total <= 0 or mean <= 0:
        raise ValueError("need a non-empty histogram and a positive mean")
    k = np.arange(len(counts))
    expected = total * stats.poisson.pmf(k, mean)
    expected[-1] += total * stats.poisson.sf(k[-1], mean)
    obs_bins: List[float] = []
    exp_bins: List[float] = []
    acc_o = acc_e = 0.0
    for o, e in zip(counts, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_bins:
            obs_bins[-1] += acc_o
            exp_bins[-1] += acc_e
        else:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
    if len(obs_bins) < 2:
        return GoodnessOfFit(0.0, 1.0, 0)
    result = stats.chisquare(obs_bins, exp_bins)
    return GoodnessOfFit(float(result.statistic), float(result.pvalue), len(obs_bins) - 1)


def focal_sum_samples(mu: float, x_norm: float, r_max: float, reps: int, seed: int) -> np.ndarray:
    """Pooled {|y| + |x - y| <= r_max} over planar PPP realisations, x = (x_norm, 0)."""
    if r_max <= x_norm:
        raise ValueError("r_max must exceed x_norm")
    # the ellipse |y| + |x - y| <= r_max lies inside this centred square
    window = Window(2, x_norm + r_max, "open")
    focus = np.array([x_norm, 0.0])
    out = []
    for rep in range(reps):
        hubs = sample_ppp(mu, window, derive_seed(seed, "focal", rep))
        sums = np.linalg.norm(hubs.points, axis=1) + np.linalg.norm(hubs.points - focus, axis=1)
        out.append(sums[sums <= r_max])
    return np.concatenate(out) if out else np.empty(0)


def ks_distance(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Sup-distance between the empirical CDF of ``samples`` and ``cdf``."""
    if len(samples) == 0:
        raise ValueError("no samples")
    return float(stats.kstest(np.asarray(samples), cdf).statistic)


__all__ = [
    "RunningMoments",
    "DegreeParams",
    "DegreeStats",
    "GoodnessOfFit",
    "default_window",
    "local_window",
    "estimate_typical_degree",
    "estimate_MN",
    "estimate_connection_distance",
    "degree_histogram",
    "poisson_goodness_of_fit",
    "focal_sum_samples",
    "ks_distance",
]
