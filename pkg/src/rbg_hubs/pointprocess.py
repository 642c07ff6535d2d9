"""Homogeneous Poisson point processes in centred cube windows.

Windows span [-L/2, L/2]^d. Points carry stable 64-bit ids so that restricted
or superposed realisations keep their pair-keyed edge randomness.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Literal, Sequence

import numpy as np

from .errors import PointCountOverflowError
from .rng import derive_seed, generator

Boundary = Literal["torus", "open"]
Kind = Literal["agent", "hub"]

# Index type of the package is int32-compatible.
MAX_POINTS = 2**31 - 1
PALM_ID = np.uint64(2**64 - 1)


@dataclass(frozen=True)
class Window:
    d: int
    L: float
    boundary: Boundary = "torus"

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be an integer >= 1, got {self.d}")
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"window side must be positive and finite, got {self.L}")
        if self.boundary not in ("torus", "open"):
            raise ValueError(f"unknown boundary mode {self.boundary!r}")

    @property
    def volume(self) -> float:
        return float(self.L) ** self.d

    @property
    def half(self) -> float:
        return 0.5 * float(self.L)

    def contains(self, coords: np.ndarray) -> bool:
        c = np.atleast_2d(np.asarray(coords, dtype=float))
        if c.size == 0:
            return True
        return bool(np.all(np.abs(c) <= self.half))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PointSet:
    window: Window
    points: np.ndarray
    kind: Kind
    intensity_used: float
    ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, self.window.d)
        ids = np.arange(len(pts), dtype=np.uint64) if self.ids is None else np.asarray(self.ids, dtype=np.uint64)
        if len(ids) != len(pts):
            raise ValueError("ids and points differ in length")
        if self.kind not in ("agent", "hub"):
            raise ValueError(f"unknown point kind {self.kind!r}")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "ids", _frozen(ids))

    def __len__(self) -> int:
        return len(self.points)

    def subset(self, selector: np.ndarray | Sequence[int]) -> "PointSet":
        sel = np.asarray(selector)
        return PointSet(self.window, self.points[sel], self.kind, self.intensity_used, self.ids[sel])

    def next_id(self) -> int:
        regular = self.ids[self.ids != PALM_ID]
        return int(regular.max()) + 1 if len(regular) else 0


def sample_ppp(intensity: float, window: Window, seed: int, kind: Kind = "hub") -> PointSet:
    if not np.isfinite(intensity) or intensity < 0:
        raise ValueError(f"intensity must be finite and non-negative, got {intensity}")
    mean = intensity * window.volume
    if mean + 10.0 * np.sqrt(mean) > MAX_POINTS:
        raise PointCountOverflowError(mean, MAX_POINTS)
    rng = generator(seed, "ppp")
    n = int(rng.poisson(mean)) if mean > 0 else 0
    pts = rng.uniform(-window.half, window.half, size=(n, window.d))
    return PointSet(window, pts, kind, float(intensity))


def palm_condition(points: PointSet) -> PointSet:
    """Add a typical point at the origin (Slivnyak: this is the Palm version of a PPP)."""
    origin = np.zeros((1, points.window.d))
    if not points.window.contains(origin):
        raise ValueError("window does not contain the origin")
    pts = np.vstack([origin, points.points])
    ids = np.concatenate([[PALM_ID], points.ids])
    return PointSet(points.window, pts, points.kind, points.intensity_used, ids)


def superpose(base: PointSet, extra: PointSet) -> PointSet:
    if base.window != extra.window or base.kind != extra.kind:
        raise ValueError("superposed point sets must share window and kind")
    offset = np.uint64(base.next_id())
    extra_ids = extra.ids + offset
    return PointSet(
        base.window,
        np.vstack([base.points, extra.points]),
        base.kind,
        base.intensity_used + extra.intensity_used,
        np.concatenate([base.ids, extra_ids]),
    )


def sample_ppp_coupled(intensities: Sequence[float], window: Window, seed: int, kind: Kind = "agent") -> List[PointSet]:
    """Nested realisations for an increasing intensity sequence."""
    out: List[PointSet] = []
    previous = 0.0
    current = PointSet(window, np.empty((0, window.d)), kind, 0.0)
    for k, lam in enumerate(intensities):
        if lam < previous:
            raise ValueError("coupled intensities must be non-decreasing")
        increment = sample_ppp(lam - previous, window, derive_seed(seed, "increment", k), kind=kind)
        current = superpose(current, increment)
        out.append(current)
        previous = lam
    return out


def minimal_image(window: Window, diff: np.ndarray) -> np.ndarray:
    diff = np.asarray(diff, dtype=float)
    if window.boundary == "torus":
        return diff - window.L * np.round(diff / window.L)
    return diff


def pair_distance(window: Window, x: np.ndarray, y: np.ndarray) -> float | np.ndarray:
    diff = minimal_image(window, np.asarray(y, dtype=float) - np.asarray(x, dtype=float))
    dist = np.linalg.norm(diff, axis=-1)
    return float(dist) if np.ndim(dist) == 0 else dist


__all__ = [
    "Window",
    "PointSet",
    "sample_ppp",
    "palm_condition",
    "superpose",
    "sample_ppp_coupled",
    "pair_distance",
    "minimal_image",
    "MAX_POINTS",
    "PALM_ID",
]
