"""Closed forms and quadratures for the typical agent's statistics.

Closed forms (any d): mean hub degree of the typical agent, mean agent degree
of the typical hub, E N, the Galton-Watson bound and the mean connection
distance. Radial reductions of E M and V N use the two-dimensional pair
overlap h(s) = int f(|y|) f(|x - y|) dy at |x| = s and are only available
for d = 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Literal

import numpy as np
from scipy import integrate, special

from .connection import ConnectionSpec, full_space_integral, moment_integral
from .errors import QuadratureError

EPSABS = 1e-10
EPSREL = 1e-8
QUAD_LIMIT = 200
# exp(-60) times the polynomial factors is far below EPSREL
EXP_TAIL_SCALES = 60.0

Method = Literal["closed_form", "quadrature"]


@dataclass(frozen=True)
class TheoryValue:
    quantity: str
    value: float
    method: Method
    estimated_abs_error: float = 0.0

    def as_row(self) -> dict:
        return {
            "quantity": self.quantity,
            "value": self.value,
            "method": self.method,
            "error": self.estimated_abs_error,
        }


@dataclass(frozen=True)
class Constants:
    d: int
    c_d: float


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def constants(d: int) -> Constants:
    return Constants(d, unit_ball_volume(d))


def _quad(quantity: str, fn, lo: float, hi: float, points=None) -> TheoryValue:
    out = integrate.quad(
        fn, lo, hi, epsabs=EPSABS, epsrel=EPSREL, limit=QUAD_LIMIT, points=points, full_output=1
    )
    value, err = float(out[0]), float(out[1])
    tolerance = max(EPSABS, EPSREL * abs(value))
    if len(out) > 3 and err > tolerance:
        raise QuadratureError(quantity, err, tolerance)
    # a converged quadrature still reports at least rounding-level uncertainty
    err = max(err, np.finfo(float).eps * abs(value), np.finfo(float).tiny)
    return TheoryValue(quantity, value, "quadrature", err)


def _require_plane(d: int, quantity: str) -> None:
    if d != 2:
        raise ValueError(f"{quantity} is implemented for d = 2 only, got d = {d}")


# -- closed forms -----------------------------------------------------------


def mean_typical_degree(mu: float, spec: ConnectionSpec, d: int) -> TheoryValue:
    return TheoryValue("mean_typical_degree", mu * full_space_integral(spec, d), "closed_form")


def mean_hub_degree(lam: float, spec: ConnectionSpec, d: int) -> TheoryValue:
    """Typical hub's agent count; mass transport swaps the roles of the densities."""
    return TheoryValue("mean_hub_degree", lam * full_space_integral(spec, d), "closed_form")


def expected_N(lam: float, mu: float, spec: ConnectionSpec, d: int) -> TheoryValue:
    return TheoryValue("expected_N", lam * mu * full_space_integral(spec, d) ** 2, "closed_form")


def gw_lower_bound(spec: ConnectionSpec, d: int) -> TheoryValue:
    return TheoryValue("gw_lower_bound", full_space_integral(spec, d) ** -2, "closed_form")


def gw_min_sum(spec: ConnectionSpec, d: int) -> TheoryValue:
    """Minimum of lambda + mu on the hyperbola lambda * mu = gw_lower_bound."""
    return TheoryValue("gw_min_sum", 2.0 / full_space_integral(spec, d), "closed_form")


def mean_connection_distance(mu: float, spec: ConnectionSpec, d: int = 2) -> TheoryValue:
    value = mu * unit_ball_volume(d) * d * moment_integral(spec, d, 1)
    return TheoryValue("mean_connection_distance", value, "closed_form")


# -- elliptical intensity ---------------------------------------------------


def ellipse_intensity(mu: float, x_norm: float, r: float) -> float:
    """Intensity at r of {|y| + |x - y| : y in a density-mu planar PPP}."""
    if x_norm <= 0:
        raise ValueError("x_norm must be positive")
    if r <= x_norm:
        raise ValueError(f"intensity is defined for r > |x| = {x_norm}, got {r}")
    return mu * math.pi / 4.0 * (2.0 * r * r - x_norm * x_norm) / math.sqrt(r * r - x_norm * x_norm)


def ellipse_cumulative(mu: float, x_norm: float, r):
    """Mean number of hubs with |y| + |x - y| <= r (the ellipse's area times mu)."""
    if x_norm < 0:
        raise ValueError("x_norm must be non-negative")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < x_norm):
        raise ValueError("cumulative intensity is defined for r >= |x|")
    value = mu * math.pi * r_arr / 4.0 * np.sqrt(r_arr * r_arr - x_norm * x_norm)
    return float(value) if np.ndim(value) == 0 else value


# -- pair overlap h(s) ------------------------------------------------------


def _lens_area(theta: float, s: np.ndarray) -> np.ndarray:
    s = np.minimum(s, 2.0 * theta)
    return 2.0 * theta**2 * np.arccos(s / (2.0 * theta)) - s * np.sqrt(np.maximum(theta**2 - s * s / 4.0, 0.0))


def _bessel_overlap(theta: float, s: np.ndarray) -> np.ndarray:
    safe = np.where(s > 0, s, 1.0)
    z = safe / theta
    value = math.pi * safe / 16.0 * (2.0 * theta * special.k1(z) + safe * special.k0(z))
    return np.where(s > 0, value, math.pi * theta**2 / 8.0)


def _ellipse_overlap_scalar(theta: float, s: float) -> float:
    if s == 0.0:
        return math.pi * theta**2 / 8.0
    # r = s cosh t removes the inverse-square-root singularity at r = s
    t_max = math.acosh(1.0 + EXP_TAIL_SCALES * theta / s)

    def integrand(t: float) -> float:
        return math.pi / 4.0 * s * s * math.cosh(2.0 * t) * 0.25 * math.exp(-s * math.cosh(t) / theta)

    value, _ = integrate.quad(integrand, 0.0, t_max, epsabs=EPSABS * 1e-3, epsrel=EPSREL * 1e-2, limit=QUAD_LIMIT)
    return value


def pair_overlap(spec: ConnectionSpec, s, method: Literal["closed_form", "ellipse"] = "closed_form"):
    """h(s) for the dispersed planar connection function; h_p(s) = p * h(sqrt(p) * s)."""
    _require_plane(spec.d, "pair_overlap")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("distance must be non-negative")
    p, u = spec.dispersion_p, spec.scale * s_arr
    if spec.bounded:
        if method != "closed_form":
            raise ValueError("the elliptical path applies to the exponential family only")
        base = spec.amplitude**2 * _lens_area(spec.theta, u)
    elif method == "closed_form":
        base = _bessel_overlap(spec.theta, u)
    elif method == "ellipse":
        base = np.vectorize(lambda v: _ellipse_overlap_scalar(spec.theta, float(v)), otypes=[float])(u)
    else:
        raise ValueError(f"unknown overlap method {method!r}")
    value = p * base
    return float(value) if np.ndim(value) == 0 else value


def _overlap_range(spec: ConnectionSpec):
    """Outer integration range and breakpoints for radial integrals over h."""
    theta_p = spec.theta / spec.scale
    if spec.bounded:
        return 2.0 * theta_p, None
    return EXP_TAIL_SCALES * theta_p, [theta_p, 5.0 * theta_p, 20.0 * theta_p]


# -- E M and V N -------------------------------------------------------------


def expected_M(lam: float, mu: float, spec: ConnectionSpec, d: int) -> TheoryValue:
    """E M = lam * int 2 pi s (1 - exp(-mu h(s))) ds.

    h uses the lens area for bounded families and the elliptical-intensity
    quadrature for the exponential family, so this path is independent of the
    Bessel form used by expected_M_exp.
    """
    _require_plane(d, "expected_M")
    spec = spec.in_dimension(d)
    if lam == 0 or mu == 0:
        return TheoryValue("expected_M", 0.0, "quadrature", np.finfo(float).tiny)
    method = "closed_form" if spec.bounded else "ellipse"
    hi, points = _overlap_range(spec)

    def integrand(s: float) -> float:
        return 2.0 * math.pi * lam * s * -math.expm1(-mu * pair_overlap(spec, s, method))

    return _quad("expected_M", integrand, 0.0, hi, points)


def expected_M_disk(lam: float, mu: float, theta: float) -> TheoryValue:
    if theta <= 0:
        raise ValueError("theta must be positive")

    def integrand(v: float) -> float:
        lens = 2.0 * theta**2 * math.acos(min(v / (2.0 * theta), 1.0)) - v * math.sqrt(max(theta**2 - v * v / 4.0, 0.0))
        return 2.0 * math.pi * lam * v * -math.expm1(-mu * lens)

    return _quad("expected_M_disk", integrand, 0.0, 2.0 * theta)


def expected_M_exp(lam: float, mu: float, theta: float) -> TheoryValue:
    if theta <= 0:
        raise ValueError("theta must be positive")

    def integrand(v: float) -> float:
        if v == 0.0:
            return 0.0
        h = math.pi * v / 16.0 * (2.0 * theta * special.k1(v / theta) + v * special.k0(v / theta))
        return 2.0 * math.pi * lam * v * -math.expm1(-mu * h)

    hi = EXP_TAIL_SCALES * theta
    return _quad("expected_M_exp", integrand, 0.0, hi, [theta, 5.0 * theta, 20.0 * theta])


def variance_N(lam: float, mu: float, spec: ConnectionSpec, d: int) -> TheoryValue:
    """V N = E N + lam^2 mu (int f)^3 + lam mu^2 int 2 pi s h(s)^2 ds."""
    _require_plane(d, "variance_N")
    spec = spec.in_dimension(d)
    total = full_space_integral(spec, d)
    hi, points = _overlap_range(spec)

    def integrand(s: float) -> float:
        return 2.0 * math.pi * s * pair_overlap(spec, s) ** 2

    overlap_sq = _quad("variance_N", integrand, 0.0, hi, points)
    value = lam * mu * total**2 + lam**2 * mu * total**3 + lam * mu**2 * overlap_sq.value
    return TheoryValue("variance_N", value, "quadrature", lam * mu**2 * overlap_sq.estimated_abs_error)


def theory_table(lam: float, mu: float, spec: ConnectionSpec, d: int) -> List[TheoryValue]:
    spec = spec.in_dimension(d)
    rows = [
        mean_typical_degree(mu, spec, d),
        mean_hub_degree(lam, spec, d),
        expected_N(lam, mu, spec, d),
        gw_lower_bound(spec, d),
        gw_min_sum(spec, d),
        mean_connection_distance(mu, spec, d),
    ]
    if d != 2:
        return rows
    rows.append(expected_M(lam, mu, spec, d))
    rows.append(variance_N(lam, mu, spec, d))
    p = spec.dispersion_p
    # E M(f_p; lam, mu) = E M(f; lam / p, mu * p)
    if spec.family == "boolean":
        rows.append(expected_M_disk(lam / p, mu * p, spec.theta))
    elif spec.family == "exponential":
        rows.append(expected_M_exp(lam / p, mu * p, spec.theta))
    return rows


__all__ = [
    "TheoryValue",
    "Constants",
    "constants",
    "unit_ball_volume",
    "mean_typical_degree",
    "mean_hub_degree",
    "expected_N",
    "expected_M",
    "expected_M_disk",
    "expected_M_exp",
    "variance_N",
    "gw_lower_bound",
    "gw_min_sum",
    "ellipse_intensity",
    "ellipse_cumulative",
    "pair_overlap",
    "mean_connection_distance",
    "theory_table",
]
