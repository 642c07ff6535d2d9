"""Connection functions f: R+ -> [0, 1] and their dispersed versions.

Three families are supported:

  boolean      f(r) = 1(r <= theta)
  p_boolean    f(r) = a * 1(r <= theta),   0 < a <= 1
  exponential  f(r) = 1/2 * exp(-r / theta)

Dispersion is stored as an absolute parameter p relative to the base family;
in dimension d the dispersed function is f_p(r) = p * f(p**(1/d) * r).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy import integrate, special

from .errors import ConfigError

Family = Literal["boolean", "p_boolean", "exponential"]

EXPONENTIAL_AMPLITUDE = 0.5

_SPEC_RE = re.compile(
    r"^(?P<family>boolean|pboolean|exp)"
    r":(?P<args>[^@]+)"
    r"(?:@p=(?P<disp>[^@]+))?$"
)


@dataclass(frozen=True)
class ConnectionSpec:
    family: Family
    theta: float
    amplitude: float = 1.0
    dispersion_p: float = 1.0
    d: int = 2

    def __post_init__(self):
        if self.family not in ("boolean", "p_boolean", "exponential"):
            raise ValueError(f"unknown connection family {self.family!r}")
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not 0 < self.amplitude <= 1:
            raise ValueError(f"amplitude must lie in (0, 1], got {self.amplitude}")
        if self.family == "boolean" and self.amplitude != 1.0:
            raise ValueError("boolean family has amplitude 1; use p_boolean")
        if self.family == "exponential" and self.amplitude != EXPONENTIAL_AMPLITUDE:
            raise ValueError("exponential family has amplitude 1/2")
        if not 0 < self.dispersion_p <= 1:
            raise ValueError(f"dispersion p must lie in (0, 1], got {self.dispersion_p}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be an integer >= 1, got {self.d}")

    @classmethod
    def boolean(cls, theta: float, d: int = 2) -> "ConnectionSpec":
        return cls("boolean", theta, 1.0, 1.0, d)

    @classmethod
    def p_boolean(cls, amplitude: float, theta: float, d: int = 2) -> "ConnectionSpec":
        return cls("p_boolean", theta, amplitude, 1.0, d)

    @classmethod
    def exponential(cls, theta: float, d: int = 2) -> "ConnectionSpec":
        return cls("exponential", theta, EXPONENTIAL_AMPLITUDE, 1.0, d)

    @property
    def bounded(self) -> bool:
        return self.family != "exponential"

    @property
    def scale(self) -> float:
        """p**(1/d): argument scaling of the dispersed function."""
        return self.dispersion_p ** (1.0 / self.d)

    def base(self) -> "ConnectionSpec":
        return replace(self, dispersion_p=1.0)

    def in_dimension(self, d: int) -> "ConnectionSpec":
        return self if d == self.d else replace(self, d=int(d))


@dataclass(frozen=True)
class EffectiveSupport:
    radius: float
    truncation_mass: float


def _base_value(spec: ConnectionSpec, u: np.ndarray) -> np.ndarray:
    if spec.family == "exponential":
        return spec.amplitude * np.exp(-u / spec.theta)
    return np.where(u <= spec.theta, spec.amplitude, 0.0)


def evaluate(spec: ConnectionSpec, r):
    """f_p(r); scalar in, float out, array in, array out."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("distance must be non-negative")
    value = spec.dispersion_p * _base_value(spec, spec.scale * arr)
    return float(value) if np.ndim(value) == 0 else value


def disperse(spec: ConnectionSpec, p: float) -> ConnectionSpec:
    if not 0 < p <= 1:
        raise ValueError(f"dispersion p must lie in (0, 1], got {p}")
    return replace(spec, dispersion_p=float(p))


def moment_integral(spec: ConnectionSpec, d: int, k: int) -> float:
    """Closed form of the radial moment  int_0^inf f_p(r) r^(d-1+k) dr."""
    if k < 0 or int(k) != k:
        raise ValueError("moment order must be a non-negative integer")
    spec = spec.in_dimension(d)
    m = d - 1 + k
    if spec.family == "exponential":
        base = spec.amplitude * math.gamma(m + 1) * spec.theta ** (m + 1)
    else:
        base = spec.amplitude * spec.theta ** (m + 1) / (m + 1)
    # change of variables u = p^(1/d) r leaves k = 0 untouched
    return base * spec.dispersion_p ** (-k / d)


def quadrature_moment(spec: ConnectionSpec, d: int, k: int) -> float:
    """Adaptive-quadrature oracle for moment_integral."""
    spec = spec.in_dimension(d)
    m = d - 1 + k

    def integrand(r: float) -> float:
        return evaluate(spec, r) * r**m

    if spec.bounded:
        upper = spec.theta / spec.scale
        value, _ = integrate.quad(integrand, 0.0, upper, epsabs=1e-14, epsrel=1e-12, limit=200)
    else:
        value, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    return value


def full_space_integral(spec: ConnectionSpec, d: int) -> float:
    """int_{R^d} f_p(||x||) dx = c_d d int f_p(r) r^(d-1) dr."""
    c_d = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    return c_d * d * moment_integral(spec, d, 0)


def effective_support(spec: ConnectionSpec, epsilon: float) -> EffectiveSupport:
    """Smallest R whose neglected tail of the k = 0 moment is at most epsilon (relative)."""
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if spec.bounded:
        return EffectiveSupport(spec.theta / spec.scale, 0.0)
    # tail of int u^(d-1) e^(-u) is the regularized upper incomplete gamma Q(d, u)
    u = float(special.gammainccinv(spec.d, epsilon))
    mass = float(special.gammaincc(spec.d, u))
    return EffectiveSupport(spec.theta * u / spec.scale, mass)


def parse_spec(text: str, d: int = 2) -> ConnectionSpec:
    """Parse ``boolean:<theta>``, ``pboolean:<p>:<theta>``, ``exp:<theta>`` with optional ``@p=<disp>``."""
    m = _SPEC_RE.match(text.strip())
    if not m:
        raise ConfigError(f"unrecognised connection spec {text!r}")
    family, args, disp = m.group("family"), m.group("args").split(":"), m.group("disp")
    try:
        values = [float(a) for a in args]
        if family == "boolean" and len(values) == 1:
            spec = ConnectionSpec.boolean(values[0], d)
        elif family == "pboolean" and len(values) == 2:
            spec = ConnectionSpec.p_boolean(values[0], values[1], d)
        elif family == "exp" and len(values) == 1:
            spec = ConnectionSpec.exponential(values[0], d)
        else:
            raise ConfigError(f"wrong number of parameters in {text!r}")
        if disp is not None:
            spec = disperse(spec, float(disp))
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"invalid connection spec {text!r}: {e}") from e
    return spec


def format_spec(spec: ConnectionSpec) -> str:
    if spec.family == "boolean":
        text = f"boolean:{spec.theta!r}"
    elif spec.family == "p_boolean":
        text = f"pboolean:{spec.amplitude!r}:{spec.theta!r}"
    else:
        text = f"exp:{spec.theta!r}"
    if spec.dispersion_p != 1.0:
        text += f"@p={spec.dispersion_p!r}"
    return text


__all__ = [
    "ConnectionSpec",
    "EffectiveSupport",
    "evaluate",
    "disperse",
    "moment_integral",
    "quadrature_moment",
    "full_space_integral",
    "effective_support",
    "parse_spec",
    "format_spec",
    "EXPONENTIAL_AMPLITUDE",
]
