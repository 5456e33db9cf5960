"""Closed-form scalability models in throughput space and latency space.

Every function here is pure and works in double precision.  Processor counts
are integers for the public evaluations; the optimum-location helpers also
report the real-valued relaxation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Integral

import numpy as np


class DomainError(ValueError):
    """An input lies outside the domain of a scalability function."""


class NoFiniteMaximum(DomainError):
    """The capacity curve increases without bound (kappa == 0)."""


def _check_sigma(sigma: float) -> None:
    if not (0.0 <= sigma <= 1.0):
        raise DomainError(f"sigma must lie in [0, 1], got {sigma!r}")


def check_processors(p) -> None:
    if isinstance(p, (Integral, np.integer)):
        if p < 1:
            raise DomainError(f"processor count must be >= 1, got {p!r}")
        return
    arr = np.asarray(p)
    if arr.dtype.kind not in "iu":
        raise DomainError(f"processor count must be an integer, got {p!r}")
    if arr.size and arr.min() < 1:
        raise DomainError("processor count must be >= 1")


@dataclass(frozen=True)
class ModelParams:
    """The (sigma, kappa) pair defining one USL instance.

    ``kappa == 0`` gives Amdahl's law and ``sigma == kappa == 0`` ideal linear
    scaling.  ``sigma == 1`` is accepted as the fully serial degenerate case.
    """

    sigma: float
    kappa: float = 0.0

    def __post_init__(self):
        _check_sigma(self.sigma)
        if not (self.kappa >= 0.0) or math.isinf(self.kappa):
            raise DomainError(f"kappa must be finite and >= 0, got {self.kappa!r}")


@dataclass(frozen=True)
class LatencyParams:
    t1: float
    sigma: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        if not (self.t1 > 0.0):
            raise DomainError(f"t1 must be > 0, got {self.t1!r}")
        ModelParams(self.sigma, self.kappa)


@dataclass(frozen=True)
class PStar:
    """Location of the USL maximum.

    ``real`` is sqrt((1 - sigma)/kappa); ``integer`` is whichever of its floor
    and ceiling (restricted to p >= 1) gives the larger capacity.
    """

    real: float
    integer: int
    capacity: float


def amdahl_speedup(sigma: float, p):
    """Amdahl speedup ``p / (1 + sigma (p - 1))``.  Accepts scalar or array p."""
    _check_sigma(sigma)
    check_processors(p)
    return p / (1.0 + sigma * (p - 1))


def amdahl_asymptote(sigma: float) -> float:
    if not (0.0 < sigma <= 1.0):
        raise DomainError(f"asymptote needs sigma in (0, 1], got {sigma!r}")
    return 1.0 / sigma


def gustafson_speedup(sigma: float, p):
    _check_sigma(sigma)
    check_processors(p)
    return sigma + (1.0 - sigma) * p


def usl_capacity(params: ModelParams, p):
    """Relative capacity ``p / (1 + sigma (p-1) + kappa p (p-1))``."""
    check_processors(p)
    return p / (1.0 + params.sigma * (p - 1) + params.kappa * p * (p - 1))


def usl_pstar(params: ModelParams) -> PStar:
    """Real and integer location of the capacity maximum.

    Raises :class:`NoFiniteMaximum` when kappa is zero, since the curve then
    rises monotonically toward 1/sigma (or linearly when sigma is also 0).
    """
    if params.kappa == 0.0:
        raise NoFiniteMaximum("kappa = 0: capacity has no finite maximum")
    real = math.sqrt((1.0 - params.sigma) / params.kappa)
    lo = max(1, math.floor(real))
    hi = max(1, math.ceil(real))
    c_lo = usl_capacity(params, lo)
    c_hi = usl_capacity(params, hi)
    if c_hi > c_lo:
        return PStar(real, hi, c_hi)
    return PStar(real, lo, c_lo)


def latency_pairwise(t1: float, kappa: float, p):
    """Latency with ideal 1/p reduction plus a pairwise-exchange penalty."""
    if not (t1 > 0.0):
        raise DomainError(f"t1 must be > 0, got {t1!r}")
    if not (kappa > 0.0):
        raise DomainError(f"kappa must be > 0, got {kappa!r}")
    check_processors(p)
    return t1 / p + kappa * (t1 / 2.0) * (p - 1)


def latency_pairwise_minimum(kappa: float) -> float:
    if not (kappa > 0.0):
        raise DomainError(f"kappa must be > 0, got {kappa!r}")
    return math.sqrt(2.0 / kappa)


def latency_two_param(lp: LatencyParams, p):
    # kappa carries the absorbed factor of 2, so t1 / latency == usl_capacity
    check_processors(p)
    t1 = lp.t1
    return t1 / p + lp.sigma * t1 * (p - 1) / p + lp.kappa * t1 * (p - 1)


def speedup_from_latency(lp: LatencyParams, p):
    return lp.t1 / latency_two_param(lp, p)


def simplified_rational(p):
    """``p / (1 + p + p**2)``, the unit-coefficient USL shape."""
    return p / (1.0 + p + p * p)


@dataclass(frozen=True)
class Extremum:
    location: float
    value: float


def simplified_extrema_check() -> tuple[Extremum, Extremum]:
    """Return (maximum, minimum) of ``p / (1 + p + p**2)`` on the real line.

    The derivative numerator is ``1 - p**2``, so the stationary points are
    p = 1 (maximum) and p = -1 (minimum).
    """
    return (
        Extremum(1.0, float(simplified_rational(1.0))),
        Extremum(-1.0, float(simplified_rational(-1.0))),
    )
