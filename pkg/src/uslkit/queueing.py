"""Machine-repairman queueing model and its synchronous bounds.

``p`` machines alternate between an up period (mean ``z``) and a single FIFO
repair station (mean service ``s``).  The state-dependent variant stretches
service by ``s' = c * s`` per additional machine down.  The functions returning
:class:`Equivalence` evaluate both sides of an analytic identity so a mismatch
can be inspected rather than reduced to a boolean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import DomainError, ModelParams, check_processors, amdahl_speedup, gustafson_speedup, usl_capacity


@dataclass(frozen=True)
class QueueParams:
    s: float
    z: float
    c: float = 0.0

    def __post_init__(self):
        if not (self.s > 0.0) or math.isinf(self.s):
            raise DomainError(f"service time s must be finite and > 0, got {self.s!r}")
        if not (self.z >= 0.0) or math.isinf(self.z):
            raise DomainError(f"up time z must be finite and >= 0, got {self.z!r}")
        if not (self.c >= 0.0) or math.isinf(self.c):
            raise DomainError(f"state-dependence c must be finite and >= 0, got {self.c!r}")

    @property
    def sigma(self) -> float:
        return self.s / (self.s + self.z)

    @property
    def kappa(self) -> float:
        return self.c * self.sigma

    def model_params(self) -> ModelParams:
        return ModelParams(self.sigma, self.kappa)


@dataclass(frozen=True)
class QueueSolution:
    """Exact mean values for populations n = 1..p (index 0 is n = 1)."""

    params: QueueParams
    x: np.ndarray
    r: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        for arr in (self.x, self.r, self.q):
            arr.setflags(write=False)

    @property
    def p(self) -> int:
        return len(self.x)

    def throughput(self, n: int | None = None) -> float:
        return float(self.x[(n or self.p) - 1])

    def residence(self, n: int | None = None) -> float:
        return float(self.r[(n or self.p) - 1])

    def round_trip(self, n: int | None = None) -> float:
        return self.residence(n) + self.params.z


@dataclass(frozen=True)
class Equivalence:
    """Two independently computed sides of an identity (scalars or arrays)."""

    lhs: float | np.ndarray
    rhs: float | np.ndarray

    @property
    def rel_error(self) -> float:
        """Largest relative discrepancy between the two sides."""
        lhs = np.asarray(self.lhs, dtype=float)
        rhs = np.asarray(self.rhs, dtype=float)
        scale = np.maximum(np.abs(lhs), np.abs(rhs))
        diff = np.abs(lhs - rhs)
        rel = np.divide(diff, scale, out=np.zeros_like(diff), where=scale > 0)
        return float(rel.max()) if rel.size else 0.0


def exact_repairman(params: QueueParams, p: int) -> QueueSolution:
    """Exact single-server finite-population solution by mean-value recursion.

    ``params.c`` is ignored; this is the state-independent station.
    """
    if not isinstance(p, (int, np.integer)):
        raise DomainError(f"population p must be an integer, got {p!r}")
    check_processors(p)
    s, z = params.s, params.z
    x = np.empty(p)
    r = np.empty(p)
    q = np.empty(p)
    q_prev = 0.0
    for i in range(p):
        n = i + 1
        r[i] = s * (1.0 + q_prev)
        x[i] = n / (r[i] + z)
        q[i] = x[i] * r[i]
        q_prev = q[i]
    return QueueSolution(QueueParams(s, z), x, r, q)


def synchronous_throughput(params: QueueParams, p: int) -> float:
    """Lower bound ``p / (p s + z)``: every machine queues at once."""
    check_processors(p)
    return p / (p * params.s + params.z)


def serial_fraction(params: QueueParams) -> float:
    return params.sigma


def service_ratio(params: QueueParams) -> float:
    """``z / s``; also checked against ``(1 - sigma) / sigma``."""
    ratio = params.z / params.s
    sigma = serial_fraction(params)
    via_sigma = (1.0 - sigma) / sigma
    if not math.isclose(ratio, via_sigma, rel_tol=1e-12, abs_tol=1e-12):
        raise ArithmeticError(f"service ratio {ratio} != (1-sigma)/sigma = {via_sigma}")
    return ratio


def duality_paths(params: QueueParams, p: int) -> Equivalence:
    """Speedups reached by the two scalings that leave Amdahl's law invariant.

    Left: up time shrinks to z/p and each subtask needs s/p service, so the
    synchronous residence stays at s.  Right: up time unchanged, residence
    grows to p s.  Both are measured against the single-task round trip s + z.
    """
    check_processors(p)
    s, z = params.s, params.z
    t1 = s + z
    # left: p subtasks, each served in s/p, queued together -> R = p (s/p) = s
    left = t1 / (z / p + p * (s / p))
    # right: p tasks, unchanged z, synchronous residence p s
    right = p * t1 / (p * s + z)
    return Equivalence(left, right)


def state_dependent_residence(params: QueueParams, p: int) -> float:
    """Synchronous residence ``p (s + (p - 1) c s)``."""
    check_processors(p)
    return p * (params.s + (p - 1) * params.c * params.s)


def usl_from_queue(params: QueueParams, p: int) -> float:
    """Synchronous relative throughput of the state-dependent repairman."""
    check_processors(p)
    s, z = params.s, params.z
    return p * (s + z) / (state_dependent_residence(params, p) + z)


def usl_equivalence(params: QueueParams, p: int) -> Equivalence:
    return Equivalence(usl_from_queue(params, p), usl_capacity(params.model_params(), p))


def amdahl_equivalence(params: QueueParams, p: int) -> Equivalence:
    base = QueueParams(params.s, params.z)
    return Equivalence(usl_from_queue(base, p), amdahl_speedup(base.sigma, p))


def gustafson_from_queue(params: QueueParams, p: int) -> float:
    """Synchronous capacity after rescaling the up time ``z -> p z``."""
    check_processors(p)
    s, z = params.s, params.z
    return p * (s + p * z) / (p * s + p * z)


def gustafson_equivalence(params: QueueParams, p: int) -> Equivalence:
    sigma = serial_fraction(params)
    return Equivalence(gustafson_from_queue(params, p), gustafson_speedup(sigma, p))


def markov_serial_fraction(lambda_a: float, lambda_b: float) -> float:
    """Stationary probability of the serial state in a two-state chain.

    ``lambda_a`` is the parallel -> serial rate (1/z), ``lambda_b`` the
    serial -> parallel rate (1/s).  The result equals s / (s + z).
    """
    if not (lambda_a > 0.0) or not (lambda_b > 0.0):
        raise DomainError("transition rates must be > 0")
    return lambda_a / (lambda_a + lambda_b)
