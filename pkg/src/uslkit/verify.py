"""Grid checks of the analytic identities linking the queueing model and the
closed-form scalability functions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import models, queueing
from .models import LatencyParams, ModelParams
from .queueing import QueueParams

S_GRID = (0.1, 1.0, 5.0)
Z_GRID = (0.0, 1.0, 9.0, 99.0)
C_GRID = (0.0, 0.01, 0.1, 1.0, 10.0)
P_MAX = 1024
EXTREMA_STEP = 1e-4


@dataclass(frozen=True)
class Check:
    name: str
    max_error: float
    tolerance: float
    cases: int
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def _grid(with_c: bool = True):
    cs = C_GRID if with_c else (0.0,)
    for s, z, c in itertools.product(S_GRID, Z_GRID, cs):
        yield QueueParams(s, z, c)


def _ps() -> np.ndarray:
    return np.arange(1, P_MAX + 1)


def check_main_theorem(tol: float) -> Check:
    ps = _ps()
    errs = [queueing.usl_equivalence(q, ps).rel_error for q in _grid()]
    return Check("usl_equals_state_dependent_sync_throughput", max(errs), tol, len(errs) * len(ps))


def check_amdahl_bound(tol: float) -> Check:
    ps = _ps()
    errs = [queueing.amdahl_equivalence(q, ps).rel_error for q in _grid(False)]
    return Check("amdahl_equals_sync_throughput", max(errs), tol, len(errs) * len(ps))


def check_gustafson(tol: float) -> Check:
    ps = _ps()
    errs = [queueing.gustafson_equivalence(q, ps).rel_error for q in _grid(False)]
    return Check("gustafson_equals_rescaled_uptime", max(errs), tol, len(errs) * len(ps))


def check_duality(tol: float) -> Check:
    ps = _ps()
    worst = 0.0
    n = 0
    for q in _grid(False):
        paths = queueing.duality_paths(q, ps)
        amdahl = models.amdahl_speedup(q.sigma, ps)
        worst = max(
            worst,
            paths.rel_error,
            queueing.Equivalence(paths.lhs, amdahl).rel_error,
            queueing.Equivalence(paths.rhs, amdahl).rel_error,
        )
        n += len(ps)
    return Check("speedup_duality_paths", worst, tol, n)


def check_latency_duality(tol: float) -> Check:
    ps = _ps()
    worst = 0.0
    n = 0
    for q in _grid():
        for t1 in (0.5, 1.0, 37.0):
            lp = LatencyParams(t1, q.sigma, q.kappa)
            eq = queueing.Equivalence(models.speedup_from_latency(lp, ps),
                                      models.usl_capacity(ModelParams(q.sigma, q.kappa), ps))
            worst = max(worst, eq.rel_error)
            n += len(ps)
    return Check("latency_speedup_equals_capacity", worst, tol, n)


def scan_simplified_extrema(step: float = EXTREMA_STEP, bound: float = 100.0):
    """Grid argmax on (0, bound] and argmin on [-bound, 0) of p/(1+p+p^2)."""
    k = int(round(bound / step))
    pos = np.arange(1, k + 1) * step
    neg = -pos
    f_pos = models.simplified_rational(pos)
    f_neg = models.simplified_rational(neg)
    i, j = int(np.argmax(f_pos)), int(np.argmin(f_neg))
    return (float(pos[i]), float(f_pos[i])), (float(neg[j]), float(f_neg[j]))


def check_extrema(step: float = EXTREMA_STEP) -> Check:
    (xmax, fmax), (xmin, fmin) = scan_simplified_extrema(step)
    hi, lo = models.simplified_extrema_check()
    loc_err = max(abs(xmax - hi.location), abs(xmin - lo.location))
    # the scanned value differs from the analytic one at second order in step
    val_err = max(abs(fmax - hi.value), abs(fmin - lo.value))
    return Check(
        "simplified_rational_extrema",
        max(loc_err, val_err),
        step,
        2 * int(round(100.0 / step)),
        detail=f"max at p={hi.location:g} f={hi.value:.12g}; min at p={lo.location:g} f={lo.value:.12g}",
    )


def run_all(tolerance: float = 1e-12) -> list[Check]:
    return [
        check_main_theorem(tolerance),
        check_amdahl_bound(tolerance),
        check_gustafson(tolerance),
        check_duality(tolerance),
        check_latency_duality(tolerance),
        check_extrema(),
    ]
