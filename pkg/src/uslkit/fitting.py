"""Regression of (sigma, kappa) on measured throughput.

Residuals live on the relative-capacity scale ``C_p = X(p) / X(1)``, which
makes every fit invariant to the units of throughput.  The feasible region
``0 <= sigma < 1, kappa >= 0`` is enforced as hard bounds, and boundary
solutions (``kappa = 0`` or ``sigma = 0``) are evaluated explicitly so they can
be returned exactly rather than as tiny interior values.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .models import DomainError, ModelParams, NoFiniteMaximum, usl_capacity, usl_pstar

log = logging.getLogger(__name__)

MODELS = ("ideal", "amdahl", "usl")
N_PARAMS = {"ideal": 0, "amdahl": 1, "usl": 2}
MIN_POINTS = {"ideal": 1, "amdahl": 2, "usl": 3}

SIGMA_MAX = 1.0 - 1e-12
# a simpler candidate wins when its rss exceeds the best by less than this
# fraction of the total sum of squares
_TIE_RTOL = 1e-12
_RSS_FLOOR = 1e-24
_IDENTIFIABILITY = 0.01


class FitError(ValueError):
    pass


class InsufficientDataError(FitError):
    pass


class MissingBaselineError(FitError):
    pass


class DuplicateSampleError(FitError):
    pass


@dataclass(frozen=True)
class ThroughputSample:
    p: int
    x: float

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise DomainError(f"p must be an integer >= 1, got {self.p!r}")
        if not (self.x > 0.0) or math.isinf(self.x):
            raise DomainError(f"throughput must be finite and > 0, got {self.x!r}")


@dataclass(frozen=True)
class ModelScore:
    model: str
    params: ModelParams
    rss: float
    aicc: float


@dataclass(frozen=True)
class FitResult:
    params: ModelParams
    x1_used: float
    rss: float
    r_squared: float
    p_star: float | None
    p_star_int: int | None
    model: str
    model_choice: str
    scores: dict[str, ModelScore]
    converged: bool = True
    message: str = ""
    warnings: tuple[str, ...] = field(default=())

    @property
    def sigma(self) -> float:
        return self.params.sigma

    @property
    def kappa(self) -> float:
        return self.params.kappa


def normalize(samples: Iterable[ThroughputSample], baseline: float | None = None) -> list[tuple[int, float]]:
    """Convert samples to ``(p, C_p)`` pairs sorted by ``p``.

    ``baseline`` overrides the measured single-processor throughput.
    """
    samples = list(samples)
    seen: set[int] = set()
    for s in samples:
        if s.p in seen:
            raise DuplicateSampleError(f"duplicate sample for p={s.p}")
        seen.add(s.p)
    if baseline is None:
        ones = [s.x for s in samples if s.p == 1]
        if not ones:
            raise MissingBaselineError("no p=1 sample and no explicit baseline")
        baseline = ones[0]
    elif not (baseline > 0.0):
        raise DomainError(f"baseline must be > 0, got {baseline!r}")
    return [(s.p, s.x / baseline) for s in sorted(samples, key=lambda s: s.p)]


def baseline_of(samples: Sequence[ThroughputSample], baseline: float | None = None) -> float:
    if baseline is not None:
        return baseline
    ones = [s.x for s in samples if s.p == 1]
    if not ones:
        raise MissingBaselineError("no p=1 sample and no explicit baseline")
    return float(np.mean(ones))


def _arrays(points) -> tuple[np.ndarray, np.ndarray]:
    pts = sorted(points)
    p = np.array([q for q, _ in pts], dtype=np.int64)
    c = np.array([v for _, v in pts], dtype=float)
    if len(np.unique(p)) != len(p):
        raise DuplicateSampleError("duplicate p values in points")
    if p.size and p.min() < 1:
        raise DomainError("p must be >= 1")
    return p, c


def _rss(p, c, sigma, kappa) -> float:
    r = usl_capacity(ModelParams(sigma, kappa), p) - c
    return float(r @ r)


def _refine(p, c, x0, free: tuple[bool, bool]):
    """Bounded least squares over the free subset of (sigma, kappa)."""
    pf = p.astype(float)
    q = pf * (pf - 1.0)
    fixed = np.asarray(x0, dtype=float)

    def unpack(theta):
        full = fixed.copy()
        full[list(np.flatnonzero(free))] = theta
        return full

    def resid(theta):
        s, k = unpack(theta)
        return pf / (1.0 + s * (pf - 1.0) + k * q) - c

    def jac(theta):
        s, k = unpack(theta)
        d = 1.0 + s * (pf - 1.0) + k * q
        cols = []
        if free[0]:
            cols.append(-pf * (pf - 1.0) / d**2)
        if free[1]:
            cols.append(-pf * q / d**2)
        return np.column_stack(cols)

    lo = np.array([0.0, 0.0])[list(free)]
    hi = np.array([SIGMA_MAX, np.inf])[list(free)]
    start = np.clip(fixed[list(free)], lo, hi)
    sol = least_squares(resid, start, jac=jac, bounds=(lo, hi), method="trf",
                        x_scale="jac", ftol=1e-15, xtol=1e-15, gtol=1e-15, max_nfev=2000)
    s, k = unpack(sol.x)
    return float(s), float(k), sol.status > 0, sol.message


def _grid_start(p, c, sigmas, kappas) -> tuple[float, float]:
    best = (math.inf, 0.0, 0.0)
    for s in sigmas:
        for k in kappas:
            rss = _rss(p, c, s, k)
            if rss < best[0]:
                best = (rss, s, k)
    return best[1], best[2]


_SIGMA_GRID = np.concatenate(([0.0], np.linspace(0.01, 0.99, 50)))
_KAPPA_GRID = np.concatenate(([0.0], np.logspace(-8, 1, 46)))


@dataclass
class _Candidate:
    sigma: float
    kappa: float
    rss: float
    n_free: int
    converged: bool = True
    message: str = ""


def _fit_family(p, c, model: str) -> _Candidate:
    """Least-squares optimum over the feasible region of one model family."""
    tss = float(((c - c.mean()) ** 2).sum())
    candidates = [_Candidate(0.0, 0.0, _rss(p, c, 0.0, 0.0), 0)]
    if model in ("amdahl", "usl"):
        s0, _ = _grid_start(p, c, _SIGMA_GRID, [0.0])
        s, _, ok, msg = _refine(p, c, (s0, 0.0), (True, False))
        candidates.append(_Candidate(s, 0.0, _rss(p, c, s, 0.0), 1, ok, msg))
    if model == "usl":
        _, k0 = _grid_start(p, c, [0.0], _KAPPA_GRID)
        _, k, ok, msg = _refine(p, c, (0.0, k0), (False, True))
        candidates.append(_Candidate(0.0, k, _rss(p, c, 0.0, k), 1, ok, msg))
        s0, k0 = _grid_start(p, c, _SIGMA_GRID, _KAPPA_GRID)
        s, k, ok, msg = _refine(p, c, (s0, k0), (True, True))
        candidates.append(_Candidate(s, k, _rss(p, c, s, k), 2, ok, msg))
    best_rss = min(cand.rss for cand in candidates)
    slack = _TIE_RTOL * tss
    # candidates are ordered by free-parameter count, so the first near-optimal
    # one is the most parsimonious
    return next(cand for cand in candidates if cand.rss <= best_rss + slack)


def _aicc(rss: float, n: int, k: int) -> float:
    if n - k - 1 <= 0:
        return math.inf
    rss = max(rss, _RSS_FLOOR * n)
    return n * math.log(rss / n) + 2 * k + 2 * k * (k + 1) / (n - k - 1)


def _score_all(p, c) -> tuple[dict[str, ModelScore], dict[str, _Candidate]]:
    n = len(p)
    scores, fits = {}, {}
    for model in MODELS:
        if n < MIN_POINTS[model]:
            continue
        cand = _fit_family(p, c, model)
        fits[model] = cand
        scores[model] = ModelScore(model, ModelParams(cand.sigma, cand.kappa), cand.rss,
                                   _aicc(cand.rss, n, N_PARAMS[model]))
    return scores, fits


def _best(scores: dict[str, ModelScore]) -> str:
    return min(scores.values(), key=lambda sc: (sc.aicc, N_PARAMS[sc.model])).model


def select_model(points) -> tuple[str, dict[str, ModelScore]]:
    """Pick ideal, amdahl or usl by small-sample corrected AIC.

    Lower score is better; ties go to the model with fewer parameters.
    """
    p, c = _arrays(points)
    _require(p, "amdahl")
    scores, _ = _score_all(p, c)
    return _best(scores), scores


def _require(p, model: str) -> None:
    need = MIN_POINTS[model]
    if len(p) < need:
        raise InsufficientDataError(
            f"{model} fit needs at least {need} distinct p values, got {len(p)}")


def fit(points, model: str = "usl", x1: float = 1.0) -> FitResult:
    """Fit one model family (or ``"auto"`` to let selection decide).

    ``points`` are ``(p, C_p)`` pairs; ``x1`` is only recorded in the result.
    """
    if model not in MODELS + ("auto",):
        raise FitError(f"unknown model {model!r}")
    p, c = _arrays(points)
    _require(p, "usl" if model == "usl" else "amdahl" if model == "auto" else model)

    scores, fits = _score_all(p, c)
    choice = _best(scores)
    used = choice if model == "auto" else model
    cand = fits[used]
    params = ModelParams(cand.sigma, cand.kappa)

    tss = float(((c - c.mean()) ** 2).sum())
    if tss > 0.0:
        r2 = 1.0 - cand.rss / tss
    else:
        r2 = 1.0 if cand.rss == 0.0 else 0.0

    warnings = []
    p_star = p_star_int = None
    if params.kappa > 0.0:
        star = usl_pstar(params)
        p_star, p_star_int = star.real, star.integer
        pmax = float(p.max())
        denom = 1.0 + params.sigma * (pmax - 1) + params.kappa * pmax * (pmax - 1)
        if params.kappa * pmax * (pmax - 1) / denom < _IDENTIFIABILITY:
            warnings.append(
                "kappa contributes under 1% of the denominator at the largest sampled p; "
                "it is weakly identified by this data")
    if not cand.converged:
        log.warning("fit did not converge: %s", cand.message)
    return FitResult(
        params=params,
        x1_used=x1,
        rss=cand.rss,
        r_squared=r2,
        p_star=p_star,
        p_star_int=p_star_int,
        model=used,
        model_choice=choice,
        scores=scores,
        converged=cand.converged,
        message=str(cand.message),
        warnings=tuple(warnings),
    )


def fit_usl(points, x1: float = 1.0) -> FitResult:
    return fit(points, "usl", x1)


def fit_samples(samples: Sequence[ThroughputSample], model: str = "usl",
                baseline: float | None = None) -> FitResult:
    """Normalize raw throughput samples and fit them."""
    x1 = baseline_of(samples, baseline)
    return fit(normalize(samples, x1), model, x1)


@dataclass(frozen=True)
class Prediction:
    rows: list[tuple[int, float, float]]
    p_star: float | None
    p_star_int: int | None
    retrograde: bool


def predict(params: ModelParams, x1: float, p_values: Iterable[int]) -> Prediction:
    """Predicted throughput ``x1 * C_p`` for each requested ``p``.

    ``retrograde`` flags a request beyond the capacity maximum.
    """
    if not (x1 > 0.0):
        raise DomainError(f"x1 must be > 0, got {x1!r}")
    ps = [int(v) for v in p_values]
    rows = []
    for q in ps:
        cp = float(usl_capacity(params, q))
        rows.append((q, cp, x1 * cp))
    try:
        star = usl_pstar(params)
    except NoFiniteMaximum:
        return Prediction(rows, None, None, False)
    retro = any(q > math.ceil(star.real) for q in ps)
    if retro:
        log.warning("requested p beyond capacity maximum p*=%.4g; throughput is retrograde", star.real)
    return Prediction(rows, star.real, star.integer, retro)
