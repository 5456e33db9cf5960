"""Seeded discrete-event simulation of the machine-repairman system.

Three synchronization regimes are supported:

``asynchronous``
    Machines fail and queue independently at a single FIFO repair station.
``barrier``
    Repaired machines wait in a post-repair buffer until all ``p`` are
    repaired, then every machine restarts its up period at the same instant.
``intermittent``
    Whenever a repair starts, every machine still up is suspended (its
    remaining up time is frozen) until the repair queue drains.

Service may be state dependent: a repair that starts while ``n`` machines are
not up takes ``(1 + (n - 1) c)`` times its sampled base duration.

Ties between simultaneous events are broken by machine index, ascending.
Each machine draws from its own random substreams (one for up times, one for
service times) derived from the master seed, so adding machines never changes
the draws of existing ones.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator

import numpy as np
from scipy import stats

from .queueing import QueueParams, exact_repairman

MODES = ("asynchronous", "barrier", "intermittent")
DIST_KINDS = ("deterministic", "exponential", "lognormal")
_DIST_ALIASES = {
    "det": "deterministic",
    "deterministic": "deterministic",
    "d": "deterministic",
    "exp": "exponential",
    "exponential": "exponential",
    "m": "exponential",
    "lognormal": "lognormal",
    "lognorm": "lognormal",
    "logn": "lognormal",
}

_UP, _QUEUED, _SERVICE, _HELD, _SUSPENDED = range(5)
_FAIL, _DONE = 0, 1
_BLOCK = 512


class SimulationError(RuntimeError):
    """Raised when a run exceeds its event budget."""


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Dist:
    """A nonnegative duration distribution described by its mean.

    ``cv`` (coefficient of variation) only matters for ``lognormal``.
    """

    kind: str
    mean: float
    cv: float = 1.0

    def __post_init__(self):
        kind = _DIST_ALIASES.get(self.kind.lower())
        if kind is None:
            raise ConfigError(f"unknown distribution {self.kind!r}; expected one of {DIST_KINDS}")
        object.__setattr__(self, "kind", kind)
        if not (self.mean >= 0.0) or math.isinf(self.mean):
            raise ConfigError(f"distribution mean must be finite and >= 0, got {self.mean!r}")
        if kind == "lognormal" and not (self.mean > 0.0 and self.cv > 0.0):
            raise ConfigError("lognormal needs mean > 0 and cv > 0")

    @classmethod
    def parse(cls, text: str) -> "Dist":
        """Parse ``kind:mean[:cv]``, e.g. ``exp:1``, ``det:9``, ``lognormal:9:0.5``."""
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"cannot parse distribution {text!r}; use kind:mean[:cv]")
        try:
            values = [float(v) for v in parts[1:]]
        except ValueError:
            raise ConfigError(f"cannot parse distribution {text!r}; non-numeric parameter") from None
        return cls(parts[0], *values)

    def __str__(self) -> str:
        if self.kind == "lognormal":
            return f"lognormal:{self.mean:g}:{self.cv:g}"
        return f"{self.kind}:{self.mean:g}"

    def stream(self, seed_seq: np.random.SeedSequence) -> Iterator[float]:
        if self.kind == "deterministic":
            mean = float(self.mean)
            while True:
                yield mean
        rng = np.random.Generator(np.random.PCG64(seed_seq))
        if self.kind == "exponential":
            while True:
                yield from rng.exponential(self.mean, _BLOCK).tolist()
        var_ln = math.log1p(self.cv * self.cv)
        mu = math.log(self.mean) - 0.5 * var_ln
        sd = math.sqrt(var_ln)
        while True:
            yield from rng.lognormal(mu, sd, _BLOCK).tolist()


@dataclass(frozen=True)
class SimConfig:
    p: int
    service_dist: Dist
    uptime_dist: Dist
    mode: str = "asynchronous"
    state_dependence_c: float = 0.0
    cycles: int = 10_000
    warmup: int = 0
    seed: int = 42
    batches: int = 30
    max_events: int | None = None

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ConfigError(f"p must be an integer >= 1, got {self.p!r}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not (self.service_dist.mean > 0.0):
            raise ConfigError("service mean must be > 0")
        if not (self.state_dependence_c >= 0.0):
            raise ConfigError("state_dependence_c must be >= 0")
        if self.warmup < 0 or self.cycles <= self.warmup:
            raise ConfigError("need cycles > warmup >= 0")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.batches < 2:
            raise ConfigError("batches must be >= 2")

    def analytic_reference(self) -> float | None:
        """Throughput the run is checked against, from the distribution means.

        Exact mean-value solution for the asynchronous regime (state-independent
        service only), otherwise the synchronous bound with the same stretch
        the simulator applies.
        """
        s, z, c, p = self.service_dist.mean, self.uptime_dist.mean, self.state_dependence_c, self.p
        if self.mode == "asynchronous":
            if c > 0.0:
                return None
            return exact_repairman(QueueParams(s, z), p).throughput()
        return p / (p * s * (1.0 + (p - 1) * c) + z)


@dataclass(frozen=True)
class SimOutcome:
    x_hat: float
    r_hat: float
    ci_halfwidth: float
    analytic_reference: float | None
    tours_used: int
    completions: int = 0
    elapsed: float = 0.0
    all_down_fraction: float = 0.0
    serial_time_per_tour: float = 0.0
    batch_x: tuple[float, ...] = field(default=(), repr=False)

    def within_ci(self) -> bool:
        if self.analytic_reference is None:
            return False
        return abs(self.x_hat - self.analytic_reference) <= self.ci_halfwidth

    def rel_error(self) -> float | None:
        if self.analytic_reference is None:
            return None
        return abs(self.x_hat - self.analytic_reference) / self.analytic_reference


Observer = Callable[[float, dict], None]


def run_sim(config: SimConfig, observer: Observer | None = None) -> SimOutcome:
    """Simulate ``config.cycles`` tours and estimate throughput and residence.

    A tour is one barrier release cycle in ``barrier`` mode and ``p`` repair
    completions otherwise.  The first ``warmup`` tours are discarded.  The
    optional ``observer`` is called after every event with the current time
    and a dict of machine counts by state.
    """
    p = config.p
    c = config.state_dependence_c
    mode = config.mode
    barrier = mode == "barrier"
    intermittent = mode == "intermittent"
    max_events = config.max_events or 64 * config.cycles * p + 1024

    root = np.random.SeedSequence(config.seed)
    up_draw = [
        config.uptime_dist.stream(np.random.SeedSequence(root.entropy, spawn_key=(i, 0))).__next__
        for i in range(p)
    ]
    svc_draw = [
        config.service_dist.stream(np.random.SeedSequence(root.entropy, spawn_key=(i, 1))).__next__
        for i in range(p)
    ]

    state = [_UP] * p
    version = [0] * p
    fail_at = [0.0] * p
    residual = [0.0] * p
    up: set[int] = set()
    suspended: list[int] = []
    queue: deque[int] = deque()
    heap: list[tuple[float, int, int, int]] = []
    push, pop = heapq.heappush, heapq.heappop

    n_up = p
    n_station = 0  # queued + in service
    n_held = 0
    busy = False
    now = 0.0
    last = 0.0
    notup_area = 0.0

    completions = 0
    tours = 0
    tour_completions = 0
    tour_all_down = False
    tour_end_times: list[float] = []
    tour_flags: list[bool] = []
    mark_time = 0.0
    mark_area = 0.0
    mark_completions = 0
    marked = config.warmup == 0

    def start_up(i: int, duration: float) -> None:
        state[i] = _UP
        up.add(i)
        t = now + duration
        fail_at[i] = t
        push(heap, (t, i, _FAIL, version[i]))

    def counts() -> dict:
        return {
            "up": n_up,
            "queued": len(queue),
            "in_service": 1 if busy else 0,
            "suspended_or_held": n_held + len(suspended),
        }

    for i in range(p):
        start_up(i, up_draw[i]())

    events = 0
    while tours < config.cycles:
        if not heap:
            raise SimulationError("event list exhausted")
        t, i, kind, ver = pop(heap)
        if kind == _FAIL and ver != version[i]:
            continue
        events += 1
        if events > max_events:
            raise SimulationError(f"event budget of {max_events} exceeded")
        notup_area += (t - last) * (p - n_up)
        now = last = t

        if kind == _FAIL:
            up.discard(i)
            n_up -= 1
            state[i] = _QUEUED
            queue.append(i)
            n_station += 1
            if n_station == p:
                tour_all_down = True
        else:
            busy = False
            n_station -= 1
            completions += 1
            tour_completions += 1
            if barrier:
                state[i] = _HELD
                n_held += 1
                if n_held == p:
                    n_held = 0
                    tours += 1
                    tour_end_times.append(now)
                    tour_flags.append(tour_all_down)
                    tour_all_down = False
                    tour_completions = 0
                    n_up = p
                    for j in range(p):
                        start_up(j, up_draw[j]())
            elif intermittent and queue:
                state[i] = _SUSPENDED
                residual[i] = up_draw[i]()
                suspended.append(i)
            else:
                n_up += 1
                start_up(i, up_draw[i]())
                if intermittent and suspended:
                    n_up += len(suspended)
                    for j in sorted(suspended):
                        start_up(j, residual[j])
                    suspended.clear()
            if not barrier and tour_completions == p:
                tours += 1
                tour_end_times.append(now)
                tour_flags.append(tour_all_down)
                tour_all_down = n_station == p
                tour_completions = 0
            if tours == config.warmup and tour_completions == 0 and not marked:
                marked = True
                mark_time, mark_area, mark_completions = now, notup_area, completions

        # start service only once every event at this instant has been applied,
        # so simultaneous arrivals all see the same station population
        while heap and heap[0][2] == _FAIL and heap[0][3] != version[heap[0][1]]:
            pop(heap)
        if not busy and queue and (not heap or heap[0][0] > now):
            j = queue.popleft()
            state[j] = _SERVICE
            busy = True
            if intermittent and up:
                for k in up:
                    residual[k] = fail_at[k] - now
                    version[k] += 1
                    state[k] = _SUSPENDED
                    suspended.append(k)
                n_up -= len(up)
                up.clear()
            stretch = 1.0 + (p - n_up - 1) * c if c else 1.0
            push(heap, (now + svc_draw[j]() * stretch, j, _DONE, 0))

        if observer is not None:
            observer(now, counts())

    return _summarize(
        config,
        tour_end_times,
        tour_flags,
        mark_time,
        mark_area,
        mark_completions,
        now,
        notup_area,
        completions,
    )


def _summarize(config, tour_end_times, tour_flags, mark_time, mark_area, mark_completions,
               end_time, notup_area, completions) -> SimOutcome:
    p = config.p
    used = config.cycles - config.warmup
    measured_completions = completions - mark_completions
    elapsed = end_time - mark_time
    x_hat = measured_completions / elapsed
    r_hat = (notup_area - mark_area) / measured_completions

    ends = np.asarray(tour_end_times[config.warmup:])
    starts = np.concatenate(([mark_time], ends[:-1]))
    n_batches = min(config.batches, used)
    batch_x = []
    for idx in np.array_split(np.arange(used), n_batches):
        duration = ends[idx[-1]] - starts[idx[0]]
        batch_x.append(len(idx) * p / duration)
    batch_x = np.asarray(batch_x)
    if n_batches >= 2:
        sem = batch_x.std(ddof=1) / math.sqrt(n_batches)
        half = float(stats.t.ppf(0.975, n_batches - 1) * sem)
    else:
        half = math.inf

    flags = tour_flags[config.warmup:]
    return SimOutcome(
        x_hat=x_hat,
        r_hat=r_hat,
        ci_halfwidth=half,
        analytic_reference=config.analytic_reference(),
        tours_used=used,
        completions=measured_completions,
        elapsed=elapsed,
        all_down_fraction=sum(flags) / len(flags),
        serial_time_per_tour=r_hat,
        batch_x=tuple(batch_x.tolist()),
    )


_SWEEP_FIELDS = ("service_dist", "uptime_dist", "mode", "state_dependence_c", "cycles",
                 "warmup", "seed", "batches", "max_events")


def sweep(configs: list[SimConfig], max_workers: int | None = None) -> list[SimOutcome]:
    """Run configurations that differ only in ``p``; results are ordered by ``p``.

    With ``max_workers`` > 1 the runs execute in separate processes; results
    are identical to a sequential sweep.
    """
    if not configs:
        return []
    ref = configs[0]
    for cfg in configs[1:]:
        for name in _SWEEP_FIELDS:
            if getattr(cfg, name) != getattr(ref, name):
                raise ConfigError(f"sweep configs differ in {name!r}; only p may vary")
    ordered = sorted(configs, key=lambda cfg: cfg.p)
    if max_workers and max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(run_sim, ordered))
    return [run_sim(cfg) for cfg in ordered]


def sweep_p(base: SimConfig, ps, max_workers: int | None = None) -> list[SimOutcome]:
    return sweep([replace(base, p=int(p)) for p in ps], max_workers=max_workers)
