"""Scalability modeling: USL, Amdahl and Gustafson laws, the machine-repairman
queue they derive from, a repairman simulator, and parameter regression."""

__version__ = "0.1.0"

from .models import (  # noqa: E402
    DomainError,
    LatencyParams,
    ModelParams,
    NoFiniteMaximum,
    amdahl_asymptote,
    amdahl_speedup,
    gustafson_speedup,
    latency_pairwise,
    latency_two_param,
    simplified_extrema_check,
    usl_capacity,
    usl_pstar,
)
from .queueing import (  # noqa: E402
    QueueParams,
    duality_paths,
    exact_repairman,
    gustafson_from_queue,
    markov_serial_fraction,
    serial_fraction,
    service_ratio,
    state_dependent_residence,
    synchronous_throughput,
    usl_from_queue,
)
from .fitting import FitResult, ThroughputSample, fit, fit_usl, normalize, predict, select_model  # noqa: E402
from .simulator import Dist, SimConfig, SimOutcome, run_sim, sweep  # noqa: E402
