from dataclasses import replace

import numpy as np
import pytest

from uslkit.models import amdahl_speedup
from uslkit.queueing import QueueParams, exact_repairman, usl_from_queue
from uslkit.simulator import (
    MODES,
    ConfigError,
    Dist,
    SimConfig,
    SimulationError,
    run_sim,
    sweep,
    sweep_p,
)

EXP1 = Dist("exponential", 1.0)
EXP9 = Dist("exponential", 9.0)
DET1 = Dist("deterministic", 1.0)
DET9 = Dist("deterministic", 9.0)


def test_dist_parse():
    assert Dist.parse("exp:1") == Dist("exponential", 1.0)
    assert Dist.parse("det:9") == Dist("deterministic", 9.0)
    assert Dist.parse("lognormal:9:0.5") == Dist("lognormal", 9.0, 0.5)
    assert str(Dist.parse("lognormal:9:0.5")) == "lognormal:9:0.5"
    for bad in ["gamma:1", "exp", "exp:x", "exp:-1", "lognormal:0:1", "exp:1:2:3"]:
        with pytest.raises(ConfigError):
            Dist.parse(bad)


@pytest.mark.parametrize("dist", [Dist("exponential", 2.5), Dist("lognormal", 2.5, 0.7)])
def test_dist_stream_moments(dist):
    it = dist.stream(np.random.SeedSequence(1))
    draws = np.array([next(it) for _ in range(200_000)])
    assert draws.mean() == pytest.approx(2.5, rel=0.01)
    cv = 1.0 if dist.kind == "exponential" else 0.7
    assert draws.std() / draws.mean() == pytest.approx(cv, rel=0.03)


@pytest.mark.parametrize("kwargs", [
    dict(p=0),
    dict(mode="bursty"),
    dict(cycles=5, warmup=5),
    dict(warmup=-1),
    dict(service_dist=Dist("deterministic", 0.0)),
    dict(state_dependence_c=-0.5),
    dict(seed=-1),
    dict(batches=1),
])
def test_config_errors(kwargs):
    base = dict(p=2, service_dist=EXP1, uptime_dist=EXP9)
    base.update(kwargs)
    with pytest.raises(ConfigError):
        SimConfig(**base)


def test_event_budget_overflow():
    with pytest.raises(SimulationError):
        run_sim(SimConfig(4, EXP1, EXP9, cycles=1000, max_events=100))


@pytest.mark.parametrize("mode", MODES)
def test_determinism(mode):
    cfg = SimConfig(5, EXP1, Dist("lognormal", 9.0, 1.5), mode=mode, cycles=3000, seed=123,
                    state_dependence_c=0.05)
    assert run_sim(cfg) == run_sim(cfg)
    assert run_sim(cfg) != run_sim(replace(cfg, seed=124))


@pytest.mark.parametrize("mode", MODES)
@pytest.mark.parametrize("uptime", [EXP9, DET9, Dist("lognormal", 4.0, 2.0)])
def test_conservation(mode, uptime):
    cfg = SimConfig(6, EXP1, uptime, mode=mode, cycles=400, seed=5, state_dependence_c=0.1)
    seen = []

    def observe(t, counts):
        seen.append((t, counts))
        assert sum(counts.values()) == 6
        assert counts["in_service"] in (0, 1)
        assert all(v >= 0 for v in counts.values())

    run_sim(cfg, observe)
    times = [t for t, _ in seen]
    assert times == sorted(times) and len(seen) > 400


def test_single_machine_modes_coincide():
    outs = [run_sim(SimConfig(1, EXP1, EXP9, mode=mode, cycles=5000, seed=9)) for mode in MODES]
    assert outs[0] == outs[1] == outs[2]


def test_per_machine_streams_independent_of_p():
    # machine 0 in a 1-machine barrier run draws the same first up time as in a 3-machine run
    a, b = [], []
    run_sim(SimConfig(1, EXP1, EXP9, mode="barrier", cycles=1, seed=77), lambda t, c: a.append(t))
    run_sim(SimConfig(3, EXP1, EXP9, mode="barrier", cycles=1, seed=77), lambda t, c: b.append(t))
    assert a[0] in b


def test_asynchronous_single_machine():
    out = run_sim(SimConfig(1, EXP1, EXP9, cycles=100_000, seed=1))
    assert abs(out.x_hat - 0.1) <= out.ci_halfwidth
    assert out.tours_used == 100_000


def test_asynchronous_sweep_matches_exact_solution():
    outs = sweep_p(SimConfig(1, EXP1, EXP9, cycles=20_000, seed=42), [8, 1, 4, 2])
    exact = exact_repairman(QueueParams(1.0, 9.0), 8)
    for out, p in zip(outs, [1, 2, 4, 8]):
        assert out.analytic_reference == exact.throughput(p)
        # three half-widths keeps the joint miss rate over four runs negligible
        assert abs(out.x_hat - out.analytic_reference) <= 3 * out.ci_halfwidth
        assert out.r_hat == pytest.approx(exact.residence(p), rel=0.03)


def test_barrier_deterministic_is_exact():
    for p in (1, 3, 10):
        out = run_sim(SimConfig(p, DET1, DET9, mode="barrier", cycles=500, seed=0))
        assert out.x_hat == pytest.approx(p / (p + 9.0), rel=1e-12)
        assert out.r_hat == pytest.approx(p * 1.0, rel=1e-12)
        assert out.all_down_fraction == 1.0


def test_barrier_with_state_dependence_matches_synchronous_residence():
    p, c = 6, 0.2
    out = run_sim(SimConfig(p, DET1, DET9, mode="barrier", cycles=200, state_dependence_c=c))
    qp = QueueParams(1.0, 9.0, c)
    assert out.x_hat == pytest.approx(usl_from_queue(qp, p) / (1.0 + 9.0), rel=1e-12)


def test_barrier_bounded_by_asynchronous():
    for p in (2, 5, 10):
        a = run_sim(SimConfig(p, EXP1, DET9, mode="asynchronous", cycles=5000, seed=3))
        b = run_sim(SimConfig(p, EXP1, DET9, mode="barrier", cycles=5000, seed=3))
        assert b.x_hat <= a.x_hat + a.ci_halfwidth + b.ci_halfwidth


def test_intermittent_reproduces_amdahl_with_general_uptime():
    ps = range(1, 33)
    outs = sweep_p(SimConfig(1, EXP1, Dist("lognormal", 9.0, 1.0), mode="intermittent",
                             cycles=1000, seed=42), ps)
    x1 = outs[0].x_hat
    for out, p in zip(outs, ps):
        assert out.x_hat / x1 == pytest.approx(amdahl_speedup(0.1, p), rel=0.05)


def test_intermittent_serial_time_per_tour():
    for p in (4, 16):
        out = run_sim(SimConfig(p, EXP1, Dist("lognormal", 9.0, 2.0), mode="intermittent", cycles=3000, seed=8))
        assert out.serial_time_per_tour == pytest.approx(p * 1.0, rel=0.05)


def test_intermittent_state_dependent_matches_usl():
    p, c = 8, 0.05
    out = run_sim(SimConfig(p, EXP1, EXP9, mode="intermittent", cycles=20_000, state_dependence_c=c, seed=4))
    expected = usl_from_queue(QueueParams(1.0, 9.0, c), p) / 10.0
    assert out.analytic_reference == pytest.approx(expected, rel=1e-14)
    assert out.rel_error() < 0.01


def test_asynchronous_state_dependent_has_no_reference():
    out = run_sim(SimConfig(3, EXP1, EXP9, cycles=500, state_dependence_c=0.1))
    assert out.analytic_reference is None and out.rel_error() is None and not out.within_ci()


def test_paradox_small():
    asyn = run_sim(SimConfig(10, EXP1, DET9, cycles=2001, warmup=1, seed=42))
    barrier = run_sim(SimConfig(10, EXP1, DET9, mode="barrier", cycles=2000, seed=42))
    assert asyn.all_down_fraction < 0.01
    assert barrier.all_down_fraction == 1.0


def test_warmup_discards_tours():
    cfg = SimConfig(3, EXP1, EXP9, cycles=1000, warmup=200, seed=2)
    out = run_sim(cfg)
    assert out.tours_used == 800
    assert out.completions == 800 * 3
    assert out.ci_halfwidth >= 0


def test_sweep_requires_matching_configs():
    a = SimConfig(1, EXP1, EXP9, cycles=100)
    with pytest.raises(ConfigError):
        sweep([a, replace(a, p=2, seed=7)])
    assert sweep([]) == []


def test_parallel_sweep_matches_sequential():
    base = SimConfig(1, EXP1, EXP9, mode="intermittent", cycles=300, seed=11)
    assert sweep_p(base, [3, 1, 2], max_workers=2) == sweep_p(base, [1, 2, 3])
