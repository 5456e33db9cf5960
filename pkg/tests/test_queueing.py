import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import birth_death_throughput
from uslkit.models import DomainError, ModelParams, amdahl_speedup, gustafson_speedup, usl_capacity
from uslkit.queueing import (
    QueueParams,
    duality_paths,
    exact_repairman,
    gustafson_equivalence,
    gustafson_from_queue,
    markov_serial_fraction,
    serial_fraction,
    service_ratio,
    state_dependent_residence,
    synchronous_throughput,
    usl_equivalence,
    usl_from_queue,
)

SZ_PAIRS = [(0.1, 0.0), (0.1, 5.0), (1.0, 0.0), (1.0, 9.0), (2.0, 6.0), (5.0, 99.0), (0.3, 0.01)]


def test_params_validation():
    QueueParams(1.0, 0.0)
    for bad in [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.5), (1.0, 1.0, -0.1)]:
        with pytest.raises(DomainError):
            QueueParams(*bad)


def test_exact_repairman_examples():
    sol = exact_repairman(QueueParams(1.0, 0.0), 1)
    assert sol.throughput() == 1.0 and sol.residence() == 1.0
    assert exact_repairman(QueueParams(1.0, 9.0), 1).throughput() == pytest.approx(0.1, rel=1e-15)
    assert exact_repairman(QueueParams(1.0, 9.0), 4).throughput() == pytest.approx(
        birth_death_throughput(1.0, 9.0, 4), rel=1e-10)


@pytest.mark.parametrize("s, z", SZ_PAIRS)
def test_exact_repairman_matches_markov_chain(s, z):
    sol = exact_repairman(QueueParams(s, z), 12)
    for n in range(1, 13):
        assert sol.throughput(n) == pytest.approx(birth_death_throughput(s, z, n), rel=1e-10)


@pytest.mark.parametrize("s, z", SZ_PAIRS)
def test_solution_invariants(s, z):
    sol = exact_repairman(QueueParams(s, z), 300)
    n = np.arange(1, 301)
    assert np.all(sol.x <= np.minimum(1.0 / s, n / (s + z)) * (1 + 1e-15))
    assert np.all(sol.r >= s) and sol.r[0] == s
    np.testing.assert_allclose(sol.q, sol.x * sol.r, rtol=1e-12)
    # n = Q + Z X
    assert np.max(np.abs(n - sol.q - z * sol.x) / n) <= 1e-12
    assert sol.round_trip(5) == pytest.approx(5 / sol.throughput(5), rel=1e-12)


def test_solution_is_immutable():
    sol = exact_repairman(QueueParams(1.0, 9.0), 3)
    with pytest.raises(ValueError):
        sol.x[0] = 2.0


def test_exact_rejects_bad_population():
    with pytest.raises(DomainError):
        exact_repairman(QueueParams(1.0, 9.0), 0)
    with pytest.raises(DomainError):
        exact_repairman(QueueParams(1.0, 9.0), 2.5)


@pytest.mark.parametrize("s, z, p, expected", [(1.0, 0.0, 8, 1.0), (1.0, 9.0, 1, 0.1), (1.0, 9.0, 10, 10 / 19)])
def test_synchronous_throughput(s, z, p, expected):
    assert synchronous_throughput(QueueParams(s, z), p) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("s, z", SZ_PAIRS)
def test_synchronous_is_lower_bound(s, z):
    qp = QueueParams(s, z)
    sol = exact_repairman(qp, 256)
    sync = synchronous_throughput(qp, np.arange(1, 257))
    assert np.all(sync <= sol.x * (1 + 1e-14))
    assert sync[0] == pytest.approx(sol.x[0], rel=1e-15)


def test_serial_fraction_and_service_ratio():
    assert serial_fraction(QueueParams(1.0, 9.0)) == pytest.approx(0.1, rel=1e-15)
    assert serial_fraction(QueueParams(1.0, 0.0)) == 1.0
    assert serial_fraction(QueueParams(0.5, 0.5)) == 0.5
    assert serial_fraction(QueueParams(1e-12, 1.0)) < 1e-11
    assert service_ratio(QueueParams(1.0, 9.0)) == 9.0
    assert service_ratio(QueueParams(1.0, 0.0)) == 0.0
    assert service_ratio(QueueParams(2.0, 6.0)) == 3.0


def test_serial_fraction_ignores_state_dependence():
    assert all(serial_fraction(QueueParams(1.0, 9.0, c)) == serial_fraction(QueueParams(1.0, 9.0))
               for c in (0.0, 0.3, 50.0))


@pytest.mark.parametrize("s, z, p, expected", [(1.0, 9.0, 1, 1.0), (1.0, 9.0, 11, 5.5), (1.0, 0.0, 64, 1.0)])
def test_duality_examples(s, z, p, expected):
    eq = duality_paths(QueueParams(s, z), p)
    assert eq.lhs == pytest.approx(expected, rel=1e-14)
    assert eq.rhs == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("s, c, p, expected", [(1.0, 0.0, 5, 5.0), (1.0, 0.1, 4, 5.2), (2.0, 0.5, 1, 2.0)])
def test_state_dependent_residence(s, c, p, expected):
    assert state_dependent_residence(QueueParams(s, 3.0, c), p) == pytest.approx(expected, rel=1e-15)


def test_usl_from_queue_examples():
    assert usl_from_queue(QueueParams(1.0, 9.0), 11) == pytest.approx(5.5, rel=1e-14)
    assert usl_from_queue(QueueParams(1.0, 9.0, 0.1), 10) == pytest.approx(
        usl_capacity(ModelParams(0.1, 0.01), 10), rel=1e-14)
    assert usl_from_queue(QueueParams(1.0, 9.0), 1) == 1.0


def test_kappa_may_exceed_one():
    qp = QueueParams(1.0, 1.0, 40.0)
    assert qp.kappa == 20.0
    assert usl_equivalence(qp, np.arange(1, 100)).rel_error <= 1e-12


def test_gustafson_from_queue_examples():
    assert gustafson_from_queue(QueueParams(1.0, 1.0), 4) == pytest.approx(2.5, rel=1e-15)
    assert gustafson_from_queue(QueueParams(1.0, 0.0), 100) == 1.0
    with pytest.raises(DomainError):
        gustafson_from_queue(QueueParams(0.0, 3.0), 4)


@pytest.mark.parametrize("la, lb, expected", [(1 / 9, 1.0, 0.1), (1.0, 1.0, 0.5), (1 / 6, 1 / 2, 0.25)])
def test_markov_serial_fraction(la, lb, expected):
    assert markov_serial_fraction(la, lb) == pytest.approx(expected, rel=1e-14)


def test_markov_serial_fraction_matches_queue_ratio():
    for s, z in [(1.0, 9.0), (2.0, 6.0), (0.3, 0.7)]:
        assert markov_serial_fraction(1 / z, 1 / s) == pytest.approx(serial_fraction(QueueParams(s, z)), rel=1e-14)
    with pytest.raises(DomainError):
        markov_serial_fraction(0.0, 1.0)


grid = st.tuples(st.sampled_from([0.1, 0.5, 1.0, 5.0]), st.sampled_from([0.0, 1.0, 9.0, 99.0]),
                 st.floats(0.0, 20.0))


@given(grid)
def test_main_identity_property(sz):
    s, z, c = sz
    qp = QueueParams(s, z, c)
    ps = np.arange(1, 1025)
    assert usl_equivalence(qp, ps).rel_error <= 1e-12


@given(grid, st.integers(1, 5000))
def test_corollaries(sz, p):
    s, z, _ = sz
    qp = QueueParams(s, z)
    assert usl_from_queue(qp, p) == pytest.approx(amdahl_speedup(qp.sigma, p), rel=1e-12)
    assert gustafson_equivalence(qp, p).rel_error <= 1e-12
    assert gustafson_from_queue(qp, p) == pytest.approx(gustafson_speedup(qp.sigma, p), rel=1e-12)
    paths = duality_paths(qp, p)
    assert paths.rel_error <= 1e-12


def test_theorem_grid_exhaustive():
    ps = np.arange(1, 1025)
    for s, z, c in itertools.product((0.1, 1.0, 5.0), (0.0, 1.0, 9.0, 99.0), (0.0, 0.01, 0.1, 1.0, 10.0)):
        assert usl_equivalence(QueueParams(s, z, c), ps).rel_error <= 1e-12
