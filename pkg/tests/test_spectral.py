import numpy as np
import pytest

import percmix as pm
from percmix.errors import DomainError, InequalityViolationError
from percmix.fixtures import complete_graph, cycle_graph, full_box_cluster, single_edge
from percmix.spectral import distance_variance_lower_bound, spectral_gap, sweep_ordering


def cluster_chain(n, p=0.7, seed=0):
    return pm.build_chain(pm.largest_cluster(
        pm.sample_bond_config(pm.BoxSpec(2, n), p, seed)
    ))


def test_gap_two_state():
    res = spectral_gap(pm.build_chain(single_edge()))
    assert res.gap == pytest.approx(2.0, abs=1e-12)
    assert res.tau2 == pytest.approx(0.5, abs=1e-12)
    assert res.method == "dense"


def test_gap_four_cycle():
    res = spectral_gap(pm.build_chain(cycle_graph(4)))
    assert res.gap == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("m", [3, 5, 8])
def test_gap_complete_graph(m):
    res = spectral_gap(pm.build_chain(complete_graph(m)))
    assert res.gap == pytest.approx(m / (m - 1), abs=1e-10)


def test_gap_in_range_and_residual():
    ch = cluster_chain(8)
    res = spectral_gap(ch)
    assert 0 < res.gap <= 2
    assert res.residual < 1e-10


def test_dense_and_iterative_agree():
    for n, seed in ((5, 0), (8, 1), (10, 2)):
        ch = cluster_chain(n, p=1.0 if n == 5 else 0.7, seed=seed)
        assert ch.m >= 100
        dense = spectral_gap(ch)
        iterative = spectral_gap(ch, rtol=1e-12, dense_cap=10)
        assert iterative.method == "iterative"
        assert abs(dense.gap - iterative.gap) / dense.gap < 1e-8


def test_variance_bound_two_state():
    res = distance_variance_lower_bound(pm.build_chain(single_edge()))
    assert res.value == pytest.approx(0.25)
    assert res.exhaustive


def test_variance_bound_four_cycle():
    res = distance_variance_lower_bound(pm.build_chain(cycle_graph(4)))
    assert res.value == pytest.approx(0.5)


@pytest.mark.parametrize("m", [3, 4, 6])
def test_variance_bound_complete_graph(m):
    res = distance_variance_lower_bound(pm.build_chain(complete_graph(m)))
    assert res.value == pytest.approx((m - 1) / m**2)


def test_variance_bound_below_relaxation_time():
    for n, seed in ((5, 0), (7, 3), (9, 5)):
        ch = cluster_chain(n, seed=seed)
        var = distance_variance_lower_bound(ch).value
        tau2 = spectral_gap(ch).tau2
        assert var <= tau2 * (1 + 1e-8)


def test_variance_bound_sampled_sources():
    ch = cluster_chain(8)
    full = distance_variance_lower_bound(ch)
    sampled = distance_variance_lower_bound(ch, exhaustive_cap=10)
    assert not sampled.exhaustive
    assert sampled.value <= full.value + 1e-12
    assert sampled.value > 0


def test_sandwich_check_passes_fixtures():
    ch = pm.build_chain(single_edge())
    spec = spectral_gap(ch)
    rep = pm.sandwich_check(0.5, spec, ch.pi_min)
    assert rep.lower_slack == pytest.approx(0.0, abs=1e-12)
    assert rep.upper == pytest.approx(0.5 * (1 + 0.5 * np.log(2)))

    ch4 = pm.build_chain(cycle_graph(4))
    rep4 = pm.sandwich_check(1.0, spectral_gap(ch4), ch4.pi_min)
    assert rep4.upper == pytest.approx(1 + 0.5 * np.log(4))


def test_sandwich_check_detects_violation():
    ch = pm.build_chain(cycle_graph(4))
    spec = spectral_gap(ch)
    with pytest.raises(InequalityViolationError) as err:
        pm.sandwich_check(spec.tau2 / 2, spec, ch.pi_min)
    assert err.value.side == "lower"
    with pytest.raises(InequalityViolationError) as err:
        pm.sandwich_check(spec.tau2 * 100, spec, ch.pi_min)
    assert err.value.side == "upper"
    with pytest.raises(DomainError):
        pm.sandwich_check(1.0, spec, 0.0)


def test_sweep_ordering_deterministic():
    ch = cluster_chain(6)
    spec = spectral_gap(ch)
    o1 = sweep_ordering(ch, spec)
    o2 = sweep_ordering(ch, spectral_gap(ch))
    assert np.array_equal(o1, o2)
    assert sorted(o1.tolist()) == list(range(ch.m))
