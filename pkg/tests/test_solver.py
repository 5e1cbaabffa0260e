import numpy as np
import pytest

from syncflow import (
    Classification,
    EnumerationCapError,
    build_incidence,
    cycle_basis,
    enumerate_windings,
    find_all_normal_states,
    realpower_objective,
    recover_phases,
    solve_base,
    solve_winding,
    stability_check,
    winding_bounds,
    winding_vector,
)
from syncflow.experiments import ring_network

from conftest import (
    fixed_point_residual,
    make_net,
    phase_newton_oracle,
    random_network,
)


def test_two_node_exact():
    # p = K sin(theta_0 - theta_1) => f = p, phase gap arcsin(p / K)
    net = make_net([0], [1], [2.0], [1.0, -1.0])
    out = solve_base(net)
    assert out.classification is Classification.INTERIOR
    assert out.flows[0] == pytest.approx(1.0)
    gap = out.phases[0] - out.phases[1]
    assert gap == pytest.approx(np.arcsin(0.5))


def test_two_node_bifurcation_at_capacity():
    net = make_net([0], [1], [1.0], [1.0, -1.0])
    out = solve_base(net)
    assert out.classification is Classification.BIFURCATION
    assert out.flows[0] == pytest.approx(1.0)
    assert out.is_state


def test_two_node_infeasible():
    net = make_net([0], [1], [1.0], [1.5, -1.5])
    out = solve_base(net)
    assert out.classification is Classification.INFEASIBLE
    assert not out.certificate.feasible


def test_winding_bounds_and_enumeration():
    basis = cycle_basis(ring_network(9))
    assert list(winding_bounds(basis)) == [2]
    candidates = enumerate_windings(basis)
    assert len(candidates) == 5
    with pytest.raises(EnumerationCapError):
        enumerate_windings(basis, cap=4)


def test_ring5_multistability():
    res = find_all_normal_states(ring_network(5))
    assert sorted(res.states) == [(-1,), (0,), (1,)]
    expected = np.sin(2.0 * np.pi / 5.0)
    for z, out in res.states.items():
        assert out.classification is Classification.INTERIOR
        if z != (0,):
            assert np.allclose(np.abs(out.flows), expected, atol=1e-8)
        else:
            assert np.allclose(out.flows, 0.0, atol=1e-10)


def test_ring3_single_state():
    res = find_all_normal_states(ring_network(3))
    assert sorted(res.states) == [(0,)]


def test_solve_winding_reaches_requested_winding():
    net = ring_network(7)
    basis = cycle_basis(net)
    out = solve_winding(net, basis, np.zeros(7), np.array([1]))
    assert out.classification is Classification.INTERIOR
    z, residual = winding_vector(net, basis, out.flows)
    assert z == (1,)
    assert residual < 1e-8


def test_states_are_fixed_points_and_stable():
    rng = np.random.default_rng(30)
    for _ in range(15):
        net = random_network(rng, int(rng.integers(4, 12)), extra_edges=2,
                             target_loading=0.7)
        res = find_all_normal_states(net)
        for out in res.states.values():
            assert fixed_point_residual(net, out.flows) < 1e-8
            normal, eigvals = stability_check(net, out.phases)
            if out.classification is Classification.INTERIOR:
                assert normal
                assert np.sort(eigvals)[1] > 0.0
            inc = build_incidence(net)
            assert np.max(np.abs(
                net.couplings * np.sin(inc.T @ out.phases) - out.flows)
            ) < 1e-8


def test_matches_phase_space_oracle():
    rng = np.random.default_rng(31)
    checked = 0
    while checked < 20:
        net = random_network(rng, int(rng.integers(3, 10)), extra_edges=2,
                             target_loading=0.6)
        theta = phase_newton_oracle(net)
        if theta is None:
            continue
        out = solve_base(net)
        if out.classification is not Classification.INTERIOR:
            continue
        inc = build_incidence(net)
        f_oracle = net.couplings * np.sin(inc.T @ theta)
        assert np.max(np.abs(out.flows - f_oracle)) < 1e-7
        checked += 1


def test_recover_phases_gauges():
    net = ring_network(5)
    out = solve_base(net)
    zero_mean = recover_phases(net, out.flows, gauge="zero-mean")
    assert abs(zero_mean.mean()) < 1e-12
    slack = recover_phases(net, out.flows, gauge="slack")
    assert slack[0] == 0.0
    with pytest.raises(ValueError):
        recover_phases(net, out.flows, gauge="bogus")


def test_recover_phases_rejects_non_fixed_point():
    net = ring_network(5)
    bogus = np.array([0.3, -0.2, 0.1, 0.0, 0.25])  # balanced? no: not KCL
    with pytest.raises(ValueError):
        recover_phases(net, bogus)


def test_realpower_objective_ordering():
    # the exact flow minimizes the convex objective among balanced flows
    rng = np.random.default_rng(32)
    net = random_network(rng, 8, extra_edges=3, target_loading=0.6)
    basis = cycle_basis(net)
    out = solve_base(net, basis)
    assert out.classification is Classification.INTERIOR
    base = realpower_objective(net, out.flows)
    for _ in range(10):
        shift = basis.matrix @ rng.normal(scale=0.05, size=basis.count)
        trial = out.flows + shift
        if np.any(np.abs(trial) > net.couplings):
            continue
        assert realpower_objective(net, trial) >= base - 1e-12


def test_winding_rejected_outside_bounds():
    net = ring_network(5)
    basis = cycle_basis(net)
    with pytest.raises(ValueError):
        solve_winding(net, basis, np.zeros(5), np.array([2]))


def test_infeasible_network_has_no_states():
    net = make_net([0, 1], [1, 2], [1.0, 1.0], [2.0, 0.0, -2.0])
    res = find_all_normal_states(net)
    assert res.states == {}
    assert not res.certificate.feasible
