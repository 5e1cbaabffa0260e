import numpy as np
import pytest

from syncflow import (
    build_incidence,
    build_laplacian,
    cycle_basis,
    cycle_norm_bound_check,
    helmholtz_decompose,
    k_inner,
    k_norm,
    laplacian_pinv_apply,
    projectors,
    resistance_distance,
)

from conftest import make_net, random_network


def triangle(k=(1.0, 1.0, 1.0)):
    return make_net([0, 1, 2], [1, 2, 0], k, [0.0, 0.0, 0.0])


def test_incidence_and_laplacian():
    net = triangle()
    inc = build_incidence(net)
    assert inc.shape == (3, 3)
    assert np.all(inc.sum(axis=0) == 0)
    lap = build_laplacian(net)
    assert np.allclose(lap, lap.T)
    assert np.allclose(lap @ np.ones(3), 0.0)
    assert np.allclose(lap, inc @ np.diag(net.couplings) @ inc.T)


def test_laplacian_pinv_matches_numpy():
    rng = np.random.default_rng(1)
    for _ in range(20):
        net = random_network(rng, int(rng.integers(3, 12)), extra_edges=2)
        lap = build_laplacian(net)
        v = rng.normal(size=net.node_count)
        v -= v.mean()
        expected = np.linalg.pinv(lap) @ v
        got = laplacian_pinv_apply(net, v)
        assert np.allclose(got, expected, atol=1e-10)


def test_projector_identities_uniform_triangle():
    net = triangle()
    pi_dir, pi_cycle = projectors(net)
    # uniform triangle: cycle projector is the rank-one uniform average
    assert np.allclose(pi_cycle, np.full((3, 3), 1.0 / 3.0) *
                       np.array([[1, 1, 1], [1, 1, 1], [1, 1, 1]]))
    assert np.allclose(pi_dir + pi_cycle, np.eye(3))
    assert np.allclose(pi_dir @ pi_dir, pi_dir, atol=1e-12)
    assert np.allclose(pi_cycle @ pi_cycle, pi_cycle, atol=1e-12)


def test_projectors_are_k_orthogonal():
    rng = np.random.default_rng(2)
    for _ in range(10):
        net = random_network(rng, 8, extra_edges=3)
        pi_dir, pi_cycle = projectors(net)
        x = rng.normal(size=net.edge_count)
        y = rng.normal(size=net.edge_count)
        assert abs(k_inner(net, pi_dir @ x, pi_cycle @ y)) < 1e-10
        # cycle projector annihilates potential flows K E^T v
        inc = build_incidence(net)
        pot = net.couplings * (inc.T @ rng.normal(size=net.node_count))
        assert np.max(np.abs(pi_cycle @ pot)) < 1e-10


@pytest.mark.parametrize("kind", ["fundamental-bfs", "minimal"])
def test_cycle_basis_spans_kernel(kind):
    rng = np.random.default_rng(3)
    for _ in range(15):
        net = random_network(rng, int(rng.integers(4, 12)), extra_edges=3)
        basis = cycle_basis(net, kind=kind)
        assert basis.count == net.cycle_count
        inc = build_incidence(net)
        assert np.max(np.abs(inc @ basis.matrix)) == 0
        if basis.count:
            assert np.linalg.matrix_rank(basis.matrix) == basis.count


def test_minimal_basis_no_longer_than_fundamental():
    rng = np.random.default_rng(4)
    for _ in range(10):
        net = random_network(rng, 10, extra_edges=3)
        fund = cycle_basis(net, kind="fundamental-bfs")
        mini = cycle_basis(net, kind="minimal")
        assert mini.lengths.sum() <= fund.lengths.sum()


def test_cycle_basis_parallel_edges():
    net = make_net([0, 0], [1, 1], [1.0, 2.0], [0.0, 0.0])
    basis = cycle_basis(net, kind="minimal")
    assert basis.count == 1
    assert sorted(np.abs(basis.matrix[:, 0])) == [1, 1]


def test_unknown_basis_kind():
    net = triangle()
    with pytest.raises(ValueError):
        cycle_basis(net, kind="nope")


def test_resistance_distance_triangle():
    # triangle of unit couplings: series/parallel gives 2/3 across any edge
    net = triangle()
    for e in range(3):
        assert resistance_distance(net, e) == pytest.approx(2.0 / 3.0)


def test_resistance_distance_matches_projector_diagonal():
    # omega_a = (1 - (Pi_cycle)_aa) / K_a
    rng = np.random.default_rng(5)
    net = random_network(rng, 9, extra_edges=3)
    _, pi_cycle = projectors(net)
    for e in range(net.edge_count):
        omega = resistance_distance(net, e)
        expected = (1.0 - pi_cycle[e, e]) / net.couplings[e]
        assert omega == pytest.approx(expected, abs=1e-10)


def test_helmholtz_decomposition():
    rng = np.random.default_rng(6)
    for _ in range(10):
        net = random_network(rng, 8, extra_edges=3)
        inc = build_incidence(net)
        f = rng.normal(size=net.edge_count)
        f_dir, f_cycle = helmholtz_decompose(net, f)
        assert np.allclose(f_dir + f_cycle, f, atol=1e-10)
        assert np.max(np.abs(inc @ f_cycle)) < 1e-9
        assert abs(k_inner(net, f_dir, f_cycle)) < 1e-9


def test_k_norm_and_inner():
    net = triangle((1.0, 2.0, 4.0))
    x = np.array([1.0, 2.0, 2.0])
    assert k_inner(net, x, x) == pytest.approx(1.0 + 2.0 + 1.0)
    assert k_norm(net, x) == pytest.approx(np.sqrt(4.0))


def test_cycle_norm_bound_on_cycle_flows():
    rng = np.random.default_rng(7)
    for _ in range(20):
        net = random_network(rng, 8, extra_edges=3)
        _, pi_cycle = projectors(net)
        f_c = pi_cycle @ rng.normal(size=net.edge_count)
        e = int(rng.integers(0, net.edge_count))
        lhs, rhs, holds = cycle_norm_bound_check(net, f_c, e)
        assert holds
        assert lhs >= rhs - 1e-9
