"""Parity between the jitted kernel and the pure-python fallback."""

import numpy as np

from syncflow import cycle_basis, solve_linear
from syncflow import kernels

from conftest import random_network


def _instance(rng, loading=0.7):
    net = random_network(rng, int(rng.integers(4, 12)), extra_edges=3,
                         target_loading=loading)
    basis = cycle_basis(net)
    f0 = solve_linear(net).flows
    return net, basis, f0


def test_jit_and_python_kernels_agree():
    rng = np.random.default_rng(20)
    for _ in range(25):
        net, basis, f0 = _instance(rng)
        cycle_mat = basis.matrix.astype(np.float64)
        z = np.zeros(basis.count)
        res_a = kernels.newton_cycle(f0.copy(), cycle_mat, net.couplings,
                                     z, 1e-10, 200)
        res_b = kernels.newton_cycle_py(f0.copy(), cycle_mat, net.couplings,
                                        z, 1e-10, 200)
        assert res_a[4] == res_b[4]  # status
        assert np.allclose(res_a[1], res_b[1], atol=1e-9)  # flows


def test_kernel_converges_on_easy_instances():
    rng = np.random.default_rng(21)
    for _ in range(25):
        net, basis, f0 = _instance(rng, loading=0.5)
        amps, f, gnorm, _, status = kernels.newton_cycle(
            f0.copy(), basis.matrix.astype(np.float64), net.couplings,
            np.zeros(basis.count), 1e-10, 200)
        assert status == kernels.STATUS_CONVERGED
        assert gnorm <= 1e-10
        assert np.all(np.abs(f) < net.couplings)
        assert np.allclose(f, f0 + basis.matrix @ amps)


def test_kernel_flags_boundary_windings():
    # a short ring cannot realize a winding beyond its bound; pushing the
    # target cycle sum beyond 2*pi ends pinned at the line limits
    tails = np.array([0, 1, 2], dtype=np.int64)
    heads = np.array([1, 2, 0], dtype=np.int64)
    couplings = np.ones(3)
    cycle_mat = np.ones((3, 1))
    f0 = np.zeros(3)
    _, f, _, _, status = kernels.newton_cycle(
        f0, cycle_mat, couplings, np.array([2.0 * np.pi]), 1e-10, 200)
    assert status == kernels.STATUS_PINNED
    assert np.max(np.abs(f)) >= 1.0 - 1e-6


def test_numba_flag_reflects_environment():
    import os
    expected = os.environ.get("SYNCFLOW_NUMBA", "1") != "0"
    try:
        import numba  # noqa: F401
    except ImportError:
        expected = False
    assert kernels.NUMBA_ENABLED == expected
