import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctqw import graphs, krylov, search
from ctqw.errors import (
    ConstraintUnsatisfiable,
    InvalidNode,
    InvalidParameter,
    UnsupportedFamily,
)

from conftest import random_connected_graph


def spec(family, **params):
    return graphs.FamilySpec(family, params)


def test_search_hamiltonian_examples():
    np.testing.assert_array_equal(search.search_hamiltonian(graphs.path(2), 0, 1.0), [[-1, -1], [-1, 0]])
    H = search.search_hamiltonian(graphs.complete(5), 2, 1e-12)
    assert np.linalg.matrix_rank(H, tol=1e-6) == 1
    N, gamma = 20, 0.05
    b = krylov.lanczos(search.search_hamiltonian(graphs.complete(N), 0, gamma), krylov.basis_state(N, 0))
    T = krylov.reduced_hamiltonian(b)
    assert T.shape == (2, 2)
    assert abs(T[0, 0] + 1) < 1e-12
    assert abs(T[1, 1] + gamma * (N - 2)) < 1e-12
    # Lanczos makes couplings positive; the sign is absorbed into the basis
    assert abs(abs(T[0, 1]) - gamma * math.sqrt(N - 1)) < 1e-12
    with pytest.raises(InvalidNode):
        search.search_hamiltonian(graphs.path(2), 2, 1.0)
    with pytest.raises(InvalidParameter):
        search.search_hamiltonian(graphs.path(2), 0, 0.0)


def test_operator_matches_dense():
    g = graphs.remove_links(graphs.complete(12), [(1, 2)])
    x = np.random.default_rng(1).normal(size=12)
    np.testing.assert_allclose(search.search_operator(g, 3, 0.1) @ x, search.search_hamiltonian(g, 3, 0.1) @ x)


def test_predict_gamma_examples():
    assert search.predict_gamma(spec("complete", n=1024)) == 1 / 1024
    assert search.predict_gamma(spec("complete_bipartite", m1=50, m2=50), "partition1") == pytest.approx(2 / 100)
    assert search.predict_gamma(spec("star", n=400), "leaf") == pytest.approx(1 / 20)
    with pytest.raises(UnsupportedFamily):
        search.predict_gamma(spec("hypercube", d=3))


def test_predict_T_P_examples():
    T, P = search.predict_T_P(spec("complete", n=10_000))
    assert T == pytest.approx(50 * math.pi) and P == 1.0
    T, P = search.predict_T_P(spec("complete_bipartite", m1=900, m2=100), "partition1")
    assert T == pytest.approx(66.64, abs=5e-3) and P == pytest.approx(0.8)
    T, P = search.predict_T_P(spec("star", n=400), "leaf")
    assert T == pytest.approx(math.pi * math.sqrt(200)) and P == 0.5
    with pytest.raises(UnsupportedFamily):
        search.predict_T_P(spec("path", n=5))


def test_two_phase_runtime():
    assert search.expected_runtime_two_phase(spec("complete_bipartite", m1=50, m2=50)) == pytest.approx(44.43, abs=5e-3)
    # star limit: sqrt(a(1-a)) -> 0
    N = 10**6
    val = search.expected_runtime_two_phase(spec("complete_bipartite", m1=N - 1, m2=1))
    assert val == pytest.approx(math.pi * math.sqrt(N), rel=1e-2)
    # a = 0.75: 2 sqrt(0.1875) = sqrt(3)/2, so pi * 20 * sqrt(1 + sqrt(3)/2)
    val = search.expected_runtime_two_phase(spec("complete_bipartite", m1=300, m2=100))
    assert val == pytest.approx(math.pi * 20 * math.sqrt(1 + math.sqrt(3) / 2), rel=1e-12)
    assert val == pytest.approx(85.83, abs=5e-3)


def test_run_search_complete_64():
    N = 64
    T0 = math.pi * math.sqrt(N) / 2
    res = search.run_search(search.SearchProblem(graphs.complete(N), 5, 1 / N), 3 * T0, T0 / 500)
    assert abs(res.T_peak - 4 * math.pi) <= 0.05 * 4 * math.pi
    assert res.P_peak >= 0.95
    assert res.reduced_dim == 2 and res.initial_residual < 1e-12 and res.warning is None
    assert np.all((res.trace.values >= 0) & (res.trace.values <= 1))
    assert res.trace.to_csv().splitlines()[0] == "t,p"


def test_run_search_star_centre():
    # Solution at the centre, gamma from the bipartite formula.
    N = 400
    s = spec("star", n=N)
    T0 = math.pi / 2
    res = search.run_search(
        search.SearchProblem(graphs.build(s), N - 1, search.predict_gamma(s, "center")), 3 * T0, T0 / 500
    )
    assert abs(res.T_peak / T0 - 1) <= 0.05
    assert res.P_peak >= 0.95


def test_run_search_balanced_bipartite():
    s = spec("complete_bipartite", m1=512, m2=512)
    T0, _ = search.predict_T_P(s, "partition1")
    res = search.run_search(search.SearchProblem(graphs.build(s), 0, search.predict_gamma(s, "partition1")), 3 * T0, T0 / 500)
    assert res.P_peak >= 0.99
    assert res.reduced_dim == 3


def test_star_start_at_centre():
    N = 400
    g = graphs.star(N)
    T0 = math.pi * math.sqrt(N / 2)
    init = np.zeros(N, complex)
    init[N - 1] = 1
    res = search.run_search(search.SearchProblem(g, 0, 1 / math.sqrt(N), init), 3 * T0, T0 / 500)
    assert res.P_peak >= 0.45


def test_run_search_records_residual_warning():
    # a leaf state is not in the subspace of another leaf
    g = graphs.star(6)
    init = np.zeros(6, complex)
    init[1] = 1
    res = search.run_search(search.SearchProblem(g, 0, 0.3, init), 20.0, 0.1)
    assert res.reduced_dim < 6
    assert res.initial_residual > 1e-8 and res.warning is not None
    times = res.trace.times
    np.testing.assert_allclose(res.trace.values, search.full_space_trace(search.SearchProblem(g, 0, 0.3, init), times), atol=1e-10)


def test_run_search_validation():
    p = search.SearchProblem(graphs.complete(4), 0, 0.25)
    with pytest.raises(InvalidParameter):
        search.run_search(p, 10.0, 0.2)
    bad = search.SearchProblem(graphs.complete(4), 0, 0.25, np.ones(4))
    with pytest.raises(InvalidParameter):
        search.run_search(bad, 10.0, 0.01)


def test_find_peak_skips_ripples():
    t = np.linspace(0, 10, 2001)
    slow = np.sin(t / 2) ** 2
    values = 0.9 * slow + 0.05 * np.sin(40 * t) ** 2
    k = search.find_peak(t, values)
    assert abs(t[k] - math.pi) < 0.1


def test_gamma_scan():
    N = 64
    T0 = math.pi * math.sqrt(N) / 2
    grid = np.linspace(0.5 / N, 1.5 / N, 11)
    gamma, res = search.gamma_scan(graphs.complete(N), 0, grid, 3 * T0, T0 / 200)
    assert abs(gamma - 1 / N) <= (grid[1] - grid[0]) + 1e-15
    gamma, _ = search.gamma_scan(graphs.complete(N), 0, [0.02], 3 * T0, T0 / 200)
    assert gamma == 0.02
    with pytest.raises(InvalidParameter):
        search.gamma_scan(graphs.complete(N), 0, [], 3 * T0, T0 / 200)


def test_gamma_scan_star_leaf():
    N = 256
    T0 = math.pi * math.sqrt(N / 2)
    grid = [x / 16 for x in (0.6, 0.8, 1.0, 1.2, 1.4)]
    gamma, _ = search.gamma_scan(graphs.star(N), 0, grid, 2 * T0, T0 / 200)
    assert gamma in (0.8 / 16, 1.0 / 16, 1.2 / 16)


def test_broken_link_subspace_no_link_at_solution():
    N, k = 100, 10
    red = search.broken_link_search_subspace(N, k, seed=3)
    assert red.basis.m == 3
    H = red.hamiltonian
    gamma = 1 / N
    alpha = k / N
    assert abs(H[0, 1] - gamma * math.sqrt(N - 1)) <= 2 * gamma
    assert abs(abs(H[1, 2]) - gamma * math.sqrt(2 * alpha * (1 - 2 * alpha))) <= 2 * gamma / math.sqrt(N)
    assert all(0 not in e for e in red.broken)


def test_broken_link_subspace_link_at_solution():
    red = search.broken_link_search_subspace(100, 10, link_at_solution=True, seed=4)
    assert red.basis.m == 4
    a = [v for e in red.broken for v in e if 0 in e and v != 0][0]
    # the broken partner |a> lies inside the subspace
    _, res = krylov.project(red.basis, krylov.basis_state(100, a))
    assert res < 1e-10
    assert search.broken_link_search_subspace(100, 0).basis.m == 2
    with pytest.raises(ConstraintUnsatisfiable):
        search.broken_link_search_subspace(10, 5)


def test_complete_robust_single_link():
    N = 256
    T0 = math.pi * math.sqrt(N) / 2
    broken = graphs.sample_broken(graphs.complete(N), 1, "at_most_one_per_node", avoid=0, seed=1)
    res = search.run_search(search.SearchProblem(graphs.remove_links(graphs.complete(N), broken), 0, 1 / N), 3 * T0, T0 / 500)
    assert res.P_peak >= 0.9 and abs(res.T_peak / T0 - 1) <= 0.1


def test_peak_scaling():
    ratios = []
    for N in (64, 256, 1024):
        T0 = math.pi * math.sqrt(N) / 2
        res = search.run_search(search.SearchProblem(graphs.complete(N), 0, 1 / N), 3 * T0, T0 / 500)
        ratios.append(res.T_peak / math.sqrt(N))
    assert max(ratios) / min(ratios) - 1 <= 0.05
    assert all(abs(r / (math.pi / 2) - 1) <= 0.05 for r in ratios)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 12), st.integers(0, 10**6), st.floats(0.05, 2.0))
def test_property_reduced_matches_full(n, seed, gamma):
    rng = np.random.Generator(np.random.PCG64(seed))
    g = random_connected_graph(rng, n)
    w = int(rng.integers(0, n))
    p = search.SearchProblem(g, w, gamma)
    res = search.run_search(p, 20.0, 0.05)
    full = search.full_space_trace(p, res.trace.times)
    assert np.abs(res.trace.values - full).max() <= 1e-8
    assert 0 <= res.P_peak <= 1 and res.T_peak >= 0
