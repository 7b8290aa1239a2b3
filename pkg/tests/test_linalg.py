import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ctqw import linalg
from ctqw.errors import ConvergenceFailure, DimensionMismatch, NonHermitianInput, NonMonotonicTimes


def random_hermitian(rng, n, scale=1.0):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (X + X.conj().T) / 2


def test_eig_matches_numpy(rng):
    for n in (1, 2, 5, 17, 60):
        H = random_hermitian(rng, n)
        spec = linalg.hermitian_eig(H)
        np.testing.assert_allclose(spec.eigenvalues, np.linalg.eigvalsh(H), atol=1e-10)
        V = spec.eigenvectors
        np.testing.assert_allclose(V.conj().T @ V, np.eye(n), atol=1e-10)
        assert np.abs(H @ V - V * spec.eigenvalues).max() <= 1e-9 * max(1, np.abs(H).max())


def test_eig_real_symmetric_degenerate():
    A = np.ones((6, 6)) - np.eye(6)  # eigenvalues 5 and -1 (x5)
    spec = linalg.hermitian_eig(A)
    np.testing.assert_allclose(spec.eigenvalues, [-1] * 5 + [5], atol=1e-12)
    groups = spec.eigenspaces()
    assert sorted(len(g) for g in groups) == [1, 5]
    np.testing.assert_allclose(spec.reconstruct(), A, atol=1e-12)


def test_eig_rejects_non_hermitian():
    with pytest.raises(NonHermitianInput):
        linalg.hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(NonHermitianInput):
        linalg.hermitian_eig(np.array([[1j]]))


def test_tridiagonal_with_denormal_tail():
    # Exact reductions leave blocks of ~1e-160 entries; QL must still converge.
    d = np.array([0.0, -1.0, 2.8e-17, -1.4e-17, 4.3e-33, 1e-163, -1.7e-163, 2.6e-163])
    e = np.array([0.05, 0.9987, 2.8e-16, 3e-30, 7.8e-35, 8e-166, 8e-162])
    lam, Z = linalg.tridiagonal_eig(d, e)
    T = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    np.testing.assert_allclose(lam, np.linalg.eigvalsh(T), atol=1e-14)
    np.testing.assert_allclose(Z.T @ Z, np.eye(d.size), atol=1e-12)


def test_tridiagonal_length_check():
    with pytest.raises(DimensionMismatch):
        linalg.tridiagonal_eig([1.0, 2.0], [1.0, 2.0])


def test_expm_matches_scipy(rng):
    for scale in (1e-3, 0.3, 2.0, 40.0):
        A = scale * (rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7)))
        ref = scipy.linalg.expm(A)
        np.testing.assert_allclose(linalg.expm(A), ref, rtol=1e-10, atol=1e-10 * np.abs(ref).max())


def test_expm_mul_and_evolve(rng):
    H = random_hermitian(rng, 9)
    v = rng.normal(size=9) + 1j * rng.normal(size=9)
    v /= np.linalg.norm(v)
    times = np.linspace(0, 5, 41)
    out = linalg.evolve(H, v, times)
    for k in (0, 13, 40):
        ref = scipy.linalg.expm(-1j * H * times[k]) @ v
        np.testing.assert_allclose(out[k], ref, atol=1e-10)
        np.testing.assert_allclose(linalg.expm_mul(H, v, times[k]), ref, atol=1e-10)


def test_evolve_non_hermitian(rng):
    H = random_hermitian(rng, 5).astype(complex)
    H[0, 0] -= 0.7j
    v = np.zeros(5, complex)
    v[2] = 1
    times = np.linspace(0, 3, 31)
    out = linalg.evolve(H, v, times)
    for k in (5, 30):
        np.testing.assert_allclose(out[k], scipy.linalg.expm(-1j * H * times[k]) @ v, atol=1e-10)
    assert np.all(np.diff(np.linalg.norm(out, axis=1)) <= 1e-12)


def test_evolve_nonuniform_times(rng):
    H = random_hermitian(rng, 4).astype(complex)
    H[1, 1] -= 0.2j
    v = np.eye(4, dtype=complex)[0]
    times = np.array([0.0, 0.1, 0.7, 2.5])
    out = linalg.evolve(H, v, times)
    for k, t in enumerate(times):
        np.testing.assert_allclose(out[k], scipy.linalg.expm(-1j * H * t) @ v, atol=1e-10)


def test_evolve_validates():
    H = np.eye(2)
    with pytest.raises(DimensionMismatch):
        linalg.evolve(H, np.ones(3), [0.0])
    with pytest.raises(ValueError):
        linalg.evolve(H, np.array([1.0, 0.0]), [-1.0])


def test_integrate_trace():
    t = np.linspace(0, np.pi, 2001)
    assert abs(linalg.integrate_trace(t, np.sin(t)) - 2.0) < 1e-6
    with pytest.raises(NonMonotonicTimes):
        linalg.integrate_trace([0, 1, 1], [1, 1, 1])


@st.composite
def hermitian_matrices(draw):
    n = draw(st.integers(1, 8))
    re = draw(arrays(np.float64, (n, n), elements=st.floats(-10, 10)))
    im = draw(arrays(np.float64, (n, n), elements=st.floats(-10, 10)))
    X = re + 1j * im
    return (X + X.conj().T) / 2


@settings(max_examples=60, deadline=None)
@given(hermitian_matrices())
def test_property_eig_residual(H):
    spec = linalg.hermitian_eig(H)
    V = spec.eigenvectors
    scale = max(1.0, np.abs(H).max())
    assert np.abs(H @ V - V * spec.eigenvalues).max() <= 1e-9 * scale * H.shape[0]
    assert np.abs(V.conj().T @ V - np.eye(H.shape[0])).max() <= 1e-10
    assert np.all(np.diff(spec.eigenvalues) >= 0)


@settings(max_examples=40, deadline=None)
@given(hermitian_matrices(), st.floats(0, 20))
def test_property_unitary_norm(H, t):
    v = np.ones(H.shape[0], complex) / np.sqrt(H.shape[0])
    out = linalg.expm_mul(H, v, t)
    assert abs(np.linalg.norm(out) - 1) <= 1e-9


def test_eig_examples():
    np.testing.assert_allclose(linalg.hermitian_eig(np.array([[0.0, 1], [1, 0]])).eigenvalues, [-1, 1], atol=1e-14)
    # characteristic polynomial l^2 - 3 l - 4
    lam = linalg.hermitian_eig(np.array([[0.0, 2], [2, 3]])).eigenvalues
    np.testing.assert_allclose(lam, np.roots([1, -3, -4])[::-1], atol=1e-12)
    # sums of +-1 over three bits
    bits = np.array([[1 - 2 * ((x >> k) & 1) for k in range(3)] for x in range(8)])
    expected = np.sort(bits.sum(axis=1))
    from ctqw import graphs

    lam = linalg.hermitian_eig(graphs.hypercube(3).adjacency()).eigenvalues
    np.testing.assert_allclose(lam, expected, atol=1e-12)


def test_eig_deterministic(rng):
    H = random_hermitian(rng, 12)
    a, b = linalg.hermitian_eig(H), linalg.hermitian_eig(H.copy())
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_expm_mul_examples():
    v = np.array([0.3, 0.4j])
    np.testing.assert_array_equal(linalg.expm_mul(np.zeros((2, 2)), v, 7.0), v)
    out = linalg.expm_mul(np.array([[0.0, 1], [1, 0]]), np.array([1.0, 0]), np.pi / 2)
    np.testing.assert_allclose(out, [0, -1j], atol=1e-14)
    out = linalg.expm_mul(np.array([[-1j]]), np.array([1.0]), 1.0)
    np.testing.assert_allclose(out, [np.exp(-1)], rtol=1e-13)


def test_expm_mul_hermitian_paths_agree(rng):
    H = random_hermitian(rng, 10)
    v = rng.normal(size=10) + 0j
    for t in (0.1, 3.0):
        a = linalg.expm_mul(H, v, t, hermitian=True)
        b = linalg.expm_mul(H, v, t, hermitian=False)
        assert np.abs(a - b).max() <= 1e-10 * np.linalg.norm(v)


def test_integrate_examples():
    t = np.linspace(0, 1, 11)
    assert linalg.integrate_trace(t, np.ones(11)) == pytest.approx(1.0, abs=1e-15)
    t = np.linspace(0, 2, 21)
    assert linalg.integrate_trace(t, t) == pytest.approx(2.0, abs=1e-14)
    t = np.arange(0, 2001) * 0.01
    assert abs(linalg.integrate_trace(t, np.exp(-t)) - 1.0) <= 1e-4


def test_norm_preserved_random(rng):
    for _ in range(100):
        n = int(rng.integers(1, 17))
        H = random_hermitian(rng, n)
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        v /= np.linalg.norm(v)
        for t in (0.1, 1.0, 10.0):
            assert abs(np.linalg.norm(linalg.expm_mul(H, v, t)) - 1) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(hermitian_matrices(), st.floats(0, 5), st.floats(0, 5))
def test_property_group(H, t1, t2):
    v = np.ones(H.shape[0], complex) / np.sqrt(H.shape[0])
    a = linalg.expm_mul(H, linalg.expm_mul(H, v, t1), t2)
    b = linalg.expm_mul(H, v, t1 + t2)
    assert np.abs(a - b).max() <= 1e-9


@settings(max_examples=40, deadline=None)
@given(hermitian_matrices())
def test_property_round_trip(H):
    spec = linalg.hermitian_eig(H)
    assert np.abs(spec.reconstruct() - H).max() <= 1e-9 * max(1.0, np.abs(H).max())


@settings(max_examples=40, deadline=None)
@given(hermitian_matrices(), st.floats(0.01, 3))
def test_property_trap_monotone(H, kappa):
    H = H.astype(complex)
    H[0, 0] -= 1j * kappa
    v = np.ones(H.shape[0], complex) / np.sqrt(H.shape[0])
    norms = np.linalg.norm(linalg.evolve(H, v, np.linspace(0, 3, 61)), axis=1)
    assert np.all(np.diff(norms) <= 1e-10)
