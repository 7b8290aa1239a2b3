"""Dense complex linear algebra used by every other module.

The eigensolver is Householder tridiagonalisation followed by implicit-shift
QL; the matrix exponential is scaling-and-squaring with Pade approximants
(orders 3 to 13).  The exponential never assumes normality, so it is safe for
the trap Hamiltonian ``A - i kappa |trap><trap|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    NonHermitianInput,
    NonMonotonicTimes,
)

HERMITIAN_TOL = 1e-12
IDENTITY_TOL = 1e-10
EIG_RESIDUAL_TOL = 1e-9
DEGENERACY_TOL = 1e-9


def max_norm(M):
    """Largest absolute entry of ``M`` (0 for an empty matrix)."""
    M = np.asarray(M)
    return float(np.abs(M).max()) if M.size else 0.0


def inf_norm(M):
    M = np.asarray(M)
    return float(np.abs(M).sum(axis=1).max()) if M.size else 0.0


def is_hermitian(M, tol=HERMITIAN_TOL):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    return max_norm(M - M.conj().T) <= tol * max(1.0, max_norm(M))


def check_hermitian(M):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] < 1:
        raise DimensionMismatch("empty matrix")
    if not np.all(np.isfinite(M)):
        raise NonHermitianInput("matrix has non-finite entries")
    if not is_hermitian(M):
        raise NonHermitianInput(
            f"|M - M^H| = {max_norm(M - M.conj().T):.3e} exceeds tolerance"
        )
    return M


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (ascending) and the matching orthonormal eigenvectors.

    ``eigenvectors[:, k]`` belongs to ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    scale: float = 1.0

    def eigenspaces(self, tol=DEGENERACY_TOL):
        """Group eigenvalue indices closer than ``tol * max(1, ||M||)``.

        Groups are chained: consecutive sorted eigenvalues within the
        tolerance of their neighbour land in the same group.
        """
        lam = self.eigenvalues
        if lam.size == 0:
            return []
        gap = tol * max(1.0, self.scale)
        groups = [[0]]
        for k in range(1, lam.size):
            if lam[k] - lam[k - 1] <= gap:
                groups[-1].append(k)
            else:
                groups.append([k])
        return groups

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def _householder_tridiagonal(M):
    """Unitary ``Q`` and real (d, e) with ``Q^H M Q`` = tridiag(e, d, e)."""
    A = np.array(M, dtype=complex)
    n = A.shape[0]
    Q = np.eye(n, dtype=complex)
    for k in range(n - 2):
        x = A[k + 1:, k]
        xnorm = np.linalg.norm(x)
        if xnorm == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * xnorm
        v /= np.linalg.norm(v)
        vh = v.conj()
        A[k + 1:, k:] -= 2.0 * np.outer(v, vh @ A[k + 1:, k:])
        A[k:, k + 1:] -= 2.0 * np.outer(A[k:, k + 1:] @ v, vh)
        Q[:, k + 1:] -= 2.0 * np.outer(Q[:, k + 1:] @ v, vh)

    diag = np.real(np.diagonal(A)).copy()
    sub = np.diagonal(A, -1).copy()
    # rotate away the phases of the sub-diagonal so T is real symmetric
    phases = np.ones(n, dtype=complex)
    for k in range(n - 1):
        mag = abs(sub[k])
        phases[k + 1] = phases[k] * (sub[k] / mag if mag > 0 else 1.0)
    return Q * phases, diag, np.abs(sub)


@njit(cache=True)
def _tql_implicit(d, e, z, max_iter):
    """In-place implicit-shift QL on a real symmetric tridiagonal matrix.

    ``d`` is the diagonal, ``e[i]`` couples ``i`` and ``i+1``.  Rotations are
    accumulated into the columns of ``z``.  Returns False on stall.
    """
    n = d.size
    eps = 2.220446049250313e-16
    ee = np.zeros(n)
    anorm = 0.0
    for i in range(n - 1):
        ee[i] = e[i]
    for i in range(n):
        anorm = max(anorm, abs(d[i]) + abs(ee[i]) + (abs(ee[i - 1]) if i > 0 else 0.0))
    # relative deflation, with an absolute floor so blocks of denormal-sized
    # entries (left over from exact reductions) cannot stall the iteration
    floor = eps * eps * anorm
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(ee[m]) <= max(eps * dd, floor):
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                return False
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + ee[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            early = False
            while i >= l:
                f = s * ee[i]
                b = c * ee[i]
                r = math.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    early = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                for k in range(z.shape[0]):
                    f = z[k, i + 1]
                    z[k, i + 1] = s * z[k, i] + c * f
                    z[k, i] = c * z[k, i] - s * f
                i -= 1
            if early:
                continue
            d[l] -= p
            ee[l] = g
            ee[m] = 0.0
    return True


def tridiagonal_eig(diag, off):
    """Eigen-decomposition of the real symmetric tridiagonal (diag, off).

    Returns ascending eigenvalues and real orthonormal eigenvectors.
    """
    d = np.array(diag, dtype=float)
    e = np.array(off, dtype=float)
    n = d.size
    if e.size != max(n - 1, 0):
        raise DimensionMismatch("off-diagonal must have length n - 1")
    z = np.eye(n)
    if n > 1 and not _tql_implicit(d, e, z, 60):
        raise ConvergenceFailure("implicit QL did not converge")
    order = np.argsort(d, kind="stable")
    return d[order], z[:, order]


def hermitian_eig(M):
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.

    Raises NonHermitianInput when ``M`` is not Hermitian to 1e-12 and
    ConvergenceFailure if the QL iteration stalls.
    """
    M = check_hermitian(M)
    Q, d, e = _householder_tridiagonal(M)
    lam, Z = tridiagonal_eig(d, e)
    return Spectrum(lam, Q @ Z, scale=max(1.0, inf_norm(M)))


# Pade coefficients and theta_m bounds (Higham 2005).
_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _pade_uv(A, m):
    b = _PADE[m]
    n = A.shape[0]
    eye = np.eye(n, dtype=A.dtype)
    A2 = A @ A
    if m < 13:
        powers = [eye, A2]
        for _ in range(2, m // 2 + 1):
            powers.append(powers[-1] @ A2)
        U = sum(b[2 * j + 1] * powers[j] for j in range(m // 2 + 1))
        V = sum(b[2 * j] * powers[j] for j in range(m // 2 + 1))
        return A @ U, V
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * eye)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * eye)
    return U, V


def expm(A):
    """Matrix exponential by scaling and squaring with a Pade approximant."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    norm1 = float(np.abs(A).sum(axis=0).max()) if A.size else 0.0
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            U, V = _pade_uv(A, m)
            return np.linalg.solve(V - U, V + U)
    s = max(0, int(math.ceil(math.log2(norm1 / _THETA[13])))) if norm1 > 0 else 0
    U, V = _pade_uv(A / 2.0**s, 13)
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


def _check_pair(M, v):
    M = np.asarray(M)
    v = np.asarray(v, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    if v.shape != (M.shape[0],):
        raise DimensionMismatch(
            f"vector of shape {v.shape} does not match operator of dim {M.shape[0]}"
        )
    return M, v


def expm_mul(M, v, t, hermitian=None):
    """Return ``exp(-i M t) v``.

    With ``hermitian=None`` the structure is detected; Hermitian operators use
    the eigendecomposition, everything else the Pade route.
    """
    M, v = _check_pair(M, v)
    if t < 0:
        raise ValueError("t must be non-negative")
    if hermitian is None:
        hermitian = is_hermitian(M)
    if hermitian:
        spec = hermitian_eig(M)
        V = spec.eigenvectors
        return V @ (np.exp(-1j * spec.eigenvalues * t) * (V.conj().T @ v))
    return expm(-1j * t * M) @ v


def _is_uniform(times):
    if times.size < 3:
        return True
    steps = np.diff(times)
    return np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12 * max(1.0, abs(times[-1])))


def propagate_uniform(M, v, dt, nsteps, block=256):
    """Yield blocks of states ``exp(-i M k dt) v`` for k = 0..nsteps.

    Each yielded array has shape (b, n); blocks are produced in time order.
    The one-step propagator comes from the Pade route, so ``M`` may be
    non-normal.
    """
    M, psi = _check_pair(M, v)
    U = expm(-1j * dt * M)
    n = M.shape[0]
    block = max(1, min(block, nsteps + 1))
    powers = np.empty((block, n, n), dtype=complex)
    powers[0] = np.eye(n)
    for b in range(1, block):
        powers[b] = U @ powers[b - 1]
    U_block = U @ powers[-1]
    remaining = nsteps + 1
    while remaining > 0:
        b = min(block, remaining)
        yield np.einsum("bij,j->bi", powers[:b], psi)
        psi = U_block @ psi
        remaining -= b


def evolve(M, v, times, hermitian=None):
    """States ``exp(-i M t) v`` for every t in ``times``; shape (len(times), n)."""
    M, v = _check_pair(M, v)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1:
        raise DimensionMismatch("times must be one-dimensional")
    if times.size == 0:
        return np.empty((0, M.shape[0]), dtype=complex)
    if np.any(times < 0):
        raise ValueError("times must be non-negative")
    if hermitian is None:
        hermitian = is_hermitian(M)
    if hermitian:
        spec = hermitian_eig(M)
        V = spec.eigenvectors
        coeffs = V.conj().T @ v
        phases = np.exp(-1j * np.outer(times, spec.eigenvalues))
        return (phases * coeffs) @ V.T
    if np.all(np.diff(times) > 0) and _is_uniform(times):
        dt = times[1] - times[0] if times.size > 1 else 0.0
        start = expm_mul(M, v, times[0], hermitian=False) if times[0] > 0 else v
        return np.concatenate(list(propagate_uniform(M, start, dt, times.size - 1)))
    out = np.empty((times.size, M.shape[0]), dtype=complex)
    for k, t in enumerate(times):
        out[k] = expm_mul(M, v, t, hermitian=False)
    return out


def integrate_trace(times, values):
    """Trapezoid rule over samples with strictly increasing times."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise DimensionMismatch("times and values must be 1-D and the same length")
    if times.size < 2:
        return 0.0
    if not np.all(np.diff(times) > 0):
        raise NonMonotonicTimes("sample times must be strictly increasing")
    return float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(times)))
