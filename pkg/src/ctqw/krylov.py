"""Invariant (Krylov) subspaces of a Hermitian operator.

``lanczos`` builds an orthonormal basis of span{H^k |seed>} in which ``H`` is
real symmetric tridiagonal.  ``lambda_subspace`` builds the same space from
the eigenvectors of ``H`` and serves as an independent oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .errors import DimensionMismatch, InvalidNode, SeedNotNormalized
from .linalg import check_hermitian, hermitian_eig, inf_norm

LANCZOS_TOL = 1e-10
NORMALIZED_TOL = 1e-12
OVERLAP_TOL = 1e-9


@dataclass(frozen=True)
class KrylovBasis:
    """Lanczos basis: columns of ``vectors`` are |l_1>, ..., |l_m>.

    ``alphas`` are the site energies E_1..E_m and ``betas`` the positive
    couplings V_2..V_m.  ``residual`` is the norm left after orthogonalising
    H|l_m> against the basis.
    """

    vectors: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    residual: float

    @property
    def m(self):
        return self.vectors.shape[1]

    @property
    def n(self):
        return self.vectors.shape[0]

    def projector(self):
        return Projector(self.vectors)

    def to_dict(self):
        return {
            "m": self.m,
            "alphas": [float(a) for a in self.alphas],
            "betas": [float(b) for b in self.betas],
            "residual": float(self.residual),
        }


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector onto the span of the orthonormal columns of ``basis``."""

    basis: np.ndarray

    @property
    def rank(self):
        return self.basis.shape[1]

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def matrix(self):
        Q = self.basis
        return Q @ Q.conj().T

    def apply(self, v):
        Q = self.basis
        return Q @ (Q.conj().T @ v)


def _as_operator(H):
    """Return (matvec-capable object, dimension, norm bound or None)."""
    if isinstance(H, LinearOperator):
        return H, H.shape[0], getattr(H, "norm_bound", None)
    H = check_hermitian(H)
    return H, H.shape[0], inf_norm(H)


def lanczos(H, seed, tol=LANCZOS_TOL, h_norm=None):
    """Lanczos basis of the invariant subspace of ``H`` containing ``seed``.

    ``H`` is a dense Hermitian matrix or a ``LinearOperator`` (Hermiticity is
    then the caller's responsibility).  Iteration stops once the next coupling
    falls to ``tol * max(1, ||H||_inf)``.  ``h_norm`` overrides the norm; for
    operators without a ``norm_bound`` attribute a running estimate from the
    tridiagonal entries is used.  Every new vector is reorthogonalised twice
    against the whole basis.
    """
    op, n, bound = _as_operator(H)
    if h_norm is not None:
        bound = float(h_norm)
    seed = np.asarray(seed, dtype=complex).reshape(-1)
    if seed.size != n:
        raise DimensionMismatch(f"seed has dim {seed.size}, operator has dim {n}")
    if abs(np.linalg.norm(seed) - 1.0) > NORMALIZED_TOL:
        raise SeedNotNormalized(f"seed norm is {np.linalg.norm(seed)!r}")

    Q = np.zeros((n, min(n, 64)), dtype=complex)
    Q[:, 0] = seed
    alphas, betas = [], []
    running = 0.0
    m = 1
    while True:
        q = Q[:, m - 1]
        w = np.asarray(op @ q, dtype=complex).reshape(-1)
        a = float(np.real(np.vdot(q, w)))
        alphas.append(a)
        basis = Q[:, :m]
        for _ in range(2):
            w -= basis @ (basis.conj().T @ w)
        b = float(np.linalg.norm(w))
        prev = betas[-1] if betas else 0.0
        running = max(running, abs(a) + prev + b)
        scale = max(1.0, bound if bound is not None else running)
        if m == n or b <= tol * scale:
            residual = b
            break
        if m == Q.shape[1]:
            Q = np.concatenate([Q, np.zeros((n, min(n, 2 * m) - m), dtype=complex)], axis=1)
        betas.append(b)
        Q[:, m] = w / b
        m += 1
    return KrylovBasis(Q[:, :m].copy(), np.array(alphas), np.array(betas), residual)


def reduced_hamiltonian(b):
    """Real symmetric tridiagonal ``P H P`` in the Lanczos basis."""
    m = b.m
    T = np.zeros((m, m))
    T[np.arange(m), np.arange(m)] = b.alphas
    if m > 1:
        T[np.arange(m - 1), np.arange(1, m)] = b.betas
        T[np.arange(1, m), np.arange(m - 1)] = b.betas
    return T


def project(b, state):
    """Coordinates <l_k|state> and the norm of the part outside the basis."""
    state = np.asarray(state, dtype=complex).reshape(-1)
    if state.size != b.n:
        raise DimensionMismatch(f"state has dim {state.size}, basis has ambient dim {b.n}")
    coords = b.vectors.conj().T @ state
    residual = float(np.linalg.norm(state - b.vectors @ coords))
    return coords, residual


def basis_state(n, i):
    if not 0 <= i < n:
        raise InvalidNode(f"node {i} outside [0, {n})")
    v = np.zeros(n, dtype=complex)
    v[i] = 1.0
    return v


def lambda_subspace(H, w, tol=OVERLAP_TOL):
    """Projector onto the eigenvectors of ``H`` that overlap node ``w``.

    One representative per eigenspace: the normalised projection of |w> onto
    that eigenspace, kept when its norm exceeds ``tol``.
    """
    H = check_hermitian(H)
    n = H.shape[0]
    e_w = basis_state(n, w)
    spec = hermitian_eig(H)
    reps = []
    for group in spec.eigenspaces():
        V = spec.eigenvectors[:, group]
        c = V.conj().T @ e_w
        norm = np.linalg.norm(c)
        if norm > tol:
            reps.append(V @ c / norm)
    return Projector(np.column_stack(reps) if reps else np.zeros((n, 0), dtype=complex))


def subspaces_equal(p1, p2, tol=1e-8):
    if p1.dim != p2.dim:
        raise DimensionMismatch(f"ambient dims {p1.dim} and {p2.dim} differ")
    return bool(np.abs(p1.matrix - p2.matrix).max(initial=0.0) <= tol)
