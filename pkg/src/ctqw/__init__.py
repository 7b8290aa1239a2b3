"""Invariant-subspace reduction of continuous-time quantum walks.

Spatial search, trapped transport and state-transfer bounds, each computed
in the Lanczos subspace generated from a single node and cross-checked
against full-space evolution.
"""
from .graphs import FamilySpec, Graph, build, remove_links, sample_broken
from .krylov import KrylovBasis, lambda_subspace, lanczos, project, reduced_hamiltonian
from .linalg import evolve, expm, expm_mul, hermitian_eig, integrate_trace

__all__ = [
    "FamilySpec",
    "Graph",
    "KrylovBasis",
    "build",
    "evolve",
    "expm",
    "expm_mul",
    "hermitian_eig",
    "integrate_trace",
    "lambda_subspace",
    "lanczos",
    "project",
    "reduced_hamiltonian",
    "remove_links",
    "sample_broken",
]

__version__ = "0.1.0"
