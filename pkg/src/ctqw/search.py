"""Spatial search by continuous-time quantum walk.

The search Hamiltonian is ``H = -gamma A - |w><w|``.  Evolution runs in the
invariant subspace generated from the marked node ``|w>``; because
``<w|U(t)|psi> = <w|U(t) P|psi>``, the part of the initial state outside that
subspace never contributes to the success probability, so the reduced trace
is exact even when the initial state is not contained in the subspace.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.signal import find_peaks
from scipy.sparse.linalg import LinearOperator

from . import graphs
from .errors import (
    ConstraintUnsatisfiable,
    InvalidParameter,
    NumericalError,
    UnsupportedFamily,
)
from .krylov import basis_state, lanczos, project, reduced_hamiltonian
from .linalg import evolve

DENSE_LIMIT = 2048
PEAK_PROMINENCE = 0.5
RESIDUAL_WARNING = 1e-8


@dataclass(frozen=True)
class EvolutionTrace:
    times: np.ndarray
    values: np.ndarray

    def to_csv(self, header=("t", "p")):
        rows = [",".join(header)]
        rows.extend(f"{t:.17g},{v:.17g}" for t, v in zip(self.times, self.values))
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class SearchProblem:
    """Search for node ``w`` of ``graph`` with hopping rate ``gamma``.

    ``initial`` defaults to the uniform superposition |s>.
    """

    graph: graphs.Graph
    w: int
    gamma: float
    initial: Optional[np.ndarray] = None

    def initial_state(self):
        if self.initial is None:
            return np.full(self.graph.n, 1.0 / math.sqrt(self.graph.n), dtype=complex)
        return np.asarray(self.initial, dtype=complex)


@dataclass(frozen=True)
class SearchResult:
    T_peak: float
    P_peak: float
    gamma_used: float
    trace: EvolutionTrace
    reduced_dim: int
    initial_residual: float
    predicted: Optional[tuple] = None
    warning: Optional[str] = None

    def to_dict(self):
        out = {
            "T_peak": float(self.T_peak),
            "P_peak": float(self.P_peak),
            "gamma_used": float(self.gamma_used),
            "reduced_dim": int(self.reduced_dim),
            "initial_residual": float(self.initial_residual),
            "predicted": None,
            "warning": self.warning,
        }
        if self.predicted is not None:
            out["predicted"] = {"T": float(self.predicted[0]), "P_suc": float(self.predicted[1])}
        return out


def _check(g, w, gamma):
    w = g.check_node(w, "solution node")
    if not gamma > 0:
        raise InvalidParameter("gamma must be positive")
    return w


def search_hamiltonian(g, w, gamma):
    """Dense ``-gamma A - |w><w|``."""
    w = _check(g, w, gamma)
    H = -gamma * g.adjacency()
    H[w, w] -= 1.0
    return H


class _SearchOperator(LinearOperator):
    def __init__(self, g, w, gamma):
        self._adj = g.operator()
        self._w = w
        self._gamma = gamma
        self.norm_bound = gamma * self._adj.norm_bound + 1.0
        super().__init__(dtype=np.float64, shape=(g.n, g.n))

    def _matvec(self, x):
        x = np.asarray(x).reshape(-1)
        y = -self._gamma * (self._adj @ x)
        y[self._w] -= x[self._w]
        return y

    def _rmatvec(self, x):
        return self._matvec(np.conj(x)).conj()


def search_operator(g, w, gamma):
    """Matrix-free search Hamiltonian with a ``norm_bound`` attribute."""
    w = _check(g, w, gamma)
    return _SearchOperator(g, w, gamma)


def _w_partition_alpha(spec, w_location):
    m1, m2 = int(spec.params["m1"]), int(spec.params["m2"])
    n = m1 + m2
    if w_location in ("any", "partition1"):
        return m1 / n
    if w_location == "partition2":
        return m2 / n
    raise InvalidParameter(f"w_location {w_location!r} not valid for complete_bipartite")


def predict_gamma(spec, w_location="any"):
    """Hopping rate that makes the marked node resonant, per family.

    ``w_location``: complete graphs ignore it; complete bipartite graphs take
    ``"partition1"``/``"partition2"``; stars take ``"leaf"``/``"center"``.
    """
    n = spec.n
    if spec.family == "complete":
        return 1.0 / n
    if spec.family == "complete_bipartite":
        a = _w_partition_alpha(spec, w_location)
        return 1.0 / (n * math.sqrt(a * (1.0 - a)))
    if spec.family == "star":
        if w_location in ("any", "leaf"):
            return 1.0 / math.sqrt(n)
        if w_location == "center":
            a = 1.0 / n
            return 1.0 / (n * math.sqrt(a * (1.0 - a)))
        raise InvalidParameter(f"w_location {w_location!r} not valid for star")
    raise UnsupportedFamily(f"no closed-form gamma for {spec.family}; use gamma_scan")


def predict_T_P(spec, w_location="any"):
    """Large-N running time and success probability ``(T, P_suc)``.

    The same prediction holds for complete graphs with broken links (at most
    one per node) and for stars with broken non-solution links.
    """
    n = spec.n
    if spec.family == "complete":
        return math.pi * math.sqrt(n) / 2.0, 1.0
    if spec.family == "complete_bipartite":
        a = _w_partition_alpha(spec, w_location)
        return math.pi * math.sqrt(a * n / 2.0), 0.5 + math.sqrt(a * (1.0 - a))
    if spec.family == "star":
        if w_location in ("any", "leaf"):
            return math.pi * math.sqrt(n / 2.0), 0.5
        if w_location == "center":
            return math.pi / 2.0, 1.0
        raise InvalidParameter(f"w_location {w_location!r} not valid for star")
    raise UnsupportedFamily(f"no closed-form running time for {spec.family}")


def expected_runtime_two_phase(spec):
    """Expected running time when measuring alternately at T1 and T2.

    Closed form ``pi sqrt(N) (1 + 2 sqrt(a (1 - a)))**0.5`` with ``a = m1/N``;
    an upper bound that ignores successes at the wrong measurement time.
    """
    if spec.family != "complete_bipartite":
        raise UnsupportedFamily("two-phase strategy is defined for complete bipartite graphs")
    n = spec.n
    a = int(spec.params["m1"]) / n
    return math.pi * math.sqrt(n) * math.sqrt(1.0 + 2.0 * math.sqrt(a * (1.0 - a)))


def _hamiltonian(g, w, gamma):
    if g.n <= DENSE_LIMIT:
        H = search_hamiltonian(g, w, gamma)
        return H, None
    op = search_operator(g, w, gamma)
    return op, op.norm_bound


def time_grid(t_max, dt):
    if not (t_max > 0 and dt > 0):
        raise InvalidParameter("t_max and dt must be positive")
    steps = int(round(t_max / dt))
    return np.linspace(0.0, steps * dt, steps + 1)


def find_peak(times, values, prominence=PEAK_PROMINENCE):
    """Index of the first pronounced local maximum of a probability trace.

    A sample counts when it is a local maximum whose prominence is at least
    ``prominence`` times the largest value in the trace; this skips the small
    fast ripples riding on the main oscillation.  Falls back to the global
    maximum when no interior peak qualifies.
    """
    values = np.asarray(values)
    top = values.max()
    if top > 0:
        idx, _ = find_peaks(values, prominence=prominence * top)
        if idx.size:
            return int(idx[0])
    return int(np.argmax(values))


def run_search(p, t_max, dt, predicted=None):
    """Evolve the search problem and locate the success-probability peak."""
    g = p.graph
    w = _check(g, p.w, p.gamma)
    if dt > t_max / 100:
        raise InvalidParameter("dt must be at most t_max / 100")
    psi0 = p.initial_state()
    if psi0.shape != (g.n,):
        raise InvalidParameter("initial state has the wrong dimension")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-12:
        raise InvalidParameter("initial state must be normalized")
    times = time_grid(t_max, dt)

    H, bound = _hamiltonian(g, w, p.gamma)
    basis = lanczos(H, basis_state(g.n, w), h_norm=bound)
    if basis.m < g.n:
        coords, residual = project(basis, psi0)
        amp = evolve(reduced_hamiltonian(basis), coords, times, hermitian=True)[:, 0]
    else:
        residual = 0.0
        dense = H if isinstance(H, np.ndarray) else search_hamiltonian(g, w, p.gamma)
        amp = evolve(dense, psi0, times, hermitian=True)[:, w]
    probs = np.clip(np.abs(amp) ** 2, 0.0, 1.0)
    k = find_peak(times, probs)
    warning = None
    if residual > RESIDUAL_WARNING:
        warning = (
            f"initial state has norm {residual:.3e} outside the invariant subspace; "
            "that part never reaches the solution"
        )
    return SearchResult(
        T_peak=float(times[k]),
        P_peak=float(probs[k]),
        gamma_used=float(p.gamma),
        trace=EvolutionTrace(times, probs),
        reduced_dim=basis.m,
        initial_residual=float(residual),
        predicted=predicted,
        warning=warning,
    )


def full_space_trace(p, times):
    """Success probability from dense full-space evolution (oracle path)."""
    H = search_hamiltonian(p.graph, p.w, p.gamma)
    amp = evolve(H, p.initial_state(), times, hermitian=True)[:, p.w]
    return np.abs(amp) ** 2


def gamma_scan(graph, w, grid, t_max, dt, initial=None):
    """Pick the gamma in ``grid`` with the largest peak probability.

    Ties go to the smaller gamma.
    """
    grid = sorted(float(x) for x in grid)
    if not grid:
        raise InvalidParameter("gamma grid is empty")
    best = None
    for gamma in grid:
        res = run_search(SearchProblem(graph, w, gamma, initial), t_max, dt)
        if best is None or res.P_peak > best[1].P_peak:
            best = (gamma, res)
    return best


class ReducedSearch(NamedTuple):
    hamiltonian: np.ndarray
    basis: object
    graph: graphs.Graph
    broken: list


def broken_link_search_subspace(N, k, link_at_solution=False, gamma=None, seed=0):
    """Reduced search Hamiltonian of K_N with ``k`` disjoint broken links.

    The solution is node 0.  With ``link_at_solution`` one of the broken links
    is ``(0, a)``.  The subspace dimension is checked against the expected
    value: 2 for k = 0; 3 without a link at the solution; 3 (k = 1) or 4
    (k >= 2) with one.
    """
    if N < 2 or k < 0:
        raise InvalidParameter("need N >= 2 and k >= 0")
    if gamma is None:
        gamma = 1.0 / N
    rng = np.random.Generator(np.random.PCG64(seed))
    if link_at_solution and k >= 1:
        if k > N // 2:
            raise ConstraintUnsatisfiable(f"k = {k} exceeds N/2 disjoint links")
        a = int(rng.integers(1, N))
        rest = np.array([v for v in range(1, N) if v != a])
        chosen = rng.choice(rest, size=2 * (k - 1), replace=False)
        broken = [(0, a)] + [graphs._pair(chosen[2 * j], chosen[2 * j + 1]) for j in range(k - 1)]
        expected = 3 if k == 1 else 4
    else:
        if k > (N - 1) // 2:
            raise ConstraintUnsatisfiable(f"k = {k} disjoint links avoiding the solution need N >= {2 * k + 1}")
        broken = graphs.sample_broken(
            graphs.complete(N), k, "at_most_one_per_node", avoid=0, seed=rng
        )
        expected = 2 if k == 0 else 3
    g = graphs.remove_links(graphs.complete(N), broken)
    H, bound = _hamiltonian(g, 0, gamma)
    basis = lanczos(H, basis_state(N, 0), h_norm=bound)
    if basis.m != expected:
        raise NumericalError(f"reduced dimension {basis.m}, expected {expected}")
    return ReducedSearch(reduced_hamiltonian(basis), basis, g, sorted(broken))
