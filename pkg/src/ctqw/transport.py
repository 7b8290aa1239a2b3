"""Exciton transport to an absorbing trap.

Dynamics follow ``H = A - i kappa |trap><trap|``.  The anti-Hermitian term
acts along the trap state itself, so the invariant subspace generated from
|trap> is the same with or without it: Lanczos runs on ``A`` and the trap term
is added in reduced coordinates as ``-i kappa |e1><e1|``.

The efficiency is computed two ways: as the squared overlap of the initial
state with that subspace, and by integrating ``2 kappa |<trap|psi(t)>|^2``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import graphs
from .errors import (
    InvalidParameter,
    NegligibleEfficiency,
    NumericalError,
    OutOfModelRange,
    SlowConvergence,
)
from .krylov import lanczos, reduced_hamiltonian
from .linalg import inf_norm, propagate_uniform

DENSE_LIMIT = 2048
SURVIVAL_TOL = 1e-6
TIME_CAP = 1e5
MIXTURE_TOL = 1e-12


@dataclass(frozen=True)
class TransportProblem:
    """Initial condition is a normalized vector or ``[(weight, node), ...]``."""

    graph: graphs.Graph
    trap: int
    kappa: float
    initial: object

    def __post_init__(self):
        self.graph.check_node(self.trap, "trap")
        if not self.kappa > 0:
            raise InvalidParameter("kappa must be positive")
        if self.is_mixture:
            weights = [w for w, _ in self.initial]
            if any(w < 0 for w in weights):
                raise InvalidParameter("mixture weights must be non-negative")
            if abs(sum(weights) - 1.0) > MIXTURE_TOL:
                raise InvalidParameter(f"mixture weights sum to {sum(weights)!r}")
            for _, node in self.initial:
                self.graph.check_node(node, "mixture node")
        else:
            v = np.asarray(self.initial)
            if v.shape != (self.graph.n,):
                raise InvalidParameter("initial state has the wrong dimension")

    @property
    def is_mixture(self):
        return not isinstance(self.initial, np.ndarray)

    def components(self):
        """(weight, state vector) pairs making up the initial condition."""
        n = self.graph.n
        if not self.is_mixture:
            return [(1.0, np.asarray(self.initial, dtype=complex))]
        out = []
        for weight, node in self.initial:
            if weight > 0:
                v = np.zeros(n, dtype=complex)
                v[node] = 1.0
                out.append((float(weight), v))
        return out


@dataclass(frozen=True)
class TransportResult:
    eta: float
    method: str
    decoupled: bool
    reduced_dim: int
    tau: Optional[float] = None
    trace: Optional[dict] = None
    converged: bool = True
    t_final: Optional[float] = None

    def to_dict(self):
        return {
            "eta": float(self.eta),
            "method": self.method,
            "decoupled": bool(self.decoupled),
            "reduced_dim": int(self.reduced_dim),
            "tau": None if self.tau is None else float(self.tau),
            "converged": bool(self.converged),
            "t_final": None if self.t_final is None else float(self.t_final),
        }


def site_state(n, node):
    v = np.zeros(n, dtype=complex)
    v[node] = 1.0
    return v


def uniform_mixture(nodes):
    nodes = list(nodes)
    return [(1.0 / len(nodes), int(v)) for v in nodes]


def all_sites_mixture(g):
    return uniform_mixture(range(g.n))


def leaf_mixture(levels):
    return uniform_mixture(graphs.tree_column(levels, levels))


def trap_basis(g, trap):
    """Lanczos basis of the subspace generated from the trap under ``A``."""
    trap = g.check_node(trap, "trap")
    seed = site_state(g.n, trap)
    if g.n <= DENSE_LIMIT:
        return lanczos(g.adjacency(), seed)
    return lanczos(g.operator(), seed)


def trapped_reduced_hamiltonian(basis, kappa):
    """Reduced ``A - i kappa |trap><trap|`` with the trap as first basis vector."""
    H = reduced_hamiltonian(basis).astype(complex)
    H[0, 0] -= 1j * kappa
    return H


def _overlap(basis, p):
    Q = basis.vectors
    if p.is_mixture:
        row_weight = np.sum(np.abs(Q) ** 2, axis=1)
        return float(sum(w * row_weight[node] for w, node in p.initial))
    c = Q.conj().T @ np.asarray(p.initial, dtype=complex)
    return float(np.vdot(c, c).real)


def efficiency_subspace(p, basis=None):
    """Efficiency as the squared overlap with the trap's invariant subspace.

    Independent of kappa.  ``decoupled`` is set when the subspace is the trap
    alone (an isolated trap).
    """
    if basis is None:
        basis = trap_basis(p.graph, p.trap)
    return TransportResult(
        eta=_overlap(basis, p),
        method="subspace",
        decoupled=basis.m == 1,
        reduced_dim=basis.m,
    )


def default_dt(H_red, kappa):
    return min(0.01, 0.2 / max(1.0, inf_norm(H_red), kappa))


def _absorb(H, coords, kappa, dt, t_max, cap, keep_trace):
    """Integrate one pure component until its survival drops below tolerance.

    The trapezoid sums carry the Euler-Maclaurin end correction
    ``dt**2/12 (f'(0) - f'(t))``; ``p'`` is exact from ``psi' = -i H psi``, so
    the rule is fourth order without extra propagation.
    Returns (eta, first moment, t_final, converged, trace).
    """
    p0 = float(np.vdot(coords, coords).real)
    if p0 <= SURVIVAL_TOL:
        trace = None
        if keep_trace:
            trace = {"t": np.zeros(1), "p_trap": np.zeros(1), "norm2": np.array([p0]), "absorbed": np.zeros(1)}
        return 0.0, 0.0, 0.0, True, trace
    row = -1j * H[0, :]
    corr = dt * dt / 12.0
    nsteps_cap = int(math.ceil(cap / dt))
    target = t_max
    integral = moment = 0.0
    dp0 = None
    k = 0
    prev_t = prev_p = None
    ts, ps, ns, absorbed = [], [], [], []
    converged = False
    t = 0.0
    for block in propagate_uniform(H, coords, dt, nsteps_cap, block=512):
        b = block.shape[0]
        times = (k + np.arange(b)) * dt
        amp = block[:, 0]
        probs = np.abs(amp) ** 2
        dprobs = 2.0 * np.real(np.conj(amp) * (block @ row))
        if dp0 is None:
            dp0 = dprobs[0]
        if prev_t is not None:
            t_ext = np.concatenate([[prev_t], times])
            p_ext = np.concatenate([[prev_p], probs])
        else:
            t_ext, p_ext = times, probs
        seg = 0.5 * (p_ext[1:] + p_ext[:-1]) * dt
        mseg = 0.5 * (t_ext[1:] * p_ext[1:] + t_ext[:-1] * p_ext[:-1]) * dt
        if keep_trace:
            running = integral + np.concatenate([[0.0] if prev_t is None else [], np.cumsum(seg)])
            absorbed.append(2.0 * kappa * (running + corr * (dp0 - dprobs)))
            ts.append(times)
            ps.append(probs)
            ns.append(np.sum(np.abs(block) ** 2, axis=1))
        integral += seg.sum()
        moment += mseg.sum()
        k += b
        prev_t, prev_p = times[-1], probs[-1]
        t = prev_t
        dp_end = dprobs[-1]
        dm_end = probs[-1] + t * dprobs[-1]
        if t >= target:
            survival = float(np.sum(np.abs(block[-1]) ** 2))
            if survival < SURVIVAL_TOL:
                converged = True
                break
            target *= 2.0
    # f = p: f'(0) = p'(0); f = t p: f'(0) = p(0)
    integral += corr * (dp0 - dp_end)
    moment += corr * (abs(coords[0]) ** 2 - dm_end)
    trace = None
    if keep_trace:
        trace = {
            "t": np.concatenate(ts),
            "p_trap": np.concatenate(ps),
            "norm2": np.concatenate(ns),
            "absorbed": np.concatenate(absorbed),
        }
    return 2.0 * kappa * integral, 2.0 * kappa * moment, t, converged, trace


def efficiency_integrated(p, t_max=50.0, dt=None, cap=TIME_CAP, keep_trace=False):
    """Efficiency by time-integrating the trap population in reduced space.

    ``t_max`` is doubled until the in-subspace survival norm squared drops
    below 1e-6; past ``cap`` time units SlowConvergence is raised carrying the
    partial result.  ``tau`` is the absorption-weighted mean time.
    """
    basis = trap_basis(p.graph, p.trap)
    H = trapped_reduced_hamiltonian(basis, p.kappa)
    if dt is None:
        dt = default_dt(H, p.kappa)
    eta = moment = 0.0
    t_final = 0.0
    converged = True
    traces = []
    for weight, state in p.components():
        coords = basis.vectors.conj().T @ state
        e, mom, t_end, ok, tr = _absorb(H, coords, p.kappa, dt, t_max, cap, keep_trace)
        eta += weight * e
        moment += weight * mom
        t_final = max(t_final, t_end)
        converged &= ok
        if keep_trace:
            traces.append((weight, tr))
    trace = None
    if keep_trace:
        trace = _merge_traces(traces)
    result = TransportResult(
        eta=eta,
        method="integrated",
        decoupled=basis.m == 1,
        reduced_dim=basis.m,
        tau=moment / eta if eta > 0 else None,
        trace=trace,
        converged=converged,
        t_final=t_final,
    )
    if not converged:
        raise SlowConvergence(f"absorption not finished by t = {cap:g}", result)
    return result


def _merge_traces(traces):
    length = max(tr["t"].size for _, tr in traces)
    t = max((tr["t"] for _, tr in traces), key=len)
    p_trap = np.zeros(length)
    norm2 = np.zeros(length)
    absorbed = np.zeros(length)
    for w, tr in traces:
        k = tr["t"].size
        p_trap[:k] += w * tr["p_trap"]
        norm2[:k] += w * tr["norm2"]
        norm2[k:] += w * tr["norm2"][-1]
        absorbed[:k] += w * tr["absorbed"]
        absorbed[k:] += w * tr["absorbed"][-1]
    return {"t": t, "p_trap": p_trap, "norm2": norm2, "absorbed": absorbed}


def trapping_time(p, t_max=50.0, dt=None):
    """Mean absorption time ``(2 kappa / eta) * integral of t p_trap(t)``."""
    res = efficiency_integrated(p, t_max=t_max, dt=dt)
    if res.eta < 0.01:
        raise NegligibleEfficiency(f"eta = {res.eta:.3g} is too small for a trapping time")
    return res.tau


def p_trap_closed_form(kappa, t):
    """Trap population for the adiabatically reduced broken-link model.

    ``exp(-kappa t) sin^2(Omega t) / Omega^2`` with
    ``Omega = sqrt(4 - kappa^2) / 2``; only valid for 0 < kappa < 2.
    """
    if not 0 < kappa < 2:
        raise OutOfModelRange("closed form holds only for 0 < kappa < 2")
    omega = 0.5 * math.sqrt(4.0 - kappa * kappa)
    t = np.asarray(t, dtype=float)
    out = np.exp(-kappa * t) * np.sin(omega * t) ** 2 / omega**2
    return float(out) if out.ndim == 0 else out


def trapping_time_closed_form(kappa):
    return 1.0 / kappa + kappa / 2.0


def broken_link_problem(N, kappa=1.0, which="to_trap"):
    """K_N with one link broken at the start node; trap 0, start node 1.

    ``which="to_trap"`` breaks (1, 0); ``"to_other"`` breaks (1, 2).
    """
    if N < 4:
        raise InvalidParameter("need N >= 4")
    if which == "to_trap":
        broken = [(0, 1)]
    elif which == "to_other":
        broken = [(1, 2)]
    else:
        raise InvalidParameter(f"unknown link choice {which!r}")
    g = graphs.remove_links(graphs.complete(N), broken)
    return TransportProblem(g, 0, kappa, site_state(N, 1))


def broken_link_efficiency(N, which="to_trap"):
    """Efficiency from node 1 to trap 0 of K_N with one broken link."""
    eta = efficiency_subspace(broken_link_problem(N, 1.0, which)).eta
    expected = 1.0 if which == "to_trap" else 0.5
    if abs(eta - expected) > 1e-9:
        raise NumericalError(f"eta = {eta!r}, expected {expected}")
    return eta


class SweepRow(NamedTuple):
    r: int
    mean_eta: float
    stderr: float
    samples: int


def mixture_for(policy, g, trap, levels=None):
    """Initial mixture for a sweep: ``all-sites``, ``all-but-trap`` or ``leaves``."""
    if policy == "all-sites":
        return all_sites_mixture(g)
    if policy == "all-but-trap":
        return uniform_mixture(v for v in range(g.n) if v != trap)
    if policy == "leaves":
        if levels is None:
            raise InvalidParameter("leaf mixture needs a binary tree")
        return uniform_mixture(graphs.tree_column(levels, levels))
    if isinstance(policy, (list, tuple)):
        return list(policy)
    raise InvalidParameter(f"unknown mixture policy {policy!r}")


def _sweep_point(args):
    g, trap, mixture, r, samples, seed = args
    etas = np.empty(samples)
    for i in range(samples):
        rng = np.random.Generator(np.random.PCG64([seed, r, i]))
        broken = graphs.sample_broken(g, r, "none", seed=rng)
        gb = graphs.remove_links(g, broken)
        etas[i] = efficiency_subspace(TransportProblem(gb, trap, 1.0, mixture)).eta
    stderr = float(etas.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return SweepRow(int(r), float(etas.mean()), stderr, int(samples))


def sweep_broken_links(g, trap, mixture, r_values, samples, seed=0, jobs=1):
    """Average efficiency over random r-link removals, for each r.

    Sample ``i`` at ``r`` draws from its own PCG64 stream seeded by
    ``(seed, r, i)``, so results do not depend on ``jobs``.  Configurations
    that isolate the trap are kept in the average.
    """
    if samples < 1:
        raise InvalidParameter("samples must be positive")
    for r in r_values:
        if not 0 <= r <= g.num_edges:
            raise InvalidParameter(f"r = {r} outside 0..{g.num_edges}")
    tasks = [(g, trap, mixture, int(r), int(samples), int(seed)) for r in r_values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_point, tasks))
    return [_sweep_point(t) for t in tasks]


def sweep_to_csv(rows):
    lines = ["r,mean_eta,stderr,samples"]
    lines.extend(f"{r.r},{r.mean_eta:.17g},{r.stderr:.17g},{r.samples}" for r in rows)
    return "\n".join(lines) + "\n"
