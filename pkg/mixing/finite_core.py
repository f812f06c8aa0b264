"""Exact engine on finite posets: distributions, kernels, dominance, α, κ and maximal couplings."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
import pandas as pd
from networkx.algorithms.flow import edmonds_karp
from scipy.optimize import linprog

from config import DIST_TOL, FLOW_SCALE, MARGINAL_TOL
from mixing.errors import DomainError, MixingError
from mixing.parallel import map_ordered
from mixing.poset import FinitePoset, best_up_set

logger = logging.getLogger(__name__)


# ── types ────────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class FiniteDist:
    """Probability vector indexed by poset states."""
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DomainError(f"Distribution must be a nonempty vector, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or (p < 0).any():
            raise DomainError("Distribution entries must be finite and nonnegative")
        if abs(p.sum() - 1.0) > DIST_TOL:
            raise DomainError(f"Distribution sums to {p.sum():.15g}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def point(cls, n: int, i: int) -> FiniteDist:
        if not 0 <= i < n:
            raise DomainError(f"Point mass index {i} outside 0..{n - 1}")
        p = np.zeros(n)
        p[i] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, n: int) -> FiniteDist:
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def normalized(cls, weights) -> FiniteDist:
        """Clip tiny negatives and rescale to unit mass."""
        w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        total = w.sum()
        if total <= 0:
            raise DomainError("Cannot normalise a weight vector with no positive mass")
        return cls(w / total)

    @property
    def n(self) -> int:
        return self.p.size

    def mass(self, mask) -> float:
        return float(self.p[np.asarray(mask, dtype=bool)].sum())


@dataclass(frozen=True, eq=False)
class FiniteKernel:
    """Row-stochastic matrix; row i is Q(state_i, ·)."""
    P: np.ndarray

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise DomainError(f"Kernel must be a nonempty square matrix, got shape {P.shape}")
        if not np.all(np.isfinite(P)) or (P < 0).any():
            raise DomainError("Kernel entries must be finite and nonnegative")
        sums = P.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > DIST_TOL)
        if bad.size:
            raise DomainError(f"Kernel row {int(bad[0])} sums to {sums[bad[0]]:.15g}, not 1")
        P.setflags(write=False)
        object.__setattr__(self, "P", P)

    @classmethod
    def identity(cls, n: int) -> FiniteKernel:
        return cls(np.eye(n))

    @classmethod
    def constant(cls, row) -> FiniteKernel:
        row = FiniteDist(row).p
        return cls(np.tile(row, (row.size, 1)))

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def row(self, i: int) -> FiniteDist:
        return FiniteDist(self.P[i])

    def apply(self, f) -> np.ndarray:
        """Qf as a vector."""
        return self.P @ np.asarray(f, dtype=float)


@dataclass(frozen=True, eq=False)
class CoupledKernel:
    """Markov kernel on ordered pairs; pair (i, j) has index i·n + j."""
    P: np.ndarray
    poset: FinitePoset
    maximal: bool = False
    alphas: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        m = self.poset.n ** 2
        if self.P.shape != (m, m):
            raise DomainError(f"Coupled kernel must be {m}x{m}, got {self.P.shape}")

    @property
    def n(self) -> int:
        return self.poset.n

    @property
    def graph_mask(self) -> np.ndarray:
        """Boolean over pair indices: True where first ⪯ second."""
        return self.poset.leq.reshape(-1)

    def graph_mass(self) -> np.ndarray:
        """Mass each row puts on 𝔾."""
        return self.P[:, self.graph_mask].sum(axis=1)

    def marginal_error(self, Q: FiniteKernel) -> float:
        n = self.n
        blocks = self.P.reshape(n * n, n, n)
        first = blocks.sum(axis=2)
        second = blocks.sum(axis=1)
        rows_i = np.repeat(np.arange(n), n)
        rows_j = np.tile(np.arange(n), n)
        return float(max(np.abs(first - Q.P[rows_i]).max(), np.abs(second - Q.P[rows_j]).max()))

    def is_markov_coupling_of(self, Q: FiniteKernel) -> bool:
        return self.marginal_error(Q) <= MARGINAL_TOL

    def to_frame(self) -> pd.DataFrame:
        src, dst = np.nonzero(self.P)
        return pd.DataFrame({"pair": src, "target_pair": dst, "probability": self.P[src, dst]})

    def to_csv(self, path: str) -> str:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path


# ── helpers ──────────────────────────────────────────────────────────────────

def _vec(d, n: int, name: str) -> np.ndarray:
    p = d.p if isinstance(d, FiniteDist) else np.asarray(d, dtype=float)
    if p.shape != (n,):
        raise DomainError(f"{name} has {p.shape[0] if p.ndim else 0} states, poset has {n}")
    return p


# ── dominance and distances ──────────────────────────────────────────────────

def stoch_dominates(mu, nu, poset: FinitePoset) -> bool:
    """μ ⪯_s ν: μ(U) ≤ ν(U) + tol for every up-set U."""
    gain, _ = best_up_set(poset, _vec(mu, poset.n, "mu") - _vec(nu, poset.n, "nu"))
    return gain <= DIST_TOL


def strassen_gap(mu, nu, poset: FinitePoset) -> float:
    """max_U (μ(U) − ν(U)) clipped at 0; equals 1 − α(μ, ν) by duality."""
    gain, _ = best_up_set(poset, _vec(mu, poset.n, "mu") - _vec(nu, poset.n, "nu"))
    return max(gain, 0.0)


def kappa(mu, nu, poset: FinitePoset) -> float:
    """Kolmogorov distance: max over up-sets of |μ(U) − ν(U)|."""
    diff = _vec(mu, poset.n, "mu") - _vec(nu, poset.n, "nu")
    up, _ = best_up_set(poset, diff)
    down, _ = best_up_set(poset, -diff)
    return min(max(up, down), 1.0)


def total_variation(mu, nu) -> float:
    a = mu.p if isinstance(mu, FiniteDist) else np.asarray(mu, dtype=float)
    b = nu.p if isinstance(nu, FiniteDist) else np.asarray(nu, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"Shape mismatch: {a.shape} vs {b.shape}")
    return 0.5 * float(np.abs(a - b).sum())


# ── α via max-flow ───────────────────────────────────────────────────────────

def transport_plan(mu, nu, poset: FinitePoset) -> tuple[float, np.ndarray]:
    """Max-flow plan ρ supported on 𝔾 with ρ·1 ≤ μ, 1ᵀρ ≤ ν; returns (α, ρ).

    Capacities are probabilities scaled by FLOW_SCALE and rounded, so the
    augmenting-path solver works on integers.
    """
    n = poset.n
    a = _vec(mu, n, "mu")
    b = _vec(nu, n, "nu")
    cap_a = np.rint(a * FLOW_SCALE).astype(np.int64).tolist()
    cap_b = np.rint(b * FLOW_SCALE).astype(np.int64).tolist()

    G = nx.DiGraph()
    G.add_node("s")
    G.add_node("t")
    G.add_edges_from(("s", ("a", i), {"capacity": c}) for i, c in enumerate(cap_a) if c > 0)
    G.add_edges_from((("b", j), "t", {"capacity": c}) for j, c in enumerate(cap_b) if c > 0)
    G.add_edges_from(
        (("a", i), ("b", j))
        for i, j in poset.graph.tolist()
        if cap_a[i] > 0 and cap_b[j] > 0
    )
    value, flows = nx.maximum_flow(G, "s", "t", flow_func=edmonds_karp)

    plan = np.zeros((n, n))
    for i in range(n):
        for node, f in flows.get(("a", i), {}).items():
            if f:
                plan[i, node[1]] = f / FLOW_SCALE
    alpha_val = min(max(value / FLOW_SCALE, 0.0), 1.0)
    return alpha_val, plan


def alpha(mu, nu, poset: FinitePoset) -> float:
    """α(μ, ν): largest mass a coupling (μ first, ν second) can put on 𝔾.

    On the identity order this is the overlap Σ min(μ_i, ν_i), summed in
    floating point rather than read off the scaled integer flow.
    """
    if poset.graph.shape[0] == poset.n:
        n = poset.n
        overlap = float(np.minimum(_vec(mu, n, "mu"), _vec(nu, n, "nu")).sum())
        return min(max(overlap, 0.0), 1.0)
    return transport_plan(mu, nu, poset)[0]


def alpha_lp(mu, nu, poset: FinitePoset) -> float:
    """α by linear programming over the full coupling polytope (HiGHS)."""
    n = poset.n
    a = _vec(mu, n, "mu")
    b = _vec(nu, n, "nu")
    c = -poset.leq.reshape(-1).astype(float)
    rows = np.kron(np.eye(n), np.ones((1, n)))
    cols = np.kron(np.ones((1, n)), np.eye(n))
    res = linprog(
        c,
        A_eq=np.vstack([rows, cols]),
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs",
    )
    if not res.success:
        raise MixingError(f"Coupling LP failed: {res.message}")
    return float(min(max(-res.fun, 0.0), 1.0))


# ── kernels ──────────────────────────────────────────────────────────────────

@dataclass
class MonotonicityReport:
    increasing: bool
    witness: tuple | None = None
    up_set: frozenset | None = None
    gap: float = 0.0

    def __bool__(self) -> bool:
        return self.increasing


def kernel_is_increasing(Q: FiniteKernel, poset: FinitePoset) -> MonotonicityReport:
    """Check state_i ⪯ state_j ⟹ Q_i ⪯_s Q_j for every related pair.

    On failure the report carries the first witness pair (as labels) and an
    up-set U with Q_i(U) > Q_j(U).
    """
    if Q.n != poset.n:
        raise DomainError(f"Kernel has {Q.n} states, poset has {poset.n}")
    for i, j in poset.graph.tolist():
        if i == j:
            continue
        gain, mask = best_up_set(poset, Q.P[i] - Q.P[j])
        if gain > DIST_TOL:
            labels = frozenset(s for s, keep in zip(poset.states, mask) if keep)
            return MonotonicityReport(False, (poset.states[i], poset.states[j]), labels, gain)
    return MonotonicityReport(True)


def _coupled_row(Q: np.ndarray, poset: FinitePoset, i: int, j: int) -> tuple[float, np.ndarray]:
    a_val, plan = transport_plan(Q[i], Q[j], poset)
    r1 = np.clip(Q[i] - plan.sum(axis=1), 0.0, None)
    r2 = np.clip(Q[j] - plan.sum(axis=0), 0.0, None)
    rest = r1.sum()
    if rest > 0 and r2.sum() > 0:
        plan = plan + np.outer(r1, r2) / rest
    row = plan.reshape(-1)
    return a_val, row / row.sum()


def maximal_coupling_kernel(Q: FiniteKernel, poset: FinitePoset, workers: int | None = None) -> CoupledKernel:
    """⪯-maximal Markov coupling: row (i, j) attains α(Q_i, Q_j) on 𝔾.

    Off-𝔾 mass is the independent product of the unmatched residual
    marginals; a max flow leaves no residual pair inside 𝔾.
    """
    n = poset.n
    if Q.n != n:
        raise DomainError(f"Kernel has {Q.n} states, poset has {n}")
    pairs = [(i, j) for i in range(n) for j in range(n)]
    results = map_ordered(lambda ij: _coupled_row(Q.P, poset, *ij), pairs, workers)
    P = np.vstack([row for _, row in results])
    alphas = np.array([a for a, _ in results]).reshape(n, n)
    P.setflags(write=False)
    alphas.setflags(write=False)
    logger.debug(f"maximal coupling on {n} states: min alpha={alphas.min():.6f}")
    return CoupledKernel(P, poset, maximal=True, alphas=alphas)


def independent_coupling_kernel(Q: FiniteKernel, poset: FinitePoset) -> CoupledKernel:
    """Product coupling Q_i ⊗ Q_j for every pair."""
    n = poset.n
    P = np.einsum("ik,jl->ijkl", Q.P, Q.P).reshape(n * n, n * n)
    return CoupledKernel(P, poset, maximal=False)


def iterate_dist(mu, Q: FiniteKernel, t: int) -> FiniteDist:
    """μQ^t by repeated vector-matrix products."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    p = _vec(mu, Q.n, "mu").copy()
    for _ in range(t):
        p = p @ Q.P
    return FiniteDist.normalized(p)
