"""Random finite instances and the invariant suites run by the self-test."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from config import DIST_TOL, SOLVER_TOL
from mixing.bounds import epsilon_exact, lemma_ggc_bound, theorem_bound
from mixing.drift import DriftCertificate, fit_drift, initial_mass
from mixing.empirics import exact_Nt_tails
from mixing.finite_core import (
    FiniteDist,
    FiniteKernel,
    alpha,
    iterate_dist,
    kappa,
    maximal_coupling_kernel,
    stoch_dominates,
    strassen_gap,
    total_variation,
)
from mixing.poset import FinitePoset

logger = logging.getLogger(__name__)

AlphaFn = Callable[[object, object, FinitePoset], float]

LAMBDA_GRID = np.linspace(0.0, 0.99, 100)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checked: int
    failures: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checked": self.checked, "failures": self.failures[:5]}


# ── generators ───────────────────────────────────────────────────────────────

def random_dist(rng: np.random.Generator, n: int, sparsity: float = 0.0) -> FiniteDist:
    w = rng.dirichlet(np.ones(n))
    if sparsity > 0:
        w = w * (rng.random(n) >= sparsity)
        if w.sum() == 0:
            w[rng.integers(n)] = 1.0
    return FiniteDist.normalized(w)


def random_poset(rng: np.random.Generator, n: int, density: float = 0.3) -> FinitePoset:
    """Closure of a random DAG drawn along a random topological order."""
    perm = rng.permutation(n)
    rel = np.zeros((n, n), dtype=bool)
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < density:
                rel[perm[a], perm[b]] = True
    return FinitePoset.from_relation(tuple(range(n)), rel)


def random_kernel(rng: np.random.Generator, n: int) -> FiniteKernel:
    return FiniteKernel(np.vstack([rng.dirichlet(np.ones(n)) for _ in range(n)]))


def random_increasing_kernel(rng: np.random.Generator, n: int) -> tuple[FiniteKernel, FinitePoset]:
    """Increasing kernel on the chain 0 < 1 < … < n−1.

    Tail sums of random rows are sorted column by column, so row i's tails
    are the i-th order statistics and grow with i.
    """
    rows = np.vstack([rng.dirichlet(np.ones(n)) for _ in range(n)])
    tails = np.cumsum(rows[:, ::-1], axis=1)[:, ::-1]
    tails = np.sort(tails, axis=0)
    tails[:, 0] = 1.0
    P = tails - np.hstack([tails[:, 1:], np.zeros((n, 1))])
    P = np.clip(P, 0.0, None)
    P /= P.sum(axis=1, keepdims=True)
    return FiniteKernel(P), FinitePoset.chain(n)


def pushed_up(rng: np.random.Generator, mu: FiniteDist, poset: FinitePoset) -> FiniteDist:
    """A law that stochastically dominates mu: each state's mass moves to a random upper bound."""
    out = np.zeros(poset.n)
    for i, m in enumerate(mu.p):
        ups = np.flatnonzero(poset.leq[i])
        out[rng.choice(ups)] += m
    return FiniteDist.normalized(out)


@dataclass
class TheoremInstance:
    Q: FiniteKernel
    poset: FinitePoset
    cert: DriftCertificate
    C: np.ndarray
    eps: float


def random_theorem_instance(rng: np.random.Generator, n: int = 6) -> TheoremInstance:
    """Increasing kernel, random V ≥ 1, fitted drift, d at the median of V, exact ε."""
    Q, poset = random_increasing_kernel(rng, n)
    V = 1.0 + np.sort(rng.exponential(2.0, n))
    d = float(max(1.0, np.median(V)))
    cert = fit_drift(Q, V, LAMBDA_GRID, d)
    C = cert.C
    return TheoremInstance(Q, poset, cert, C, epsilon_exact(Q, poset, C, workers=1))


# ── suites ───────────────────────────────────────────────────────────────────

def check_duality(seed: int, cases: int = 200, n_max: int = 8, alpha_fn: AlphaFn = alpha) -> SuiteResult:
    rng = np.random.default_rng(seed)
    failures = []
    for case in range(cases):
        n = int(rng.integers(1, n_max + 1))
        poset = random_poset(rng, n)
        mu, nu = random_dist(rng, n, 0.3), random_dist(rng, n, 0.3)
        total = alpha_fn(mu, nu, poset) + strassen_gap(mu, nu, poset)
        if abs(total - 1.0) > SOLVER_TOL:
            failures.append(f"case {case}: alpha + gap = {total:.12f}")
    return SuiteResult("duality", not failures, cases, failures)


def check_strassen(seed: int, cases: int = 100, n_max: int = 8, alpha_fn: AlphaFn = alpha) -> SuiteResult:
    rng = np.random.default_rng(seed)
    failures = []
    for case in range(cases):
        n = int(rng.integers(1, n_max + 1))
        poset = random_poset(rng, n)
        mu = random_dist(rng, n, 0.3)
        nu = pushed_up(rng, mu, poset) if case % 2 == 0 else random_dist(rng, n, 0.3)
        full = alpha_fn(mu, nu, poset) >= 1.0 - SOLVER_TOL
        if full != stoch_dominates(mu, nu, poset):
            failures.append(f"case {case}: alpha==1 is {full} but dominance is {not full}")
    return SuiteResult("strassen", not failures, cases, failures)


def check_identity_collapse(seed: int, cases: int = 100, n_max: int = 8, alpha_fn: AlphaFn = alpha) -> SuiteResult:
    rng = np.random.default_rng(seed)
    failures = []
    for case in range(cases):
        n = int(rng.integers(1, n_max + 1))
        poset = FinitePoset.antichain(n)
        mu, nu = random_dist(rng, n), random_dist(rng, n)
        tv = total_variation(mu, nu)
        if abs(kappa(mu, nu, poset) - tv) > 1e-12:
            failures.append(f"case {case}: kappa != TV")
        if abs(alpha_fn(mu, nu, poset) - (1.0 - tv)) > DIST_TOL:
            failures.append(f"case {case}: alpha != 1 - TV")
    return SuiteResult("identity_collapse", not failures, cases, failures)


def check_theorem(seed: int, cases: int = 1, n: int = 6, t_max: int = 20, pairs: int = 5) -> SuiteResult:
    """κ(μQ^t, μ′Q^t) ≤ (1−ε)^j + γ^t d^{j−1} H for all j ≤ t ≤ t_max."""
    rng = np.random.default_rng(seed)
    failures, checked = [], 0
    for case in range(cases):
        inst = random_theorem_instance(rng, n)
        for _ in range(pairs):
            mu, mu2 = random_dist(rng, n), random_dist(rng, n)
            H_val = initial_mass(mu, mu2, inst.cert.V)
            a, b = mu, mu2
            for t in range(1, t_max + 1):
                a, b = iterate_dist(a, inst.Q, 1), iterate_dist(b, inst.Q, 1)
                k_val = kappa(a, b, inst.poset)
                for j in range(1, t + 1):
                    checked += 1
                    bound = theorem_bound(inst.eps, inst.cert.gamma, inst.cert.d, H_val, j, t)
                    if k_val > bound + SOLVER_TOL:
                        failures.append(f"case {case}: t={t} j={j} kappa {k_val:.6g} > bound {bound:.6g}")
    return SuiteResult("theorem", not failures, checked, failures)


def check_lemma(seed: int, cases: int = 1, n: int = 6, t_max: int = 20, j_max: int = 10, pairs: int = 5) -> SuiteResult:
    """Exact P{N_t < j} ≤ γ^t d^{j−1} H on the maximal coupling."""
    rng = np.random.default_rng(seed)
    failures, checked = [], 0
    for case in range(cases):
        inst = random_theorem_instance(rng, n)
        qhat = maximal_coupling_kernel(inst.Q, inst.poset, workers=1)
        for _ in range(pairs):
            mu, mu2 = random_dist(rng, n), random_dist(rng, n)
            H_val = initial_mass(mu, mu2, inst.cert.V)
            for j in range(1, j_max + 1):
                tails = exact_Nt_tails(qhat, mu, mu2, inst.C, j, t_max)
                for t in range(j, t_max + 1):
                    checked += 1
                    bound = lemma_ggc_bound(inst.cert.gamma, inst.cert.d, H_val, j, t)
                    if tails[t] > bound + SOLVER_TOL:
                        failures.append(f"case {case}: t={t} j={j} P(N_t<j) {tails[t]:.6g} > {bound:.6g}")
    return SuiteResult("lemma", not failures, checked, failures)


def fast_suites(seed: int, alpha_fn: AlphaFn = alpha) -> list[tuple[str, Callable[[], SuiteResult]]]:
    """The self-test subset, as (name, thunk) pairs in run order."""
    return [
        ("duality", lambda: check_duality(seed, 200, 8, alpha_fn)),
        ("strassen", lambda: check_strassen(seed, 100, 8, alpha_fn)),
        ("identity_collapse", lambda: check_identity_collapse(seed, 100, 8, alpha_fn)),
        ("theorem", lambda: check_theorem(seed)),
        ("lemma", lambda: check_lemma(seed)),
    ]
