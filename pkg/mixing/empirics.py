"""Exact and Monte Carlo verifiers: coupling-time tails, visit counts, the supermartingale check,
and empirical Kolmogorov distances against the bound tables."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Union

import numpy as np
import pandas as pd
from scipy import stats

from config import EXACT_MAX_STATES, EXACT_MAX_VISITS, SOLVER_TOL, get_mc_config
from mixing.bounds import EpsilonSource, bound_terms
from mixing.drift import DriftCertificate, Interval, initial_mass
from mixing.errors import CapacityError, DomainError
from mixing.finite_core import CoupledKernel, FiniteDist, FiniteKernel, iterate_dist, kappa
from mixing.parallel import run_chunked
from mixing.poset import FinitePoset, compare
from mixing.srs import SRSModel, apply_map
from mixing.utils import safe_value

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = ["t", "kappa", "bound", "j_star", "tail_term", "coupling_term", "pass"]

InitialLaw = Union[float, Callable[[np.random.Generator, int], np.ndarray]]


# ── types ────────────────────────────────────────────────────────────────────

@dataclass
class CoupledPathStats:
    """Per-path coupling statistics; tau is inf when the pair never orders by T."""
    tau: np.ndarray
    visit_counts: np.ndarray
    unordered_fraction: np.ndarray
    ordering_trials: int
    ordering_successes: int
    absorbing_violations: int
    n_paths: int
    T: int
    seed: int
    absorbing: bool = True

    def tail(self, t: int) -> float:
        """Empirical P{τ > t}; censored paths count as τ > T."""
        return float(np.mean(self.tau > t))

    @property
    def success_rate(self) -> float:
        return self.ordering_successes / self.ordering_trials if self.ordering_trials else math.nan

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"path": np.arange(self.n_paths), "tau": self.tau, "visits": self.visit_counts})


@dataclass
class SupermartingaleReport:
    holds: bool
    on_C_worst: float
    on_C_witness: tuple | None
    off_C_worst: float
    off_C_witness: tuple | None
    gamma: float
    d: float

    def to_dict(self) -> dict:
        return safe_value(asdict(self))


@dataclass
class ComparisonRow:
    t: int
    kappa: float
    bound: float
    j_star: int
    tail_term: float
    coupling_term: float
    passed: bool


@dataclass
class ComparisonTable:
    rows: list[ComparisonRow]
    mode: str
    band: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_frame(self) -> pd.DataFrame:
        data = [
            (r.t, r.kappa, r.bound, r.j_star, r.tail_term, r.coupling_term, r.passed)
            for r in self.rows
        ]
        return pd.DataFrame(data, columns=COMPARISON_COLUMNS)

    def to_csv(self, path: str) -> str:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path


# ── distances ────────────────────────────────────────────────────────────────

def empirical_kolmogorov(samples_a, samples_b) -> float:
    """sup over thresholds of |ECDF_a − ECDF_b| (two-sample KS statistic)."""
    a = np.asarray(samples_a, dtype=float).reshape(-1)
    b = np.asarray(samples_b, dtype=float).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise DomainError("empirical_kolmogorov needs two nonempty samples")
    return float(stats.ks_2samp(a, b, method="asymp").statistic)


# ── exact engines on the augmented chain ─────────────────────────────────────

def _pair_masks(qhat: CoupledKernel, C: Iterable[int] | None):
    n = qhat.n
    in_C = np.zeros(n, dtype=bool)
    if C is not None:
        idx = np.asarray(list(C), dtype=int).reshape(-1)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise DomainError(f"Small set index out of range 0..{n - 1}")
        in_C[idx] = True
    in_CC = (in_C[:, None] & in_C[None, :]).reshape(-1)
    return in_CC, qhat.graph_mask


def _start(qhat: CoupledKernel, mu, mu2) -> np.ndarray:
    a = mu.p if isinstance(mu, FiniteDist) else np.asarray(mu, dtype=float)
    b = mu2.p if isinstance(mu2, FiniteDist) else np.asarray(mu2, dtype=float)
    if a.shape != (qhat.n,) or b.shape != (qhat.n,):
        raise DomainError(f"initial laws must have {qhat.n} states")
    return np.outer(a, b).reshape(-1)


def _guard(qhat: CoupledKernel, j: int, t: int):
    if qhat.n > EXACT_MAX_STATES or j > EXACT_MAX_VISITS:
        raise CapacityError(
            f"exact visit-count engine is limited to n <= {EXACT_MAX_STATES}, j <= {EXACT_MAX_VISITS} "
            f"(got n={qhat.n}, j={j})"
        )
    if j < 1 or t < 0:
        raise DomainError(f"need j >= 1 and t >= 0, got j={j}, t={t}")


def _advance(qhat: CoupledKernel, D: np.ndarray, in_CC: np.ndarray, cap: int) -> np.ndarray:
    """One step of (pair, k) with k = min(visits before now, cap)."""
    m = D.shape[0]
    counted = np.zeros_like(D)
    rows = np.arange(m)
    bump = in_CC.astype(int)
    for k in range(cap + 1):
        np.add.at(counted, (rows, np.minimum(k + bump, cap)), D[:, k])
    return qhat.P.T @ counted


def exact_Nt_tail(qhat: CoupledKernel, mu, mu2, C, j: int, t: int, lagged: bool = False) -> float:
    """Exact P{N_t < j}, N_t = number of s ≤ t with the pair in C×C.

    With lagged=True the count stops at t − 1 (N_{−1} = 0).
    """
    return float(exact_Nt_tails(qhat, mu, mu2, C, j, t, lagged)[t])


def exact_Nt_tails(qhat: CoupledKernel, mu, mu2, C, j: int, T: int, lagged: bool = False) -> np.ndarray:
    """exact_Nt_tail for every t = 0..T in one forward pass."""
    _guard(qhat, j, T)
    in_CC, _ = _pair_masks(qhat, C)
    cap = j
    D = np.zeros((qhat.n ** 2, cap + 1))
    D[:, 0] = _start(qhat, mu, mu2)
    now = np.minimum(np.arange(cap + 1)[None, :] + in_CC.astype(int)[:, None], cap)
    out = np.empty(T + 1)
    for t in range(T + 1):
        if t:
            D = _advance(qhat, D, in_CC, cap)
        out[t] = D[:, :j].sum() if lagged else D[now < j].sum()
    return out


def exact_tau_tails(qhat: CoupledKernel, mu, mu2, T: int) -> np.ndarray:
    """P{τ > t} for t = 0..T, τ the first time the pair lies on 𝔾."""
    off_G = ~qhat.graph_mask
    alive = _start(qhat, mu, mu2) * off_G
    out = np.empty(T + 1)
    out[0] = alive.sum()
    for t in range(1, T + 1):
        alive = (alive @ qhat.P) * off_G
        out[t] = alive.sum()
    return out


def exact_tau_tail(qhat: CoupledKernel, mu, mu2, t: int) -> float:
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    return float(exact_tau_tails(qhat, mu, mu2, t)[t])


def exact_tau_split(qhat: CoupledKernel, mu, mu2, C, j: int, t: int) -> tuple[float, float, float]:
    """(P{τ > t}, P{τ > t, N_{t−1} < j}, P{τ > t, N_{t−1} ≥ j})."""
    _guard(qhat, j, t)
    in_CC, G = _pair_masks(qhat, C)
    off_G = (~G)[:, None]
    cap = j
    D = np.zeros((qhat.n ** 2, cap + 1))
    D[:, 0] = _start(qhat, mu, mu2)
    D *= off_G
    for _ in range(t):
        D = _advance(qhat, D, in_CC, cap) * off_G
    few = float(D[:, :j].sum())
    many = float(D[:, j:].sum())
    return few + many, few, many


def supermartingale_check(qhat: CoupledKernel, cert: DriftCertificate) -> SupermartingaleReport:
    """Pointwise conditions behind the visit-count lemma.

    With W(x, x′) = ½[V(x) + V(x′)]: Q̂W ≤ γd on C×C and Q̂W ≤ γW off it.
    """
    n = qhat.n
    if not cert.finite or cert.V.size != n:
        raise DomainError(f"supermartingale_check needs V tabulated on {n} states")
    V = cert.V
    W = 0.5 * (V[:, None] + V[None, :]).reshape(-1)
    QW = qhat.P @ W
    gamma, d = cert.gamma, cert.d
    in_CC, _ = _pair_masks(qhat, cert.C)

    def worst(mask: np.ndarray, slack: np.ndarray):
        if not mask.any():
            return -math.inf, None
        idx = np.flatnonzero(mask)
        k = int(idx[np.argmax(slack[idx])])
        return float(slack[k]), divmod(k, n)

    on_val, on_at = worst(in_CC, QW - gamma * d)
    off_val, off_at = worst(~in_CC, QW - gamma * W)
    holds = on_val <= SOLVER_TOL and off_val <= SOLVER_TOL
    if not holds:
        logger.info(f"supermartingale check fails: on C×C {on_val:.3e} at {on_at}, off {off_val:.3e} at {off_at}")
    return SupermartingaleReport(holds, on_val, on_at, off_val, off_at, gamma, d)


# ── simulation ───────────────────────────────────────────────────────────────

def _sample_finite(rng: np.random.Generator, p: np.ndarray, size: int) -> np.ndarray:
    cum = np.cumsum(p)
    return np.minimum(np.searchsorted(cum, rng.random(size), side="right"), p.size - 1)


@dataclass
class _Tracker:
    """Accumulates coupling statistics for one chunk of paths."""
    size: int
    T: int
    absorbing: bool
    tau: np.ndarray = field(init=False)
    visits: np.ndarray = field(init=False)
    unordered: np.ndarray = field(init=False)
    violations: np.ndarray = field(init=False)
    trials: int = 0
    successes: int = 0

    def __post_init__(self):
        self.tau = np.full(self.size, np.inf)
        self.visits = np.zeros(self.size, dtype=np.int64)
        self.unordered = np.zeros(self.T + 1, dtype=np.int64)
        self.violations = np.zeros(self.size, dtype=bool)

    def record(self, t: int, ordered: np.ndarray, in_CC: np.ndarray, prev_trial: np.ndarray | None):
        if prev_trial is not None:
            self.trials += int(prev_trial.sum())
            self.successes += int((prev_trial & ordered).sum())
        seen = np.isfinite(self.tau)
        self.violations |= seen & ~ordered
        self.tau[~seen & ordered] = t
        self.visits += in_CC
        self.unordered[t] = int((~ordered).sum())
        if t < self.T:
            return in_CC & ~np.isfinite(self.tau)
        return None


def _merge(parts: list[_Tracker], n_paths: int, T: int, seed: int, absorbing: bool) -> CoupledPathStats:
    return CoupledPathStats(
        tau=np.concatenate([p.tau for p in parts]),
        visit_counts=np.concatenate([p.visits for p in parts]),
        unordered_fraction=sum(p.unordered for p in parts) / n_paths,
        ordering_trials=sum(p.trials for p in parts),
        ordering_successes=sum(p.successes for p in parts),
        absorbing_violations=int(sum(p.violations.sum() for p in parts)) if absorbing else 0,
        n_paths=n_paths, T=T, seed=seed, absorbing=absorbing,
    )


def coupled_simulate_finite(qhat: CoupledKernel, mu, mu2, C, T: int, n_paths: int, seed: int) -> CoupledPathStats:
    """Simulate the coupled chain from μ × μ′ for T steps on seed-derived substreams."""
    if T < 1 or n_paths < 1:
        raise DomainError(f"need T >= 1 and n_paths >= 1, got T={T}, n_paths={n_paths}")
    in_CC, G = _pair_masks(qhat, C)
    a = mu.p if isinstance(mu, FiniteDist) else np.asarray(mu, dtype=float)
    b = mu2.p if isinstance(mu2, FiniteDist) else np.asarray(mu2, dtype=float)
    n = qhat.n
    cum = np.cumsum(qhat.P, axis=1)

    def worker(rng: np.random.Generator, size: int) -> _Tracker:
        track = _Tracker(size, T, absorbing=True)
        pair = _sample_finite(rng, a, size) * n + _sample_finite(rng, b, size)
        trial = track.record(0, G[pair], in_CC[pair], None)
        for t in range(1, T + 1):
            u = rng.random(size)
            nxt = np.empty_like(pair)
            for p in np.unique(pair):
                sel = pair == p
                nxt[sel] = np.searchsorted(cum[p], u[sel], side="right")
            pair = np.minimum(nxt, n * n - 1)
            trial = track.record(t, G[pair], in_CC[pair], trial)
        return track

    parts = run_chunked(worker, n_paths, seed)
    result = _merge(parts, n_paths, T, seed, absorbing=True)
    if result.absorbing_violations and qhat.maximal:
        logger.warning(f"{result.absorbing_violations} paths left 𝔾 after coupling")
    return result


def _draw(law: InitialLaw, rng: np.random.Generator, size: int) -> np.ndarray:
    if callable(law):
        return np.asarray(law(rng, size), dtype=float).reshape(size)
    return np.full(size, float(law))


def _in_interval(C, xs: np.ndarray) -> np.ndarray:
    if C is None:
        return np.zeros(xs.shape, dtype=bool)
    if not isinstance(C, Interval):
        C = Interval(float(C[0]), float(C[1]))
    return C.contains(xs)


def coupled_simulate_srs(model: SRSModel, mu: InitialLaw, mu2: InitialLaw, C, T: int,
                         n_paths: int, seed: int) -> CoupledPathStats:
    """Independent-shock coupling of two copies; τ is the first ordering time.

    The pair is not forced to stay ordered, so `unordered_fraction` may
    rise again after τ.
    """
    if T < 1 or n_paths < 1:
        raise DomainError(f"need T >= 1 and n_paths >= 1, got T={T}, n_paths={n_paths}")

    def worker(rng: np.random.Generator, size: int) -> _Tracker:
        track = _Tracker(size, T, absorbing=False)
        x = _draw(mu, rng, size)
        x2 = _draw(mu2, rng, size)
        in_CC = _in_interval(C, x) & _in_interval(C, x2)
        trial = track.record(0, compare(model.order, x, x2), in_CC, None)
        for t in range(1, T + 1):
            x = apply_map(model, x, model.sample_shocks(rng, size))
            x2 = apply_map(model, x2, model.sample_shocks(rng, size))
            in_CC = _in_interval(C, x) & _in_interval(C, x2)
            trial = track.record(t, compare(model.order, x, x2), in_CC, trial)
        return track

    return _merge(run_chunked(worker, n_paths, seed), n_paths, T, seed, absorbing=False)


def simulate_marginals(model: SRSModel, law: InitialLaw, T: int, n_paths: int, seed) -> np.ndarray:
    """States at t = 0..T for n_paths independent copies, shape (n_paths, T + 1)."""
    def worker(rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty((size, T + 1))
        out[:, 0] = _draw(law, rng, size)
        for t in range(T):
            out[:, t + 1] = apply_map(model, out[:, t], model.sample_shocks(rng, size))
        return out

    return np.vstack(run_chunked(worker, n_paths, seed))


# ── distance versus bound ────────────────────────────────────────────────────

def _bound_row(eps: float, cert: DriftCertificate, H_val: float, t: int):
    coupling, tail = bound_terms(eps, cert.gamma, cert.d, H_val, t)
    values = coupling + tail
    k = int(np.argmin(values))
    return float(values[k]), k + 1, float(tail[k]), float(coupling[k])


def empirical_kappa_vs_bound(system: FiniteKernel | SRSModel, mu, mu2, cert: DriftCertificate,
                             eps: float | EpsilonSource, T: int, n_paths: int | None = None,
                             seed: int | None = None, poset: FinitePoset | None = None,
                             H_val: float | None = None) -> ComparisonTable:
    """Per t ≤ T: distance between the two laws at t, the optimised bound, and a pass flag.

    A finite kernel (with its poset) gives exact κ and passes at SOLVER_TOL.
    An SRS model gives the two-sample ECDF distance from n_paths copies per
    law, passing within the MC band of sigmas·sqrt((n_a + n_b)/(n_a n_b)).
    """
    eps_val = eps.value if isinstance(eps, EpsilonSource) else float(eps)
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")

    if isinstance(system, FiniteKernel):
        if poset is None:
            raise DomainError("finite mode needs the poset")
        H = H_val if H_val is not None else initial_mass(mu, mu2, cert.V)
        rows = []
        for t in range(1, T + 1):
            k_val = kappa(iterate_dist(mu, system, t), iterate_dist(mu2, system, t), poset)
            bound, j, tail, coup = _bound_row(eps_val, cert, H, t)
            rows.append(ComparisonRow(t, k_val, bound, j, tail, coup, k_val <= bound + SOLVER_TOL))
        return ComparisonTable(rows, "exact", SOLVER_TOL, {"H": H})

    if n_paths is None or seed is None:
        raise DomainError("Monte Carlo mode needs n_paths and seed")
    _, _, sigmas = get_mc_config()
    streams = np.random.SeedSequence(int(seed)).spawn(2)
    A = simulate_marginals(system, mu, T, n_paths, streams[0])
    B = simulate_marginals(system, mu2, T, n_paths, streams[1])
    if H_val is None:
        H_est = initial_mass(A[:, 0], B[:, 0], cert.V)
        H_val = H_est if isinstance(H_est, float) else H_est.value + sigmas * H_est.std_error
    band = sigmas * math.sqrt(2.0 / n_paths)
    rows = []
    for t in range(1, T + 1):
        k_val = empirical_kolmogorov(A[:, t], B[:, t])
        bound, j, tail, coup = _bound_row(eps_val, cert, H_val, t)
        rows.append(ComparisonRow(t, k_val, bound, j, tail, coup, k_val <= bound + band))
    failed = [r.t for r in rows if not r.passed]
    if failed:
        logger.warning(f"{system.name}: distance exceeds bound + band at t={failed}")
    return ComparisonTable(rows, "monte-carlo", band, {"H": H_val, "n_paths": n_paths, "seed": seed})
