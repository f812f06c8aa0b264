"""Geometric drift condition QV ≤ λV + β, its constants γ and C, and the initial-mass functional H."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from config import DIST_TOL, MARGINAL_TOL
from mixing.errors import DomainError, InvalidCertificateError
from mixing.finite_core import CoupledKernel, FiniteDist, FiniteKernel
from mixing.utils import EstimateWithError, safe_value

logger = logging.getLogger(__name__)

# doubling steps allowed while bracketing V(x) = d on an unbounded domain
_MAX_BRACKET_DOUBLINGS = 200


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return self.lo > self.hi

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (x >= self.lo) & (x <= self.hi)

    def to_dict(self) -> dict:
        return safe_value({"lo": self.lo, "hi": self.hi, "empty": self.empty})

    @classmethod
    def nothing(cls) -> Interval:
        return cls(math.inf, -math.inf)


HALF_LINE = Interval(0.0, math.inf)


@dataclass(frozen=True, eq=False)
class DriftCertificate:
    """(V, λ, β, d) with γ = λ + 2β/d and C = {V ≤ d}.

    V is either a table over finite states or a vectorized callable on a
    real domain. `verified` is only ever set by a drift check.
    """
    V: np.ndarray | Callable
    lam: float
    beta: float
    d: float = 1.0
    v_name: str = "table"
    domain: Interval | None = None
    verified: bool = False

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise InvalidCertificateError(f"lambda must be finite and >= 0, got {self.lam}")
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise InvalidCertificateError(f"beta must be finite and >= 0, got {self.beta}")
        if not (self.d >= 1 and math.isfinite(self.d)):
            raise InvalidCertificateError(f"d must be finite and >= 1, got {self.d}")
        if not callable(self.V):
            V = np.array(self.V, dtype=float)
            if V.ndim != 1 or V.size == 0:
                raise InvalidCertificateError(f"V table must be a nonempty vector, got shape {V.shape}")
            if not np.all(np.isfinite(V)) or (V < 1).any():
                bad = int(np.flatnonzero(~(V >= 1))[0]) if (~(V >= 1)).any() else -1
                raise InvalidCertificateError(f"V must be finite and >= 1 everywhere (state {bad}: {V[bad]})")
            V.setflags(write=False)
            object.__setattr__(self, "V", V)

    @property
    def gamma(self) -> float:
        return self.lam + 2.0 * self.beta / self.d

    @property
    def finite(self) -> bool:
        return not callable(self.V)

    @property
    def C(self):
        return small_set(self.V, self.d, self.domain if not self.finite else None)

    def evaluate(self, x) -> np.ndarray:
        if self.finite:
            return self.V[np.asarray(x, dtype=int)]
        return np.asarray(self.V(np.asarray(x, dtype=float)), dtype=float)

    def with_d(self, d: float) -> DriftCertificate:
        """Same (V, λ, β) at another d; the drift inequality does not involve d."""
        return replace(self, d=d)

    def to_dict(self) -> dict:
        C = self.C
        return safe_value({
            "V": self.v_name if not self.finite else self.V,
            "v_name": self.v_name,
            "lambda": self.lam,
            "beta": self.beta,
            "d": self.d,
            "gamma": self.gamma,
            "C": C.to_dict() if isinstance(C, Interval) else C,
            "verified": self.verified,
        })


@dataclass
class DriftReport:
    verified: bool
    max_excess: float
    worst_state: object
    certificate: DriftCertificate

    def to_dict(self) -> dict:
        return safe_value({
            "verified": self.verified,
            "max_excess": self.max_excess,
            "worst_state": self.worst_state,
        })


# ── checks ───────────────────────────────────────────────────────────────────

def _table(cert: DriftCertificate, n: int) -> np.ndarray:
    if not cert.finite:
        raise DomainError("Finite drift checks need V tabulated on the states")
    if cert.V.size != n:
        raise DomainError(f"V has {cert.V.size} entries, kernel has {n} states")
    return cert.V


def verify_drift(Q: FiniteKernel, cert: DriftCertificate) -> DriftReport:
    """Exact check of QV(x) ≤ λV(x) + β on every state."""
    V = _table(cert, Q.n)
    excess = Q.apply(V) - cert.lam * V - cert.beta
    worst = int(np.argmax(excess))
    ok = bool(excess[worst] <= DIST_TOL)
    if not ok:
        logger.info(f"drift fails at state {worst}: excess {excess[worst]:.3e}")
    return DriftReport(ok, float(excess[worst]), worst, replace(cert, verified=ok))


def verify_coupled_drift(qhat: CoupledKernel, cert: DriftCertificate) -> DriftReport:
    """Exact check of Q̂W ≤ λW + β with W(i, j) = (V_i + V_j)/2."""
    n = qhat.n
    V = _table(cert, n)
    W = 0.5 * (V[:, None] + V[None, :]).reshape(-1)
    excess = qhat.P @ W - cert.lam * W - cert.beta
    worst = int(np.argmax(excess))
    # coupled rows match their marginals to MARGINAL_TOL only
    ok = bool(excess[worst] <= MARGINAL_TOL * max(1.0, float(W.max())))
    return DriftReport(ok, float(excess[worst]), divmod(worst, n), replace(cert, verified=ok))


def fit_drift(Q: FiniteKernel, V, lambda_grid: Sequence[float], d: float = 1.0) -> DriftCertificate:
    """Smallest-γ certificate over a λ grid, with β(λ) = max(0, max_x QV(x) − λV(x))."""
    grid = sorted(float(x) for x in lambda_grid)
    if not grid:
        raise DomainError("lambda_grid must not be empty")
    if grid[0] < 0:
        raise DomainError(f"lambda values must be >= 0, got {grid[0]}")
    V = np.asarray(V, dtype=float)
    QV = Q.apply(V)
    betas = np.array([max(0.0, float(np.max(QV - lam * V))) for lam in grid])
    gammas = np.array(grid) + 2.0 * betas / d
    k = int(np.argmin(gammas))
    cert = DriftCertificate(V, grid[k], float(betas[k]), d)
    report = verify_drift(Q, cert)
    logger.debug(f"fit_drift: lambda={grid[k]} beta={betas[k]:.6g} gamma={gammas[k]:.6g}")
    return report.certificate


# ── H and C ──────────────────────────────────────────────────────────────────

def initial_mass(mu, mu2, V) -> float | EstimateWithError:
    """H(μ, μ′) = ½[μ(V) + μ′(V)].

    Finite laws (FiniteDist or weight vectors with a V table) and point
    states give an exact float; sample arrays with a callable V give a
    sample-mean estimate with its standard error.
    """
    if isinstance(mu, FiniteDist) or isinstance(mu2, FiniteDist) or not callable(V):
        if callable(V):
            raise DomainError("finite laws need a tabulated V")
        a = mu.p if isinstance(mu, FiniteDist) else np.asarray(mu, dtype=float)
        b = mu2.p if isinstance(mu2, FiniteDist) else np.asarray(mu2, dtype=float)
        table = np.asarray(V, dtype=float)
        return 0.5 * (float(a @ table) + float(b @ table))
    a = np.asarray(mu, dtype=float)
    b = np.asarray(mu2, dtype=float)
    if a.ndim == 0 and b.ndim == 0:
        return 0.5 * (float(V(a)) + float(V(b)))
    va = np.atleast_1d(np.asarray(V(a), dtype=float))
    vb = np.atleast_1d(np.asarray(V(b), dtype=float))
    if va.size == 0 or vb.size == 0:
        raise DomainError("H needs at least one sample from each law")
    value = 0.5 * (va.mean() + vb.mean())
    var_a = va.var(ddof=1) / va.size if va.size > 1 else 0.0
    var_b = vb.var(ddof=1) / vb.size if vb.size > 1 else 0.0
    return EstimateWithError(float(value), 0.5 * math.sqrt(var_a + var_b), int(va.size + vb.size))


H = initial_mass


def small_set(V, d: float, domain: Interval | None = None):
    """C = {x : V(x) ≤ d}.

    A V table gives an index array. A callable V on a real interval is
    taken to be nondecreasing and gives an Interval [lo, x_hi] with
    V(x_hi) = d solved by brentq.
    """
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if not callable(V):
        C = np.flatnonzero(np.asarray(V, dtype=float) <= d)
        if C.size == 0:
            logger.warning(f"small set {{V <= {d}}} is empty")
        return C
    domain = domain or HALF_LINE
    lo, hi = float(domain.lo), float(domain.hi)

    def g(x: float) -> float:
        return float(V(x)) - d

    if g(lo) > 0:
        logger.warning(f"small set {{V <= {d}}} is empty on [{lo}, {hi}]")
        return Interval.nothing()
    g_hi = g(hi)
    if g_hi <= 0:
        return Interval(lo, hi)
    if math.isfinite(hi):
        return Interval(lo, brentq(g, lo, hi))
    b, step = lo, 1.0
    for _ in range(_MAX_BRACKET_DOUBLINGS):
        b = lo + step
        if g(b) > 0:
            return Interval(lo, brentq(g, lo, b))
        step *= 2.0
    return Interval(lo, hi)
