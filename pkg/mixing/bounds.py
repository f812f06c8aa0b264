"""Coupling constant ε, the visit-count tail bound, and the Kolmogorov-distance bound tables."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Literal, Sequence

import numpy as np
import pandas as pd

from config import UNDERFLOW
from mixing.drift import DriftCertificate
from mixing.errors import DomainError
from mixing.finite_core import FiniteKernel, alpha
from mixing.parallel import map_ordered
from mixing.poset import FinitePoset
from mixing.utils import safe_value

logger = logging.getLogger(__name__)

BOUND_COLUMNS = ["t", "j_star", "bound_value", "tail_term", "coupling_term", "vacuous", "underflow"]

# exp() overflows a double above this
_LOG_MAX = 709.0


@dataclass(frozen=True)
class EpsilonSource:
    """ε (exact) or its Monte Carlo lower bound e, with provenance."""
    value: float
    provenance: Literal["exact", "monte-carlo", "closed-form"] = "exact"
    std_error: float = 0.0
    n_samples: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise DomainError(f"epsilon must lie in [0, 1], got {self.value}")

    def to_dict(self) -> dict:
        return safe_value(asdict(self))


@dataclass(frozen=True)
class BoundRow:
    t: int
    j_star: int
    bound_value: float
    tail_term: float
    coupling_term: float
    vacuous: bool
    underflow: bool


@dataclass
class BoundReport:
    cert: DriftCertificate
    eps: EpsilonSource
    H_val: float
    rows: list[BoundRow]
    metadata: dict = field(default_factory=dict)

    @property
    def vacuous_only(self) -> bool:
        return bool(self.rows) and all(r.vacuous for r in self.rows)

    def envelope(self) -> np.ndarray:
        """Running minimum of the bound over t, which is what monotonicity is asserted on."""
        return np.minimum.accumulate(np.array([r.bound_value for r in self.rows]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.rows], columns=BOUND_COLUMNS)

    def to_csv(self, path: str) -> str:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path

    @classmethod
    def from_csv(cls, path: str, cert: DriftCertificate, eps: EpsilonSource, H_val: float,
                 metadata: dict | None = None) -> BoundReport:
        df = pd.read_csv(path, float_precision="round_trip")
        missing = [c for c in BOUND_COLUMNS if c not in df.columns]
        if missing:
            raise DomainError(f"{path} is missing columns {missing}")
        rows = [
            BoundRow(
                t=int(r.t), j_star=int(r.j_star),
                bound_value=float(r.bound_value), tail_term=float(r.tail_term),
                coupling_term=float(r.coupling_term),
                vacuous=bool(r.vacuous), underflow=bool(r.underflow),
            )
            for r in df.itertuples(index=False)
        ]
        return cls(cert, eps, H_val, rows, dict(metadata or {}))

    def to_dict(self) -> dict:
        best = min(self.rows, key=lambda r: r.bound_value) if self.rows else None
        return safe_value({
            "certificate": self.cert.to_dict(),
            "epsilon": self.eps.to_dict(),
            "H": self.H_val,
            "metadata": self.metadata,
            "vacuous_only": self.vacuous_only,
            "best": asdict(best) if best else None,
            "rows": [asdict(r) for r in self.rows],
        })


# ── ε and its minorization analogue ──────────────────────────────────────────

def _indices(C: Iterable[int], n: int) -> list[int]:
    idx = sorted({int(i) for i in np.asarray(list(C), dtype=int).reshape(-1)})
    if not idx:
        raise DomainError("Small set C is empty; ε is an infimum over C×C")
    if idx[0] < 0 or idx[-1] >= n:
        raise DomainError(f"Small set index out of range 0..{n - 1}")
    return idx


def epsilon_exact(Q: FiniteKernel, poset: FinitePoset, C: Iterable[int], workers: int | None = None) -> float:
    """ε = min over ordered pairs (x, x′) ∈ C×C of α(Q_x, Q_x′)."""
    idx = _indices(C, Q.n)
    pairs = [(x, y) for x in idx for y in idx]
    values = map_ordered(lambda p: alpha(Q.P[p[0]], Q.P[p[1]], poset), pairs, workers)
    k = int(np.argmin(values))
    logger.debug(f"epsilon_exact over {len(pairs)} pairs: {values[k]:.6f} at {pairs[k]}")
    return float(values[k])


def minorization_constant(Q: FiniteKernel | np.ndarray, C: Iterable[int]) -> float:
    """Largest ε̂ with ε̂·ν ≤ Q(x, ·) for all x ∈ C: Σ_y min_{x∈C} Q(x, y).

    Q may also be a bare matrix of one-step laws, one row per point.
    """
    P = Q.P if isinstance(Q, FiniteKernel) else np.asarray(Q, dtype=float)
    idx = _indices(C, P.shape[0])
    return float(P[idx].min(axis=0).sum())


# ── scalar bounds ────────────────────────────────────────────────────────────

def _check(gamma: float, d: float, H_val: float, j: int, t: int):
    if t < 1 or j < 1 or j > t:
        raise DomainError(f"need 1 <= j <= t, got j={j}, t={t}")
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if gamma < 0 or H_val < 0:
        raise DomainError(f"gamma and H must be nonnegative, got {gamma}, {H_val}")


def lemma_ggc_bound(gamma: float, d: float, H_val: float, j: int, t: int) -> float:
    """γ^t d^{j−1} H, evaluated in log space; inf when it overflows."""
    _check(gamma, d, H_val, j, t)
    if gamma == 0 or H_val == 0:
        return 0.0
    # same operations as bound_terms, so table rows recompute bit for bit
    log_value = t * np.log(gamma) + float(j - 1) * np.log(d) + np.log(H_val)
    return math.inf if log_value > _LOG_MAX else float(np.exp(log_value))


def _coupling(eps: float, j):
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"eps must lie in [0, 1], got {eps}")
    if eps == 1.0:
        return np.zeros_like(np.asarray(j, dtype=float))
    return np.exp(np.asarray(j, dtype=float) * math.log1p(-eps))


def theorem_bound(eps: float, gamma: float, d: float, H_val: float, j: int, t: int) -> float:
    """(1 − ε)^j + γ^t d^{j−1} H, unclipped."""
    _check(gamma, d, H_val, j, t)
    return float(_coupling(eps, j)) + lemma_ggc_bound(gamma, d, H_val, j, t)


def bound_terms(eps: float, gamma: float, d: float, H_val: float, t: int):
    """Coupling and tail terms for every j = 1..t, as two arrays."""
    j = np.arange(1, t + 1, dtype=float)
    coupling = _coupling(eps, j)
    with np.errstate(divide="ignore"):
        log_tail = t * np.log(gamma) + (j - 1) * np.log(d) + np.log(H_val)
    tail = np.where(log_tail > _LOG_MAX, np.inf, np.exp(np.minimum(log_tail, _LOG_MAX)))
    return coupling, tail


def optimize_bound(eps: float, gamma: float, d: float, H_val: float, t: int) -> tuple[int, float]:
    """Exhaustive minimum over j ∈ {1, …, t}; the first minimiser wins."""
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")
    _check(gamma, d, H_val, 1, t)
    coupling, tail = bound_terms(eps, gamma, d, H_val, t)
    values = coupling + tail
    k = int(np.argmin(values))
    return k + 1, float(values[k])


def _row(eps: float, gamma: float, d: float, H_val: float, t: int) -> BoundRow:
    coupling, tail = bound_terms(eps, gamma, d, H_val, t)
    values = coupling + tail
    k = int(np.argmin(values))
    value = float(values[k])
    underflow = value < UNDERFLOW
    if underflow:
        value = 0.0
    return BoundRow(
        t=t, j_star=k + 1, bound_value=value,
        tail_term=float(tail[k]), coupling_term=float(coupling[k]),
        vacuous=value >= 1.0, underflow=underflow,
    )


def bound_table(cert: DriftCertificate, eps: float | EpsilonSource, H_val: float, t_max: int,
                metadata: dict | None = None, workers: int | None = None) -> BoundReport:
    """One optimised row per t = 1..t_max."""
    if t_max < 1:
        raise DomainError(f"t_max must be >= 1, got {t_max}")
    source = eps if isinstance(eps, EpsilonSource) else EpsilonSource(float(eps))
    H_val = float(getattr(H_val, "value", H_val))
    _check(cert.gamma, cert.d, H_val, 1, 1)
    rows = map_ordered(
        lambda t: _row(source.value, cert.gamma, cert.d, H_val, t),
        range(1, t_max + 1),
        workers,
    )
    report = BoundReport(cert, source, H_val, rows, dict(metadata or {}))
    if report.vacuous_only:
        logger.warning(f"every bound row up to t={t_max} is vacuous (gamma={cert.gamma:.4g}, eps={source.value:.4g})")
    return report


# ── d selection ──────────────────────────────────────────────────────────────

@dataclass
class DSearchResult:
    d: float
    j_star: int
    value: float
    scanned: list[tuple[float, float]]


def search_d(d_grid: Sequence[float], t: int,
             build: Callable[[float], tuple[float, float, float] | None],
             workers: int | None = None) -> DSearchResult:
    """Pick d minimising the optimised bound at horizon t.

    build(d) returns (gamma, eps, H) for that d, or None when the small set
    is empty or ε is unavailable. Ties go to the smaller d.
    """
    grid = sorted({float(x) for x in d_grid})
    if not grid:
        raise DomainError("d_grid must not be empty")

    def evaluate(d: float):
        built = build(d)
        if built is None:
            return None
        gamma, eps, H_val = built
        return optimize_bound(eps, gamma, d, H_val, t)

    results = map_ordered(evaluate, grid, workers)
    scanned = [(d, r[1]) for d, r in zip(grid, results) if r is not None]
    if not scanned:
        raise DomainError("no d in the grid produced a usable bound")
    best = None
    for d, r in zip(grid, results):
        if r is not None and (best is None or r[1] < best[2]):
            best = (d, r[0], r[1])
    logger.info(f"search_d at t={t}: d={best[0]:.4g} j*={best[1]} bound={best[2]:.4g}")
    return DSearchResult(best[0], best[1], best[2], scanned)
