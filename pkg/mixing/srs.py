"""Stochastic recursive sequences X_{t+1} = F(X_t, W_{t+1}) and the lower bound e on ε.

Shocks are drawn by inverse CDF from uniforms so a seed pins every
sample on every platform. Models with a finite shock law also carry its
support, which makes e, QV and the one-step kernel exactly computable.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import stats
from scipy.integrate import quad

from config import DIST_TOL, SOLVER_TOL, get_mc_config
from mixing.drift import HALF_LINE, DriftCertificate, DriftReport, Interval
from mixing.errors import ConfigError, DomainError, ModelError
from mixing.finite_core import FiniteKernel
from mixing.parallel import run_chunked
from mixing.poset import FinitePoset, OrderKind, compare
from mixing.utils import EstimateWithError

logger = logging.getLogger(__name__)

ShockPPF = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class SRSModel:
    """A monotone-or-not recursion on an ordered real state space.

    F takes states of shape (m,) and shocks of shape (m, shock_dim) and
    returns next states of shape (m,).
    """
    name: str
    order: OrderKind
    F: Callable[[np.ndarray, np.ndarray], np.ndarray]
    shock_ppf: ShockPPF
    shock_dim: int = 1
    shock_method: str = "inverse-cdf"
    shock_support: tuple[np.ndarray, np.ndarray] | None = None
    domain: Interval = HALF_LINE
    drift_hint: DriftCertificate | None = None
    C_extremes: tuple[float, float] | None = None
    params: dict = field(default_factory=dict)

    def sample_shocks(self, rng: np.random.Generator, m: int) -> np.ndarray:
        u = rng.random((m, self.shock_dim))
        return np.asarray(self.shock_ppf(u), dtype=float).reshape(m, self.shock_dim)


@dataclass
class MonotonicityResult:
    passed: bool
    n_checked: int
    counterexample: dict | None = None

    def __bool__(self) -> bool:
        return self.passed


@dataclass
class PremiseReport:
    passed: bool
    worst_x: float
    worst_excess: float
    rows: list[dict]


# ── stepping ─────────────────────────────────────────────────────────────────

def apply_map(model: SRSModel, x, w) -> np.ndarray:
    """Vectorized F with the state-space check."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float).reshape(-1, model.shock_dim)
    y = np.asarray(model.F(x, w), dtype=float)
    bad = ~(np.isfinite(y) & model.domain.contains(y))
    if bad.any():
        k = int(np.flatnonzero(bad.reshape(-1))[0])
        raise ModelError(f"{model.name}: F left the state space ({y.reshape(-1)[k]!r} from x={x.reshape(-1)[k % x.size]!r})")
    return y


def step(model: SRSModel, x: float, w) -> float:
    """F(x, w) for a single state and shock."""
    if not bool(model.domain.contains(x)):
        raise ModelError(f"{model.name}: state {x!r} outside [{model.domain.lo}, {model.domain.hi}]")
    return float(apply_map(model, np.array([x], dtype=float), np.atleast_1d(w))[0])


def simulate_path(model: SRSModel, x0: float, T: int, seed: int) -> np.ndarray:
    if T < 0:
        raise DomainError(f"T must be >= 0, got {T}")
    rng = np.random.default_rng(seed)
    shocks = model.sample_shocks(rng, T)
    path = np.empty(T + 1)
    path[0] = x0
    for t in range(T):
        try:
            path[t + 1] = step(model, path[t], shocks[t])
        except ModelError as e:
            raise ModelError(f"{e} at t={t + 1}") from e
    return path


# ── monotonicity and e ───────────────────────────────────────────────────────

def _default_pairs(model: SRSModel) -> Callable:
    if model.order.tag != "total_real":
        raise ConfigError(f"{model.name}: supply a state_pair_sampler for order {model.order.tag}")
    lo = model.domain.lo if math.isfinite(model.domain.lo) else -10.0
    hi = model.domain.hi if math.isfinite(model.domain.hi) else lo + 10.0

    def sampler(rng: np.random.Generator, n: int):
        a = lo + (hi - lo) * rng.random(n)
        b = lo + (hi - lo) * rng.random(n)
        return np.minimum(a, b), np.maximum(a, b)

    return sampler


def monotonicity_test(model: SRSModel, state_pair_sampler: Callable | None = None,
                      n: int = 1000, seed: int = 0) -> MonotonicityResult:
    """Sample x ⪯ x′ and a common shock w; check F(x, w) ⪯ F(x′, w)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    sampler = state_pair_sampler or _default_pairs(model)
    rng = np.random.default_rng(seed)
    xs, xs2 = sampler(rng, n)
    w = model.sample_shocks(rng, n)
    ok = compare(model.order, apply_map(model, xs, w), apply_map(model, xs2, w))
    if ok.all():
        return MonotonicityResult(True, n)
    k = int(np.flatnonzero(~ok)[0])
    example = {"x": float(xs[k]), "x2": float(xs2[k]), "w": w[k].tolist()}
    logger.info(f"{model.name}: monotonicity counterexample {example}")
    return MonotonicityResult(False, n, example)


def _extremes(model: SRSModel, C) -> tuple[float, float] | None:
    if C is None:
        return model.C_extremes
    if isinstance(C, Interval):
        if C.empty:
            raise DomainError("Small set C is empty")
        return (C.lo, C.hi)
    lo, hi = C
    if lo > hi:
        raise DomainError("Small set C is empty")
    return (float(lo), float(hi))


def _ordered_frequency(model: SRSModel, x_lo: float, x_hi: float, n: int, seed) -> EstimateWithError:
    def worker(rng: np.random.Generator, size: int) -> int:
        w = model.sample_shocks(rng, size)
        w2 = model.sample_shocks(rng, size)
        lows = apply_map(model, np.full(size, x_lo), w)
        highs = apply_map(model, np.full(size, x_hi), w2)
        return int(compare(model.order, highs, lows).sum())

    hits = sum(run_chunked(worker, n, seed))
    p = hits / n
    seed_val = seed if isinstance(seed, int) else None
    return EstimateWithError(p, math.sqrt(p * (1.0 - p) / n), n, seed_val)


def estimate_e(model: SRSModel, C=None, n: int = 100_000, seed: int | None = None,
               grid: Sequence[tuple[float, float]] | None = None) -> EstimateWithError:
    """Monte Carlo estimate of e = inf over C×C of P{F(x′, W′) ⪯ F(x, W)}.

    Under a total order with monotone F the infimum sits at x = inf C,
    x′ = sup C; otherwise a grid of (x, x′) pairs is required and the
    minimum cell is returned.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if seed is None:
        raise ConfigError("estimate_e needs a seed")
    extremes = _extremes(model, C)
    reducible = extremes is not None and model.order.tag == "total_real"
    if reducible and grid is None:
        mono = monotonicity_test(model, n=1000, seed=seed)
        if not mono:
            reducible = False
            logger.warning(f"{model.name}: F is not monotone, extreme-pair reduction disabled")
    if reducible and grid is None:
        x_lo, x_hi = extremes
        est = _ordered_frequency(model, x_lo, x_hi, n, seed)
        logger.debug(f"{model.name}: e at ({x_lo}, {x_hi}) = {est.value:.6f} ± {est.std_error:.2e}")
        return est
    if not grid:
        raise ConfigError(f"{model.name}: no C extremes usable and no grid given for estimate_e")
    children = np.random.SeedSequence(int(seed)).spawn(len(grid))
    cells = []
    best = None
    for (x, x2), child in zip(grid, children):
        est = _ordered_frequency(model, float(x), float(x2), n, child)
        cells.append((float(x), float(x2), est.value, est.std_error))
        if best is None or est.value < best.value:
            best = est
    return EstimateWithError(best.value, best.std_error, n * len(grid), seed, tuple(cells))


def exact_e(model: SRSModel, C=None, pairs: Sequence[tuple[float, float]] | None = None) -> float:
    """e by enumeration over a finite shock support.

    Without `pairs` the extreme pair of C is used, which assumes monotone F.
    """
    if model.shock_support is None:
        raise ConfigError(f"{model.name}: exact_e needs a finite shock support")
    values, probs = model.shock_support
    values = np.asarray(values, dtype=float).reshape(len(probs), model.shock_dim)
    probs = np.asarray(probs, dtype=float)
    if pairs is None:
        extremes = _extremes(model, C)
        if extremes is None:
            raise ConfigError(f"{model.name}: no C given and no C_extremes set")
        pairs = [extremes]
    K = probs.size
    weight = np.outer(probs, probs)
    best = 1.0
    for x, x2 in pairs:
        lows = apply_map(model, np.full(K, float(x)), values)
        highs = apply_map(model, np.full(K, float(x2)), values)
        # rows index W′ (with x2), columns index W (with x)
        ordered = compare(model.order, highs[:, None], lows[None, :])
        best = min(best, float((weight * ordered).sum()))
    return best


# ── expectations and drift on a grid ─────────────────────────────────────────

def expected_value(model: SRSModel, f: Callable, x: float, n: int | None = None,
                   seed=None) -> EstimateWithError:
    """E[f(F(x, W))]: exact sum, 1-d quadrature, or Monte Carlo.

    For quadrature the std_error field carries quad's absolute error estimate.
    """
    if model.shock_support is not None:
        values, probs = model.shock_support
        values = np.asarray(values, dtype=float).reshape(len(probs), model.shock_dim)
        y = apply_map(model, np.full(len(probs), float(x)), values)
        return EstimateWithError(float(np.dot(probs, f(y))), 0.0, len(probs))
    if model.shock_dim == 1:
        def integrand(u: float) -> float:
            w = np.asarray(model.shock_ppf(np.array([[u]])), dtype=float)
            return float(f(apply_map(model, np.array([float(x)]), w))[0])

        value, err = quad(integrand, 0.0, 1.0, limit=200)
        return EstimateWithError(float(value), float(err), 0)
    if n is None or seed is None:
        raise ConfigError(f"{model.name}: Monte Carlo expectation needs n and seed")

    def worker(rng: np.random.Generator, size: int):
        fy = np.asarray(f(apply_map(model, np.full(size, float(x)), model.sample_shocks(rng, size))), dtype=float)
        return fy.sum(), (fy * fy).sum()

    parts = run_chunked(worker, n, seed)
    s = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s / n
    var = max(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return EstimateWithError(mean, math.sqrt(var / n), n, seed if isinstance(seed, int) else None)


def _grid_expectations(model: SRSModel, V: Callable, grid, n, seed) -> list[EstimateWithError]:
    grid = [float(x) for x in grid]
    if model.shock_support is None and model.shock_dim > 1:
        if n is None or seed is None:
            raise ConfigError(f"{model.name}: drift checks on this model need n and seed")
        children = np.random.SeedSequence(int(seed)).spawn(len(grid))
        return [expected_value(model, V, x, n, child) for x, child in zip(grid, children)]
    return [expected_value(model, V, x) for x in grid]


def verify_drift_on_grid(model: SRSModel, cert: DriftCertificate, grid: Sequence[float],
                         n: int | None = None, seed: int | None = None) -> DriftReport:
    """Check QV(x) ≤ λV(x) + β at each grid point, exactly or within the MC band."""
    if cert.finite:
        raise DomainError("verify_drift_on_grid needs a callable V")
    _, _, sigmas = get_mc_config()
    evs = _grid_expectations(model, cert.V, grid, n, seed)
    xs = np.asarray(list(grid), dtype=float)
    excess = np.array([e.value for e in evs]) - cert.lam * cert.evaluate(xs) - cert.beta
    slack = np.array([sigmas * e.std_error for e in evs]) + SOLVER_TOL
    k = int(np.argmax(excess - slack))
    ok = bool((excess <= slack).all())
    if not ok:
        logger.info(f"{model.name}: drift fails at x={xs[k]:.4g} (excess {excess[k]:.3e})")
    return DriftReport(ok, float(excess[k]), float(xs[k]), replace(cert, verified=ok))


def fit_drift_on_grid(model: SRSModel, V: Callable, lambda_grid: Sequence[float], grid: Sequence[float],
                      d: float, v_name: str = "V", n: int | None = None, seed: int | None = None) -> DriftCertificate:
    """Grid version of the λ-scan: β(λ) = max over the grid of QV − λV, smallest γ wins."""
    lams = sorted(float(x) for x in lambda_grid)
    if not lams:
        raise DomainError("lambda_grid must not be empty")
    xs = np.asarray(list(grid), dtype=float)
    evs = _grid_expectations(model, V, xs, n, seed)
    QV = np.array([e.value for e in evs])
    Vx = np.asarray(V(xs), dtype=float)
    betas = np.array([max(0.0, float(np.max(QV - lam * Vx))) for lam in lams])
    gammas = np.array(lams) + 2.0 * betas / d
    k = int(np.argmin(gammas))
    return DriftCertificate(V, lams[k], float(betas[k]), d, v_name=v_name, domain=model.domain, verified=True)


def check_wealth_premise(model: SRSModel, grid: Sequence[float] | None = None,
                         n: int = 100_000, seed: int = 0) -> PremiseReport:
    """Monte Carlo spot check of E[η G(x)] ≤ λx on a log grid."""
    G = model.params.get("G")
    lam = model.params.get("lam")
    if G is None or lam is None:
        raise ConfigError(f"{model.name}: not a wealth model (needs G and lam params)")
    _, _, sigmas = get_mc_config()
    xs = np.asarray(grid if grid is not None else np.logspace(-2, 3, 11), dtype=float)
    children = np.random.SeedSequence(int(seed)).spawn(len(xs))
    rows = []
    for x, child in zip(xs, children):
        def worker(rng: np.random.Generator, size: int, x=x):
            eta = model.sample_shocks(rng, size)[:, 0]
            v = eta * float(G(np.array([x]))[0])
            return v.sum(), (v * v).sum()

        parts = run_chunked(worker, n, child)
        mean = sum(p[0] for p in parts) / n
        var = max(sum(p[1] for p in parts) / n - mean * mean, 0.0)
        se = math.sqrt(var / n)
        excess = mean - lam * x
        rows.append({"x": float(x), "mean": mean, "std_error": se, "excess": excess,
                     "ok": excess <= sigmas * se + SOLVER_TOL * max(1.0, float(x))})
    worst = max(rows, key=lambda r: r["excess"] - sigmas * r["std_error"])
    return PremiseReport(all(r["ok"] for r in rows), worst["x"], worst["excess"], rows)


# ── finite reductions ────────────────────────────────────────────────────────

def _shock_nodes(model: SRSModel, n_quantiles: int | None) -> tuple[np.ndarray, np.ndarray]:
    if model.shock_support is not None:
        values, probs = model.shock_support
        return np.asarray(values, dtype=float).reshape(len(probs), model.shock_dim), np.asarray(probs, dtype=float)
    if not n_quantiles:
        raise ConfigError(f"{model.name}: discretizing a continuous shock law needs n_quantiles")
    u = (np.arange(n_quantiles) + 0.5) / n_quantiles
    U = np.repeat(u[:, None], model.shock_dim, axis=1)
    return np.asarray(model.shock_ppf(U), dtype=float).reshape(n_quantiles, model.shock_dim), np.full(n_quantiles, 1.0 / n_quantiles)


def discretize(model: SRSModel, grid: Sequence[float], n_quantiles: int | None = None) -> tuple[FiniteKernel, FinitePoset]:
    """Finite kernel on a sorted grid: next states are floored onto the grid.

    Flooring is monotone, so a monotone F gives an increasing kernel on the chain.
    """
    if model.order.tag != "total_real":
        raise ConfigError("discretize supports the real-line order only")
    pts = np.unique(np.asarray(list(grid), dtype=float))
    if pts.size == 0:
        raise DomainError("grid must not be empty")
    values, probs = _shock_nodes(model, n_quantiles)
    P = np.zeros((pts.size, pts.size))
    for i, x in enumerate(pts):
        y = apply_map(model, np.full(probs.size, x), values)
        idx = np.clip(np.searchsorted(pts, y + DIST_TOL, side="right") - 1, 0, pts.size - 1)
        np.add.at(P[i], idx, probs)
    P /= P.sum(axis=1, keepdims=True)
    return FiniteKernel(P), FinitePoset.chain([float(p) for p in pts])


def support_kernel(model: SRSModel, points: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """One-step laws from each point, on the union of their supports.

    Returns (support states, matrix with one row per input point).
    """
    if model.shock_support is None:
        raise ConfigError(f"{model.name}: support_kernel needs a finite shock support")
    values, probs = model.shock_support
    values = np.asarray(values, dtype=float).reshape(len(probs), model.shock_dim)
    nexts = [apply_map(model, np.full(len(probs), float(x)), values) for x in points]
    states = np.unique(np.concatenate(nexts))
    rows = np.zeros((len(points), states.size))
    for r, y in enumerate(nexts):
        np.add.at(rows[r], np.searchsorted(states, y), probs)
    return states, rows


# ── built-in models ──────────────────────────────────────────────────────────

def _exp_ppf(u: np.ndarray) -> np.ndarray:
    # inverse CDF of Exp(1)
    return -np.log1p(-u)


def _plus_one(x):
    return np.asarray(x, dtype=float) + 1.0


def builtin_tcp(a: float = 0.5, c: float = 1.0, fit_grid: Sequence[float] | None = None,
                lambda_steps: int = 20) -> SRSModel:
    """TCP window size, embedded jump chain: X' = a·(X² + 2E)^{1/2}, E ~ Exp(1).

    C = [0, c] is the small set of V(x) = x + 1 at d = c + 1. The drift
    certificate is fitted on a grid with λ ∈ [a, 1); for those λ the excess
    QV − λV is decreasing in x, so its maximum sits at x = 0.
    """
    if not 0.0 < a < 1.0:
        raise ModelError(f"tcp needs a in (0, 1), got {a}")
    if c < 0:
        raise ModelError(f"tcp needs c >= 0, got {c}")

    def F(x, w):
        return a * np.sqrt(np.asarray(x, dtype=float) ** 2 + 2.0 * w[:, 0])

    base = SRSModel(
        name="tcp", order=OrderKind.total_real(), F=F, shock_ppf=_exp_ppf,
        shock_method="inverse-cdf exponential: -log1p(-u)",
        C_extremes=(0.0, float(c)), params={"a": a, "c": c},
    )
    grid = fit_grid if fit_grid is not None else np.linspace(0.0, 10.0, 21)
    lams = np.linspace(a, 1.0, lambda_steps, endpoint=False)
    hint = fit_drift_on_grid(base, _plus_one, lams, grid, d=c + 1.0, v_name="x_plus_1")
    return replace(base, drift_hint=hint)


def builtin_half_bernoulli() -> SRSModel:
    """X' = X/2 + W with P{W = 0} = P{W = 1} = 1/2; no minorization on rational/irrational pairs."""
    def F(x, w):
        return 0.5 * np.asarray(x, dtype=float) + w[:, 0]

    def ppf(u):
        return (u >= 0.5).astype(float)

    hint = DriftCertificate(_plus_one, 0.5, 1.0, 2.0, v_name="x_plus_1", domain=HALF_LINE)
    return SRSModel(
        name="half_bernoulli", order=OrderKind.total_real(), F=F, shock_ppf=ppf,
        shock_method="inverse-cdf bernoulli: u >= 1/2",
        shock_support=(np.array([[0.0], [1.0]]), np.array([0.5, 0.5])),
        drift_hint=hint, C_extremes=(0.0, 1.0), params={},
    )


def builtin_wealth(G: Callable | None = None, eta_ppf: ShockPPF | None = None, xi_ppf: ShockPPF | None = None,
                   lam: float = 0.9, xi_bar: float = 1.0, d: float = 2.0) -> SRSModel:
    """Wealth X' = η·G(X) + ξ with shocks (η, ξ) drawn independently.

    Defaults: G(x) = x, η ≡ λ, ξ exponential with mean ξ̄. The drift hint
    V = x + 1, β = ξ̄ + 1 holds whenever E[η G(x)] ≤ λx.
    """
    if not 0.0 <= lam < 1.0:
        raise ModelError(f"wealth needs lambda in [0, 1), got {lam}")
    if not 0.0 < xi_bar < math.inf:
        raise ModelError(f"wealth needs a finite positive mean income, got {xi_bar}")
    G = G or (lambda x: np.asarray(x, dtype=float))
    eta_ppf = eta_ppf or (lambda u: np.full_like(u, lam))
    xi_ppf = xi_ppf or stats.expon(scale=xi_bar).ppf

    def F(x, w):
        return w[:, 0] * np.asarray(G(np.asarray(x, dtype=float)), dtype=float) + w[:, 1]

    def ppf(u):
        return np.column_stack([eta_ppf(u[:, 0]), xi_ppf(u[:, 1])])

    hint = DriftCertificate(_plus_one, lam, xi_bar + 1.0, d, v_name="x_plus_1", domain=HALF_LINE)
    return SRSModel(
        name="wealth", order=OrderKind.total_real(), F=F, shock_ppf=ppf, shock_dim=2,
        shock_method="inverse-cdf per coordinate (eta, xi)",
        drift_hint=hint, C_extremes=(0.0, d - 1.0),
        params={"G": G, "lam": lam, "xi_bar": xi_bar, "d": d},
    )


# ── closed forms ─────────────────────────────────────────────────────────────

def tcp_e_closed_form(c: float) -> float:
    """P{E − E′ ≥ c²/2} for independent Exp(1): a Laplace tail."""
    return 0.5 * math.exp(-c * c / 2.0)


def wealth_e_closed_form(lam: float, x_hi: float, xi_bar: float) -> float:
    """P{ξ − ξ′ ≥ λ·x_hi} for G(x) = x, η ≡ λ, ξ exponential with mean ξ̄."""
    return 0.5 * math.exp(-lam * x_hi / xi_bar)
