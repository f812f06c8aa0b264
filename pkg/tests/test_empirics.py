"""Tests for mixing.empirics: exact coupling-time and visit-count engines, simulation, comparisons."""
import numpy as np
import pytest


def _instance(seed=0, n=4):
    from mixing.checks import random_theorem_instance
    from mixing.finite_core import maximal_coupling_kernel
    inst = random_theorem_instance(np.random.default_rng(seed), n)
    return inst, maximal_coupling_kernel(inst.Q, inst.poset, workers=1)


def _chain3():
    from mixing.finite_core import FiniteKernel
    from mixing.poset import FinitePoset
    Q = FiniteKernel([[0.8, 0.15, 0.05], [0.6, 0.3, 0.1], [0.5, 0.3, 0.2]])
    return Q, FinitePoset.chain(["low", "mid", "high"])


# ---------------------------------------------------------------------------
# empirical_kolmogorov
# ---------------------------------------------------------------------------

def test_kolmogorov_examples():
    from mixing.empirics import empirical_kolmogorov
    assert empirical_kolmogorov([0.0, 1.0], [0.0, 1.0]) == 0.0
    assert empirical_kolmogorov([0.0, 0.0], [1.0, 1.0]) == 1.0
    assert empirical_kolmogorov([0.0, 1.0, 2.0, 3.0], [2.0, 3.0]) == pytest.approx(0.5)


def test_kolmogorov_needs_samples():
    from mixing.empirics import empirical_kolmogorov
    from mixing.errors import DomainError
    with pytest.raises(DomainError):
        empirical_kolmogorov([], [1.0])


# ---------------------------------------------------------------------------
# Exact engines
# ---------------------------------------------------------------------------

def test_coupling_inequality_on_random_instances():
    from mixing.checks import random_dist
    from mixing.empirics import exact_tau_tails
    from mixing.finite_core import iterate_dist, kappa, strassen_gap
    rng = np.random.default_rng(40)
    for seed in range(5):
        inst, qhat = _instance(seed)
        mu, mu2 = random_dist(rng, 4), random_dist(rng, 4)
        forward = exact_tau_tails(qhat, mu, mu2, 15)
        backward = exact_tau_tails(qhat, mu2, mu, 15)
        for t in range(16):
            a, b = iterate_dist(mu, inst.Q, t), iterate_dist(mu2, inst.Q, t)
            assert strassen_gap(a, b, inst.poset) <= forward[t] + 1e-9
            assert kappa(a, b, inst.poset) <= max(forward[t], backward[t]) + 1e-9


def test_tau_tails_are_nonincreasing():
    from mixing.empirics import exact_tau_tails
    from mixing.finite_core import FiniteDist
    _, qhat = _instance(3)
    tails = exact_tau_tails(qhat, FiniteDist.point(4, 3), FiniteDist.point(4, 0), 20)
    assert (np.diff(tails) <= 1e-15).all()
    assert tails[0] in (0.0, 1.0)


def test_tau_split_adds_up():
    from mixing.checks import random_dist
    from mixing.empirics import exact_tau_split, exact_tau_tails
    rng = np.random.default_rng(41)
    inst, qhat = _instance(5)
    mu, mu2 = random_dist(rng, 4), random_dist(rng, 4)
    tails = exact_tau_tails(qhat, mu, mu2, 12)
    for j in (1, 2, 4):
        for t in (j, 8, 12):
            total, few, many = exact_tau_split(qhat, mu, mu2, inst.C, j, t)
            assert total == pytest.approx(few + many, abs=1e-15)
            assert total == pytest.approx(tails[t], abs=1e-12)


def test_many_visits_tail_is_geometric_in_epsilon():
    from mixing.checks import random_dist
    from mixing.empirics import exact_tau_split
    rng = np.random.default_rng(42)
    for seed in range(5):
        inst, qhat = _instance(10 + seed)
        mu, mu2 = random_dist(rng, 4), random_dist(rng, 4)
        for j in range(1, 6):
            _, _, many = exact_tau_split(qhat, mu, mu2, inst.C, j, 15)
            assert many <= (1.0 - inst.eps) ** j + 1e-9


def test_visit_count_tail_with_full_and_empty_small_set():
    from mixing.empirics import exact_Nt_tail
    from mixing.finite_core import FiniteDist
    _, qhat = _instance(7)
    mu, mu2 = FiniteDist.uniform(4), FiniteDist.point(4, 1)
    everything = list(range(4))
    # N_t = t + 1 when every pair is in C×C
    assert exact_Nt_tail(qhat, mu, mu2, everything, 3, 1) == pytest.approx(1.0)
    assert exact_Nt_tail(qhat, mu, mu2, everything, 3, 2) == pytest.approx(0.0)
    assert exact_Nt_tail(qhat, mu, mu2, everything, 3, 2, lagged=True) == pytest.approx(1.0)
    assert exact_Nt_tail(qhat, mu, mu2, everything, 3, 3, lagged=True) == pytest.approx(0.0)
    assert exact_Nt_tail(qhat, mu, mu2, [], 1, 10) == pytest.approx(1.0)


def test_visit_count_tails_are_nonincreasing_in_t():
    from mixing.checks import random_dist
    from mixing.empirics import exact_Nt_tails
    rng = np.random.default_rng(43)
    inst, qhat = _instance(8)
    tails = exact_Nt_tails(qhat, random_dist(rng, 4), random_dist(rng, 4), inst.C, 3, 20)
    assert (np.diff(tails) <= 1e-12).all()


def test_visit_count_lemma_on_small_instance():
    from mixing.bounds import lemma_ggc_bound
    from mixing.checks import random_dist
    from mixing.drift import initial_mass
    from mixing.empirics import exact_Nt_tails
    rng = np.random.default_rng(44)
    inst, qhat = _instance(9)
    mu, mu2 = random_dist(rng, 4), random_dist(rng, 4)
    H_val = initial_mass(mu, mu2, inst.cert.V)
    for j in range(1, 6):
        tails = exact_Nt_tails(qhat, mu, mu2, inst.C, j, 12)
        for t in range(j, 13):
            assert tails[t] <= lemma_ggc_bound(inst.cert.gamma, inst.cert.d, H_val, j, t) + 1e-9


def test_visit_engine_capacity_guard():
    from mixing.empirics import exact_Nt_tail
    from mixing.errors import CapacityError
    from mixing.finite_core import FiniteDist
    _, qhat = _instance(1)
    with pytest.raises(CapacityError, match="j <= 10"):
        exact_Nt_tail(qhat, FiniteDist.uniform(4), FiniteDist.uniform(4), [0], 11, 20)


# ---------------------------------------------------------------------------
# Supermartingale check
# ---------------------------------------------------------------------------

def test_supermartingale_holds_on_identity_kernel():
    from mixing.drift import DriftCertificate
    from mixing.empirics import supermartingale_check
    from mixing.finite_core import FiniteKernel, maximal_coupling_kernel
    from mixing.poset import FinitePoset
    qhat = maximal_coupling_kernel(FiniteKernel.identity(3), FinitePoset.chain(3), workers=1)
    assert supermartingale_check(qhat, DriftCertificate([1.0, 2.0, 3.0], 1.0, 0.0, 1.0)).holds


def test_supermartingale_fails_without_drift_slack():
    from mixing.drift import DriftCertificate
    from mixing.empirics import supermartingale_check
    from mixing.finite_core import FiniteKernel, maximal_coupling_kernel
    from mixing.poset import FinitePoset
    qhat = maximal_coupling_kernel(FiniteKernel.identity(3), FinitePoset.chain(3), workers=1)
    report = supermartingale_check(qhat, DriftCertificate([1.0, 2.0, 3.0], 0.0, 0.0, 1.0))
    assert not report.holds
    assert report.on_C_witness == (0, 0)
    assert report.off_C_worst == pytest.approx(3.0)


def test_supermartingale_holds_for_fitted_drift():
    from mixing.empirics import supermartingale_check
    for seed in range(5):
        inst, qhat = _instance(20 + seed, 5)
        assert supermartingale_check(qhat, inst.cert).holds


@pytest.mark.slow
def test_supermartingale_holds_across_a_hundred_seeds():
    from mixing.empirics import supermartingale_check
    for seed in range(100):
        inst, qhat = _instance(seed, 5)
        report = supermartingale_check(qhat, inst.cert)
        assert report.holds, (seed, report)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def test_paths_started_on_the_graph_couple_at_once():
    from mixing.empirics import coupled_simulate_finite
    from mixing.finite_core import FiniteDist, maximal_coupling_kernel
    Q, chain = _chain3()
    qhat = maximal_coupling_kernel(Q, chain, workers=1)
    stats = coupled_simulate_finite(qhat, FiniteDist.point(3, 1), FiniteDist.point(3, 1), [0], 10, 500, seed=1)
    assert (stats.tau == 0).all()
    assert stats.tail(0) == 0.0


def test_finite_simulation_matches_exact_tau_tail():
    from mixing.empirics import coupled_simulate_finite, exact_tau_tails
    from mixing.finite_core import FiniteDist, maximal_coupling_kernel
    Q, chain = _chain3()
    qhat = maximal_coupling_kernel(Q, chain, workers=1)
    mu, mu2 = FiniteDist.point(3, 2), FiniteDist.point(3, 0)
    stats = coupled_simulate_finite(qhat, mu, mu2, [0, 1], 8, 20_000, seed=2)
    exact = exact_tau_tails(qhat, mu, mu2, 8)
    assert stats.absorbing_violations == 0
    for t in range(9):
        assert abs(stats.tail(t) - exact[t]) <= 4.0 * 0.5 / np.sqrt(20_000)


def test_finite_simulation_is_seed_deterministic():
    from mixing.empirics import coupled_simulate_finite
    from mixing.finite_core import FiniteDist, maximal_coupling_kernel
    Q, chain = _chain3()
    qhat = maximal_coupling_kernel(Q, chain, workers=1)
    runs = [coupled_simulate_finite(qhat, FiniteDist.point(3, 2), FiniteDist.uniform(3), [0], 6, 3000, seed=3)
            for _ in range(2)]
    assert np.array_equal(runs[0].tau, runs[1].tau)
    assert np.array_equal(runs[0].visit_counts, runs[1].visit_counts)


def test_srs_coupling_success_rate_at_least_e():
    from mixing.empirics import coupled_simulate_srs
    from mixing.srs import builtin_half_bernoulli
    stats = coupled_simulate_srs(builtin_half_bernoulli(), 1.0, 0.0, (0.0, 1.0), 6, 20_000, seed=4)
    assert not stats.absorbing
    assert stats.ordering_trials >= 20_000
    sigma = np.sqrt(0.25 * 0.75 / stats.ordering_trials)
    assert stats.success_rate >= 0.25 - 3.0 * sigma
    assert stats.tail(0) == 1.0


def test_simulation_rejects_empty_horizon():
    from mixing.empirics import coupled_simulate_srs
    from mixing.errors import DomainError
    from mixing.srs import builtin_half_bernoulli
    with pytest.raises(DomainError):
        coupled_simulate_srs(builtin_half_bernoulli(), 1.0, 0.0, (0.0, 1.0), 0, 10, seed=0)


# ---------------------------------------------------------------------------
# Distance versus bound
# ---------------------------------------------------------------------------

def test_exact_comparison_passes_on_random_instances():
    from mixing.checks import random_dist
    from mixing.empirics import empirical_kappa_vs_bound
    rng = np.random.default_rng(45)
    for seed in range(3):
        inst, _ = _instance(30 + seed, 5)
        table = empirical_kappa_vs_bound(inst.Q, random_dist(rng, 5), random_dist(rng, 5), inst.cert,
                                         inst.eps, 15, poset=inst.poset)
        assert table.mode == "exact"
        assert table.passed
        assert [r.t for r in table.rows] == list(range(1, 16))


def test_identical_laws_have_zero_distance():
    from mixing.empirics import empirical_kappa_vs_bound
    from mixing.finite_core import FiniteDist
    inst, _ = _instance(2)
    mu = FiniteDist.uniform(4)
    table = empirical_kappa_vs_bound(inst.Q, mu, mu, inst.cert, inst.eps, 5, poset=inst.poset)
    assert all(r.kappa == 0.0 for r in table.rows)


def test_finite_comparison_needs_poset():
    from mixing.empirics import empirical_kappa_vs_bound
    from mixing.errors import DomainError
    from mixing.finite_core import FiniteDist
    inst, _ = _instance(2)
    with pytest.raises(DomainError, match="poset"):
        empirical_kappa_vs_bound(inst.Q, FiniteDist.uniform(4), FiniteDist.uniform(4), inst.cert, inst.eps, 3)


def test_monte_carlo_comparison_half_bernoulli(tmp_path):
    from mixing.empirics import COMPARISON_COLUMNS, empirical_kappa_vs_bound
    from mixing.srs import builtin_half_bernoulli
    model = builtin_half_bernoulli()
    table = empirical_kappa_vs_bound(model, 0.0, 1.0, model.drift_hint, 0.25, 10, n_paths=5000, seed=6)
    assert table.mode == "monte-carlo"
    assert table.band == pytest.approx(3.0 * np.sqrt(2.0 / 5000))
    assert table.passed
    # H from point starts: ½(V(0) + V(1))
    assert table.metadata["H"] == pytest.approx(1.5)
    path = table.to_csv(str(tmp_path / "comparison.csv"))
    assert open(path).readline().strip().split(",") == COMPARISON_COLUMNS


@pytest.mark.slow
def test_monte_carlo_comparison_half_bernoulli_full_size():
    from mixing.empirics import empirical_kappa_vs_bound
    from mixing.srs import builtin_half_bernoulli
    model = builtin_half_bernoulli()
    table = empirical_kappa_vs_bound(model, 0.0, 1.0, model.drift_hint, 0.25, 30, n_paths=100_000, seed=6)
    assert table.band == pytest.approx(3.0 * np.sqrt(2.0 / 100_000))
    assert [r.t for r in table.rows][-1] == 30
    assert table.passed


def test_discretized_half_bernoulli_passes_exactly():
    from mixing.bounds import epsilon_exact
    from mixing.drift import DriftCertificate, verify_drift
    from mixing.empirics import empirical_kappa_vs_bound
    from mixing.finite_core import FiniteDist
    from mixing.srs import builtin_half_bernoulli, discretize
    Q, chain = discretize(builtin_half_bernoulli(), np.linspace(0.0, 2.0, 9))
    V = np.array(chain.states) + 1.0
    check = verify_drift(Q, DriftCertificate(V, 0.5, 1.0, 2.0))
    assert check.verified
    cert = check.certificate
    eps = epsilon_exact(Q, chain, cert.C, workers=1)
    table = empirical_kappa_vs_bound(Q, FiniteDist.point(9, 0), FiniteDist.point(9, 4), cert, eps, 30, poset=chain)
    assert table.passed
    assert table.band == 1e-9


def test_monte_carlo_comparison_needs_seed():
    from mixing.empirics import empirical_kappa_vs_bound
    from mixing.errors import DomainError
    from mixing.srs import builtin_half_bernoulli
    model = builtin_half_bernoulli()
    with pytest.raises(DomainError):
        empirical_kappa_vs_bound(model, 0.0, 1.0, model.drift_hint, 0.25, 5, n_paths=10)
