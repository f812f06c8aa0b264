"""Unit tests for mixing.finite_core: dominance, α, κ and maximal couplings."""
import numpy as np
import pandas as pd
import pytest


def _chain2():
    from mixing.poset import FinitePoset
    return FinitePoset.chain(2)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

def test_dist_rejects_bad_mass():
    from mixing.errors import DomainError
    from mixing.finite_core import FiniteDist
    with pytest.raises(DomainError):
        FiniteDist([0.5, 0.6])
    with pytest.raises(DomainError):
        FiniteDist([1.5, -0.5])


def test_kernel_rejects_bad_row():
    from mixing.errors import DomainError
    from mixing.finite_core import FiniteKernel
    with pytest.raises(DomainError, match="row 1"):
        FiniteKernel([[1.0, 0.0], [0.3, 0.3]])


def test_dimension_mismatch_is_domain_error():
    from mixing.errors import DomainError
    from mixing.finite_core import alpha, kappa, stoch_dominates
    p = _chain2()
    for fn in (alpha, kappa, stoch_dominates):
        with pytest.raises(DomainError):
            fn([1.0, 0.0, 0.0], [1.0, 0.0], p)


# ---------------------------------------------------------------------------
# Stochastic dominance
# ---------------------------------------------------------------------------

def test_dominance_is_reflexive():
    from mixing.finite_core import stoch_dominates
    assert stoch_dominates([0.2, 0.8], [0.2, 0.8], _chain2())


def test_point_masses_along_chain():
    from mixing.finite_core import stoch_dominates
    assert not stoch_dominates([0.0, 1.0], [1.0, 0.0], _chain2())
    assert stoch_dominates([1.0, 0.0], [0.0, 1.0], _chain2())


def test_identity_order_dominance_forces_equality():
    from mixing.finite_core import stoch_dominates
    from mixing.poset import FinitePoset
    assert not stoch_dominates([0.5, 0.5], [0.4, 0.6], FinitePoset.antichain(2))


# ---------------------------------------------------------------------------
# α
# ---------------------------------------------------------------------------

def test_alpha_point_mass_with_itself():
    from mixing.checks import random_poset
    from mixing.finite_core import FiniteDist, alpha
    p = random_poset(np.random.default_rng(0), 5)
    assert alpha(FiniteDist.point(5, 3), FiniteDist.point(5, 3), p) == 1.0


def test_alpha_reversed_point_masses():
    from mixing.finite_core import alpha
    assert alpha([0.0, 1.0], [1.0, 0.0], _chain2()) == 0.0


def test_alpha_identity_order_is_overlap():
    from mixing.finite_core import alpha, alpha_lp
    from mixing.poset import FinitePoset
    p = FinitePoset.antichain(2)
    assert alpha([0.7, 0.3], [0.4, 0.6], p) == pytest.approx(0.7, abs=1e-15)
    assert alpha_lp([0.7, 0.3], [0.4, 0.6], p) == pytest.approx(0.7, abs=1e-9)


def test_alpha_identity_order_is_one_minus_tv_to_full_precision():
    from mixing.checks import random_dist
    from mixing.finite_core import alpha, total_variation
    from mixing.poset import FinitePoset
    rng = np.random.default_rng(12)
    for _ in range(200):
        n = int(rng.integers(1, 12))
        mu, nu = random_dist(rng, n, 0.3), random_dist(rng, n, 0.3)
        assert abs(alpha(mu, nu, FinitePoset.antichain(n)) - (1.0 - total_variation(mu, nu))) <= 1e-12


def test_alpha_matches_lp_on_small_instances():
    from mixing.checks import random_dist, random_poset
    from mixing.finite_core import alpha, alpha_lp
    rng = np.random.default_rng(17)
    for _ in range(150):
        n = int(rng.integers(1, 5))
        p = random_poset(rng, n, 0.5)
        mu, nu = random_dist(rng, n, 0.3), random_dist(rng, n, 0.3)
        assert alpha(mu, nu, p) == pytest.approx(alpha_lp(mu, nu, p), abs=1e-9)


def test_duality_alpha_plus_gap_is_one():
    from mixing.checks import random_dist, random_poset
    from mixing.finite_core import alpha, strassen_gap
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(1, 9))
        p = random_poset(rng, n)
        mu, nu = random_dist(rng, n, 0.3), random_dist(rng, n, 0.3)
        assert alpha(mu, nu, p) + strassen_gap(mu, nu, p) == pytest.approx(1.0, abs=1e-9)


def test_transport_plan_lives_on_graph():
    from mixing.checks import random_dist, random_poset
    from mixing.finite_core import transport_plan
    rng = np.random.default_rng(4)
    p = random_poset(rng, 6)
    mu, nu = random_dist(rng, 6), random_dist(rng, 6)
    a, plan = transport_plan(mu, nu, p)
    assert plan[~p.leq].sum() == 0.0
    assert plan.sum() == pytest.approx(a, abs=1e-11)
    assert (plan.sum(axis=1) <= mu.p + 1e-12).all()
    assert (plan.sum(axis=0) <= nu.p + 1e-12).all()


# ---------------------------------------------------------------------------
# κ and the Strassen gap
# ---------------------------------------------------------------------------

def test_kappa_examples():
    from mixing.finite_core import kappa
    p = _chain2()
    assert kappa([0.3, 0.7], [0.3, 0.7], p) == 0.0
    assert kappa([1.0, 0.0], [0.0, 1.0], p) == 1.0
    assert kappa([0.7, 0.3], [0.4, 0.6], p) == pytest.approx(0.3, abs=1e-12)


def test_kappa_is_tv_under_identity():
    from mixing.checks import random_dist
    from mixing.finite_core import kappa, total_variation
    from mixing.poset import FinitePoset
    rng = np.random.default_rng(9)
    for _ in range(50):
        n = int(rng.integers(1, 9))
        mu, nu = random_dist(rng, n), random_dist(rng, n)
        expected = 0.5 * np.abs(mu.p - nu.p).sum()
        assert kappa(mu, nu, FinitePoset.antichain(n)) == pytest.approx(expected, abs=1e-12)
        assert total_variation(mu, nu) == pytest.approx(expected, abs=1e-15)


def test_kappa_is_a_metric():
    from mixing.checks import random_dist, random_poset
    from mixing.finite_core import kappa
    rng = np.random.default_rng(21)
    for _ in range(40):
        n = int(rng.integers(2, 7))
        p = random_poset(rng, n)
        a, b, c = (random_dist(rng, n) for _ in range(3))
        assert kappa(a, b, p) == pytest.approx(kappa(b, a, p), abs=1e-12)
        assert kappa(a, c, p) <= kappa(a, b, p) + kappa(b, c, p) + 1e-12
        assert kappa(a, a, p) == 0.0
        assert kappa(a, b, p) > 0.0


def _increasing_functions(rng, poset, count=20):
    """Random increasing h: mixtures of up-set indicators and monotone maps of a linear extension."""
    masks = poset.up_set_masks.astype(float)
    below = poset.leq.sum(axis=0)
    ranks = np.argsort(np.argsort(below, kind="stable"), kind="stable")
    out = []
    for _ in range(count):
        out.append(rng.dirichlet(np.ones(len(masks))) @ masks)
        out.append(np.sort(rng.random(poset.n))[ranks])
    return out


def test_random_increasing_functions_respect_kappa_and_dominance():
    from mixing.checks import pushed_up, random_dist, random_poset
    from mixing.finite_core import kappa, stoch_dominates
    rng = np.random.default_rng(31)
    for _ in range(60):
        n = int(rng.integers(1, 8))
        p = random_poset(rng, n, 0.4)
        mu = random_dist(rng, n, 0.2)
        nu = random_dist(rng, n, 0.2)
        up = pushed_up(rng, mu, p)
        k = kappa(mu, nu, p)
        assert stoch_dominates(mu, up, p)
        for h in _increasing_functions(rng, p):
            assert all(h[i] <= h[j] for i, j in p.graph.tolist())
            assert abs(mu.p @ h - nu.p @ h) <= k + 1e-12
            assert mu.p @ h <= up.p @ h + 1e-12
            if stoch_dominates(mu, nu, p):
                assert mu.p @ h <= nu.p @ h + 1e-12


def test_strassen_gap_examples():
    from mixing.finite_core import strassen_gap
    p = _chain2()
    assert strassen_gap([1.0, 0.0], [0.0, 1.0], p) == 0.0
    assert strassen_gap([0.0, 1.0], [1.0, 0.0], p) == 1.0
    assert strassen_gap([0.3, 0.7], [0.6, 0.4], p) == pytest.approx(0.3, abs=1e-12)


def test_alpha_is_one_iff_dominated():
    from mixing.checks import pushed_up, random_dist, random_poset
    from mixing.finite_core import alpha, stoch_dominates
    rng = np.random.default_rng(13)
    for case in range(100):
        n = int(rng.integers(1, 8))
        p = random_poset(rng, n)
        mu = random_dist(rng, n, 0.3)
        nu = pushed_up(rng, mu, p) if case % 2 == 0 else random_dist(rng, n, 0.3)
        assert (alpha(mu, nu, p) >= 1.0 - 1e-9) == stoch_dominates(mu, nu, p)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

def test_every_kernel_is_increasing_under_identity():
    from mixing.checks import random_kernel
    from mixing.finite_core import kernel_is_increasing
    from mixing.poset import FinitePoset
    Q = random_kernel(np.random.default_rng(1), 5)
    assert kernel_is_increasing(Q, FinitePoset.antichain(5))


def test_reversing_kernel_reports_witness():
    from mixing.finite_core import FiniteKernel, kernel_is_increasing
    report = kernel_is_increasing(FiniteKernel([[0.0, 1.0], [1.0, 0.0]]), _chain2())
    assert not report
    assert report.witness == (0, 1)
    assert report.up_set == frozenset({1})
    assert report.gap == pytest.approx(1.0)


def test_constant_kernel_is_increasing():
    from mixing.checks import random_poset
    from mixing.finite_core import FiniteKernel, kernel_is_increasing
    rng = np.random.default_rng(6)
    Q = FiniteKernel.constant(rng.dirichlet(np.ones(5)))
    assert kernel_is_increasing(Q, random_poset(rng, 5))


def test_random_increasing_kernel_generator():
    from mixing.checks import random_increasing_kernel
    from mixing.finite_core import kernel_is_increasing
    rng = np.random.default_rng(10)
    for _ in range(20):
        Q, p = random_increasing_kernel(rng, 6)
        assert kernel_is_increasing(Q, p)


def test_iterate_dist_examples():
    from mixing.finite_core import FiniteDist, FiniteKernel, iterate_dist
    mu = FiniteDist([0.25, 0.75])
    assert np.array_equal(iterate_dist(mu, FiniteKernel([[0.5, 0.5], [0.0, 1.0]]), 0).p, mu.p)
    assert np.array_equal(iterate_dist(mu, FiniteKernel.identity(2), 7).p, mu.p)
    out = iterate_dist(FiniteDist.point(2, 0), FiniteKernel([[0.5, 0.5], [0.0, 1.0]]), 1)
    assert out.p.tolist() == [0.5, 0.5]


def test_iterate_dist_negative_t():
    from mixing.errors import DomainError
    from mixing.finite_core import FiniteDist, FiniteKernel, iterate_dist
    with pytest.raises(DomainError):
        iterate_dist(FiniteDist.point(2, 0), FiniteKernel.identity(2), -1)


# ---------------------------------------------------------------------------
# Maximal coupling
# ---------------------------------------------------------------------------

def test_maximal_coupling_is_a_markov_coupling():
    from mixing.checks import random_kernel, random_poset
    from mixing.finite_core import maximal_coupling_kernel
    rng = np.random.default_rng(30)
    Q = random_kernel(rng, 5)
    qhat = maximal_coupling_kernel(Q, random_poset(rng, 5), workers=1)
    assert qhat.is_markov_coupling_of(Q)
    assert np.allclose(qhat.P.sum(axis=1), 1.0, atol=1e-12)


def test_maximal_coupling_attains_alpha_on_graph():
    from mixing.finite_core import FiniteKernel, alpha, alpha_lp, maximal_coupling_kernel
    Q = FiniteKernel([[0.5, 0.5], [0.2, 0.8]])
    p = _chain2()
    qhat = maximal_coupling_kernel(Q, p, workers=1)
    row = 1 * 2 + 0
    assert qhat.graph_mass()[row] == pytest.approx(alpha(Q.P[1], Q.P[0], p), abs=1e-10)
    assert qhat.graph_mass()[row] == pytest.approx(alpha_lp(Q.P[1], Q.P[0], p), abs=1e-9)
    assert qhat.alphas[1, 0] == pytest.approx(0.7, abs=1e-11)


def test_maximal_coupling_graph_mass_matches_alphas():
    from mixing.checks import random_kernel, random_poset
    from mixing.finite_core import maximal_coupling_kernel
    rng = np.random.default_rng(31)
    Q = random_kernel(rng, 4)
    qhat = maximal_coupling_kernel(Q, random_poset(rng, 4), workers=2)
    assert np.allclose(qhat.graph_mass(), qhat.alphas.reshape(-1), atol=1e-10)


def test_identical_rows_couple_fully():
    from mixing.finite_core import FiniteKernel, maximal_coupling_kernel
    from mixing.poset import FinitePoset
    Q = FiniteKernel.constant([0.2, 0.3, 0.5])
    chained = maximal_coupling_kernel(Q, FinitePoset.chain(3), workers=1)
    assert np.allclose(chained.graph_mass(), 1.0, atol=1e-10)
    flat = maximal_coupling_kernel(Q, FinitePoset.antichain(3), workers=1)
    diagonal = np.eye(3, dtype=bool).reshape(-1)
    assert np.allclose(flat.P[:, diagonal].sum(axis=1), 1.0, atol=1e-10)


def test_graph_is_absorbing_for_increasing_kernel():
    from mixing.checks import random_increasing_kernel
    from mixing.finite_core import maximal_coupling_kernel
    rng = np.random.default_rng(40)
    for _ in range(10):
        Q, p = random_increasing_kernel(rng, 5)
        qhat = maximal_coupling_kernel(Q, p, workers=1)
        on_graph = qhat.graph_mask
        assert np.allclose(qhat.graph_mass()[on_graph], 1.0, atol=1e-10)


def test_independent_coupling_marginals():
    from mixing.checks import random_kernel
    from mixing.finite_core import independent_coupling_kernel
    from mixing.poset import FinitePoset
    Q = random_kernel(np.random.default_rng(2), 3)
    qhat = independent_coupling_kernel(Q, FinitePoset.chain(3))
    assert qhat.is_markov_coupling_of(Q)
    assert not qhat.maximal


def test_coupled_kernel_csv_export(tmp_path):
    from mixing.finite_core import FiniteKernel, maximal_coupling_kernel
    qhat = maximal_coupling_kernel(FiniteKernel([[0.5, 0.5], [0.2, 0.8]]), _chain2(), workers=1)
    path = qhat.to_csv(str(tmp_path / "coupling.csv"))
    df = pd.read_csv(path)
    assert list(df.columns) == ["pair", "target_pair", "probability"]
    assert df.groupby("pair")["probability"].sum().to_numpy() == pytest.approx(np.ones(4), abs=1e-12)
