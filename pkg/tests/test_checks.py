"""Tests for mixing.checks: random generators and the self-test suites."""
import numpy as np
import pytest


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def test_random_poset_is_valid_and_labelled():
    from mixing.checks import random_poset
    rng = np.random.default_rng(0)
    for n in (1, 4, 9):
        p = random_poset(rng, n)
        assert p.states == tuple(range(n))
        assert p.leq.diagonal().all()


def test_random_dist_sparsity_keeps_mass():
    from mixing.checks import random_dist
    rng = np.random.default_rng(1)
    for _ in range(50):
        mu = random_dist(rng, 6, sparsity=0.9)
        assert mu.p.sum() == pytest.approx(1.0, abs=1e-12)


def test_random_increasing_kernel_is_increasing():
    from mixing.checks import random_increasing_kernel
    from mixing.finite_core import kernel_is_increasing
    rng = np.random.default_rng(2)
    for n in (2, 5, 8):
        Q, chain = random_increasing_kernel(rng, n)
        assert kernel_is_increasing(Q, chain).increasing


def test_pushed_up_law_dominates():
    from mixing.checks import pushed_up, random_dist, random_poset
    from mixing.finite_core import stoch_dominates
    rng = np.random.default_rng(3)
    for _ in range(30):
        p = random_poset(rng, 6, 0.4)
        mu = random_dist(rng, 6)
        assert stoch_dominates(mu, pushed_up(rng, mu, p), p)


def test_theorem_instance_has_verified_certificate():
    from mixing.checks import random_theorem_instance
    inst = random_theorem_instance(np.random.default_rng(4), 6)
    assert inst.cert.verified
    assert inst.C.size >= 1
    assert 0.0 <= inst.eps <= 1.0


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["duality", "strassen", "identity_collapse", "theorem", "lemma"])
def test_suites_pass_at_seed_zero(name):
    from mixing.checks import fast_suites
    suites = dict(fast_suites(0))
    result = suites[name]()
    assert result.passed, result.failures[:3]
    assert result.checked > 0


def test_halved_alpha_fails_duality():
    from mixing.checks import check_duality
    from mixing.finite_core import alpha

    def halved(mu, nu, poset):
        return 0.5 * alpha(mu, nu, poset)

    result = check_duality(0, cases=20, alpha_fn=halved)
    assert not result.passed
    assert "alpha + gap" in result.failures[0]
    assert len(result.to_dict()["failures"]) <= 5


def test_theorem_and_lemma_hold_on_more_instances():
    from mixing.checks import check_lemma, check_theorem
    theorem = check_theorem(1, cases=10)
    lemma = check_lemma(1, cases=5)
    assert theorem.passed, theorem.failures[:3]
    assert lemma.passed, lemma.failures[:3]


@pytest.mark.slow
def test_theorem_and_lemma_hold_across_a_hundred_seeds():
    from mixing.checks import check_lemma, check_theorem
    for seed in range(100):
        theorem = check_theorem(seed)
        lemma = check_lemma(seed)
        assert theorem.passed, (seed, theorem.failures[:3])
        assert lemma.passed, (seed, lemma.failures[:3])
