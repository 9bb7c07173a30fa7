import numpy as np
import pytest
from hypothesis import given, strategies as st

from indet.coupling import couple_indetermination
from indet.discrete import (bridge_value, discrete_independence, discrete_indetermination,
                            matching_probability, random_compatible_margins, swap_walk,
                            verify_discrete_minimality)
from indet.errors import CompatibilityError
from indet.likelihood import avg_likelihood
from indet.margins import Linear, spike_pair
from indet.numerics import RngStream


def test_uniform_margins_flat():
    c = discrete_indetermination([0.5, 0.5], [0.5, 0.5])
    assert np.allclose(c.pi, 0.25)
    assert matching_probability(c) == pytest.approx(0.25)


def test_two_by_two_example():
    c = discrete_indetermination([0.6, 0.4], [0.7, 0.3])
    assert np.allclose(c.pi, [[0.40, 0.20], [0.30, 0.10]], atol=1e-15)
    c.validate()
    assert matching_probability(c) == pytest.approx(0.30, abs=1e-15)
    ind = discrete_independence([0.6, 0.4], [0.7, 0.3])
    assert np.allclose(ind.pi.ravel(), [0.42, 0.18, 0.28, 0.12])
    assert matching_probability(ind) == pytest.approx(0.3016, abs=1e-15)


def test_incompatible_cell():
    with pytest.raises(CompatibilityError) as e:
        discrete_indetermination([0.9, 0.1], [0.9, 0.1])
    assert e.value.cell == (1, 1)


def test_margins_exact():
    gen = np.random.default_rng(0)
    for _ in range(50):
        p, q = gen.integers(1, 8, 2)
        mu, nu = random_compatible_margins(p, q, gen)
        c = discrete_indetermination(mu, nu)
        assert np.max(np.abs(c.pi.sum(1) - mu)) <= 1e-15
        assert np.max(np.abs(c.pi.sum(0) - nu)) <= 1e-15


def test_minimality_two_by_two():
    assert verify_discrete_minimality([0.6, 0.4], [0.7, 0.3], 10_000, RngStream(1))


def test_minimality_three_by_four():
    gen = np.random.default_rng(2)
    mu, nu = random_compatible_margins(3, 4, gen)
    assert verify_discrete_minimality(mu, nu, 10_000, RngStream(2))


def test_uniform_matching_floor():
    mu, nu = np.full(3, 1 / 3), np.full(4, 1 / 4)
    c = discrete_indetermination(mu, nu)
    assert matching_probability(c) == pytest.approx(1 / 12)
    gen = RngStream(3).generator()
    pi = swap_walk(c.pi, 50, gen)
    assert matching_probability(pi) > 1 / 12


def test_swap_walk_preserves_margins():
    gen = RngStream(4).generator()
    mu, nu = random_compatible_margins(4, 5, gen)
    pi = swap_walk(np.outer(mu, nu), 500, gen)
    assert np.all(pi >= 0)
    assert np.allclose(pi.sum(1), mu, atol=1e-12) and np.allclose(pi.sum(0), nu, atol=1e-12)


@given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_indetermination_le_independence(p, q, seed):
    mu, nu = random_compatible_margins(p, q, np.random.default_rng(seed))
    a = matching_probability(discrete_indetermination(mu, nu))
    b = matching_probability(discrete_independence(mu, nu))
    assert a <= b + 1e-15
    # equality iff a margin is uniform: the gap is (sum mu^2 - 1/p)(sum nu^2 - 1/q)
    gap = (np.sum(mu ** 2) - 1 / p) * (np.sum(nu ** 2) - 1 / q)
    assert b - a == pytest.approx(gap, abs=1e-14)


def test_bridge_to_continuous():
    for f, g in (spike_pair(), (Linear(1.0), Linear(-1.0))):
        law = couple_indetermination(f, g)
        cont = avg_likelihood(law, law).value
        assert abs(bridge_value(f, g, 200) / cont - 1) <= 0.01


def test_minimality_detects_violation():
    # a negative tolerance demands every coupling beat the optimum by 0.01,
    # which the walk must refute
    assert not verify_discrete_minimality([0.6, 0.4], [0.7, 0.3], 100, RngStream(5), tol=-0.01)
    mu, nu = random_compatible_margins(3, 3, np.random.default_rng(5))
    assert not verify_discrete_minimality(mu, nu, 100, RngStream(5), tol=-1.0)
