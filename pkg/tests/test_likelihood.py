import numpy as np
import pytest

from indet.coupling import (couple_custom, couple_fgm, couple_independence,
                            couple_indetermination)
from indet.errors import IntegrabilityError
from indet.likelihood import (avg_likelihood, avg_likelihood_vs_indet, indet_l2,
                              kl_divergence, rho_distance)
from indet.margins import Histogram, Linear, Power, Uniform
from indet.sampling import sample_law

from conftest import random_compatible_pair, spike_perturbations


def test_uniform_square():
    u = couple_independence(Uniform(), Uniform())
    assert avg_likelihood(u, u).value == pytest.approx(1.0, abs=1e-14)


def test_spike_constants(spike):
    plus = couple_indetermination(*spike)
    times = couple_independence(*spike)
    assert spike[0].sq_integral() == pytest.approx(2.0, abs=1e-15)
    assert abs(avg_likelihood(plus, plus).value - 3.0) <= 1e-12
    assert abs(avg_likelihood(times, times).value - 4.0) <= 1e-12
    assert abs(indet_l2(*spike) - 3.0) <= 1e-12


def test_power_not_square_integrable():
    law = couple_indetermination(Power(0.5), Power(0.75))
    with pytest.raises(IntegrabilityError):
        avg_likelihood(law, law)


def test_power_square_integrable():
    law = couple_indetermination(Power(0.75), Power(0.75))
    # int f^2 + int g^2 - 1 with int f^2 = 0.5625 / 0.5
    assert avg_likelihood(law, law).value == pytest.approx(2 * 1.125 - 1, abs=1e-6)


def test_vs_indet_own_margins(spike):
    plus = couple_indetermination(*spike)
    v = avg_likelihood_vs_indet(plus, *spike).value
    assert v == pytest.approx(avg_likelihood(plus, plus).value, abs=1e-12)


def test_vs_indet_uniform_h(spike):
    h = couple_independence(Uniform(), Uniform())
    assert avg_likelihood_vs_indet(h, *spike).value == pytest.approx(1.0, abs=1e-14)
    h2 = couple_independence(Uniform(), Uniform())
    assert avg_likelihood_vs_indet(h2, Linear(1), Linear(-0.3)).value == pytest.approx(1.0)


def test_vs_indet_fgm_theta_free(spike):
    plus = couple_indetermination(*spike)
    for theta in (-1.0, 0.0, 0.7, 1.0):
        h = couple_fgm(*spike, theta)
        one = avg_likelihood_vs_indet(h, *spike).value
        two = avg_likelihood(h, plus).value
        assert abs(one - 3.0) <= 1e-12 and abs(two - one) <= 1e-9


def test_margin_invariance_and_minimality(spike):
    plus = couple_indetermination(*spike)
    ref = avg_likelihood(plus, plus).value
    laws = [couple_independence(*spike)] + [couple_fgm(*spike, t) for t in (-1, -0.5, 0.5, 1)]
    laws += [p[0] for p in spike_perturbations()]
    for law in laws:
        assert abs(avg_likelihood(law, plus).value - ref) <= 1e-9
        assert avg_likelihood(law, law).value >= ref - 1e-10


def test_symmetry():
    gen = np.random.default_rng(1)
    for _ in range(10):
        f, g = random_compatible_pair(gen)
        p = couple_indetermination(f, g)
        q = couple_fgm(f, g, gen.uniform(-1, 1))
        assert abs(avg_likelihood(p, q).value - avg_likelihood(q, p).value) <= 1e-12


def test_decomposition_random():
    gen = np.random.default_rng(2)
    for _ in range(50):
        f, g = random_compatible_pair(gen)
        hx, hy = random_compatible_pair(gen)
        h = couple_fgm(hx, hy, gen.uniform(-1, 1))
        one = avg_likelihood_vs_indet(h, f, g).value
        two = avg_likelihood(h, couple_indetermination(f, g)).value
        assert abs(one - two) <= 1e-9


def test_kl_self_zero(spike):
    p = couple_indetermination(*spike)
    assert kl_divergence(p, p) == pytest.approx(0.0, abs=1e-14)


def test_kl_support_violation():
    half = couple_custom(lambda x, y: np.where(np.asarray(y) < 0.5, 2.0, 0.0) + 0 * np.asarray(x),
                         Uniform(), Histogram([0, 0.5, 1], [1.0, 0.0]), check=False,
                         breaks_y=(0.5,))
    assert kl_divergence(couple_independence(Uniform(), Uniform()), half) == np.inf


def test_kl_independence_vs_indetermination_monte_carlo():
    f, g = Linear(1.0), Linear(-1.0)
    times = couple_independence(f, g)
    plus = couple_indetermination(f, g)
    kl = kl_divergence(times, plus)
    pts = sample_law(times, 10 ** 6, 3).points
    w = np.log(times.density(pts[:, 0], pts[:, 1]) / plus.density(pts[:, 0], pts[:, 1]))
    se = w.std() / np.sqrt(len(w))
    assert 0 < kl < np.inf
    assert abs(w.mean() - kl) <= 3 * se


def test_kl_spike_support():
    # pi+ vanishes on (0.2, 1) x (0, 0.8) while pi_x does not
    from indet.margins import spike_pair
    f, g = spike_pair()
    assert kl_divergence(couple_independence(f, g), couple_indetermination(f, g)) == np.inf
    assert np.isfinite(kl_divergence(couple_indetermination(f, g), couple_independence(f, g)))


def test_kl_nonnegative():
    gen = np.random.default_rng(6)
    for _ in range(10):
        f, g = random_compatible_pair(gen)
        p = couple_fgm(f, g, gen.uniform(-0.9, 0.9))
        q = couple_independence(f, g)
        assert kl_divergence(p, q) >= -1e-10


def test_rho_self(spike):
    p = couple_indetermination(*spike)
    assert rho_distance(p, p) == 0.0


def test_rho_identity(spike):
    f, g = spike
    p, q = couple_indetermination(f, g), couple_independence(f, g)
    x = np.linspace(0, 1, 200)
    X, Y = np.meshgrid(x, x, indexing="ij")
    expect = np.max(np.abs((f.cdf(X) - X) * (g.cdf(Y) - Y)))
    assert rho_distance(p, q) == pytest.approx(expect, abs=1e-14)


def test_rho_empirical(spike):
    from indet.sampling import sample_indetermination
    n = 10 ** 4
    q = couple_indetermination(*spike)
    s = sample_indetermination(*spike, n, 1)
    d = rho_distance(s, q)
    assert 0 < d < 1.5 * (1.36 / np.sqrt(n) + 0.01)
