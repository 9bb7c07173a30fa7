import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from indet.margins import Histogram, Linear, Power, Uniform, linear_pair, spike_pair
from indet.numerics import nodes_weights_1d

settings.register_profile("default", max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def spike():
    return spike_pair()


@pytest.fixture
def linear():
    return linear_pair()


def random_compatible_pair(gen, bounded=True):
    """A random compatible pair drawn from the closed margin families."""
    def one(floor):
        kind = gen.integers(0, 3 if bounded else 4)
        if kind == 0:
            k = int(gen.integers(1, 6))
            edges = np.concatenate(([0.0], np.sort(gen.uniform(0.02, 0.98, k - 1)), [1.0]))
            heights = floor + gen.exponential(1.0, k)
            m = heights * np.diff(edges)
            m = m / m.sum()
            h = m / np.diff(edges)
            # rescale excess above the floor so that min height stays >= floor
            lo = h.min()
            if lo < floor:
                w = (1.0 - floor) / (1.0 - lo)
                m = w * m + (1.0 - w) * np.diff(edges)
            return Histogram(edges, m / m.sum())
        if kind == 1:
            b = 2.0 * (1.0 - floor) * gen.uniform(-1.0, 1.0)
            return Linear(b)
        if kind == 2:
            return Uniform()
        return Power(gen.uniform(max(floor, 0.51), 1.0))

    a = gen.uniform(0.0, 1.0)
    return one(a), one(1.0 - a)


def spike_perturbations():
    """Three margin-preserving perturbations of ``pi+`` on the spike margins.

    Each factor lives where ``pi+ >= 2.5`` so positivity holds.  Returns
    ``(law, eps, int phi^2, int psi^2)`` tuples.
    """
    from indet.coupling import couple_indetermination, couple_perturbation
    from indet.specs import cosine_factor

    base = couple_indetermination(*spike_pair())
    cases = [
        (1.0, (1, (0.0, 0.2)), (1, (0.0, 1.0)), 0.1, 0.5),
        (1.0, (1, (0.0, 1.0)), (1, (0.8, 1.0)), 0.5, 0.1),
        (2.0, (2, (0.0, 0.2)), (1, (0.8, 1.0)), 0.1, 0.1),
    ]
    out = []
    for eps, (kx, sx), (ky, sy), p2, q2 in cases:
        phi, bx = cosine_factor(kx, sx)
        psi, by = cosine_factor(ky, sy)
        out.append((couple_perturbation(base, eps, phi, psi, bx, by, 1.0, 1.0), eps, p2, q2))
    return out


def cell_masses(density, k, bx=(), by=()):
    """Quadrature mass of each cell of a k x k grid (independent of the CDF code)."""
    out = np.empty((k, k))
    for i in range(k):
        x, wx = nodes_weights_1d(breakpoints=bx, lo=i / k, hi=(i + 1) / k)
        for j in range(k):
            y, wy = nodes_weights_1d(breakpoints=by, lo=j / k, hi=(j + 1) / k)
            X, Y = np.meshgrid(x, y, indexing="ij")
            out[i, j] = np.sum(density(X, Y) * np.outer(wx, wy))
    return out


def cell_counts(points, k):
    i = np.minimum((points[:, 0] * k).astype(int), k - 1)
    j = np.minimum((points[:, 1] * k).astype(int), k - 1)
    return np.bincount(i * k + j, minlength=k * k).reshape(k, k)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line[1])
